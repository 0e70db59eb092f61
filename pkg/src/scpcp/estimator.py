"""Scikit-learn style front end for the pursuit solver."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .linops import SubspaceProjector
from .model import ProblemInstance, tau_criterion
from .solver import SolverOptions, solve
from .validation import as_square_matrix

__all__ = ["StronglyConvexPCP"]


class StronglyConvexPCP(BaseEstimator):
    """Low-rank + sparse decomposition of (possibly subsampled) square data.

    Splits a square matrix X into a low-rank part and a sparse part by
    solving the strongly convex pursuit program on the measured projection
    P_Q(X). With ``projector=None`` the full matrix is observed (classical
    principal component pursuit).

    Parameters
    ----------
    lam : float or None
        Sparsity weight; None picks 1/sqrt(n) for n-by-n input.
    tau : float or None
        Strong-convexity scale; None picks the data-driven criterion value
        8 sqrt(15) ||X||_F / (3 lam).
    projector : SubspaceProjector or None
        Measurement subspace; None observes everything.
    step, accelerate, max_iters, tol_feas, tol_fix
        Solver options; see :class:`scpcp.solver.SolverOptions`.

    Attributes
    ----------
    L_, S_ : ndarray
        Recovered low-rank and sparse components of the fitted matrix.
    dual_ : ndarray
        Final scaled dual variable.
    n_iter_ : int
        Iterations used.
    converged_ : bool
        Whether both solver tolerances were met.
    """

    def __init__(self, lam=None, tau=None, projector=None, step=0.5,
                 accelerate=True, max_iters=50000, tol_feas=1e-7,
                 tol_fix=1e-7):
        self.lam = lam
        self.tau = tau
        self.projector = projector
        self.step = step
        self.accelerate = accelerate
        self.max_iters = max_iters
        self.tol_feas = tol_feas
        self.tol_fix = tol_fix

    def _solve(self, x):
        x = as_square_matrix(x, "X")
        n = x.shape[0]
        projector = self.projector
        if projector is None:
            projector = SubspaceProjector.identity(n)
        elif projector.n != n:
            raise ValueError(
                f"projector is for {projector.n}-by-{projector.n} matrices, "
                f"X is {n}-by-{n}"
            )
        lam = 1.0 / np.sqrt(n) if self.lam is None else float(self.lam)
        tau = tau_criterion(x, lam) if self.tau is None else float(self.tau)
        instance = ProblemInstance(n=n, m=x, q=projector, lam=lam, tau=tau,
                                   seed=0)
        opts = SolverOptions(step=self.step, accelerate=self.accelerate,
                             max_iters=self.max_iters, tol_feas=self.tol_feas,
                             tol_fix=self.tol_fix)
        return solve(instance, opts), lam, tau

    def fit(self, X, y=None):
        """Solve the program for X and store the recovered pair."""
        solution, lam, tau = self._solve(X)
        self.L_ = solution.l
        self.S_ = solution.s
        self.dual_ = solution.y
        self.n_iter_ = solution.iters
        self.feas_residual_ = solution.feas_residual
        self.fix_residual_ = solution.fix_residual
        self.converged_ = solution.converged
        self.lam_ = lam
        self.tau_ = tau
        self.n_features_in_ = X.shape[1] if hasattr(X, "shape") else None
        return self

    def transform(self, X):
        """Low-rank (sparse-corruption-free) version of a square matrix.

        Stateless re-solve with the configured parameters; fit() must have
        been called so usage errors surface early in pipelines.
        """
        if not hasattr(self, "L_"):
            raise NotFittedError("StronglyConvexPCP is not fitted yet")
        solution, _, _ = self._solve(X)
        return solution.l

    def fit_transform(self, X, y=None):
        return self.fit(X, y).L_
