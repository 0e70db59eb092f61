"""Dual gradient ascent for the strongly convex pursuit program.

The program

    minimize  ||L||_* + lambda ||S||_1 + (1/2 tau)(||L||_F^2 + ||S||_F^2)
    subject to  P_Q(L + S) = P_Q(M)

has a differentiable Lagrange dual because both blocks are (1/tau)-strongly
convex. In the scaled dual variable Ytil = tau * Y the ascent step is

    L <- svt(Ytil, tau);  S <- soft_threshold(Ytil, lambda tau)
    Ytil <- P_Q(Ytil + step * (M - L - S))

which is stable for step <= 1/2 (the scaled dual gradient is 2-Lipschitz).
One SVD per iteration; optional Nesterov momentum with restart on dual
decrease.
"""

from dataclasses import dataclass, field

import numpy as np

from .linops import frob, inner, soft_threshold, svt, svt_with_values
from .validation import check_count, check_scalar

__all__ = [
    "SolverOptions",
    "Solution",
    "solve",
    "dual_objective",
    "primal_objective",
    "kkt_residual",
    "recovery_error",
]

# Relative slack for "the dual decreased" decisions; pure roundoff margin.
_ASCENT_SLACK = 1e-12


@dataclass
class SolverOptions:
    step: float = 0.5
    accelerate: bool = True
    max_iters: int = 50000
    tol_feas: float = 1e-7
    tol_fix: float = 1e-7

    def __post_init__(self):
        check_scalar(self.step, "step", minimum=0.0, exclusive_min=True, maximum=0.5)
        check_count(self.max_iters, "max_iters", minimum=1)
        check_scalar(self.tol_feas, "tol_feas", minimum=0.0, exclusive_min=True)
        check_scalar(self.tol_fix, "tol_fix", minimum=0.0, exclusive_min=True)


@dataclass
class Solution:
    l: np.ndarray
    s: np.ndarray
    y: np.ndarray
    iters: int
    feas_residual: float
    fix_residual: float
    converged: bool
    dual_values: list = field(default_factory=list)
    trace: np.ndarray | None = None  # columns: iter, feas, fixL, fixS, dual


def _dual_value(y, l, s, nuclear_l, pqm, lam, tau):
    """d(Y) at Y = y/tau with the prox pair (l, s) already evaluated at y."""
    g = nuclear_l + inner(l, l) / (2.0 * tau)
    h = lam * float(np.sum(np.abs(s))) + inner(s, s) / (2.0 * tau)
    return (inner(y, pqm) - inner(y, l) - inner(y, s)) / tau + g + h


def solve(instance, opts=None):
    """Run the dual ascent until feasibility and fixed-point residuals pass.

    Never raises on slow progress: at max_iters the best-so-far state is
    returned with ``converged=False``.
    """
    opts = opts or SolverOptions()
    m, q, tau, lam = instance.m, instance.q, instance.tau, instance.lam
    step = opts.step
    pqm = q.apply_q(m)
    feas_scale = max(1.0, frob(pqm))

    y = np.zeros_like(m)       # scaled dual iterate, stays in Q
    y_prev = y
    l_prev = np.zeros_like(m)  # prox pair of the zero dual point
    s_prev = np.zeros_like(m)
    t_mom = 1.0
    d_prev = -np.inf
    dual_values = []
    rows = []

    converged = False
    l = l_prev
    s = s_prev
    z = y
    feas = np.inf
    fix = np.inf
    for k in range(1, opts.max_iters + 1):
        if opts.accelerate and t_mom > 1.0:
            z = y + ((t_mom_prev - 1.0) / t_mom) * (y - y_prev)
        else:
            z = y
        l, sv = svt_with_values(z, tau)
        s = soft_threshold(z, lam * tau)
        r = m - l - s
        pqr = q.apply_q(r)
        feas = frob(pqr) / feas_scale
        fix_l = frob(l - l_prev) / (1.0 + frob(l))
        fix_s = frob(s - s_prev) / (1.0 + frob(s))
        fix = max(fix_l, fix_s)

        d = _dual_value(z, l, s, float(np.sum(sv)), pqm, lam, tau)
        dual_values.append(d)
        rows.append((k, feas, fix_l, fix_s, d))

        if feas <= opts.tol_feas and fix <= opts.tol_fix:
            converged = True
            break

        slack = _ASCENT_SLACK * (1.0 + abs(d_prev))
        if d < d_prev - slack:
            if opts.accelerate:
                # Restart momentum on dual decrease.
                t_mom = 1.0
                t_mom_prev = 1.0
            else:
                # Plain ascent with step <= 1/2 cannot decrease beyond
                # roundoff; halve defensively if it ever does.
                step = max(step / 2.0, 1e-6)
        d_prev = d

        y_next = q.apply_q(z + step * pqr)
        if k % 100 == 0:
            drift = frob(q.apply_qperp(y_next))
            assert drift <= 1e-8 * (1.0 + frob(y_next)), "dual left the subspace"
        y_prev = y
        y = y_next
        if opts.accelerate:
            t_mom_prev = t_mom
            t_mom = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
        l_prev, s_prev = l, s

    return Solution(
        l=l, s=s, y=z, iters=k, feas_residual=float(feas),
        fix_residual=float(fix), converged=converged,
        dual_values=dual_values, trace=np.asarray(rows),
    )


def primal_objective(l, s, instance):
    nuclear = float(np.sum(np.linalg.svd(l, compute_uv=False)))
    return (nuclear + instance.lam * float(np.sum(np.abs(s)))
            + (inner(l, l) + inner(s, s)) / (2.0 * instance.tau))


def dual_objective(y, instance):
    """Dual value at a scaled dual point; the point must lie in Q."""
    y = np.asarray(y, dtype=float)
    drift = frob(instance.q.apply_qperp(y))
    if drift > 1e-6 * (1.0 + frob(y)):
        raise ValueError(
            f"dual point has a large component outside Q (norm {drift:.3e})"
        )
    tau, lam = instance.tau, instance.lam
    l, sv = svt_with_values(y, tau)
    s = soft_threshold(y, lam * tau)
    pqm = instance.q.apply_q(instance.m)
    return _dual_value(y, l, s, float(np.sum(sv)), pqm, lam, tau)


def kkt_residual(l, s, y, instance):
    """Feasibility and fixed-point residuals of a candidate primal-dual triple."""
    tau, lam = instance.tau, instance.lam
    feas = frob(instance.q.apply_q(instance.m - l - s))
    feas /= max(1.0, frob(instance.q.apply_q(instance.m)))
    fix_l = frob(l - svt(y, tau)) / (1.0 + frob(l))
    fix_s = frob(s - soft_threshold(y, lam * tau)) / (1.0 + frob(s))
    return float(feas), float(fix_l), float(fix_s)


def recovery_error(solution, truth):
    """Relative errors against the planted pair plus a support F1 score.

    The predicted support thresholds |S| at half the smallest planted
    magnitude (half the common magnitude for generated instances).
    """
    if truth is None:
        raise ValueError("recovery_error requires a ground truth")
    err_l = frob(solution.l - truth.l0) / max(1e-30, frob(truth.l0))
    err_s = frob(solution.s - truth.s0) / max(1e-30, frob(truth.s0))
    if truth.omega.cardinality > 0:
        threshold = 0.5 * float(np.min(np.abs(truth.s0[truth.omega.mask])))
    else:
        threshold = 0.0
    predicted = np.abs(solution.s) > threshold
    actual = truth.omega.mask
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    if tp == 0 and fp == 0 and fn == 0:
        f1 = 1.0
    else:
        f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    return float(err_l), float(err_s), float(f1)
