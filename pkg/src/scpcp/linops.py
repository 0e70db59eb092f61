"""Dense linear-operator kernels: projectors, proximal maps, operator norms.

All operators act on n-by-n real matrices. Projections are orthogonal with
respect to the trace inner product <X, Y> = trace(X^T Y); matrices are
vectorized in C (row-major) order wherever an explicit basis is involved.
"""

import numpy as np

from .validation import (
    ConvergenceError,
    as_square_matrix,
    check_count,
    check_scalar,
    check_seed,
)

__all__ = [
    "SupportSet",
    "TangentSpace",
    "SubspaceProjector",
    "soft_threshold",
    "svt",
    "project_support",
    "project_tangent",
    "project_tangent_complement",
    "make_subspace_projector",
    "DirectSumProjector",
    "project_direct_sum",
    "operator_norm",
    "product_norm",
    "frob",
    "inner",
]


def frob(x):
    return float(np.linalg.norm(x))


def inner(x, y):
    return float(np.sum(x * y))


class SupportSet:
    """Entry support (an index set in [0,n) x [0,n)) stored as a boolean mask."""

    def __init__(self, n, mask):
        self.n = check_count(n, "n", minimum=1)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n, self.n):
            raise ValueError(f"mask shape {mask.shape} != ({n}, {n})")
        self.mask = mask.copy()
        self.mask.flags.writeable = False

    @classmethod
    def from_pairs(cls, n, pairs):
        n = check_count(n, "n", minimum=1)
        mask = np.zeros((n, n), dtype=bool)
        for i, j in pairs:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"index ({i}, {j}) out of bounds for n={n}")
            if mask[i, j]:
                raise ValueError(f"duplicate index ({i}, {j})")
            mask[i, j] = True
        return cls(n, mask)

    @classmethod
    def empty(cls, n):
        return cls(n, np.zeros((n, n), dtype=bool))

    @classmethod
    def full(cls, n):
        return cls(n, np.ones((n, n), dtype=bool))

    @property
    def cardinality(self):
        return int(self.mask.sum())

    def pairs(self):
        return [tuple(p) for p in np.argwhere(self.mask)]

    def complement(self):
        return SupportSet(self.n, ~self.mask)


class TangentSpace:
    """Tangent space at a rank-r matrix: {U A^T + B V^T}, U, V orthonormal n-by-r."""

    ORTHONORMALITY_TOL = 1e-10

    def __init__(self, u, v):
        u = np.array(u, dtype=float)
        v = np.array(v, dtype=float)
        if u.ndim != 2 or v.ndim != 2 or u.shape != v.shape:
            raise ValueError(f"U, V must share an n-by-r shape, got {u.shape}, {v.shape}")
        n, r = u.shape
        if r > n:
            raise ValueError(f"r={r} exceeds n={n}")
        eye = np.eye(r)
        for name, m in (("U", u), ("V", v)):
            resid = np.linalg.norm(m.T @ m - eye)
            if resid > self.ORTHONORMALITY_TOL:
                raise ValueError(
                    f"{name} columns are not orthonormal (residual {resid:.3e})"
                )
        self.u = u
        self.v = v
        self.u.flags.writeable = False
        self.v.flags.writeable = False

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def r(self):
        return self.u.shape[1]

    @property
    def dim(self):
        # dim {U A^T + B V^T} = 2nr - r^2
        return 2 * self.n * self.r - self.r * self.r

    def uvt(self):
        return self.u @ self.v.T

    @classmethod
    def from_low_rank(cls, l, rank=None, rel_tol=1e-12):
        """Build from the compact SVD of ``l``; rank decided at rel_tol * sigma_max."""
        l = as_square_matrix(l, "L")
        u, s, vt = np.linalg.svd(l)
        if s[0] == 0.0:
            raise ValueError("cannot build a tangent space at the zero matrix")
        if rank is None:
            rank = int(np.sum(s > rel_tol * s[0]))
        return cls(u[:, :rank], vt[:rank, :].T)


class SubspaceProjector:
    """Projector pair (P_Q, P_Qperp) from an orthonormal basis of vec(Qperp)."""

    ORTHONORMALITY_TOL = 1e-10

    def __init__(self, n, basis):
        self.n = check_count(n, "n", minimum=1)
        basis = np.array(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != self.n * self.n:
            raise ValueError(
                f"basis must be {self.n * self.n}-by-p, got shape {basis.shape}"
            )
        p = basis.shape[1]
        if p > 0:
            resid = np.linalg.norm(basis.T @ basis - np.eye(p))
            if resid > self.ORTHONORMALITY_TOL:
                raise ValueError(f"basis columns not orthonormal (residual {resid:.3e})")
        self.basis = basis
        self.basis.flags.writeable = False

    @classmethod
    def identity(cls, n):
        """p = 0: P_Q is the identity."""
        n = check_count(n, "n", minimum=1)
        return cls(n, np.zeros((n * n, 0)))

    @property
    def p(self):
        return self.basis.shape[1]

    def apply_qperp(self, x):
        if self.p == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        v = np.asarray(x, dtype=float).ravel()
        return (self.basis @ (self.basis.T @ v)).reshape(self.n, self.n)

    def apply_q(self, x):
        x = np.asarray(x, dtype=float)
        if self.p == 0:
            return x.copy()
        return x - self.apply_qperp(x)


def soft_threshold(x, t):
    """Entrywise shrinkage: sign(x) * max(|x| - t, 0)."""
    t = check_scalar(t, "t", minimum=0.0)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def svt(x, t):
    """Singular value thresholding: shrink the singular values of ``x`` by ``t``."""
    l, _ = svt_with_values(x, t)
    return l


def svt_with_values(x, t):
    """As :func:`svt`, also returning the thresholded singular values."""
    t = check_scalar(t, "t", minimum=0.0)
    x = np.asarray(x, dtype=float)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    s = np.maximum(s - t, 0.0)
    keep = s > 0.0
    if not np.any(keep):
        return np.zeros_like(x), s
    return (u[:, keep] * s[keep]) @ vt[keep, :], s


def project_support(x, omega):
    """Keep entries on the support, zero the rest."""
    x = np.asarray(x, dtype=float)
    if x.shape != omega.mask.shape:
        raise ValueError(f"X shape {x.shape} != support shape {omega.mask.shape}")
    return np.where(omega.mask, x, 0.0)


def project_tangent(x, tangent):
    """P_T X = U U^T X + X V V^T - U U^T X V V^T."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tangent.n, tangent.n):
        raise ValueError(f"X shape {x.shape} != ({tangent.n}, {tangent.n})")
    u, v = tangent.u, tangent.v
    ux = u @ (u.T @ x)
    return ux + (x - ux) @ v @ v.T


def project_tangent_complement(x, tangent):
    """P_Tperp X = (I - U U^T) X (I - V V^T)."""
    return np.asarray(x, dtype=float) - project_tangent(x, tangent)


def make_subspace_projector(h):
    """Orthonormalize the columns of ``h`` (n^2-by-p) into a SubspaceProjector.

    ``h`` must have full column rank: its smallest singular value must exceed
    1e-12 times the largest.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2:
        raise ValueError(f"H must be 2-D, got shape {h.shape}")
    n2, p = h.shape
    n = int(round(np.sqrt(n2)))
    if n * n != n2:
        raise ValueError(f"H must have n^2 rows, got {n2}")
    if p == 0:
        return SubspaceProjector.identity(n)
    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise ValueError(
            "H is numerically rank deficient: smallest singular value "
            f"{s[-1]:.3e} vs largest {s[0]:.3e}"
        )
    q, _ = np.linalg.qr(h)
    return SubspaceProjector(n, q)


class DirectSumProjector:
    """Orthogonal projector onto A + B given the projectors of A and of B.

    The projection of X is P_A y1 + P_B y2 where (y1, y2) solves the normal
    equations of min ||X - P_A y1 - P_B y2||_F by conjugate gradients. Requires
    transversality ||P_A P_B|| < 1, checked once at construction.
    """

    TRANSVERSALITY_TOL = 1e-6

    def __init__(self, apply_a, apply_b, n, *, tol=1e-10, max_iters=None,
                 norm_seed=0, check=True):
        self.apply_a = apply_a
        self.apply_b = apply_b
        self.n = check_count(n, "n", minimum=1)
        self.tol = check_scalar(tol, "tol", minimum=0.0, exclusive_min=True)
        self.max_iters = max_iters if max_iters is not None else 50 * n * n
        self.product_norm = None
        if check:
            # Precondition-grade estimate; clustered spectra make the tight
            # default tolerance needlessly slow here.
            self.product_norm = product_norm(apply_a, apply_b, n,
                                             tol=1e-6, max_iters=3000,
                                             seed=norm_seed)
            if self.product_norm >= 1.0 - self.TRANSVERSALITY_TOL:
                raise ValueError(
                    "subspaces are not transversal: ||P_A P_B|| estimate "
                    f"{self.product_norm:.8f} >= 1 - {self.TRANSVERSALITY_TOL}"
                )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pa, pb = self.apply_a, self.apply_b
        b1, b2 = pa(x), pb(x)
        rhs_norm = np.sqrt(frob(b1) ** 2 + frob(b2) ** 2)
        if rhs_norm == 0.0:
            return np.zeros_like(x)

        def op(y1, y2):
            w = pa(y1) + pb(y2)
            return pa(w), pb(w)

        y1, y2 = _cg_pair(op, b1, b2, self.tol, self.max_iters)
        return pa(y1) + pb(y2)


def _cg_pair(op, b1, b2, tol, max_iters):
    """CG for a self-adjoint PSD operator on pairs of matrices."""
    x1 = np.zeros_like(b1)
    x2 = np.zeros_like(b2)
    r1, r2 = b1.copy(), b2.copy()
    p1, p2 = r1.copy(), r2.copy()
    rs = inner(r1, r1) + inner(r2, r2)
    b_norm = np.sqrt(inner(b1, b1) + inner(b2, b2))
    threshold = (tol * b_norm) ** 2
    for _ in range(max_iters):
        if rs <= threshold:
            return x1, x2
        a1, a2 = op(p1, p2)
        denom = inner(p1, a1) + inner(p2, a2)
        if denom <= 0.0:
            # Numerical breakdown: residual already at the attainable floor.
            break
        alpha = rs / denom
        x1 += alpha * p1
        x2 += alpha * p2
        r1 -= alpha * a1
        r2 -= alpha * a2
        rs_new = inner(r1, r1) + inner(r2, r2)
        beta = rs_new / rs
        p1 = r1 + beta * p1
        p2 = r2 + beta * p2
        rs = rs_new
    if rs <= threshold:
        return x1, x2
    raise ConvergenceError(
        f"CG did not reach residual {tol:.1e} within {max_iters} iterations "
        f"(relative residual {np.sqrt(rs) / b_norm:.3e})"
    )


def project_direct_sum(x, apply_a, apply_b, *, tol=1e-10, max_iters=None):
    """One-shot projection of ``x`` onto A + B; see :class:`DirectSumProjector`."""
    x = as_square_matrix(x, "X")
    proj = DirectSumProjector(apply_a, apply_b, x.shape[0], tol=tol,
                              max_iters=max_iters)
    return proj(x)


def operator_norm(op, n, *, adjoint=None, max_iters=1000, tol=1e-9, seed=0):
    """Largest singular value of a linear map on n-by-n matrices.

    Power iteration on adjoint(op(.)). ``adjoint=None`` declares ``op``
    self-adjoint. The start matrix is drawn from a PRNG seeded with ``seed``
    so reruns are deterministic.
    """
    n = check_count(n, "n", minimum=1)
    max_iters = check_count(max_iters, "max_iters", minimum=1)
    tol = check_scalar(tol, "tol", minimum=0.0, exclusive_min=True)
    check_seed(seed)
    if adjoint is None:
        adjoint = op
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    x /= frob(x)
    sigma = 0.0
    for _ in range(max_iters):
        y = adjoint(op(x))
        lam = inner(x, y)  # Rayleigh quotient for the PSD composite map
        sigma_new = np.sqrt(max(lam, 0.0))
        y_norm = frob(y)
        if y_norm == 0.0:
            return 0.0
        gap = abs(sigma_new - sigma)
        if gap <= tol * max(sigma_new, 1e-300):
            return sigma_new
        sigma = sigma_new
        x = y / y_norm
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations "
        f"(last estimates gap {gap:.3e})"
    )


def product_norm(apply_a, apply_b, n, *, max_iters=1000, tol=1e-9, seed=0):
    """||P_A P_B|| for self-adjoint projectors, via the composite P_B P_A P_B."""
    lam = operator_norm(lambda x: apply_b(apply_a(apply_b(x))), n,
                        max_iters=max_iters, tol=tol, seed=seed)
    return float(np.sqrt(max(lam, 0.0)))
