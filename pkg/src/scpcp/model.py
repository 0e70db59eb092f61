"""Problem-instance construction: seeded generators and tau selection rules."""

from dataclasses import dataclass, replace

import numpy as np

from .linops import (
    SubspaceProjector,
    SupportSet,
    TangentSpace,
    frob,
    make_subspace_projector,
    project_support,
)
from .validation import as_square_matrix, check_count, check_scalar, check_seed

__all__ = [
    "GroundTruth",
    "ProblemInstance",
    "gen_low_rank",
    "gen_sparse",
    "gen_subspace",
    "incoherence",
    "tau_criterion",
    "tau_oracle",
    "build_instance",
    "role_rng",
]

# Fixed role tags XORed into the master seed so each random component
# (low-rank factors, support, signs, measurement basis) reproduces on its own.
ROLE_TAGS = {
    "lowrank_a": 0x9E3779B97F4A7C15,
    "lowrank_b": 0xC2B2AE3D27D4EB4F,
    "support": 0x165667B19E3779F9,
    "signs": 0xD6E8FEB86659FD93,
    "subspace": 0xA5A3564D5FCCDB2B,
}

_SEED_MASK = 2**64 - 1


def role_rng(seed, role):
    """Deterministic per-role PRNG (PCG64) derived as seed XOR role tag."""
    check_seed(seed)
    if role not in ROLE_TAGS:
        raise ValueError(f"unknown role {role!r}")
    return np.random.default_rng((seed ^ ROLE_TAGS[role]) & _SEED_MASK)


def gen_low_rank(n, r, seed):
    """Rank-r product A B^T with i.i.d. standard normal n-by-r factors."""
    n = check_count(n, "n", minimum=1)
    r = check_count(r, "r", minimum=1)
    if r > n:
        raise ValueError(f"r={r} exceeds n={n}")
    a = role_rng(seed, "lowrank_a").standard_normal((n, r))
    b = role_rng(seed, "lowrank_b").standard_normal((n, r))
    return a @ b.T


def gen_sparse(n, rho, magnitude, seed):
    """Bernoulli(rho) support with entries set to +-magnitude, random signs.

    Returns the sparse matrix together with its exact support.
    """
    n = check_count(n, "n", minimum=1)
    rho = check_scalar(rho, "rho", minimum=0.0, maximum=1.0)
    magnitude = check_scalar(magnitude, "magnitude", minimum=0.0, exclusive_min=True)
    mask = role_rng(seed, "support").random((n, n)) < rho
    signs = 2.0 * role_rng(seed, "signs").integers(0, 2, size=(n, n)) - 1.0
    s = np.where(mask, magnitude * signs, 0.0)
    return s, SupportSet(n, mask)


def gen_subspace(n, p, seed):
    """Random p-dimensional measurement complement from an i.i.d. N(0, 1/n^2) frame."""
    n = check_count(n, "n", minimum=1)
    p = check_count(p, "p", minimum=0)
    if p >= n * n / 4:
        raise ValueError(f"p={p} must be below n^2/4 = {n * n / 4}")
    if p == 0:
        return SubspaceProjector.identity(n)
    h = role_rng(seed, "subspace").normal(0.0, 1.0 / n, size=(n * n, p))
    return make_subspace_projector(h)


def incoherence(l):
    """Incoherence (mu, r) of a nonzero matrix from its compact SVD.

    mu = max of (n/r) max_i ||row_i(U)||^2, (n/r) max_i ||row_i(V)||^2 and
    (n^2/r) ||U V^T||_inf^2.
    """
    l = as_square_matrix(l, "L")
    n = l.shape[0]
    u, s, vt = np.linalg.svd(l)
    if s[0] == 0.0:
        raise ValueError("incoherence of the zero matrix is undefined")
    r = int(np.sum(s > 1e-12 * s[0]))
    u = u[:, :r]
    v = vt[:r, :].T
    row_u = float(np.max(np.sum(u * u, axis=1)))
    row_v = float(np.max(np.sum(v * v, axis=1)))
    uvt_inf = float(np.max(np.abs(u @ v.T)))
    mu = max((n / r) * row_u, (n / r) * row_v, (n / r) * uvt_inf**2 * n)
    return mu, r


def tau_criterion(m, lam):
    """Data-driven lower bound for tau: 8 sqrt(15) ||M||_F / (3 lambda)."""
    lam = check_scalar(lam, "lambda", minimum=0.0, exclusive_min=True)
    m = as_square_matrix(m, "M")
    norm_m = frob(m)
    if norm_m == 0.0:
        raise ValueError("M must be nonzero")
    return 8.0 * np.sqrt(15.0) * norm_m / (3.0 * lam)


def tau_oracle(truth, m, lam, alpha=0.375, beta=0.625):
    """Ground-truth tau bound: max(tau1, tau2, tau3, ||M||_F).

    tau1 = ||offsupport(L0)||_inf / ((beta - 1/2) lambda),
    tau2 = ||onsupport(L0 - S0)||_F / ((alpha - 1/4) lambda),
    tau3 = 4 (||offsupport(L0)||_inf + ||onsupport(L0 - S0)||_F) / lambda.
    Requires beta > 1/2, alpha > 1/4 and alpha + beta <= 1.
    """
    lam = check_scalar(lam, "lambda", minimum=0.0, exclusive_min=True)
    alpha = check_scalar(alpha, "alpha")
    beta = check_scalar(beta, "beta")
    if beta <= 0.5:
        raise ValueError(f"beta must be > 1/2, got {beta}")
    if alpha <= 0.25:
        raise ValueError(f"alpha must be > 1/4, got {alpha}")
    if alpha + beta > 1.0:
        raise ValueError(f"alpha + beta must be <= 1, got {alpha + beta}")
    m = as_square_matrix(m, "M")
    omega = truth.omega
    off_l0_inf = float(np.max(np.abs(project_support(truth.l0, omega.complement()))))
    on_diff = frob(project_support(truth.l0 - truth.s0, omega))
    tau1 = off_l0_inf / ((beta - 0.5) * lam)
    tau2 = on_diff / ((alpha - 0.25) * lam)
    tau3 = 4.0 * (off_l0_inf + on_diff) / lam
    return max(tau1, tau2, tau3, frob(m))


@dataclass(frozen=True)
class GroundTruth:
    """Planted decomposition: low-rank part, sparse part, and their geometry."""

    l0: np.ndarray
    s0: np.ndarray
    omega: SupportSet
    tangent: TangentSpace
    r: int
    rho: float

    def __post_init__(self):
        if np.any(project_support(self.s0, self.omega.complement()) != 0.0):
            raise ValueError("S0 must vanish off its support exactly")
        if np.any(self.s0[self.omega.mask] == 0.0):
            raise ValueError("the support must be exactly the nonzero set of S0")
        s = np.linalg.svd(self.l0, compute_uv=False)
        if self.r < len(s) and s[0] > 0 and s[self.r] > 1e-10 * s[0]:
            raise ValueError(f"L0 has numerical rank above r={self.r}")

    @classmethod
    def from_parts(cls, l0, s0, omega, r, rho):
        return cls(l0=l0, s0=s0, omega=omega,
                   tangent=TangentSpace.from_low_rank(l0, rank=r), r=r, rho=rho)


@dataclass(frozen=True)
class ProblemInstance:
    """Measured data, measurement subspace and the scalar knobs of the program."""

    n: int
    m: np.ndarray
    q: SubspaceProjector
    lam: float
    tau: float
    seed: int
    truth: GroundTruth | None = None
    tau_mode: str = "explicit"

    def __post_init__(self):
        check_scalar(self.lam, "lambda", minimum=0.0, exclusive_min=True)
        check_scalar(self.tau, "tau", minimum=0.0, exclusive_min=True)
        if self.m.shape != (self.n, self.n):
            raise ValueError(f"M shape {self.m.shape} != ({self.n}, {self.n})")
        if self.truth is not None:
            resid = frob(self.m - self.truth.l0 - self.truth.s0)
            if resid > 1e-12 * max(1.0, frob(self.m)):
                raise ValueError("M != L0 + S0 beyond 1e-12 relative")

    def with_tau(self, tau):
        return replace(self, tau=float(tau), tau_mode="explicit")


def build_instance(n, r, rho, p, magnitude=1.0, seed=0, tau_mode="criterion",
                   tau=None, alpha=0.375, beta=0.625):
    """Generate a full problem instance; lambda = 1/sqrt(n).

    tau_mode is "criterion" (data-driven default), "oracle" (needs the planted
    truth), or "explicit" with ``tau`` given. A bare number passed as tau_mode
    is accepted as an explicit value.
    """
    check_seed(seed)
    l0 = gen_low_rank(n, r, seed)
    s0, omega = gen_sparse(n, rho, magnitude, seed)
    q = gen_subspace(n, p, seed)
    m = l0 + s0
    lam = 1.0 / np.sqrt(n)
    truth = GroundTruth.from_parts(l0, s0, omega, r, float(rho))
    if isinstance(tau_mode, (int, float)) and not isinstance(tau_mode, bool):
        tau, tau_mode = float(tau_mode), "explicit"
    if tau_mode == "criterion":
        tau_value = tau_criterion(m, lam)
    elif tau_mode == "oracle":
        tau_value = tau_oracle(truth, m, lam, alpha=alpha, beta=beta)
    elif tau_mode == "explicit":
        if tau is None:
            raise ValueError("tau_mode='explicit' requires a tau value")
        tau_value = check_scalar(tau, "tau", minimum=0.0, exclusive_min=True)
    else:
        raise ValueError(f"unknown tau_mode {tau_mode!r}")
    return ProblemInstance(n=n, m=m, q=q, lam=float(lam), tau=float(tau_value),
                           seed=int(seed), truth=truth, tau_mode=str(tau_mode))
