"""Dual-certificate machinery: least-norm constructions and bound checks.

The optimality conditions for the strongly convex pursuit program ask for a
triple (W, F, D) satisfying, with U V^T from the planted tangent space,

    U V^T + W + L0/tau = lambda (sgn(S0) + F + P_Omega(D)) + S0/tau,
    the common value lies in Q,  P_T W = 0,  P_Omega F = 0,
    ||W|| <= beta,  ||F||_inf <= beta,  ||P_Omega D||_F <= alpha,

with alpha > 1/4, beta > 1/2, alpha + beta <= 1 and lambda < 1, plus the
transversality hypothesis ||P_Omega P_{Qperp + T}|| < 1/2. This module
searches for the least-norm feasible triple and reports which bounds it
meets; it also builds the minimum-norm correction matching a prescribed
Qperp-component while orthogonal to T + Omega, and validates the spectral /
entrywise bounds that hold for such corrections at random-model instances.
"""

from dataclasses import dataclass

import numpy as np

from .linops import (
    DirectSumProjector,
    frob,
    inner,
    product_norm,
    project_support,
    project_tangent,
)
from .validation import ConstructionError, as_square_matrix, check_scalar

__all__ = [
    "CertificateCandidate",
    "CertificateReport",
    "CorrectionResult",
    "CorrectionBoundsReport",
    "build_correction",
    "check_correction_bounds",
    "certificate_search",
    "check_pairwise_sum_bound",
    "check_subspace_tangent_bound",
    "check_direct_sum_dimensions",
    "check_low_rank_candidate_bounds",
    "check_sparse_candidate_bounds",
]

CERTIFIED = "certified"
INCONCLUSIVE = "inconclusive"

# The least-norm candidate must satisfy its defining linear system to this
# relative residual before any bound is even considered.
RESIDUAL_TOL = 1e-6


@dataclass
class CertificateCandidate:
    w: np.ndarray
    f: np.ndarray
    d: np.ndarray
    alpha: float
    beta: float


@dataclass
class CertificateReport:
    equality_residual: float
    q_membership_residual: float
    pt_w_residual: float
    pomega_f_residual: float
    norm_w: float
    inf_f: float
    frob_pd: float
    transversality: float
    verdict: str
    scale: float

    def passed(self):
        return self.verdict == CERTIFIED


@dataclass
class CorrectionResult:
    w: np.ndarray
    xi: float
    method: str
    constraint_residual_qperp: float
    constraint_residual_sum: float
    neumann_terms: int = 0
    neumann_ratio: float = 0.0
    product_norm: float = 0.0


@dataclass
class CorrectionBoundsReport:
    norm_w: float
    spectral_bound: float
    off_support_inf: float
    entry_bound: float
    spectral_ok: bool
    entry_ok: bool

    def passed(self):
        return self.spectral_ok and self.entry_ok


def _check_params(alpha, beta, lam):
    alpha = check_scalar(alpha, "alpha")
    beta = check_scalar(beta, "beta")
    lam = check_scalar(lam, "lambda", minimum=0.0, exclusive_min=True)
    if alpha <= 0.25:
        raise ValueError(f"alpha must be > 1/4, got {alpha}")
    if beta <= 0.5:
        raise ValueError(f"beta must be > 1/2, got {beta}")
    if alpha + beta > 1.0:
        raise ValueError(f"alpha + beta must be <= 1, got {alpha + beta}")
    if lam >= 1.0:
        raise ValueError(f"lambda must be < 1, got {lam}")
    return alpha, beta, lam


def _cg_tuple(op, rhs, tol, max_iters):
    """CG for a self-adjoint PSD operator acting on tuples of matrices."""
    x = [np.zeros_like(b) for b in rhs]
    r = [b.copy() for b in rhs]
    p = [b.copy() for b in rhs]
    rs = sum(inner(ri, ri) for ri in r)
    b_norm = np.sqrt(sum(inner(b, b) for b in rhs))
    if b_norm == 0.0:
        return x
    threshold = (tol * b_norm) ** 2
    for _ in range(max_iters):
        if rs <= threshold:
            return x
        ap = op(p)
        denom = sum(inner(pi, api) for pi, api in zip(p, ap))
        if denom <= 0.0:
            break
        a = rs / denom
        for xi, ri, pi, api in zip(x, r, p, ap):
            xi += a * pi
            ri -= a * api
        rs_new = sum(inner(ri, ri) for ri in r)
        beta = rs_new / rs
        for i in range(len(p)):
            p[i] = r[i] + beta * p[i]
        rs = rs_new
    # Residual floor reached; callers verify the construction post hoc.
    return x


def build_correction(tangent, l0, tau, q, omega, method="least_squares", *,
                     norm_m=None, tol=1e-10, max_iters=20000, norm_seed=0):
    """Least-Frobenius-norm W with P_Qperp(W) = -P_Qperp(UV^T + L0/tau) and
    zero projection onto T + Omega.

    ``method`` chooses the route: "least_squares" solves the stacked normal
    equations by CG; "neumann" sums the geometric series in the composed
    projector. Both are verified against the defining constraints post hoc.
    ``norm_m`` optionally enforces the tau >= ||M||_F precondition. Returns a
    :class:`CorrectionResult` whose ``xi`` is ||UV^T + L0/tau||_F.
    """
    l0 = as_square_matrix(l0, "L0")
    tau = check_scalar(tau, "tau", minimum=0.0, exclusive_min=True)
    if norm_m is not None and tau < norm_m:
        raise ValueError(f"tau={tau} is below ||M||_F={norm_m}")
    n = tangent.n

    def p_t(x):
        return project_tangent(x, tangent)

    def p_o(x):
        return project_support(x, omega)

    target = tangent.uvt() + l0 / tau
    xi = frob(target)
    c = -q.apply_qperp(target)

    p_pi = DirectSumProjector(p_t, p_o, n, tol=tol, norm_seed=norm_seed)
    rho = product_norm(q.apply_qperp, p_pi, n, tol=1e-6, max_iters=3000,
                       seed=norm_seed)
    if rho >= 1.0 - 1e-6:
        raise ValueError(
            f"measurement complement and T + Omega are not transversal "
            f"(product norm {rho:.8f})"
        )

    neumann_terms = 0
    neumann_ratio = 0.0
    if method == "least_squares":
        # P_Pi W = 0 is equivalent to P_T W = 0 and P_Omega W = 0 since
        # Pi is the subspace sum of T and Omega.
        def aat(z):
            w = q.apply_qperp(z[0]) + p_t(z[1]) + p_o(z[2])
            return [q.apply_qperp(w), p_t(w), p_o(w)]

        z = _cg_tuple(aat, [c, np.zeros_like(c), np.zeros_like(c)],
                      tol, max_iters)
        w = q.apply_qperp(z[0]) + p_t(z[1]) + p_o(z[2])
    elif method == "neumann":
        # W = P_Piperp sum_k (P_Qperp P_Pi P_Qperp)^k c, k >= 0. The k = 0
        # term is required for the Qperp constraint to hold.
        s = c.copy()
        term = c
        prev_norm = frob(c)
        ratios = []
        for k in range(1, 500):
            term = q.apply_qperp(p_pi(term))
            t_norm = frob(term)
            if prev_norm > 0:
                ratios.append(t_norm / prev_norm)
            prev_norm = t_norm
            s += term
            neumann_terms = k
            if t_norm <= 1e-12 * max(frob(s), 1e-300):
                break
        neumann_ratio = max(ratios) if ratios else 0.0
        w = s - p_pi(s)
    else:
        raise ValueError(f"unknown method {method!r}")

    resid_qperp = frob(q.apply_qperp(w) - c)
    resid_sum = frob(p_pi(w))
    scale_q = max(xi, 1e-300)
    scale_w = max(frob(w), 1e-300)
    if resid_qperp > 1e-8 * scale_q or resid_sum > 1e-8 * scale_w:
        raise ConstructionError(
            f"{method} correction violates its constraints: "
            f"Qperp residual {resid_qperp:.3e} (scale {scale_q:.3e}), "
            f"sum residual {resid_sum:.3e} (scale {scale_w:.3e})"
        )
    return CorrectionResult(
        w=w, xi=float(xi), method=method,
        constraint_residual_qperp=float(resid_qperp),
        constraint_residual_sum=float(resid_sum),
        neumann_terms=neumann_terms, neumann_ratio=float(neumann_ratio),
        product_norm=float(rho),
    )


def check_correction_bounds(w, omega, lam):
    """Spectral bound ||W|| < 1/8 and entrywise off-support bound < lambda/8."""
    w = as_square_matrix(w, "W")
    lam = check_scalar(lam, "lambda", minimum=0.0, exclusive_min=True)
    norm_w = float(np.linalg.norm(w, 2))
    off_inf = float(np.max(np.abs(project_support(w, omega.complement()))))
    return CorrectionBoundsReport(
        norm_w=norm_w, spectral_bound=0.125,
        off_support_inf=off_inf, entry_bound=lam / 8.0,
        spectral_ok=norm_w < 0.125, entry_ok=off_inf < lam / 8.0,
    )


def certificate_search(truth, q, tau, lam, alpha=0.375, beta=0.625, *,
                       tol=1e-10, max_iters=20000, norm_seed=0):
    """Least-squared-norm candidate (W, F, D) for the optimality system.

    Solves the linear system by CG on its normal equations, then evaluates
    every inequality. Verdict "certified" means all of them hold;
    "inconclusive" means this particular least-norm candidate misses a bound,
    which does not exclude other valid certificates.
    """
    alpha, beta, lam = _check_params(alpha, beta, lam)
    tau = check_scalar(tau, "tau", minimum=0.0, exclusive_min=True)
    tangent, omega = truth.tangent, truth.omega
    n = tangent.n

    def p_t(x):
        return project_tangent(x, tangent)

    def p_o(x):
        return project_support(x, omega)

    uvt = tangent.uvt()
    sgn = np.sign(truth.s0)
    k0 = uvt + truth.l0 / tau
    b1 = lam * sgn + truth.s0 / tau - k0
    b2 = -q.apply_qperp(k0)

    # Constraint rows on x = (W, F, D):
    #   W - lam F - lam P_Omega D = b1
    #   P_Qperp W = b2
    #   P_T W = 0
    #   P_Omega F = 0
    def aat(z):
        w = z[0] + q.apply_qperp(z[1]) + p_t(z[2])
        f = -lam * z[0] + p_o(z[3])
        d = -lam * p_o(z[0])
        r1 = w - lam * f - lam * p_o(d)
        return [r1, q.apply_qperp(w), p_t(w), p_o(f)]

    zero = np.zeros_like(b1)
    z = _cg_tuple(aat, [b1, b2, zero.copy(), zero.copy()], tol, max_iters)
    w = z[0] + q.apply_qperp(z[1]) + p_t(z[2])
    f = -lam * z[0] + p_o(z[3])
    d = -lam * p_o(z[0])

    common = uvt + w + truth.l0 / tau
    equality_residual = frob(common - lam * (sgn + f + p_o(d)) - truth.s0 / tau)
    q_membership_residual = frob(q.apply_qperp(common))
    pt_w_residual = frob(p_t(w))
    pomega_f_residual = frob(p_o(f))
    scale = frob(uvt) + lam * frob(sgn) + frob(truth.l0 - truth.s0) / tau

    gamma_perp = DirectSumProjector(q.apply_qperp, p_t, n, tol=tol,
                                    norm_seed=norm_seed)
    transversality = product_norm(p_o, gamma_perp, n, tol=1e-6, max_iters=3000,
                                  seed=norm_seed)

    norm_w = float(np.linalg.norm(w, 2))
    inf_f = float(np.max(np.abs(f)))
    frob_pd = frob(p_o(d))

    residuals_ok = (
        equality_residual <= RESIDUAL_TOL * scale
        and q_membership_residual <= RESIDUAL_TOL * scale
        and pt_w_residual <= RESIDUAL_TOL * max(frob(w), 1e-300)
        and pomega_f_residual <= RESIDUAL_TOL * max(frob(f), 1e-300)
    )
    bounds_ok = (norm_w <= beta and inf_f <= beta and frob_pd <= alpha
                 and transversality < 0.5)
    verdict = CERTIFIED if (residuals_ok and bounds_ok) else INCONCLUSIVE
    candidate = CertificateCandidate(w=w, f=f, d=d, alpha=alpha, beta=beta)
    report = CertificateReport(
        equality_residual=float(equality_residual),
        q_membership_residual=float(q_membership_residual),
        pt_w_residual=float(pt_w_residual),
        pomega_f_residual=float(pomega_f_residual),
        norm_w=norm_w, inf_f=inf_f, frob_pd=float(frob_pd),
        transversality=float(transversality), verdict=verdict,
        scale=float(scale),
    )
    return candidate, report


@dataclass
class PairwiseSumBoundReport:
    a_12: float
    a_23: float
    a_31: float
    measured: float
    bound: float
    margin: float
    holds: bool
    verdict: str


def check_pairwise_sum_bound(apply_1, apply_2, apply_3, n, *, tol=1e-8,
                             norm_seed=0):
    """Check ||P_{S1+S2} P_{S3}|| <= sqrt((a23^2 + a31^2) / (1 - a12)).

    a_ij are the pairwise projector product norms; all must be below 1 or the
    report comes back precondition_failed.
    """
    kw = dict(tol=1e-7, max_iters=3000, seed=norm_seed)
    a12 = product_norm(apply_1, apply_2, n, **kw)
    a23 = product_norm(apply_2, apply_3, n, **kw)
    a31 = product_norm(apply_3, apply_1, n, **kw)
    if max(a12, a23, a31) >= 1.0 - 1e-6:
        return PairwiseSumBoundReport(
            a_12=a12, a_23=a23, a_31=a31, measured=float("nan"),
            bound=float("nan"), margin=float("nan"), holds=False,
            verdict="precondition_failed",
        )
    p_sum = DirectSumProjector(apply_1, apply_2, n, norm_seed=norm_seed)
    measured = product_norm(p_sum, apply_3, n, tol=1e-7, max_iters=3000,
                            seed=norm_seed)
    bound = float(np.sqrt((a23**2 + a31**2) / (1.0 - a12)))
    return PairwiseSumBoundReport(
        a_12=a12, a_23=a23, a_31=a31, measured=float(measured), bound=bound,
        margin=float(bound - measured), holds=measured <= bound + tol,
        verdict="checked",
    )


@dataclass
class SubspaceTangentBoundReport:
    measured: float
    bound: float
    margin: float
    holds: bool


def check_subspace_tangent_bound(q, tangent, *, norm_seed=0):
    """Check ||P_Qperp P_T|| against 8 (sqrt(p) + sqrt(2 n r)) / n.

    Requires p < n^2 / 4. The bound can exceed 1 (vacuous) and is still
    reported.
    """
    n, r, p = tangent.n, tangent.r, q.p
    if p >= n * n / 4:
        raise ValueError(f"p={p} must be below n^2/4 = {n * n / 4}")
    measured = product_norm(q.apply_qperp,
                            lambda x: project_tangent(x, tangent), n,
                            tol=1e-7, max_iters=3000, seed=norm_seed)
    bound = 8.0 * (np.sqrt(p) + np.sqrt(2.0 * n * r)) / n
    return SubspaceTangentBoundReport(
        measured=float(measured), bound=float(bound),
        margin=float(bound - measured), holds=measured <= bound + 1e-8,
    )


@dataclass
class DirectSumDimensionReport:
    p: int
    dim_t: int
    dim_omega: int
    ambient: int
    pairwise_norms: dict
    pairwise_ok: bool
    rank: int | None
    expected_rank: int
    partial: bool
    holds: bool


def tangent_span(tangent):
    """Spanning columns of vec(T): kron(U, I) and kron(I, V), C-order vec."""
    n = tangent.n
    eye = np.eye(n)
    return np.hstack([np.kron(tangent.u, eye), np.kron(eye, tangent.v)])


def check_direct_sum_dimensions(q, tangent, omega, *, norm_seed=0,
                                dense_limit=20):
    """Numerical direct-sum check for Qperp, T and Omega.

    Pairwise product norms must stay below 1; for n <= dense_limit the three
    bases are stacked and the rank compared with p + dim(T) + |Omega|. For
    larger n only the pairwise norms are reported (partial=True).
    """
    n = tangent.n
    dim_t = tangent.dim
    dim_o = omega.cardinality
    expected = q.p + dim_t + dim_o

    def p_t(x):
        return project_tangent(x, tangent)

    def p_o(x):
        return project_support(x, omega)

    norms = {}
    for name, (a, b) in {
        "qperp_t": (q.apply_qperp, p_t),
        "qperp_omega": (q.apply_qperp, p_o),
        "t_omega": (p_t, p_o),
    }.items():
        norms[name] = product_norm(a, b, n, tol=1e-7, max_iters=3000,
                                   seed=norm_seed)
    pairwise_ok = all(v < 1.0 - 1e-8 for v in norms.values())

    rank = None
    partial = n > dense_limit
    if expected > n * n:
        holds = False
    elif not partial:
        cols = [tangent_span(tangent)]
        if q.p > 0:
            cols.append(q.basis)
        if dim_o > 0:
            omega_cols = np.zeros((n * n, dim_o))
            for idx, (i, j) in enumerate(omega.pairs()):
                omega_cols[i * n + j, idx] = 1.0
            cols.append(omega_cols)
        stacked = np.hstack(cols)
        rank = int(np.linalg.matrix_rank(stacked))
        holds = pairwise_ok and rank == expected
    else:
        holds = pairwise_ok
    return DirectSumDimensionReport(
        p=q.p, dim_t=dim_t, dim_omega=dim_o, ambient=n * n,
        pairwise_norms=norms, pairwise_ok=pairwise_ok, rank=rank,
        expected_rank=expected, partial=partial, holds=holds,
    )


@dataclass
class CandidateBoundsReport:
    checks: dict

    def passed(self):
        return all(v["ok"] for v in self.checks.values())


def check_low_rank_candidate_bounds(w, tangent, omega, lam):
    """Bounds expected of an externally supplied low-rank-side candidate:
    ||W|| < 1/4, ||P_Omega(UV^T + W)||_F < lambda/4,
    ||P_Omegaperp(UV^T + W)||_inf < lambda/4."""
    w = as_square_matrix(w, "W")
    lam = check_scalar(lam, "lambda", minimum=0.0, exclusive_min=True)
    uvt_w = tangent.uvt() + w
    spectral = float(np.linalg.norm(w, 2))
    on_frob = frob(project_support(uvt_w, omega))
    off_inf = float(np.max(np.abs(project_support(uvt_w, omega.complement()))))
    return CandidateBoundsReport(checks={
        "spectral": {"measured": spectral, "bound": 0.25,
                     "ok": spectral < 0.25},
        "on_support_frob": {"measured": on_frob, "bound": lam / 4.0,
                            "ok": on_frob < lam / 4.0},
        "off_support_inf": {"measured": off_inf, "bound": lam / 4.0,
                            "ok": off_inf < lam / 4.0},
    })


def check_sparse_candidate_bounds(w, omega, lam):
    """Bounds expected of an externally supplied sparse-side candidate:
    ||W|| < 1/8, ||P_Omegaperp W||_inf < lambda/8."""
    w = as_square_matrix(w, "W")
    lam = check_scalar(lam, "lambda", minimum=0.0, exclusive_min=True)
    spectral = float(np.linalg.norm(w, 2))
    off_inf = float(np.max(np.abs(project_support(w, omega.complement()))))
    return CandidateBoundsReport(checks={
        "spectral": {"measured": spectral, "bound": 0.125,
                     "ok": spectral < 0.125},
        "off_support_inf": {"measured": off_inf, "bound": lam / 8.0,
                            "ok": off_inf < lam / 8.0},
    })
