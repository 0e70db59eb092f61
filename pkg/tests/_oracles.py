"""Independent oracles used to verify the library's fast paths.

Each oracle deliberately avoids the code path it checks: grid search for the
scalar shrinkage, subgradient descent for the nuclear prox, dense stacked
bases for projectors, dense SVD for operator norms.
"""

import numpy as np

from scpcp.certificate import tangent_span


def scalar_shrink_objective(s, x, t):
    return t * np.abs(s) + 0.5 * (s - x) ** 2


def grid_search_scalar_prox(x, t, resolution=1e-6):
    """Two-stage 1-D grid search at the given final resolution."""
    radius = abs(x) + t + 1.0
    coarse = np.linspace(-radius, radius, 4001)
    best = coarse[np.argmin(scalar_shrink_objective(coarse, x, t))]
    half = 2.0 * radius / 4000
    count = int(np.ceil(2 * half / resolution)) + 1
    fine = np.linspace(best - half, best + half, count)
    return fine[np.argmin(scalar_shrink_objective(fine, x, t))]


def nuclear_prox_objective(l, x, t):
    return (t * np.sum(np.linalg.svd(l, compute_uv=False), axis=-1)
            + 0.5 * np.sum((l - x) ** 2, axis=(-2, -1)))


def nuclear_prox_subgrad_oracle(xs, t, iters=30000, step0=0.5, decay=0.9996,
                                stall_tol=1e-10):
    """Batched subgradient descent on t ||L||_* + 0.5 ||L - X||_F^2.

    Geometric step decay; returns the best objective seen per instance. Stops
    early once the best objective stalls below stall_tol over a long window.
    """
    ls = xs.copy()
    best = nuclear_prox_objective(ls, xs, t)
    alpha = step0
    window_best = best.copy()
    for k in range(1, iters + 1):
        u, s, vt = np.linalg.svd(ls)
        pos = (s > 1e-12).astype(float)
        d = np.einsum("bij,bj,bjk->bik", u, pos, vt)
        ls = ls - alpha * ((ls - xs) + t * d)
        alpha *= decay
        best = np.minimum(best, nuclear_prox_objective(ls, xs, t))
        if k % 4000 == 0:
            if np.all(window_best - best <= stall_tol * (1.0 + np.abs(best))):
                break
            window_best = best.copy()
    return best


def dense_operator_matrix(op, n):
    """n^2-by-n^2 matrix of a linear map on n-by-n matrices (C-order vec)."""
    cols = []
    for idx in range(n * n):
        e = np.zeros(n * n)
        e[idx] = 1.0
        cols.append(op(e.reshape(n, n)).ravel())
    return np.array(cols).T


def orthonormal_columns(span, rel_tol=1e-10):
    """Orthonormal basis of the column span via SVD rank truncation."""
    u, s, _ = np.linalg.svd(span, full_matrices=False)
    rank = int(np.sum(s > rel_tol * s[0]))
    return u[:, :rank]


def dense_tangent_projector(tangent):
    basis = orthonormal_columns(tangent_span(tangent))
    return basis @ basis.T


def dense_projection_onto_sum(x, basis_a, basis_b):
    """Projection of x onto span(basis_a) + span(basis_b), dense route."""
    joint = orthonormal_columns(np.hstack([basis_a, basis_b]))
    return (joint @ (joint.T @ x.ravel())).reshape(x.shape)
