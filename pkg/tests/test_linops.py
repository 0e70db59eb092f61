import numpy as np
import pytest

from scpcp.linops import (
    DirectSumProjector,
    SubspaceProjector,
    SupportSet,
    TangentSpace,
    frob,
    inner,
    make_subspace_projector,
    operator_norm,
    product_norm,
    project_direct_sum,
    project_support,
    project_tangent,
    project_tangent_complement,
    soft_threshold,
    svt,
)
from scpcp.model import gen_low_rank, gen_sparse, gen_subspace

from _oracles import (
    dense_operator_matrix,
    dense_projection_onto_sum,
    dense_tangent_projector,
    grid_search_scalar_prox,
    nuclear_prox_objective,
    nuclear_prox_subgrad_oracle,
    orthonormal_columns,
    scalar_shrink_objective,
)
from scpcp.certificate import tangent_span


def random_tangent(n, r, seed):
    rng = np.random.default_rng(seed)
    u = np.linalg.qr(rng.standard_normal((n, r)))[0]
    v = np.linalg.qr(rng.standard_normal((n, r)))[0]
    return TangentSpace(u, v)


class TestSoftThreshold:
    def test_scalar_shrink(self):
        np.testing.assert_allclose(soft_threshold(np.array([[3.0]]), 1.0),
                                   [[2.0]])

    def test_zero_threshold_is_identity(self):
        x = np.random.default_rng(0).standard_normal((4, 4))
        np.testing.assert_array_equal(soft_threshold(x, 0.0), x)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold(np.eye(2), -0.1)

    def test_matches_grid_search(self):
        x = np.random.default_rng(7).standard_normal((3, 3))
        t = 0.7
        out = soft_threshold(x, t)
        for i in range(3):
            for j in range(3):
                s_grid = grid_search_scalar_prox(x[i, j], t)
                gap = (scalar_shrink_objective(out[i, j], x[i, j], t)
                       - scalar_shrink_objective(s_grid, x[i, j], t))
                assert abs(gap) <= 1e-6
                assert abs(out[i, j] - s_grid) <= 2e-6


class TestSvt:
    def test_diagonal(self):
        out = svt(np.diag([3.0, 1.0]), 2.0)
        np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-12)

    def test_zero_threshold_is_identity(self):
        x = np.random.default_rng(1).standard_normal((5, 5))
        np.testing.assert_allclose(svt(x, 0.0), x, atol=1e-12)

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            svt(np.eye(2), -1e-9)

    def test_matches_subgradient_descent(self):
        xs = np.random.default_rng(3).standard_normal((4, 4, 4))
        t = 0.5
        best = nuclear_prox_subgrad_oracle(xs, t, iters=20000)
        for x, oracle_obj in zip(xs, best):
            gap = nuclear_prox_objective(svt(x, t), x, t) - oracle_obj
            assert abs(gap) <= 1e-6


class TestSupportSet:
    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError, match="out of bounds"):
            SupportSet.from_pairs(3, [(0, 3)])

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            SupportSet.from_pairs(3, [(1, 2), (1, 2)])

    def test_cardinality(self):
        omega = SupportSet.from_pairs(4, [(0, 0), (1, 3), (2, 2)])
        assert omega.cardinality == 3
        assert omega.complement().cardinality == 13

    def test_project_full_and_empty(self):
        x = np.random.default_rng(2).standard_normal((4, 4))
        np.testing.assert_array_equal(project_support(x, SupportSet.full(4)), x)
        np.testing.assert_array_equal(project_support(x, SupportSet.empty(4)),
                                      np.zeros((4, 4)))

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        omega = SupportSet(5, rng.random((5, 5)) < 0.4)
        x = rng.standard_normal((5, 5))
        once = project_support(x, omega)
        np.testing.assert_array_equal(project_support(once, omega), once)


class TestTangentSpace:
    def test_orthonormality_enforced(self):
        with pytest.raises(ValueError, match="orthonormal"):
            TangentSpace(np.ones((4, 2)), np.ones((4, 2)))

    def test_r_cannot_exceed_n(self):
        with pytest.raises(ValueError):
            TangentSpace(np.eye(3), np.eye(3)[:, :2])  # shape mismatch
        with pytest.raises(ValueError):
            TangentSpace(np.eye(2, 3), np.eye(2, 3))  # r > n

    def test_member_is_fixed(self):
        t = random_tangent(8, 2, 4)
        uvt = t.uvt()
        np.testing.assert_allclose(project_tangent(uvt, t), uvt, atol=1e-12)

    def test_orthogonal_matrix_maps_to_zero(self):
        t = random_tangent(8, 2, 5)
        rng = np.random.default_rng(6)
        x = rng.standard_normal((8, 8))
        # strip row space of U and column space of V
        x = x - t.u @ (t.u.T @ x)
        x = x - (x @ t.v) @ t.v.T
        np.testing.assert_allclose(project_tangent(x, t), 0.0, atol=1e-12)

    @pytest.mark.parametrize("n,r", [(6, 1), (10, 2), (12, 3)])
    def test_matches_dense_basis(self, n, r):
        t = random_tangent(n, r, seed=n + r)
        dense = dense_tangent_projector(t)
        x = np.random.default_rng(n).standard_normal((n, n))
        expected = (dense @ x.ravel()).reshape(n, n)
        np.testing.assert_allclose(project_tangent(x, t), expected, atol=1e-10)

    def test_complement(self):
        t = random_tangent(7, 2, 9)
        x = np.random.default_rng(11).standard_normal((7, 7))
        np.testing.assert_allclose(
            project_tangent(x, t) + project_tangent_complement(x, t), x,
            atol=1e-12)

    def test_dim(self):
        t = random_tangent(9, 2, 1)
        assert t.dim == 2 * 9 * 2 - 4
        span_rank = np.linalg.matrix_rank(tangent_span(t))
        assert span_rank == t.dim


class TestSubspaceProjector:
    def test_p_zero_is_identity(self):
        q = SubspaceProjector.identity(5)
        x = np.random.default_rng(0).standard_normal((5, 5))
        np.testing.assert_array_equal(q.apply_q(x), x)
        np.testing.assert_array_equal(q.apply_qperp(x), np.zeros((5, 5)))

    def test_self_adjoint(self):
        q = gen_subspace(6, 5, seed=2)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.standard_normal((6, 6))
            y = rng.standard_normal((6, 6))
            assert abs(inner(q.apply_q(x), y) - inner(x, q.apply_q(y))) \
                <= 1e-10 * frob(x) * frob(y)

    def test_matches_dense_pseudo_inverse(self):
        n, p = 6, 4
        rng = np.random.default_rng(8)
        h = rng.normal(0.0, 1.0 / n, size=(n * n, p))
        q = make_subspace_projector(h)
        dense = h @ np.linalg.inv(h.T @ h) @ h.T
        x = rng.standard_normal((n, n))
        expected = (dense @ x.ravel()).reshape(n, n)
        np.testing.assert_allclose(q.apply_qperp(x), expected, atol=1e-10)

    def test_rank_deficient_rejected(self):
        h = np.ones((9, 2))
        with pytest.raises(ValueError, match="rank deficient"):
            make_subspace_projector(h)

    def test_non_orthonormal_basis_rejected(self):
        with pytest.raises(ValueError, match="orthonormal"):
            SubspaceProjector(3, np.ones((9, 2)))


class TestDirectSum:
    def staged(self, n, seed):
        rng = np.random.default_rng(seed)
        t = random_tangent(n, 2, seed)
        omega = SupportSet(n, rng.random((n, n)) < 0.2)
        return t, omega

    def test_member_of_a_is_fixed(self):
        t, omega = self.staged(8, 0)
        x = project_tangent(np.random.default_rng(1).standard_normal((8, 8)), t)
        out = project_direct_sum(x, lambda z: project_tangent(z, t),
                                 lambda z: project_support(z, omega))
        np.testing.assert_allclose(out, x, atol=1e-8)

    def test_member_of_b_is_fixed(self):
        t, omega = self.staged(8, 2)
        x = project_support(np.random.default_rng(3).standard_normal((8, 8)),
                            omega)
        out = project_direct_sum(x, lambda z: project_tangent(z, t),
                                 lambda z: project_support(z, omega))
        np.testing.assert_allclose(out, x, atol=1e-8)

    @pytest.mark.parametrize("n", [6, 8, 10])
    def test_matches_dense_stacked_basis(self, n):
        t, omega = self.staged(n, n)
        x = np.random.default_rng(n + 1).standard_normal((n, n))
        out = project_direct_sum(x, lambda z: project_tangent(z, t),
                                 lambda z: project_support(z, omega))
        basis_t = orthonormal_columns(tangent_span(t))
        cols = np.flatnonzero(omega.mask.ravel())
        basis_o = np.zeros((n * n, len(cols)))
        basis_o[cols, np.arange(len(cols))] = 1.0
        expected = dense_projection_onto_sum(x, basis_t, basis_o)
        np.testing.assert_allclose(out, expected, atol=1e-8)

    def test_residual_orthogonal_to_both(self):
        t, omega = self.staged(9, 5)
        x = np.random.default_rng(6).standard_normal((9, 9))
        out = project_direct_sum(x, lambda z: project_tangent(z, t),
                                 lambda z: project_support(z, omega))
        resid = x - out
        assert frob(project_tangent(resid, t)) <= 1e-8 * frob(x)
        assert frob(project_support(resid, omega)) <= 1e-8 * frob(x)

    def test_non_transversal_rejected(self):
        omega = SupportSet(4, np.random.default_rng(0).random((4, 4)) < 0.5)
        apply_o = lambda z: project_support(z, omega)
        with pytest.raises(ValueError, match="transversal"):
            DirectSumProjector(apply_o, apply_o, 4)


class TestOperatorNorm:
    def test_projector_norm_is_one(self):
        q = gen_subspace(5, 3, seed=1)
        assert operator_norm(q.apply_qperp, 5) == pytest.approx(1.0, abs=1e-8)
        assert operator_norm(q.apply_q, 5) == pytest.approx(1.0, abs=1e-8)

    def test_zero_map(self):
        assert operator_norm(lambda x: np.zeros_like(x), 4) == 0.0

    def test_matches_dense_svd(self):
        n = 5
        rng = np.random.default_rng(12)
        a = rng.standard_normal((n * n, n * n))
        op = lambda x: (a @ x.ravel()).reshape(n, n)
        adj = lambda x: (a.T @ x.ravel()).reshape(n, n)
        sigma = operator_norm(op, n, adjoint=adj, max_iters=20000, tol=1e-12)
        expected = np.linalg.svd(a, compute_uv=False)[0]
        assert sigma == pytest.approx(expected, abs=1e-8)

    def test_product_norm_orthogonal_subspaces(self):
        # supports on disjoint entries: product norm is zero
        o1 = SupportSet.from_pairs(4, [(0, 0), (1, 1)])
        o2 = SupportSet.from_pairs(4, [(2, 2), (3, 3)])
        val = product_norm(lambda x: project_support(x, o1),
                           lambda x: project_support(x, o2), 4)
        assert val <= 1e-8


class TestProjectorAlgebra:
    """Idempotence, self-adjointness, Pythagoras over random probes."""

    def projectors(self, n=10, seed=0):
        rng = np.random.default_rng(seed)
        t = random_tangent(n, 2, seed + 1)
        omega = SupportSet(n, rng.random((n, n)) < 0.15)
        q = gen_subspace(n, 8, seed=seed + 2)
        return {
            "support": lambda x: project_support(x, omega),
            "tangent": lambda x: project_tangent(x, t),
            "q": q.apply_q,
            "qperp": q.apply_qperp,
        }

    def test_idempotent_and_self_adjoint(self):
        ops = self.projectors()
        rng = np.random.default_rng(42)
        for name, op in ops.items():
            for _ in range(25):
                x = rng.standard_normal((10, 10))
                y = rng.standard_normal((10, 10))
                assert frob(op(op(x)) - op(x)) <= 1e-10 * frob(x), name
                assert abs(inner(op(x), y) - inner(x, op(y))) \
                    <= 1e-10 * frob(x) * frob(y), name

    def test_pythagoras(self):
        q = gen_subspace(9, 7, seed=3)
        rng = np.random.default_rng(4)
        for _ in range(25):
            x = rng.standard_normal((9, 9))
            total = frob(x) ** 2
            split = frob(q.apply_q(x)) ** 2 + frob(q.apply_qperp(x)) ** 2
            assert abs(total - split) <= 1e-10 * total

    def test_prox_nonexpansive(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.standard_normal((6, 6))
            y = rng.standard_normal((6, 6))
            for prox in (lambda z: soft_threshold(z, 0.4),
                         lambda z: svt(z, 0.4)):
                assert frob(prox(x) - prox(y)) <= frob(x - y) + 1e-12

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            x = rng.standard_normal((7, 7))
            y = rng.standard_normal((7, 7))
            assert inner(x, y) <= frob(x) * frob(y) + 1e-12
