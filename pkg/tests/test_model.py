import numpy as np
import pytest

from scpcp.linops import SubspaceProjector, frob, project_support
from scpcp.model import (
    build_instance,
    gen_low_rank,
    gen_sparse,
    gen_subspace,
    incoherence,
    tau_criterion,
    tau_oracle,
)

SQRT3_3 = np.sqrt(3.0) / 3.0
SQRT15_3 = np.sqrt(15.0) / 3.0


class TestGenLowRank:
    def test_deterministic(self):
        a = gen_low_rank(20, 3, seed=11)
        b = gen_low_rank(20, 3, seed=11)
        np.testing.assert_array_equal(a, b)

    def test_full_rank_when_r_equals_n(self):
        l = gen_low_rank(8, 8, seed=0)
        s = np.linalg.svd(l, compute_uv=False)
        assert s[-1] > 0

    def test_r_above_n_rejected(self):
        with pytest.raises(ValueError):
            gen_low_rank(5, 6, seed=0)

    def test_rank_and_incoherence_baseline(self):
        # Baseline table frozen from a 100-seed survey at n=50, r=3:
        # min 11.7, p25 20.1, median 24.3, p75 30.0, max 58.3 (the entrywise
        # term dominates for Gaussian factors). Rank is always exactly 3.
        mus = []
        for seed in range(100):
            l = gen_low_rank(50, 3, seed=seed)
            mu, r = incoherence(l)
            assert r == 3
            assert np.isfinite(mu)
            mus.append(mu)
        assert 15.0 <= np.median(mus) <= 35.0
        assert max(mus) <= 100.0


class TestGenSparse:
    def test_rho_zero(self):
        s, omega = gen_sparse(10, 0.0, 1.0, seed=0)
        assert omega.cardinality == 0
        np.testing.assert_array_equal(s, np.zeros((10, 10)))

    def test_rho_one(self):
        s, omega = gen_sparse(10, 1.0, 2.5, seed=0)
        assert omega.cardinality == 100
        np.testing.assert_array_equal(np.abs(s), np.full((10, 10), 2.5))

    def test_rho_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            gen_sparse(5, 1.5, 1.0, seed=0)
        with pytest.raises(ValueError):
            gen_sparse(5, -0.1, 1.0, seed=0)

    def test_support_size_concentration(self):
        n, rho = 100, 0.05
        mean = rho * n * n
        sd = np.sqrt(n * n * rho * (1 - rho))
        hits = 0
        for seed in range(100):
            _, omega = gen_sparse(n, rho, 1.0, seed=seed)
            if abs(omega.cardinality - mean) <= 3 * sd:
                hits += 1
        assert hits >= 99

    def test_support_matches_nonzeros(self):
        s, omega = gen_sparse(30, 0.1, 1.0, seed=5)
        np.testing.assert_array_equal(s != 0.0, omega.mask)


class TestGenSubspace:
    def test_p_zero_identity(self):
        q = gen_subspace(10, 0, seed=0)
        x = np.random.default_rng(0).standard_normal((10, 10))
        np.testing.assert_array_equal(q.apply_q(x), x)

    def test_projector_rank_equals_p(self):
        q = gen_subspace(12, 9, seed=3)
        assert q.basis.shape == (144, 9)
        # trace of the complement projector equals the basis column count
        assert frob(q.basis) ** 2 == pytest.approx(9.0, abs=1e-10)

    def test_frame_variance(self):
        # 4000 draws at n=20, p=10: sample variance within 10% of 1/n^2
        n, p = 20, 10
        from scpcp.model import role_rng
        h = role_rng(7, "subspace").normal(0.0, 1.0 / n, size=(n * n, p))
        assert np.var(h) == pytest.approx(1.0 / n**2, rel=0.1)

    def test_p_too_large_rejected(self):
        with pytest.raises(ValueError, match="n\\^2/4"):
            gen_subspace(4, 4, seed=0)


class TestIncoherence:
    def test_spiky_rank_one(self):
        l = np.zeros((10, 10))
        l[0, 0] = 1.0
        mu, r = incoherence(l)
        assert r == 1
        # the first two terms give n; the entrywise term dominates at n^2
        assert mu == pytest.approx(100.0, rel=1e-12)

    def test_flat_rank_one(self):
        mu, r = incoherence(np.ones((10, 10)))
        assert r == 1
        assert mu == pytest.approx(1.0, rel=1e-12)

    def test_matches_direct_recomputation(self):
        l = gen_low_rank(50, 5, seed=9)
        mu, r = incoherence(l)
        assert r == 5
        u, s, vt = np.linalg.svd(l)
        u, v = u[:, :5], vt[:5, :].T
        n = 50
        t1 = (n / 5) * max(np.sum(u[i] ** 2) for i in range(n))
        t2 = (n / 5) * max(np.sum(v[i] ** 2) for i in range(n))
        t3 = (n / 5) * np.max(np.abs(u @ v.T)) ** 2 * n
        assert mu == pytest.approx(max(t1, t2, t3), rel=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            incoherence(np.zeros((4, 4)))


class TestTauCriterion:
    def test_paper_value(self):
        m = np.zeros((3, 3))
        m[0, 0] = 3.0
        assert tau_criterion(m, 0.1) == pytest.approx(309.83866769659336,
                                                      rel=1e-12)

    def test_paper_value_with_default_lambda(self):
        m = np.zeros((4, 4))
        m[0, 0] = 1.0
        lam = 1.0 / np.sqrt(100.0)
        assert tau_criterion(m, lam) == pytest.approx(103.27955589886445,
                                                      rel=1e-12)

    def test_homogeneous(self):
        m = np.random.default_rng(0).standard_normal((5, 5))
        assert tau_criterion(3.0 * m, 0.2) == pytest.approx(
            3.0 * tau_criterion(m, 0.2), rel=1e-12)

    def test_nonpositive_lambda_rejected(self):
        with pytest.raises(ValueError):
            tau_criterion(np.eye(3), 0.0)

    def test_dominates_frobenius_norm(self):
        # 8 sqrt(15) / 3 > 1 and lambda <= 1, so criterion >= ||M||_F
        for seed in range(10):
            inst = build_instance(25, 2, 0.1, 10, seed=seed)
            assert inst.tau >= frob(inst.m)


class TestTauOracle:
    def test_degenerate_sparse_part(self):
        inst = build_instance(20, 2, 0.0, 0, seed=1, tau_mode="explicit",
                              tau=1.0)
        truth, m, lam = inst.truth, inst.m, inst.lam
        alpha, beta = 0.375, 0.625
        got = tau_oracle(truth, m, lam, alpha, beta)
        linf = np.max(np.abs(truth.l0))
        tau1 = linf / ((beta - 0.5) * lam)
        tau3 = 4.0 * linf / lam
        assert got == pytest.approx(max(tau1, tau3, frob(m)), rel=1e-12)

    def test_default_parameters_give_eight_over_lambda_form(self):
        inst = build_instance(30, 2, 0.08, 15, seed=2, tau_mode="explicit",
                              tau=1.0)
        truth, m, lam = inst.truth, inst.m, inst.lam
        got = tau_oracle(truth, m, lam, 0.375, 0.625)
        off_inf = np.max(np.abs(project_support(truth.l0,
                                                truth.omega.complement())))
        on_diff = frob(project_support(truth.l0 - truth.s0, truth.omega))
        tau1 = 8.0 * off_inf / lam
        tau2 = 8.0 * on_diff / lam
        tau3 = 4.0 * (off_inf + on_diff) / lam
        assert got == pytest.approx(max(tau1, tau2, tau3, frob(m)), rel=1e-12)

    def test_invalid_parameters_named(self):
        inst = build_instance(10, 1, 0.1, 5, seed=0, tau_mode="explicit",
                              tau=1.0)
        with pytest.raises(ValueError, match="beta"):
            tau_oracle(inst.truth, inst.m, inst.lam, 0.375, 0.5)
        with pytest.raises(ValueError, match="alpha"):
            tau_oracle(inst.truth, inst.m, inst.lam, 0.25, 0.625)
        with pytest.raises(ValueError, match="alpha \\+ beta"):
            tau_oracle(inst.truth, inst.m, inst.lam, 0.45, 0.625)

    def test_dominated_by_criterion_when_chain_holds(self):
        # The data-driven criterion upper-bounds the oracle whenever the
        # on-support norm chain holds; count violations over 100 seeds.
        applicable = violations = 0
        for seed in range(100):
            inst = build_instance(60, 2, 0.05, 60, seed=seed,
                                  tau_mode="explicit", tau=1.0)
            truth, m, lam = inst.truth, inst.m, inst.lam
            on_diff = frob(project_support(truth.l0 - truth.s0, truth.omega))
            if on_diff <= SQRT15_3 * frob(m):
                applicable += 1
                oracle = tau_oracle(truth, m, lam)
                if oracle > tau_criterion(m, lam) * (1 + 1e-9):
                    violations += 1
        assert applicable >= 95
        assert violations == 0


class TestBuildInstance:
    def test_deterministic(self):
        a = build_instance(30, 2, 0.05, 20, seed=3)
        b = build_instance(30, 2, 0.05, 20, seed=3)
        np.testing.assert_array_equal(a.m, b.m)
        np.testing.assert_array_equal(a.q.basis, b.q.basis)
        assert a.tau == b.tau

    def test_construction_identity(self):
        inst = build_instance(60, 2, 0.05, 60, seed=4)
        assert frob(inst.m - inst.truth.l0 - inst.truth.s0) == 0.0
        np.testing.assert_array_equal(inst.truth.s0 != 0, inst.truth.omega.mask)

    def test_rank_one_when_sparse_empty(self):
        inst = build_instance(25, 1, 0.0, 0, seed=5)
        s = np.linalg.svd(inst.m, compute_uv=False)
        assert s[1] <= 1e-10 * s[0]

    def test_lambda_default(self):
        inst = build_instance(60, 2, 0.05, 0, seed=0)
        assert inst.lam == pytest.approx(1.0 / np.sqrt(60), rel=1e-15)

    def test_tau_modes(self):
        crit = build_instance(20, 2, 0.1, 10, seed=6, tau_mode="criterion")
        orac = build_instance(20, 2, 0.1, 10, seed=6, tau_mode="oracle")
        expl = build_instance(20, 2, 0.1, 10, seed=6, tau_mode=123.0)
        assert crit.tau == pytest.approx(tau_criterion(crit.m, crit.lam))
        assert orac.tau == pytest.approx(
            tau_oracle(orac.truth, orac.m, orac.lam))
        assert expl.tau == 123.0
        with pytest.raises(ValueError, match="explicit"):
            build_instance(20, 2, 0.1, 10, seed=6, tau_mode="explicit")

    def test_inequality_chains_hold_often(self):
        # With-high-probability norm chains, checked statistically.
        chain1 = chain2 = chain3 = xi_ok = 0
        trials = 100
        for seed in range(trials):
            inst = build_instance(60, 2, 0.05, 0, seed=seed)
            truth = inst.truth
            norm_m = frob(inst.m)
            c1 = frob(project_support(truth.l0, truth.omega)) \
                <= SQRT3_3 * norm_m
            c2 = frob(project_support(truth.l0 - truth.s0, truth.omega)) \
                <= SQRT15_3 * norm_m
            c3 = frob(truth.l0) <= (SQRT3_3 + 2.0) * norm_m
            chain1 += c1
            chain2 += c2
            chain3 += c3
            if c3:
                tau = max(tau_criterion(inst.m, inst.lam), norm_m)
                xi = frob(truth.tangent.uvt() + truth.l0 / tau)
                xi_ok += xi <= truth.r + SQRT3_3 + 2.0
        assert chain1 >= 95
        assert chain2 >= 95
        assert chain3 >= 95
        assert xi_ok == chain3


class TestGroundTruthValidation:
    def test_mismatched_support_rejected(self):
        from scpcp.model import GroundTruth
        from scpcp.linops import SupportSet
        s0 = np.zeros((5, 5))
        s0[0, 0] = 1.0
        omega = SupportSet.from_pairs(5, [(0, 0), (1, 1)])
        l0 = gen_low_rank(5, 1, 0)
        with pytest.raises(ValueError, match="support"):
            GroundTruth.from_parts(l0, s0, omega, 1, 0.1)
