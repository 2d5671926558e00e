import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from oflm import levy
from oflm.errors import FirstMomentDiverged, UnsupportedPushforward


def canonical_basis_measure(p):
    return levy.DiscreteMeasure(np.eye(p), np.ones(p))


class TestSecondMoment:
    def test_canonical_atoms_identity(self):
        mu = canonical_basis_measure(3)
        assert np.allclose(levy.second_moment(mu), np.eye(3))

    def test_gaussian(self):
        S = np.array([[2.0, 0.3], [0.3, 1.0]])
        mu = levy.GaussianJumps(S, 2.0)
        assert np.allclose(levy.second_moment(mu), 2 * S)

    def test_tempered_opstable_closed_form(self):
        # q=1, B=0.75, indicator(1): int_0^1 r^{1.5} dr / r^2 = 2
        mu = levy.TemperedOpStable(np.array([[0.75]]), np.array([[1.0]]),
                                   np.array([1.0]), levy.Tempering("indicator", 1.0))
        m2 = levy.second_moment(mu)
        oracle, _ = quad(lambda r: r ** 1.5 / r ** 2, 0, 1)
        assert abs(m2[0, 0] - 2.0) < 1e-9
        assert abs(m2[0, 0] - oracle) < 1e-8

    def test_tempered_exponential_matches_quadrature(self):
        c = 2.0
        mu = levy.TemperedOpStable(np.array([[0.8]]), np.array([[1.0]]),
                                   np.array([1.5]), levy.Tempering("exponential", c))
        oracle, _ = quad(lambda r: 1.5 * r ** 1.6 * np.exp(-c * r) / r ** 2, 0, 40)
        assert abs(levy.second_moment(mu)[0, 0] - oracle) < 1e-8


class TestMeanJump:
    def test_symmetric_discrete(self):
        z = np.array([0.7, -0.2])
        mu = levy.DiscreteMeasure(np.vstack([z, -z]), np.ones(2))
        assert np.allclose(levy.mean_jump(mu), 0.0)

    def test_weighted_atom(self):
        mu = levy.DiscreteMeasure(np.array([[1.0, 0.0]]), np.array([2.0]))
        assert np.allclose(levy.mean_jump(mu), [2.0, 0.0])

    def test_gaussian_zero(self):
        mu = levy.GaussianJumps(np.eye(2), 3.0)
        assert np.allclose(levy.mean_jump(mu), 0.0)

    def test_tos_asymmetric_diverges(self):
        mu = levy.TemperedOpStable(np.array([[0.75]]), np.array([[1.0]]),
                                   np.array([1.0]), levy.Tempering("indicator", 1.0))
        with pytest.raises(FirstMomentDiverged):
            levy.mean_jump(mu)

    def test_tos_symmetric_zero(self):
        mu = levy.TemperedOpStable(np.array([[0.75]]), np.array([[1.0], [-1.0]]),
                                   np.array([1.0, 1.0]), levy.Tempering("indicator", 1.0))
        assert np.allclose(levy.mean_jump(mu), 0.0)


class TestPushforward:
    def test_identity(self):
        mu = canonical_basis_measure(2)
        ok, disc = levy.measure_equal(mu, levy.pushforward(mu, np.eye(2)))
        assert ok and disc == 0.0

    def test_negation_on_symmetric(self):
        z = np.array([1.0, 0.5])
        mu = levy.DiscreteMeasure(np.vstack([z, -z]), np.ones(2))
        ok, _ = levy.measure_equal(mu, levy.pushforward(mu, -np.eye(2)))
        assert ok

    def test_gaussian_orthogonal_invariance(self):
        mu = levy.GaussianJumps(np.eye(2), 1.0)
        th = 0.7
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        ok, _ = levy.measure_equal(mu, levy.pushforward(mu, R))
        assert ok

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_roundtrip_inverse(self, seed):
        rng = np.random.default_rng(seed)
        T = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        mu = levy.DiscreteMeasure(rng.normal(size=(4, 2)), rng.uniform(0.5, 2, 4))
        back = levy.pushforward(levy.pushforward(mu, T), np.linalg.inv(T))
        ok, disc = levy.measure_equal(mu, back, tol=1e-10)
        assert ok, disc

    def test_roundtrip_gaussian(self):
        rng = np.random.default_rng(12)
        T = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        mu = levy.GaussianJumps(np.array([[1.0, 0.2], [0.2, 0.7]]), 1.4)
        back = levy.pushforward(levy.pushforward(mu, T), np.linalg.inv(T))
        ok, disc = levy.measure_equal(mu, back, tol=1e-10)
        assert ok, disc

    def test_discrete_moment_covariance(self):
        rng = np.random.default_rng(13)
        T = rng.normal(size=(2, 2)) + np.eye(2)
        mu = levy.DiscreteMeasure(rng.normal(size=(5, 2)), rng.uniform(0.2, 1, 5))
        lhs = levy.second_moment(levy.pushforward(mu, T))
        rhs = T @ levy.second_moment(mu) @ T.T
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_moment_covariance(self):
        rng = np.random.default_rng(5)
        T = rng.normal(size=(2, 2)) + np.eye(2)
        mu = levy.GaussianJumps(np.array([[1.0, 0.2], [0.2, 0.5]]), 1.3)
        lhs = levy.second_moment(levy.pushforward(mu, T))
        rhs = T @ levy.second_moment(mu) @ T.T
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_tos_noncommuting_rejected(self):
        mu = levy.TemperedOpStable(np.diag([0.6, 0.8]), np.eye(2), np.ones(2),
                                   levy.Tempering("indicator", 1.0))
        T = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(UnsupportedPushforward):
            levy.pushforward(mu, T)


class TestSymmetrizeConjugate:
    def test_definition_single_atom(self):
        # z = 1 + i as (1, 1) in R^2 -> atoms (1, 1)/2 and (1, -1)/2
        base = levy.DiscreteMeasure(np.array([[1.0, 1.0]]), np.array([1.0]))
        view = levy.ComplexLevyView(base)
        sym = levy.symmetrize_conjugate(view).base
        assert np.allclose(sym.atoms, [[1.0, -1.0], [1.0, 1.0]])
        assert np.allclose(sym.weights, [0.5, 0.5])

    def test_invariant_unchanged(self):
        base = levy.DiscreteMeasure(np.array([[1.0, 1.0], [1.0, -1.0]]), np.array([1.0, 1.0]))
        view = levy.ComplexLevyView(base)
        sym = levy.symmetrize_conjugate(view).base
        ok, _ = levy.measure_equal(base, sym)
        assert ok

    def test_idempotent(self):
        base = levy.DiscreteMeasure(np.array([[1.0, 1.0], [0.5, -0.2]]),
                                    np.array([1.0, 2.0]))
        view = levy.ComplexLevyView(base)
        s1 = levy.symmetrize_conjugate(view)
        s2 = levy.symmetrize_conjugate(s1)
        ok, disc = levy.measure_equal(s1.base, s2.base, tol=1e-12)
        assert ok, disc

    def test_mixed_block_moment_vanishes(self):
        # int (z2 z1^T - z1 z2^T) mu~ = 0
        rng = np.random.default_rng(3)
        base = levy.DiscreteMeasure(rng.normal(size=(5, 4)), rng.uniform(0.2, 1, 5))
        sym = levy.symmetrize_conjugate(levy.ComplexLevyView(base))
        _, _, S_RI = levy.block_second_moments(sym)
        assert np.max(np.abs(S_RI - S_RI.T)) < 1e-12


class TestLevySymbol:
    def test_zero_at_origin(self):
        mu = canonical_basis_measure(2)
        assert levy.levy_symbol(mu, np.zeros(2)) == 0.0

    def test_single_atom_formula(self):
        mu = levy.DiscreteMeasure(np.array([[1.0]]), np.array([1.0]))
        u = 0.73
        expect = np.exp(1j * u) - 1 - 1j * u
        assert abs(levy.levy_symbol(mu, np.array([u])) - expect) < 1e-14

    def test_real_part_nonpositive(self):
        rng = np.random.default_rng(9)
        mu = levy.DiscreteMeasure(rng.normal(size=(6, 2)), rng.uniform(0.1, 2, 6))
        for u in rng.normal(size=(20, 2)):
            assert levy.levy_symbol(mu, u).real <= 1e-15

    def test_second_order_taylor_matches_moment(self):
        rng = np.random.default_rng(21)
        mu = levy.DiscreteMeasure(rng.normal(size=(4, 2)), rng.uniform(0.5, 1.5, 4))
        M2 = levy.second_moment(mu)
        u = np.array([0.3, -0.8])
        h = 1e-3
        val = levy.levy_symbol(mu, h * u)
        quad_coeff = -0.5 * u @ M2 @ u
        assert abs(val.real / h ** 2 - quad_coeff) < 1e-4 * max(1.0, abs(quad_coeff))

    def test_gaussian_closed_form(self):
        mu = levy.GaussianJumps(np.array([[2.0]]), 1.7)
        u = np.array([0.9])
        expect = 1.7 * (np.exp(-0.5 * 0.9 ** 2 * 2.0) - 1)
        assert abs(levy.levy_symbol(mu, u) - expect) < 1e-14


class TestSampling:
    def test_single_atom_always(self):
        mu = levy.DiscreteMeasure(np.array([[2.0, -1.0]]), np.array([3.0]))
        rng = np.random.default_rng(0)
        draws = levy.sample_jumps(levy.truncate_small_jumps(mu), 50, rng)
        assert np.all(draws == np.array([2.0, -1.0]))

    def test_empirical_second_moment(self):
        rng = np.random.default_rng(42)
        mu = levy.DiscreteMeasure(np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0]]),
                                  np.array([0.5, 0.3, 0.2]))
        view = levy.truncate_small_jumps(mu)
        n = 10 ** 5
        draws = levy.sample_jumps(view, n, rng)
        emp = draws.T @ draws / n
        expect = levy.second_moment(mu) / levy.total_activity(mu)
        se = 3 * np.max(np.abs(draws)) ** 2 / np.sqrt(n)
        assert np.max(np.abs(emp - expect)) < se

    def test_tos_radius_inverse_cdf(self):
        # empirical radius CDF vs the analytic truncated CDF, KS < 0.01 at n=1e5
        eps, r0 = 0.01, 1.0
        mu = levy.TemperedOpStable(np.array([[0.75]]), np.array([[1.0]]),
                                   np.array([1.0]), levy.Tempering("indicator", r0))
        rng = np.random.default_rng(7)
        n = 10 ** 5
        draws = levy.sample_jumps(levy.truncate_small_jumps(mu, eps), n, rng)
        radii = np.sort(np.abs(draws[:, 0]) ** (1 / 0.75))  # jump = r^B theta = r^0.75
        cdf = (1.0 / eps - 1.0 / radii) / (1.0 / eps - 1.0 / r0)
        emp = np.arange(1, n + 1) / n
        ks = np.max(np.abs(cdf - emp))
        assert ks < 0.01

    def test_truncated_activity_formula(self):
        eps, r0 = 0.01, 1.0
        mu = levy.TemperedOpStable(np.array([[0.75]]), np.array([[1.0]]),
                                   np.array([1.0]), levy.Tempering("indicator", r0))
        view = levy.truncate_small_jumps(mu, eps)
        assert np.isclose(view.activity, 1 / eps - 1 / r0)


class TestRotationInvariance:
    def test_circular_gaussian_invariant(self):
        mu = levy.GaussianJumps(np.eye(2), 1.0)
        view = levy.ComplexLevyView(mu)
        assert levy.rotation_invariance_report(view, [0.3, np.pi / 2, 1.1]) < 1e-12

    def test_single_atom_not_invariant(self):
        base = levy.DiscreteMeasure(np.array([[1.0, 0.0]]), np.array([1.0]))
        view = levy.ComplexLevyView(base)
        assert levy.rotation_invariance_report(view, [np.pi / 2]) > 0.1

    def test_symmetrized_orbit_invariant_on_grid(self):
        # four-point orbit under quarter turns
        z = np.array([1.0, 0.4])
        pts = [z]
        for _ in range(3):
            pts.append(levy.rotation_matrix(1, np.pi / 2) @ pts[-1])
        base = levy.DiscreteMeasure(np.array(pts), np.ones(4))
        view = levy.ComplexLevyView(base)
        grid = [np.pi / 2, np.pi, 3 * np.pi / 2]
        assert levy.rotation_invariance_report(view, grid) < 1e-12


class TestNormalization:
    def test_time_normalization(self):
        rng = np.random.default_rng(17)
        mu = levy.DiscreteMeasure(rng.normal(size=(5, 2)), rng.uniform(0.5, 2, 5))
        normed = levy.normalize_time_measure(mu)
        assert np.max(np.abs(levy.second_moment(normed) - np.eye(2))) < 1e-12

    def test_complex_normalization_rescales_documented_example(self):
        # mu = sum_k delta_{(1+i) e_k} has 4 int Re z Re z^T = 4 I, not I;
        # the normalizing map fixes both block conditions exactly
        p = 2
        atoms = np.hstack([np.eye(p), np.eye(p)])
        view = levy.ComplexLevyView(levy.DiscreteMeasure(atoms, np.ones(p)))
        S_R, S_I, _ = levy.block_second_moments(view)
        assert np.allclose(4 * S_R, 4 * np.eye(p))
        normed = levy.normalize_complex_measure(view)
        S_R2, S_I2, _ = levy.block_second_moments(normed)
        assert np.max(np.abs(4 * S_R2 - np.eye(p))) < 1e-12
        assert np.max(np.abs(4 * S_I2 - np.eye(p))) < 1e-12
