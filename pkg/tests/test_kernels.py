import numpy as np
import pytest

from oflm import kernels, matfun
from oflm.errors import GridTooCoarse, InvalidRegime


def tparams(d, mp_=None, mm=None, p=None):
    d = np.atleast_1d(d)
    p = len(d)
    spec = matfun.validate_hurst(np.diag(d + 0.5))
    mp_ = np.eye(p) if mp_ is None else np.asarray(mp_, float)
    mm = np.zeros((p, p)) if mm is None else np.asarray(mm, float)
    return kernels.general_time_params(spec, mp_, mm)


def fparams(d, A):
    d = np.atleast_1d(d)
    spec = matfun.validate_hurst(np.diag(d + 0.5))
    return kernels.fourier_params(spec, A)


class TestTimeKernel:
    def test_scalar_example(self):
        # p=1, M+=1, M-=0, d=0.3, t=1, s=-1 -> 2^0.3 - 1
        params = tparams([0.3])
        val = kernels.time_kernel(1.0, -1.0, params)
        assert np.isclose(val[0, 0], 2 ** 0.3 - 1)

    def test_t_zero_kernel_vanishes(self):
        params = tparams([0.3, -0.2])
        for s in (-2.3, -0.5, 0.4, 1.7):
            assert np.allclose(kernels.time_kernel(0.0, s, params), 0.0)

    def test_well_balanced_form(self):
        # M+ = M- = M gives {|t-s|^D - |s|^D} M
        M = np.array([[1.0, 0.5], [0.0, 2.0]])
        d = np.array([0.3, -0.2])
        params = tparams(d, M, M)
        t, s = 1.0, -0.7
        expect = (np.diag(np.abs(t - s) ** d) - np.diag(np.abs(s) ** d)) @ M
        assert np.allclose(kernels.time_kernel(t, s, params), expect)

    def test_increment_shift_identity(self):
        # g_{t+h}(s) - g_h(s) = g_t(s - h) pointwise (general branch)
        params = tparams([0.25, -0.15])
        t, h = 0.8, 0.5
        for s in (-3.1, -0.9, 0.3, 0.9, 1.7):
            lhs = (kernels.time_kernel(t + h, s, params)
                   - kernels.time_kernel(h, s, params))
            rhs = kernels.time_kernel(t, s - h, params)
            assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_half_branch_values(self):
        spec = matfun.validate_hurst(0.5 * np.eye(1))
        params = kernels.half_time_params(spec, np.array([[2.0]]), np.array([[1.0]]))
        t, s = 1.0, 0.5
        expect = (np.sign(t - s) - np.sign(-s)) * 2.0 + np.log(abs(t - s) / abs(s)) * 1.0
        assert np.isclose(kernels.time_kernel(t, s, params)[0, 0], expect)
        # convention: zero at s in {0, t}
        assert kernels.time_kernel(t, 0.0, params)[0, 0] == 0.0
        assert kernels.time_kernel(t, t, params)[0, 0] == 0.0

    def test_regime_rejection(self):
        spec = matfun.validate_hurst(np.diag([0.5, 0.8]))
        with pytest.raises(InvalidRegime):
            kernels.general_time_params(spec, np.eye(2), np.zeros((2, 2)))

    def test_offset_evaluation_matches(self):
        params = tparams([-0.3])
        t = 1.25
        w = np.array([1e-3, 1e-9])
        direct = kernels.time_kernel_batch(t, t + w, params)
        offset = kernels.time_kernel_offset_batch(t, t, w, params)
        assert np.allclose(direct, offset, rtol=1e-9)


class TestFourierKernel:
    def test_t_zero(self):
        params = fparams([0.3], np.array([[1.0 + 0.5j]]))
        assert np.allclose(kernels.fourier_kernel(0.0, 0.7, params), 0.0)

    def test_hermitian_symmetry(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        params = fparams([0.3, -0.2], A)
        for x in (1.7, -1.7, 0.23):
            lhs = kernels.fourier_kernel(0.9, -x, params)
            rhs = np.conj(kernels.fourier_kernel(0.9, x, params))
            assert np.max(np.abs(lhs - rhs)) < 1e-14

    def test_scaling_identity(self):
        # g~_{ct}(x) = c^{D+I} g~_t(c x)
        A = np.array([[1.0, 0.3j], [0.2, 1.0 - 1j]])
        d = np.array([0.25, -0.1])
        params = fparams(d, A)
        c, t, x = 3.0, 1.0, 0.4
        lhs = kernels.fourier_kernel(c * t, x, params)
        cDI = matfun.matrix_power(np.diag(d) + np.eye(2), c)
        rhs = cDI @ kernels.fourier_kernel(t, c * x, params)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_x_zero_returns_zero_matrix(self):
        params = fparams([0.3], np.array([[1.0]]))
        assert np.allclose(kernels.fourier_kernel(1.0, 0.0, params), 0.0)


class TestScalingResidual:
    def test_c_one_is_zero(self):
        params = tparams([0.3, 0.1])
        assert kernels.kernel_scaling_residual(1.0, 1.0, [-2.0, 0.3, 1.4], params) == 0.0

    def test_scalar_random_points(self):
        rng = np.random.default_rng(3)
        params = tparams([0.3])
        pts = rng.uniform(-5, 5, size=100)
        assert kernels.kernel_scaling_residual(10.0, 1.0, pts, params) < 1e-12

    def test_commuting_p2(self):
        params = tparams([0.3, -0.2])
        pts = np.linspace(-4, 4, 41)
        assert kernels.kernel_scaling_residual(0.5, 1.3, pts, params) < 1e-12


class TestTimeGram:
    def test_zero_time(self):
        params = tparams([0.3, -0.2])
        assert np.allclose(kernels.time_gram(params, 0.0, 1.0), 0.0)

    def test_positive_scalar(self):
        params = tparams([0.3], np.array([[1.0]]), np.array([[1.0]]))
        val = kernels.time_gram(params, 1.0, 1.0)
        assert val[0, 0] > 0

    @pytest.mark.parametrize("d", [0.3, -0.3, 0.45, -0.45])
    def test_well_balanced_matches_closed_form(self, d):
        # for M+ = M- the fBm-like covariance identity is exact
        params = tparams([d], np.array([[1.0]]), np.array([[1.0]]))
        h = d + 0.5
        sig2 = kernels.time_gram(params, 1.0, 1.0)[0, 0]
        s, t = 1.3, 2.7
        q = kernels.time_gram(params, s, t)[0, 0]
        closed = 0.5 * sig2 * (abs(s) ** (2 * h) + abs(t) ** (2 * h) - abs(t - s) ** (2 * h))
        assert abs(q - closed) < 1e-9 * max(1.0, abs(closed))

    def test_gram_scaling_law(self):
        # gram(ct, ct) = c^D gram(t,t) c^{D^T} * c
        params = tparams([0.3, -0.2])
        for c in (2.0, 10.0):
            lhs = kernels.time_gram(params, c * 1.0, c * 1.0)
            cD = matfun.matrix_power(params.hurst.D, c)
            rhs = c * cD @ kernels.time_gram(params, 1.0, 1.0) @ cD.T
            assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_half_branch_gram_finite(self):
        spec = matfun.validate_hurst(0.5 * np.eye(1))
        params = kernels.half_time_params(spec, np.array([[1.0]]), np.array([[0.5]]))
        val = kernels.time_gram(params, 1.0, 1.0)
        assert np.isfinite(val[0, 0]) and val[0, 0] > 0


class TestParsevalLink:
    @pytest.mark.parametrize("d", [0.3, 0.2])
    def test_time_vs_fourier_gram(self, d):
        # A = Gamma(D+I) e^{-i pi D / 2} M+ links the two domains:
        # time gram = fourier gram / (2 pi)
        D = np.diag([d])
        tpar = tparams([d])
        A = matfun.matrix_gamma(D + np.eye(1)) @ matfun.matrix_phase(D, +1)
        fpar = kernels.fourier_params(tpar.hurst, A)
        for (t1, t2) in ((1.0, 1.0), (1.0, 2.0)):
            gt = kernels.time_gram(tpar, t1, t2)
            gf = kernels.fourier_gram(fpar, t1, t2)
            assert np.max(np.abs(gt - gf / (2 * np.pi))) < 1e-6

    def test_p2_link(self):
        d = np.array([0.3, 0.15])
        D = np.diag(d)
        tpar = tparams(d)
        A = matfun.matrix_gamma(D + np.eye(2)) @ matfun.matrix_phase(D, +1)
        fpar = kernels.fourier_params(tpar.hurst, A)
        gt = kernels.time_gram(tpar, 1.0, 2.0)
        gf = kernels.fourier_gram(fpar, 1.0, 2.0)
        assert np.max(np.abs(gt - gf / (2 * np.pi))) < 1e-6


class TestVerifyFourierPair:
    def test_p1_fast_grid(self):
        spec = matfun.validate_hurst(np.array([[0.8]]))
        report = kernels.verify_fourier_pair(
            1.0, spec, kernels.FourierPairGrid(S=512.0, N=2 ** 17))
        assert report.residual < 1e-3

    def test_rejects_half_identity(self):
        spec = matfun.validate_hurst(0.5 * np.eye(1))
        with pytest.raises(InvalidRegime):
            kernels.verify_fourier_pair(1.0, spec)

    def test_grid_too_coarse_raises(self):
        spec = matfun.validate_hurst(np.array([[0.8]]))
        with pytest.raises(GridTooCoarse):
            kernels.verify_fourier_pair(
                1.0, spec, kernels.FourierPairGrid(S=64.0, N=2 ** 10), max_residual=1e-6)

    def test_p2_mixed_exponents(self):
        spec = matfun.validate_hurst(np.diag([0.8, 0.3]))
        report = kernels.verify_fourier_pair(
            1.0, spec, kernels.FourierPairGrid(S=512.0, N=2 ** 18))
        assert report.residual < 1e-2
