"""Cross-module invariants: scaling-limit monotonicity, the non-self-similar
witness, rescaled-ensemble variants, and Jordan-structured kernels."""

import numpy as np
import pytest

from oflm import covariance, kernels, levy, limits, matfun, mcstats, runner, simulate
from oflm.errors import HypothesisViolated


def tparams(d, mp_=None, mm=None):
    d = np.atleast_1d(np.asarray(d, float))
    p = len(d)
    spec = matfun.validate_hurst(np.diag(d + 0.5))
    mp_ = np.eye(p) if mp_ is None else np.asarray(mp_, float)
    mm = np.zeros((p, p)) if mm is None else np.asarray(mm, float)
    return kernels.general_time_params(spec, mp_, mm)


class TestGaussianization:
    def test_kurtosis_decreases_along_schedule(self):
        # increase-free sequence at the 3-SE level along c = 1, 4, 16, 64
        params = tparams([0.2])
        mu = levy.DiscreteMeasure(np.array([[1.0], [-1.0]]), np.array([0.5, 0.5]))
        rows = limits.kurtosis_scaling(params, mu, 1.0, [1.0, 4.0, 16.0, 64.0], 5, 20000)
        for prev, cur in zip(rows[:-1], rows[1:]):
            assert cur.estimated <= prev.estimated + 3 * (prev.se + cur.se), (prev, cur)

    def test_non_oss_witness(self):
        # for a delta-measure model the law of c^{-H} X(ct) at c = 16 differs
        # from that of X(t) beyond the chf confidence radius at some u
        params = tparams([0.2])
        mu = levy.DiscreteMeasure(np.array([[1.0]]), np.array([1.0]))
        times = [1.0]
        n = 20000
        base = simulate.generate_ensemble(
            simulate.MaofLmSimulator(params, mu, times), 61, n)
        resc = limits.rescaled_ensemble("ma_large", 16.0, times=times, master_seed=62,
                                        replications=n, time_params=params, mu=mu)
        us = np.array([[[u]] for u in (0.5, 1.0, 2.0, 4.0)])
        phi_base, _ = mcstats.empirical_chf(base, times, us)
        phi_resc, _ = mcstats.empirical_chf(resc, times, us)
        ci = 3 * np.sqrt(2.0 / n)
        assert np.max(np.abs(phi_base - phi_resc)) > ci


class TestRescaledVariants:
    def build_view(self):
        atoms = np.array([[0.5, 0.5], [-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5]])
        return levy.ComplexLevyView(levy.DiscreteMeasure(atoms, np.full(4, 0.5)))

    def test_rh_small_runs_and_rescales(self):
        spec = matfun.validate_hurst(np.array([[0.75]]))
        fpar = kernels.fourier_params(spec, np.array([[1.0 + 0.4j]]))
        ens = limits.rescaled_ensemble("rh_small", 0.25, times=[1.0, 2.0],
                                       master_seed=9, replications=64,
                                       fourier_params=fpar, view=self.build_view())
        assert ens.values.shape == (64, 2, 1)
        assert np.allclose(ens.grid, [1.0, 2.0])

    def test_rh_large_hypothesis_enforced(self):
        spec = matfun.validate_hurst(np.array([[0.4]]))
        fpar = kernels.fourier_params(spec, np.array([[1.0]]))
        with pytest.raises(HypothesisViolated):
            limits.rescaled_ensemble("rh_large", 4.0, times=[1.0],
                                     master_seed=9, replications=8,
                                     fourier_params=fpar, view=self.build_view(),
                                     B=np.array([[0.95]]))

    def test_ma_local_small_jump_default_scales(self):
        d, b = -0.2, 0.75
        params = tparams([d])
        mu = levy.TemperedOpStable(np.array([[b]]), np.array([[1.0], [-1.0]]),
                                   np.array([0.5, 0.5]), levy.Tempering("indicator", 1.0))
        ens = limits.rescaled_ensemble("ma_local", 0.01, times=[1.0], master_seed=3,
                                       replications=16, time_params=params, mu=mu)
        assert ens.values.shape == (16, 1, 1)
        assert np.all(np.isfinite(ens.values))


class TestJordanKernels:
    def test_time_kernel_with_jordan_hurst(self):
        # defective H = 0.7 I + nilpotent: kernel still evaluates through the
        # explicit Jordan path and obeys the scaling identity
        import scipy.linalg as sla
        H = np.array([[0.7, 1.0], [0.0, 0.7]])
        jf = matfun.JordanForm(P=np.eye(2), blocks=((0.7, 2),))
        spec = matfun.validate_hurst(H, jordan=jf)
        params = kernels.general_time_params(spec, np.eye(2), np.zeros((2, 2)))
        s_pts = np.linspace(-3, 3, 25)
        res = kernels.kernel_scaling_residual(2.0, 1.0, s_pts, params)
        assert res < 1e-10
        # absolute check against the dense matrix-exponential formula
        D = H - 0.5 * np.eye(2)
        t, s = 1.0, -0.8
        dense = sla.expm(np.log(t - s) * D) - sla.expm(np.log(-s) * D)
        assert np.max(np.abs(kernels.time_kernel(t, s, params) - dense)) < 1e-12

    def test_jordan_power_matches_dense_expm(self):
        H = np.array([[0.7, 1.0], [0.0, 0.7]])
        jf = matfun.JordanForm(P=np.eye(2), blocks=((0.7, 2),))
        for c in (0.3, 2.0, 9.0):
            a = matfun.matrix_power(H, c)
            b = matfun.matrix_power(None, c, jordan=jf)
            assert np.allclose(a, b, rtol=1e-12)

    def test_fourier_kernel_jordan_negation(self):
        # x^{-D} through the negated-Jordan path vs dense expm
        import scipy.linalg as sla
        H = np.array([[0.7, 1.0], [0.0, 0.7]])
        jf = matfun.JordanForm(P=np.eye(2), blocks=((0.7, 2),))
        spec = matfun.validate_hurst(H, jordan=jf)
        A = np.array([[1.0, 0.2j], [0.0, 1.0 - 0.5j]])
        fpar = kernels.fourier_params(spec, A)
        D = H - 0.5 * np.eye(2)
        for x in (0.4, 2.7):
            got = kernels.fourier_kernel(1.0, x, fpar)
            phi = (np.exp(1j * x) - 1) / (1j * x)
            expect = phi * sla.expm(-np.log(x) * D) @ A
            assert np.max(np.abs(got - expect)) < 1e-12


class TestOfbmRunner:
    def test_gaussian_kind_simulates_from_covariance(self, tmp_path):
        cfg = {
            "schema_version": 1,
            "process": {"kind": "ofbm", "hurst": [[0.7]],
                        "kernel": {"variant": "general", "M_plus": [[1.0]],
                                   "M_minus": [[1.0]]}},
            "measure": {"variant": "discrete",
                        "atoms": [{"z": [1.0], "w": 0.5}, {"z": [-1.0], "w": 0.5}]},
            "grid": {"times": [1.0, 2.0]},
            "simulation": {"replications": 5000},
        }
        results, _ = runner.run("simulate", cfg, seed=5, out_dir=tmp_path)
        assert (tmp_path / "ensemble.csv").exists()
        # Gaussian draws must reproduce the quadrature covariance
        import csv
        vals = {}
        with open(tmp_path / "ensemble.csv") as fh:
            for row in csv.DictReader(fh):
                vals.setdefault(float(row["t"]), []).append(float(row["X1"]))
        x1 = np.array(vals[1.0])
        from oflm import config as cfgmod
        parsed = cfgmod.parse_config(cfg)
        expect = covariance.cov_maofLm(1.0, 1.0, parsed.time_params, parsed.measure)[0, 0]
        assert abs(np.mean(x1 ** 2) - expect) < 4 * expect * np.sqrt(2 / len(x1))
