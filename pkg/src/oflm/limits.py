"""Scaling-limit experiments: matrix-rescaled ensembles, distance-to-Gaussian
reports, the exact 1/c kurtosis law, and the operator-stable local/asymptotic
limit characteristic function (scalar case)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, quad_vec

from . import kernels, levy, matfun, mcstats, simulate
from .errors import (
    FourthMomentDiverged,
    HypothesisViolated,
    NonCommutingUnsupported,
)
from .quadrature import (
    binom_series_coeffs,
    compensated_wave,
    integrate_with_singular_points,
    osc_power_tail,
    substitution_order,
)


def local_exponent(H, B) -> np.ndarray:
    """Rescaling exponent of the small-scale operator-stable limit of the
    moving-average family: H + (B - I/2)."""
    H = np.asarray(H, dtype=float)
    return H + np.asarray(B, dtype=float) - 0.5 * np.eye(H.shape[0])


def asymptotic_exponent(H, B) -> np.ndarray:
    """Rescaling exponent of the large-scale operator-stable limit of the
    harmonizable family: H + (I/2 - B)."""
    H = np.asarray(H, dtype=float)
    return H + 0.5 * np.eye(H.shape[0]) - np.asarray(B, dtype=float)


def _sorted_re_eigs(M):
    return np.sort(np.real(np.linalg.eigvals(np.asarray(M, dtype=float))))


def check_local_limit_hypotheses(H, B) -> None:
    """Commutation and eigenvalue constraints of the small-scale
    operator-stable limit (moving-average side)."""
    H = np.asarray(H, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.max(np.abs(H @ B - B @ H)) > 1e-10:
        raise HypothesisViolated("H and B must commute")
    eH, eB = _sorted_re_eigs(H), _sorted_re_eigs(B)
    if eH[-1] - 0.5 + eB[-1] >= 1.0:
        raise HypothesisViolated(
            f"Re lambda_p(H - I/2) + Re lambda_p(B) = {eH[-1] - 0.5 + eB[-1]:.4f} must be < 1")
    if eH[0] - 0.5 + eB[0] <= 0.0:
        raise HypothesisViolated(
            f"Re lambda_1(H - I/2) + Re lambda_1(B) = {eH[0] - 0.5 + eB[0]:.4f} must be > 0")


def check_asymptotic_limit_hypotheses(H, B, A=None) -> None:
    """Constraints of the large-scale operator-stable limit (harmonizable
    side)."""
    H = np.asarray(H, dtype=float)
    B = np.asarray(B, dtype=float)
    if np.max(np.abs(H @ B - B @ H)) > 1e-10:
        raise HypothesisViolated("H and B must commute")
    if A is not None:
        A = np.asarray(A, dtype=complex)
        if np.max(np.abs(A @ B - B @ A)) > 1e-10:
            raise HypothesisViolated("A and B must commute")
    eH, eB = _sorted_re_eigs(H), _sorted_re_eigs(B)
    if eH[0] + 0.5 - eB[-1] <= 0.0:
        raise HypothesisViolated(
            f"Re lambda_1(H) + (1/2 - Re lambda_p(B)) = {eH[0] + 0.5 - eB[-1]:.4f} must be > 0")
    if eH[-1] + 0.5 - eB[0] >= 1.0:
        raise HypothesisViolated(
            f"Re lambda_p(H) + (1/2 - Re lambda_1(B)) = {eH[-1] + 0.5 - eB[0]:.4f} must be < 1")


def _rescale_values(ens, R, times):
    vals = np.einsum("ij,rtj->rti", R, ens.values)
    return simulate.Ensemble(np.asarray(times, dtype=float), vals,
                             ens.master_seed, ens.config_digest)


def rescaled_ensemble(kind: str, factor: float, *, times, master_seed: int,
                      replications: int, time_params=None, mu=None,
                      fourier_params=None, view=None, B=None,
                      threads: int = 1, sim_options: dict | None = None):
    """Ensemble of matrix-rescaled paths on the reference grid ``times``.

    kinds: 'ma_large'  c^{-H} X(c t)            (Gaussian large-scale limit)
           'rh_small'  eps^{-H} X~(eps t)       (Gaussian small-scale limit)
           'ma_local'  eps^{-H1} X(eps t),  H1 = H + B - I/2
           'rh_large'  c^{-H2} X~(c t),     H2 = H + I/2 - B
    The grid and window rescale with the factor, keeping per-path cost flat.
    """
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    times = np.asarray(times, dtype=float)
    opts = dict(sim_options or {})
    scaled = factor * times
    if kind in ("ma_large", "ma_local"):
        if time_params is None or mu is None:
            raise ValueError(f"{kind} needs time_params and mu")
        H = time_params.hurst.H
        if kind == "ma_local":
            B_eff = mu.B if isinstance(mu, levy.TemperedOpStable) else B
            if B_eff is None:
                raise ValueError("ma_local needs a tempered operator-stable mu (or B)")
            check_local_limit_hypotheses(H, B_eff)
            expo = local_exponent(H, B_eff)
            opts.setdefault("small_jump_eps", 0.02 * factor)
        else:
            expo = H
        sim = simulate.MaofLmSimulator(time_params, mu, scaled, **opts)
        ens = simulate.generate_ensemble(sim, master_seed, replications, threads=threads)
    elif kind in ("rh_small", "rh_large"):
        if fourier_params is None or view is None:
            raise ValueError(f"{kind} needs fourier_params and view")
        H = fourier_params.hurst.H
        if kind == "rh_large":
            base = view.base
            B_eff = B
            if B_eff is None and isinstance(base, levy.TemperedOpStable):
                # the real 2p x 2p exponent is B (+) B; recover the p x p block
                B_eff = base.B[:fourier_params.p, :fourier_params.p]
            if B_eff is None:
                raise ValueError("rh_large needs the stability exponent B")
            check_asymptotic_limit_hypotheses(H, B_eff, fourier_params.A)
            expo = asymptotic_exponent(H, B_eff)
            opts.setdefault("small_jump_eps", 0.02 / factor)
        else:
            expo = H
        sim = simulate.RhofLmSimulator(fourier_params, view, scaled, **opts)
        ens = simulate.generate_ensemble(sim, master_seed, replications, threads=threads)
    else:
        raise ValueError(f"unknown rescaling kind {kind!r}")
    R = matfun.matrix_power(expo, 1.0 / factor)   # factor^{-expo}
    return _rescale_values(ens, R, times)


@dataclass(frozen=True)
class GaussianLimitReport:
    cov_max_se_units: float
    chf_max_discrepancy: float
    chf_ci: float
    kurtosis: tuple            # ((value, se) per coordinate at the last time)

    @property
    def within_ci(self):
        return self.cov_max_se_units <= 3.5 and self.chf_max_discrepancy <= self.chf_ci


def gaussian_limit_distance(ens, times, joint_target, u_vectors) -> GaussianLimitReport:
    """Distance of an ensemble from the centered Gaussian law with the given
    joint covariance over ``times`` (a (len(times) p) x (len(times) p) gram)."""
    times = np.asarray(times, dtype=float)
    p = ens.p
    joint_target = np.asarray(joint_target, dtype=float)
    worst = 0.0
    for i, ti in enumerate(times):
        for j, tj in enumerate(times):
            est, se = mcstats.sample_cov(ens, ti, tj)
            tgt = joint_target[i * p:(i + 1) * p, j * p:(j + 1) * p]
            ratio = np.abs(est - tgt) / np.maximum(se, 1e-300)
            worst = max(worst, float(np.max(ratio)))
    us = np.asarray(u_vectors, dtype=float)
    if us.ndim == 2:
        us = us[None]
    emp, ci = mcstats.empirical_chf(ens, times, us)
    gauss = np.array([np.exp(-0.5 * u.ravel() @ joint_target @ u.ravel()) for u in us])
    chf_disc = float(np.max(np.abs(emp - gauss)))
    kurt = tuple(mcstats.excess_kurtosis(ens, times[-1], k) for k in range(p))
    return GaussianLimitReport(worst, chf_disc, ci, kurt)


# ---------------------------------------------------------------------------
# kurtosis scaling (p = 1)
# ---------------------------------------------------------------------------

def fourth_moment_scalar(mu) -> float:
    """int z^4 mu(dz) for a measure on R."""
    if mu.dim != 1:
        raise ValueError("fourth moment helper is univariate")
    if isinstance(mu, levy.DiscreteMeasure):
        return float(np.sum(mu.weights * mu.atoms[:, 0] ** 4))
    if isinstance(mu, levy.GaussianJumps):
        return float(3.0 * mu.total_rate * mu.Sigma[0, 0] ** 2)
    if isinstance(mu, levy.TemperedOpStable):
        b = float(np.real(mu.B[0, 0]))
        val, _ = quad(lambda r: r ** (4 * b - 2) * float(mu.tempering.q(r)),
                      0.0, mu.tempering.r_max, limit=200)
        return float(np.sum(mu.lweights) * val)
    if isinstance(mu, levy.MixtureMeasure):
        return sum(fourth_moment_scalar(c) for c in mu.components)
    raise TypeError(f"unknown measure type {type(mu)!r}")


def kernel_fourth_integral(params: kernels.TimeKernelParams, t: float) -> float:
    """int g_t(s)^4 ds for a scalar kernel."""
    if params.p != 1:
        raise ValueError("fourth-power kernel integral is univariate")
    d = float(np.real(params.powers.eigenvalues[0]))
    if 4 * d <= -1.0:
        raise FourthMomentDiverged(
            f"int g^4 diverges at the kernel break points for d = {d:.3f} <= -1/4")
    W = 50.0 * max(1.0, abs(t))
    kappa = substitution_order(4 * d) if d < 0 else 1

    def f(u):
        return kernels.time_kernel_batch(t, np.array([u]), params)[0, 0, 0] ** 4

    def f_off(base, w):
        return kernels.time_kernel_offset_batch(t, base, np.array([w]), params)[0, 0, 0] ** 4

    return float(integrate_with_singular_points(
        f, f_off, -W, W, singular_points=(0.0, float(t)), kappa=kappa, tol=1e-10))


@dataclass(frozen=True)
class KurtosisRow:
    c: float
    predicted: float
    estimated: float
    se: float


def predicted_excess_kurtosis(params, mu, t: float) -> float:
    """kappa_4(t) / Var(t)^2 = (int g^4 m4) / (int g^2 m2)^2 for p = 1."""
    m4 = fourth_moment_scalar(mu)
    if not np.isfinite(m4):
        raise FourthMomentDiverged("measure fourth moment diverges")
    m2 = levy.second_moment(mu)[0, 0]
    g4 = kernel_fourth_integral(params, t)
    g2 = kernels.time_gram(params, t, t)[0, 0]
    return float(g4 * m4 / (g2 * m2) ** 2)


def kurtosis_scaling(params, mu, t: float, c_list, master_seed: int,
                     replications: int, threads: int = 1,
                     sim_options: dict | None = None):
    """Excess kurtosis of c^{-h} X(c t) follows the exact 1/c law; returns
    one (c, predicted, estimated, se) row per scale."""
    base = predicted_excess_kurtosis(params, mu, t)
    rows = []
    for k, c in enumerate(c_list):
        sim = simulate.MaofLmSimulator(params, mu, [c * t], **(sim_options or {}))
        ens = simulate.generate_ensemble(sim, master_seed + k, replications, threads=threads)
        est, se = mcstats.excess_kurtosis(ens, c * t, 0)
        rows.append(KurtosisRow(float(c), base / float(c), est, se))
    return rows


# ---------------------------------------------------------------------------
# operator-stable limit chf (scalar case)
# ---------------------------------------------------------------------------

def _stable_inner_constant(b: float, sign: float, tol: float = 1e-11) -> complex:
    """I(sign) = int_0^inf (e^{i sign xi^b} - 1 - i sign xi^b) xi^{-2} d xi.

    By the scaling substitution xi -> xi |y|^{-1/b}, the full inner integral
    at argument y is I(sign(y)) |y|^{1/b}."""
    X = 400.0

    def f(xi):
        y = sign * xi ** b
        return compensated_wave(y) / xi ** 2

    # integrand ~ -y^2/2 xi^{-2} ~ xi^{2b-2} near 0: soften by substitution
    kappa = substitution_order(2 * b - 2)
    g = lambda w: f(w ** kappa) * (kappa * w ** (kappa - 1))
    head, _ = quad_vec(g, 0.0, 1.0, epsabs=tol, epsrel=1e-12)
    body, _ = quad_vec(f, 1.0, X, epsabs=tol, epsrel=1e-12, limit=2000)
    # tail: the -1 and -i y terms integrate in closed form; the oscillatory
    # e^{i sign xi^b} term becomes a power oscillation under s = xi^b
    tail = -(1.0 / X) - 1j * sign * X ** (b - 1.0) / (1.0 - b)
    tail += (1.0 / b) * osc_power_tail(-1.0 / b - 1.0, X ** b, np.array([-sign]))[0]
    return complex(head + body + tail)


def _scalar_tail_coeffs(params, times, u, side, order=3):
    """a(v) = sum_j u_j g_{t_j}(v) ~ sum_m C_m |v|^{d-m} on one flank."""
    d = float(np.real(params.powers.eigenvalues[0]))
    M = float(params.M_plus[0, 0]) if side == "left" else float(params.M_minus[0, 0])
    bins = binom_series_coeffs(d, order)[1:]
    C = np.zeros(order, dtype=float)
    for j, tj in enumerate(times):
        tt = tj if side == "left" else -tj
        C += u[j] * M * np.real(bins) * tt ** np.arange(1, order + 1)
    return C


def opstable_limit_chf(u_values, times, B: float, sphere_atoms, params,
                       V: float | None = None, tol: float = 1e-9) -> np.ndarray:
    """Characteristic function of the small-scale operator-stable limit of a
    scalar moving-average model at (u, times):

        exp sum_theta w_theta int_R I(sign(theta a(v))) |a(v)|^{1/B} dv,

    where a(v) = sum_j u_j g_{t_j}(v) and I(+-1) is the radial constant of
    the untempered stable integral, evaluated by adaptive quadrature.  The
    |v| > V flanks use the kernel's asymptotic expansion (second order).

    ``sphere_atoms``: list of (theta in {-1, +1}, weight).
    """
    if params.p != 1:
        raise NonCommutingUnsupported("operator-stable limit chf implemented for p = 1"
                                      " (diagonal commuting reductions decompose to it)")
    b = float(B)
    if not 0.5 < b < 1.0:
        raise ValueError("B must lie in (1/2, 1)")
    check_local_limit_hypotheses(params.hurst.H, np.array([[b]]))
    alpha = 1.0 / b
    times = np.asarray(times, dtype=float)
    u_values = np.asarray(u_values, dtype=float)
    if u_values.ndim == 1:
        u_values = u_values[:, None]
    d = float(np.real(params.powers.eigenvalues[0]))
    scale = max(1.0, float(np.max(np.abs(times))))
    V = V or 60.0 * scale
    I_plus = _stable_inner_constant(b, +1.0)
    I_minus = _stable_inner_constant(b, -1.0)

    def inner(y):
        if y == 0.0:
            return 0.0 + 0j
        return (I_plus if y > 0 else I_minus) * abs(y) ** alpha

    pts = [0.0] + [float(t) for t in times]
    kappa = substitution_order(alpha * d) if d < 0 else 1
    out = np.empty(len(u_values), dtype=complex)
    for k, u in enumerate(u_values):
        def f(v):
            a = sum(float(kernels.time_kernel_batch(float(tj), np.array([v]), params)[0, 0, 0])
                    * u[j] for j, tj in enumerate(times))
            return np.array(sum(w * inner(th * a) for th, w in sphere_atoms), dtype=complex)

        def f_off(base, w):
            a = sum(float(kernels.time_kernel_offset_batch(float(tj), base, np.array([w]),
                                                           params)[0, 0, 0]) * u[j]
                    for j, tj in enumerate(times))
            return np.array(sum(wt * inner(th * a) for th, wt in sphere_atoms), dtype=complex)

        core = integrate_with_singular_points(f, f_off, -V, V, singular_points=pts,
                                              kappa=kappa, tol=tol)
        tail = 0.0 + 0j
        for side in ("left", "right"):
            C = _scalar_tail_coeffs(params, times, u, side)
            if C[0] == 0.0:
                continue
            x1, x2 = C[1] / C[0], C[2] / C[0]
            corr = (1.0, alpha * x1, alpha * x2 + 0.5 * alpha * (alpha - 1.0) * x1 ** 2)
            lead = alpha * (d - 1.0)
            if lead >= -1.0:
                raise HypothesisViolated("outer tail integral diverges (alpha (1-d) <= 1)")
            J = sum(w * inner(th * np.sign(C[0])) for th, w in sphere_atoms)
            acc = 0.0
            for m, cm in enumerate(corr):
                acc += cm * V ** (lead - m + 1.0) / (m - 1.0 - lead)
            tail += J * abs(C[0]) ** alpha * acc
        out[k] = np.exp(core + tail)
    return out
