"""Finite second-moment Levy measures on R^q: discrete atoms, Gaussian jump
laws, and tempered operator-stable polar measures, plus the C^p <-> R^{2p}
identification used by the harmonizable noise.

All measure objects are immutable; sampling takes an explicit generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1
from scipy.integrate import quad_vec

from .errors import (
    FirstMomentDiverged,
    IncomparableVariants,
    RadialQuadratureDiverged,
    TruncationRequired,
    UnsupportedPushforward,
)
from .matfun import SpectralPowers
from .quadrature import compensated_wave, substitution_order

ATOM_TOL = 1e-9      # location / weight matching tolerance for discrete measures


# ---------------------------------------------------------------------------
# measure variants
# ---------------------------------------------------------------------------

def _canonical_atoms(atoms, weights, tol=ATOM_TOL):
    """Merge coincident atoms and sort lexicographically."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(weights, dtype=float)
    order = np.lexsort(atoms.T[::-1])
    atoms, weights = atoms[order], weights[order]
    out_a, out_w = [], []
    for a, w in zip(atoms, weights):
        if out_a and np.max(np.abs(a - out_a[-1])) <= tol:
            out_w[-1] += w
        else:
            out_a.append(a)
            out_w.append(w)
    return np.array(out_a), np.array(out_w)


@dataclass(frozen=True)
class DiscreteMeasure:
    """mu = sum_k w_k delta_{z_k}; no atom at the origin."""

    atoms: np.ndarray      # (n, q)
    weights: np.ndarray    # (n,)

    def __post_init__(self):
        atoms, weights = _canonical_atoms(self.atoms, self.weights)
        if np.any(weights <= 0):
            raise ValueError("atom weights must be positive")
        if np.any(np.linalg.norm(atoms, axis=1) <= ATOM_TOL):
            raise ValueError("Levy measure must not charge the origin")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self):
        return self.atoms.shape[1]


@dataclass(frozen=True)
class GaussianJumps:
    """mu(dz) = total_rate * N(0, Sigma)(dz): compound-Poisson Gaussian jumps."""

    Sigma: np.ndarray
    total_rate: float

    def __post_init__(self):
        S = np.asarray(self.Sigma, dtype=float)
        if self.total_rate <= 0:
            raise ValueError("total_rate must be positive")
        if np.min(np.linalg.eigvalsh(0.5 * (S + S.T))) < -1e-12:
            raise ValueError("Sigma must be positive semidefinite")
        object.__setattr__(self, "Sigma", 0.5 * (S + S.T))

    @property
    def dim(self):
        return self.Sigma.shape[0]


@dataclass(frozen=True)
class Tempering:
    """Radial tempering q(r): indicator 1{r <= r0} or exponential e^{-c r}."""

    kind: str            # 'indicator' | 'exponential'
    value: float         # r0 or c

    def __post_init__(self):
        if self.kind not in ("indicator", "exponential"):
            raise ValueError("tempering kind must be 'indicator' or 'exponential'")
        if self.value <= 0:
            raise ValueError("tempering parameter must be positive")

    def q(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "indicator":
            return (r <= self.value).astype(float)
        return np.exp(-self.value * r)

    @property
    def r_max(self):
        """Effective upper integration limit."""
        return self.value if self.kind == "indicator" else 60.0 / self.value


@dataclass(frozen=True)
class TemperedOpStable:
    """Polar measure mu(A) = sum_i lw_i int 1_A(r^B theta_i) q(r) dr/r^2 with
    Re eig(B) in (1/2, 1); the tempering keeps the second moment finite."""

    B: np.ndarray
    thetas: np.ndarray        # (n, q) unit vectors
    lweights: np.ndarray      # (n,)
    tempering: Tempering
    _powers: SpectralPowers = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        th = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        lw = np.atleast_1d(np.asarray(self.lweights, dtype=float))
        re = np.real(np.linalg.eigvals(B))
        if np.any(re <= 0.5) or np.any(re >= 1.0):
            raise ValueError(f"Re eig(B) must lie in (1/2, 1), got {re}")
        norms = np.linalg.norm(th, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ValueError("sphere atoms must be unit vectors")
        if np.any(lw <= 0):
            raise ValueError("sphere weights must be positive")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "lweights", lw)
        object.__setattr__(self, "_powers", SpectralPowers(B))
        m2 = _tos_second_moment(self)  # convergence check at construction
        if not np.all(np.isfinite(m2)):
            raise RadialQuadratureDiverged("radial second-moment integral diverged")

    @property
    def dim(self):
        return self.B.shape[0]

    @property
    def bmin(self):
        return float(np.min(np.real(np.linalg.eigvals(self.B))))


@dataclass(frozen=True)
class MixtureMeasure:
    """Finite sum of component measures (a Levy measure is additive)."""

    components: tuple

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixture needs at least one component")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise ValueError("mixture components must share dimension")

    @property
    def dim(self):
        return self.components[0].dim


# ---------------------------------------------------------------------------
# radial quadrature for tempered operator-stable measures
# ---------------------------------------------------------------------------

def _tos_radial_matrix(mu: TemperedOpStable, lo: float, hi: float, kind: str):
    """sum_i lw_i int_lo^hi f(r^B theta_i) q(r) dr / r^2 with f = outer
    ('zz^T'), identity ('z'), or a custom callable."""
    pw = mu._powers
    kappa = substitution_order(2.0 * mu.bmin - 2.0) if lo == 0.0 else 1

    def vecs(r):
        r = np.atleast_1d(r)
        P = pw.pow(r)                    # (n, q, q)
        return np.real(np.einsum("nij,aj->nai", P, mu.thetas))  # (n, atoms, q)

    def integrand(r):
        v = vecs(np.array([r]))[0]       # (atoms, q)
        qr = float(mu.tempering.q(r))
        if kind == "outer":
            out = np.einsum("a,ai,aj->ij", mu.lweights, v, v)
        else:
            out = mu.lweights @ v
        return out * qr / r ** 2

    if kappa > 1:
        split = min(1.0, hi)
        g = lambda y: integrand(y ** kappa) * (kappa * y ** (kappa - 1))
        head, _ = quad_vec(g, 0.0, split ** (1.0 / kappa), epsabs=1e-12, epsrel=1e-11)
        if hi > split:
            rest, _ = quad_vec(integrand, split, hi, epsabs=1e-12, epsrel=1e-11)
            head = head + rest
        return head
    val, _ = quad_vec(integrand, lo, hi, epsabs=1e-12, epsrel=1e-11)
    return val


def _tos_second_moment(mu: TemperedOpStable):
    return _tos_radial_matrix(mu, 0.0, mu.tempering.r_max, "outer")


def _tos_activity(mu: TemperedOpStable, eps: float) -> float:
    """sum_i lw_i int_eps^inf q(r) dr / r^2."""
    total = float(np.sum(mu.lweights))
    t = mu.tempering
    if t.kind == "indicator":
        return total * max(1.0 / eps - 1.0 / t.value, 0.0)
    c = t.value
    return total * (np.exp(-c * eps) / eps - c * exp1(c * eps))


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def second_moment(mu) -> np.ndarray:
    """int z z^T mu(dz), guaranteed finite by construction."""
    if isinstance(mu, DiscreteMeasure):
        return np.einsum("n,ni,nj->ij", mu.weights, mu.atoms, mu.atoms)
    if isinstance(mu, GaussianJumps):
        return mu.total_rate * mu.Sigma
    if isinstance(mu, TemperedOpStable):
        return _tos_second_moment(mu)
    if isinstance(mu, MixtureMeasure):
        return sum(second_moment(c) for c in mu.components)
    raise TypeError(f"unknown measure type {type(mu)!r}")


def _tos_symmetric_atoms(mu: TemperedOpStable) -> bool:
    a1, w1 = _canonical_atoms(mu.thetas, mu.lweights)
    a2, w2 = _canonical_atoms(-mu.thetas, mu.lweights)
    return a1.shape == a2.shape and np.allclose(a1, a2, atol=ATOM_TOL) \
        and np.allclose(w1, w2, atol=ATOM_TOL)


def mean_jump(mu) -> np.ndarray:
    """int z mu(dz); raises when the first absolute moment diverges and no
    symmetry cancels it."""
    if isinstance(mu, DiscreteMeasure):
        return mu.weights @ mu.atoms
    if isinstance(mu, GaussianJumps):
        return np.zeros(mu.dim)
    if isinstance(mu, TemperedOpStable):
        # the radial first moment int_0 r^{b-2} dr diverges for every
        # b < 1; only an exactly symmetric sphere measure has a mean (zero)
        if _tos_symmetric_atoms(mu):
            return np.zeros(mu.dim)
        raise FirstMomentDiverged(
            "tempered operator-stable first moment diverges at the origin;"
            " symmetrize the sphere atoms or work with a truncated view")
    if isinstance(mu, MixtureMeasure):
        return sum(mean_jump(c) for c in mu.components)
    raise TypeError(f"unknown measure type {type(mu)!r}")


def total_activity(mu) -> float:
    if isinstance(mu, DiscreteMeasure):
        return float(np.sum(mu.weights))
    if isinstance(mu, GaussianJumps):
        return float(mu.total_rate)
    if isinstance(mu, TemperedOpStable):
        return float("inf")
    if isinstance(mu, MixtureMeasure):
        return float(sum(total_activity(c) for c in mu.components))
    raise TypeError(f"unknown measure type {type(mu)!r}")


def pushforward(mu, T):
    """Image measure mu o T^{-1} (atoms map z -> T z)."""
    T = np.asarray(T, dtype=float)
    if isinstance(mu, DiscreteMeasure):
        return DiscreteMeasure(mu.atoms @ T.T, mu.weights.copy())
    if isinstance(mu, GaussianJumps):
        return GaussianJumps(T @ mu.Sigma @ T.T, mu.total_rate)
    if isinstance(mu, TemperedOpStable):
        if np.max(np.abs(T @ mu.B - mu.B @ T)) > 1e-10:
            raise UnsupportedPushforward("map must commute with the stability exponent B")
        new_thetas = mu.thetas @ T.T
        norms = np.linalg.norm(new_thetas, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise UnsupportedPushforward(
                "map must send sphere atoms to unit vectors (radial re-normalization"
                " beyond isometries is not representable with a shared tempering)")
        return TemperedOpStable(mu.B, new_thetas, mu.lweights.copy(), mu.tempering)
    if isinstance(mu, MixtureMeasure):
        return MixtureMeasure(tuple(pushforward(c, T) for c in mu.components))
    raise TypeError(f"unknown measure type {type(mu)!r}")


def levy_symbol(mu, u) -> complex:
    """psi(u) = int (e^{i<u,z>} - 1 - i<u,z>) mu(dz)."""
    u = np.asarray(u, dtype=float)
    if isinstance(mu, DiscreteMeasure):
        uz = mu.atoms @ u
        return complex(np.sum(mu.weights * (np.exp(1j * uz) - 1 - 1j * uz)))
    if isinstance(mu, GaussianJumps):
        return complex(mu.total_rate * (np.exp(-0.5 * u @ mu.Sigma @ u) - 1.0))
    if isinstance(mu, TemperedOpStable):
        pw = mu._powers
        kappa = substitution_order(2.0 * mu.bmin - 2.0)
        def integrand(r):
            v = np.real(np.einsum("ij,aj->ai", pw.pow_single(r), mu.thetas))  # (atoms, q)
            uz = v @ u
            qr = float(mu.tempering.q(r))
            vals = compensated_wave(uz) * mu.lweights
            return np.sum(vals) * qr / r ** 2
        hi = mu.tempering.r_max
        split = min(1.0, hi)
        g = lambda y: integrand(y ** kappa) * (kappa * y ** (kappa - 1))
        head, _ = quad_vec(g, 0.0, split ** (1.0 / kappa), epsabs=1e-11, epsrel=1e-10)
        if hi > split:
            rest, _ = quad_vec(integrand, split, hi, epsabs=1e-11, epsrel=1e-10)
            head = head + rest
        if not np.isfinite(head):
            raise RadialQuadratureDiverged("Levy symbol radial quadrature diverged")
        return complex(head)
    if isinstance(mu, MixtureMeasure):
        return sum(levy_symbol(c, u) for c in mu.components)
    raise TypeError(f"unknown measure type {type(mu)!r}")


def _symbol_probe_grid(q: int, n: int = 32):
    rng = np.random.default_rng(np.random.Philox(key=0xC0FFEE))
    pts = rng.normal(size=(n, q))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    radii = np.linspace(0.2, 2.5, n)
    return pts * radii[:, None]


def measure_equal(mu1, mu2, tol: float = 1e-9):
    """Decide mu1 == mu2; returns (bool, max_discrepancy).

    Discrete pairs match canonically sorted atoms; Gaussian pairs compare
    (Sigma, rate); anything else falls back to the Levy symbol on a fixed
    probe grid.
    """
    if mu1.dim != mu2.dim:
        raise IncomparableVariants("dimension mismatch")
    if isinstance(mu1, DiscreteMeasure) and isinstance(mu2, DiscreteMeasure):
        a1, w1 = mu1.atoms, mu1.weights
        a2, w2 = mu2.atoms, mu2.weights
        if len(w1) != len(w2):
            return False, float("inf")
        disc = max(float(np.max(np.linalg.norm(a1 - a2, axis=1))),
                   float(np.max(np.abs(w1 - w2))))
        return disc <= tol, disc
    if isinstance(mu1, GaussianJumps) and isinstance(mu2, GaussianJumps):
        disc = float(np.linalg.norm(mu1.Sigma - mu2.Sigma) + abs(mu1.total_rate - mu2.total_rate))
        return disc <= tol, disc
    try:
        grid = _symbol_probe_grid(mu1.dim)
        disc = max(abs(levy_symbol(mu1, u) - levy_symbol(mu2, u)) for u in grid)
    except (TypeError, RadialQuadratureDiverged) as exc:
        raise IncomparableVariants(str(exc)) from exc
    return disc <= tol, float(disc)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedView:
    """Finite-activity view of a measure after removing jumps below ``eps``
    (a no-op for finite-activity variants).

    ``small_jump_cov`` is the second moment of the removed part, available
    as a Gaussian small-jump substitute.
    """

    base: object
    eps: float
    activity: float
    jump_mean: np.ndarray          # mean of the normalized jump law
    small_jump_cov: np.ndarray
    discarded_mass_note: str = ""

    @property
    def dim(self):
        return self.base.dim if not isinstance(self.base, tuple) else self.base[0].dim

    def compensator_mean(self) -> np.ndarray:
        """int z mu_eps(dz) = activity * jump mean."""
        return self.activity * self.jump_mean


def truncate_small_jumps(mu, eps: float = 1e-3) -> TruncatedView:
    if isinstance(mu, (DiscreteMeasure, GaussianJumps)):
        act = total_activity(mu)
        mean = mean_jump(mu) / act if act > 0 else np.zeros(mu.dim)
        return TruncatedView(mu, 0.0, act, mean, np.zeros((mu.dim, mu.dim)))
    if isinstance(mu, TemperedOpStable):
        if eps <= 0:
            raise TruncationRequired("tempered operator-stable sampling needs eps > 0")
        act = _tos_activity(mu, eps)
        first = _tos_radial_matrix(mu, eps, mu.tempering.r_max, "mean") \
            if not _tos_symmetric_atoms(mu) else np.zeros(mu.dim)
        small = _tos_radial_matrix_small(mu, eps)
        note = f"removed jumps with radius < {eps:g} (second moment trace {np.trace(small):.3e})"
        return TruncatedView(mu, eps, act, first / act, small, note)
    if isinstance(mu, MixtureMeasure):
        views = tuple(truncate_small_jumps(c, eps) for c in mu.components)
        act = sum(v.activity for v in views)
        mean = sum(v.activity * v.jump_mean for v in views) / act
        small = sum(v.small_jump_cov for v in views)
        return TruncatedView(views, eps, act, mean, small)
    raise TypeError(f"unknown measure type {type(mu)!r}")


def _tos_radial_matrix_small(mu: TemperedOpStable, eps: float):
    """Second moment of the removed small-jump part (radius < eps)."""
    pw = mu._powers
    kappa = substitution_order(2.0 * mu.bmin - 2.0)
    def integrand(y):
        r = y ** kappa
        v = np.real(np.einsum("ij,aj->ai", pw.pow_single(r), mu.thetas))
        out = np.einsum("a,ai,aj->ij", mu.lweights, v, v)
        return out * float(mu.tempering.q(r)) / r ** 2 * (kappa * y ** (kappa - 1))
    val, _ = quad_vec(integrand, 0.0, eps ** (1.0 / kappa), epsabs=1e-13, epsrel=1e-11)
    return val


def _tos_sample_radii(mu: TemperedOpStable, eps: float, n: int, rng) -> np.ndarray:
    t = mu.tempering
    if t.kind == "indicator":
        r0 = t.value
        u = rng.random(n)
        inv = 1.0 / eps - u * (1.0 / eps - 1.0 / r0)
        return 1.0 / inv
    # exponential tempering: rejection from the untempered 1/r^2 proposal
    c = t.value
    out = np.empty(n)
    got = 0
    while got < n:
        m = max(n - got, 32)
        prop = eps / rng.random(m)
        acc = prop[rng.random(m) < np.exp(-c * prop)]
        take = min(len(acc), n - got)
        out[got:got + take] = acc[:take]
        got += take
    return out


def sample_jumps(view: TruncatedView, n: int, rng) -> np.ndarray:
    """n i.i.d. draws from the normalized jump law of the truncated measure."""
    base = view.base
    if isinstance(base, DiscreteMeasure):
        idx = rng.choice(len(base.weights), size=n, p=base.weights / np.sum(base.weights))
        return base.atoms[idx]
    if isinstance(base, GaussianJumps):
        L = np.linalg.cholesky(base.Sigma + 1e-15 * np.eye(base.dim))
        return rng.standard_normal((n, base.dim)) @ L.T
    if isinstance(base, TemperedOpStable):
        probs = base.lweights / np.sum(base.lweights)
        idx = rng.choice(len(probs), size=n, p=probs)
        radii = _tos_sample_radii(base, view.eps, n, rng)
        P = base._powers.pow(radii)                     # (n, q, q)
        return np.real(np.einsum("nij,nj->ni", P, base.thetas[idx]))
    if isinstance(base, tuple):   # mixture of truncated views
        acts = np.array([v.activity for v in base])
        idx = rng.choice(len(base), size=n, p=acts / np.sum(acts))
        out = np.empty((n, view.dim))
        for k, v in enumerate(base):
            m = idx == k
            if np.any(m):
                out[m] = sample_jumps(v, int(np.sum(m)), rng)
        return out
    raise TypeError(f"unknown truncated base {type(base)!r}")


def sample_jump(mu, rng, eps: float = 1e-3) -> np.ndarray:
    """One draw from mu / mu(R^q) (after small-jump truncation where needed)."""
    if isinstance(mu, TemperedOpStable) and eps <= 0:
        raise TruncationRequired("infinite-activity measure: supply eps > 0")
    view = truncate_small_jumps(mu, eps)
    return sample_jumps(view, 1, rng)[0]


# ---------------------------------------------------------------------------
# complex view (R^{2p} ~ C^p)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComplexLevyView:
    """Measure on R^{2p} read as a measure on C^p via z = z1 + i z2."""

    base: object

    def __post_init__(self):
        if self.base.dim % 2:
            raise ValueError("complex view requires even real dimension")

    @property
    def p(self):
        return self.base.dim // 2

    @property
    def dim(self):
        return self.base.dim


def conj_matrix(p: int) -> np.ndarray:
    J = np.eye(2 * p)
    J[p:, p:] *= -1.0
    return J


def rotation_matrix(p: int, theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    I = np.eye(p)
    return np.block([[c * I, -s * I], [s * I, c * I]])


def complex_map_matrix(C) -> np.ndarray:
    """Real 2p x 2p representation of z -> C z for complex C."""
    C = np.asarray(C, dtype=complex)
    return np.block([[C.real, -C.imag], [C.imag, C.real]])


def symmetrize_conjugate(view: ComplexLevyView) -> ComplexLevyView:
    """mu~ = (mu + mu o conj) / 2; idempotent."""
    p = view.p
    J = conj_matrix(p)
    base = view.base
    if isinstance(base, DiscreteMeasure):
        flipped = base.atoms @ J.T
        atoms = np.vstack([base.atoms, flipped])
        weights = np.concatenate([base.weights, base.weights]) / 2.0
        return ComplexLevyView(DiscreteMeasure(atoms, weights))
    if isinstance(base, GaussianJumps):
        SJ = J @ base.Sigma @ J.T
        if np.max(np.abs(SJ - base.Sigma)) <= 1e-12:
            return view
        half = GaussianJumps(base.Sigma, base.total_rate / 2.0)
        other = GaussianJumps(SJ, base.total_rate / 2.0)
        return ComplexLevyView(MixtureMeasure((half, other)))
    if isinstance(base, TemperedOpStable):
        try:
            pushed = pushforward(base, J)
        except UnsupportedPushforward:
            raise UnsupportedPushforward(
                "conjugation does not act on this operator-stable measure;"
                " choose B commuting with diag(I, -I) and conj-stable atoms")
        half = TemperedOpStable(base.B, base.thetas, base.lweights / 2.0, base.tempering)
        other = TemperedOpStable(pushed.B, pushed.thetas, pushed.lweights / 2.0, pushed.tempering)
        merged_thetas = np.vstack([half.thetas, other.thetas])
        merged_w = np.concatenate([half.lweights, other.lweights])
        th, lw = _canonical_atoms(merged_thetas, merged_w)
        return ComplexLevyView(TemperedOpStable(base.B, th, lw, base.tempering))
    if isinstance(base, MixtureMeasure):
        comps = tuple(symmetrize_conjugate(ComplexLevyView(c)).base for c in base.components)
        return ComplexLevyView(MixtureMeasure(comps))
    raise TypeError(f"unknown measure type {type(base)!r}")


def block_second_moments(view: ComplexLevyView):
    """(int z1 z1^T, int z2 z2^T, int z1 z2^T) of the real representation."""
    p = view.p
    M = second_moment(view.base)
    return M[:p, :p], M[p:, p:], M[:p, p:]


def complex_mean(view: ComplexLevyView) -> np.ndarray:
    m = mean_jump(view.base)
    return m[:view.p] + 1j * m[view.p:]


def rotation_invariance_report(view: ComplexLevyView, theta_grid) -> float:
    """max over the grid of the measure_equal discrepancy between mu and its
    rotation e^{i theta}; reports, does not decide all-theta invariance."""
    worst = 0.0
    for th in theta_grid:
        R = rotation_matrix(view.p, float(th))
        _, disc = measure_equal(view.base, pushforward(view.base, R))
        worst = max(worst, disc)
    return worst


# ---------------------------------------------------------------------------
# moment normalization helpers
# ---------------------------------------------------------------------------

def _inv_sqrt_psd(M, tol=1e-12):
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if np.min(w) <= tol * max(1.0, np.max(w)):
        raise ValueError("moment matrix is rank deficient; cannot normalize")
    return V @ np.diag(w ** -0.5) @ V.T


def normalize_time_measure(mu):
    """Rescale so that int z z^T mu(dz) = I."""
    Q = _inv_sqrt_psd(second_moment(mu))
    return pushforward(mu, Q)


def normalize_complex_measure(view: ComplexLevyView) -> ComplexLevyView:
    """Rescale so that 4 int z1 z1^T = I = 4 int z2 z2^T (block-diagonal
    real-linear change; complex-linear when both blocks coincide)."""
    S_R, S_I, _ = block_second_moments(view)
    T = np.zeros((2 * view.p, 2 * view.p))
    T[:view.p, :view.p] = _inv_sqrt_psd(4.0 * S_R)
    T[view.p:, view.p:] = _inv_sqrt_psd(4.0 * S_I)
    return ComplexLevyView(pushforward(view.base, T))
