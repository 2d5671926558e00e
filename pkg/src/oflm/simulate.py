"""Seeded path simulation of moving-average and harmonizable operator
fractional Levy motion, plus joint-Gaussian baseline paths.

Each path is a compensated compound-Poisson sum over a finite window.  The
truncated pieces are small but not ignorable at the advertised tolerances,
so both truncations are repaired by zero-mean Gaussian surrogates with the
exact second moment of what was removed: the spatial far tail of the kernel
(beyond the window) and, for infinite-activity noise, the small-jump part.
Both substitutions are optional and reported in the window's error estimate.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, levy
from .errors import NotPSD, WindowTooSmall
from .kernels import FourierKernelParams, TimeKernelParams

PSD_EIG_TOL = 1e-10


def replication_rng(master_seed: int, replication: int) -> np.random.Generator:
    """Counter-based stream for one replication; independent of execution
    order across replications and thread counts."""
    seq = np.random.SeedSequence(entropy=[int(master_seed), int(replication)])
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class Window:
    """Truncation window for the integration variable, with the attached
    relative error estimate (fraction of per-time standard deviation that is
    carried by the truncated region and its Gaussian surrogate)."""

    lo: float
    hi: float
    tail_std_fraction: float = float("nan")

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("window requires lo < hi")

    @property
    def length(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class PoissonField:
    """Marked points of one window realization of the Poisson measure."""

    omegas: np.ndarray      # (n,)
    marks: np.ndarray       # (n, q)
    intensity_mass: float   # window length x activity
    window: Window


@dataclass(frozen=True)
class SamplePath:
    grid: np.ndarray
    values: np.ndarray      # (len(grid), p)
    seed: int
    config_digest: str


@dataclass(frozen=True)
class Ensemble:
    """Replicated paths on a common grid with common provenance."""

    grid: np.ndarray
    values: np.ndarray      # (replications, len(grid), p)
    master_seed: int
    config_digest: str

    @property
    def replications(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[2]

    def path(self, r: int) -> SamplePath:
        return SamplePath(self.grid, self.values[r], self.master_seed, self.config_digest)


def sample_field(mu, window: Window, rng, eps: float = 1e-3,
                 view: levy.TruncatedView | None = None) -> PoissonField:
    """One realization of the (truncated) Poisson random measure on the
    window: Poisson count, i.i.d. uniform locations, i.i.d. marks."""
    view = view or levy.truncate_small_jumps(mu, eps)
    mass = window.length * view.activity
    n = int(rng.poisson(mass)) if mass > 0 else 0
    omegas = rng.uniform(window.lo, window.hi, size=n)
    marks = levy.sample_jumps(view, n, rng) if n else np.zeros((0, view.dim))
    return PoissonField(omegas, marks, mass, window)


def _psd_factor(C, label="covariance"):
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    floor = -PSD_EIG_TOL * max(1.0, float(np.max(np.abs(w))))
    if np.min(w) < floor:
        raise NotPSD(f"{label} eigenvalue {np.min(w):.3e} below tolerance")
    return V @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


class MaofLmSimulator:
    """Moving-average paths X(t) = sum_i g_t(s_i) z_i - int_window g_t ds . m
    (+ Gaussian surrogates), precomputed once per configuration."""

    def __init__(self, params: TimeKernelParams, mu, grid, window: Window | None = None,
                 *, small_jump_eps: float = 1e-3, gaussian_tail: bool = True,
                 gaussian_small_jumps: bool = True, config_digest: str = "",
                 tail_budget: float = 0.5, edge_factor: float = 10.0):
        grid = np.asarray(grid, dtype=float)
        self.params = params
        self.grid = grid
        self.digest = config_digest
        self.view = levy.truncate_small_jumps(mu, small_jump_eps)
        moment = levy.second_moment(mu)
        # the spatial scale follows the grid so that rescaled (local-limit)
        # experiments keep per-path cost flat
        scale = max(float(np.max(np.abs(grid))) if grid.size else 1.0, 1e-9)
        right_active = params.variant == "half" or np.any(params.M_minus)
        if window is None:
            lo = min(0.0, float(np.min(grid))) - edge_factor * scale
            hi = max(0.0, float(np.max(grid))) + (edge_factor * scale if right_active else 1e-9)
            window = Window(lo, hi)
        pts = [0.0] + [float(t) for t in grid]
        if window.lo > min(pts) - 2 * scale or (right_active and window.hi < max(pts) + 2 * scale):
            raise WindowTooSmall("window edges must clear the grid by 2x its scale")
        W_left = -window.lo
        W_right = max(window.hi, 2.0 * scale)

        nt, p = len(grid), params.p
        tails = np.zeros((nt * p, nt * p))
        for j, tj in enumerate(grid):
            for k in range(j, nt):
                T = kernels.time_tail_gram(params, float(tj), float(grid[k]),
                                           W_left, W_right, weight=moment)
                tails[j * p:(j + 1) * p, k * p:(k + 1) * p] = T
                tails[k * p:(k + 1) * p, j * p:(j + 1) * p] = T.T
        full_diag = [kernels.time_gram(params, float(t), float(t), weight=moment, tol=1e-8)
                     for t in grid]
        tail_frac = 0.0
        for j in range(nt):
            tot = np.trace(full_diag[j])
            if tot > 0:
                tail_frac = max(tail_frac, float(np.sqrt(max(0.0,
                    np.trace(tails[j * p:(j + 1) * p, j * p:(j + 1) * p])) / tot)))
        if tail_frac > tail_budget:
            raise WindowTooSmall(
                f"window truncation carries {tail_frac:.2%} of path standard deviation,"
                f" budget is {tail_budget:.2%}")
        # with the surrogate the truncated variance is restored exactly;
        # without it tail_frac is a direct covariance bias the caller accepts
        self.window = Window(window.lo, window.hi, tail_frac)
        self._tail_factor = _psd_factor(tails, "tail surrogate") if gaussian_tail else None

        small = self.view.small_jump_cov
        self._small_factor = None
        if gaussian_small_jumps and np.trace(small) > 0:
            cov = np.zeros((nt * p, nt * p))
            for j, tj in enumerate(grid):
                for k in range(j, nt):
                    G = kernels.time_gram(params, float(tj), float(grid[k]), weight=small)
                    T = kernels.time_tail_gram(params, float(tj), float(grid[k]),
                                               W_left, W_right, weight=small)
                    cov[j * p:(j + 1) * p, k * p:(k + 1) * p] = G - T
                    cov[k * p:(k + 1) * p, j * p:(j + 1) * p] = (G - T).T
            self._small_factor = _psd_factor(cov, "small-jump surrogate")

        m = self.view.compensator_mean()
        self._comp = np.zeros((nt, p))
        if np.any(np.abs(m) > 0):
            for j, tj in enumerate(grid):
                Wint = kernels.time_kernel_window_integral(params, float(tj),
                                                           window.lo, window.hi)
                self._comp[j] = Wint @ m

    def path(self, rng, seed: int = 0, field: PoissonField | None = None) -> SamplePath:
        nt, p = len(self.grid), self.params.p
        if field is None:
            field = sample_field(None, self.window, rng, view=self.view)
        vals = np.zeros((nt, p))
        if len(field.omegas):
            for j, tj in enumerate(self.grid):
                G = kernels.time_kernel_batch(float(tj), field.omegas, self.params)
                vals[j] = np.einsum("nij,nj->i", G, field.marks)
        vals -= self._comp
        if self._tail_factor is not None:
            vals += (self._tail_factor @ rng.standard_normal(self._tail_factor.shape[1])
                     ).reshape(nt, p)
        if self._small_factor is not None:
            vals += (self._small_factor @ rng.standard_normal(self._small_factor.shape[1])
                     ).reshape(nt, p)
        return SamplePath(self.grid, vals, seed, self.digest)


class RhofLmSimulator:
    """Harmonizable paths X(t) = sum_i 2 Re(g~_t(x_i) z_i) - compensator
    (+ Gaussian surrogates); the window is symmetric about 0."""

    def __init__(self, params: FourierKernelParams, view: levy.ComplexLevyView,
                 grid, window: Window | None = None, *, small_jump_eps: float = 1e-3,
                 gaussian_tail: bool = True, gaussian_small_jumps: bool = True,
                 config_digest: str = "", tail_budget: float = 0.5,
                 freq_factor: float = 60.0):
        grid = np.asarray(grid, dtype=float)
        self.params = params
        self.grid = grid
        self.digest = config_digest
        self.cview = view
        self.view = levy.truncate_small_jumps(view.base, small_jump_eps)
        p = params.p
        nonzero = np.abs(grid[grid != 0.0])
        tmin = float(np.min(nonzero)) if nonzero.size else 1.0
        omegas = set()
        for tj in grid:
            for tk in grid:
                for w in (abs(tj + tk), abs(tj - tk), abs(tj), abs(tk)):
                    if w > 1e-12:
                        omegas.add(w)
        min_omega = min(omegas) if omegas else 1.0
        if window is None:
            X = max(freq_factor / tmin, 30.0 / min_omega, 4.0)
            window = Window(-X, X)
        if abs(window.lo + window.hi) > 1e-12 * window.length:
            raise WindowTooSmall("harmonizable window must be symmetric about 0")
        X = window.hi
        if X * min_omega < 25.0:
            raise WindowTooSmall("window too small for the analytic frequency tail"
                                 f" (X min|omega| = {X * min_omega:.2f} < 25)")

        M2 = levy.second_moment(view.base) - self.view.small_jump_cov
        S_R, S_I = M2[:p, :p], M2[p:, p:]
        A = params.A
        P = A @ (S_R - S_I) @ A.T
        Q = A @ (S_R + S_I) @ np.conj(A).T

        nt = len(grid)
        tails = np.zeros((nt * p, nt * p))
        fulls = np.zeros((nt * p, nt * p))
        for j, tj in enumerate(grid):
            for k in range(j, nt):
                T = kernels.fourier_tail_quadratic_form(params, float(tj), float(grid[k]), P, Q, X)
                tails[j * p:(j + 1) * p, k * p:(k + 1) * p] = T
                tails[k * p:(k + 1) * p, j * p:(j + 1) * p] = T.T
        tail_frac = 0.0
        for j, tj in enumerate(grid):
            if tj == 0.0:
                continue
            G = kernels.fourier_quadratic_form(params, float(tj), float(tj), P, Q, tol=1e-8)
            tot = np.trace(G)
            if tot > 0:
                tail_frac = max(tail_frac, float(np.sqrt(max(0.0,
                    np.trace(tails[j * p:(j + 1) * p, j * p:(j + 1) * p])) / tot)))
        if tail_frac > tail_budget:
            raise WindowTooSmall(
                f"frequency window carries {tail_frac:.2%} of path standard deviation,"
                f" budget is {tail_budget:.2%}")
        self.window = Window(window.lo, window.hi, tail_frac)
        self._tail_factor = _psd_factor(tails, "tail surrogate") if gaussian_tail else None

        small = self.view.small_jump_cov
        self._small_factor = None
        if gaussian_small_jumps and np.trace(small) > 0:
            sR, sI = small[:p, :p], small[p:, p:]
            Ps = A @ (sR - sI) @ A.T
            Qs = A @ (sR + sI) @ np.conj(A).T
            cov = np.zeros((nt * p, nt * p))
            for j, tj in enumerate(grid):
                for k in range(j, nt):
                    G = kernels.fourier_quadratic_form(params, float(tj), float(grid[k]),
                                                       Ps, Qs, tol=1e-9)
                    T = kernels.fourier_tail_quadratic_form(params, float(tj), float(grid[k]),
                                                            Ps, Qs, X)
                    cov[j * p:(j + 1) * p, k * p:(k + 1) * p] = G - T
                    cov[k * p:(k + 1) * p, j * p:(j + 1) * p] = (G - T).T
            self._small_factor = _psd_factor(cov, "small-jump surrogate")

        m = self.view.compensator_mean()
        mc = m[:p] + 1j * m[p:]
        self._comp = np.zeros((nt, p))
        if np.any(np.abs(m) > 0):
            for j, tj in enumerate(grid):
                Wint = kernels.fourier_kernel_window_integral(params, float(tj), X)
                self._comp[j] = 2.0 * np.real(Wint @ mc)

    def path(self, rng, seed: int = 0, field: PoissonField | None = None) -> SamplePath:
        nt, p = len(self.grid), self.params.p
        if field is None:
            field = sample_field(None, self.window, rng, view=self.view)
        vals = np.zeros((nt, p))
        if len(field.omegas):
            z = field.marks[:, :p] + 1j * field.marks[:, p:]
            for j, tj in enumerate(self.grid):
                G = kernels.fourier_kernel_batch(float(tj), field.omegas, self.params)
                vals[j] = 2.0 * np.real(np.einsum("nij,nj->i", G, z))
        vals -= self._comp
        if self._tail_factor is not None:
            vals += (self._tail_factor @ rng.standard_normal(self._tail_factor.shape[1])
                     ).reshape(nt, p)
        if self._small_factor is not None:
            vals += (self._small_factor @ rng.standard_normal(self._small_factor.shape[1])
                     ).reshape(nt, p)
        return SamplePath(self.grid, vals, seed, self.digest)


def maofLm_path(params, mu, grid, window, rng, **options) -> SamplePath:
    return MaofLmSimulator(params, mu, grid, window, **options).path(rng)


def rhofLm_path(params, view, grid, window, rng, **options) -> SamplePath:
    return RhofLmSimulator(params, view, grid, window, **options).path(rng)


def ofbm_path(gram, grid, rng, config_digest: str = "", seed: int = 0) -> SamplePath:
    """One joint Gaussian draw from a full (len(grid) p) x (len(grid) p) gram."""
    grid = np.asarray(grid, dtype=float)
    gram = np.asarray(gram, dtype=float)
    p = gram.shape[0] // len(grid)
    L = _psd_factor(gram, "joint gram")
    vals = (L @ rng.standard_normal(L.shape[1])).reshape(len(grid), p)
    return SamplePath(grid, vals, seed, config_digest)


def generate_ensemble(simulator, master_seed: int, replications: int,
                      threads: int = 1) -> Ensemble:
    """Replications r = 0..n-1 drawn from streams keyed by (master_seed, r);
    results are identical for any thread count."""
    nt, p = len(simulator.grid), simulator.params.p
    values = np.empty((replications, nt, p))

    def run(r):
        rng = replication_rng(master_seed, r)
        values[r] = simulator.path(rng, seed=master_seed).values

    if threads <= 1:
        for r in range(replications):
            run(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(replications)))
    return Ensemble(simulator.grid, values, master_seed, simulator.digest)


def gaussian_ensemble(gram, grid, master_seed: int, replications: int,
                      config_digest: str = "") -> Ensemble:
    grid = np.asarray(grid, dtype=float)
    p = np.asarray(gram).shape[0] // len(grid)
    L = _psd_factor(np.asarray(gram, dtype=float), "joint gram")
    values = np.empty((replications, len(grid), p))
    for r in range(replications):
        rng = replication_rng(master_seed, r)
        values[r] = (L @ rng.standard_normal(L.shape[1])).reshape(len(grid), p)
    return Ensemble(grid, values, master_seed, config_digest)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def path_csv_lines(path: SamplePath):
    p = path.values.shape[1]
    yield "t," + ",".join(f"X{i + 1}" for i in range(p))
    for t, row in zip(path.grid, path.values):
        yield f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row)


def write_path_csv(path: SamplePath, fh) -> None:
    for line in path_csv_lines(path):
        fh.write(line + "\n")


_BINARY_MAGIC = "oflm-path-v1"


def write_path_binary(path: SamplePath, fh) -> None:
    """Header line (JSON: magic, digest, seed, shape) + float64 columns."""
    header = {"magic": _BINARY_MAGIC, "config_digest": path.config_digest,
              "seed": int(path.seed), "n": len(path.grid), "p": path.values.shape[1]}
    fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
    cols = np.column_stack([path.grid, path.values])
    fh.write(np.ascontiguousarray(cols.T, dtype="<f8").tobytes())


def read_path_binary(fh) -> SamplePath:
    header = json.loads(fh.readline().decode())
    if header.get("magic") != _BINARY_MAGIC:
        raise ValueError("not a path binary file")
    n, p = header["n"], header["p"]
    data = np.frombuffer(fh.read(8 * n * (p + 1)), dtype="<f8").reshape(p + 1, n)
    return SamplePath(data[0].copy(), data[1:].T.copy(), header["seed"],
                      header["config_digest"])
