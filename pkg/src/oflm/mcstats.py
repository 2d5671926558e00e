"""Ensemble-level estimators: sample covariance with jackknife errors,
empirical characteristic functions with distribution-free confidence radii,
and excess kurtosis with delta-method errors.

Reductions use numpy's pairwise summation, so results are deterministic for
a fixed ensemble layout regardless of worker threads upstream.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateVariance, TimesNotOnGrid
from .simulate import Ensemble


def grid_indices(ens: Ensemble, times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    idx = []
    for t in times:
        hits = np.nonzero(np.isclose(ens.grid, t, rtol=0.0, atol=1e-12))[0]
        if len(hits) != 1:
            raise TimesNotOnGrid(f"time {t} not a grid point of the ensemble")
        idx.append(hits[0])
    return np.array(idx)


def sample_cov(ens: Ensemble, t1: float, t2: float):
    """Cross-moment estimate of E X(t1) X(t2)^T (processes are centered)
    with entrywise jackknife standard errors."""
    if ens.replications < 2:
        raise ValueError("need at least 2 replications")
    i, j = grid_indices(ens, [t1, t2])
    x = ens.values[:, i, :]          # (R, p)
    y = ens.values[:, j, :]
    z = np.einsum("ri,rj->rij", x, y)
    mean = z.mean(axis=0)
    n = ens.replications
    se = np.sqrt(np.sum((z - mean) ** 2, axis=0) / (n * (n - 1)))
    return mean, se


def empirical_chf(ens: Ensemble, times, u_vectors):
    """phi(u) = mean exp(i sum_j <u_j, X(t_j)>) for each u in ``u_vectors``
    (each u is a (len(times), p) array); returns (values, ci_radius) with
    the conservative modulus bound ci = 3 / sqrt(N)."""
    idx = grid_indices(ens, times)
    X = ens.values[:, idx, :]        # (R, m, p)
    us = np.asarray(u_vectors, dtype=float)
    if us.ndim == 2:
        us = us[None]
    phases = np.einsum("rmp,kmp->rk", X, us)
    values = np.exp(1j * phases).mean(axis=0)
    return values, 3.0 / np.sqrt(ens.replications)


def excess_kurtosis(ens: Ensemble, t: float, coordinate: int = 0):
    """Sample excess kurtosis of one coordinate of X(t) with a delta-method
    standard error from empirical moments up to order eight."""
    if ens.replications < 100:
        raise ValueError("need at least 100 replications for a kurtosis estimate")
    (i,) = grid_indices(ens, [t])
    x = ens.values[:, i, coordinate]
    n = len(x)
    m2 = np.mean(x ** 2)
    spread = m2 - np.mean(x) ** 2
    if spread <= 1e-14 * max(1.0, np.max(np.abs(x)) ** 2):
        raise DegenerateVariance("variance too small for a kurtosis ratio")
    m4 = np.mean(x ** 4)
    m6 = np.mean(x ** 6)
    m8 = np.mean(x ** 8)
    kurt = m4 / m2 ** 2 - 3.0
    # delta method on (m2, m4)
    g = np.array([-2.0 * m4 / m2 ** 3, 1.0 / m2 ** 2])
    cov = np.array([[m4 - m2 ** 2, m6 - m2 * m4],
                    [m6 - m2 * m4, m8 - m4 ** 2]]) / n
    se = float(np.sqrt(max(g @ cov @ g, 0.0)))
    return float(kurt), se


def ensemble_mean(ens: Ensemble):
    """Mean path with entrywise standard errors."""
    mean = ens.values.mean(axis=0)
    se = ens.values.std(axis=0, ddof=1) / np.sqrt(ens.replications)
    return mean, se
