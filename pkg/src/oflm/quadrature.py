"""Shared quadrature machinery: adaptive matrix-valued integration with
power-law substitutions at algebraic singularities, asymptotic tails of
oscillatory power integrals, and Euler-Maclaurin (zeta) corrections for
sampled kernels with on-grid algebraic singularities.

The integrands this package meets decay like |u|^(Re d - 1) with Re d up to
1/2, so bare truncation can never reach the advertised tolerances; every
integral is split into a finite adaptive part plus a closed-form tail.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import mpmath
from scipy.integrate import quad_vec

from .errors import QuadratureNotConverged

DEFAULT_TOL = 1e-10


def stable_phi(t: float, x) -> np.ndarray:
    """(e^{itx} - 1) / (ix), stable through x = 0 (value t there)."""
    x = np.asarray(x, dtype=float)
    return np.exp(0.5j * t * x) * t * np.sinc(t * x / (2 * np.pi))


def compensated_wave(y):
    """e^{iy} - 1 - iy without cancellation at small |y|: the real part is
    -2 sin^2(y/2) exactly; the imaginary part switches to the Taylor tail of
    sin(y) - y below |y| = 1e-2."""
    y = np.asarray(y, dtype=float)
    re = -2.0 * np.sin(0.5 * y) ** 2
    small = np.abs(y) < 1e-2
    y2 = y * y
    series = -y * y2 / 6.0 * (1.0 - y2 / 20.0 * (1.0 - y2 / 42.0))
    im = np.where(small, series, np.sin(y) - y)
    return re + 1j * im


def osc_power_tail(a, X: float, x, nterms: int = 14):
    """int_X^inf u^a e^{-i u x} du by the integration-by-parts asymptotic
    series; valid for |x| X >> 1.  ``a`` may be complex, ``x`` an array.

    For x = 0 entries the integral is computed in closed form (requires
    Re a < -1 there).
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    out = np.zeros_like(x)
    zero = np.abs(x) == 0
    if np.any(zero):
        if np.real(a) >= -1:
            raise QuadratureNotConverged(f"power tail with exponent {a} diverges at x=0")
        out[zero] = -X ** (a + 1) / (a + 1)
    nz = ~zero
    if np.any(nz):
        xs = x[nz]
        acc = np.zeros_like(xs)
        coef = 1.0 + 0j
        term_prev = np.inf
        for k in range(nterms):
            term = coef * X ** (a - k) / (1j * xs) ** (k + 1)
            tmax = np.max(np.abs(term))
            if tmax > term_prev:  # series turned divergent, stop at the optimal truncation
                break
            acc += term
            term_prev = tmax
            coef *= (a - k)
        out[nz] = np.exp(-1j * X * xs) * acc
    return out


@lru_cache(maxsize=512)
def zeta_cached(s: complex) -> complex:
    return complex(mpmath.zeta(complex(s)))


def singular_node_sum_correction(gamma, delta: float, x, side: str, nterms: int = 4):
    """Euler-Maclaurin defect of the node sum around an on-grid algebraic
    singularity: for a one-sided power (s0 -/+ s)^gamma sampled at spacing
    ``delta`` (node at the singular point carrying value 0),

        delta * sum_j f(s_j) e^{i s_j x} - int f e^{isx} ds
            = e^{i s0 x} sum_k zeta(-gamma-k) (sgn i x)^k / k! delta^{gamma+k+1},

    with sgn = -1 for a left-sided power (support s < s0) and +1 for a
    right-sided one.  Returns the defect WITHOUT the e^{i s0 x} factor.
    """
    x = np.asarray(x, dtype=float)
    sgn = -1.0 if side == "left" else 1.0
    acc = np.zeros(x.shape, dtype=complex)
    fact = 1.0
    for k in range(nterms):
        if k > 0:
            fact *= k
        acc += zeta_cached(-gamma - k) * (sgn * 1j * x) ** k / fact * delta ** (gamma + k + 1)
    return acc


def binom_series_coeffs(lam, order: int):
    """Generalized binomial coefficients binom(lam, m), m = 0..order."""
    lam = complex(lam)
    c = [1.0 + 0j]
    for m in range(1, order + 1):
        c.append(c[-1] * (lam - (m - 1)) / m)
    return np.array(c)


def _quad_matrix(f, lo: float, hi: float, tol: float, points=None, limit: int = 2000):
    val, err = quad_vec(f, lo, hi, epsabs=tol, epsrel=1e-13,
                        points=points, limit=limit)
    if err > 50 * tol * max(1.0, float(np.max(np.abs(val)))):
        raise QuadratureNotConverged(
            f"quad_vec error estimate {err:.3g} over [{lo}, {hi}] exceeds budget")
    return val


def integrate_with_singular_points(f, f_offset, lo: float, hi: float,
                                   singular_points, kappa: int,
                                   tol: float = DEFAULT_TOL):
    """Integrate a matrix-valued f over [lo, hi] with interior algebraic
    singularities.

    ``f(u)`` evaluates at a plain point; ``f_offset(base, w)`` evaluates at
    u = base + w using exact offset arithmetic (w may be below float
    resolution of base + w).  ``kappa`` is the power-substitution order near
    singular points; 1 disables substitution.
    """
    pts = sorted(p for p in set(singular_points) if lo < p < hi or p in (lo, hi))
    total = 0.0
    ext = [lo] + [p for p in pts if lo < p < hi] + [hi]
    for p, q in zip(ext[:-1], ext[1:]):
        if q - p < 1e-13:
            continue
        left_sing = kappa > 1 and p in pts
        right_sing = kappa > 1 and q in pts
        dl = min(1.0, (q - p) / 2)
        if left_sing:
            g = lambda y, p=p: f_offset(p, y ** kappa) * (kappa * y ** (kappa - 1))
            total = total + _quad_matrix(g, 0.0, dl ** (1.0 / kappa), tol)
        if right_sing:
            g = lambda y, q=q: f_offset(q, -(y ** kappa)) * (kappa * y ** (kappa - 1))
            total = total + _quad_matrix(g, 0.0, dl ** (1.0 / kappa), tol)
        a = p + (dl if left_sing else 0.0)
        b = q - (dl if right_sing else 0.0)
        if b - a > 1e-13:
            inner = [z for z in pts if a < z < b] or None
            total = total + _quad_matrix(f, a, b, tol, points=inner)
    return total


def substitution_order(min_exponent: float) -> int:
    """Power-substitution order making an |u|^alpha endpoint singularity
    (alpha = min_exponent > -1) look C^2 to the adaptive rule."""
    if min_exponent >= 0:
        return 1
    return int(np.ceil(3.0 / (1.0 + min_exponent)))
