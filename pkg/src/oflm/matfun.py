"""Matrix-analytic primitives: real matrix powers, truncated signed powers,
matrix Gamma and phase factors, spectral validation of Hurst matrices.

All functions of a matrix argument are primary matrix functions: the scalar
function is applied on the spectrum, with derivative terms on Jordan blocks.
Diagonalizable inputs are evaluated through their eigendecomposition; inputs
that are numerically defective must come with an explicit Jordan
factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.special as special
import mpmath

from .errors import (
    EigenvalueOutOfRange,
    NonDiagonalizableWithoutJordanInput,
    NonPositiveBase,
    PoleOfGamma,
)

#: eigenvector condition number above which an explicit Jordan form is required
EIGENVECTOR_COND_CAP = 1e8

#: entrywise tolerance deciding H == (1/2) I
HALF_IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class JordanForm:
    """Explicit Jordan factorization M = P J P^{-1}.

    ``blocks`` lists (eigenvalue, size) in the order the blocks appear on the
    diagonal of J.  Sizes must sum to the dimension of P.
    """

    P: np.ndarray
    blocks: tuple

    def __post_init__(self):
        P = np.asarray(self.P)
        n = sum(s for _, s in self.blocks)
        if P.shape != (n, n):
            raise ValueError("Jordan basis shape inconsistent with block sizes")
        object.__setattr__(self, "P", P)

    @property
    def dim(self):
        return self.P.shape[0]

    def matrix(self) -> np.ndarray:
        """Reassemble M = P J P^{-1}."""
        J = np.zeros((self.dim, self.dim), dtype=complex)
        k = 0
        for lam, size in self.blocks:
            J[k:k + size, k:k + size] = lam * np.eye(size) + np.diag(np.ones(size - 1), 1)
            k += size
        M = self.P @ J @ np.linalg.inv(self.P)
        if np.max(np.abs(M.imag)) < 1e-12 * max(1.0, np.max(np.abs(M.real))):
            return M.real
        return M

    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([[lam] * size for lam, size in self.blocks])


def _jordan_block_apply(f_derivs, lam, size):
    """f(J) for one size x size Jordan block: upper-triangular Toeplitz with
    f^{(k)}(lam)/k! on the k-th superdiagonal."""
    B = np.zeros((size, size), dtype=complex)
    fact = 1.0
    for k in range(size):
        if k > 0:
            fact *= k
        B += (f_derivs(lam, k) / fact) * np.diag(np.ones(size - k), k)
    return B


def primary_function(M, f, f_derivs=None, jordan: JordanForm | None = None,
                     cond_cap: float = EIGENVECTOR_COND_CAP) -> np.ndarray:
    """Evaluate the primary matrix function f(M).

    ``f`` maps a complex vector to a complex vector.  ``f_derivs(lam, k)``
    returns the k-th derivative of f at lam; required only on the Jordan
    path, where ``None`` falls back to mpmath numerical differentiation.
    """
    if jordan is not None:
        if f_derivs is None:
            f_derivs = lambda lam, k: complex(mpmath.diff(lambda z: complex(f(np.array([z]))[0]), lam, k))
        blocks = []
        for lam, size in jordan.blocks:
            if size == 1:
                blocks.append(np.array([[complex(f(np.array([lam]))[0])]]))
            else:
                blocks.append(_jordan_block_apply(f_derivs, lam, size))
        F = jordan.P @ sla.block_diag(*blocks) @ np.linalg.inv(jordan.P)
    else:
        M = np.asarray(M)
        w, V = np.linalg.eig(M)
        cond = np.linalg.cond(V)
        if not np.isfinite(cond) or cond > cond_cap:
            raise NonDiagonalizableWithoutJordanInput(
                f"eigenvector condition number {cond:.3g} exceeds cap {cond_cap:.3g};"
                " supply an explicit JordanForm")
        F = V @ np.diag(f(w.astype(complex))) @ np.linalg.inv(V)
    if np.isrealobj(M) and np.max(np.abs(F.imag)) < 1e-12 * max(1.0, np.max(np.abs(F.real))):
        return F.real
    return F


def matrix_power(M, c: float, jordan: JordanForm | None = None) -> np.ndarray:
    """c^M = exp(M log c) for c > 0.

    Exact on Jordan structure: the matrix exponential reproduces the
    polynomial-in-log terms of defective blocks without needing the explicit
    factorization.
    """
    if not np.isreal(c) or not c > 0:
        raise NonPositiveBase(f"matrix power base must be positive, got {c!r}")
    c = float(c)
    if jordan is not None:
        return primary_function(None, lambda w: np.exp(w * np.log(c)),
                                f_derivs=lambda lam, k: (np.log(c) ** k) * np.exp(lam * np.log(c)),
                                jordan=jordan)
    M = np.asarray(M)
    F = sla.expm(np.log(c) * M)
    return F


def truncated_matrix_power(t: float, D, side: str,
                           jordan: JordanForm | None = None) -> np.ndarray:
    """One-sided power t_+^D or t_-^D; zero matrix off-side and at t = 0.

    The t = 0 convention keeps a.e.-defined kernels finite at quadrature and
    sampling nodes.
    """
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    D = np.asarray(D) if D is not None else None
    p = D.shape[0] if D is not None else jordan.dim
    if t == 0:
        return np.zeros((p, p))
    if side == "plus":
        return matrix_power(D, t, jordan=jordan) if t > 0 else np.zeros((p, p))
    return matrix_power(D, -t, jordan=jordan) if t < 0 else np.zeros((p, p))


def _gamma_derivs(lam, k):
    return complex(mpmath.diff(mpmath.gamma, complex(lam), k))


def matrix_gamma(M, jordan: JordanForm | None = None) -> np.ndarray:
    """Primary matrix function Gamma(M)."""
    eigs = jordan.eigenvalues() if jordan is not None else np.linalg.eigvals(np.asarray(M))
    for lam in eigs:
        if abs(lam.imag) < 1e-12 and lam.real <= 0 and abs(lam.real - round(lam.real)) < 1e-12:
            raise PoleOfGamma(f"eigenvalue {lam} is a pole of Gamma")
    return primary_function(M, special.gamma, f_derivs=_gamma_derivs, jordan=jordan)


def matrix_cos(M, jordan: JordanForm | None = None) -> np.ndarray:
    """Primary matrix cosine."""
    return primary_function(
        M, np.cos,
        f_derivs=lambda lam, k: complex(np.cos(lam + k * np.pi / 2)),
        jordan=jordan)


def matrix_sin(M, jordan: JordanForm | None = None) -> np.ndarray:
    """Primary matrix sine."""
    return primary_function(
        M, np.sin,
        f_derivs=lambda lam, k: complex(np.sin(lam + k * np.pi / 2)),
        jordan=jordan)


def matrix_phase(D, s: int, jordan: JordanForm | None = None) -> np.ndarray:
    """exp(s * (-i pi / 2) * D) for s in {+1, -1}."""
    if s not in (+1, -1):
        raise ValueError("s must be +1 or -1")
    z = s * (-1j * np.pi / 2)
    if jordan is not None:
        return primary_function(None, lambda w: np.exp(z * w),
                                f_derivs=lambda lam, k: (z ** k) * np.exp(z * lam),
                                jordan=jordan)
    return sla.expm(z * np.asarray(D, dtype=complex))


@dataclass(frozen=True)
class SpectralReport:
    """Spectrum summary + regime classification of a Hurst matrix."""

    eigenvalues: np.ndarray
    regime: str            # 'general' | 'half_identity' | 'crosses_half_line' | 'upper'
    condition_number: float


def shift_jordan(jf: JordanForm, delta: float) -> JordanForm:
    """Jordan form of M + delta I from that of M (same basis, shifted
    eigenvalues)."""
    return JordanForm(P=jf.P, blocks=tuple((lam + delta, s) for lam, s in jf.blocks))


@dataclass(frozen=True)
class HurstSpec:
    """Validated Hurst matrix together with the derived exponent D = H - I/2.

    ``jordan`` factorizes H; ``jordan_D`` the shifted exponent D."""

    H: np.ndarray
    D: np.ndarray
    eig_real_parts: np.ndarray
    structure: str          # 'diagonalizable' | 'jordan'
    report: SpectralReport
    jordan: JordanForm | None = field(default=None, compare=False)
    jordan_D: JordanForm | None = field(default=None, compare=False)

    @property
    def p(self):
        return self.H.shape[0]

    @property
    def regime(self):
        return self.report.regime


def classify_regime(eigenvalues, is_half_identity: bool, tol: float = HALF_IDENTITY_TOL) -> str:
    if is_half_identity:
        return "half_identity"
    re = np.real(np.asarray(eigenvalues))
    if np.any(np.abs(re - 0.5) <= tol):
        return "crosses_half_line"
    if np.all(re > 0.5):
        return "upper"
    return "general"


def validate_hurst(H, jordan: JordanForm | None = None,
                   cond_cap: float = EIGENVECTOR_COND_CAP) -> HurstSpec:
    """Validate a Hurst matrix and classify its spectral regime.

    Rejects any eigenvalue with real part outside the open interval (0, 1),
    and rejects numerically defective matrices unless an explicit Jordan
    factorization is supplied.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be a square matrix")
    p = H.shape[0]
    if jordan is not None:
        eigs = jordan.eigenvalues()
        structure = "jordan"
        cond = float("inf")
    else:
        eigs, V = np.linalg.eig(H)
        cond = float(np.linalg.cond(V))
        if not np.isfinite(cond) or cond > cond_cap:
            raise NonDiagonalizableWithoutJordanInput(
                f"H numerically defective (eigenvector condition {cond:.3g});"
                " supply a JordanForm")
        structure = "diagonalizable"
    re = np.real(eigs)
    bad = (re <= 0) | (re >= 1)
    if np.any(bad):
        raise EigenvalueOutOfRange(
            f"eigenvalue(s) {np.asarray(eigs)[bad]} have real part outside (0, 1)")
    is_half = np.max(np.abs(H - 0.5 * np.eye(p))) <= HALF_IDENTITY_TOL
    report = SpectralReport(eigenvalues=np.asarray(eigs),
                            regime=classify_regime(eigs, is_half),
                            condition_number=cond)
    return HurstSpec(H=H, D=H - 0.5 * np.eye(p), eig_real_parts=np.sort(re),
                     structure=structure, report=report, jordan=jordan,
                     jordan_D=None if jordan is None else shift_jordan(jordan, -0.5))


class SpectralPowers:
    """Vectorized evaluator of x^M over arrays of positive bases.

    Built once per matrix; reuses the eigendecomposition (or the explicit
    Jordan factorization) for every batch of bases.
    """

    def __init__(self, M, jordan: JordanForm | None = None,
                 cond_cap: float = EIGENVECTOR_COND_CAP):
        self.jordan = jordan
        if jordan is not None:
            self.p = jordan.dim
            self._P = jordan.P.astype(complex)
            self._Pinv = np.linalg.inv(self._P)
            self._blocks = jordan.blocks
            self.eigenvalues = jordan.eigenvalues()
        else:
            M = np.asarray(M)
            self.p = M.shape[0]
            w, V = np.linalg.eig(M)
            cond = np.linalg.cond(V)
            if not np.isfinite(cond) or cond > cond_cap:
                raise NonDiagonalizableWithoutJordanInput(
                    "matrix numerically defective; supply a JordanForm")
            self._V = V
            self._Vinv = np.linalg.inv(V)
            self._w = w.astype(complex)
            self.eigenvalues = w

    def pow(self, x) -> np.ndarray:
        """x^M for an array of bases; entries with x <= 0 yield zero matrices
        (the one-sided power convention)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape + (self.p, self.p), dtype=complex)
        pos = x > 0
        if np.any(pos):
            xp = x[pos]
            if self.jordan is None:
                lam = np.exp(np.log(xp)[:, None] * self._w[None, :])  # (n, p)
                out[pos] = np.einsum("ij,nj,jk->nik", self._V, lam, self._Vinv)
            else:
                logs = np.log(xp)
                J = np.zeros((len(xp), self.p, self.p), dtype=complex)
                k0 = 0
                for lam, size in self._blocks:
                    base = np.exp(logs * lam)
                    fact = 1.0
                    for k in range(size):
                        if k > 0:
                            fact *= k
                        term = base * logs ** k / fact
                        for r in range(size - k):
                            J[:, k0 + r, k0 + r + k] = term
                    k0 += size
                out[pos] = np.einsum("ij,njk,kl->nil", self._P, J, self._Pinv)
        if np.max(np.abs(out.imag)) < 1e-13 * max(1.0, np.max(np.abs(out.real))):
            out = out.real.copy()
        return out

    def pow_single(self, x: float) -> np.ndarray:
        return self.pow(np.array([x]))[0]
