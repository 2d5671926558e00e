"""Time-reversibility diagnostics: parametric conditions on (M_plus,
M_minus, mu) and (A, mu), the weaker Gaussian-case conditions, the
symmetric-orthogonal structural factor, and empirical confirmation from
simulated ensembles.

All verdicts are conditional on minimality of the integral representation,
which is assumed, not verified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, levy, matfun, mcstats
from .errors import (
    MismatchedEnsembles,
    RankDeficientSigma,
    SingularA,
    SingularM,
    UnsupportedPushforward,
)

DEFAULT_TOL = 1e-9
MINIMALITY_CAVEAT = "verdict assumes the integral representation is minimal (not verified)"


@dataclass(frozen=True)
class ReversibilityVerdict:
    condition_a_residual: float
    condition_b_residual: float
    verdict: str                      # 'reversible' | 'irreversible'
    caveats: tuple = (MINIMALITY_CAVEAT,)

    @property
    def reversible(self):
        return self.verdict == "reversible"

    def to_dict(self):
        return {"condition_a_residual": self.condition_a_residual,
                "condition_b_residual": self.condition_b_residual,
                "verdict": self.verdict, "caveats": list(self.caveats)}


def _invertible(M, name):
    M = np.asarray(M, dtype=float if np.isrealobj(M) else complex)
    if M.shape[0] != M.shape[1] or not np.all(np.isfinite(M)):
        raise SingularM(f"{name} must be a finite square matrix")
    if np.linalg.cond(M) > 1e12:
        raise SingularM(f"{name} is numerically singular")
    return M


def _pushforward_discrepancy(mu, T) -> float:
    """measure_equal discrepancy of mu vs its pushforward under T, falling
    back to the symbol identity psi_{T mu}(u) = psi_mu(T^T u) when the
    pushforward is not representable in the variant family."""
    try:
        _, disc = levy.measure_equal(mu, levy.pushforward(mu, T))
        return disc
    except UnsupportedPushforward:
        grid = levy._symbol_probe_grid(mu.dim)
        return max(abs(levy.levy_symbol(mu, np.asarray(T).T @ u) - levy.levy_symbol(mu, u))
                   for u in grid)


def check_maofLm(M_plus, M_minus, mu, tol: float = DEFAULT_TOL) -> ReversibilityVerdict:
    """Moving-average reversibility: (a) M_-^{-1} M_+ z = M_+^{-1} M_- z on
    the support of mu, and (b) the map preserves mu."""
    Mp = _invertible(M_plus, "M_plus")
    Mm = _invertible(M_minus, "M_minus")
    fwd = np.linalg.solve(Mm, Mp)     # M_-^{-1} M_+
    bwd = np.linalg.solve(Mp, Mm)     # M_+^{-1} M_-
    diff = fwd - bwd
    caveats = [MINIMALITY_CAVEAT]
    if isinstance(mu, levy.DiscreteMeasure):
        res_a = float(np.max(np.linalg.norm(mu.atoms @ diff.T, axis=1)))
    else:
        # full-support (Gaussian) or ray-supported measures: operator level
        res_a = float(np.linalg.norm(diff))
        if not isinstance(mu, levy.GaussianJumps):
            caveats.append("condition (a) evaluated at the operator level, which is"
                           " sufficient but only necessary on full support")
    res_b = _pushforward_discrepancy(mu, fwd)
    verdict = "reversible" if (res_a < tol and res_b < tol) else "irreversible"
    return ReversibilityVerdict(res_a, res_b, verdict, tuple(caveats))


def check_rhofLm(A, view: levy.ComplexLevyView, tol: float = DEFAULT_TOL) -> ReversibilityVerdict:
    """Harmonizable reversibility: z -> -conj(A)^{-1} A z preserves the
    conjugation-symmetrized measure mu~."""
    A = np.asarray(A, dtype=complex)
    if np.linalg.cond(A) > 1e12 or np.linalg.cond(np.conj(A)) > 1e12:
        raise SingularA("A and conj(A) must be invertible")
    sym = levy.symmetrize_conjugate(view)
    C = -np.linalg.solve(np.conj(A), A)
    T = levy.complex_map_matrix(C)
    res = _pushforward_discrepancy(sym.base, T)
    verdict = "reversible" if res < tol else "irreversible"
    return ReversibilityVerdict(0.0, res, verdict)


def check_ofbm_time(M_plus, M_minus, D, tol: float = DEFAULT_TOL):
    """Gaussian-case time-domain condition:
    cos(pi D/2)(M_+ + M_-)(M_+^T - M_-^T) sin(pi D^T/2)
        = sin(pi D/2)(M_+ - M_-)(M_+^T + M_-^T) cos(pi D^T/2).
    Returns (verdict, residual)."""
    Mp = np.asarray(M_plus, dtype=float)
    Mm = np.asarray(M_minus, dtype=float)
    D = np.asarray(D, dtype=float)
    C = np.real(matfun.matrix_cos(np.pi * D / 2))
    S = np.real(matfun.matrix_sin(np.pi * D / 2))
    lhs = C @ (Mp + Mm) @ (Mp.T - Mm.T) @ S.T
    rhs = S @ (Mp - Mm) @ (Mp.T + Mm.T) @ C.T
    res = float(np.linalg.norm(lhs - rhs))
    return ("reversible" if res < tol else "irreversible"), res


def check_ofbm_fourier(A, tol: float = DEFAULT_TOL):
    """Gaussian-case Fourier-domain condition A A* = conj(A A*);
    returns (verdict, residual)."""
    A = np.asarray(A, dtype=complex)
    AA = A @ np.conj(A).T
    res = float(np.linalg.norm(AA - np.conj(AA)))
    return ("reversible" if res < tol else "irreversible"), res


def symmetric_orthogonal_factor(M_plus, M_minus, Sigma):
    """O = Sigma^{-1/2} M_-^{-1} M_+ Sigma^{1/2} together with the
    diagnostics (||O O^T - I||, ||O - O^T||), both of which vanish for a
    reversible configuration with full-rank Sigma."""
    Mp = _invertible(M_plus, "M_plus")
    Mm = _invertible(M_minus, "M_minus")
    Sigma = np.asarray(Sigma, dtype=float)
    w, V = np.linalg.eigh(0.5 * (Sigma + Sigma.T))
    if np.min(w) <= 1e-12 * max(1.0, float(np.max(np.abs(w)))):
        raise RankDeficientSigma("Sigma must have full rank")
    root = V @ np.diag(np.sqrt(w)) @ V.T
    root_inv = V @ np.diag(w ** -0.5) @ V.T
    O = root_inv @ np.linalg.solve(Mm, Mp) @ root
    diagnostics = {"orthogonality": float(np.linalg.norm(O @ O.T - np.eye(len(O)))),
                   "symmetry": float(np.linalg.norm(O - O.T))}
    return O, diagnostics


def kernel_reversal_residual(params: kernels.TimeKernelParams, mu,
                             times, points) -> float:
    """Redundant cross-check of the kernel-level identity
    g_{-t}(s) z = g_t(-s) M_-^{-1} M_+ z on sampled (t, s) and support
    atoms; disagreement beyond roundoff indicates an implementation bug,
    not a model property."""
    Mp, Mm = params.M_plus, params.M_minus
    fwd = np.linalg.solve(Mm, Mp)
    if isinstance(mu, levy.DiscreteMeasure):
        Z = mu.atoms
    else:
        Z = np.eye(params.p)
    worst = 0.0
    for t in times:
        for s in points:
            lhs = kernels.time_kernel(-t, s, params) @ Z.T
            rhs = kernels.time_kernel(t, -s, params) @ fwd @ Z.T
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


@dataclass(frozen=True)
class EmpiricalReversibilityReport:
    max_discrepancy: float
    ci_radius: float
    worst_u_index: int
    violation: bool

    def to_dict(self):
        return {"max_discrepancy": self.max_discrepancy, "ci_radius": self.ci_radius,
                "worst_u_index": self.worst_u_index, "violation": self.violation}


def reverse_labels(ens):
    """Relabel an ensemble simulated on the negated grid so that the value
    stored at label t is X(-t)."""
    from .simulate import Ensemble
    return Ensemble(-ens.grid, ens.values, ens.master_seed, ens.config_digest)


def empirical_reversibility(ens_forward, ens_reversed, times, u_vectors) -> EmpiricalReversibilityReport:
    """Compare the empirical chf of (X(t_1), ..., X(t_m)) under the forward
    ensemble against the same functional of the reversed ensemble, which
    must hold X(-t) at label t (see reverse_labels)."""
    if ens_forward.replications != ens_reversed.replications:
        raise MismatchedEnsembles("replication counts differ")
    if ens_forward.config_digest != ens_reversed.config_digest:
        raise MismatchedEnsembles("configuration digests differ")
    times = np.asarray(times, dtype=float)
    phi_fwd, _ = mcstats.empirical_chf(ens_forward, times, u_vectors)
    phi_rev, _ = mcstats.empirical_chf(ens_reversed, times, u_vectors)
    disc = np.abs(phi_fwd - phi_rev)
    ci = 3.0 * np.sqrt(1.0 / ens_forward.replications + 1.0 / ens_reversed.replications)
    worst = int(np.argmax(disc))
    return EmpiricalReversibilityReport(float(disc[worst]), float(ci), worst,
                                        bool(disc[worst] > ci))
