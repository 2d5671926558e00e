"""Exception types shared across the package."""


class OflmError(Exception):
    """Base class for all package-specific errors."""


# --- matrix-function layer ---

class EigenvalueOutOfRange(OflmError):
    """A Hurst matrix eigenvalue has real part outside (0, 1)."""


class NonDiagonalizableWithoutJordanInput(OflmError):
    """Matrix is numerically defective and no explicit Jordan form was supplied."""


class NonPositiveBase(OflmError):
    """Matrix power requested at a non-positive base."""


class PoleOfGamma(OflmError):
    """Gamma evaluated at a matrix with an eigenvalue at a non-positive integer."""


class InvalidRegime(OflmError):
    """Kernel parametrization incompatible with the Hurst spectrum regime."""


# --- quadrature / verification ---

class QuadratureNotConverged(OflmError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class GridTooCoarse(OflmError):
    """FFT verification residual exceeded the configured bound."""


class RadialQuadratureDiverged(OflmError):
    """Radial moment integral of a tempered operator-stable measure diverged."""


# --- Levy measures ---

class FirstMomentDiverged(OflmError):
    """Mean jump requested for a measure with divergent first moment."""


class UnsupportedPushforward(OflmError):
    """Pushforward not representable within the measure's variant family."""


class IncomparableVariants(OflmError):
    """measure_equal could not compare the two measures by any route."""


class TruncationRequired(OflmError):
    """Sampling requested from an infinite-activity measure without truncation."""


# --- simulation ---

class WindowTooSmall(OflmError):
    """Integration window violates the truncation-error budget."""


class NotPSD(OflmError):
    """Covariance matrix has an eigenvalue below the PSD tolerance."""


# --- covariance ---

class RankDeficientMoment(OflmError):
    """Second-moment matrix is rank deficient where full rank is required."""


class UnlinkedParams(OflmError):
    """Time- and Fourier-domain parameters are not linked by the supported conversion."""


# --- statistics ---

class TimesNotOnGrid(OflmError):
    """Requested times are not grid points of the ensemble."""


class DegenerateVariance(OflmError):
    """Sample variance too small for a meaningful cumulant ratio."""


class MismatchedEnsembles(OflmError):
    """Ensembles differ in grid, replication count, or configuration digest."""


# --- time reversibility ---

class SingularM(OflmError):
    """M_plus or M_minus is singular; reversibility check requires GL(p)."""


class SingularA(OflmError):
    """A or conj(A) is singular; reversibility check requires GL(p, C)."""


class RankDeficientSigma(OflmError):
    """Sigma is rank deficient; the orthogonal factorization is undefined."""


# --- limits ---

class HypothesisViolated(OflmError):
    """Eigenvalue or commutation hypothesis of a scaling-limit experiment fails."""


class NonCommutingUnsupported(OflmError):
    """Operator-stable limit evaluation restricted to diagonal commuting inputs."""


class FourthMomentDiverged(OflmError):
    """Kurtosis prediction requires a finite fourth moment."""


# --- config / CLI ---

class SchemaError(OflmError):
    """Configuration violates the JSON schema."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer


class ValidationError(OflmError):
    """Configuration is schema-valid but semantically invalid."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer
