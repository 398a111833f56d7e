"""Exception types raised across the package."""


class KjpaError(Exception):
    """Base class for all package-specific errors."""


# --- circuit model ---

class FluxAtFrustration(KjpaError):
    """DC flux bias at or beyond the SQUID frustration point (E_S <= 0)."""


class NoBracket(KjpaError):
    """Root finder could not bracket the mode constraint on (0, pi/2)."""


class FitDiverged(KjpaError):
    """Least-squares fit failed to reduce the residual norm below threshold."""


class InsufficientData(KjpaError):
    """Too few data points for the requested fit."""


# --- stochastic dynamics ---

class UnstableStep(KjpaError):
    """Integration timestep too large for the fastest rate in the model."""


class NonFinite(KjpaError):
    """State diverged during integration (reported with step index)."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


class EmptyWindow(KjpaError):
    """Requested time window contains no samples."""


class DegenerateCovariance(KjpaError):
    """Both quadrature variances vanish; principal axis undefined."""


# --- Fokker-Planck ---

class NegativeDensity(KjpaError):
    """Scheme produced density values below -1e-12 (scheme violation)."""


class GridTooCoarse(KjpaError):
    """Cell Peclet number |U'| h / D exceeds 2 somewhere; refine the grid."""


class NoExponentialRegime(KjpaError):
    """No fit window with R^2 >= threshold found in the survival curve."""


class NoBarrier(KjpaError):
    """Potential profile has no barrier maximum flanking the central well."""


# --- detection protocol ---

class InvalidTiming(KjpaError):
    """Pulse sequence windows fall outside the pump-on interval."""


# --- detector statistics ---

class InvalidDistribution(KjpaError):
    """Photon-number distribution has negative entries or sums above 1."""


class InconsistentCounts(KjpaError):
    """Click probability at or below the dark probability; efficiency undefined."""


class DomainError(KjpaError):
    """Phenomenological efficiency exponent denominator is non-positive."""


class ScaleMismatch(KjpaError):
    """Detection records carry incompatible readout scales."""


class MissingCalibration(KjpaError):
    """A threshold lacks its extracted efficiency."""


# --- orchestration ---

class ConfigInvalid(KjpaError):
    """Run configuration failed schema validation; lists every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n  " + "\n  ".join(self.violations))


class PipelineError(KjpaError):
    """A module pipeline failed; carries the module context."""


class SweepAborted(KjpaError):
    """More than half of the sweep cells failed."""
