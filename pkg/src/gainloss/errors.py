"""Exception types shared across the package."""


class GainLossError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GainLossError):
    """Malformed CLI/run configuration."""


class NotPTSymmetric(GainLossError):
    """Loss and effective gain are not balanced within tolerance."""


class NonPositiveEffectiveGain(GainLossError):
    """Operation requires a net-gain mode (Gamma_G > gamma_G)."""


class NonPhysical(GainLossError):
    """Covariance matrix violates the uncertainty principle or its
    reality structure beyond tolerance."""


class EntropyDomainError(GainLossError):
    """Argument of the thermal entropy function below the physical range."""


class NegativeDiffusion(GainLossError):
    """Diffusion matrix came out with a negative diagonal entry."""


class Unstable(GainLossError):
    """Drift matrix has a growing mode; no stationary state exists."""


class MarginallyStable(GainLossError):
    """Drift matrix is marginal (balanced gain-loss line); stationary
    state is not reachable as a strict fixed point."""


class StepSizeUnderflow(GainLossError):
    """Adaptive integrator failed to advance."""


class CutoffExceeded(GainLossError):
    """Population leaked into the top Fock layer beyond tolerance."""
