"""Exception types shared across the package."""


class GplError(Exception):
    """Base class for all package errors."""


class NonPositiveConstant(GplError, ValueError):
    """A constant that must be strictly positive is not."""

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"{name} must be > 0, got {value!r}")


class NotPositiveDefinite(GplError, ValueError):
    """mu*xi <= b**2: the stored elastic energy is not positive definite."""


class InvalidKernel(GplError, ValueError):
    """Memory kernel violates the admissibility hypotheses."""


class InvalidMode(GplError, ValueError):
    """Spatial mode index must be a positive integer."""


class NoConvergence(GplError, RuntimeError):
    """Eigenvalue iteration failed to converge."""


class OverflowScale(GplError, ArithmeticError):
    """Matrix exponential argument too large to scale down."""


class CflViolation(GplError, ValueError):
    """Explicit transport step with dt exceeding the grid spacing."""


class HistoryGap(GplError, ValueError):
    """Recorded temperature history does not cover the requested time."""


class NonUniformGrid(GplError, ValueError):
    """Operation requires uniformly spaced time rows."""


class DivergentAmplitude(GplError, ArithmeticError):
    """Modal amplitude undefined: resonant denominator vanishes."""


class SingularSystem(GplError, ArithmeticError):
    """Resolvent linear system is numerically singular."""


class EmptyWindow(GplError, ValueError):
    """Fit window contains too few usable rows."""


class NonPositiveEnergy(GplError, ValueError):
    """Log-linear fit requires strictly positive energies."""


class ConfigError(GplError, ValueError):
    """Experiment configuration is missing or malformed."""

    def __init__(self, what: str, message: str = ""):
        self.what = what
        super().__init__(message or f"invalid configuration: {what}")
