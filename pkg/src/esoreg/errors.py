"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid dimensions, gains, scenario contents or simulation settings."""


class GainValidationError(ConfigurationError):
    """Regulator gains that violate a design condition (Hurwitz test, slope bound)."""


class SingularInputError(ArithmeticError):
    """A model right-hand side was evaluated at a singular point."""


class SimulationFault(RuntimeError):
    """The closed loop could not be integrated (non-finite values, model fault)."""


class NonFiniteStateError(SimulationFault):
    """A Runge-Kutta stage produced NaN or Inf.

    ``stage`` is the 1-based index of the offending stage (1..4), or 0 when
    the combined update itself is non-finite.
    """

    def __init__(self, stage, message=None):
        self.stage = stage
        super().__init__(message or f"non-finite value in Runge-Kutta stage {stage}")
