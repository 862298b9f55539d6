"""Exception types shared across the simulator."""


class PreconditionError(ValueError):
    """An operation was called with arguments outside its contract."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


class UndefinedPhaseError(RuntimeError):
    """Phase was requested over a span where the field is extinguished."""


class IntegrationDivergedError(RuntimeError):
    """The rate-equation integrator produced a non-finite state."""

    def __init__(self, step_index: int, message: str | None = None):
        self.step_index = step_index
        super().__init__(
            message or f"integration diverged at sample index {step_index}"
        )
