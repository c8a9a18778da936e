"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A config or sweep document cannot be parsed or is invalid."""


class DivergenceError(RuntimeError):
    """An integration blew up; carries the failing stage and time."""

    def __init__(self, stage: str, time: float, detail: str = ""):
        self.stage = stage
        self.time = time
        msg = f"{stage} diverged at t={time:.6g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UnphysicalStateError(ValueError):
    """A covariance matrix violates the uncertainty principle."""

    def __init__(self, message: str, nu_minus: float | None = None):
        self.nu_minus = nu_minus
        super().__init__(message)
