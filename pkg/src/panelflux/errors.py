"""Exception hierarchy shared by every stage of the toolkit."""


class PanelfluxError(Exception):
    """Base class for all toolkit errors."""


class PanelError(PanelfluxError, ValueError):
    """Malformed or inconsistent panel data."""


class MissingIndicatorError(PanelError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing indicator"


class NonPositiveGDPError(PanelError):
    def __init__(self, unit: str, period: str, value: float):
        super().__init__(f"GDP must be positive: unit={unit} period={period} value={value!r}")
        self.unit = unit
        self.period = period
        self.value = value


class DegenerateScaleError(PanelfluxError, ValueError):
    """A constant series cannot be min-max scaled."""


class InsufficientDataError(PanelfluxError, ValueError):
    pass


class SingularMatrixError(PanelfluxError, ValueError):
    pass


class DivergenceError(PanelfluxError, FloatingPointError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(
            f"training diverged at epoch {epoch} (loss={loss!r}); lower the learning rate"
        )
        self.epoch = epoch
        self.loss = loss


class NotPositiveDefiniteError(PanelfluxError, ValueError):
    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is not positive definite: pivot {pivot} has value {value!r}")
        self.pivot = pivot
        self.value = value


class FetchError(PanelfluxError, RuntimeError):
    """Remote data acquisition failed."""


class ConfigError(PanelfluxError, ValueError):
    pass


class StageError(PanelfluxError, RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
