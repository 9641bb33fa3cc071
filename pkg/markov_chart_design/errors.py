"""Exception hierarchy with machine-readable categories used by the CLI."""


class MarkovChartError(Exception):
    """Base class for all errors raised by this package."""

    category: str = "error"


class InvalidArgumentError(MarkovChartError, ValueError):
    category = "invalid-argument"


class NumericFailureError(MarkovChartError, ArithmeticError):
    """
    A numerical routine did not reach its tolerance.

    `residual` holds the last residual norm when the routine is iterative.
    """

    category = "numeric-failure"

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class OptimizerFailureError(MarkovChartError, RuntimeError):
    category = "optimizer-failure"

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ScenarioError(MarkovChartError, ValueError):
    """
    A scenario file could not be loaded.

    `field_path` is the dotted path of the offending field (e.g. `process.sigma`)
    when the failure can be attributed to one.
    """

    def __init__(self, message: str, category: str, field_path: str | None = None):
        super().__init__(message)
        self.category = category
        self.field_path = field_path
