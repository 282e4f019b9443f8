"""Exception hierarchy."""


class GridFlexError(Exception):
    """Base class for all package errors."""


class ParseError(GridFlexError):
    """Malformed input row; carries the file and 1-based line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class ValidationError(GridFlexError):
    """Input violates a structural invariant."""

    def __init__(self, message, violations=()):
        self.violations = list(violations)
        super().__init__(message)


class NumericalError(GridFlexError):
    """Non-finite input or a solver failure that is not plain infeasibility."""


class DimensionError(GridFlexError):
    pass


class InvalidState(GridFlexError):
    pass


class ModelError(GridFlexError):
    """Invalid stochastic model parameters."""


class NonConvergence(GridFlexError):
    """Load-shedding loop hit its iteration cap without restoring feasibility."""


class DegenerateSeries(GridFlexError):
    pass


class InvalidBandwidth(GridFlexError):
    pass


class NoFeasibleScale(GridFlexError):
    """Frontier search could not reach zero ENS within the upper bracket."""


class ConfigError(ValidationError):
    """Bad scenario configuration; each violation names its key or path."""
