"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument, precondition violation, or malformed input."""


class ConfigError(InputError):
    """Bad or inconsistent experiment configuration."""


class ParseError(InputError):
    """Malformed data file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SchemaError(InputError):
    """Structurally readable file whose contents violate the expected schema."""


class NumericalError(RuntimeError):
    """Numerical failure during an otherwise valid computation."""


class FilterError(NumericalError):
    """Kalman update failed; carries a condition estimate of the innovation covariance."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SynthesisError(NumericalError):
    """Controller synthesis did not converge or produced an unstable loop."""


class UncontrollableError(InputError):
    """Controllability precondition failed; carries the achieved rank."""

    def __init__(self, message, rank=None, required=None):
        super().__init__(message)
        self.rank = rank
        self.required = required


class PlacementError(NumericalError):
    """Placement search exhausted; carries the best rank achieved."""

    def __init__(self, message, best_rank=None):
        super().__init__(message)
        self.best_rank = best_rank


class OutputExistsError(OSError):
    """Refusing to overwrite an existing output without an explicit force flag."""
