"""Exception hierarchy.  ``exit_code`` is what the CLI returns for each class."""


class EmestError(Exception):
    exit_code = 1
    kind = "error"


class ConfigError(EmestError, ValueError):
    """Malformed configuration or invalid parameters."""

    exit_code = 2
    kind = "config"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InfeasibleError(EmestError, ValueError):
    """Too few samples for the batch plan."""

    exit_code = 3
    kind = "infeasible"

    def __init__(self, message, min_samples=None):
        super().__init__(message)
        self.min_samples = min_samples


class NumericalError(EmestError, ArithmeticError):
    exit_code = 4
    kind = "numerical"


class EmptyAcceptanceError(NumericalError):
    """Rejection sampling accepted no sample."""


class BatchesExhaustedError(NumericalError):
    """The batch supplier has no batch left to hand out."""


class MissingTruthError(EmestError):
    exit_code = 5
    kind = "missing_truth"
