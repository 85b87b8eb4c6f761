"""Exception types shared across the package."""


class GameError(ValueError):
    """Malformed game or profile data (shape mismatch, non-finite entries)."""


class ConfigurationError(ValueError):
    """An incentive or solver was configured in a way that cannot work."""


class EvaluationError(ArithmeticError):
    """A numerical evaluation hit a forbidden value (e.g. a zero denominator)."""


class SymmetryError(ConfigurationError):
    """The symmetry hypothesis failed on sampled profiles."""

    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect
