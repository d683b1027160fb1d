"""Exception types raised across hipdyn."""


class HipdynError(Exception):
    pass


class SingularMatrix(HipdynError, ArithmeticError):
    """A pivot fell below the scale-relative singularity threshold."""


class NoConvergence(HipdynError, ArithmeticError):
    pass


class HermitianityViolated(HipdynError, ValueError):
    pass


# Same failure, named after the observable-side check.
NotHermitian = HermitianityViolated


class DimMismatch(HipdynError, ValueError):
    pass


class NonConstantDeterminant(HipdynError, ValueError):
    """Exact 2x2 inversion needs det(t) to be a nonzero constant."""


class StepLimitExceeded(HipdynError, RuntimeError):
    pass


class MissingSample(HipdynError, LookupError):
    pass


class ConfigError(HipdynError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
