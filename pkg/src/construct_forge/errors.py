"""Exception hierarchy.

Each class maps to one CLI exit status so scripted runs can tell failures apart.
"""


class ConstructForgeError(Exception):
    exit_code = 1


class ConfigError(ConstructForgeError):
    """Bad model document, bad flags or an unusable pipeline configuration."""

    exit_code = 1


class ModelSpecError(ConfigError):
    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DataError(ConstructForgeError):
    """Panel content does not fit the model (arity, range, parse failures)."""

    exit_code = 2


class NumericalError(ConstructForgeError):
    exit_code = 3


class SingularMatrixError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class ComparisonFailure(ConstructForgeError):
    exit_code = 4


class LLMError(ConstructForgeError):
    exit_code = 2


class AuthenticationError(LLMError):
    exit_code = 1
