"""Exception types mapped onto CLI exit codes."""


class QuadwellError(Exception):
    exit_code = 1


class ConfigError(QuadwellError, ValueError):
    """Invalid parameters or configuration (exit code 2)."""

    exit_code = 2


class NumericalError(QuadwellError, ArithmeticError):
    """A numerical routine could not deliver its contract (exit code 3)."""

    exit_code = 3


class ConvergenceError(NumericalError):
    pass
