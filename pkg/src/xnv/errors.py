"""Exception hierarchy shared by the library and the command line tool."""


class XnvError(Exception):
    """Base class for every error raised deliberately by this package."""

    exit_code = 1


class ConfigError(XnvError, ValueError):
    """Invalid parameters or an infeasible experiment configuration."""

    exit_code = 1


class DataError(XnvError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class NumericalError(XnvError, ArithmeticError):
    """Singular systems, non-finite values, diverging optimisation."""

    exit_code = 3
