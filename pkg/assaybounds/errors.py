"""Error hierarchy shared by the library and the command line.

Every error carries a human readable ``detail`` and the process ``exit_code``
the CLI reports for it.
"""


class AssayError(Exception):
    exit_code = 1

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(AssayError, ValueError):
    """Invalid parameters, shapes or config documents."""

    exit_code = 4


class UnsupportedOperation(ConfigError):
    """The operation is not defined for this density or partition variant."""


class PropertyViolation(AssayError):
    """A matrix property or bound requirement does not hold."""

    exit_code = 2


class SolverError(AssayError):
    """A solver or integrator failed to converge."""

    exit_code = 3
