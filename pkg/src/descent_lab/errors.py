"""Exception taxonomy shared across the library.

The CLI maps these onto exit codes: configuration problems exit 2,
solver failures exit 3, certification failures exit 1.
"""


class ConfigError(ValueError):
    """A config, method id, or parameter combination is invalid."""


class CapabilityError(RuntimeError):
    """The objective lacks a derivative order or constant the caller needs."""


class SolverError(RuntimeError):
    """An iteration failed in a way that invalidates the run."""


class SubsolverError(SolverError):
    """An inner subproblem solve did not reach its residual tolerance.

    Carries the last residual so certificates can attribute descent
    violations to inexact subsolves.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class LineSearchError(SolverError):
    """The coupling line search failed to bracket its window."""

    def __init__(self, message, last_values=None):
        super().__init__(message)
        self.last_values = last_values
