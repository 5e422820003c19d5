"""Exception types. Each carries a machine-readable ``category`` used by the CLI."""
from __future__ import annotations


class IrsError(Exception):
    category = "error"


class PlacementError(IrsError, RuntimeError):
    """Users cannot be placed in the disk with the required separation."""

    category = "placement-failure"


class InfeasibleError(IrsError):
    """The SINR targets cannot be met for the given phase vector."""

    category = "infeasible"


class InitializationInfeasible(IrsError):
    """No feasible starting point was found within the retry budget."""

    category = "initialization-infeasible"


class SolverFailure(IrsError, RuntimeError):
    """A conic subproblem ended without an optimal or infeasible verdict.

    ``trace`` and ``design`` hold the progress made before the failure, if any.
    """

    category = "solver-failure"

    def __init__(self, message: str, trace=None, design=None):
        super().__init__(message)
        self.trace = trace
        self.design = design


class ConfigError(IrsError, ValueError):
    category = "config-error"


class FormatError(IrsError, ValueError):
    """Malformed instance or design file; the message names the line."""

    category = "format-error"


class InfeasibleSolution(IrsError):
    category = "infeasible-solution"
