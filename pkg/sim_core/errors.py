class SimulationError(Exception):
    """Base class for every failure raised by the simulation engine."""


class SchedulingError(SimulationError):
    """An event was scheduled before the current simulation time."""


class InvariantViolation(SimulationError):
    """A runtime invariant broke; the run must abort."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        message = f"invariant '{invariant}' violated"
        if detail:
            message += f": {detail}"
        super().__init__(message)


__all__ = ["SimulationError", "SchedulingError", "InvariantViolation"]
