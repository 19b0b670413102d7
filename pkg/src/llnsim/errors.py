"""Exception types shared across llnsim."""

from typing import Optional


class ConfigError(ValueError):
    """Invalid, unknown or missing configuration."""


class TraceFormatError(ValueError):
    """Malformed or inconsistent mobility trace file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchedulingError(RuntimeError):
    """An event was scheduled before the current simulated time."""


class InvariantViolation(RuntimeError):
    """A checked simulation invariant does not hold."""

    def __init__(self, invariant: str, detail: str):
        self.invariant = invariant
        self.detail = detail
        super().__init__(f"invariant '{invariant}' violated: {detail}")


class SimulationAborted(RuntimeError):
    """An event handler raised; carries the event being dispatched."""

    def __init__(self, cause: BaseException, ticks: int, seq: int, target: str, kind: str):
        self.cause = cause
        self.invariant = getattr(cause, "invariant", None)
        super().__init__(
            f"aborted at ticks={ticks} seq={seq} target={target} kind={kind}: {cause}"
        )


class ComparisonError(ValueError):
    """Static and mobile arms cannot be paired."""
