"""Exception types shared across the package."""


class BeliefReachError(Exception):
    """Base class for all package errors."""


class RejectedInputError(BeliefReachError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateGoalError(RejectedInputError):
    """The human is exactly at the goal; the heading toward it is undefined."""


class InfeasibleThresholdError(BeliefReachError):
    """The likelihood threshold exceeds the peak density, leaving no allowable control."""

    def __init__(self, delta: float, peak: float):
        super().__init__(
            f"threshold delta={delta:g} exceeds the peak density {peak:.6g}; "
            "no control is allowable"
        )
        self.delta = delta
        self.peak = peak


class NumericalBlowupError(BeliefReachError):
    """The PDE solve produced a non-finite value."""

    def __init__(self, step: int):
        super().__init__(f"non-finite value detected at solver step {step}")
        self.step = step


class ScenarioError(BeliefReachError, ValueError):
    """A scenario document violates the schema."""

    def __init__(self, path: str, constraint: str):
        super().__init__(f"{path}: {constraint}")
        self.path = path
        self.constraint = constraint


class NoTrajectoryError(BeliefReachError):
    """Control extraction was requested from a tube that never hits its target."""
