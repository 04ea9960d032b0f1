"""Exception types raised by the estimators and the harness."""


class PhmmError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModel(PhmmError, ValueError):
    """A parameter set violates a probability constraint."""


class DegenerateLikelihood(PhmmError, ArithmeticError):
    """The data has zero probability under the model.

    ``timestep`` is the 0-based index at which the forward mass vanished.
    """

    def __init__(self, timestep, message=None):
        self.timestep = timestep
        if message is None:
            message = f"zero likelihood at timestep {timestep}"
        super().__init__(message)


class DegenerateStatistics(PhmmError, ArithmeticError):
    """A state received zero expected occupancy during re-estimation."""

    def __init__(self, state):
        self.state = state
        super().__init__(f"state {state} has zero expected occupancy")


class InstanceTooLarge(PhmmError, ValueError):
    """Exhaustive enumeration was requested on too many paths."""


class UndefinedMargin(PhmmError, ValueError):
    """Baseline error does not exceed oracle error, so no margin exists."""
