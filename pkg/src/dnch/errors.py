"""Exception hierarchy shared by all modules."""


class DnchError(Exception):
    """Base class for every error raised by :mod:`dnch`."""


class GridMismatchError(DnchError, ValueError):
    """A field does not live on the grid it was paired with."""


class ContractViolation(DnchError, ValueError):
    """An operator precondition on its input data was not met."""


class ConfigurationError(DnchError, ValueError):
    """Invalid model, solver or experiment configuration.

    ``violations`` holds every problem found, not just the first one.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class DomainViolation(DnchError, ValueError):
    """A state left the admissible interval of a singular potential."""


class UnsupportedError(DnchError, NotImplementedError):
    """The requested combination of inputs is outside what is implemented."""


class NumericalError(DnchError, RuntimeError):
    """An iterative method failed to converge.

    Parameters
    ----------
    message : str
    history : sequence of float, optional
        Residual norms recorded during the iteration.
    state : dict, optional
        Solver state at failure (bracket endpoints, best iterate, ...).
    """

    def __init__(self, message, history=None, state=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.state = dict(state) if state else {}


class StepFailure(NumericalError):
    """Newton failed on a time step; carries the best iterate found."""

    def __init__(self, message, history=None, state=None, step_index=None):
        super().__init__(message, history, state)
        self.step_index = step_index


class InvariantViolation(DnchError, RuntimeError):
    """A discrete identity or inequality checked along a run failed."""
