"""Typed errors shared across the toolkit."""


class QuarterstepError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(QuarterstepError, ValueError):
    """An argument is outside its documented domain (non-finite, wrong shape, ...)."""


class UnsupportedOperationError(QuarterstepError):
    """The target does not advertise the capability required by the operation."""


class ConvergenceError(QuarterstepError):
    """An iterative solver hit its iteration cap.

    Carries the last iterate and its gradient norm so callers can inspect
    how close the solver got.
    """

    def __init__(self, message, last_iterate=None, grad_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm


class DivergenceError(QuarterstepError):
    """A trajectory produced a non-finite coordinate.

    ``inner_step`` is the leapfrog step index inside the trajectory;
    ``outer_step`` is the Markov-chain step, filled in by samplers.
    """

    def __init__(self, message, inner_step=None, outer_step=None):
        super().__init__(message)
        self.inner_step = inner_step
        self.outer_step = outer_step


class DegenerateSeriesError(QuarterstepError):
    """A statistic was requested on a series with zero sample variance."""


class FormulaDomainError(QuarterstepError):
    """Planner inputs fall outside the domain of a closed-form expression."""
