"""Exception hierarchy shared by all latnet modules."""

from __future__ import annotations


class LatnetError(Exception):
    """Base class for every error raised by latnet."""


class InvalidArgument(LatnetError, ValueError):
    pass


class PreconditionViolation(LatnetError):
    pass


class NumericalFailure(LatnetError):
    """A dense eigen/linear solve failed at a particular torus point."""

    def __init__(self, message, sigma=None):
        super().__init__(message)
        self.sigma = sigma


class ResolventSingular(LatnetError):
    """``sI - A(sigma)`` is singular or too ill-conditioned to invert."""

    def __init__(self, s, sigma, condition):
        self.s = s
        self.sigma = sigma
        self.condition = condition
        super().__init__(
            f"resolvent singular at s={s!r}, sigma={list(map(float, sigma))}, "
            f"condition estimate {condition:.3e}"
        )


class UnsupportedForN(LatnetError):
    """The dissipation matrix is only defined for a static supply."""


class DivergenceError(LatnetError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"non-finite state encountered at t={time:g}")
