from __future__ import annotations


class MedianRiskError(Exception):
    """Base class for every failure raised by the library."""


class NonMedianCentered(MedianRiskError, ValueError):
    pass


class InvalidDensity(MedianRiskError, ValueError):
    pass


class NegativeRadius(MedianRiskError, ValueError):
    pass


class WrongParity(MedianRiskError, ValueError):
    pass


ParityError = WrongParity


class IndexOutOfRange(MedianRiskError, ValueError):
    pass


class DomainError(MedianRiskError, ValueError):
    pass


class DegenerateConfig(MedianRiskError, ValueError):
    pass


class QuadratureFailure(MedianRiskError, ArithmeticError):
    pass


class NotReached(MedianRiskError, RuntimeError):
    def __init__(self, message: str, *, n_cap: int) -> None:
        super().__init__(message)
        self.n_cap = n_cap
