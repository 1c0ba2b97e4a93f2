from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from median_risk.errors import DomainError
from median_risk.variants import MedianVariant


class Method(str, Enum):
    ASY0 = "asy0"
    ASY_HALF = "asy-half"
    ASY_ONE = "asy1"
    EXACT = "exact"
    SIMULATED = "sim"

    @classmethod
    def for_order(cls, order: "Order") -> "Method":
        return {Order.ZERO: cls.ASY0, Order.HALF: cls.ASY_HALF, Order.ONE: cls.ASY_ONE}[order]

    @property
    def order(self) -> Optional["Order"]:
        return {Method.ASY0: Order.ZERO, Method.ASY_HALF: Order.HALF, Method.ASY_ONE: Order.ONE}.get(self)


class Order(str, Enum):
    """Truncation point of the n*MSE expansion: n^0, n^-1/2 or n^-1."""

    ZERO = "0"
    HALF = "half"
    ONE = "one"

    @classmethod
    def parse(cls, text: "str | Order") -> "Order":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        mapping = {
            "0": cls.ZERO, "zero": cls.ZERO, "first": cls.ZERO, "1st": cls.ZERO,
            "half": cls.HALF, "0.5": cls.HALF, "second": cls.HALF, "2nd": cls.HALF,
            "one": cls.ONE, "1": cls.ONE, "third": cls.ONE, "3rd": cls.ONE,
        }
        if key not in mapping:
            raise ValueError(f"Unknown expansion order: {text!r}")
        return mapping[key]

    @property
    def rank(self) -> int:
        return {Order.ZERO: 0, Order.HALF: 1, Order.ONE: 2}[self]


@dataclass(frozen=True)
class RiskResult:
    value: float
    method: Method
    n: int
    r: float
    variant: MedianVariant
    ci: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value > 0):
            raise DomainError(
                f"n*MSE must be positive, got {self.value!r} (n={self.n}, r={self.r}, "
                f"variant={self.variant.value}, method={self.method.value})"
            )
        if self.ci is not None:
            lo, hi = self.ci
            if not lo <= self.value <= hi:
                raise DomainError(f"confidence interval [{lo}, {hi}] does not contain {self.value}")
        elif self.method is Method.SIMULATED:
            raise DomainError("simulated results carry a confidence interval")

    def to_row(self) -> dict[str, Any]:
        lo, hi = self.ci if self.ci is not None else (None, None)
        return {
            "n": self.n,
            "r": self.r,
            "variant": self.variant.value,
            "method": self.method.value,
            "value": self.value,
            "ci_lo": lo,
            "ci_hi": hi,
        }
