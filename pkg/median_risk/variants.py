from __future__ import annotations

from enum import Enum

from median_risk.errors import WrongParity


class MedianVariant(str, Enum):
    ODD_MEDIAN = "odd"
    LOWER_QUANTILE = "lower"
    UPPER_QUANTILE = "upper"
    RANDOMIZED = "randomized"
    MIDPOINT = "midpoint"
    BIAS_CORRECTED = "bias-corrected"

    @classmethod
    def parse(cls, text: "str | MedianVariant") -> "MedianVariant":
        if isinstance(text, cls):
            return text
        key = text.strip().lower().replace("_", "-")
        alias = _ALIASES.get(key, key)
        for variant in cls:
            if variant.value == alias:
                return variant
        raise ValueError(f"Unknown median variant: {text!r} (choose from {', '.join(v.value for v in cls)})")

    @property
    def needs_odd_n(self) -> bool:
        return self is MedianVariant.ODD_MEDIAN

    @property
    def is_quantile(self) -> bool:
        return self in (MedianVariant.LOWER_QUANTILE, MedianVariant.UPPER_QUANTILE)

    @property
    def quantile_sign(self) -> int:
        """+1 for the lower, -1 for the upper central order statistic, 0 otherwise."""
        if self is MedianVariant.LOWER_QUANTILE:
            return 1
        if self is MedianVariant.UPPER_QUANTILE:
            return -1
        return 0


_ALIASES = {
    "median": "odd",
    "odd-median": "odd",
    "lower-quantile": "lower",
    "upper-quantile": "upper",
    "random": "randomized",
    "mid": "midpoint",
    "bias-corrected": "bias-corrected",
    "biascorrected": "bias-corrected",
    "corrected": "bias-corrected",
}


class Side(str, Enum):
    """Where the contaminating mass sits relative to the ideal observations."""

    LEFT = "left"
    RIGHT = "right"

    @classmethod
    def from_sign(cls, sign: int) -> "Side | None":
        if sign > 0:
            return cls.LEFT
        if sign < 0:
            return cls.RIGHT
        return None


def check_parity(n: int, variant: MedianVariant) -> None:
    if n < 1:
        raise WrongParity(f"sample size must be >=1, got {n}")
    odd = n % 2 == 1
    if variant.needs_odd_n and not odd:
        raise WrongParity(f"{variant.value} needs an odd sample size, got n={n}")
    if not variant.needs_odd_n and odd:
        raise WrongParity(f"{variant.value} needs an even sample size, got n={n}")


def default_variant_rule(n: int) -> MedianVariant:
    """Odd n -> sample median, even n -> midpoint."""
    return MedianVariant.ODD_MEDIAN if n % 2 == 1 else MedianVariant.MIDPOINT
