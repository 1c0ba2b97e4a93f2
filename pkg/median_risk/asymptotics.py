"""
Closed-form higher-order expansions of the maximal n*MSE of median variants.

The expansion reads

    n*MSE = 1/(4 f0^2) * [ (1 + r^2)
                           + r/sqrt(n) * (a10 + a11 f1/f0^2)
                           + 1/n * (a20 + a21 f1/f0^2 + a22 f2/f0^3 + a23 f1^2/f0^4) ]

with a2x = a2x_c + a2x_r split into an ideal-model part (c) and a part
caused by the contamination (r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from median_risk.distributions import IdealDistribution, make_normal
from median_risk.errors import NegativeRadius, WrongParity
from median_risk.results import Method, Order, RiskResult
from median_risk.variants import MedianVariant, Side, check_parity


def _sign(x: float) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _check_radius(r: float) -> None:
    if r < 0 or math.isnan(r):
        raise NegativeRadius(f"contamination radius must be >=0, got {r}")


@dataclass(frozen=True)
class ExpansionCoefficients:
    variant: MedianVariant
    r: float
    a10: float
    a11: float
    a20c: float
    a20r: float
    a21c: float
    a21r: float
    a22c: float
    a22r: float
    a23: float
    side: int
    s_prime: int = 0
    s: int = 0
    f1_ratio: float = 0.0  # f1/f0^2
    f2_ratio: float = 0.0  # f2/f0^3

    @property
    def a20(self) -> float:
        return self.a20c + self.a20r

    @property
    def a21(self) -> float:
        return self.a21c + self.a21r

    @property
    def a22(self) -> float:
        return self.a22c + self.a22r

    @property
    def a1(self) -> float:
        """Coefficient of r/sqrt(n) inside the bracket."""
        return self.a10 + self.a11 * self.f1_ratio

    @property
    def a2(self) -> float:
        """Coefficient of 1/n inside the bracket."""
        return self.a20 + self.a21 * self.f1_ratio + self.a22 * self.f2_ratio + self.a23 * self.f1_ratio**2

    @property
    def worst_side(self) -> Optional[Side]:
        return Side.from_sign(self.side)


def _common_terms(r: float) -> tuple[float, float, float]:
    r2 = r * r
    r4 = r2 * r2
    a22c = -0.25
    a22r = -(r4 + 6.0 * r2) / 12.0
    a23 = 5.0 * (r4 + 6.0 * r2 + 3.0) / 16.0
    return a22c, a22r, a23


def coefficients_odd(dist: IdealDistribution, r: float) -> ExpansionCoefficients:
    """
    Odd-n sample median.

    The worst side follows sign(f1): for f1 > 0 the median is pushed into the
    thinner left part of F by contamination on the left.
    """
    _check_radius(r)
    r2 = r * r
    sigma = _sign(dist.f1)
    a22c, a22r, a23 = _common_terms(r)
    return ExpansionCoefficients(
        variant=MedianVariant.ODD_MEDIAN,
        r=r,
        a10=2.0 * (1.0 + r2),
        a11=(r2 + 3.0) * sigma / 2.0,
        a20c=-2.0,
        a20r=3.0 * r2 + 3.0 * r2 * r2,
        a21c=0.0,
        a21r=3.0 * r2 * (3.0 + r2) * sigma / 2.0,
        a22c=a22c,
        a22r=a22r,
        a23=a23,
        side=sigma,
        f1_ratio=dist.f1 / dist.f0**2,
        f2_ratio=dist.f2 / dist.f0**3,
    )


def coefficients_even(dist: IdealDistribution, r: float, variant: MedianVariant) -> ExpansionCoefficients:
    _check_radius(r)
    if variant is MedianVariant.ODD_MEDIAN:
        raise WrongParity("coefficients_even does not cover the odd-n median")

    r2 = r * r
    r4 = r2 * r2
    f0, f1 = dist.f0, dist.f1
    a22c, a22r, a23 = _common_terms(r)
    f1_ratio = f1 / f0**2
    f2_ratio = dist.f2 / f0**3

    if variant.is_quantile:
        s_prime = variant.quantile_sign
        s = _sign((3.0 + r2) * f1 + 4.0 * s_prime * f0 * f0)
        # Mirroring F swaps the two quantiles and flips f1: terms even in f1
        # depend on s'*s only, terms odd in f1 change sign with s.
        ss = s_prime * s
        return ExpansionCoefficients(
            variant=variant,
            r=r,
            a10=2.0 + 2.0 * ss + 2.0 * r2,
            a11=(r2 + 3.0) * s / 2.0,
            a20c=-1.0,
            a20r=3.0 * r4 + (3.0 + 4.0 * ss) * r2,
            a21c=1.5 * s_prime,
            a21r=1.5 * s * ((3.0 + ss) * r2 + r4),
            a22c=a22c,
            a22r=a22r,
            a23=a23,
            side=s,
            s_prime=s_prime,
            s=s,
            f1_ratio=f1_ratio,
            f2_ratio=f2_ratio,
        )

    sigma = _sign(f1)
    a10 = 2.0 * (1.0 + r2)
    a11 = (r2 + 3.0) * sigma / 2.0
    a21r = 3.0 * r2 * (3.0 + r2) * sigma / 2.0
    if variant is MedianVariant.MIDPOINT:
        a20c, a20r, a21c = -3.0, 3.0 * r2 + 3.0 * r4, 0.0
    elif variant is MedianVariant.RANDOMIZED:
        a20c, a20r, a21c = -1.0, 3.0 * r2 + 3.0 * r4, 0.0
    else:  # bias-corrected lower quantile
        a20c, a20r, a21c = -2.0, 3.0 * r4 + 3.0 * r2 + 2.0 * r2 * sigma, 1.0
        a21r += r2
    return ExpansionCoefficients(
        variant=variant,
        r=r,
        a10=a10,
        a11=a11,
        a20c=a20c,
        a20r=a20r,
        a21c=a21c,
        a21r=a21r,
        a22c=a22c,
        a22r=a22r,
        a23=a23,
        side=sigma,
        f1_ratio=f1_ratio,
        f2_ratio=f2_ratio,
    )


def coefficients(dist: IdealDistribution, r: float, variant: MedianVariant) -> ExpansionCoefficients:
    if variant is MedianVariant.ODD_MEDIAN:
        return coefficients_odd(dist, r)
    return coefficients_even(dist, r, variant)


def expansion_value(
    dist: IdealDistribution, coeffs: ExpansionCoefficients, n: int, order: Order
) -> float:
    r = coeffs.r
    bracket = 1.0 + r * r
    if order.rank >= Order.HALF.rank:
        bracket += r / math.sqrt(n) * coeffs.a1
    if order.rank >= Order.ONE.rank:
        bracket += coeffs.a2 / n
    return dist.risk_scale * bracket


def asy_mse(
    dist: IdealDistribution,
    r: float,
    n: int,
    variant: MedianVariant,
    order: Order = Order.ONE,
) -> RiskResult:
    _check_radius(r)
    check_parity(n, variant)
    coeffs = coefficients(dist, r, variant)
    return RiskResult(
        value=expansion_value(dist, coeffs, n, order),
        method=Method.for_order(order),
        n=n,
        r=r,
        variant=variant,
    )


@dataclass(frozen=True)
class BiasVariance:
    var: float  # n * Var
    abs_bias: float  # sqrt(n) * |Bias|
    bias_sq: float  # n * Bias^2


def bias_var_expansion(dist: IdealDistribution, r: float, n: int) -> BiasVariance:
    """
    Split the worst-case n*MSE of the odd median (odd n) or the midpoint
    (even n) into variance and bias, through order 1/n.

    The variance and squared-bias terms add up to the MSE expansion
    coefficient by coefficient.
    """
    _check_radius(r)
    if n < 1:
        raise WrongParity(f"sample size must be >=1, got {n}")
    f0, f1, f2 = dist.f0, dist.f1, dist.f2
    af1 = abs(f1)
    r2 = r * r
    r4 = r2 * r2
    parity = (5.0 + (-1.0) ** n) / 2.0
    rn = math.sqrt(n)

    var = dist.risk_scale * (
        1.0
        + r / rn * (2.0 + af1 / f0**2)
        + (
            3.0 * r2
            - parity
            + 3.0 * af1 * r2 / f0**2
            - f2 * (r2 + 1.0) / (4.0 * f0**3)
            + f1**2 * (8.0 * r2 + 7.0) / (8.0 * f0**4)
        )
        / n
    )
    abs_bias = (1.0 / (2.0 * f0)) * (
        r
        + (r2 + af1 * (r2 + 1.0) / (4.0 * f0**2)) / rn
        + r
        / n
        * (
            r2
            + af1 * (r2 + 1.0) / (2.0 * f0**2)
            - f2 * (r2 + 3.0) / (24.0 * f0**3)
            + f1**2 * (r2 + 3.0) / (8.0 * f0**4)
        )
    )
    bias_sq = dist.risk_scale * (
        r2
        + r / rn * (2.0 * r2 + af1 * (r2 + 1.0) / (2.0 * f0**2))
        + (
            3.0 * r4
            + 3.0 * af1 * r2 * (r2 + 1.0) / (2.0 * f0**2)
            - f2 * r2 * (r2 + 3.0) / (12.0 * f0**3)
            + f1**2 * (5.0 * r4 + 14.0 * r2 + 1.0) / (16.0 * f0**4)
        )
        / n
    )
    return BiasVariance(var=var, abs_bias=abs_bias, bias_sq=bias_sq)


def normal_specialization(r: float, n: int, variant: MedianVariant, order: Order = Order.ONE) -> RiskResult:
    """asy_mse at F = N(0,1), i.e. f1 = 0 and f2/f0^3 = -2*pi substituted into the general form."""
    return asy_mse(_NORMAL, r, n, variant, order)


def ideal_normal_coefficient(variant: MedianVariant) -> float:
    """c in n*MSE = pi/2 * (1 + c/n) for the ideal normal model."""
    coeffs = coefficients(_NORMAL, 0.0, variant)
    return coeffs.a2


def fixed_radius_plug_in(s: float, n: int) -> float:
    """
    Radius r = s*sqrt(n) that turns a fixed contamination fraction s into the
    shrinking-radius parametrisation. The expansions are not claimed to hold
    in that regime; this only documents the formal substitution.
    """
    if s < 0:
        raise NegativeRadius(f"contamination fraction must be >=0, got {s}")
    return s * math.sqrt(n)


_NORMAL = make_normal()
