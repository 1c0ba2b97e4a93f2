"""Binomial tail bounds and moments for the contamination count K ~ Bin(n, r/sqrt(n))."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from median_risk.errors import DomainError


def _probability(n: int, r: float) -> float:
    if n < 1:
        raise DomainError(f"n must be >=1, got {n}")
    if r < 0:
        raise DomainError(f"r must be >=0, got {r}")
    p = r / math.sqrt(n)
    if p > 1.0:
        raise DomainError(f"r/sqrt(n) = {p:.4g} exceeds 1")
    return p


def kappa(k1: float) -> float:
    """k1*log(k1) + 1 - k1, the exponent rate of the tail bound."""
    if not k1 > 1:
        raise DomainError(f"k1 must be >1, got {k1}")
    return k1 * math.log(k1) + 1.0 - k1


@dataclass(frozen=True)
class TailBound:
    n: int
    r: float
    k1: float
    kappa: float
    bound: float  # bound on P(K > k1 * r * sqrt(n))
    asymptotic: float  # exp(-kappa * r * sqrt(n)); reported, not a bound

    @property
    def threshold(self) -> float:
        return self.k1 * self.r * math.sqrt(self.n)


def hoeffding_tail(n: int, r: float, k1: float) -> TailBound:
    """
    Hoeffding's entropy bound for P(K > k1 r sqrt(n)):

        [(mu/(mu+eps))^(mu+eps) * ((1-mu)/(1-mu-eps))^(1-mu-eps)]^n

    with mu = r/sqrt(n) and eps = (k1-1) mu.
    """
    k = kappa(k1)
    p = _probability(n, r)
    if p == 0.0:
        return TailBound(n=n, r=r, k1=k1, kappa=k, bound=0.0, asymptotic=0.0)
    eps = (k1 - 1.0) * p
    if not 0.0 < eps < 1.0 - p:
        raise DomainError(f"need 0 < (k1-1) r/sqrt(n) < 1 - r/sqrt(n), got eps={eps:.4g} p={p:.4g}")
    hi = p + eps
    log_bound = n * (hi * math.log(p / hi) + (1.0 - hi) * (math.log1p(-p) - math.log1p(-hi)))
    return TailBound(
        n=n,
        r=r,
        k1=k1,
        kappa=k,
        bound=min(1.0, math.exp(log_bound)),
        asymptotic=math.exp(-k * r * math.sqrt(n)),
    )


def thinning_probability(n: int, r: float, threshold: int) -> float:
    """Exact P(Bin(n, r/sqrt(n)) > threshold), summed in log space."""
    p = _probability(n, r)
    if not 0 <= threshold <= n:
        raise DomainError(f"threshold must lie in 0..{n}, got {threshold}")
    if threshold == n or p == 0.0:
        return 0.0
    ks = np.arange(threshold + 1, n + 1)
    return float(min(1.0, math.exp(logsumexp(stats.binom.logpmf(ks, n, p)))))


def hoeffding_thinning_bound(n: int, r: float, threshold: int) -> float:
    """exp(-2n(eps - r/sqrt(n))^2) with eps = (threshold+1)/n; 1 when eps <= r/sqrt(n)."""
    p = _probability(n, r)
    eps = (threshold + 1) / n
    if eps <= p:
        return 1.0
    return math.exp(-2.0 * n * (eps - p) ** 2)


def binomial_moments(n: int, r: float, order: int) -> float:
    """E[K^order] for K ~ Bin(n, r/sqrt(n)), order 1..4, as polynomials in sqrt(n)."""
    if order not in (1, 2, 3, 4):
        raise DomainError(f"order must be 1..4, got {order}")
    _probability(n, r)
    s = math.sqrt(n)
    r2, r3, r4 = r**2, r**3, r**4
    if order == 1:
        return r * s
    if order == 2:
        return r2 * n + r * s - r2
    if order == 3:
        return r3 * n * s + 3.0 * r2 * n + (r - 3.0 * r3) * s - 3.0 * r2 + 2.0 * r3 / s
    return (
        r4 * n * n
        + 6.0 * r3 * n * s
        + (7.0 * r2 - 6.0 * r4) * n
        + (r - 18.0 * r3) * s
        + 11.0 * r4
        - 7.0 * r2
        + 12.0 * r3 / s
        - 6.0 * r4 / n
    )


def brute_force_moment(n: int, p: float, order: int) -> float:
    ks = np.arange(n + 1, dtype=float)
    return float(np.sum(ks**order * stats.binom.pmf(ks, n, p)))
