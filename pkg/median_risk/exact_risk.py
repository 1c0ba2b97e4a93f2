"""
Finite-n risk by numerical integration over order-statistic densities.

Given K = k contaminated observations, an estimator built from central order
statistics of the whole sample equals an order statistic (or an adjacent pair)
of the N = n - k ideal observations: with the contamination on the right the
index is unchanged, with the contamination on the left it drops by k. The
n*MSE is the binomial mixture over k of these conditional second moments,
restricted to k <= ceil(n/2) - 1.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import special, stats

from median_risk.asymptotics import asy_mse
from median_risk.distributions import IdealDistribution
from median_risk.errors import DomainError, IndexOutOfRange, NegativeRadius, NotReached, WrongParity
from median_risk.parallel import parallel_map
from median_risk.quadrature import (
    QuadratureSpec,
    integrate_1d,
    log_binom_coef,
    order_stat_log_density,
    order_stat_window,
)
from median_risk.results import Method, Order, RiskResult
from median_risk.variants import MedianVariant, Side, check_parity, default_variant_rule


logger = logging.getLogger(__name__)

VariantRule = Callable[[int], MedianVariant]

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class ContaminationConfig:
    r: float
    side: Side = Side.RIGHT
    renormalize_weights: bool = True
    contamination_point: Optional[float] = None  # None: contamination beyond the integration range

    def __post_init__(self) -> None:
        if self.r < 0 or math.isnan(self.r):
            raise NegativeRadius(f"contamination radius must be >=0, got {self.r}")
        if self.contamination_point is not None and not math.isfinite(self.contamination_point):
            raise DomainError("contamination_point must be finite (use None for the limit mode)")

    @staticmethod
    def thinning(n: int) -> int:
        """Largest admissible number of contaminated observations."""
        return (n + 1) // 2 - 1

    def probability(self, n: int) -> float:
        p = self.r / math.sqrt(n)
        if p >= 1.0:
            raise DomainError(f"r/sqrt(n) = {p:.4g} must be <1 (r={self.r}, n={n})")
        return p


def contamination_weights(n: int, config: ContaminationConfig) -> np.ndarray:
    """Binomial(n, r/sqrt(n)) weights for k = 0..thinning(n), optionally conditioned on the thinning event."""
    p = config.probability(n)
    ks = np.arange(config.thinning(n) + 1)
    if p == 0.0:
        weights = np.zeros(len(ks))
        weights[0] = 1.0
        return weights
    weights = np.exp(stats.binom.logpmf(ks, n, p))
    if config.renormalize_weights:
        weights = weights / weights.sum()
    return weights


def order_stat_density(dist: IdealDistribution, n: int, k: int, t):
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"order statistic index k={k} outside 1..{n}")
    return np.exp(order_stat_log_density(dist, n, k, t))


def order_stat_cdf(dist: IdealDistribution, n: int, k: int, t):
    """P(X_[k:n] <= t) = I_{F(t)}(k, n-k+1)."""
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"order statistic index k={k} outside 1..{n}")
    return special.betainc(k, n - k + 1, dist.cdf(t))


def contaminated_density(dist: IdealDistribution, n: int, j: int, k: int, t):
    """
    Density of the odd-n median given k contaminated observations of which j
    lie below t. It is the density of the (m+1-j)-th of the n-k ideal
    observations: j = k is contamination on the left, j = 0 on the right.
    """
    if n % 2 == 0:
        raise WrongParity(f"contaminated_density needs odd n, got {n}")
    m = n // 2
    if not 0 <= j <= k <= m:
        raise IndexOutOfRange(f"need 0 <= j <= k <= {m}, got j={j} k={k}")
    return order_stat_density(dist, n - k, m + 1 - j, t)


def _side_index(i: int, k: int, side: Side) -> int:
    return i if side is Side.RIGHT else i - k


def _second_moment(
    dist: IdealDistribution,
    N: int,
    i: int,
    spec: QuadratureSpec,
    *,
    shift: float = 0.0,
    lo: Optional[float] = None,
    hi: Optional[float] = None,
) -> float:
    """E[(X_[i:N] + shift)^2], optionally restricted to lo < X <= hi."""
    w_lo, w_hi = order_stat_window(dist, N, i, spec.tail_mass)
    a = w_lo if lo is None else max(w_lo, lo)
    b = w_hi if hi is None else min(w_hi, hi)

    def integrand(t: float) -> float:
        return (t + shift) ** 2 * math.exp(order_stat_log_density(dist, N, i, t))

    return integrate_1d(integrand, a, b, spec=spec, what=f"second moment of X[{i}:{N}]")


def _single_stat_conditional(
    dist: IdealDistribution,
    n: int,
    i: int,
    k: int,
    config: ContaminationConfig,
    spec: QuadratureSpec,
    shift: float,
) -> float:
    N = n - k
    x0 = config.contamination_point
    if x0 is None or k == 0:
        return _second_moment(dist, N, _side_index(i, k, config.side), spec, shift=shift)
    # All k contaminated values sit at x0: below x0 the estimator is the i-th
    # ideal statistic, above x0 the (i-k)-th, otherwise it equals x0.
    below = _second_moment(dist, N, i, spec, shift=shift, hi=x0)
    above = _second_moment(dist, N, i - k, spec, shift=shift, lo=x0)
    F0 = float(dist.cdf(x0))
    atom = float(special.betainc(i - k, N - i + k + 1, F0) - special.betainc(i, N - i + 1, F0))
    return below + above + max(atom, 0.0) * (x0 + shift) ** 2


def _mix(
    n: int,
    config: ContaminationConfig,
    spec: QuadratureSpec,
    conditional: Callable[[int], float],
) -> float:
    weights = contamination_weights(n, config)
    total = 0.0
    for k, w in enumerate(weights):
        if w < spec.weight_floor:
            continue
        total += w * conditional(k)
    return n * total


def _single_stat_mse(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    i: int,
    spec: QuadratureSpec,
    shift: float = 0.0,
) -> float:
    return _mix(n, config, spec, lambda k: _single_stat_conditional(dist, n, i, k, config, spec, shift))


def exact_mse_odd(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RiskResult:
    check_parity(n, MedianVariant.ODD_MEDIAN)
    value = _single_stat_mse(dist, config, n, n // 2 + 1, quad)
    return RiskResult(value=value, method=Method.EXACT, n=n, r=config.r, variant=MedianVariant.ODD_MEDIAN)


def midpoint_density_ideal(dist: IdealDistribution, n: int, t: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Density at t of the midpoint of the two central order statistics, n even."""
    if n < 2 or n % 2 == 1:
        raise WrongParity(f"midpoint density needs even n >= 2, got {n}")
    m = n // 2
    log_const = 2.0 * math.log(n) + log_binom_coef(n - 1, m)
    lo, hi = order_stat_window(dist, n, m + 1, quad.tail_mass)
    upper = max(hi, t + (hi - lo))

    def integrand(u: float) -> float:
        v = 2.0 * t - u
        log_val = log_const + dist.log_pdf(u) + dist.log_pdf(v)
        if m > 1:
            log_val += (m - 1) * (dist.log_cdf(v) + dist.log_sf(u))
        return math.exp(log_val)

    return integrate_1d(integrand, t, upper, spec=quad, what=f"midpoint density n={n} t={t}")


def _adjacent_pair_second_moment(dist: IdealDistribution, N: int, i: int, spec: QuadratureSpec) -> float:
    """
    E[((X_[i:N] + X_[i+1:N]) / 2)^2] from the two marginal second moments and
    the cross moment E[X_[i:N] X_[i+1:N]].

    Given X_[i+1:N] = z, X_[i:N] is the maximum of i draws from F restricted to
    (-inf, z], so E[X_[i:N] | z] = z - int_{-inf}^z (F(x) / F(z))^i dx.
    """
    if not 1 <= i < N:
        raise IndexOutOfRange(f"adjacent pair ({i}, {i + 1}) outside 1..{N}")
    log_tail = math.log(spec.tail_mass) / i

    def conditional_mean(z: float) -> float:
        log_fz = float(dist.log_cdf(z))
        # (F(x) / F(z))^i < tail_mass left of lo
        lo = float(dist.quantile(max(math.exp(log_fz + log_tail), _TINY)))

        def gap(x: float) -> float:
            return math.exp(i * (float(dist.log_cdf(x)) - log_fz))

        return z - integrate_1d(gap, lo, z, spec=spec, what=f"conditional mean of X[{i}:{N}] at z={z:.6g}")

    def cross(z: float) -> float:
        return z * conditional_mean(z) * math.exp(order_stat_log_density(dist, N, i + 1, z))

    z_lo, z_hi = order_stat_window(dist, N, i + 1, spec.tail_mass)
    mixed = integrate_1d(cross, z_lo, z_hi, spec=spec, what=f"cross moment of X[{i}:{N}] and X[{i + 1}:{N}]")
    return 0.25 * (_second_moment(dist, N, i, spec) + _second_moment(dist, N, i + 1, spec) + 2.0 * mixed)


def exact_mse_midpoint(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RiskResult:
    check_parity(n, MedianVariant.MIDPOINT)
    m = n // 2
    x0 = config.contamination_point
    side = config.side
    if x0 is not None and config.r > 0:
        lo, _ = order_stat_window(dist, n, 1, quad.tail_mass)
        _, hi = order_stat_window(dist, n, n, quad.tail_mass)
        if lo < x0 < hi:
            raise DomainError(
                f"finite contamination point {x0} inside the integration window [{lo:.3g}, {hi:.3g}] "
                "is only supported for single order statistics"
            )
        side = Side.RIGHT if x0 >= hi else Side.LEFT

    def conditional(k: int) -> float:
        return _adjacent_pair_second_moment(dist, n - k, _side_index(m, k, side), quad)

    value = _mix(n, config, quad, conditional)
    return RiskResult(value=value, method=Method.EXACT, n=n, r=config.r, variant=MedianVariant.MIDPOINT)


def _single_stat_index(n: int, variant: MedianVariant) -> int:
    if variant is MedianVariant.ODD_MEDIAN:
        return n // 2 + 1
    if variant in (MedianVariant.LOWER_QUANTILE, MedianVariant.BIAS_CORRECTED):
        return n // 2
    if variant is MedianVariant.UPPER_QUANTILE:
        return n // 2 + 1
    raise ValueError(f"{variant.value} is not a single order statistic")


def exact_mse(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    variant: MedianVariant,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RiskResult:
    check_parity(n, variant)
    if variant is MedianVariant.ODD_MEDIAN:
        return exact_mse_odd(dist, config, n, quad)
    if variant is MedianVariant.MIDPOINT:
        return exact_mse_midpoint(dist, config, n, quad)
    if variant is MedianVariant.RANDOMIZED:
        lower = _single_stat_mse(dist, config, n, n // 2, quad)
        upper = _single_stat_mse(dist, config, n, n // 2 + 1, quad)
        value = 0.5 * (lower + upper)
    else:
        shift = 1.0 / (2.0 * n * dist.f0) if variant is MedianVariant.BIAS_CORRECTED else 0.0
        value = _single_stat_mse(dist, config, n, _single_stat_index(n, variant), quad, shift)
    return RiskResult(value=value, method=Method.EXACT, n=n, r=config.r, variant=variant)


def worst_case_exact_mse(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    variant: MedianVariant,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RiskResult:
    """Larger of the left- and right-contaminated risks."""
    if config.r == 0 or config.contamination_point is not None:
        return exact_mse(dist, config, n, variant, quad)
    results = [exact_mse(dist, replace(config, side=side), n, variant, quad) for side in (Side.LEFT, Side.RIGHT)]
    return max(results, key=lambda res: res.value)


def exact_mse_central_point(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RiskResult:
    """
    Odd-n median risk when, given K = k >= 1, one contaminated value sits at 0
    and the other k - 1 on ``config.side``.
    """
    check_parity(n, MedianVariant.ODD_MEDIAN)
    m = n // 2

    def conditional(k: int) -> float:
        N = n - k
        if k == 0:
            return _second_moment(dist, N, m + 1, quad)
        base = m + 1 if config.side is Side.RIGHT else m + 2 - k
        return _second_moment(dist, N, base, quad, hi=0.0) + _second_moment(dist, N, base - 1, quad, lo=0.0)

    value = _mix(n, config, quad, conditional)
    return RiskResult(value=value, method=Method.EXACT, n=n, r=config.r, variant=MedianVariant.ODD_MEDIAN)


@dataclass(frozen=True)
class RelativeError:
    n: int
    variant: MedianVariant
    asymptotic: float
    exact: float

    @property
    def absolute(self) -> float:
        return self.asymptotic - self.exact

    @property
    def relative(self) -> float:
        return self.absolute / self.exact


def relative_error_at(
    dist: IdealDistribution,
    config: ContaminationConfig,
    n: int,
    *,
    order: Order = Order.ONE,
    variant_rule: VariantRule = default_variant_rule,
    quad: QuadratureSpec = QuadratureSpec(),
) -> RelativeError:
    variant = variant_rule(n)
    asy = asy_mse(dist, config.r, n, variant, order).value
    exact = exact_mse(dist, config, n, variant, quad).value
    return RelativeError(n=n, variant=variant, asymptotic=asy, exact=exact)


def relative_error_curve(
    dist: IdealDistribution,
    r: float,
    n_range: Iterable[int],
    *,
    variant_rule: VariantRule = default_variant_rule,
    order: Order = Order.ONE,
    side: Side = Side.RIGHT,
    quad: QuadratureSpec = QuadratureSpec(),
    threads: int = 1,
) -> list[tuple[int, float]]:
    ns = list(n_range)
    if not ns:
        raise DomainError("n_range must not be empty")
    config = ContaminationConfig(r=r, side=side)

    def one(n: int) -> tuple[int, float]:
        return n, relative_error_at(dist, config, n, order=order, variant_rule=variant_rule, quad=quad).relative

    return parallel_map(one, ns, threads)


def minimal_n_search(
    dist: IdealDistribution,
    r: float,
    threshold: float,
    order: Order,
    n_cap: int,
    *,
    n_min: int = 3,
    variant_rule: VariantRule = default_variant_rule,
    side: Side = Side.RIGHT,
    quad: QuadratureSpec = QuadratureSpec(),
    threads: int = 1,
) -> int:
    """
    Smallest n0 such that |relative error| < threshold for every n in [n0, n_cap].

    Scans downwards from n_cap, covering both parities; raises NotReached when
    n_cap itself fails.
    """
    if not 0 < threshold < 1:
        raise DomainError(f"threshold must lie in (0,1), got {threshold}")
    if n_cap < 2 or n_cap < n_min:
        raise DomainError(f"n_cap must be >=2 and >= n_min, got n_cap={n_cap} n_min={n_min}")
    config = ContaminationConfig(r=r, side=side)
    batch = max(1, threads)
    started = time.monotonic()

    def fails(n: int) -> bool:
        err = relative_error_at(dist, config, n, order=order, variant_rule=variant_rule, quad=quad)
        return not abs(err.relative) < threshold

    n = n_cap
    scanned = 0
    while n >= n_min:
        chunk = list(range(n, max(n_min, n - batch + 1) - 1, -1))
        for candidate, failed in zip(chunk, parallel_map(fails, chunk, threads)):
            scanned += 1
            if failed:
                if candidate == n_cap:
                    raise NotReached(
                        f"relative error at n_cap={n_cap} is not below {threshold} (r={r}, order={order.value})",
                        n_cap=n_cap,
                    )
                _log_search_done(r=r, threshold=threshold, order=order, n0=candidate + 1, scanned=scanned, started=started)
                return candidate + 1
        n = chunk[-1] - 1
    _log_search_done(r=r, threshold=threshold, order=order, n0=n_min, scanned=scanned, started=started)
    return n_min


def _log_search_done(*, r: float, threshold: float, order: Order, n0: int, scanned: int, started: float) -> None:
    elapsed = max(0.001, time.monotonic() - started)
    logger.info(
        "Minimal n search complete r=%s threshold=%s order=%s n0=%s scanned=%s elapsed_seconds=%.1f rate_n_per_sec=%.2f",
        r,
        threshold,
        order.value,
        n0,
        scanned,
        elapsed,
        scanned / elapsed,
    )


def exact_grid(
    dist: IdealDistribution,
    config: ContaminationConfig,
    ns: Sequence[int],
    variant: MedianVariant,
    *,
    quad: QuadratureSpec = QuadratureSpec(),
    threads: int = 1,
) -> list[RiskResult]:
    """exact_mse over several n, evaluated in parallel and returned in input order."""
    return parallel_map(lambda n: exact_mse(dist, config, n, variant, quad), list(ns), threads)
