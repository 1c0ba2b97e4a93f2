from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from median_risk.distributions import IdealDistribution, make_normal
from median_risk.errors import DegenerateConfig, DomainError
from median_risk.parallel import parallel_map
from median_risk.prob_bounds import thinning_probability
from median_risk.results import Method, RiskResult
from median_risk.variants import MedianVariant, check_parity, default_variant_rule


logger = logging.getLogger(__name__)

Z_95 = 1.96
MAX_REJECTION_ROUNDS = 1_000_000


@dataclass(frozen=True)
class ContaminationLaw:
    name: str
    sampler: Callable[[np.random.Generator, tuple], np.ndarray]

    @classmethod
    def dirac(cls, point: float) -> "ContaminationLaw":
        return cls(name=f"dirac({point!r})", sampler=lambda rng, size: np.full(size, float(point)))

    def draw(self, rng: np.random.Generator, size: tuple) -> np.ndarray:
        return np.asarray(self.sampler(rng, size), dtype=float)


@dataclass(frozen=True)
class SimConfig:
    n: int
    r: float
    runs: int = 10_000
    seed: int = 20100731
    contamination_point: Union[float, ContaminationLaw] = 100.0
    variant_rule: Callable[[int], MedianVariant] = default_variant_rule
    dist: IdealDistribution = field(default_factory=make_normal)
    thinned: bool = True
    block_size: int = 1000
    threads: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n must be >=1, got {self.n}")
        if self.runs < 1:
            raise DomainError(f"runs must be >=1, got {self.runs}")
        if self.r < 0:
            raise DomainError(f"r must be >=0, got {self.r}")
        if self.probability >= 1.0:
            raise DomainError(f"r/sqrt(n) = {self.probability:.4g} must be <1")
        if self.block_size < 1:
            raise DomainError("block_size must be >=1")

    @property
    def probability(self) -> float:
        return self.r / math.sqrt(self.n)

    @property
    def threshold(self) -> int:
        """Largest admissible number of contaminated observations; n when unthinned."""
        return (self.n + 1) // 2 - 1 if self.thinned else self.n

    @property
    def contamination(self) -> ContaminationLaw:
        if isinstance(self.contamination_point, ContaminationLaw):
            return self.contamination_point
        return ContaminationLaw.dirac(self.contamination_point)


@dataclass(frozen=True)
class EmpiricalRisk:
    value: float
    ci_lo: float
    ci_hi: float
    runs_used: int
    rejections: int = 0

    @property
    def rejection_rate(self) -> float:
        """Rejected U-vectors over all U-vectors drawn."""
        total = self.runs_used + self.rejections
        return self.rejections / total if total else 0.0

    def contains(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi

    def to_risk_result(self, n: int, r: float, variant: MedianVariant) -> RiskResult:
        return RiskResult(
            value=self.value,
            method=Method.SIMULATED,
            n=n,
            r=r,
            variant=variant,
            ci=(self.ci_lo, self.ci_hi),
        )


@dataclass(frozen=True)
class Block:
    samples: np.ndarray  # (runs, n)
    coins: np.ndarray  # (runs,) True -> upper central statistic
    rejections: int


def _draw_indicators(config: SimConfig, rng: np.random.Generator, size: int) -> tuple[np.ndarray, int]:
    p = config.probability
    u = rng.random((size, config.n)) < p
    if config.threshold >= config.n or p == 0.0:
        return u, 0
    rejections = 0
    rounds = 0
    bad = np.flatnonzero(u.sum(axis=1) > config.threshold)
    while bad.size:
        rounds += 1
        if rounds > MAX_REJECTION_ROUNDS:
            raise DegenerateConfig(
                f"thinning rejected {MAX_REJECTION_ROUNDS} consecutive draws (n={config.n}, r={config.r})"
            )
        rejections += int(bad.size)
        u[bad] = rng.random((bad.size, config.n)) < p
        bad = bad[u[bad].sum(axis=1) > config.threshold]
    return u, rejections


def draw_block(config: SimConfig, rng: np.random.Generator, size: int) -> Block:
    """
    Draw ``size`` samples: indicator rows (with rejection), then ideal data,
    then contamination values, then the randomisation coins.
    """
    u, rejections = _draw_indicators(config, rng, size)
    ideal = np.asarray(config.dist.sample(rng, (size, config.n)), dtype=float)
    cont = config.contamination.draw(rng, (size, config.n))
    coins = rng.random(size) < 0.5
    return Block(samples=np.where(u, cont, ideal), coins=coins, rejections=rejections)


def draw_sample(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    return draw_block(config, rng, 1).samples[0]


def _central_pair(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = samples.shape[-1]
    m = n // 2
    part = np.partition(samples, (m - 1, m), axis=-1)
    return part[..., m - 1], part[..., m]


def estimate_block(
    samples: np.ndarray,
    variant: MedianVariant,
    dist: IdealDistribution,
    coins: Optional[np.ndarray] = None,
) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[-1]
    check_parity(n, variant)
    if variant is MedianVariant.ODD_MEDIAN:
        return np.partition(samples, n // 2, axis=-1)[:, n // 2]
    lower, upper = _central_pair(samples)
    if variant is MedianVariant.LOWER_QUANTILE:
        return lower
    if variant is MedianVariant.UPPER_QUANTILE:
        return upper
    if variant is MedianVariant.MIDPOINT:
        return 0.5 * (lower + upper)
    if variant is MedianVariant.BIAS_CORRECTED:
        return lower + 1.0 / (2.0 * n * dist.f0)
    if coins is None:
        raise ValueError("the randomized median needs coin flips")
    return np.where(coins, upper, lower)


def apply_variant(
    sample: Sequence[float],
    variant: MedianVariant,
    dist: IdealDistribution,
    rng: Optional[np.random.Generator] = None,
) -> float:
    coins = None
    if variant is MedianVariant.RANDOMIZED:
        if rng is None:
            raise ValueError("the randomized median needs a random generator")
        coins = np.array([rng.random() < 0.5])
    return float(estimate_block(np.asarray(sample, dtype=float)[None, :], variant, dist, coins)[0])


@dataclass(frozen=True)
class SimulatedEstimates:
    estimates: dict[MedianVariant, np.ndarray]
    rejections: int


def simulate_estimates(config: SimConfig, variants: Optional[Iterable[MedianVariant]] = None) -> SimulatedEstimates:
    """
    Per-run estimates for each variant, all computed on the same samples.

    Runs are cut into fixed blocks with their own substream spawned from the
    seed, so the result does not depend on the number of threads.
    """
    chosen = list(variants) if variants is not None else [config.variant_rule(config.n)]
    for variant in chosen:
        check_parity(config.n, variant)
    n_blocks = -(-config.runs // config.block_size)
    streams = np.random.SeedSequence(config.seed).spawn(n_blocks)
    started = time.monotonic()
    log_every = max(1, n_blocks // 10)

    def run_block(index: int) -> tuple[dict[MedianVariant, np.ndarray], int]:
        rng = np.random.default_rng(streams[index])
        size = min(config.block_size, config.runs - index * config.block_size)
        block = draw_block(config, rng, size)
        out = {v: estimate_block(block.samples, v, config.dist, block.coins) for v in chosen}
        if (index + 1) % log_every == 0:
            elapsed = max(0.001, time.monotonic() - started)
            logger.debug(
                "Simulation progress n=%s r=%s block=%s/%s elapsed_seconds=%.1f",
                config.n,
                config.r,
                index + 1,
                n_blocks,
                elapsed,
            )
        return out, block.rejections

    results = parallel_map(run_block, list(range(n_blocks)), config.threads)
    estimates = {v: np.concatenate([res[0][v] for res in results]) for v in chosen}
    rejections = sum(res[1] for res in results)
    elapsed = max(0.001, time.monotonic() - started)
    logger.info(
        "Simulation complete n=%s r=%s runs=%s rejections=%s thinned=%s rate_runs_per_sec=%.1f elapsed_seconds=%.1f",
        config.n,
        config.r,
        config.runs,
        rejections,
        config.thinned,
        config.runs / elapsed,
        elapsed,
    )
    return SimulatedEstimates(estimates=estimates, rejections=rejections)


def empirical_risk_from_estimates(estimates: np.ndarray, n: int, *, rejections: int = 0) -> EmpiricalRisk:
    stat = n * np.square(estimates)
    runs = int(stat.size)
    value = float(np.mean(stat))
    if runs > 1:
        half = Z_95 * float(np.std(stat, ddof=1)) / math.sqrt(runs)
    else:
        half = 0.0
    return EmpiricalRisk(value=value, ci_lo=value - half, ci_hi=value + half, runs_used=runs, rejections=rejections)


def empirical_mse(config: SimConfig) -> EmpiricalRisk:
    variant = config.variant_rule(config.n)
    sim = simulate_estimates(config, [variant])
    return empirical_risk_from_estimates(sim.estimates[variant], config.n, rejections=sim.rejections)


@dataclass(frozen=True)
class BreakdownResult:
    x0: float
    p_n: float
    empirical: EmpiricalRisk


def breakdown_demo(
    dist: IdealDistribution,
    n: int,
    r: float,
    C: float,
    *,
    runs: int = 10_000,
    seed: int = 20100731,
    thinned: bool = False,
    threads: int = 1,
) -> BreakdownResult:
    """
    Place the contamination at x0 = sqrt(C / p_n), p_n = P(K > m). Without
    thinning the median equals x0 on {K > m}, so n*MSE >= n*C.
    """
    check_parity(n, MedianVariant.ODD_MEDIAN)
    if not C > 0:
        raise DomainError(f"C must be >0, got {C}")
    p_n = thinning_probability(n, r, n // 2)
    if p_n <= 0.0:
        raise DomainError(f"P(K > {n // 2}) vanishes for n={n}, r={r}; nothing breaks down")
    x0 = math.sqrt(C / p_n)
    config = SimConfig(
        n=n,
        r=r,
        runs=runs,
        seed=seed,
        contamination_point=x0,
        dist=dist,
        thinned=thinned,
        threads=threads,
    )
    logger.info("Breakdown demonstration n=%s r=%s C=%s p_n=%.6g x0=%.6g thinned=%s", n, r, C, p_n, x0, thinned)
    return BreakdownResult(x0=x0, p_n=p_n, empirical=empirical_mse(config))
