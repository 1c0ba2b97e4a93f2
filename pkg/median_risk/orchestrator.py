from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from median_risk.asymptotics import asy_mse
from median_risk.config import AppConfig
from median_risk.distributions import IdealDistribution, make_normal
from median_risk.errors import NotReached
from median_risk.exact_risk import (
    ContaminationConfig,
    exact_mse,
    minimal_n_search,
    relative_error_curve,
    worst_case_exact_mse,
)
from median_risk.montecarlo import SimConfig, empirical_mse
from median_risk.parallel import parallel_map
from median_risk.results import Method, Order, RiskResult
from median_risk.variants import MedianVariant, Side, check_parity, default_variant_rule


TABLE1_VARIANTS = (
    MedianVariant.ODD_MEDIAN,
    MedianVariant.LOWER_QUANTILE,
    MedianVariant.BIAS_CORRECTED,
    MedianVariant.MIDPOINT,
)
TABLE1_ODD_NS = (5, 11, 101)
TABLE1_EVEN_NS = (6, 10, 100)
TABLE2_NS = (5, 10, 30, 100)
TABLE2_RS = (0.0, 0.1, 0.5, 1.0)
TABLE2N_RS = (0.0, 0.1, 0.25, 0.5, 1.0)
TABLE2N_THRESHOLDS = (0.01, 0.05)
FIGURE1_RS = (0.0, 0.1, 0.25, 0.5, 1.0)

TABLE1_COLUMNS = ("variant", "n", "exact", "err12_abs", "err12_rel", "err3_abs", "err3_rel")
TABLE2_COLUMNS = ("n", "r", "sim", "ci_lo", "ci_hi", "num", "asy0", "asy_half", "asy1")
TABLE2N_COLUMNS = ("threshold", "order", "r", "n0")
FIGURE1_COLUMNS = ("r", "n", "rel_error")
RISK_COLUMNS = ("n", "r", "variant", "method", "value", "ci_lo", "ci_hi")


def _contamination(cfg: AppConfig, r: float, side: Side = Side.RIGHT) -> ContaminationConfig:
    return ContaminationConfig(
        r=r,
        side=side,
        renormalize_weights=cfg.contamination.renormalize_weights,
        contamination_point=cfg.contamination.contamination_point,
    )


def _cell_seed(seed: int, n: int, r: float) -> int:
    """Independent, reproducible seed per (n, r) table cell."""
    return int(np.random.SeedSequence([seed, n, int(round(r * 1_000_000))]).generate_state(1)[0])


def risk_query(
    *,
    cfg: AppConfig,
    logger: logging.Logger,
    n: int,
    r: float,
    variant: MedianVariant,
    method: Method,
    side: Optional[Side] = None,
    dist: Optional[IdealDistribution] = None,
) -> RiskResult:
    """One risk value; ``side=None`` takes the worse of both sides for exact evaluation."""
    dist = dist or make_normal()
    check_parity(n, variant)
    started = time.monotonic()
    if method.order is not None:
        result = asy_mse(dist, r, n, variant, method.order)
    elif method is Method.EXACT:
        config = _contamination(cfg, r, side or Side.RIGHT)
        if side is None:
            result = worst_case_exact_mse(dist, config, n, variant, cfg.quadrature)
        else:
            result = exact_mse(dist, config, n, variant, cfg.quadrature)
    else:
        sim = SimConfig(
            n=n,
            r=r,
            runs=cfg.simulation.runs,
            seed=cfg.simulation.seed,
            contamination_point=cfg.simulation.contamination_point,
            variant_rule=lambda _n: variant,
            dist=dist,
            block_size=cfg.simulation.block_size,
            threads=cfg.execution.threads,
        )
        result = empirical_mse(sim).to_risk_result(n, r, variant)
    logger.info(
        "Risk computed n=%s r=%s variant=%s method=%s value=%.10g elapsed_seconds=%.2f",
        n,
        r,
        variant.value,
        method.value,
        result.value,
        time.monotonic() - started,
    )
    return result


def build_table1(
    *,
    cfg: AppConfig,
    logger: logging.Logger,
    n_list: Optional[Sequence[int]] = None,
    variants: Sequence[MedianVariant] = TABLE1_VARIANTS,
    dist: Optional[IdealDistribution] = None,
) -> list[dict[str, Any]]:
    dist = dist or make_normal()
    config = _contamination(cfg, 0.0)
    cells: list[tuple[MedianVariant, int]] = []
    for variant in variants:
        if n_list is None:
            ns: Sequence[int] = TABLE1_ODD_NS if variant.needs_odd_n else TABLE1_EVEN_NS
        else:
            # Each variant takes the sizes of its own parity.
            ns = [n for n in n_list if (n % 2 == 1) == variant.needs_odd_n]
        for n in ns:
            check_parity(n, variant)
            cells.append((variant, n))
    if not cells:
        raise ValueError("no sample size matches the parity of any requested variant")

    def one(cell: tuple[MedianVariant, int]) -> dict[str, Any]:
        variant, n = cell
        cell_started = time.monotonic()
        exact = exact_mse(dist, config, n, variant, cfg.quadrature).value
        asy12 = asy_mse(dist, 0.0, n, variant, Order.HALF).value
        asy3 = asy_mse(dist, 0.0, n, variant, Order.ONE).value
        logger.info(
            "Table 1 cell variant=%s n=%s exact=%.10g elapsed_seconds=%.2f",
            variant.value,
            n,
            exact,
            time.monotonic() - cell_started,
        )
        return {
            "variant": variant.value,
            "n": n,
            "exact": exact,
            "err12_abs": asy12 - exact,
            "err12_rel": (asy12 - exact) / exact,
            "err3_abs": asy3 - exact,
            "err3_rel": (asy3 - exact) / exact,
        }

    return parallel_map(one, cells, cfg.execution.threads)


def build_table2(
    *,
    cfg: AppConfig,
    logger: logging.Logger,
    n_list: Sequence[int] = TABLE2_NS,
    r_list: Sequence[float] = TABLE2_RS,
    dist: Optional[IdealDistribution] = None,
) -> list[dict[str, Any]]:
    dist = dist or make_normal()
    rows: list[dict[str, Any]] = []
    for n in n_list:
        variant = default_variant_rule(n)
        for r in r_list:
            cell_started = time.monotonic()
            sim = empirical_mse(
                SimConfig(
                    n=n,
                    r=r,
                    runs=cfg.simulation.runs,
                    seed=_cell_seed(cfg.simulation.seed, n, r),
                    contamination_point=cfg.simulation.contamination_point,
                    dist=dist,
                    block_size=cfg.simulation.block_size,
                    threads=cfg.execution.threads,
                )
            )
            num = exact_mse(dist, _contamination(cfg, r), n, variant, cfg.quadrature).value
            rows.append(
                {
                    "n": n,
                    "r": r,
                    "sim": sim.value,
                    "ci_lo": sim.ci_lo,
                    "ci_hi": sim.ci_hi,
                    "num": num,
                    "asy0": asy_mse(dist, r, n, variant, Order.ZERO).value,
                    "asy_half": asy_mse(dist, r, n, variant, Order.HALF).value,
                    "asy1": asy_mse(dist, r, n, variant, Order.ONE).value,
                }
            )
            logger.info(
                "Table 2 cell n=%s r=%s sim=%.4f num=%.4f rejection_rate=%.4f elapsed_seconds=%.2f",
                n,
                r,
                sim.value,
                num,
                sim.rejection_rate,
                time.monotonic() - cell_started,
            )
    return rows


def build_figure1(
    *,
    cfg: AppConfig,
    logger: logging.Logger,
    r_list: Sequence[float] = FIGURE1_RS,
    n_min: int = 3,
    n_max: int = 100,
    order: Order = Order.ONE,
    dist: Optional[IdealDistribution] = None,
) -> list[dict[str, Any]]:
    if n_min < 3:
        raise ValueError("n-min must be >=3")
    if n_max < n_min:
        raise ValueError("n-max must be >= n-min")
    dist = dist or make_normal()
    rows: list[dict[str, Any]] = []
    for r in r_list:
        started = time.monotonic()
        curve = relative_error_curve(
            dist,
            r,
            range(n_min, n_max + 1),
            order=order,
            quad=cfg.quadrature,
            threads=cfg.execution.threads,
        )
        rows.extend({"r": r, "n": n, "rel_error": err} for n, err in curve)
        logger.info(
            "Figure 1 curve r=%s points=%s elapsed_seconds=%.1f",
            r,
            len(curve),
            time.monotonic() - started,
        )
    return rows


@dataclass(frozen=True)
class Table2nResult:
    rows: list[dict[str, Any]]
    not_reached: int


def build_table2n(
    *,
    cfg: AppConfig,
    logger: logging.Logger,
    thresholds: Sequence[float] = TABLE2N_THRESHOLDS,
    r_list: Sequence[float] = TABLE2N_RS,
    orders: Sequence[Order] = (Order.ONE,),
    n_cap: int = 300,
    dist: Optional[IdealDistribution] = None,
) -> Table2nResult:
    dist = dist or make_normal()
    rows: list[dict[str, Any]] = []
    not_reached = 0
    for threshold in thresholds:
        for order in orders:
            for r in r_list:
                try:
                    n0: Any = minimal_n_search(
                        dist,
                        r,
                        threshold,
                        order,
                        n_cap,
                        quad=cfg.quadrature,
                        threads=cfg.execution.threads,
                    )
                except NotReached as exc:
                    logger.warning("Minimal n not reached threshold=%s order=%s r=%s: %s", threshold, order.value, r, exc)
                    n0 = "NA"
                    not_reached += 1
                rows.append({"threshold": threshold, "order": order.value, "r": r, "n0": n0})
    return Table2nResult(rows=rows, not_reached=not_reached)
