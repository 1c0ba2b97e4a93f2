from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from typing import Any, Optional

from median_risk import __version__
from median_risk.config import AppConfig, ConfigError, load_config
from median_risk.errors import NotReached, QuadratureFailure
from median_risk.logging_utils import build_logger
from median_risk.orchestrator import (
    FIGURE1_COLUMNS,
    FIGURE1_RS,
    RISK_COLUMNS,
    TABLE1_COLUMNS,
    TABLE1_VARIANTS,
    TABLE2_COLUMNS,
    TABLE2_NS,
    TABLE2_RS,
    TABLE2N_COLUMNS,
    TABLE2N_RS,
    TABLE2N_THRESHOLDS,
    build_figure1,
    build_table1,
    build_table2,
    build_table2n,
    risk_query,
)
from median_risk.reporting import RunManifest, TableStats, write_csv
from median_risk.results import Method, Order
from median_risk.variants import MedianVariant, Side, default_variant_rule


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_QUADRATURE = 3
EXIT_NOT_REACHED = 4


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _order_list(text: str) -> list[Order]:
    try:
        return [Order.parse(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _variant(text: str) -> MedianVariant:
    try:
        return MedianVariant.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _variant_list(text: str) -> list[MedianVariant]:
    values = [_variant(part.strip()) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to YAML/JSON config file (defaults apply when omitted).")
    common.add_argument("--out", help="CSV output path; stdout when omitted or '-'.")
    common.add_argument("--tol", type=float, help="Relative quadrature tolerance (overrides quadrature.rel_tol).")
    common.add_argument("--seed", type=int, help="Simulation seed (overrides simulation.seed).")
    common.add_argument("--runs", type=int, help="Simulation runs per cell (overrides simulation.runs).")
    common.add_argument("--threads", type=int, help="Worker threads (overrides execution.threads).")
    common.add_argument("--log-file", help="Also write the log to this file.")

    parser = argparse.ArgumentParser(
        prog="median-risk",
        description="Exact, asymptotic and simulated n*MSE of median estimators under shrinking contamination.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    risk = sub.add_parser("risk", parents=[common], help="One risk value.")
    risk.add_argument("--n", type=int, required=True, help="Sample size.")
    risk.add_argument("--r", type=float, default=0.0, help="Contamination radius (default 0).")
    risk.add_argument("--variant", type=_variant, help="Median variant; odd median / midpoint by parity when omitted.")
    risk.add_argument("--method", choices=[m.value for m in Method], default=Method.EXACT.value)
    risk.add_argument(
        "--side",
        choices=["left", "right", "worst"],
        default="worst",
        help="Contamination side for exact risk (default: the worse of both).",
    )
    risk.add_argument(
        "--contamination-point",
        type=float,
        help="Finite contamination location x0 (exact and simulated risk).",
    )

    table1 = sub.add_parser("table1", parents=[common], help="Ideal-model exact risk and expansion errors.")
    table1.add_argument("--n-list", type=_int_list, help="Sample sizes (default: 5,11,101 odd and 6,10,100 even).")
    table1.add_argument(
        "--variants",
        type=_variant_list,
        default=list(TABLE1_VARIANTS),
        help="Comma-separated variants (default: odd,lower,bias-corrected,midpoint).",
    )

    table2 = sub.add_parser("table2", parents=[common], help="Simulated, exact and asymptotic risk under contamination.")
    table2.add_argument("--n-list", type=_int_list, default=list(TABLE2_NS))
    table2.add_argument("--r-list", type=_float_list, default=list(TABLE2_RS))

    table2n = sub.add_parser("table2n", parents=[common], help="Minimal n for a relative-error threshold.")
    table2n.add_argument("--thresholds", type=_float_list, default=list(TABLE2N_THRESHOLDS))
    table2n.add_argument("--r-list", type=_float_list, default=list(TABLE2N_RS))
    table2n.add_argument("--orders", type=_order_list, default=[Order.ONE], help="Comma-separated: 0, half, one.")
    table2n.add_argument("--n-cap", type=int, default=300, help="Largest n checked (default 300).")

    figure1 = sub.add_parser("figure1", parents=[common], help="Relative error of the expansion against n.")
    figure1.add_argument("--r-list", type=_float_list, default=list(FIGURE1_RS))
    figure1.add_argument("--n-min", type=int, default=3)
    figure1.add_argument("--n-max", type=int, default=100)
    figure1.add_argument("--order", type=Order.parse, default=Order.ONE.value)
    return parser


def _apply_overrides(cfg: AppConfig, args: argparse.Namespace) -> AppConfig:
    if args.tol is not None:
        cfg = replace(cfg, quadrature=replace(cfg.quadrature, rel_tol=args.tol))
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >=0.")
        cfg = replace(cfg, simulation=replace(cfg.simulation, seed=args.seed))
    if args.runs is not None:
        if args.runs <= 0:
            raise ConfigError("--runs must be >0.")
        cfg = replace(cfg, simulation=replace(cfg.simulation, runs=args.runs))
    if args.threads is not None:
        if args.threads <= 0:
            raise ConfigError("--threads must be >0.")
        cfg = replace(cfg, execution=replace(cfg.execution, threads=args.threads))
    if args.log_file:
        cfg = replace(cfg, logging=replace(cfg.logging, main_log=args.log_file))
    point = getattr(args, "contamination_point", None)
    if point is not None:
        cfg = replace(
            cfg,
            contamination=replace(cfg.contamination, contamination_point=point),
            simulation=replace(cfg.simulation, contamination_point=point),
        )
    return cfg


# Settings that must not change the output file.
_NOT_RECORDED = ("command", "config", "out", "log_file", "threads")


def _parameters(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(args).items() if v is not None and k not in _NOT_RECORDED}


def _run(args: argparse.Namespace, cfg: AppConfig, logger) -> int:
    stats = TableStats(command=args.command)
    exit_code = EXIT_OK
    seed: Optional[int] = None

    if args.command == "risk":
        variant = args.variant or default_variant_rule(args.n)
        method = Method(args.method)
        side = None if args.side == "worst" else Side(args.side)
        result = risk_query(cfg=cfg, logger=logger, n=args.n, r=args.r, variant=variant, method=method, side=side)
        rows, columns = [result.to_row()], RISK_COLUMNS
        if method is Method.SIMULATED:
            seed = cfg.simulation.seed
    elif args.command == "table1":
        rows, columns = build_table1(cfg=cfg, logger=logger, n_list=args.n_list, variants=args.variants), TABLE1_COLUMNS
    elif args.command == "table2":
        rows = build_table2(cfg=cfg, logger=logger, n_list=args.n_list, r_list=args.r_list)
        columns = TABLE2_COLUMNS
        seed = cfg.simulation.seed
    elif args.command == "table2n":
        result2n = build_table2n(
            cfg=cfg,
            logger=logger,
            thresholds=args.thresholds,
            r_list=args.r_list,
            orders=args.orders,
            n_cap=args.n_cap,
        )
        rows, columns = result2n.rows, TABLE2N_COLUMNS
        stats.not_reached = result2n.not_reached
        if result2n.not_reached:
            exit_code = EXIT_NOT_REACHED
    else:
        rows = build_figure1(
            cfg=cfg,
            logger=logger,
            r_list=args.r_list,
            n_min=args.n_min,
            n_max=args.n_max,
            order=args.order,
        )
        columns = FIGURE1_COLUMNS

    manifest = RunManifest(command=args.command, parameters=_parameters(args), seed=seed, version=__version__)
    write_csv(args.out, manifest, columns, rows)
    stats.rows = len(rows)
    logger.info("Finished %s", stats.to_log_line())
    return exit_code


def main(argv: Optional[list[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"median-risk: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    logger = build_logger(cfg.logging.main_log, level=cfg.logging.level)
    logger.info(
        "Starting %s config=%s out=%s version=%s",
        args.command,
        args.config or "<defaults>",
        args.out or "<stdout>",
        __version__,
    )
    logger.info(
        "Settings rel_tol=%s max_subdivisions=%s tail_mass=%s renormalize_weights=%s runs=%s seed=%s threads=%s",
        cfg.quadrature.rel_tol,
        cfg.quadrature.max_subdivisions,
        cfg.quadrature.tail_mass,
        cfg.contamination.renormalize_weights,
        cfg.simulation.runs,
        cfg.simulation.seed,
        cfg.execution.threads,
    )

    started = time.monotonic()
    try:
        code = _run(args, cfg, logger)
    except QuadratureFailure as exc:
        logger.error("Quadrature failed: %s", exc)
        return EXIT_QUADRATURE
    except NotReached as exc:
        logger.error("%s", exc)
        return EXIT_NOT_REACHED
    except ValueError as exc:
        logger.error("Invalid input: %s", exc)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("Fatal error: %s", exc)
        return EXIT_UNEXPECTED
    logger.info("Done command=%s exit_code=%s elapsed_seconds=%.1f", args.command, code, time.monotonic() - started)
    return code


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
