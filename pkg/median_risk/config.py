from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from median_risk.quadrature import QuadratureSpec


@dataclass(frozen=True)
class ContaminationSettings:
    renormalize_weights: bool = True
    contamination_point: Optional[float] = None  # exact risk only; None = limit mode


@dataclass(frozen=True)
class SimulationSettings:
    runs: int = 10_000
    seed: int = 20100731
    block_size: int = 1000
    contamination_point: float = 100.0


@dataclass(frozen=True)
class ExecutionConfig:
    threads: int = 1


@dataclass(frozen=True)
class LoggingConfig:
    main_log: Optional[str] = None
    level: str = "INFO"


@dataclass(frozen=True)
class AppConfig:
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    contamination: ContaminationSettings = field(default_factory=ContaminationSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


class ConfigError(ValueError):
    pass


_ENV_VAR_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")
_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR"}


def _env_nonempty(name: str) -> Optional[str]:
    value = os.environ.get(name)
    if value is None:
        return None
    value = value.strip()
    return value or None


def _expand_env(value: str, where: str) -> str:
    def repl(match: re.Match[str]) -> str:
        var = match.group(1)
        env_val = _env_nonempty(var)
        if env_val is None:
            raise ConfigError(f"Missing environment variable {var} referenced at {where}")
        return env_val

    return _ENV_VAR_RE.sub(repl, value)


def _expand_env_in_obj(obj: Any, where: str) -> Any:
    if isinstance(obj, str):
        return _expand_env(obj, where) if "${" in obj else obj
    if isinstance(obj, list):
        return [_expand_env_in_obj(v, f"{where}[{i}]") for i, v in enumerate(obj)]
    if isinstance(obj, dict):
        return {k: _expand_env_in_obj(v, f"{where}.{k}") for k, v in obj.items()}
    return obj


def _as_str(value: Any, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"Expected non-empty string at {where}")
    return value


def _as_int(value: Any, where: str) -> int:
    # Expanded ${VAR} values arrive as strings.
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            raise ConfigError(f"Expected integer at {where}") from None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Expected integer at {where}")
    return value


def _as_float(value: Any, where: str) -> float:
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            raise ConfigError(f"Expected number at {where}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"Expected number at {where}")
    return float(value)


def _as_bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"Expected true/false at {where}")
    return value


def _as_mapping(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"Expected object/map at {where}")
    return value


def _section(raw: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = raw.get(key)
    if value is None:
        return {}
    return _as_mapping(value, key)


def _reject_unknown(section: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"Unknown config key(s) at {where}: {', '.join(unknown)}")


def _positive(value: float, where: str) -> float:
    if not value > 0:
        raise ConfigError(f"{where} must be >0.")
    return value


def load_config(path: Optional[str] = None) -> AppConfig:
    """
    Load settings from a YAML/JSON file (or defaults when path is None) and
    apply MEDIAN_RISK_* environment overrides.
    """
    raw: Mapping[str, Any] = {}
    if path is not None:
        loaded = _expand_env_in_obj(_load_raw_config(path), "root")
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("Config root must be an object/map.")
        raw = loaded
        _reject_unknown(raw, {"quadrature", "contamination", "simulation", "execution", "logging"}, "root")

    quad_raw = _section(raw, "quadrature")
    _reject_unknown(quad_raw, {"rel_tol", "abs_tol", "max_subdivisions", "tail_mass", "weight_floor"}, "quadrature")
    defaults = QuadratureSpec()
    quad_values = dict(
        rel_tol=_positive(_as_float(quad_raw.get("rel_tol", defaults.rel_tol), "quadrature.rel_tol"), "quadrature.rel_tol"),
        abs_tol=_positive(_as_float(quad_raw.get("abs_tol", defaults.abs_tol), "quadrature.abs_tol"), "quadrature.abs_tol"),
        max_subdivisions=int(
            _positive(
                _as_int(quad_raw.get("max_subdivisions", defaults.max_subdivisions), "quadrature.max_subdivisions"),
                "quadrature.max_subdivisions",
            )
        ),
        tail_mass=_positive(_as_float(quad_raw.get("tail_mass", defaults.tail_mass), "quadrature.tail_mass"), "quadrature.tail_mass"),
        weight_floor=_as_float(quad_raw.get("weight_floor", defaults.weight_floor), "quadrature.weight_floor"),
    )
    if quad_values["tail_mass"] >= 1e-3:
        raise ConfigError("quadrature.tail_mass must be <1e-3.")
    if quad_values["weight_floor"] < 0:
        raise ConfigError("quadrature.weight_floor must be >=0.")
    quadrature = QuadratureSpec(**quad_values)

    cont_raw = _section(raw, "contamination")
    _reject_unknown(cont_raw, {"renormalize_weights", "contamination_point"}, "contamination")
    point_raw = cont_raw.get("contamination_point")
    contamination = ContaminationSettings(
        renormalize_weights=_as_bool(cont_raw.get("renormalize_weights", True), "contamination.renormalize_weights"),
        contamination_point=_as_float(point_raw, "contamination.contamination_point") if point_raw is not None else None,
    )

    sim_raw = _section(raw, "simulation")
    _reject_unknown(sim_raw, {"runs", "seed", "block_size", "contamination_point"}, "simulation")
    runs = _as_int(_env_nonempty("MEDIAN_RISK_RUNS") or sim_raw.get("runs", 10_000), "simulation.runs")
    if runs <= 0:
        raise ConfigError("simulation.runs must be >0.")
    seed = _as_int(_env_nonempty("MEDIAN_RISK_SEED") or sim_raw.get("seed", 20100731), "simulation.seed")
    if seed < 0:
        raise ConfigError("simulation.seed must be >=0.")
    block_size = _as_int(sim_raw.get("block_size", 1000), "simulation.block_size")
    if block_size <= 0:
        raise ConfigError("simulation.block_size must be >0.")
    simulation = SimulationSettings(
        runs=runs,
        seed=seed,
        block_size=block_size,
        contamination_point=_as_float(sim_raw.get("contamination_point", 100.0), "simulation.contamination_point"),
    )

    exec_raw = _section(raw, "execution")
    _reject_unknown(exec_raw, {"threads"}, "execution")
    threads = _as_int(_env_nonempty("MEDIAN_RISK_THREADS") or exec_raw.get("threads", 1), "execution.threads")
    if threads <= 0:
        raise ConfigError("execution.threads must be >0.")

    log_raw = _section(raw, "logging")
    _reject_unknown(log_raw, {"main_log", "level"}, "logging")
    main_log = _env_nonempty("MEDIAN_RISK_LOG") or log_raw.get("main_log")
    level = _as_str(log_raw.get("level", "INFO"), "logging.level").upper()
    if level not in _LOG_LEVELS:
        raise ConfigError(f"logging.level must be one of: {', '.join(sorted(_LOG_LEVELS))}.")

    return AppConfig(
        quadrature=quadrature,
        contamination=contamination,
        simulation=simulation,
        execution=ExecutionConfig(threads=threads),
        logging=LoggingConfig(
            main_log=_as_str(main_log, "logging.main_log") if main_log is not None else None,
            level=level,
        ),
    )


def _load_raw_config(path: str) -> Any:
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".json":
        return json.loads(text)
    return yaml.safe_load(text)
