"""
Ideal central distributions F.

A distribution is a record of vectorised callables plus the Taylor data of its
density at the median. The library never differentiates ``pdf`` itself; the
supplied ``f1``/``f2`` are only cross-checked by finite differences in
:func:`validate`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from median_risk.errors import DomainError, InvalidDensity, NonMedianCentered


logger = logging.getLogger(__name__)

ArrayFunc = Callable[[np.ndarray], np.ndarray]
Sampler = Callable[[np.random.Generator, tuple], np.ndarray]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class IdealDistribution:
    cdf: ArrayFunc
    pdf: ArrayFunc
    quantile: ArrayFunc
    f0: float
    f1: float
    f2: float
    moment_exponent_delta: float = 0.5
    name: str = "custom"
    scale: float = 1.0
    logcdf: Optional[ArrayFunc] = field(default=None, compare=False)
    logsf: Optional[ArrayFunc] = field(default=None, compare=False)
    logpdf: Optional[ArrayFunc] = field(default=None, compare=False)
    sampler: Optional[Sampler] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.moment_exponent_delta < 1.0:
            raise DomainError(f"moment_exponent_delta must lie in (0,1), got {self.moment_exponent_delta}")
        if self.scale <= 0:
            raise DomainError("scale must be >0")

    def log_cdf(self, t):
        if self.logcdf is not None:
            return self.logcdf(t)
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(t))

    def log_sf(self, t):
        if self.logsf is not None:
            return self.logsf(t)
        with np.errstate(divide="ignore"):
            return np.log1p(-np.asarray(self.cdf(t), dtype=float))

    def log_pdf(self, t):
        if self.logpdf is not None:
            return self.logpdf(t)
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(t))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.sampler is not None:
            return self.sampler(rng, size)
        return np.asarray(self.quantile(rng.random(size)), dtype=float)

    @property
    def risk_scale(self) -> float:
        """Asymptotic variance factor 1/(4 f0^2) of the median."""
        return 1.0 / (4.0 * self.f0 * self.f0)


def make_normal() -> IdealDistribution:
    """Standard normal model; cdf/quantile via scipy's ndtr family (tail-accurate)."""
    inv_sqrt_2pi = 1.0 / math.sqrt(2.0 * math.pi)
    half_log_2pi = 0.5 * math.log(2.0 * math.pi)

    def pdf(t):
        t = np.asarray(t, dtype=float)
        return inv_sqrt_2pi * np.exp(-0.5 * t * t)

    def logpdf(t):
        t = np.asarray(t, dtype=float)
        return -0.5 * t * t - half_log_2pi

    return IdealDistribution(
        cdf=special.ndtr,
        pdf=pdf,
        quantile=special.ndtri,
        f0=inv_sqrt_2pi,
        f1=0.0,
        f2=-inv_sqrt_2pi,
        name="normal",
        logcdf=special.log_ndtr,
        logsf=lambda t: special.log_ndtr(-np.asarray(t, dtype=float)),
        logpdf=logpdf,
        sampler=lambda rng, size: rng.standard_normal(size),
    )


def make_gumbel() -> IdealDistribution:
    """
    Gumbel (maximum) law shifted so that its median sits at 0.

    F(t) = exp(-ln2 * exp(-t)). Skewed, so f1 != 0; used to exercise the
    side-selection and f1-dependent coefficients.
    """

    def logcdf(t):
        return -_LN2 * np.exp(-np.asarray(t, dtype=float))

    def cdf(t):
        return np.exp(logcdf(t))

    def logsf(t):
        lc = logcdf(t)
        with np.errstate(divide="ignore"):
            return np.log(-np.expm1(lc))

    def logpdf(t):
        t = np.asarray(t, dtype=float)
        return logcdf(t) + math.log(_LN2) - t

    def pdf(t):
        return np.exp(logpdf(t))

    def quantile(p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            return -np.log(-np.log(p)) + math.log(_LN2)

    f0 = _LN2 / 2.0
    return IdealDistribution(
        cdf=cdf,
        pdf=pdf,
        quantile=quantile,
        f0=f0,
        f1=f0 * (_LN2 - 1.0),
        f2=f0 * ((_LN2 - 1.0) ** 2 - _LN2),
        name="gumbel",
        logcdf=logcdf,
        logsf=logsf,
        logpdf=logpdf,
    )


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    residual: float
    tolerance: float

    def to_log_line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{self.name}: {status} residual={self.residual:.3e} tolerance={self.tolerance:.1e}"


@dataclass(frozen=True)
class ValidationReport:
    distribution: str
    checks: tuple[InvariantCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[InvariantCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def check(self, name: str) -> InvariantCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _check(name: str, residual: float, tolerance: float) -> InvariantCheck:
    residual = float(residual)
    return InvariantCheck(name=name, passed=bool(np.isfinite(residual) and residual <= tolerance), residual=residual, tolerance=tolerance)


def validate(dist: IdealDistribution, *, grid_points: int = 201) -> ValidationReport:
    """
    Check the distribution invariants numerically.

    Raises NonMedianCentered / InvalidDensity for the two hard errors; every
    other invariant is reported as pass/fail with its measured residual.
    """
    for attr in ("cdf", "pdf", "quantile"):
        if not callable(getattr(dist, attr)):
            raise InvalidDensity(f"{attr} must be callable")

    median_residual = abs(float(dist.cdf(0.0)) - 0.5)
    if median_residual > 1e-8:
        raise NonMedianCentered(f"cdf(0) = {0.5 + median_residual:.12g} differs from 1/2 for {dist.name}")
    if not dist.f0 > 0:
        raise InvalidDensity(f"f0 must be >0, got {dist.f0}")

    checks: list[InvariantCheck] = [_check("median", median_residual, 1e-12)]

    lo = float(dist.quantile(1e-10))
    hi = float(dist.quantile(1.0 - 1e-10))
    grid = np.linspace(lo, hi, grid_points)
    F = np.asarray(dist.cdf(grid), dtype=float)
    f = np.asarray(dist.pdf(grid), dtype=float)

    checks.append(_check("cdf_monotone", max(0.0, -float(np.min(np.diff(F)))), 0.0))
    checks.append(_check("pdf_nonnegative", max(0.0, -float(np.min(f))), 0.0))

    # Round trip limited by the resolution of F near 0 and 1.
    eps = np.finfo(float).eps
    roundtrip = np.asarray(dist.quantile(F), dtype=float)
    allowed = 1e-9 * (1.0 + np.abs(grid)) + 4.0 * eps * np.maximum(F, 1e-300) / np.maximum(f, 1e-300)
    checks.append(_check("quantile_roundtrip", float(np.max(np.abs(roundtrip - grid) / allowed)), 1.0))

    # d/dt log F = f/F on the lower half, d/dt log(1-F) = -f/(1-F) on the upper half.
    h = 1e-4 * dist.scale
    lower = grid <= 0
    upper = ~lower
    estimate = np.empty_like(grid)
    estimate[lower] = np.exp(dist.log_cdf(grid[lower])) * (
        dist.log_cdf(grid[lower] + h) - dist.log_cdf(grid[lower] - h)
    ) / (2.0 * h)
    estimate[upper] = -np.exp(dist.log_sf(grid[upper])) * (
        dist.log_sf(grid[upper] + h) - dist.log_sf(grid[upper] - h)
    ) / (2.0 * h)
    checks.append(_check("pdf_matches_cdf", float(np.max(np.abs(estimate - f) / np.maximum(f, 1e-300))), 1e-6))

    p_m, p_0, p_p = (float(dist.pdf(x)) for x in (-h, 0.0, h))
    f0_num = p_0
    f1_num = (p_p - p_m) / (2.0 * h)
    f2_num = (p_p - 2.0 * p_0 + p_m) / (h * h)
    checks.append(_check("taylor_f0", abs(f0_num - dist.f0) / dist.f0, 1e-4))
    checks.append(_check("taylor_f1", abs(f1_num - dist.f1) / max(abs(dist.f1), dist.f0), 1e-4))
    # f2 via a second difference carries roughly eps/h^2 of noise.
    checks.append(_check("taylor_f2", abs(f2_num - dist.f2) / max(abs(dist.f2), dist.f0), 1e-4))

    report = ValidationReport(distribution=dist.name, checks=tuple(checks))
    for failure in report.failures:
        logger.warning("Distribution check failed distribution=%s %s", dist.name, failure.to_log_line())
    return report
