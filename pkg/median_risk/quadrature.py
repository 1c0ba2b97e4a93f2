from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from median_risk.distributions import IdealDistribution
from median_risk.errors import DomainError, QuadratureFailure


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000
    tail_mass: float = 1e-15
    weight_floor: float = 1e-17

    def __post_init__(self) -> None:
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise DomainError("quadrature tolerances must be >0")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >=1")
        if not 0 < self.tail_mass < 1e-3:
            raise DomainError("tail_mass must lie in (0, 1e-3)")
        if self.weight_floor < 0:
            raise DomainError("weight_floor must be >=0")

    def converged(self, previous: float, current: float) -> bool:
        return abs(current - previous) <= max(self.abs_tol, self.rel_tol * abs(current))


def integrate_1d(func: Callable[[float], float], lo: float, hi: float, *, spec: QuadratureSpec, what: str) -> float:
    """Adaptive Gauss-Kronrod over [lo, hi]; raises QuadratureFailure when QUADPACK gives up."""
    if not hi > lo:
        return 0.0
    out = integrate.quad(
        func,
        lo,
        hi,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    value, abserr = float(out[0]), float(out[1])
    if len(out) > 3:
        message = out[3]
        # Round-off stalls near the requested accuracy are tolerable.
        if abserr <= 1e3 * max(spec.abs_tol, spec.rel_tol * abs(value)):
            logger.debug("Quadrature accepted with warning what=%s abserr=%.3e message=%s", what, abserr, message)
        else:
            raise QuadratureFailure(f"{what}: {message} (value={value!r} abserr={abserr:.3e})")
    if not math.isfinite(value):
        raise QuadratureFailure(f"{what}: non-finite integral")
    return value


def log_binom_coef(n: int, k: int) -> float:
    return float(special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1))


def order_stat_log_density(dist: IdealDistribution, N: int, i: int, t):
    """log of the density of the i-th smallest of N i.i.d. draws from F."""
    log_coef = math.log(N) + log_binom_coef(N - 1, i - 1)
    out = log_coef + dist.log_pdf(t)
    if i > 1:
        out = out + (i - 1) * dist.log_cdf(t)
    if N > i:
        out = out + (N - i) * dist.log_sf(t)
    return out


def order_stat_window(dist: IdealDistribution, N: int, i: int, tail_mass: float) -> tuple[float, float]:
    """Interval carrying all but 2*tail_mass of the law of the i-th of N order statistics."""
    a, b = float(i), float(N - i + 1)
    u_lo = float(special.betaincinv(a, b, tail_mass))
    v_hi = float(special.betaincinv(b, a, tail_mass))  # 1 - U ~ Beta(b, a)
    lo = float(dist.quantile(max(u_lo, 1e-300)))
    hi = float(dist.quantile(1.0 - v_hi))
    if not math.isfinite(hi):
        hi = float(dist.quantile(1.0 - max(v_hi, np.finfo(float).eps)))
    if not math.isfinite(lo):
        lo = float(dist.quantile(np.finfo(float).tiny))
    return lo, hi
