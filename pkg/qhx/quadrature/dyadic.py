from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from qhx.core.config import MAX_DYADIC_DEPTH
from qhx.core.errors import ConfigError, NumericalFailure
from qhx.quadrature.classify import MIN_SHELLS, Assessment, Verdict, assess
from qhx.quadrature.integrands import Integrand, Thm31Integrand, chord, evaluate, log_log_exponent
from qhx.quadrature.oracle import oracle_finite, shell_models
from qhx.quadrature.regions import INNER_RADIUS, Region, get_region
from qhx.utils.parallel import fan_out

logger = logging.getLogger(__name__)

RADIAL_NODES = 8
CORE_RADIAL_NODES = 24
CORE_ANGULAR_NODES = 256


@dataclass
class Shell:
    m: int
    delta_low: float
    delta_high: float
    shell_sum: float
    model: Optional[float] = None


@dataclass
class DyadicReport:
    integrand: Integrand
    region: str
    shells: List[Shell]
    core: float
    assessment: Assessment
    angular_n: int
    log_log_exponent: Optional[float] = None
    partial_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def verdict(self) -> Verdict:
        return self.assessment.verdict

    @property
    def tail_ratio(self) -> float:
        return self.assessment.tail_ratio

    @property
    def model_fit(self) -> Optional[float]:
        return self.assessment.model_fit

    @property
    def value(self) -> float:
        """Integral up to the deepest shell, core included."""
        return float(self.partial_sums[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "m": [shell.m for shell in self.shells],
                "shell_sum": [shell.shell_sum for shell in self.shells],
                "partial_sum": self.partial_sums,
                "model": [np.nan if shell.model is None else shell.model for shell in self.shells],
            }
        )


def _panels(lo: float, hi: float, delta: float) -> np.ndarray:
    """Breakpoints of [lo, hi] graded by powers of two of δ around angle 0."""
    grades = []
    step = delta
    while step < math.pi:
        grades.extend((-step, step))
        step *= 2.0
    cuts = np.array([lo, hi, 0.0] + grades)
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    return np.unique(cuts)


def _angular_rule(intervals, delta: float, angular_n: int):
    x, wts = np.polynomial.legendre.leggauss(angular_n)
    nodes, weights = [], []
    for lo, hi in intervals:
        cuts = _panels(lo, hi, delta)
        a, b = cuts[:-1, None], cuts[1:, None]
        half = 0.5 * (b - a)
        nodes.append((a + half * (x[None, :] + 1.0)).ravel())
        weights.append((half * wts[None, :]).ravel())
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _shell_sum(i: Integrand, region: Region, m: int, angular_n: int) -> float:
    x, wts = np.polynomial.legendre.leggauss(RADIAL_NODES)
    v_lo, v_hi = -(m + 1) * math.log(2.0), -m * math.log(2.0)
    half = 0.5 * (v_hi - v_lo)
    total = 0.0
    for xr, wr in zip(x, wts):
        delta = math.exp(v_lo + half * (xr + 1.0))
        r = 1.0 - delta
        theta, weight = _angular_rule(region.intervals(r), delta, angular_n)
        if theta.size == 0:
            continue
        values = evaluate(i, np.full(theta.shape, delta), chord(delta, theta))
        # r dr dθ with dr = δ dv
        total += wr * half * delta * r * float(np.dot(weight, values))
    return total


def _core_integral(i: Integrand) -> float:
    """Integral over |z| < 1/2 with polar Gauss-Legendre times periodic trapezoid."""
    x, wts = np.polynomial.legendre.leggauss(CORE_RADIAL_NODES)
    r = INNER_RADIUS * 0.5 * (x + 1.0)
    theta = 2.0 * math.pi * np.arange(CORE_ANGULAR_NODES) / CORE_ANGULAR_NODES
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    values = evaluate(i, 1.0 - rr, chord(1.0 - rr, tt))
    angular = values.sum(axis=1) * (2.0 * math.pi / CORE_ANGULAR_NODES)
    return float(INNER_RADIUS * 0.5 * np.dot(wts, r * angular))


def integrate_dyadic(
    i: Integrand,
    region: Union[str, Region] = "annulus",
    depth: int = 40,
    angular_n: int = 8,
    tail_tol: float = 1e-3,
    use_model: bool = True,
) -> DyadicReport:
    """Shell-by-shell integral over the chosen region with a convergence verdict."""
    if depth > MAX_DYADIC_DEPTH:
        raise NumericalFailure(f"depth {depth} underflows 1-|z| (limit {MAX_DYADIC_DEPTH})")
    if depth < MIN_SHELLS:
        raise ConfigError(f"depth must be at least {MIN_SHELLS}")
    if angular_n < 2:
        raise ConfigError("angular_n must be at least 2")
    region = get_region(region) if isinstance(region, str) else region

    ms = list(range(1, depth + 1))
    sums = np.array(fan_out(lambda m: _shell_sum(i, region, m, angular_n), ms))
    if not np.all(np.isfinite(sums)):
        raise NumericalFailure("shell sum overflowed")
    core = _core_integral(i) if region.with_core else 0.0

    model = shell_models(i, depth) if use_model else None
    finite = oracle_finite(i) if use_model else None
    assessment = assess(sums, model, finite, tail_tol)
    shells = [
        Shell(m, 2.0 ** -(m + 1), 2.0**-m, float(a), None if model is None else float(model[k]))
        for k, (m, a) in enumerate(zip(ms, sums))
    ]
    report = DyadicReport(
        integrand=i,
        region=region.name,
        shells=shells,
        core=core,
        assessment=assessment,
        angular_n=angular_n,
        log_log_exponent=log_log_exponent(i),
        partial_sums=core + np.cumsum(sums),
    )
    logger.info("%s over %s: %s (%s)", i.kind, region.name, report.verdict.value, assessment.rule)
    return report


@dataclass
class ConditionReport:
    w: np.ndarray
    values: np.ndarray
    verdicts: List[Verdict]
    spread: float
    divergent: bool

    @property
    def value(self) -> float:
        return math.inf if self.divergent else float(self.values.max())


def thm31_condition_sup(i: Thm31Integrand, w_samples: int = 8, depth: int = 40, angular_n: int = 8) -> ConditionReport:
    """Condition integral over the whole disk at equally spaced boundary points w."""
    if not isinstance(i, Thm31Integrand):
        raise ConfigError("thm31_condition_sup needs a thm31 integrand")
    if w_samples < 1:
        raise ConfigError("w_samples must be positive")
    angles = 2.0 * math.pi * np.arange(w_samples) / w_samples
    reports = [integrate_dyadic(i.model_copy(update={"w": float(a)}), "disk", depth, angular_n) for a in angles]
    values = np.array([report.value for report in reports])
    verdicts = [report.verdict for report in reports]
    spread = float((values.max() - values.min()) / values.max()) if values.max() > 0 else 0.0
    divergent = any(v is Verdict.DIVERGENT for v in verdicts)
    if divergent:
        logger.warning("condition integral diverges")
    return ConditionReport(w=angles, values=values, verdicts=verdicts, spread=spread, divergent=divergent)


def scan(kind_factory, lambdas: Sequence[float], region: str = "annulus", depth: int = 40, angular_n: int = 8) -> List[DyadicReport]:
    """One report per λ; ``kind_factory(λ)`` builds the integrand."""
    return [integrate_dyadic(kind_factory(lam), region, depth, angular_n) for lam in lambdas]
