from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from qhx.core.config import GROWTH_TOL
from qhx.core.errors import ConfigError
from qhx.geometry.domains import DomainSpec, Point2, as_xy, distance_field, reference_point
from qhx.metrics.quasihyperbolic import quasihyperbolic_field
from qhx.orlicz.young import IteratedPsiParams, psi_eval

logger = logging.getLogger(__name__)

SAMPLE_COLLAR = 3.0


def default_constant(s: float) -> float:
    """max(1, 1/(e(1-s))); the least C with log x <= C x^{1-s} on x >= 1 is 1/(e(1-s))."""
    return max(1.0, 1.0 / (math.e * (1.0 - s)))


@dataclass
class GrowthReport:
    sample_points: List[Point2]
    d_boundary: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tol: float = GROWTH_TOL
    violations: List[int] = field(default_factory=list)

    @property
    def ratios(self) -> np.ndarray:
        return self.lhs / self.rhs

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_frame(self) -> pd.DataFrame:
        xy = np.array(self.sample_points, dtype=float).reshape(-1, 2)
        return pd.DataFrame(
            {
                "x": xy[:, 0],
                "y": xy[:, 1],
                "d_boundary": self.d_boundary,
                "qh_distance": self.lhs,
                "bound": self.rhs,
                "ratio": self.ratios,
            }
        )


def _sample_nodes(dist: np.ndarray, res: float, n: int, seed: int) -> np.ndarray:
    """Node indices with d >= 3*res, drawn without replacement with weight 1/d."""
    pool = np.flatnonzero(dist >= SAMPLE_COLLAR * res)
    if pool.size == 0:
        raise ConfigError("no admissible sample nodes at this resolution")
    take = min(n, pool.size)
    weights = 1.0 / dist[pool]
    rng = np.random.default_rng(seed)
    picked = rng.choice(pool, size=take, replace=False, p=weights / weights.sum())
    return np.sort(picked)


def _verify(
    d: DomainSpec,
    z0,
    bound: Callable[[np.ndarray, float], np.ndarray],
    n_samples: int,
    res: float,
    tol: float,
    seed: int,
    stencil: int,
) -> GrowthReport:
    if n_samples < 1:
        raise ConfigError("n_samples must be positive")
    if tol < 0:
        raise ConfigError("tol must be non-negative")
    z0 = reference_point(d) if z0 is None else z0
    qfield = quasihyperbolic_field(d, z0, res, stencil)
    source = as_xy(z0)[0]
    d0 = float(distance_field(d, source[None, :])[0])

    picked = _sample_nodes(qfield.dist, res, n_samples - 1, seed) if n_samples > 1 else np.array([], dtype=int)
    points = [Point2(float(source[0]), float(source[1]))]
    points += [Point2(float(x), float(y)) for x, y in qfield.nodes[picked]]
    dists = np.concatenate([[d0], qfield.dist[picked]])
    lhs = np.concatenate([[0.0], qfield.qh[picked]])
    rhs = bound(dists, d0)

    violations = [int(i) for i in np.flatnonzero(lhs > rhs * (1.0 + tol))]
    report = GrowthReport(sample_points=points, d_boundary=dists, lhs=lhs, rhs=rhs, tol=tol, violations=violations)
    if violations:
        logger.warning("growth bound violated at %d of %d samples (max ratio %.3f)", len(violations), len(points), report.max_ratio)
    else:
        logger.info("growth bound holds on %d samples (max ratio %.3f)", len(points), report.max_ratio)
    return report


def verify_s_growth(
    d: DomainSpec,
    z0: Optional[Point2],
    s: float,
    n_samples: int,
    res: float,
    tol: float = GROWTH_TOL,
    constant: Optional[float] = None,
    seed: int = 0,
    stencil: int = 16,
) -> GrowthReport:
    """Check h(z0, z) <= C (d(z0)/d(z))^{1-s} on sampled interior points."""
    if not 0.0 < s < 1.0:
        raise ConfigError("s must lie in (0, 1)")
    c = default_constant(s) if constant is None else constant

    def bound(dist: np.ndarray, d0: float) -> np.ndarray:
        return c * (d0 / dist) ** (1.0 - s)

    return _verify(d, z0, bound, n_samples, res, tol, seed, stencil)


def verify_generalized_growth(
    d: DomainSpec,
    z0: Optional[Point2],
    s: float,
    sigma: Sequence[float],
    n_samples: int,
    res: float,
    tol: float = GROWTH_TOL,
    constant: Optional[float] = None,
    seed: int = 0,
    stencil: int = 16,
) -> GrowthReport:
    """Same check against C Ψ_{1-s,σ}(1/d(z))."""
    if not 0.0 < s < 1.0:
        raise ConfigError("s must lie in (0, 1)")
    psi = IteratedPsiParams(a=1.0 - s, sigma=tuple(sigma))
    c = default_constant(s) if constant is None else constant

    def bound(dist: np.ndarray, d0: float) -> np.ndarray:
        return c * psi_eval(psi, 1.0 / dist)

    return _verify(d, z0, bound, n_samples, res, tol, seed, stencil)
