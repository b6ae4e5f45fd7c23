from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from scipy.stats import linregress
from scipy.stats import t as student_t

from qhx.core.errors import ConfigError

logger = logging.getLogger(__name__)

MIN_SHELLS = 12
DECAY_RATIO = 0.9
TRACKING_BAND = 0.15
TEMPLATE_CONFIDENCE = 0.95
STDERR_FLOOR = 1e-3


class Verdict(str, enum.Enum):
    CONVERGENT = "CONVERGENT"
    DIVERGENT = "DIVERGENT"
    INCONCLUSIVE = "INCONCLUSIVE"


def _loglog(m: np.ndarray) -> np.ndarray:
    return np.log(np.log(m))


DIVERGENT_TEMPLATES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "1/m": lambda m: 1.0 / m,
    "1/(m log m)": lambda m: 1.0 / (m * np.log(m)),
    "1/(m log m loglog m)": lambda m: 1.0 / (m * np.log(m) * _loglog(m)),
}


@dataclass
class Assessment:
    verdict: Verdict
    rule: str
    tail_ratio: float
    model_fit: Optional[float] = None
    template: Optional[str] = None


def _tail_ratio(sums: np.ndarray) -> float:
    quarter = sums[-max(2, len(sums) // 4) :]
    return float(np.max(quarter[1:] / quarter[:-1]))


def tracking_slope(terms: Sequence[float], model: Sequence[float], tail: float = 0.5) -> float:
    """Slope of log terms against log model over the last ``tail`` fraction of the sequence."""
    terms, model = np.asarray(terms, dtype=float), np.asarray(model, dtype=float)
    if terms.shape != model.shape:
        raise ConfigError("terms and model must have the same length")
    start = min(int(len(terms) * (1.0 - tail)), len(terms) - 3)
    if start < 0:
        raise ConfigError("tracking needs at least three terms")
    window = slice(start, None)
    return float(linregress(np.log(model[window]), np.log(terms[window])).slope)


def template_match(terms: Sequence[float], index: Sequence[float]) -> Optional[str]:
    """Name of the first divergent template whose slope CI contains 1, if any."""
    terms = np.asarray(terms, dtype=float)
    index = np.asarray(index, dtype=float)
    half = slice(len(terms) // 2, None)
    m, y = index[half], np.log(terms[half])
    if np.any(m <= math.e) or len(m) < 3:
        return None
    quantile = student_t.ppf(0.5 + TEMPLATE_CONFIDENCE / 2.0, len(m) - 2)
    for name, template in DIVERGENT_TEMPLATES.items():
        fit = linregress(np.log(template(m)), y)
        width = quantile * max(fit.stderr, STDERR_FLOOR)
        if abs(fit.slope - 1.0) <= width:
            return name
    return None


def assess(
    sums: Sequence[float],
    model: Optional[Sequence[float]] = None,
    model_finite: Optional[bool] = None,
    tail_tol: float = 1e-3,
    index: Optional[Sequence[float]] = None,
    tracking_band: float = TRACKING_BAND,
) -> Assessment:
    """Verdict for a sequence of non-negative shell sums.

    Geometric decay decides first; then agreement with a radial model, whose analytic
    finiteness is taken over; then a fit to the slowly divergent templates.
    """
    a = np.asarray(sums, dtype=float)
    if a.size < MIN_SHELLS:
        raise ConfigError(f"classification needs at least {MIN_SHELLS} shells, got {a.size}")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ConfigError("shell sums must be finite and non-negative")
    m = np.arange(1, a.size + 1, dtype=float) if index is None else np.asarray(index, dtype=float)

    if np.any(a == 0):
        if np.all(a[len(a) // 2 :] == 0):
            return Assessment(Verdict.CONVERGENT, "vanishing tail", 0.0)
        return Assessment(Verdict.INCONCLUSIVE, "zero shells", math.nan)

    ratio = _tail_ratio(a)
    total = float(a.sum())
    if ratio <= DECAY_RATIO and a[-1] * ratio / (1.0 - ratio) < tail_tol * total:
        return Assessment(Verdict.CONVERGENT, "geometric tail", ratio)

    fit = None
    if model is not None and model_finite is not None:
        fit = tracking_slope(a, model)
        if abs(fit - 1.0) <= tracking_band:
            verdict = Verdict.CONVERGENT if model_finite else Verdict.DIVERGENT
            return Assessment(verdict, "radial model", ratio, model_fit=fit)
        logger.warning("shell sums do not track the radial model (slope %.3f)", fit)

    name = template_match(a, m)
    if name is not None:
        return Assessment(Verdict.DIVERGENT, "divergent template", ratio, model_fit=fit, template=name)
    return Assessment(Verdict.INCONCLUSIVE, "undecided", ratio, model_fit=fit)


def classify(
    sums: Sequence[float],
    model: Optional[Sequence[float]] = None,
    model_finite: Optional[bool] = None,
    tail_tol: float = 1e-3,
) -> Verdict:
    return assess(sums, model, model_finite, tail_tol).verdict
