from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import quad

from qhx.core.errors import ConfigError, NumericalFailure
from qhx.orlicz.young import iterated_exp, iterated_log
from qhx.quadrature.oracle import bertrand_finite

logger = logging.getLogger(__name__)

CHUNK = 1_000_000
MIN_K = 10
MAX_K = 10**9
BRACKET_WIDTH = 0.5
TAIL_TOL = 1e-3

SeriesName = Literal["critical", "control", "example42"]


@dataclass(frozen=True)
class BertrandSeries:
    """Σ_k k^{-1} Π_i L_i(k)^{e_i} with L_i the i-fold log, plain or offset by e_i."""

    name: str
    exponents: Tuple[float, ...]
    start: int
    offset: bool

    def term(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        out = 1.0 / k
        for i, e in enumerate(self.exponents, start=1):
            if e:
                out = out * iterated_log(i, k, offset=self.offset) ** e
        return out

    @property
    def finite(self) -> bool:
        return bertrand_finite((-1.0, *self.exponents))


def series_model(name: SeriesName, sigma: Sequence[float] = (1.0,), lam: Sequence[float] = (-2.0,)) -> BertrandSeries:
    if name == "critical":
        return BertrandSeries("critical", (-1.0, -1.0), start=3, offset=False)
    if name == "control":
        return BertrandSeries("control", (-1.5,), start=2, offset=False)
    if name == "example42":
        if len(sigma) != len(lam) or not 1 <= len(sigma) <= 2:
            raise ConfigError("example42 needs matching sigma and lambda of length 1 or 2")
        exponents = tuple(s + l for s, l in zip(sigma, lam)) + (-1.0,)
        return BertrandSeries("example42", exponents, start=1, offset=True)
    raise ConfigError(f"unknown series model {name!r}")


@dataclass
class SeriesReport:
    model: BertrandSeries
    K: int
    checkpoints: np.ndarray
    partial_sums: np.ndarray
    doubling_ratios: np.ndarray
    companion: np.ndarray
    limits: Optional[np.ndarray] = None

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])

    @property
    def bracket_width(self) -> float:
        """Spread of S_K - log_(3) K over the checkpoints."""
        return float(np.ptp(self.partial_sums - self.companion))

    @property
    def tail_spread(self) -> Optional[float]:
        if self.limits is None:
            return None
        return float(np.ptp(self.limits))

    def checks(self, bracket_width: float = BRACKET_WIDTH, tail_tol: float = TAIL_TOL) -> Dict[str, bool]:
        """The critical series stays in a log_(3) K bracket; a finite series settles on its limit."""
        out: Dict[str, bool] = {}
        if self.model.name == "critical":
            out["bracket"] = self.bracket_width < bracket_width
        if self.limits is not None:
            out["tail"] = self.tail_spread < tail_tol
        return out

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "K": self.checkpoints,
                "S_K": self.partial_sums,
                "doubling_ratio": self.doubling_ratios,
                "log3_K": self.companion,
                "S_K_minus_log3_K": self.partial_sums - self.companion,
            }
        )
        if self.limits is not None:
            frame["tail_corrected"] = self.limits
        return frame


def default_checkpoints(K: int) -> np.ndarray:
    """K, K/2, K/4, ... down to 10, ascending."""
    points = []
    c = K
    while c >= MIN_K:
        points.append(c)
        c //= 2
    return np.array(sorted(points), dtype=np.int64)


def _partial_sums(model: BertrandSeries, checkpoints: np.ndarray) -> np.ndarray:
    """Running sums at the checkpoints, accumulated chunk by chunk in a fixed order."""
    out = np.empty(checkpoints.size)
    total = 0.0
    lo = model.start
    K = int(checkpoints[-1])
    idx = 0
    while lo <= K:
        hi = min(lo + CHUNK - 1, K)
        ks = np.arange(lo, hi + 1, dtype=np.float64)
        cum = total + np.cumsum(model.term(ks))
        while idx < checkpoints.size and checkpoints[idx] <= hi:
            c = int(checkpoints[idx])
            out[idx] = cum[c - lo] if c >= lo else 0.0
            idx += 1
        total = float(cum[-1])
        lo = hi + 1
    return out


def _doubling_ratios(checkpoints: np.ndarray, sums: np.ndarray) -> np.ndarray:
    """(S_{2c} - S_c) / (S_c - S_{c/2}) where both neighbours are checkpoints."""
    lookup = {int(c): float(v) for c, v in zip(checkpoints, sums)}
    ratios = np.full(checkpoints.size, np.nan)
    for j, c in enumerate(checkpoints):
        c = int(c)
        if c % 2 == 0 and c // 2 in lookup and 2 * c in lookup:
            below = lookup[c] - lookup[c // 2]
            if below > 0:
                ratios[j] = (lookup[2 * c] - lookup[c]) / below
    return ratios


def _log_profile(model: BertrandSeries, u: float) -> float:
    """k·term(k) at k = e^u, with the first logarithm taken without forming e^u."""
    out = 1.0
    for i, e in enumerate(model.exponents, start=1):
        if not e:
            continue
        value = u + (math.log1p(iterated_exp(i) * math.exp(-u)) if model.offset else 0.0)
        for _ in range(i - 1):
            value = math.log(value)
        out *= value**e
    return out


def _tail(model: BertrandSeries, K: int) -> float:
    """∫_{K+1/2}^∞ term, integrated in u = log k."""
    value, err = quad(lambda u: _log_profile(model, u), math.log(K + 0.5), math.inf, limit=400)
    if not math.isfinite(value) or err > 1e-6 * abs(value) + 1e-10:
        raise NumericalFailure(f"tail integral of {model.name} did not converge at K={K}")
    return value


def series_partial_sums(
    model: BertrandSeries,
    K: int,
    checkpoints: Optional[Sequence[int]] = None,
) -> SeriesReport:
    """Partial sums of a Bertrand series with doubling ratios and the log_(3) companion."""
    if K < MIN_K:
        raise ConfigError(f"K must be at least {MIN_K}")
    if K > MAX_K:
        raise ConfigError(f"K must be at most {MAX_K}")
    if checkpoints is None:
        points = default_checkpoints(K)
    else:
        points = np.unique(np.asarray(list(checkpoints) + [K], dtype=np.int64))
        if points[0] < MIN_K or points[-1] > K:
            raise ConfigError(f"checkpoints must lie in [{MIN_K}, K]")
    sums = _partial_sums(model, points)
    if np.any(np.diff(sums) < 0):
        raise NumericalFailure("partial sums decreased; terms must be positive")
    companion = np.log(np.log(np.log(points.astype(float))))
    limits = None
    if model.finite:
        limits = sums + np.array([_tail(model, int(c)) for c in points])
    report = SeriesReport(
        model=model,
        K=K,
        checkpoints=points,
        partial_sums=sums,
        doubling_ratios=_doubling_ratios(points, sums),
        companion=companion,
        limits=limits,
    )
    logger.info("%s series: S_%d = %.10g", model.name, K, report.total)
    return report
