"""Trend check of the per-piece lower bounds against the Bertrand series they dominate."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from qhx.core.errors import ConfigError
from qhx.counterexample.audit import PieceAudit, dual_integral, holder_term, jensen_term, resolved_window
from qhx.geometry.domains import IteratedLogCusp
from qhx.geometry.partition import CuspDomain
from qhx.orlicz.young import IteratedPsiParams, iterated_log
from qhx.quadrature.classify import Verdict, tracking_slope
from qhx.quadrature.oracle import bertrand_finite

logger = logging.getLogger(__name__)

TREND_BAND = 0.75
MIN_PIECES = 3

Lambda = Union[float, Tuple[float, ...]]


@dataclass
class TrendRow:
    lam: Tuple[float, ...]
    functional: str
    slope: float
    verdict: Verdict
    running: np.ndarray = field(repr=False)

    @property
    def tracks(self) -> bool:
        return abs(self.slope - 1.0) <= TREND_BAND


@dataclass
class DemoReport:
    ks: np.ndarray
    rows: List[TrendRow] = field(default_factory=list)

    def verdict(self, lam: Lambda, functional: str = "orlicz") -> Verdict:
        key = _as_tuple(lam)
        for row in self.rows:
            if row.lam == key and row.functional == functional:
                return row.verdict
        raise KeyError((lam, functional))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "lambda": ",".join(f"{v:g}" for v in row.lam),
                    "functional": row.functional,
                    "slope": row.slope,
                    "slope_gap": abs(row.slope - 1.0),
                    "tracks": row.tracks,
                    "verdict": row.verdict.value,
                    "running_sum": float(row.running[-1]),
                }
                for row in self.rows
            ]
        )


def _as_tuple(lam: Lambda) -> Tuple[float, ...]:
    if isinstance(lam, (int, float)):
        return (float(lam),)
    return tuple(float(v) for v in lam)


def _wall_sigma(domain: CuspDomain) -> Tuple[float, ...]:
    return tuple(domain.sigma) if isinstance(domain, IteratedLogCusp) else ()


def trend_model(domain: CuspDomain, lam: Tuple[float, ...], k) -> np.ndarray:
    """τ_λ(k): (1/k) log^λ k / log log(1+k) on the power cusp, the iterated product otherwise."""
    k = np.asarray(k, dtype=float)
    if not isinstance(domain, IteratedLogCusp):
        return np.log(k) ** lam[0] / (k * np.log(np.log(1.0 + k)))
    out = 1.0 / k
    for i, (si, li) in enumerate(zip(domain.sigma, lam), start=1):
        out = out * iterated_log(i, k) ** (si + li)
    return out / iterated_log(len(domain.sigma) + 1, k)


def trend_exponents(domain: CuspDomain, lam: Tuple[float, ...]) -> Tuple[float, ...]:
    """Bertrand exponents of τ_λ in k: (-1, λ, -1) or (-1, σ_1+λ_1, ..., σ_n+λ_n, -1)."""
    sigma = _wall_sigma(domain) or (0.0,)
    return (-1.0, *(s + l for s, l in zip(sigma, lam)), -1.0)


def divergence_demo(audits: Sequence[PieceAudit], lambdas: Sequence[Lambda], domain: CuspDomain) -> DemoReport:
    """Jensen (Orlicz) and Hölder (weighted) lower bounds per λ, classified by their trend."""
    window = [a for a in resolved_window(audits) if a.k >= 2 and a.cells > 0]
    if len(window) < MIN_PIECES:
        raise ConfigError(f"the trend check needs at least {MIN_PIECES} resolved pieces")
    s = domain.s
    n = max(1, len(_wall_sigma(domain)))
    ks = np.array([a.k for a in window], dtype=float)
    res = window[0].res
    report = DemoReport(ks=ks)
    for raw in lambdas:
        lam = _as_tuple(raw)
        if len(lam) != n:
            raise ConfigError(f"lambda {raw!r} needs {n} entries")
        phi = IteratedPsiParams(a=1.0 + s, sigma=lam)
        model = trend_model(domain, lam, ks)
        finite = bertrand_finite(trend_exponents(domain, lam))
        terms = {
            "orlicz": np.array([jensen_term(a.flux, a.area, phi) for a in window]),
            "weighted": np.array([holder_term(a.flux, dual_integral(a.dist, s, lam, res), s) for a in window]),
        }
        for functional, values in terms.items():
            row = TrendRow(lam, functional, tracking_slope(values, model, tail=1.0), Verdict.INCONCLUSIVE, np.cumsum(values))
            if row.tracks:
                row.verdict = Verdict.CONVERGENT if finite else Verdict.DIVERGENT
            else:
                logger.warning("%s terms for lambda=%s do not track the series (slope %.3f)", functional, lam, row.slope)
            logger.info("%s trend for lambda=%s: slope %.3f, %s", functional, lam, row.slope, row.verdict.value)
            report.rows.append(row)
    return report
