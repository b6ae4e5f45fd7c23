from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from qhx.core.errors import ConfigError
from qhx.counterexample.construction import Construction, TargetArcs
from qhx.geometry.domains import IteratedLogCusp, PowerCusp
from qhx.geometry.partition import CuspPartition, area_exponent, epsilon
from qhx.harmonic.dirichlet import GridField
from qhx.harmonic.gradient import GradientField, gradient_norm
from qhx.orlicz.young import IteratedPsiParams, OrliczFunction, as_psi, is_young, iterated_log, psi_eval

logger = logging.getLogger(__name__)

MIN_CELLS_ACROSS = 4
FLUX_CONSTANT = 0.5
ASSERT_FROM = 3
# discrete Jensen and Hölder hold exactly; this only absorbs rounding
INEQUALITY_RTOL = 1e-9

AUDIT_COLUMNS = ["k", "flux", "eps_k*d_k", "area", "model", "jensen", "holder", "series_term"]


@dataclass
class PieceAudit:
    k: int
    resolved: bool
    cells: int
    flux: float
    flux_lower: float
    area: float
    area_exact: float
    area_model: float
    min_grad: float
    orlicz_energy: float
    weighted_energy: float
    jensen: float
    holder: float
    dual_integral: float
    dual_model: float
    series_term: float
    res: float = 0.0
    jensen_asserted: bool = False
    dist: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def asserted(self) -> bool:
        return self.resolved and self.k >= ASSERT_FROM

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def critical_phi(construction: Union[Construction, CuspPartition]) -> IteratedPsiParams:
    """t^{1+s} log^{-1}(e+t) for the power cusp, Ψ_{1+s,-1-σ} for the iterated-log cusp."""
    domain = construction.domain
    if isinstance(domain, IteratedLogCusp):
        return IteratedPsiParams(a=1.0 + domain.s, sigma=tuple(-1.0 - v for v in domain.sigma))
    return IteratedPsiParams(a=1.0 + domain.s, sigma=(-1.0,))


def _wall_exponents(domain) -> tuple:
    if isinstance(domain, IteratedLogCusp):
        return tuple(domain.sigma)
    return (0.0,)


def series_term(domain, k, lam: Sequence[float]):
    """(1/k) Π log_(i)^{σ_i+λ_i}(e_i+k) log_(n+1)^{-1}(e_{n+1}+k); plain logs for the power cusp."""
    k = np.asarray(k, dtype=float)
    if isinstance(domain, PowerCusp):
        with np.errstate(divide="ignore", invalid="ignore"):
            loglog = np.log(np.log(k))
            term = 1.0 / (k * np.log(k) * loglog)
        # undefined until log log k > 0
        return np.where(loglog > 0, term, np.nan)
    sigma = _wall_exponents(domain)
    if len(lam) != len(sigma):
        raise ConfigError("lambda must have one entry per wall exponent")
    out = 1.0 / k
    for i, (si, li) in enumerate(zip(sigma, lam), start=1):
        out = out * iterated_log(i, k) ** (si + li)
    return out / iterated_log(len(sigma) + 1, k)


def _area_model(domain, k: int) -> float:
    s = domain.s
    wall = IteratedPsiParams(a=-1.0 / s, sigma=tuple(-v / s for v in _wall_exponents(domain)))
    return epsilon(k) * float(psi_eval(wall, float(k)))


def _dual_model(domain, k: int, lam: Sequence[float]) -> float:
    s = domain.s
    dual = IteratedPsiParams(a=0.0, sigma=tuple(-v / s for v in lam))
    return _area_model(domain, k) * float(psi_eval(dual, float(k)))


def _resolved(piece, res: float) -> bool:
    return piece.height >= MIN_CELLS_ACROSS * res and 2.0 * piece.x_low >= MIN_CELLS_ACROSS * res


def jensen_term(flux: float, area: float, phi: OrliczFunction) -> float:
    if area <= 0:
        return 0.0
    return area * float(psi_eval(as_psi(phi), flux / area))


def dual_integral(dist: np.ndarray, s: float, lam: Sequence[float], res: float) -> float:
    """Σ Ψ_{0,-λ/s}(1/d) res², the Hölder dual of the weight Ψ_{0,λ}."""
    if dist.size == 0:
        return 0.0
    dual = IteratedPsiParams(a=0.0, sigma=tuple(-v / s for v in lam))
    return float(psi_eval(dual, 1.0 / dist).sum() * res * res)


def holder_term(flux: float, dual: float, s: float) -> float:
    if dual <= 0:
        return 0.0
    return flux ** (1.0 + s) * dual ** (-s)


def audit_pieces(
    grid: GridField,
    part: CuspPartition,
    arcs: TargetArcs,
    phi: Optional[OrliczFunction] = None,
    grad: Optional[GradientField] = None,
) -> List[PieceAudit]:
    """Fubini, Jensen and Hölder bounds of each cusp piece against the measured field."""
    domain = part.domain
    s = domain.s
    phi = critical_phi(part) if phi is None else phi
    psi = as_psi(phi)
    if abs(psi.a - (1.0 + s)) > 1e-12:
        raise ConfigError("audits need an Orlicz function of power 1+s")
    lam = psi.sigma
    if len(lam) != len(_wall_exponents(domain)):
        raise ConfigError("lambda must have one entry per wall exponent")
    grad = gradient_norm(grid) if grad is None else grad
    convex_from = is_young(psi).convex_from
    weight = IteratedPsiParams(a=0.0, sigma=tuple(lam))

    res = grid.res
    cell = res * res
    keep = grad.mask
    xy = grad.points(keep)
    labels = part.piece_index(xy)
    norm = grad.norm[keep]
    hx = np.abs(grad.hx[keep])
    dist = grad.dist[keep]

    audits: List[PieceAudit] = []
    for piece in part.pieces:
        k = piece.k
        sel = labels == k
        cells = int(sel.sum())
        resolved = _resolved(piece, res) and cells > 0
        g, d_k = norm[sel], dist[sel]
        flux = float(hx[sel].sum() * cell)
        dual = dual_integral(d_k, s, lam, res)
        area = cells * cell
        min_grad = float(g.min()) if cells else float("nan")
        audit = PieceAudit(
            k=k,
            resolved=resolved,
            cells=cells,
            flux=flux,
            flux_lower=epsilon(k) * arcs.gap(k),
            area=area,
            area_exact=piece.area,
            area_model=_area_model(domain, k),
            min_grad=min_grad,
            orlicz_energy=float(psi_eval(psi, g).sum() * cell),
            weighted_energy=float((g ** (1.0 + s) * psi_eval(weight, 1.0 / d_k)).sum() * cell) if cells else 0.0,
            jensen=jensen_term(flux, area, psi),
            holder=holder_term(flux, dual, s),
            dual_integral=dual,
            dual_model=_dual_model(domain, k, lam),
            series_term=float(series_term(domain, k, lam)),
            res=res,
            jensen_asserted=cells > 0 and min_grad >= convex_from,
            dist=d_k,
        )
        if audit.asserted:
            slack = 1.0 + INEQUALITY_RTOL
            audit.checks["flux"] = audit.flux >= FLUX_CONSTANT * audit.flux_lower
            audit.checks["holder"] = audit.holder <= audit.weighted_energy * slack
            if audit.jensen_asserted:
                audit.checks["jensen"] = audit.jensen <= audit.orlicz_energy * slack
            if not audit.passed:
                failed = [name for name, ok in audit.checks.items() if not ok]
                logger.warning("piece %d fails %s", k, ", ".join(failed))
        elif not resolved:
            logger.info("piece %d is below resolution at res=%g and is not asserted", k, res)
        audits.append(audit)
    return audits


def resolved_window(audits: Sequence[PieceAudit]) -> List[PieceAudit]:
    """Resolved pieces up to the first unresolved one; nothing is extrapolated past it."""
    window = []
    for audit in audits:
        if not audit.resolved:
            break
        window.append(audit)
    return window


def largest_resolved(audits: Sequence[PieceAudit]) -> int:
    window = resolved_window(audits)
    return window[-1].k if window else 0


def audits_passed(audits: Sequence[PieceAudit]) -> bool:
    return all(a.passed for a in resolved_window(audits))


def audit_area_exponent(audits: Sequence[PieceAudit], counted: bool = False) -> float:
    """Slope of log |S_k| against log k over the resolved window."""
    window = resolved_window(audits)
    areas = [a.area if counted else a.area_exact for a in window]
    return area_exponent([a.k for a in window], areas)


def audit_frame(audits: Sequence[PieceAudit]) -> pd.DataFrame:
    rows = [
        {
            "k": a.k,
            "flux": a.flux,
            "eps_k*d_k": a.flux_lower,
            "area": a.area,
            "model": a.area_model,
            "jensen": a.jensen,
            "holder": a.holder,
            "series_term": a.series_term,
        }
        for a in audits
    ]
    return pd.DataFrame(rows, columns=AUDIT_COLUMNS)
