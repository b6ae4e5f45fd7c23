from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from qhx.core.errors import ConfigError
from qhx.geometry.partition import CuspPartition
from qhx.harmonic.dirichlet import GridField
from qhx.harmonic.gradient import GradientField
from qhx.orlicz.young import IteratedPsiParams, YoungPhi, phi_eval, psi_eval

logger = logging.getLogger(__name__)

DEFAULT_COLLAR = 2.0

Weight = Union[float, IteratedPsiParams]


@dataclass
class EnergyReport:
    functional: str
    value: float
    res: float
    collar: float
    params: Dict[str, object] = field(default_factory=dict)
    per_piece: Dict[int, float] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        rows = [{"functional": self.functional, "piece": "all", "value": self.value, "res": self.res, "collar": self.collar}]
        rows += [
            {"functional": self.functional, "piece": k, "value": v, "res": self.res, "collar": self.collar}
            for k, v in sorted(self.per_piece.items())
        ]
        return pd.DataFrame(rows)


def _cells(grad: GradientField, collar: Optional[float]) -> tuple:
    width = DEFAULT_COLLAR * grad.res if collar is None else collar
    if width < 0:
        raise ConfigError("collar must be non-negative")
    with np.errstate(invalid="ignore"):
        keep = grad.mask & (grad.dist >= width)
    return keep, width


def _sum(density: np.ndarray, keep: np.ndarray, res: float, partition: Optional[CuspPartition], xy: Optional[np.ndarray]):
    cell = res * res
    total = float(density[keep].sum() * cell)
    per_piece: Dict[int, float] = {}
    if partition is not None:
        labels = partition.piece_index(xy)
        values = density[keep]
        for piece in partition.pieces:
            per_piece[piece.k] = float(values[labels == piece.k].sum() * cell)
    return total, per_piece


def weight_values(weight: Weight, dist: np.ndarray) -> np.ndarray:
    """log^λ(e + 1/d) for a float λ, or Ψ_{0,σ}(1/d)."""
    if isinstance(weight, IteratedPsiParams):
        if weight.a != 0:
            raise ConfigError("weights must have a = 0")
        return psi_eval(weight, 1.0 / dist)
    return psi_eval(IteratedPsiParams(a=0.0, sigma=(float(weight),)), 1.0 / dist)


def orlicz_energy(
    grad: GradientField,
    phi: YoungPhi,
    partition: Optional[CuspPartition] = None,
    collar: Optional[float] = None,
) -> EnergyReport:
    """Σ Φ(|Dh|) res² over nodes at least ``collar`` from the boundary."""
    keep, width = _cells(grad, collar)
    density = np.zeros(grad.norm.shape)
    density[keep] = phi_eval(phi, grad.norm[keep])
    xy = grad.points(keep) if partition is not None else None
    total, per_piece = _sum(density, keep, grad.res, partition, xy)
    logger.debug("Orlicz energy %.6g on %d cells", total, int(keep.sum()))
    return EnergyReport("orlicz", total, grad.res, width, {"alpha": phi.alpha, "lam": phi.lam}, per_piece)


def weighted_energy(
    grad: GradientField,
    s: float,
    weight: Weight = 0.0,
    partition: Optional[CuspPartition] = None,
    collar: Optional[float] = None,
) -> EnergyReport:
    """Σ |Dh|^{1+s} w(1/d) res²."""
    if not 0.0 < s < 1.0:
        raise ConfigError("s must lie in (0, 1)")
    keep, width = _cells(grad, collar)
    density = np.zeros(grad.norm.shape)
    density[keep] = grad.norm[keep] ** (1.0 + s) * weight_values(weight, grad.dist[keep])
    xy = grad.points(keep) if partition is not None else None
    total, per_piece = _sum(density, keep, grad.res, partition, xy)
    label = weight.sigma if isinstance(weight, IteratedPsiParams) else (float(weight),)
    return EnergyReport("weighted", total, grad.res, width, {"s": s, "lam": list(label)}, per_piece)


@dataclass
class JacobianAudit:
    min_jacobian: float
    nonpositive: int
    cells: int
    collar: float

    @property
    def passed(self) -> bool:
        return self.nonpositive == 0


def jacobian_audit(grad: GradientField, collar: Optional[float] = None) -> JacobianAudit:
    keep, width = _cells(grad, collar)
    jac = grad.jacobian[keep]
    if jac.size == 0:
        raise ConfigError("no cells left after removing the collar")
    audit = JacobianAudit(float(jac.min()), int((jac <= 0).sum()), int(jac.size), width)
    if not audit.passed:
        logger.warning("Jacobian is non-positive on %d of %d cells", audit.nonpositive, audit.cells)
    return audit


def field_frame(grid: GridField, grad: GradientField) -> pd.DataFrame:
    gx, gy = np.meshgrid(grid.x, grid.y)
    m = grid.mask
    return pd.DataFrame(
        {
            "x": gx[m],
            "y": gy[m],
            "h1": grid.h.real[m],
            "h2": grid.h.imag[m],
            "|Dh|": grad.norm[m],
            "d_boundary": grid.dist[m],
        }
    )
