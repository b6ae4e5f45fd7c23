from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import zeta
from scipy.stats import linregress

from qhx.core.errors import ConfigError, DomainError
from qhx.geometry.domains import IteratedLogCusp, PowerCusp, as_xy, wall_height

logger = logging.getLogger(__name__)

CuspDomain = Union[PowerCusp, IteratedLogCusp]


def level(k: int) -> float:
    """Y_k = Σ_{j>k} j^{-2}; Y_0 = π²/6."""
    return float(zeta(2.0, k + 1))


def epsilon(k: int) -> float:
    return float(k) ** -2


def wall_inverse(d: CuspDomain, y: float) -> float:
    """Half-width x of the cusp at height y, i.e. g(x) = y."""
    if y <= 0:
        return 0.0
    if isinstance(d, PowerCusp):
        return float(y ** (1.0 / d.s))
    top = float(wall_height(d, 1.0))
    if y >= top:
        raise DomainError(f"height {y:g} lies above the cusp walls")
    return float(brentq(lambda x: float(wall_height(d, x)) - y, 0.0, 1.0, xtol=1e-300, rtol=1e-14, maxiter=400))


@dataclass(frozen=True)
class CuspPiece:
    k: int
    y_low: float
    y_high: float
    x_low: float
    x_high: float
    area: float

    @property
    def height(self) -> float:
        return self.y_high - self.y_low

    def contains(self, d: CuspDomain, xy) -> np.ndarray:
        xy = as_xy(xy)
        x, y = xy[:, 0], xy[:, 1]
        band = (y >= self.y_low) & (y < self.y_high) & (np.abs(x) < self.x_high)
        return band & (y > wall_height(d, np.minimum(np.abs(x), 1.0)))


@dataclass
class CuspPartition:
    domain: CuspDomain
    K: int
    pieces: List[CuspPiece] = field(default_factory=list)

    def piece(self, k: int) -> CuspPiece:
        for piece in self.pieces:
            if piece.k == k:
                return piece
        raise KeyError(k)

    def piece_index(self, xy) -> np.ndarray:
        """Piece number k for each point, 0 outside every piece."""
        xy = as_xy(xy)
        out = np.zeros(len(xy), dtype=int)
        for piece in self.pieces:
            out[piece.contains(self.domain, xy)] = piece.k
        return out


def _exact_area(d: CuspDomain, y_low: float, y_high: float, x_low: float, x_high: float) -> float:
    if isinstance(d, PowerCusp):
        p = 1.0 + 1.0 / d.s
        return 2.0 * (y_high**p - y_low**p) / p
    under, _ = quad(lambda x: float(wall_height(d, x)), x_low, x_high, limit=200)
    return 2.0 * (x_high * y_high - x_low * y_low - under)


def cusp_pieces(d: CuspDomain, K: int, min_height: float = 1e-12) -> CuspPartition:
    if K < 2:
        raise ConfigError("cusp_pieces needs K >= 2")
    if isinstance(d, PowerCusp) and d.model != "graph":
        raise DomainError("pieces are defined for graph cusps only")
    if float(wall_height(d, 1.0)) <= level(1):
        raise DomainError("cusp walls end below the first level")
    pieces: List[CuspPiece] = []
    for k in range(2, K + 1):
        y_low, y_high = level(k), level(k - 1)
        x_low, x_high = wall_inverse(d, y_low), wall_inverse(d, y_high)
        if y_high - y_low < min_height or 2.0 * x_low < min_height:
            raise DomainError("piece below resolution")
        pieces.append(CuspPiece(k, y_low, y_high, x_low, x_high, _exact_area(d, y_low, y_high, x_low, x_high)))
    logger.debug("built %d cusp pieces down to height %.3g", len(pieces), pieces[-1].y_low)
    return CuspPartition(domain=d, K=K, pieces=pieces)


def count_area(piece: CuspPiece, d: CuspDomain, cells: int = 400) -> float:
    """Area of a piece by counting lattice cell centres; ``cells`` spans its smaller side."""
    res = min(piece.height, 2.0 * piece.x_low) / cells
    xs = np.arange(-piece.x_high + res / 2, piece.x_high, res)
    ys = np.arange(piece.y_low + res / 2, piece.y_high, res)
    gx, gy = np.meshgrid(xs, ys)
    inside = piece.contains(d, np.column_stack([gx.ravel(), gy.ravel()]))
    return float(inside.sum()) * res * res


def area_exponent(ks: Sequence[int], areas: Sequence[float]) -> float:
    """Regression slope of log area against log k."""
    ks, areas = np.asarray(ks, dtype=float), np.asarray(areas, dtype=float)
    if ks.size < 2 or np.any(areas <= 0):
        raise ConfigError("area regression needs at least two positive areas")
    return float(linregress(np.log(ks), np.log(areas)).slope)
