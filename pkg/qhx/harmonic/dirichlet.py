from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Tuple, Union

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix, csc_matrix
from scipy.sparse.linalg import LinearOperator, bicgstab, spilu, splu
from threadpoolctl import threadpool_limits

from qhx.core.config import SOLVER_RTOL, get_settings
from qhx.core.errors import ConfigError, NumericalFailure
from qhx.geometry.domains import DomainSpec, boundary_point, bounding_box, contains_many, distance_field, nearest_boundary
from qhx.harmonic.boundary_map import BoundaryMap

logger = logging.getLogger(__name__)

Scheme = Literal["shortley_weller", "nearest"]
Solver = Literal["direct", "iterative"]
Trace = Union[BoundaryMap, Callable[[np.ndarray], np.ndarray]]

# east, west, north, south as (column step, row step)
DIRECTIONS: Tuple[Tuple[int, int], ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
BISECTION_STEPS = 52
MIN_ARM = 1e-6


@dataclass
class GridField:
    """Solution h = h1 + i h2 on the lattice k*res, with the boundary data each node sees.

    ``arms[j]`` is the distance to the neighbour in direction j in units of res (1 for an
    interior neighbour) and ``traces[j]`` the boundary value placed there (nan when interior).
    """

    x: np.ndarray
    y: np.ndarray
    res: float
    mask: np.ndarray
    h: np.ndarray
    arms: np.ndarray
    traces: np.ndarray
    dist: np.ndarray
    residual: float
    scheme: str = "shortley_weller"
    meta: dict = field(default_factory=dict)

    @property
    def h1(self) -> np.ndarray:
        return self.h.real

    @property
    def h2(self) -> np.ndarray:
        return self.h.imag

    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.x, self.y)
        return np.column_stack([gx[self.mask], gy[self.mask]])


def _lattice(d: DomainSpec, res: float):
    xmin, xmax, ymin, ymax = bounding_box(d)
    # one padding cell so every interior node has four lattice neighbours
    ix = np.arange(math.ceil(xmin / res) - 1, math.floor(xmax / res) + 2)
    iy = np.arange(math.ceil(ymin / res) - 1, math.floor(ymax / res) + 2)
    return ix * res, iy * res


def _boundary_values(d: DomainSpec, phi: Trace, pts: np.ndarray) -> np.ndarray:
    if isinstance(phi, BoundaryMap):
        _, frac = nearest_boundary(d, pts)
        return phi(frac)
    return np.asarray(phi(pts), dtype=complex)


def _crossings(d: DomainSpec, start: np.ndarray, step: np.ndarray) -> np.ndarray:
    """Fraction in (0, 1] of the segment start -> start+step where it leaves the domain."""
    lo = np.zeros(len(start))
    hi = np.ones(len(start))
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        inside = contains_many(d, start + mid[:, None] * step)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return np.maximum(hi, MIN_ARM)


def _check_connected(mask: np.ndarray) -> None:
    _, count = ndimage.label(mask)
    if count > 1:
        raise NumericalFailure(f"grid mask splits into {count} components; refine res")
    if count == 0:
        raise NumericalFailure("no interior lattice nodes at this resolution")


def _solve(matrix: csc_matrix, rhs: np.ndarray, solver: Solver) -> np.ndarray:
    if solver == "direct":
        lu = splu(matrix)
        return lu.solve(rhs.real) + 1j * lu.solve(rhs.imag)
    ilu = spilu(matrix, drop_tol=1e-6, fill_factor=20)
    precond = LinearOperator(matrix.shape, ilu.solve)
    parts = []
    for part in (rhs.real, rhs.imag):
        sol, info = bicgstab(matrix, part, rtol=SOLVER_RTOL * 1e-2, atol=0.0, maxiter=20000, M=precond)
        if info != 0:
            raise NumericalFailure(f"iterative solve did not converge (info={info})")
        parts.append(sol)
    return parts[0] + 1j * parts[1]


def solve_harmonic_dirichlet(
    d: DomainSpec,
    phi: Trace,
    res: float,
    scheme: Scheme = "shortley_weller",
    solver: Solver = "direct",
) -> GridField:
    """Discrete harmonic extension of the trace ``phi`` on the lattice k*res inside ``d``."""
    if res <= 0:
        raise ConfigError("res must be positive")
    if scheme not in ("shortley_weller", "nearest"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    if solver not in ("direct", "iterative"):
        raise ConfigError(f"unknown solver {solver!r}")

    xs, ys = _lattice(d, res)
    gx, gy = np.meshgrid(xs, ys)
    mask = contains_many(d, np.column_stack([gx.ravel(), gy.ravel()])).reshape(gx.shape)
    _check_connected(mask)
    ny, nx = mask.shape
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(int(mask.sum()))
    rows_p, cols_p = np.nonzero(mask)
    n = rows_p.size
    points = np.column_stack([gx[mask], gy[mask]])

    arms = np.ones((4, ny, nx))
    traces = np.full((4, ny, nx), np.nan + 0j)
    nbr_ids = np.empty((4, n), dtype=np.int64)
    for j, (di, dj) in enumerate(DIRECTIONS):
        r2, c2 = rows_p + dj, cols_p + di
        nbr_ids[j] = index[r2, c2]
        outside = nbr_ids[j] < 0
        if not outside.any():
            continue
        step = np.array([di * res, dj * res])
        start = points[outside]
        if scheme == "shortley_weller":
            theta = _crossings(d, start, np.broadcast_to(step, start.shape))
            where = start + theta[:, None] * step
        else:
            theta = np.ones(start.shape[0])
            # the exterior node takes the value of its nearest boundary point
            _, frac = nearest_boundary(d, start + step)
            where = boundary_point(d, frac)
        values = _boundary_values(d, phi, where)
        arms[j, rows_p[outside], cols_p[outside]] = theta
        traces[j, rows_p[outside], cols_p[outside]] = values

    a_e, a_w, a_n, a_s = (arms[j][mask] for j in range(4))
    coef = np.stack(
        [
            1.0 / (a_e * (a_e + a_w)),
            1.0 / (a_w * (a_e + a_w)),
            1.0 / (a_n * (a_n + a_s)),
            1.0 / (a_s * (a_n + a_s)),
        ]
    )
    diag = 1.0 / (a_e * a_w) + 1.0 / (a_n * a_s)
    rhs = np.zeros(n, dtype=complex)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [diag]
    for j in range(4):
        interior = nbr_ids[j] >= 0
        rows.append(np.flatnonzero(interior))
        cols.append(nbr_ids[j][interior])
        vals.append(-coef[j][interior])
        boundary = ~interior
        rhs[boundary] += coef[j][boundary] * traces[j][mask][boundary]
    matrix = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsc()

    with threadpool_limits(limits=get_settings().threads):
        u = _solve(matrix, rhs, solver)
    scale = max(float(np.linalg.norm(rhs)), 1e-300)
    residual = float(np.linalg.norm(matrix @ u - rhs)) / scale
    if not residual < SOLVER_RTOL:
        raise NumericalFailure(f"Dirichlet solve residual {residual:.3e} exceeds {SOLVER_RTOL:g}")
    logger.info("Dirichlet solve: %d unknowns at res=%g, residual %.2e", n, res, residual)

    h = np.full(mask.shape, np.nan + 0j)
    h[mask] = u
    dist = np.full(mask.shape, np.nan)
    dist[mask] = distance_field(d, points)
    return GridField(x=xs, y=ys, res=res, mask=mask, h=h, arms=arms, traces=traces, dist=dist, residual=residual, scheme=scheme)
