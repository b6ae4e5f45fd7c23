from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.sparse.csgraph import dijkstra

from qhx.core.errors import DomainError, NumericalFailure
from qhx.geometry.domains import DomainSpec, Point2, as_xy, contains_many, distance_field
from qhx.metrics.graph import COLLAR, AugmentedGraph, GridGraph, attach_points, grid_graph

logger = logging.getLogger(__name__)


@dataclass
class GeodesicResult:
    distance: float
    path: List[Point2] = field(default_factory=list)
    resolution: float = 0.0


@dataclass
class DistanceField:
    """Single-source quasihyperbolic distances to every lattice node."""

    source: Point2
    nodes: np.ndarray
    dist: np.ndarray
    qh: np.ndarray
    resolution: float


def _check_query(d: DomainSpec, points: np.ndarray, res: float) -> np.ndarray:
    inside = contains_many(d, points)
    if not inside.all():
        raise DomainError("exterior point")
    dist = distance_field(d, points)
    # queries sitting on a node with d == 2*res are admissible
    if np.any(dist < COLLAR * res * (1.0 - 1e-9)):
        raise DomainError(f"query closer than {COLLAR:g}*res to the boundary; refine res")
    return dist


def _walk_back(predecessors: np.ndarray, source: int, target: int) -> List[int]:
    order = [target]
    while order[-1] != source:
        prev = int(predecessors[order[-1]])
        if prev < 0:
            break
        order.append(prev)
    order.reverse()
    return order


def quasihyperbolic_distance(d: DomainSpec, z0, z1, res: float, stencil: int = 16) -> GeodesicResult:
    """Shortest weighted lattice path between two interior points.

    The search always starts from the lexicographically smaller endpoint so that swapping
    the arguments returns the same float.
    """
    pts = np.vstack([as_xy(z0), as_xy(z1)])
    _check_query(d, pts, res)
    if np.array_equal(pts[0], pts[1]):
        p = Point2(float(pts[0, 0]), float(pts[0, 1]))
        return GeodesicResult(0.0, [p, p], res)

    swapped = tuple(pts[1]) < tuple(pts[0])
    ordered = pts[::-1] if swapped else pts
    graph = grid_graph(d, res, stencil)
    aug: AugmentedGraph = attach_points(d, graph, ordered)
    source, target = aug.ids
    dist, predecessors = dijkstra(aug.matrix, directed=False, indices=source, return_predecessors=True)
    value = float(dist[target])
    if not math.isfinite(value):
        raise NumericalFailure("disconnected at this resolution")

    ids = _walk_back(predecessors, source, target)
    if swapped:
        ids.reverse()
    path = [Point2(float(x), float(y)) for x, y in aug.positions[ids]]
    logger.debug("qh distance %.6g over %d path nodes at res=%g", value, len(path), res)
    return GeodesicResult(value, path, res)


def quasihyperbolic_field(d: DomainSpec, z0, res: float, stencil: int = 16) -> DistanceField:
    source = as_xy(z0)
    _check_query(d, source, res)
    graph: GridGraph = grid_graph(d, res, stencil)
    aug = attach_points(d, graph, source)
    dist = dijkstra(aug.matrix, directed=False, indices=aug.ids[0])
    return DistanceField(
        source=Point2(float(source[0, 0]), float(source[0, 1])),
        nodes=graph.nodes,
        dist=graph.dist,
        qh=np.asarray(dist[: graph.size]),
        resolution=res,
    )


def distances_from(d: DomainSpec, z0, targets: Sequence, res: float, stencil: int = 16) -> np.ndarray:
    """Distances from ``z0`` to several interior targets with one Dijkstra run."""
    pts = np.vstack([as_xy(z0), as_xy(targets)])
    _check_query(d, pts, res)
    graph = grid_graph(d, res, stencil)
    aug = attach_points(d, graph, pts)
    dist = dijkstra(aug.matrix, directed=False, indices=aug.ids[0])
    out = np.asarray(dist)[aug.ids[1:]]
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("disconnected at this resolution")
    return out
