from __future__ import annotations

import hashlib
import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from qhx.core.errors import ConfigError
from qhx.geometry.domains import DomainSpec, bounding_box, contains_many, distance_field, domain_key

logger = logging.getLogger(__name__)

HALF_STENCILS = {
    8: ((1, 0), (0, 1), (1, 1), (1, -1)),
    16: ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)),
}
COLLAR = 2.0
ATTACH_RADIUS = math.sqrt(5.0)

GRAPH_CACHE: "OrderedDict[str, GridGraph]" = OrderedDict()
CACHE_LIMIT = 4
_CACHE_LOCK = threading.RLock()


@dataclass
class GridGraph:
    """Lattice nodes k*res inside the domain with d >= 2*res, edges weighted by length / d(midpoint)."""

    res: float
    stencil: int
    nodes: np.ndarray
    dist: np.ndarray
    matrix: csr_matrix
    labels: np.ndarray
    tree: cKDTree = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.nodes)


def _make_cache_key(d: DomainSpec, res: float, stencil: int) -> str:
    hasher = hashlib.blake2s(digest_size=16)
    hasher.update(domain_key(d).encode("utf-8"))
    hasher.update(repr(float(res)).encode("utf-8"))
    hasher.update(str(stencil).encode("utf-8"))
    return hasher.hexdigest()


def _remember(key: str, value: GridGraph) -> GridGraph:
    GRAPH_CACHE[key] = value
    GRAPH_CACHE.move_to_end(key)
    while len(GRAPH_CACHE) > CACHE_LIMIT:
        GRAPH_CACHE.popitem(last=False)
    return value


def edge_weights(d: DomainSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Segment length over d at the midpoint; inf when the midpoint leaves the domain."""
    mid = 0.5 * (a + b)
    length = np.hypot(*(b - a).T)
    weights = np.full(len(mid), np.inf)
    inside = contains_many(d, mid)
    if inside.any():
        weights[inside] = length[inside] / distance_field(d, mid[inside])
    return weights


def _build(d: DomainSpec, res: float, stencil: int) -> GridGraph:
    xmin, xmax, ymin, ymax = bounding_box(d)
    ix = np.arange(math.ceil(xmin / res), math.floor(xmax / res) + 1)
    iy = np.arange(math.ceil(ymin / res), math.floor(ymax / res) + 1)
    gx, gy = np.meshgrid(ix * res, iy * res)
    points = np.column_stack([gx.ravel(), gy.ravel()])

    keep = contains_many(d, points)
    dist = np.zeros(len(points))
    dist[keep] = distance_field(d, points[keep])
    keep &= dist >= COLLAR * res
    index = np.full(len(points), -1, dtype=np.int64)
    index[keep] = np.arange(int(keep.sum()))
    index = index.reshape(gx.shape)
    nodes, node_dist = points[keep], dist[keep]

    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    ny, nx = index.shape
    for di, dj in HALF_STENCILS[stencil]:
        # node (r, c) joins (r + dj, c + di)
        src = index[max(0, -dj) : ny - max(0, dj), max(0, -di) : nx - max(0, di)]
        dst = index[max(0, dj) : ny + min(0, dj), max(0, di) : nx + min(0, di)]
        ok = (src >= 0) & (dst >= 0)
        rows.append(src[ok])
        cols.append(dst[ok])
    src_all = np.concatenate(rows)
    dst_all = np.concatenate(cols)
    weights = edge_weights(d, nodes[src_all], nodes[dst_all])
    finite = np.isfinite(weights)
    n = len(nodes)
    matrix = coo_matrix((weights[finite], (src_all[finite], dst_all[finite])), shape=(n, n)).tocsr()
    _, labels = connected_components(matrix, directed=False)
    logger.info("grid graph: %d nodes, %d edges at res=%g", n, int(finite.sum()), res)
    return GridGraph(res=res, stencil=stencil, nodes=nodes, dist=node_dist, matrix=matrix, labels=labels, tree=cKDTree(nodes))


def grid_graph(d: DomainSpec, res: float, stencil: int = 16) -> GridGraph:
    if res <= 0:
        raise ConfigError("res must be positive")
    if stencil not in HALF_STENCILS:
        raise ConfigError("stencil must be 8 or 16")
    key = _make_cache_key(d, res, stencil)
    with _CACHE_LOCK:
        if key in GRAPH_CACHE:
            GRAPH_CACHE.move_to_end(key)
            return GRAPH_CACHE[key]
    graph = _build(d, res, stencil)
    with _CACHE_LOCK:
        return _remember(key, graph)


@dataclass
class AugmentedGraph:
    matrix: csr_matrix
    ids: List[int]
    positions: np.ndarray


def attach_points(d: DomainSpec, graph: GridGraph, points: Sequence[Tuple[float, float]]) -> AugmentedGraph:
    """Graph extended by query points, with each query's node id.

    A query that coincides with a lattice node reuses it; otherwise it becomes a new node
    joined to lattice nodes within sqrt(5)*res and to earlier queries within that radius.
    """
    n = graph.size
    radius = ATTACH_RADIUS * graph.res * (1.0 + 1e-9)
    ids: List[int] = []
    extra_pts: List[np.ndarray] = []
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    for p in points:
        p = np.asarray(p, dtype=float)
        gap, nearest = graph.tree.query(p)
        if gap <= 1e-12 * graph.res:
            ids.append(int(nearest))
            continue
        new_id = n + len(extra_pts)
        neighbours = np.asarray(graph.tree.query_ball_point(p, radius), dtype=np.int64)
        targets = [graph.nodes[neighbours]]
        target_ids = [neighbours]
        for other_id, other in enumerate(extra_pts, start=n):
            if np.hypot(*(other - p)) <= radius:
                targets.append(other[None, :])
                target_ids.append(np.array([other_id], dtype=np.int64))
        tgt = np.vstack(targets)
        if len(tgt):
            w = edge_weights(d, np.repeat(p[None, :], len(tgt), axis=0), tgt)
            ok = np.isfinite(w) & (w > 0)
            rows.append(np.full(int(ok.sum()), new_id, dtype=np.int64))
            cols.append(np.concatenate(target_ids)[ok])
            vals.append(w[ok])
        extra_pts.append(p)
        ids.append(new_id)
    positions = np.vstack([graph.nodes] + [p[None, :] for p in extra_pts]) if extra_pts else graph.nodes
    if not extra_pts:
        return AugmentedGraph(graph.matrix, ids, positions)
    size = n + len(extra_pts)
    base = graph.matrix.tocoo()
    row = np.concatenate([base.row] + rows)
    col = np.concatenate([base.col] + cols)
    val = np.concatenate([base.data] + vals)
    return AugmentedGraph(coo_matrix((val, (row, col)), shape=(size, size)).tocsr(), ids, positions)
