from __future__ import annotations

import json
import logging
import math
from abc import ABC, abstractmethod
from functools import cached_property, lru_cache
from typing import Annotated, List, Literal, NamedTuple, Tuple, Union

import numpy as np
import shapely
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing, Polygon
from shapely.ops import polylabel

from qhx.core.config import MEMBERSHIP_TOL
from qhx.core.errors import ConfigError, DomainError
from qhx.orlicz.young import IteratedPsiParams, psi_eval

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
REFINE_STEPS = 60
MIN_BOUNDARY_SAMPLES = 16
BULB_CENTER = 4.0
BULB_RADIUS = math.sqrt(10.0)


class Point2(NamedTuple):
    x: float
    y: float

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


def as_xy(points) -> np.ndarray:
    """Coerce a point, a list of points or complex numbers to an (N, 2) array."""
    arr = np.asarray(points)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
    arr = np.asarray(arr, dtype=float)
    return arr.reshape(-1, 2)


class UnitDisk(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: Literal["unit_disk"] = "unit_disk"


class PowerCusp(BaseModel):
    """Cusp with walls y = |x|^s ("graph") or |y| = x^{1/s} on a bulb ("model")."""

    model_config = ConfigDict(frozen=True)

    variant: Literal["power_cusp"] = "power_cusp"
    s: float = Field(gt=0.0, lt=1.0)
    model: Literal["graph", "model"] = "graph"


class IteratedLogCusp(BaseModel):
    """Cusp with walls y = Ψ_{-s,σ}(1/|x|)."""

    model_config = ConfigDict(frozen=True)

    variant: Literal["iterated_log_cusp"] = "iterated_log_cusp"
    s: float = Field(gt=0.0, lt=1.0)
    sigma: Tuple[float, ...] = Field(min_length=1, max_length=2)

    @model_validator(mode="after")
    def _wall_is_increasing(self) -> "IteratedLogCusp":
        x = np.geomspace(1e-12, 1.0, 4001)
        if not np.all(np.diff(wall_height(self, x)) > 0):
            raise ValueError("wall profile is not increasing on (0, 1]")
        return self


class Polyline(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: Literal["polyline"] = "polyline"
    vertices: Tuple[Tuple[float, float], ...] = Field(min_length=3)

    @field_validator("vertices")
    @classmethod
    def _simple_ccw(cls, value):
        ring = LinearRing(value)
        if not ring.is_simple or not ring.is_valid:
            raise ValueError("polyline is not simple")
        if not ring.is_ccw:
            raise ValueError("polyline must be positively oriented")
        return value


DomainSpec = Annotated[Union[UnitDisk, PowerCusp, IteratedLogCusp, Polyline], Field(discriminator="variant")]
_DOMAIN_ADAPTER: TypeAdapter = TypeAdapter(DomainSpec)


def parse_domain(data) -> DomainSpec:
    try:
        if isinstance(data, str):
            return _DOMAIN_ADAPTER.validate_json(data)
        return _DOMAIN_ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise DomainError(f"invalid domain: {exc}") from exc


def domain_key(d: DomainSpec) -> str:
    return json.dumps(d.model_dump(mode="json"), sort_keys=True)


def wall_height(d: Union[PowerCusp, IteratedLogCusp], x) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    if isinstance(d, PowerCusp):
        return x**d.s
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, psi_eval(IteratedPsiParams(a=-d.s, sigma=d.sigma), 1.0 / safe), 0.0)


class _Shape(ABC):
    """Boundary geometry of one domain; parameter t runs over [0, period)."""

    period: float

    @abstractmethod
    def contains(self, xy: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def curve(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def nearest(self, xy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Distance to the boundary and parameter of the nearest boundary point."""

    @abstractmethod
    def bbox(self) -> Tuple[float, float, float, float]: ...

    @abstractmethod
    def reference_point(self) -> Point2: ...

    @abstractmethod
    def sample_params(self) -> np.ndarray: ...

    @cached_property
    def _arclength_table(self) -> Tuple[np.ndarray, np.ndarray]:
        t = np.append(self.sample_params(), self.period)
        pts = self.curve(np.mod(t, self.period))
        seg = np.hypot(*np.diff(pts, axis=0).T)
        return t, np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self._arclength_table[1][-1])

    def fraction(self, t: np.ndarray) -> np.ndarray:
        params, arc = self._arclength_table
        return np.interp(np.mod(t, self.period), params, arc) / self.length

    def param_at_fraction(self, f: np.ndarray) -> np.ndarray:
        params, arc = self._arclength_table
        return np.interp(np.mod(f, 1.0) * self.length, arc, params)


class _CurveShape(_Shape):
    """Shapes with an analytic boundary curve; nearest points by KD-tree then golden section."""

    @cached_property
    def _samples(self) -> Tuple[np.ndarray, np.ndarray, cKDTree]:
        t = self.sample_params()
        pts = self.curve(t)
        return t, pts, cKDTree(pts)

    def nearest(self, xy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        xy = as_xy(xy)
        t, pts, tree = self._samples
        _, idx = tree.query(xy)
        n = t.size
        lo = np.where(idx > 0, t[np.maximum(idx - 1, 0)], t[-1] - self.period)
        hi = np.where(idx < n - 1, t[np.minimum(idx + 1, n - 1)], t[0] + self.period)
        best_t, best_d2 = self._golden(xy, lo, hi)
        vertex_d2 = np.sum((pts[idx] - xy) ** 2, axis=1)
        use_vertex = vertex_d2 < best_d2
        best_t = np.where(use_vertex, t[idx], best_t)
        best_d2 = np.where(use_vertex, vertex_d2, best_d2)
        return np.sqrt(best_d2), np.mod(best_t, self.period)

    def _golden(self, xy, lo, hi):
        def d2(tt):
            return np.sum((self.curve(np.mod(tt, self.period)) - xy) ** 2, axis=1)

        a, b = lo.copy(), hi.copy()
        c = b - GOLDEN * (b - a)
        e = a + GOLDEN * (b - a)
        fc, fe = d2(c), d2(e)
        for _ in range(REFINE_STEPS):
            # left: the minimum lies in [a, e]
            left = fc < fe
            a = np.where(left, a, c)
            b = np.where(left, e, b)
            new_c = np.where(left, b - GOLDEN * (b - a), e)
            new_e = np.where(left, c, a + GOLDEN * (b - a))
            trial = np.where(left, new_c, new_e)
            fp = d2(trial)
            fc, fe = np.where(left, fp, fe), np.where(left, fc, fp)
            c, e = new_c, new_e
        mid = 0.5 * (a + b)
        return mid, d2(mid)


class _DiskShape(_Shape):
    period = 2.0 * math.pi

    def contains(self, xy):
        xy = as_xy(xy)
        return np.hypot(xy[:, 0], xy[:, 1]) < 1.0 - MEMBERSHIP_TOL

    def curve(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.cos(t), np.sin(t)], axis=-1)

    def nearest(self, xy):
        xy = as_xy(xy)
        r = np.hypot(xy[:, 0], xy[:, 1])
        return np.abs(1.0 - r), np.mod(np.arctan2(xy[:, 1], xy[:, 0]), self.period)

    def fraction(self, t):
        return np.mod(t, self.period) / self.period

    def param_at_fraction(self, f):
        return np.mod(f, 1.0) * self.period

    @property
    def length(self) -> float:
        return self.period

    def bbox(self):
        return (-1.0, 1.0, -1.0, 1.0)

    def reference_point(self):
        return Point2(0.0, 0.0)

    def sample_params(self):
        return np.linspace(0.0, self.period, 4096, endpoint=False)


class _GraphCuspShape(_CurveShape):
    """Walls y = g(|x|) for |x| <= 1 closed by the circle through (±1, g(1)) centred at the origin.

    t in [0,1): right wall upward, [1,2): arc, [2,3): left wall downward.
    Wall parameter u gives x = u^{1/s}, so y is close to uniform in u.
    """

    period = 3.0

    def __init__(self, spec: Union[PowerCusp, IteratedLogCusp], wall_samples: int = 6000, arc_samples: int = 3000):
        self.spec = spec
        self.s = spec.s
        self.top = float(wall_height(spec, 1.0))
        self.radius = math.hypot(1.0, self.top)
        self.alpha0 = math.atan2(self.top, 1.0)
        self._n_wall = wall_samples
        self._n_arc = arc_samples

    def g(self, x):
        return wall_height(self.spec, x)

    def contains(self, xy):
        xy = as_xy(xy)
        x, y = xy[:, 0], xy[:, 1]
        ax = np.abs(x)
        inside = (ax < 1.0) & (x * x + y * y < (self.radius - MEMBERSHIP_TOL) ** 2)
        return inside & (y > self.g(np.minimum(ax, 1.0)) + MEMBERSHIP_TOL)

    def curve(self, t):
        t = np.asarray(t, dtype=float)
        u_right = np.clip(t, 0.0, 1.0)
        u_left = np.clip(3.0 - t, 0.0, 1.0)
        phi = self.alpha0 + np.clip(t - 1.0, 0.0, 1.0) * (math.pi - 2.0 * self.alpha0)
        x_r = u_right ** (1.0 / self.s)
        x_l = u_left ** (1.0 / self.s)
        x = np.select([t < 1.0, t < 2.0], [x_r, self.radius * np.cos(phi)], -x_l)
        y = np.select([t < 1.0, t < 2.0], [self.g(x_r), self.radius * np.sin(phi)], self.g(x_l))
        return np.stack([x, y], axis=-1)

    def sample_params(self):
        return np.concatenate(
            [
                np.linspace(0.0, 1.0, self._n_wall, endpoint=False),
                np.linspace(1.0, 2.0, self._n_arc, endpoint=False),
                np.linspace(2.0, 3.0, self._n_wall, endpoint=False),
            ]
        )

    def bbox(self):
        return (-1.0, 1.0, 0.0, self.radius)

    def reference_point(self):
        res = minimize_scalar(
            lambda y: -float(self.nearest(np.array([[0.0, y]]))[0][0]),
            bounds=(self.top * 0.5, self.radius),
            method="bounded",
            options={"xatol": 1e-10},
        )
        return Point2(0.0, float(res.x))


class _ModelCuspShape(_CurveShape):
    """{0 < x <= 1, |y| < x^{1/s}} glued to the disk through (1, ±1) centred at (4, 0).

    t in [0,1): lower wall to (1,-1), [1,2): bulb arc, [2,3): upper wall back to the tip.
    """

    period = 3.0

    def __init__(self, s: float, wall_samples: int = 6000, arc_samples: int = 4000):
        self.s = s
        self.beta = math.atan2(1.0, BULB_CENTER - 1.0)
        self._n_wall = wall_samples
        self._n_arc = arc_samples

    def contains(self, xy):
        xy = as_xy(xy)
        x, y = xy[:, 0], xy[:, 1]
        with np.errstate(invalid="ignore"):
            wall = np.where(x > 0, np.abs(np.where(x > 0, x, 0.0)) ** (1.0 / self.s), 0.0)
        cusp = (x > 0) & (x <= 1.0) & (np.abs(y) < wall - MEMBERSHIP_TOL)
        bulb = (x >= 1.0) & ((x - BULB_CENTER) ** 2 + y * y < (BULB_RADIUS - MEMBERSHIP_TOL) ** 2)
        return cusp | bulb

    def curve(self, t):
        t = np.asarray(t, dtype=float)
        u_low = np.clip(t, 0.0, 1.0)
        u_up = np.clip(3.0 - t, 0.0, 1.0)
        half = math.pi - self.beta
        phi = -half + np.clip(t - 1.0, 0.0, 1.0) * 2.0 * half
        x = np.select([t < 1.0, t < 2.0], [u_low, BULB_CENTER + BULB_RADIUS * np.cos(phi)], u_up)
        y = np.select(
            [t < 1.0, t < 2.0],
            [-(u_low ** (1.0 / self.s)), BULB_RADIUS * np.sin(phi)],
            u_up ** (1.0 / self.s),
        )
        return np.stack([x, y], axis=-1)

    def sample_params(self):
        # graded toward the tip at t = 0 and t = 3
        grade = np.linspace(0.0, 1.0, self._n_wall, endpoint=False) ** 1.5
        upper = 3.0 - (np.arange(self._n_wall, 0, -1) / self._n_wall) ** 1.5
        return np.concatenate([grade, np.linspace(1.0, 2.0, self._n_arc, endpoint=False), upper])

    def bbox(self):
        return (0.0, BULB_CENTER + BULB_RADIUS, -BULB_RADIUS, BULB_RADIUS)

    def reference_point(self):
        return Point2(BULB_CENTER, 0.0)


class _PolylineShape(_Shape):
    def __init__(self, spec: Polyline):
        self.polygon = Polygon(spec.vertices)
        self.ring = self.polygon.exterior
        self.period = float(self.ring.length)
        shapely.prepare(self.polygon)

    def contains(self, xy):
        xy = as_xy(xy)
        inside = shapely.contains_xy(self.polygon, xy[:, 0], xy[:, 1])
        dist = shapely.distance(self.ring, shapely.points(xy))
        return inside & (dist > MEMBERSHIP_TOL)

    def curve(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        pts = shapely.line_interpolate_point(self.ring, np.mod(t, self.period))
        return shapely.get_coordinates(pts).reshape(-1, 2)

    def nearest(self, xy):
        pts = shapely.points(as_xy(xy))
        return shapely.distance(self.ring, pts), shapely.line_locate_point(self.ring, pts)

    def fraction(self, t):
        return np.mod(t, self.period) / self.period

    def param_at_fraction(self, f):
        return np.mod(f, 1.0) * self.period

    @property
    def length(self) -> float:
        return self.period

    def bbox(self):
        xmin, ymin, xmax, ymax = self.polygon.bounds
        return (xmin, xmax, ymin, ymax)

    def reference_point(self):
        p = polylabel(self.polygon, tolerance=1e-6)
        return Point2(float(p.x), float(p.y))

    def sample_params(self):
        return np.linspace(0.0, self.period, 4096, endpoint=False)


@lru_cache(maxsize=32)
def shape_for(d: DomainSpec) -> _Shape:
    if isinstance(d, UnitDisk):
        return _DiskShape()
    if isinstance(d, PowerCusp):
        return _GraphCuspShape(d) if d.model == "graph" else _ModelCuspShape(d.s)
    if isinstance(d, IteratedLogCusp):
        return _GraphCuspShape(d)
    if isinstance(d, Polyline):
        return _PolylineShape(d)
    raise DomainError(f"unsupported domain {d!r}")


def contains(d: DomainSpec, p) -> bool:
    return bool(shape_for(d).contains(as_xy(p))[0])


def contains_many(d: DomainSpec, xy) -> np.ndarray:
    return shape_for(d).contains(as_xy(xy))


def distance_field(d: DomainSpec, xy) -> np.ndarray:
    """Distance to the boundary, without a membership check."""
    return shape_for(d).nearest(as_xy(xy))[0]


def nearest_boundary(d: DomainSpec, xy) -> Tuple[np.ndarray, np.ndarray]:
    """Distance to the boundary and arclength fraction of the nearest boundary point."""
    shape = shape_for(d)
    dist, t = shape.nearest(as_xy(xy))
    return dist, shape.fraction(t)


def dist_to_boundary(d: DomainSpec, p) -> float:
    xy = as_xy(p)
    if not shape_for(d).contains(xy)[0]:
        raise DomainError("exterior point")
    return float(distance_field(d, xy)[0])


def boundary_param(d: DomainSpec, n: int) -> List[Tuple[float, Point2]]:
    """``n`` boundary points equally spaced in arclength, with their arclength positions."""
    if n < MIN_BOUNDARY_SAMPLES:
        raise ConfigError(f"boundary_param needs at least {MIN_BOUNDARY_SAMPLES} samples")
    shape = shape_for(d)
    fractions = np.arange(n) / n
    pts = shape.curve(shape.param_at_fraction(fractions))
    arc = fractions * shape.length
    return [(float(a), Point2(float(x), float(y))) for a, (x, y) in zip(arc, pts)]


def boundary_point(d: DomainSpec, fraction) -> np.ndarray:
    shape = shape_for(d)
    return shape.curve(shape.param_at_fraction(np.asarray(fraction, dtype=float)))


def boundary_length(d: DomainSpec) -> float:
    return shape_for(d).length


def bounding_box(d: DomainSpec) -> Tuple[float, float, float, float]:
    return shape_for(d).bbox()


def reference_point(d: DomainSpec) -> Point2:
    return shape_for(d).reference_point()
