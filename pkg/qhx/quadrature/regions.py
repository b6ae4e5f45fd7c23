from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from qhx.core.errors import ConfigError
from qhx.geometry.domains import as_xy

Interval = Tuple[float, float]

INNER_RADIUS = 0.5
S1_RADIUS = 0.75


def _theta_one(r: float) -> float:
    c = 1.0 / (math.sqrt(2.0) * r)
    return math.pi if c >= 1.0 else math.asin(c) - math.pi / 4.0


def _theta_two(r: float) -> float:
    arg = (r * r + 1.0 - S1_RADIUS**2) / (2.0 * r)
    if arg >= 1.0:
        return -1.0
    return math.acos(max(arg, -1.0))


def _s1_contains(z: np.ndarray) -> np.ndarray:
    rel = z - 1.0
    sector = np.abs(rel.imag) <= -rel.real
    return (np.abs(rel) <= S1_RADIUS) & sector


def _s1_intervals(r: float) -> List[Interval]:
    top = min(_theta_one(r), _theta_two(r))
    return [(-top, top)] if top > 0 else []


def _s2_contains(z: np.ndarray) -> np.ndarray:
    y = np.abs(z.imag)
    return (y <= 1.0 / math.sqrt(2.0)) & (z.real >= 1.0 - y) & (z.real <= 1.0)


def _s2_intervals(r: float) -> List[Interval]:
    c = 1.0 / (math.sqrt(2.0) * r)
    if c > 1.0:
        return []
    lo = math.asin(c) - math.pi / 4.0
    hi = min(math.asin(c), 3.0 * math.pi / 4.0 - math.asin(c))
    if hi <= lo:
        return []
    return [(-hi, -lo), (lo, hi)]


def _s3_contains(z: np.ndarray) -> np.ndarray:
    return np.abs(np.angle(z)) >= math.pi / 4.0


def _s3_intervals(r: float) -> List[Interval]:
    return [(-math.pi, -math.pi / 4.0), (math.pi / 4.0, math.pi)]


def _annulus_intervals(r: float) -> List[Interval]:
    return [(-math.pi, math.pi)]


@dataclass(frozen=True)
class Region:
    """A piece of the annulus 1/2 <= |z| < 1 in the frame where the singular point sits at 1.

    ``intervals(r)`` lists the angles of the circle |z| = r that fall in the region.
    """

    name: str
    _contains: Callable[[np.ndarray], np.ndarray]
    intervals: Callable[[float], List[Interval]]
    with_core: bool = False

    def contains(self, z) -> np.ndarray:
        xy = as_xy(z)
        zc = xy[:, 0] + 1j * xy[:, 1]
        modulus = np.abs(zc)
        ring = (modulus >= INNER_RADIUS) & (modulus < 1.0)
        inside = ring & self._contains(zc)
        if self.with_core:
            inside |= modulus < INNER_RADIUS
        return inside


@dataclass(frozen=True)
class RegionSplit:
    S1: Region
    S2: Region
    S3: Region

    def members(self) -> Tuple[Region, Region, Region]:
        return self.S1, self.S2, self.S3

    def covering(self, z) -> np.ndarray:
        return self.S1.contains(z) | self.S2.contains(z) | self.S3.contains(z)


S1 = Region("S1", _s1_contains, _s1_intervals)
S2 = Region("S2", _s2_contains, _s2_intervals)
S3 = Region("S3", _s3_contains, _s3_intervals)
ANNULUS = Region("annulus", lambda z: np.ones(z.shape, dtype=bool), _annulus_intervals)
DISK = Region("disk", lambda z: np.ones(z.shape, dtype=bool), _annulus_intervals, with_core=True)

REGIONS: Dict[str, Region] = {region.name: region for region in (S1, S2, S3, ANNULUS, DISK)}


def region_split() -> RegionSplit:
    return RegionSplit(S1=S1, S2=S2, S3=S3)


def get_region(name: str) -> Region:
    try:
        return REGIONS[name]
    except KeyError as exc:
        raise ConfigError(f"unknown region {name!r}; expected one of {sorted(REGIONS)}") from exc
