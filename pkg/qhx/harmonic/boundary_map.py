from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from qhx.core.errors import ConfigError
from qhx.geometry.domains import DomainSpec, UnitDisk

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BoundaryMap:
    """Piecewise constant-speed map from boundary arclength fractions to angles on the unit circle.

    Knots are (fraction, angle) pairs with fractions increasing in [0, 1) and angles unwrapped;
    the map closes periodically with ``winding`` full turns.
    """

    fractions: np.ndarray
    angles: np.ndarray
    winding: int = 1
    source: Optional[DomainSpec] = None
    label: str = ""

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=float)
        a = np.asarray(self.angles, dtype=float)
        if f.ndim != 1 or f.shape != a.shape or f.size < 1:
            raise ConfigError("boundary map needs matching 1-d knot arrays")
        if f[0] < 0.0 or f[-1] >= 1.0 or np.any(np.diff(f) <= 0):
            raise ConfigError("knot fractions must increase strictly inside [0, 1)")
        object.__setattr__(self, "fractions", f)
        object.__setattr__(self, "angles", a)

    @property
    def monotone(self) -> bool:
        """Strictly increasing angles with exactly one full turn, i.e. a homeomorphism."""
        if self.winding != 1:
            return False
        closed = np.append(self.angles, self.angles[0] + TWO_PI)
        return bool(np.all(np.diff(closed) > 0))

    def _knots(self):
        turn = TWO_PI * self.winding
        f = np.concatenate([[self.fractions[-1] - 1.0], self.fractions, [self.fractions[0] + 1.0]])
        a = np.concatenate([[self.angles[-1] - turn], self.angles, [self.angles[0] + turn]])
        return f, a

    def angle(self, fraction) -> np.ndarray:
        f, a = self._knots()
        return np.interp(np.mod(np.asarray(fraction, dtype=float), 1.0), f, a)

    def __call__(self, fraction) -> np.ndarray:
        """Target points e^{i angle} as complex numbers."""
        return np.exp(1j * self.angle(fraction))

    def speed(self) -> np.ndarray:
        """Angle per unit fraction on each knot interval, closure interval last."""
        f, a = self._knots()
        return np.diff(a[1:]) / np.diff(f[1:])


def from_knots(fractions: Sequence[float], angles: Sequence[float], source: Optional[DomainSpec] = None, label: str = "") -> BoundaryMap:
    return BoundaryMap(np.asarray(fractions, dtype=float), np.asarray(angles, dtype=float), 1, source, label)


def identity_map(d: Optional[DomainSpec] = None) -> BoundaryMap:
    """Fraction f goes to angle 2πf; the identity on the unit circle."""
    f = np.array([0.0, 0.25, 0.5, 0.75])
    return BoundaryMap(f, TWO_PI * f, 1, d or UnitDisk(), "identity")


def rotation_map(theta: float, d: Optional[DomainSpec] = None) -> BoundaryMap:
    f = np.array([0.0, 0.25, 0.5, 0.75])
    return BoundaryMap(f, TWO_PI * f + theta, 1, d or UnitDisk(), f"rotation({theta:g})")


def constant_map(angle: float, d: Optional[DomainSpec] = None) -> BoundaryMap:
    return BoundaryMap(np.array([0.0]), np.array([angle]), 0, d or UnitDisk(), f"constant({angle:g})")
