"""Cusp domains with piecewise constant-speed boundary maps whose harmonic extensions have
divergent critical energies."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Annotated, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from qhx.core.errors import ConfigError, DomainError
from qhx.geometry.domains import IteratedLogCusp, PowerCusp, nearest_boundary
from qhx.geometry.partition import CuspDomain, CuspPartition, cusp_pieces, epsilon, level, wall_inverse
from qhx.harmonic.boundary_map import TWO_PI, BoundaryMap, from_knots
from qhx.orlicz.young import iterated_log

logger = logging.getLogger(__name__)

MAX_CHORD = 1.6


class Example41(BaseModel):
    """Power cusp y = |x|^s with gaps log^{-1/(1+s)} log(1+k)."""

    model_config = ConfigDict(frozen=True)

    variant: Literal["example41"] = "example41"
    s: float = Field(gt=0.0, lt=1.0)

    def domain(self) -> CuspDomain:
        return PowerCusp(s=self.s, model="graph")

    def raw_gap(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        return np.log(np.log(1.0 + k)) ** (-1.0 / (1.0 + self.s))


class Example42(BaseModel):
    """Iterated-log cusp y = Ψ_{-s,σ}(1/|x|) with gaps log_(n+1)^{-1/(1+s)}(e_{n+1} + k)."""

    model_config = ConfigDict(frozen=True)

    variant: Literal["example42"] = "example42"
    s: float = Field(gt=0.0, lt=1.0)
    sigma: Tuple[float, ...] = Field(min_length=1, max_length=2)

    def domain(self) -> CuspDomain:
        return IteratedLogCusp(s=self.s, sigma=self.sigma)

    def raw_gap(self, k) -> np.ndarray:
        return iterated_log(len(self.sigma) + 1, k) ** (-1.0 / (1.0 + self.s))


Example = Annotated[Union[Example41, Example42], Field(discriminator="variant")]
_EXAMPLE_ADAPTER: TypeAdapter = TypeAdapter(Example)


def parse_example(data) -> Example:
    try:
        if isinstance(data, str):
            return _EXAMPLE_ADAPTER.validate_json(data)
        return _EXAMPLE_ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid example: {exc}") from exc


@dataclass(frozen=True)
class TargetArcs:
    """Circle points a±_k = (sqrt(1 - c²d_k²/4), ±c d_k/2) for k = 2..K."""

    ks: np.ndarray
    raw_gaps: np.ndarray
    scale: float

    @property
    def gaps(self) -> np.ndarray:
        return self.scale * self.raw_gaps

    @property
    def angles(self) -> np.ndarray:
        return np.arcsin(0.5 * self.gaps)

    def gap(self, k: int) -> float:
        return float(self.gaps[int(np.flatnonzero(self.ks == k)[0])])

    def points(self) -> np.ndarray:
        half = 0.5 * self.gaps
        x = np.sqrt(1.0 - half * half)
        return np.stack([x + 1j * half, x - 1j * half], axis=1)


@dataclass
class Construction:
    example: Union[Example41, Example42]
    domain: CuspDomain
    boundary_map: BoundaryMap
    partition: CuspPartition
    arcs: TargetArcs

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([epsilon(k) for k in self.arcs.ks])


def target_arcs(example: Union[Example41, Example42], K: int, max_chord: float = MAX_CHORD) -> TargetArcs:
    if not 0.0 < max_chord < 2.0:
        raise ConfigError("max_chord must lie in (0, 2)")
    ks = np.arange(2, K + 1)
    raw = np.asarray(example.raw_gap(ks), dtype=float)
    if not np.all(np.isfinite(raw)) or np.any(np.diff(raw) >= 0):
        raise ConfigError("target gaps must be finite and strictly decreasing")
    # a constant factor keeps every chord inside the circle and changes no estimate
    scale = min(1.0, max_chord / float(raw[0]))
    return TargetArcs(ks=ks, raw_gaps=raw, scale=scale)


def build_example(example: Union[Example41, Example42], K: int, max_chord: float = MAX_CHORD) -> Construction:
    """Cusp domain, its pieces and the boundary map sending p±_k to a±_k at constant speed."""
    if K < 3:
        raise ConfigError("build_example needs K >= 3")
    domain = example.domain()
    partition = cusp_pieces(domain, K)
    arcs = target_arcs(example, K, max_chord)

    xs = np.array([wall_inverse(domain, level(int(k))) for k in arcs.ks])
    ys = np.array([level(int(k)) for k in arcs.ks])
    right = np.column_stack([xs, ys])
    left = np.column_stack([-xs, ys])
    _, f_right = nearest_boundary(domain, right)
    _, f_left = nearest_boundary(domain, left)
    if np.any(f_right <= 0) or np.any(f_left >= 1):
        raise DomainError("piece below resolution")

    # tip -> angle 0; right wall climbs to a+_2; the rest of the curve runs to a-_2; left wall back down
    fractions = np.concatenate([[0.0], f_right[::-1], f_left])
    angles = np.concatenate([[0.0], arcs.angles[::-1], TWO_PI - arcs.angles])
    bmap = from_knots(fractions, angles, source=domain, label=f"{example.variant}(s={example.s:g})")
    if not bmap.monotone:
        raise DomainError("boundary map is not monotone; the pieces are below resolution")
    logger.info("built %s with K=%d, chord scale %.4f", example.variant, K, arcs.scale)
    return Construction(example=example, domain=domain, boundary_map=bmap, partition=partition, arcs=arcs)


def gap_table(example: Union[Example41, Example42], K: int) -> dict:
    arcs = target_arcs(example, K)
    return {int(k): (float(raw), float(g)) for k, raw, g in zip(arcs.ks, arcs.raw_gaps, arcs.gaps)}


def flux_lower(construction: Construction, k: int) -> float:
    """ε_k times the realized chord length."""
    return epsilon(k) * construction.arcs.gap(k)


__all__ = [
    "Example41",
    "Example42",
    "Example",
    "TargetArcs",
    "Construction",
    "build_example",
    "parse_example",
    "target_arcs",
    "flux_lower",
    "gap_table",
    "MAX_CHORD",
]
