from __future__ import annotations

import math
from typing import Callable, Union

import numpy as np
from scipy.special import ellipk

from qhx.core.errors import ConfigError, DomainError
from qhx.geometry.domains import Point2, as_xy
from qhx.harmonic.boundary_map import BoundaryMap

MIN_NODES = 64


def circle_nodes(n: int) -> np.ndarray:
    return np.exp(2j * math.pi * np.arange(n) / n)


def _interior(z) -> np.ndarray:
    xy = as_xy(z)
    zc = xy[:, 0] + 1j * xy[:, 1]
    if np.any(np.abs(zc) >= 1.0):
        raise DomainError("point must lie inside the unit disk")
    return zc


def poisson_integral(values, z) -> np.ndarray:
    """Trapezoid Poisson integral of samples taken at e^{2πij/n}."""
    values = np.asarray(values)
    n = values.shape[0]
    if n < MIN_NODES:
        raise ConfigError(f"need at least {MIN_NODES} boundary samples")
    zc = _interior(z)
    xi = circle_nodes(n)
    kernel = (1.0 - np.abs(zc[:, None]) ** 2) / np.abs(zc[:, None] - xi[None, :]) ** 2
    return kernel @ values / n


def poisson_extend(phi: Union[BoundaryMap, Callable], z, n_quad: int = 4096):
    """Harmonic extension of a circle map; a Point2 for one query, complex values otherwise.

    ``phi`` is a BoundaryMap on the circle (fraction f is angle 2πf) or any callable of the
    fraction returning boundary values.
    """
    if n_quad < MIN_NODES:
        raise ConfigError(f"n_quad must be at least {MIN_NODES}")
    values = np.asarray(phi(np.arange(n_quad) / n_quad))
    out = poisson_integral(values, z)
    if out.shape[0] == 1 and np.iscomplexobj(out):
        return Point2(float(out[0].real), float(out[0].imag))
    return out


def poisson_derivative_bound(psi_prime, z) -> np.ndarray:
    """∫_0^{2π} |ψ'(e^{it})| / |z - e^{it}| dt from equally spaced samples of |ψ'|."""
    samples = np.abs(np.asarray(psi_prime, dtype=float))
    n = samples.shape[0]
    if n < MIN_NODES:
        raise ConfigError(f"need at least {MIN_NODES} samples of |psi'|")
    zc = _interior(z)
    xi = circle_nodes(n)
    out = (1.0 / np.abs(zc[:, None] - xi[None, :])) @ samples * (2.0 * math.pi / n)
    return out if out.size > 1 else float(out[0])


def derivative_bound_oracle(r: float) -> float:
    """∫_0^{2π} dt / |r - e^{it}| = 4 K(4r/(1+r)²) / (1+r)."""
    if not 0.0 <= r < 1.0:
        raise DomainError("r must lie in [0, 1)")
    return float(4.0 * ellipk(4.0 * r / (1.0 + r) ** 2) / (1.0 + r))
