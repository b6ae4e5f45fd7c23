"""One-dimensional radial model of the shell sums.

Near the singular point the unit circle is flat, so the angular integral at depth δ reduces to
a half-line integral. Integrating that profile over a shell in the variable u = log log(1/δ)
gives the model shell values that the classifier compares against.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from qhx.core.errors import NumericalFailure
from qhx.quadrature.integrands import Integrand, evaluate

logger = logging.getLogger(__name__)

# split points of the half-line integral, in units of δ
_SPLITS = (0.0, 1.0, 64.0, math.inf)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def bertrand_finite(exponents: Sequence[float]) -> bool:
    """Finiteness of ∫^∞ t^{e_0} log^{e_1} t log log^{e_2} t ... dt.

    The first exponent different from -1 decides; a vector of all -1 diverges.
    """
    for e in exponents:
        if e != -1.0:
            return e < -1.0
    return False


def oracle_finite(i: Integrand) -> bool:
    return bertrand_finite(i.radial_exponents())


def radial_profile(i: Integrand, delta: float) -> float:
    """2δ ∫_0^∞ f(δ, δ√(1+u²)) du."""

    def inner(u: float) -> float:
        return float(evaluate(i, delta, delta * math.sqrt(1.0 + u * u)))

    total = 0.0
    for lo, hi in zip(_SPLITS[:-1], _SPLITS[1:]):
        part, _ = quad(inner, lo, hi, limit=200, epsrel=1e-10)
        total += part
    if not math.isfinite(total):
        raise NumericalFailure(f"radial profile overflowed at δ={delta:g}")
    return 2.0 * delta * total


def shell_model(i: Integrand, m: int) -> float:
    """Model sum over the shell 2^{-m-1} <= δ < 2^{-m}, integrated in u = log log(1/δ)."""
    u_lo = math.log(m * math.log(2.0))
    u_hi = math.log((m + 1) * math.log(2.0))
    half = 0.5 * (u_hi - u_lo)
    total = 0.0
    for x, weight in zip(_GL_NODES, _GL_WEIGHTS):
        u = u_lo + half * (x + 1.0)
        delta = math.exp(-math.exp(u))
        # dδ = δ e^u du
        total += weight * radial_profile(i, delta) * delta * math.exp(u)
    return half * total


def shell_models(i: Integrand, depth: int) -> np.ndarray:
    # the model only sees δ and ℓ, so every rotation of w shares one table
    return _cached_models(i.model_copy(update={"w": 0.0}), depth).copy()


@lru_cache(maxsize=64)
def _cached_models(i: Integrand, depth: int) -> np.ndarray:
    values = np.array([shell_model(i, m) for m in range(1, depth + 1)])
    logger.debug("radial model for %s: %d shells", i.kind, depth)
    return values
