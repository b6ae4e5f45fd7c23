"""Singular integrands on the unit disk, written as functions of δ = 1-|z| and ℓ = |w-z|."""

from __future__ import annotations

import math
from typing import Annotated, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from qhx.core.errors import ConfigError, DomainError
from qhx.geometry.domains import as_xy
from qhx.orlicz.young import YoungPhi, iterated_log, phi_eval

# smallest admissible 1-|z|; below this log log(1/δ) has lost its digits
DELTA_FLOOR = 1e-300


def log1(delta) -> np.ndarray:
    """log(e + 1/δ)."""
    return iterated_log(1, 1.0 / np.asarray(delta, dtype=float))


def log2(delta) -> np.ndarray:
    """log log(e_2 + 1/δ)."""
    return iterated_log(2, 1.0 / np.asarray(delta, dtype=float))


class _Base(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: float = Field(gt=0.0, lt=1.0)
    w: float = 0.0


class FIntegrand(_Base):
    """log^λ(e + δ L^{1/(1-s)}/ℓ) / (δ^{1-s} ℓ^{1+s} L), L = log(e + 1/δ)."""

    kind: Literal["F"] = "F"
    lam: float

    def value(self, delta, ell) -> np.ndarray:
        big_l = log1(delta)
        inner = delta * big_l ** (1.0 / (1.0 - self.s)) / ell
        return np.log(math.e + inner) ** self.lam / (delta ** (1.0 - self.s) * ell ** (1.0 + self.s) * big_l)

    def radial_exponents(self) -> Tuple[float, ...]:
        return (-1.0, -1.0, self.lam)


class GIntegrand(_Base):
    """Ψ_{0,(-1,λ)}(1/δ) / (ℓ^{1+s} δ^{1-s})."""

    kind: Literal["G"] = "G"
    lam: float

    def value(self, delta, ell) -> np.ndarray:
        return log2(delta) ** self.lam / (log1(delta) * ell ** (1.0 + self.s) * delta ** (1.0 - self.s))

    def radial_exponents(self) -> Tuple[float, ...]:
        return (-1.0, -1.0, self.lam)


class GSigmaIntegrand(_Base):
    """G with the log-log exponent shifted to σ + λ."""

    kind: Literal["Gsigma"] = "Gsigma"
    sigma: float
    lam: float

    def value(self, delta, ell) -> np.ndarray:
        return log2(delta) ** (self.sigma + self.lam) / (log1(delta) * ell ** (1.0 + self.s) * delta ** (1.0 - self.s))

    def radial_exponents(self) -> Tuple[float, ...]:
        return (-1.0, -1.0, self.sigma + self.lam)


class Thm31Integrand(_Base):
    """Φ(1/(|g'| ℓ)) |g'|² for a model of the conformal derivative."""

    kind: Literal["thm31"] = "thm31"
    phi: YoungPhi
    gprime: Literal["identity", "koebe", "koebe_loglog"] = "koebe"
    sigma: float = 0.0

    def gprime_value(self, delta) -> np.ndarray:
        delta = np.asarray(delta, dtype=float)
        if self.gprime == "identity":
            return np.ones_like(delta)
        koebe = 1.0 / (delta * log1(delta) ** (1.0 / (1.0 - self.s)))
        if self.gprime == "koebe":
            return koebe
        return koebe * log2(delta) ** (self.sigma / (1.0 - self.s))

    def value(self, delta, ell) -> np.ndarray:
        g = self.gprime_value(delta)
        return phi_eval(self.phi, 1.0 / (g * ell)) * g * g

    def radial_exponents(self) -> Tuple[float, ...]:
        lam, alpha = self.phi.lam, self.phi.alpha
        if self.gprime == "identity":
            # ∫ ℓ^{-α} log^λ near w; the power beats the measure when α < 2
            return (alpha - 3.0, lam)
        if self.gprime == "koebe":
            return (-1.0, -1.0, lam)
        return (-1.0, -1.0, self.sigma + lam)


Integrand = Annotated[
    Union[FIntegrand, GIntegrand, GSigmaIntegrand, Thm31Integrand],
    Field(discriminator="kind"),
]
_INTEGRAND_ADAPTER: TypeAdapter = TypeAdapter(Integrand)


def parse_integrand(data) -> Integrand:
    try:
        if isinstance(data, str):
            return _INTEGRAND_ADAPTER.validate_json(data)
        return _INTEGRAND_ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid integrand: {exc}") from exc


def log_log_exponent(i: Integrand) -> Optional[float]:
    """The exponent β of log log(1/δ) in the radial model; None when a power decides."""
    exps = i.radial_exponents()
    return exps[2] if len(exps) == 3 else None


def chord(delta, theta) -> np.ndarray:
    """|1 - r e^{iθ}| with r = 1 - δ, without cancellation near θ = 0."""
    delta = np.asarray(delta, dtype=float)
    r = 1.0 - delta
    return np.sqrt(delta * delta + 4.0 * r * np.sin(0.5 * np.asarray(theta, dtype=float)) ** 2)


def evaluate(i: Integrand, delta, ell) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < DELTA_FLOOR):
        raise DomainError("evaluation too close to the unit circle")
    with np.errstate(over="ignore"):
        return i.value(delta, ell)


def eval_integrand(i: Integrand, z) -> np.ndarray:
    """Pointwise value at interior points z; the singular point is w = e^{i i.w}."""
    xy = as_xy(z)
    zc = xy[:, 0] + 1j * xy[:, 1]
    modulus = np.abs(zc)
    if np.any(modulus >= 1.0):
        raise DomainError("integrands are defined inside the unit disk only")
    ell = np.abs(np.exp(1j * i.w) - zc)
    out = evaluate(i, 1.0 - modulus, ell)
    return out if len(zc) > 1 else float(out[0])
