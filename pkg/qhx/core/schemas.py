from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qhx.core.config import get_settings
from qhx.core.errors import ConfigError
from qhx.counterexample.series import BRACKET_WIDTH, TAIL_TOL
from qhx.geometry.domains import DomainSpec, PowerCusp, UnitDisk

Command = Literal["growth", "qh-dist", "scan", "thm31", "energy", "counterexample", "series"]


class MapSpec(BaseModel):
    """Boundary map choice: the identity parametrisation, a rotation or a constant."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["identity", "rotation", "constant"] = "identity"
    angle: float = 0.0


class RunConfig(BaseModel):
    """Everything one command needs; file values are overridden by command-line flags."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    domain: Optional[DomainSpec] = None
    boundary_map: MapSpec = Field(default_factory=MapSpec)

    s: float = Field(default=0.5, gt=0.0, lt=1.0)
    lam: List[float] = Field(default_factory=list)
    sigma: Tuple[float, ...] = ()
    K: int = Field(default=8, ge=3)
    res: Optional[float] = Field(default=None, gt=0.0)
    depth: int = Field(default=40, ge=12)
    angular_n: int = Field(default=8, ge=2)
    n_quad: int = Field(default=4096, ge=64)
    n_samples: int = Field(default=500, ge=1)
    stencil: Literal[8, 16] = 16
    tol: float = Field(default=0.05, ge=0.0)

    kind: Literal["F", "G", "Gsigma"] = "G"
    region: Literal["S1", "S2", "S3", "annulus", "disk"] = "annulus"
    gprime: Literal["identity", "koebe", "koebe_loglog"] = "koebe"
    w_samples: int = Field(default=8, ge=1)
    scheme: Literal["shortley_weller", "nearest"] = "shortley_weller"
    solver: Literal["direct", "iterative"] = "direct"
    example: Literal["example41", "example42"] = "example41"
    series_model: Literal["critical", "control", "example42"] = "critical"
    series_K: int = Field(default=10_000_000, ge=10)
    bracket_width: float = Field(default=BRACKET_WIDTH, gt=0.0)
    tail_tol: float = Field(default=TAIL_TOL, gt=0.0)

    z0: Optional[Tuple[float, float]] = None
    z1: Optional[Tuple[float, float]] = None

    out: Path = Field(default_factory=lambda: get_settings().output_dir)
    seed: int = 0
    svg: bool = False
    report: Optional[Path] = None

    @model_validator(mode="after")
    def _command_needs(self) -> "RunConfig":
        if self.command == "qh-dist" and (self.z0 is None or self.z1 is None):
            raise ValueError("qh-dist needs z0 and z1")
        if self.kind == "Gsigma" and self.command == "scan" and len(self.sigma) != 1:
            raise ValueError("the Gsigma scan needs exactly one sigma")
        return self

    def resolved_domain(self) -> DomainSpec:
        if self.domain is not None:
            return self.domain
        if self.command == "qh-dist" or self.command == "energy":
            return UnitDisk()
        return PowerCusp(s=self.s, model="model")


def load_run_config(command: str, path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Merge a JSON config file with command-line overrides; ``None`` overrides are ignored."""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    data["command"] = command
    return RunConfig.model_validate(data)
