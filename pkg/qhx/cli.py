"""Command-line entry point: ``qhx <command> [--config run.json] [flags]``."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from qhx.core.config import get_settings
from qhx.core.errors import QhxError
from qhx.core.schemas import RunConfig, load_run_config
from qhx.counterexample.audit import audit_area_exponent, audit_frame, audit_pieces, audits_passed, largest_resolved
from qhx.counterexample.construction import Example41, Example42, build_example
from qhx.counterexample.demo import divergence_demo, trend_exponents
from qhx.counterexample.series import series_model, series_partial_sums
from qhx.geometry.domains import DomainSpec, IteratedLogCusp, Point2, PowerCusp
from qhx.geometry.partition import cusp_pieces
from qhx.harmonic.boundary_map import BoundaryMap, constant_map, identity_map, rotation_map
from qhx.harmonic.dirichlet import solve_harmonic_dirichlet
from qhx.harmonic.energy import field_frame, jacobian_audit, orlicz_energy, weighted_energy
from qhx.harmonic.gradient import gradient_norm
from qhx.metrics.growth import verify_generalized_growth, verify_s_growth
from qhx.metrics.quasihyperbolic import quasihyperbolic_distance
from qhx.orlicz.young import YoungPhi
from qhx.quadrature.classify import Verdict
from qhx.quadrature.dyadic import integrate_dyadic, thm31_condition_sup
from qhx.quadrature.integrands import Thm31Integrand, parse_integrand
from qhx.quadrature.oracle import bertrand_finite, oracle_finite
from qhx.utils.report import loglog_svg, write_csv, write_report

logger = logging.getLogger("qhx")
console = Console()

app = typer.Typer(help="Quasihyperbolic growth and Orlicz-Sobolev energy experiments.", no_args_is_help=True, add_completion=False)

DEFAULT_RES = {"growth": 0.02, "qh-dist": 0.01, "energy": 0.02, "counterexample": 0.0025}
SCAN_LAMBDAS = (-2.0, -1.5, -1.1, -1.0)
AREA_RTOL = 0.05

ConfigOpt = typer.Option(None, "--config", help="JSON run configuration; flags override it.")
OutOpt = typer.Option(None, "--out", help="Output directory.")
SeedOpt = typer.Option(None, "--seed")
SvgOpt = typer.Option(None, "--svg/--no-svg", help="Also write log-log SVG plots.")
ReportOpt = typer.Option(None, "--report", help="Write a run report (.md or .pdf).")
DomainOpt = typer.Option(None, "--domain", help='Domain JSON, e.g. \'{"variant":"power_cusp","s":0.5,"model":"model"}\'.')


def _setup_logging() -> None:
    logging.basicConfig(
        level=get_settings().log_level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
    )


def _domain_arg(text: Optional[str]):
    if text is None:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise typer.BadParameter(f"not valid JSON: {exc}", param_hint="--domain") from exc


def _point(values: Optional[List[float]]):
    if not values:
        return None
    if len(values) != 2:
        raise typer.BadParameter("points take exactly two coordinates")
    return tuple(values)


def _listed(values) -> Optional[list]:
    return list(values) if values else None


def _execute(command: str, config: Optional[Path], overrides: Dict[str, object], body: Callable[[RunConfig], bool]) -> None:
    """Validate, run and map the outcome onto the exit codes 0 (ok), 1 (failed check), 2 (usage), 3 (numerics)."""
    _setup_logging()
    try:
        cfg = load_run_config(command, config, overrides)
        ok = body(cfg)
    except ValidationError as exc:
        console.print(f"[red]invalid configuration[/red]\n{exc}")
        raise typer.Exit(code=2)
    except QhxError as exc:
        console.print(f"[red]{type(exc).__name__}[/red]: {exc}")
        raise typer.Exit(code=exc.exit_code)
    if not ok:
        console.print(f"[yellow]{command}: checks failed[/yellow]")
        raise typer.Exit(code=1)
    console.print(f"[green]{command}: ok[/green]")


def _show(title: str, frame: pd.DataFrame, max_rows: int = 30) -> None:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for row in frame.head(max_rows).itertuples(index=False):
        table.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))
    console.print(table)


def _finish(cfg: RunConfig, tables: Dict[str, pd.DataFrame], summary: str) -> None:
    if cfg.report is not None:
        params = cfg.model_dump(mode="json", exclude={"report", "out"})
        write_report(cfg.report, cfg.command, params, tables, summary)


def _boundary_map(cfg: RunConfig, d: DomainSpec) -> BoundaryMap:
    spec = cfg.boundary_map
    if spec.kind == "rotation":
        return rotation_map(spec.angle, d)
    if spec.kind == "constant":
        return constant_map(spec.angle, d)
    return identity_map(d)


def _res(cfg: RunConfig) -> float:
    return cfg.res if cfg.res is not None else DEFAULT_RES[cfg.command]


def _threshold(table: pd.DataFrame, column: str) -> Tuple[Optional[float], Optional[float]]:
    """Largest convergent λ and the first divergent λ above it."""
    ordered = table.sort_values("lam")
    below = ordered.loc[ordered[column] == Verdict.CONVERGENT.value, "lam"]
    last = float(below.max()) if len(below) else None
    above = ordered.loc[ordered[column] == Verdict.DIVERGENT.value, "lam"]
    if last is not None:
        above = above[above > last]
    first = float(above.min()) if len(above) else None
    return last, first


@app.command()
def growth(
    s: Optional[float] = typer.Option(None, help="Growth exponent in (0, 1)."),
    sigma: Optional[List[float]] = typer.Option(None, help="Iterated-log exponents; switches to the generalized bound."),
    n_samples: Optional[int] = typer.Option(None, "--n-samples"),
    res: Optional[float] = typer.Option(None),
    tol: Optional[float] = typer.Option(None),
    domain: Optional[str] = DomainOpt,
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Check the s-hyperbolic (or generalized) growth bound on sampled points."""

    def body(cfg: RunConfig) -> bool:
        d = cfg.resolved_domain()
        common = dict(n_samples=cfg.n_samples, res=_res(cfg), tol=cfg.tol, seed=cfg.seed, stencil=cfg.stencil)
        z0 = Point2(*cfg.z0) if cfg.z0 else None
        if cfg.sigma:
            result = verify_generalized_growth(d, z0, cfg.s, cfg.sigma, **common)
        else:
            result = verify_s_growth(d, z0, cfg.s, **common)
        frame = result.to_frame()
        write_csv(frame, cfg.out / "growth.csv")
        if cfg.svg:
            curves = {"h(z0,z)": (frame["d_boundary"], frame["qh_distance"]), "bound": (frame["d_boundary"], frame["bound"])}
            loglog_svg(curves, cfg.out / "growth.svg", "growth check", "d(z)", "distance")
        summary = pd.DataFrame([{"samples": len(frame), "violations": len(result.violations), "max_ratio": result.max_ratio}])
        _show("growth", summary)
        _finish(cfg, {"summary": summary, "samples": frame}, f"{len(result.violations)} violations")
        return result.passed

    overrides = dict(s=s, sigma=_listed(sigma), n_samples=n_samples, res=res, tol=tol, domain=_domain_arg(domain), out=out, seed=seed, svg=svg, report=report)
    _execute("growth", config, overrides, body)


@app.command("qh-dist")
def qh_dist(
    z0: Optional[List[float]] = typer.Option(None, "--z0", help="x y of the first point."),
    z1: Optional[List[float]] = typer.Option(None, "--z1", help="x y of the second point."),
    res: Optional[float] = typer.Option(None),
    domain: Optional[str] = DomainOpt,
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Discrete quasihyperbolic distance and geodesic between two points."""

    def body(cfg: RunConfig) -> bool:
        d = cfg.resolved_domain()
        result = quasihyperbolic_distance(d, Point2(*cfg.z0), Point2(*cfg.z1), _res(cfg), cfg.stencil)
        summary = pd.DataFrame(
            [{"x0": cfg.z0[0], "y0": cfg.z0[1], "x1": cfg.z1[0], "y1": cfg.z1[1], "res": result.resolution, "distance": result.distance}]
        )
        path = pd.DataFrame([{"x": p.x, "y": p.y} for p in result.path])
        write_csv(summary, cfg.out / "qh_dist.csv")
        write_csv(path, cfg.out / "qh_path.csv")
        _show("quasihyperbolic distance", summary)
        _finish(cfg, {"distance": summary}, f"h = {result.distance:.6g}")
        return True

    overrides = dict(z0=_point(z0), z1=_point(z1), res=res, domain=_domain_arg(domain), out=out, seed=seed, svg=svg, report=report)
    _execute("qh-dist", config, overrides, body)


@app.command()
def scan(
    kind: Optional[str] = typer.Option(None, help="F, G or Gsigma."),
    s: Optional[float] = typer.Option(None),
    lam: Optional[List[float]] = typer.Option(None, "--lam", help="λ values; repeat the flag."),
    sigma: Optional[List[float]] = typer.Option(None),
    depth: Optional[int] = typer.Option(None),
    region: Optional[str] = typer.Option(None),
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Dyadic integration and verdict per λ, checked against the radial oracle."""

    def body(cfg: RunConfig) -> bool:
        shift = cfg.sigma[0] if cfg.kind == "Gsigma" else 0.0
        lambdas = cfg.lam or [v - shift for v in SCAN_LAMBDAS]
        rows, shells, curves = [], [], {}
        for value in lambdas:
            spec = {"kind": cfg.kind, "s": cfg.s, "lam": value}
            if cfg.kind == "Gsigma":
                spec["sigma"] = shift
            integrand = parse_integrand(spec)
            result = integrate_dyadic(integrand, cfg.region, cfg.depth, cfg.angular_n)
            expected = Verdict.CONVERGENT if oracle_finite(integrand) else Verdict.DIVERGENT
            rows.append(
                {
                    "lam": value,
                    "verdict": result.verdict.value,
                    "oracle": expected.value,
                    "rule": result.assessment.rule,
                    "tail_ratio": result.tail_ratio,
                    "model_fit": result.model_fit if result.model_fit is not None else float("nan"),
                    "partial_sum": result.value,
                }
            )
            frame = result.to_frame()
            frame.insert(0, "lam", value)
            shells.append(frame)
            curves[f"lam={value:g}"] = (frame["m"], frame["shell_sum"])
        table = pd.DataFrame(rows)
        write_csv(table, cfg.out / "scan.csv")
        write_csv(pd.concat(shells, ignore_index=True), cfg.out / "scan_shells.csv")
        if cfg.svg:
            loglog_svg(curves, cfg.out / "scan.svg", f"{cfg.kind} shells", "m", "shell sum")
        _show(f"{cfg.kind} scan, s={cfg.s:g}", table)
        bounds = pd.DataFrame(
            [(name, *_threshold(table, name)) for name in ("verdict", "oracle")],
            columns=["source", "last_convergent", "first_divergent"],
        )
        write_csv(bounds, cfg.out / "scan_threshold.csv")
        _show("threshold", bounds)
        low, high = _threshold(table, "verdict")
        logger.info("%s threshold lies in (%s, %s]", cfg.kind, low, high)
        agree = bool((table["verdict"] == table["oracle"]).all())
        summary = f"threshold between λ={low} and λ={high}; " + ("verdicts match the oracle" if agree else "verdicts disagree with the oracle")
        _finish(cfg, {"verdicts": table, "threshold": bounds}, summary)
        return agree

    overrides = dict(kind=kind, s=s, lam=_listed(lam), sigma=_listed(sigma), depth=depth, region=region, out=out, seed=seed, svg=svg, report=report)
    _execute("scan", config, overrides, body)


@app.command()
def thm31(
    s: Optional[float] = typer.Option(None),
    lam: Optional[float] = typer.Option(None, help="λ of Φ(t) = t^{1+s} log^λ(e+t)."),
    sigma: Optional[float] = typer.Option(None, help="Log-log exponent of the koebe_loglog model."),
    gprime: Optional[str] = typer.Option(None, help="identity, koebe or koebe_loglog."),
    w_samples: Optional[int] = typer.Option(None, "--w-samples"),
    depth: Optional[int] = typer.Option(None),
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Supremum over boundary points of the conformal-derivative condition integral."""

    def body(cfg: RunConfig) -> bool:
        value = cfg.lam[0] if cfg.lam else -1.5
        integrand = Thm31Integrand(
            s=cfg.s,
            phi=YoungPhi(alpha=1.0 + cfg.s, lam=value),
            gprime=cfg.gprime,
            sigma=cfg.sigma[0] if cfg.sigma else 0.0,
        )
        result = thm31_condition_sup(integrand, cfg.w_samples, cfg.depth, cfg.angular_n)
        frame = pd.DataFrame({"w": result.w, "value": result.values, "verdict": [v.value for v in result.verdicts]})
        write_csv(frame, cfg.out / "thm31.csv")
        summary = pd.DataFrame([{"lam": value, "sup": result.value, "spread": result.spread, "divergent": result.divergent}])
        _show("condition integral", summary)
        _finish(cfg, {"summary": summary, "per_w": frame}, f"sup = {result.value:.6g}")
        finite = oracle_finite(integrand)
        return result.divergent != finite and (result.divergent or result.spread < 0.01)

    overrides = dict(s=s, lam=[lam] if lam is not None else None, sigma=[sigma] if sigma is not None else None, gprime=gprime, w_samples=w_samples, depth=depth, out=out, seed=seed, svg=svg, report=report)
    _execute("thm31", config, overrides, body)


@app.command()
def energy(
    s: Optional[float] = typer.Option(None),
    lam: Optional[float] = typer.Option(None, help="λ of the Orlicz function and the weight."),
    res: Optional[float] = typer.Option(None),
    K: Optional[int] = typer.Option(None, "--K", help="Pieces for per-piece sums on graph cusps."),
    scheme: Optional[str] = typer.Option(None),
    solver: Optional[str] = typer.Option(None),
    domain: Optional[str] = DomainOpt,
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Solve the Dirichlet problem for a boundary map and report its energies."""

    def body(cfg: RunConfig) -> bool:
        d = cfg.resolved_domain()
        bmap = _boundary_map(cfg, d)
        grid = solve_harmonic_dirichlet(d, bmap, _res(cfg), cfg.scheme, cfg.solver)
        grad = gradient_norm(grid)
        value = cfg.lam[0] if cfg.lam else 0.0
        partition = None
        if isinstance(d, IteratedLogCusp) or (isinstance(d, PowerCusp) and d.model == "graph"):
            partition = cusp_pieces(d, cfg.K)
        reports = [
            orlicz_energy(grad, YoungPhi(alpha=1.0 + cfg.s, lam=value), partition),
            weighted_energy(grad, cfg.s, value, partition),
        ]
        audit = jacobian_audit(grad)
        frame = pd.concat([r.to_frame() for r in reports], ignore_index=True)
        write_csv(frame, cfg.out / "energy.csv")
        write_csv(field_frame(grid, grad), cfg.out / "field.csv")
        summary = pd.DataFrame(
            [{"residual": grid.residual, "min_jacobian": audit.min_jacobian, "nonpositive": audit.nonpositive, "cells": audit.cells}]
        )
        _show("energies", frame)
        _show("Jacobian audit", summary)
        _finish(cfg, {"energies": frame, "jacobian": summary}, f"{audit.nonpositive} non-positive Jacobian cells")
        return audit.passed or not bmap.monotone

    overrides = dict(s=s, lam=[lam] if lam is not None else None, res=res, K=K, scheme=scheme, solver=solver, domain=_domain_arg(domain), out=out, seed=seed, svg=svg, report=report)
    _execute("energy", config, overrides, body)


@app.command()
def counterexample(
    example: Optional[str] = typer.Option(None, help="example41 or example42."),
    s: Optional[float] = typer.Option(None),
    sigma: Optional[List[float]] = typer.Option(None, help="Wall exponents of example42."),
    lam: Optional[List[float]] = typer.Option(None, "--lam", help="Critical exponents σ_i+λ_i to test; repeat the flag."),
    K: Optional[int] = typer.Option(None, "--K"),
    res: Optional[float] = typer.Option(None),
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Build the cusp counterexample, audit its pieces and check the divergence trend."""

    def body(cfg: RunConfig) -> bool:
        if cfg.example == "example42":
            variant = Example42(s=cfg.s, sigma=cfg.sigma or (1.0,))
        else:
            variant = Example41(s=cfg.s)
        construction = build_example(variant, cfg.K)
        wall = tuple(getattr(variant, "sigma", (0.0,)))
        grid = solve_harmonic_dirichlet(construction.domain, construction.boundary_map, _res(cfg), cfg.scheme, cfg.solver)
        grad = gradient_norm(grid)
        audits = audit_pieces(grid, construction.partition, construction.arcs, grad=grad)
        frame = audit_frame(audits)
        write_csv(frame, cfg.out / "audit.csv")

        exponents = cfg.lam or [-1.0, -1.5]
        lambdas = [tuple(mu - w for w in wall) for mu in exponents]
        demo = divergence_demo(audits, lambdas, construction.domain)
        trend = demo.to_frame()
        write_csv(trend, cfg.out / "demo.csv")

        ok = audits_passed(audits)
        if isinstance(variant, Example41):
            slope = audit_area_exponent(audits)
            target = -2.0 - 1.0 / cfg.s
            ok = ok and abs(slope - target) <= AREA_RTOL * abs(target)
            logger.info("area exponent %.4f against %.4f", slope, target)
        for lam_vec in lambdas:
            expected = Verdict.CONVERGENT if bertrand_finite(trend_exponents(construction.domain, lam_vec)) else Verdict.DIVERGENT
            ok = ok and all(demo.verdict(lam_vec, name) is expected for name in ("orlicz", "weighted"))
        if cfg.svg:
            ks = frame["k"]
            curves = {"flux": (ks, frame["flux"]), "eps_k*d_k": (ks, frame["eps_k*d_k"]), "area": (ks, frame["area"])}
            loglog_svg(curves, cfg.out / "audit.svg", f"{variant.variant} audits", "k", "value")
        _show(f"{variant.variant} audits (resolved up to k={largest_resolved(audits)})", frame)
        _show("divergence trend", trend)
        _finish(cfg, {"audits": frame, "trend": trend}, "all asserted checks hold" if ok else "some asserted checks fail")
        return ok

    overrides = dict(example=example, s=s, sigma=_listed(sigma), lam=_listed(lam), K=K, res=res, out=out, seed=seed, svg=svg, report=report)
    _execute("counterexample", config, overrides, body)


@app.command()
def series(
    model: Optional[str] = typer.Option(None, "--model", help="critical, control or example42."),
    K: Optional[int] = typer.Option(None, "--K"),
    sigma: Optional[List[float]] = typer.Option(None),
    lam: Optional[List[float]] = typer.Option(None, "--lam"),
    config: Optional[Path] = ConfigOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    svg: Optional[bool] = SvgOpt,
    report: Optional[Path] = ReportOpt,
):
    """Partial sums of the critical, control or iterated-log series."""

    def body(cfg: RunConfig) -> bool:
        sigma_vec = cfg.sigma or (1.0,)
        lam_vec = tuple(cfg.lam) if cfg.lam else tuple(-1.0 - v for v in sigma_vec)
        chosen = series_model(cfg.series_model, sigma_vec, lam_vec)
        result = series_partial_sums(chosen, cfg.series_K)
        frame = result.to_frame()
        write_csv(frame, cfg.out / "series.csv")
        if cfg.svg:
            loglog_svg({"S_K": (frame["K"], frame["S_K"])}, cfg.out / "series.svg", f"{chosen.name} series", "K", "S_K")
        _show(f"{chosen.name} series", frame)
        checks = result.checks(cfg.bracket_width, cfg.tail_tol)
        verdicts = pd.DataFrame({"check": list(checks), "passed": list(checks.values())})
        if checks:
            _show("checks", verdicts)
        summary = f"S_K = {result.total:.10g}, S_K - log3 K spread {result.bracket_width:.4g}"
        if result.tail_spread is not None:
            summary += f", tail-corrected spread {result.tail_spread:.3g}"
        _finish(cfg, {"partial sums": frame, "checks": verdicts}, summary)
        return all(checks.values())

    overrides = dict(series_model=model, series_K=K, sigma=_listed(sigma), lam=_listed(lam), out=out, seed=seed, svg=svg, report=report)
    _execute("series", config, overrides, body)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
