import math

import numpy as np
import pytest

from qhx.core.errors import ConfigError
from qhx.counterexample.audit import (
    AUDIT_COLUMNS,
    audit_area_exponent,
    audit_frame,
    audit_pieces,
    audits_passed,
    critical_phi,
    largest_resolved,
    resolved_window,
    series_term,
)
from qhx.counterexample.construction import (
    MAX_CHORD,
    Example41,
    Example42,
    build_example,
    flux_lower,
    gap_table,
    parse_example,
    target_arcs,
)
from qhx.counterexample.demo import TREND_BAND, divergence_demo, trend_exponents, trend_model
from qhx.geometry.domains import IteratedLogCusp, PowerCusp, nearest_boundary
from qhx.geometry.partition import level, wall_inverse
from qhx.harmonic.dirichlet import solve_harmonic_dirichlet
from qhx.harmonic.gradient import gradient_norm
from qhx.orlicz.young import IteratedPsiParams
from qhx.quadrature.classify import Verdict


@pytest.fixture(scope="module")
def coarse_example41():
    construction = build_example(Example41(s=0.5), 6)
    grid = solve_harmonic_dirichlet(construction.domain, construction.boundary_map, res=0.01)
    grad = gradient_norm(grid)
    return construction, grid, grad


def test_first_gap_of_the_power_cusp():
    raw = float(Example41(s=0.5).raw_gap(2))
    assert raw == pytest.approx(math.log(math.log(3.0)) ** (-2.0 / 3.0), rel=1e-12)
    assert raw == pytest.approx(4.8356, abs=1e-3)


def test_gaps_are_scaled_into_the_circle():
    arcs = target_arcs(Example41(s=0.5), 8)
    assert arcs.gaps[0] == pytest.approx(MAX_CHORD)
    assert np.all(np.diff(arcs.gaps) < 0)
    assert np.all(np.diff(arcs.angles) < 0)
    pts = arcs.points()
    np.testing.assert_allclose(np.abs(pts), 1.0)
    np.testing.assert_allclose(np.abs(pts[:, 0] - pts[:, 1]), arcs.gaps)


def test_small_gaps_are_left_alone():
    arcs = target_arcs(Example42(s=0.5, sigma=(1.0,)), 6)
    assert arcs.scale == 1.0
    table = gap_table(Example42(s=0.5, sigma=(1.0,)), 6)
    raw, realized = table[2]
    assert raw == realized


def test_parse_example():
    ex = parse_example({"variant": "example42", "s": 0.25, "sigma": [1.0, 2.0]})
    assert isinstance(ex, Example42)
    assert isinstance(ex.domain(), IteratedLogCusp)
    with pytest.raises(ConfigError):
        parse_example({"variant": "example43", "s": 0.5})
    with pytest.raises(ConfigError):
        parse_example({"variant": "example42", "s": 0.5, "sigma": []})


def test_construction_needs_three_pieces():
    with pytest.raises(ConfigError):
        build_example(Example41(s=0.5), 2)


@pytest.mark.parametrize("example", [Example41(s=0.5), Example42(s=0.5, sigma=(1.0,))])
def test_boundary_map_hits_the_target_arcs(example):
    construction = build_example(example, 6)
    bmap = construction.boundary_map
    assert bmap.monotone
    d = construction.domain
    ks = construction.arcs.ks
    xs = np.array([wall_inverse(d, level(int(k))) for k in ks])
    ys = np.array([level(int(k)) for k in ks])
    _, right = nearest_boundary(d, np.column_stack([xs, ys]))
    _, left = nearest_boundary(d, np.column_stack([-xs, ys]))
    np.testing.assert_allclose(bmap.angle(right), construction.arcs.angles, atol=1e-12)
    np.testing.assert_allclose(bmap.angle(left), 2 * math.pi - construction.arcs.angles, atol=1e-12)
    assert float(bmap.angle(0.0)) == 0.0


def test_flux_lower_bound_and_epsilons():
    construction = build_example(Example41(s=0.5), 5)
    np.testing.assert_allclose(construction.epsilons, [1 / 4, 1 / 9, 1 / 16, 1 / 25])
    assert flux_lower(construction, 3) == pytest.approx(construction.arcs.gap(3) / 9)


def test_critical_functions():
    power = build_example(Example41(s=0.5), 4)
    assert critical_phi(power) == IteratedPsiParams(a=1.5, sigma=(-1.0,))
    iterated = build_example(Example42(s=0.5, sigma=(1.0, 2.0)), 4)
    assert critical_phi(iterated) == IteratedPsiParams(a=1.5, sigma=(-2.0, -3.0))


def test_series_terms():
    d = PowerCusp(s=0.5)
    assert math.isnan(float(series_term(d, 2, (-1.0,))))
    assert float(series_term(d, 10, (-1.0,))) == pytest.approx(1 / (10 * math.log(10) * math.log(math.log(10))))
    with pytest.raises(ConfigError):
        series_term(IteratedLogCusp(s=0.5, sigma=(1.0,)), 5, (-1.0, -1.0))


def test_trend_models():
    d = PowerCusp(s=0.5)
    assert trend_exponents(d, (-1.0,)) == (-1.0, -1.0, -1.0)
    assert trend_exponents(IteratedLogCusp(s=0.5, sigma=(1.0,)), (-2.5,)) == (-1.0, -1.5, -1.0)
    k = np.array([5.0, 50.0])
    np.testing.assert_allclose(trend_model(d, (0.0,), k), 1.0 / (k * np.log(np.log(1.0 + k))))


def test_coarse_audits(coarse_example41):
    construction, grid, grad = coarse_example41
    audits = audit_pieces(grid, construction.partition, construction.arcs, grad=grad)
    assert [a.k for a in audits] == [2, 3, 4, 5, 6]
    assert largest_resolved(audits) == 5
    assert not audits[-1].resolved
    assert not audits[-1].checks
    for audit in resolved_window(audits):
        assert audit.cells > 0
        assert audit.flux > 0
        assert 0.0 < audit.area <= 1.3 * audit.area_exact
        if audit.asserted:
            assert audit.checks["holder"]
            assert audit.checks.get("jensen", True)
    frame = audit_frame(audits)
    assert list(frame.columns) == AUDIT_COLUMNS
    assert len(frame) == 5


def test_audits_reject_a_wrong_power(coarse_example41):
    construction, grid, grad = coarse_example41
    with pytest.raises(ConfigError):
        audit_pieces(grid, construction.partition, construction.arcs, phi=IteratedPsiParams(a=2.0, sigma=(-1.0,)), grad=grad)


def test_coarse_trend_report(coarse_example41):
    construction, grid, grad = coarse_example41
    audits = audit_pieces(grid, construction.partition, construction.arcs, grad=grad)
    demo = divergence_demo(audits, [-1.0, -1.5], construction.domain)
    assert len(demo.rows) == 4
    assert list(demo.ks) == [2.0, 3.0, 4.0, 5.0]
    frame = demo.to_frame()
    assert set(frame["functional"]) == {"orlicz", "weighted"}
    assert list(frame.columns) == ["lambda", "functional", "slope", "slope_gap", "tracks", "verdict", "running_sum"]
    np.testing.assert_allclose(frame["slope_gap"], np.abs(frame["slope"] - 1.0))
    assert (frame["tracks"] == (frame["verdict"] != "INCONCLUSIVE")).all()
    with pytest.raises(KeyError):
        demo.verdict(-3.0)


def test_trend_needs_three_resolved_pieces():
    construction = build_example(Example41(s=0.5), 4)
    grid = solve_harmonic_dirichlet(construction.domain, construction.boundary_map, res=0.03)
    audits = audit_pieces(grid, construction.partition, construction.arcs)
    assert largest_resolved(audits) == 2
    with pytest.raises(ConfigError):
        divergence_demo(audits, [-1.0], construction.domain)


def test_iterated_log_cusp_is_unresolved_on_a_coarse_grid():
    construction = build_example(Example42(s=0.5, sigma=(1.0,)), 6)
    grid = solve_harmonic_dirichlet(construction.domain, construction.boundary_map, res=0.01)
    audits = audit_pieces(grid, construction.partition, construction.arcs)
    assert [a.k for a in audits] == [2, 3, 4, 5, 6]
    assert largest_resolved(audits) <= 2
    assert not any(a.asserted for a in audits)
    with pytest.raises(ConfigError):
        divergence_demo(audits, [-2.0], construction.domain)


def test_iterated_log_cusp_trend_is_never_convergent_at_the_critical_lambda():
    construction = build_example(Example42(s=0.75, sigma=(1.0,)), 6)
    grid = solve_harmonic_dirichlet(construction.domain, construction.boundary_map, res=0.0075)
    audits = audit_pieces(grid, construction.partition, construction.arcs)
    assert largest_resolved(audits) >= 4
    for audit in resolved_window(audits):
        if audit.asserted:
            assert audit.checks["holder"]
    demo = divergence_demo(audits, [(-2.0,)], construction.domain)
    assert trend_exponents(construction.domain, (-2.0,)) == (-1.0, -1.0, -1.0)
    assert len(demo.rows) == 2
    for row in demo.rows:
        tracks = abs(row.slope - 1.0) <= TREND_BAND
        assert row.verdict is (Verdict.DIVERGENT if tracks else Verdict.INCONCLUSIVE)
        assert np.all(np.diff(row.running) >= 0)


@pytest.mark.slow
def test_power_cusp_counterexample_end_to_end():
    construction = build_example(Example41(s=0.5), 8)
    grid = solve_harmonic_dirichlet(construction.domain, construction.boundary_map, res=0.0025)
    audits = audit_pieces(grid, construction.partition, construction.arcs)
    assert largest_resolved(audits) == 8
    assert audits_passed(audits)
    for audit in resolved_window(audits):
        if audit.asserted:
            assert audit.flux >= 0.5 * audit.flux_lower
    assert audit_area_exponent(audits) == pytest.approx(-4.0, rel=0.05)

    demo = divergence_demo(audits, [-1.0, -1.5], construction.domain)
    for functional in ("orlicz", "weighted"):
        assert demo.verdict(-1.0, functional) is Verdict.DIVERGENT
        assert demo.verdict(-1.5, functional) is Verdict.CONVERGENT
