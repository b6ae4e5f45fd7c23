import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qhx.core.errors import ConfigError, DomainError, NumericalFailure
from qhx.orlicz.young import YoungPhi
from qhx.quadrature.classify import Verdict, assess, classify, template_match, tracking_slope
from qhx.quadrature.dyadic import integrate_dyadic, scan, thm31_condition_sup
from qhx.quadrature.integrands import FIntegrand, GIntegrand, GSigmaIntegrand, Thm31Integrand, eval_integrand, parse_integrand
from qhx.quadrature.oracle import bertrand_finite, oracle_finite
from qhx.quadrature.regions import get_region, region_split


@pytest.mark.parametrize(
    "exponents, finite",
    [
        ((-2.0,), True),
        ((-1.0,), False),
        ((-1.0, -1.0), False),
        ((-1.0, -1.5), True),
        ((-1.0, -1.0, -1.0), False),
        ((-1.0, -1.0, -1.1), True),
        ((-1.0, -0.5, -5.0), False),
        ((-0.5, -9.0), False),
    ],
)
def test_bertrand_rule(exponents, finite):
    assert bertrand_finite(exponents) is finite


@pytest.mark.parametrize("lam, finite", [(-2.0, True), (-1.5, True), (-1.1, True), (-1.0, False), (0.0, False)])
def test_oracle_for_g(lam, finite):
    assert oracle_finite(GIntegrand(s=0.5, lam=lam)) is finite


def test_oracle_shifts_with_sigma():
    assert oracle_finite(GSigmaIntegrand(s=0.5, sigma=1.0, lam=-2.1))
    assert not oracle_finite(GSigmaIntegrand(s=0.5, sigma=1.0, lam=-2.0))


def test_parse_integrand_by_kind():
    i = parse_integrand({"kind": "Gsigma", "s": 0.5, "sigma": 2.0, "lam": -3.0})
    assert isinstance(i, GSigmaIntegrand)
    with pytest.raises(ConfigError):
        parse_integrand({"kind": "H", "s": 0.5})


def test_integrand_values_at_a_point():
    i = GIntegrand(s=0.5, lam=-1.0)
    z = (0.5, 0.0)
    delta, ell = 0.5, 0.5
    log1 = math.log(math.e + 1.0 / delta)
    log2 = math.log(math.log(math.exp(math.e) + 1.0 / delta))
    expected = log2**-1.0 / (log1 * ell**1.5 * delta**0.5)
    assert eval_integrand(i, z) == pytest.approx(expected, rel=1e-12)


def test_integrands_live_inside_the_disk():
    with pytest.raises(DomainError):
        eval_integrand(GIntegrand(s=0.5, lam=-1.0), (1.0, 0.0))


@given(
    r=st.floats(min_value=0.5, max_value=0.999999),
    t=st.floats(min_value=-math.pi, max_value=math.pi),
)
def test_regions_cover_the_annulus(r, t):
    z = np.array([[r * math.cos(t), r * math.sin(t)]])
    assert region_split().covering(z)[0]


def test_region_membership_examples():
    split = region_split()
    near_one = np.array([[0.99, 0.0]])
    assert split.S1.contains(near_one)[0]
    assert not split.S2.contains(near_one)[0]
    assert split.S3.contains(np.array([[-0.9, 0.0]]))[0]
    assert not split.S1.contains(np.array([[0.2, 0.0]]))[0]


@pytest.mark.parametrize("name", ["S1", "S2", "S3"])
@pytest.mark.parametrize("r", [0.6, 0.9, 0.99])
def test_region_intervals_match_membership(name, r):
    region = get_region(name)
    theta = np.linspace(-math.pi, math.pi, 4001)[:-1]
    intervals = region.intervals(r)
    by_interval = np.zeros(theta.shape, dtype=bool)
    near_edge = np.zeros(theta.shape, dtype=bool)
    for lo, hi in intervals:
        by_interval |= (theta >= lo) & (theta <= hi)
        near_edge |= (np.abs(theta - lo) < 1e-6) | (np.abs(theta - hi) < 1e-6)
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    by_predicate = region.contains(pts)
    np.testing.assert_array_equal(by_interval[~near_edge], by_predicate[~near_edge])


def test_unknown_region():
    with pytest.raises(ConfigError):
        get_region("S4")


def test_geometric_sums_converge():
    sums = 0.5 ** np.arange(1, 21)
    result = assess(sums)
    assert result.verdict is Verdict.CONVERGENT
    assert result.rule == "geometric tail"


def test_harmonic_sums_match_a_divergent_template():
    m = np.arange(1, 41, dtype=float)
    result = assess(1.0 / m)
    assert result.verdict is Verdict.DIVERGENT
    assert result.template == "1/m"


def test_model_tracking_decides():
    m = np.arange(1, 31, dtype=float)
    model = 1.0 / ((m + 2) * np.log(m + 2) ** 2)
    assert classify(1.3 * model, model, model_finite=True) is Verdict.CONVERGENT
    assert classify(1.3 * model, model, model_finite=False) is Verdict.DIVERGENT


def test_too_few_shells():
    with pytest.raises(ConfigError):
        classify(np.ones(5))


def test_negative_shells_are_rejected():
    sums = np.ones(20)
    sums[3] = -1.0
    with pytest.raises(ConfigError):
        classify(sums)


def test_tracking_slope_of_a_power():
    model = np.geomspace(1.0, 1e-6, 12)
    assert tracking_slope(model**2, model) == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        tracking_slope(model[:2], model[:2])
    with pytest.raises(ConfigError):
        tracking_slope(model, model[:-1])


def test_template_needs_indices_beyond_e():
    assert template_match(np.ones(6), np.arange(1, 7)) is None


@pytest.mark.parametrize("lam, verdict", [(-2.0, "CONVERGENT"), (-1.5, "CONVERGENT"), (-1.1, "CONVERGENT"), (-1.0, "DIVERGENT")])
@pytest.mark.parametrize("s", [pytest.param(0.25, marks=pytest.mark.slow), 0.5, pytest.param(0.75, marks=pytest.mark.slow)])
def test_g_scan(s, lam, verdict):
    report = integrate_dyadic(GIntegrand(s=s, lam=lam), "annulus", depth=40)
    assert report.verdict.value == verdict
    assert report.model_fit == pytest.approx(1.0, abs=0.15)


def test_g_sigma_threshold_moves_by_sigma():
    reports = scan(lambda lam: GSigmaIntegrand(s=0.5, sigma=1.0, lam=lam), [-3.0, -2.5, -2.1, -2.0])
    assert [r.verdict for r in reports] == [Verdict.CONVERGENT] * 3 + [Verdict.DIVERGENT]


@pytest.mark.parametrize("sigma", [-1.0, 0.0, 1.0])
@pytest.mark.parametrize("offset", [-0.25, 0.0, 0.25])
def test_g_sigma_scan_agrees_with_the_oracle(sigma, offset):
    i = GSigmaIntegrand(s=0.5, sigma=sigma, lam=-1.0 - sigma + offset)
    report = integrate_dyadic(i, "annulus", depth=40)
    assert (report.verdict is Verdict.CONVERGENT) is oracle_finite(i)
    assert report.verdict is not Verdict.INCONCLUSIVE


def test_annulus_value_is_bounded_by_the_three_regions():
    i = GIntegrand(s=0.5, lam=-2.0)
    whole = integrate_dyadic(i, "annulus", depth=24).value
    pieces = sum(integrate_dyadic(i, name, depth=24).value for name in ("S1", "S2", "S3"))
    assert whole <= pieces * (1.0 + 1e-9)
    assert whole >= max(integrate_dyadic(i, name, depth=24).value for name in ("S1", "S2", "S3")) * (1.0 - 1e-9)


@pytest.mark.parametrize("lam, finite", [(-2.0, True), (-1.5, True), (-1.1, True), (-1.0, False)])
@pytest.mark.parametrize("s", [pytest.param(0.25, marks=pytest.mark.slow), 0.5, pytest.param(0.75, marks=pytest.mark.slow)])
def test_f_scan(s, lam, finite):
    report = integrate_dyadic(FIntegrand(s=s, lam=lam), "annulus", depth=40)
    assert (report.verdict is Verdict.CONVERGENT) is finite


def test_shells_are_positive_and_partial_sums_increase():
    report = integrate_dyadic(GIntegrand(s=0.5, lam=-2.0), "S1", depth=20)
    frame = report.to_frame()
    assert list(frame.columns) == ["m", "shell_sum", "partial_sum", "model"]
    assert (frame["shell_sum"] > 0).all()
    assert frame["partial_sum"].is_monotonic_increasing


def test_depth_limits():
    with pytest.raises(NumericalFailure):
        integrate_dyadic(GIntegrand(s=0.5, lam=-2.0), depth=60)
    with pytest.raises(ConfigError):
        integrate_dyadic(GIntegrand(s=0.5, lam=-2.0), depth=8)


def test_condition_integral_is_finite_and_rotation_invariant():
    i = Thm31Integrand(s=0.5, phi=YoungPhi(alpha=1.5, lam=-1.5), gprime="koebe")
    report = thm31_condition_sup(i, w_samples=4, depth=32)
    assert not report.divergent
    assert report.spread < 0.01
    assert math.isfinite(report.value)


def test_condition_integral_diverges_without_log_decay():
    i = Thm31Integrand(s=0.5, phi=YoungPhi(alpha=1.5, lam=0.0), gprime="koebe")
    report = thm31_condition_sup(i, w_samples=2, depth=32)
    assert report.divergent
    assert report.value == math.inf


def test_condition_integral_for_the_identity_map():
    i = Thm31Integrand(s=0.5, phi=YoungPhi(alpha=1.5, lam=-1.5), gprime="identity")
    report = thm31_condition_sup(i, w_samples=3, depth=32)
    assert not report.divergent
    assert report.spread < 0.01


def test_condition_integral_needs_a_thm31_integrand():
    with pytest.raises(ConfigError):
        thm31_condition_sup(GIntegrand(s=0.5, lam=-2.0))
