import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qhx.core.errors import ConfigError
from qhx.orlicz.young import (
    IteratedPsiParams,
    YoungPhi,
    delta2_constant,
    is_young,
    iterated_exp,
    iterated_log,
    parse_preset,
    psi_asymptotic_inverse,
    psi_eval,
    psi_inverse,
)


def test_iterated_logs_start_at_one():
    for i in (1, 2, 3):
        assert float(iterated_log(i, 0.0)) == pytest.approx(1.0, rel=1e-12)
    assert iterated_exp(2) == pytest.approx(math.exp(math.e))


def test_psi_matches_closed_form():
    psi = IteratedPsiParams(a=1.5, sigma=(-1.0, 2.0))
    t = np.array([0.5, 3.0, 40.0])
    expected = t**1.5 / np.log(math.e + t) * np.log(np.log(math.exp(math.e) + t)) ** 2
    np.testing.assert_allclose(psi(t), expected, rtol=1e-12)


def test_psi_at_zero():
    assert float(psi_eval(IteratedPsiParams(a=1.5, sigma=(3.0,)), 0.0)) == 0.0
    assert float(psi_eval(IteratedPsiParams(a=0.0, sigma=(2.0,)), 0.0)) == pytest.approx(1.0)


def test_negative_arguments_are_rejected():
    with pytest.raises(ConfigError):
        psi_eval(IteratedPsiParams(a=1.0, sigma=(0.0,)), -1.0)


@pytest.mark.parametrize("lam", [-2.0, -1.0, 0.0, 1.0])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_power_log_functions_are_young(s, lam):
    report = is_young(YoungPhi(alpha=1 + s, lam=lam))
    assert report.passed
    assert report.increasing
    assert report.convex_from < 1e4


def test_linear_function_is_not_young():
    report = is_young(IteratedPsiParams(a=1.0, sigma=(0.0,)))
    assert not report.passed
    assert not report.vanishes_at_zero


def test_young_check_keeps_the_sampled_ratio_test():
    report = is_young(YoungPhi(alpha=1.5, lam=-1.5))
    assert report.witnesses["sampled_vanishes"] == 1.0
    assert report.witnesses["sampled_superlinear"] == 1.0
    slow = is_young(IteratedPsiParams(a=1.0, sigma=(1.0,)))
    assert slow.superlinear_at_infinity
    assert slow.witnesses["sampled_superlinear"] == 0.0
    assert not slow.vanishes_at_zero


def test_callable_young_check():
    assert is_young(lambda t: t**2).passed
    assert not is_young(lambda t: np.sqrt(t)).passed


def test_doubling_constant_of_a_power():
    assert delta2_constant(YoungPhi(alpha=1.5, lam=0.0), t_max=1e6) == pytest.approx(2**1.5, rel=1e-9)


def test_doubling_constant_grows_with_positive_log_power():
    plain = delta2_constant(YoungPhi(alpha=1.5, lam=0.0), t_max=1e6)
    logged = delta2_constant(YoungPhi(alpha=1.5, lam=2.0), t_max=1e6)
    assert logged > plain


@given(y=st.floats(min_value=1e-8, max_value=1e12))
def test_inverse_round_trip(y):
    psi = IteratedPsiParams(a=1.5, sigma=(-1.0,))
    t = psi_inverse(psi, y)
    assert float(psi(t)) == pytest.approx(y, rel=1e-9)


def test_inverse_of_zero_and_errors():
    psi = IteratedPsiParams(a=1.5, sigma=(-1.0,))
    assert psi_inverse(psi, 0.0) == 0.0
    with pytest.raises(ConfigError):
        psi_inverse(psi, -1.0)
    with pytest.raises(ConfigError):
        psi_inverse(IteratedPsiParams(a=0.0, sigma=(1.0,)), 2.0)


def test_asymptotic_inverse_tracks_the_inverse():
    psi = IteratedPsiParams(a=1.5, sigma=(-1.0,))
    approx = psi_asymptotic_inverse(psi)
    assert approx.a == pytest.approx(2 / 3)
    assert approx.sigma == pytest.approx((2 / 3,))
    ratios = [psi_inverse(psi, y) / float(approx(y)) for y in (1e20, 1e60, 1e150)]
    # the ratio tends to a constant, slowly
    assert abs(ratios[2] - ratios[1]) < abs(ratios[1] - ratios[0])


def test_presets():
    thm1 = parse_preset("thm1(0.5,-1)")
    assert thm1.phi == YoungPhi(alpha=1.5, lam=-1.0)
    cor = parse_preset("cor35(0.5,(1,2),(-2,-1))")
    assert cor.sigma == (1.0, 2.0)
    assert cor.phi == IteratedPsiParams(a=1.5, sigma=(-2.0, -1.0))
    for bad in ("thm2(0.5,1)", "cor35(0.5,(1),(1,2))", "thm1(0.5)"):
        with pytest.raises(ConfigError):
            parse_preset(bad)
