import math

import numpy as np
import pytest

from qhx.core.errors import ConfigError
from qhx.counterexample.series import default_checkpoints, series_model, series_partial_sums


def test_series_terms():
    critical = series_model("critical")
    assert float(critical.term(3)) == pytest.approx(1 / (3 * math.log(3) * math.log(math.log(3))))
    assert not critical.finite
    assert series_model("control").finite


def test_iterated_series_follows_the_bertrand_rule():
    assert not series_model("example42", (1.0,), (-2.0,)).finite
    assert series_model("example42", (1.0,), (-2.5,)).finite
    with pytest.raises(ConfigError):
        series_model("example42", (1.0, 2.0), (-2.0,))
    with pytest.raises(ConfigError):
        series_model("harmonic")


def test_default_checkpoints():
    np.testing.assert_array_equal(default_checkpoints(80), [10, 20, 40, 80])


def test_partial_sums_need_enough_terms():
    with pytest.raises(ConfigError):
        series_partial_sums(series_model("control"), 8)
    with pytest.raises(ConfigError):
        series_partial_sums(series_model("control"), 100, checkpoints=[5])


def test_control_series_settles():
    report = series_partial_sums(series_model("control"), 2**16)
    late = report.limits[report.checkpoints >= 1000]
    assert np.ptp(late) < 1e-3
    assert np.all(np.diff(report.partial_sums) > 0)


def test_critical_series_doubles_more_slowly_than_the_control():
    K = 2**16
    critical = series_partial_sums(series_model("critical"), K)
    control = series_partial_sums(series_model("control"), K)
    assert critical.limits is None
    at = np.flatnonzero(critical.checkpoints == 2**15)[0]
    assert critical.doubling_ratios[at] > control.doubling_ratios[at]
    drift = critical.partial_sums - critical.companion
    assert np.ptp(drift[critical.checkpoints >= 1000]) < 0.5


def test_frame_columns():
    frame = series_partial_sums(series_model("control"), 640).to_frame()
    assert list(frame.columns) == ["K", "S_K", "doubling_ratio", "log3_K", "S_K_minus_log3_K", "tail_corrected"]
    assert list(frame["K"]) == [10, 20, 40, 80, 160, 320, 640]


@pytest.mark.slow
def test_critical_series_keeps_doubling():
    report = series_partial_sums(series_model("critical"), 2**23)
    late = report.checkpoints >= 2**16
    ratios = report.doubling_ratios[late]
    ratios = ratios[np.isfinite(ratios)]
    assert ratios.size >= 5
    assert np.all(ratios > 0.9)
    drift = report.partial_sums - report.companion
    assert np.ptp(drift[report.checkpoints >= 1000]) < 0.5


def test_checks_follow_the_model():
    critical = series_partial_sums(series_model("critical"), 1000)
    assert critical.checks() == {"bracket": True}
    assert critical.checks(bracket_width=1e-6) == {"bracket": False}
    control = series_partial_sums(series_model("control"), 1000)
    assert control.checks() == {"tail": True}
    assert control.checks(tail_tol=1e-12) == {"tail": False}
    divergent = series_partial_sums(series_model("example42", (1.0,), (-2.0,)), 1000)
    assert divergent.limits is None
    assert divergent.checks() == {}


@pytest.mark.slow
@pytest.mark.parametrize("name", ["critical", "control"])
def test_ten_million_terms(name):
    report = series_partial_sums(series_model(name), 10**7)
    assert report.K == 10**7
    assert all(report.checks().values())
    if name == "critical":
        assert report.bracket_width < 0.5
    else:
        assert report.tail_spread < 1e-3
