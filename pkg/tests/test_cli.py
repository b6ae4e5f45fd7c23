import json

import pandas as pd
import pytest
from typer.testing import CliRunner

from qhx.cli import app

runner = CliRunner()

DISK = json.dumps({"variant": "unit_disk"})


def test_series_writes_a_reproducible_csv(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        result = runner.invoke(app, ["series", "--model", "control", "--K", "4096", "--out", str(out)])
        assert result.exit_code == 0, result.output
    assert (first / "series.csv").read_bytes() == (second / "series.csv").read_bytes()
    frame = pd.read_csv(first / "series.csv")
    assert frame["K"].iloc[-1] == 4096


def test_unknown_scan_kind_is_a_usage_error(tmp_path):
    result = runner.invoke(app, ["scan", "--kind", "X", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_growth_on_the_disk(tmp_path):
    args = ["growth", "--domain", DISK, "--s", "0.5", "--n-samples", "40", "--res", "0.05", "--out", str(tmp_path)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / "growth.csv")
    assert len(frame) == 40


def test_bad_domain_json(tmp_path):
    result = runner.invoke(app, ["growth", "--domain", "{oops", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_qh_dist(tmp_path):
    args = ["qh-dist", "--z0", "0", "--z0", "0", "--z1", "0.5", "--z1", "0", "--res", "0.02", "--out", str(tmp_path)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    summary = pd.read_csv(tmp_path / "qh_dist.csv")
    assert summary["distance"].iloc[0] == pytest.approx(0.693, rel=0.03)
    assert (tmp_path / "qh_path.csv").exists()


def test_qh_dist_needs_both_points(tmp_path):
    result = runner.invoke(app, ["qh-dist", "--z0", "0", "--z0", "0", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_config_file_is_merged_with_flags(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"series_model": "control", "series_K": 100}))
    result = runner.invoke(app, ["series", "--config", str(config), "--K", "200", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert pd.read_csv(tmp_path / "series.csv")["K"].iloc[-1] == 200


def test_markdown_report(tmp_path):
    report = tmp_path / "run.md"
    result = runner.invoke(app, ["series", "--model", "control", "--K", "1000", "--out", str(tmp_path), "--report", str(report)])
    assert result.exit_code == 0, result.output
    text = report.read_text(encoding="utf-8")
    assert text.startswith("# qhx series")
    assert "## partial sums" in text


def test_svg_plot(tmp_path):
    result = runner.invoke(app, ["series", "--model", "control", "--K", "1000", "--out", str(tmp_path), "--svg"])
    assert result.exit_code == 0, result.output
    assert "<svg" in (tmp_path / "series.svg").read_text()


@pytest.mark.slow
def test_model_cusp_fails_a_stronger_growth_exponent(tmp_path):
    cusp = json.dumps({"variant": "power_cusp", "s": 0.5, "model": "model"})
    result = runner.invoke(app, ["growth", "--domain", cusp, "--s", "0.75", "--n-samples", "300", "--out", str(tmp_path)])
    assert result.exit_code == 1


def test_critical_series_passes_its_bracket(tmp_path):
    result = runner.invoke(app, ["series", "--model", "critical", "--K", "1000", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "bracket" in result.output


@pytest.mark.parametrize(
    "settings",
    [
        {"series_model": "critical", "bracket_width": 1e-6},
        {"series_model": "control", "tail_tol": 1e-12},
    ],
)
def test_series_fails_when_a_check_fails(tmp_path, settings):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({**settings, "series_K": 1000}))
    result = runner.invoke(app, ["series", "--config", str(config), "--out", str(tmp_path)])
    assert result.exit_code == 1, result.output
    assert "checks failed" in result.output


def test_unknown_region_is_a_usage_error(tmp_path):
    result = runner.invoke(app, ["scan", "--region", "S4", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_scan_reports_the_threshold(tmp_path):
    args = ["scan", "--kind", "G", "--s", "0.5", "--lam=-1.5", "--lam=-1.0", "--out", str(tmp_path)]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    bounds = pd.read_csv(tmp_path / "scan_threshold.csv").set_index("source")
    assert bounds.loc["verdict", "last_convergent"] == -1.5
    assert bounds.loc["verdict", "first_divergent"] == -1.0
    assert list(bounds.loc["oracle"]) == list(bounds.loc["verdict"])
