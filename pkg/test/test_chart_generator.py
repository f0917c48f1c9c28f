import xml.etree.ElementTree as ET

import pytest

from src.tools.chart_generator import ChartGenerator, emit_chart

SWEEP = [i * 1e5 for i in range(1, 11)]


def test_scenario_a_response_chart_has_four_series(report_factory):
    report = report_factory("A", ["FCFS", "HOL"], SWEEP)
    series = ChartGenerator().series(report, "W")
    assert list(series) == ["FCFS VT", "FCFS FF", "HOL VT", "HOL FF"]
    assert series["HOL VT"]["x"] == SWEEP


def test_scenario_d_loss_chart_has_four_series(report_factory):
    report = report_factory("D", ["SEC=OFF", "SEC=ON"], SWEEP)
    assert len(ChartGenerator().series(report, "PL")) == 4


def test_total_series_on_request(report_factory):
    report = report_factory("D", ["SEC=OFF", "SEC=ON"], SWEEP)
    assert len(ChartGenerator(include_total=True).series(report, "W")) == 6
    assert "SEC=ON total" in ChartGenerator().series(report, "UTIL")


def test_points_follow_the_sweep_order(report_factory):
    report = report_factory("C", ["c=1"], [5e5, 1e5, 3e5])
    s = ChartGenerator().series(report, "MQL")["c=1 VT"]
    assert s["x"] == [1e5, 3e5, 5e5]
    assert all(lo <= m <= hi for lo, m, hi in zip(s["lo"], s["mean"], s["hi"]))


def test_unknown_metric(report_factory):
    report = report_factory("A", ["FCFS"], SWEEP)
    with pytest.raises(ValueError, match="unknown metric"):
        ChartGenerator().series(report, "JITTER")


def test_svg_is_well_formed_and_labelled(tmp_path, report_factory):
    report = report_factory("A", ["FCFS", "HOL"], SWEEP)
    path = emit_chart(report, "W", tmp_path / "charts" / "a_w.svg")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    text = path.read_text(encoding="utf-8")
    for label in ("FCFS VT", "HOL FF", "Mean response time", "packets/s"):
        assert label in text


def test_svg_output_is_reproducible(tmp_path, report_factory):
    report = report_factory("B", ["SCV=5", "SCV=10"], SWEEP)
    a = emit_chart(report, "MQL", tmp_path / "1.svg").read_bytes()
    b = emit_chart(report, "MQL", tmp_path / "2.svg").read_bytes()
    assert a == b


def test_default_output_name(tmp_path, report_factory):
    report = report_factory("D", ["SEC=OFF", "SEC=ON"], SWEEP)
    path = ChartGenerator(output_dir=str(tmp_path)).emit_chart(report, "UTIL")
    assert path == tmp_path / "scenario_D_UTIL.svg"
    assert path.exists()
