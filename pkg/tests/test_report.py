import dataclasses
from pathlib import Path

import pytest

from npca_sim.report import (
    CSV_COLUMNS,
    Tolerances,
    emit_csv,
    read_csv,
    summary_text,
    validate,
)
from npca_sim.scenarios import PointResult, ScenarioResult, preset_two_bss, run_scenario

GOLDEN = Path(__file__).parent / "golden"


def point(**kw):
    base = dict(
        sweep_param="bss.n_stations",
        value=2.0,
        variant="legacy",
        policy="legacy",
        policy_label="legacy",
        bss_index=0,
        n_stations=2,
        throughput_mean=10.0,
        throughput_std=0.5,
        delay_mean_us=1000.0,
        delay_std_us=10.0,
        collision_rate=0.1,
        measured_idle_fraction=(1.0,),
        idle_fraction_samples=((1.0,),),
        throughput_samples=(10.0,),
        delay_samples_us=(1000.0,),
        analytic_s_single=10.0,
        analytic_s_leg=10.0,
        analytic_s_npca=10.0,
        analytic_delay_us=900.0,
        comparable=True,
        seeds=(1, 2),
        config_hash="0123456789abcdef",
    )
    base.update(kw)
    return PointResult(**base)


def result(*points):
    return ScenarioResult(spec=preset_two_bss(), points=tuple(points))


def test_header_matches_golden(tmp_path):
    path = emit_csv(result(point()), tmp_path / "x.csv")
    lines = Path(path).read_text().split("\n")
    assert lines[0] == (GOLDEN / "csv_header.txt").read_text().strip()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS


def test_one_point_two_lines(tmp_path):
    text = Path(emit_csv(result(point()), tmp_path / "x.csv")).read_text()
    assert text.endswith("\n")
    assert len(text.splitlines()) == 2
    assert text.splitlines()[1] == (
        "bss.n_stations,2.000000,legacy,10.000000,0.500000,1000.000000,10.000000,"
        "10.000000,10.000000,900.000000,1 2,0123456789abcdef"
    )


def test_round_trip(tmp_path):
    pts = [point(throughput_mean=12.3456789, delay_mean_us=float("nan")), point(value=4.0, throughput_std=1 / 3)]
    rows = read_csv(emit_csv(result(*pts), tmp_path / "x.csv"))
    assert rows[0]["throughput_mean"] == pytest.approx(12.3456789, abs=1e-6)
    assert rows[0]["delay_mean_us"] != rows[0]["delay_mean_us"]  # nan
    assert rows[1]["throughput_std"] == pytest.approx(1 / 3, abs=1e-6)
    assert rows[1]["seeds"] == [1, 2]


def test_empty_result_and_io_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_csv(result(), tmp_path / "x.csv")
    with pytest.raises(OSError, match="nodir"):
        emit_csv(result(point()), tmp_path / "nodir" / "x.csv")


def test_read_rejects_wrong_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_validate_exact_and_threshold():
    verdicts, status = validate(result(point()), Tolerances(throughput=1e-9))
    assert status == 0 and verdicts[0].passed and verdicts[0].ratio == 1.0
    verdicts, status = validate(result(point(throughput_mean=12.0)), Tolerances(0.10))
    assert status == 1
    assert verdicts[0].ratio == pytest.approx(1.2)
    assert "FAIL" in verdicts[0].line()


def test_validate_skips_incomparable_and_checks_dominance():
    leg = point(comparable=False)
    npca = point(variant="npca", policy="npca", policy_label="npca", throughput_mean=9.0, comparable=False)
    verdicts, status = validate(result(leg, npca))
    assert [v.check for v in verdicts] == ["dominance"]
    assert status == 1
    npca = dataclasses.replace(npca, throughput_mean=11.0)
    verdicts, status = validate(result(leg, npca))
    assert status == 0
    assert validate(result(leg, npca)) == (verdicts, status)


def test_summary_text():
    verdicts, status = validate(result(point()))
    text = summary_text(verdicts, status)
    assert text.splitlines()[-1] == "1/1 checks passed; status=PASS"


def test_two_bss_legacy_pipeline_passes():
    spec = preset_two_bss().replace(duration_us=3_000_000, seeds=(1, 2))
    verdicts, status = validate(run_scenario(spec), Tolerances(0.10))
    assert status == 0
    assert len(verdicts) == 2 * len(spec.sweep_values)
