from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from kpiprobe import analysis
from kpiprobe.analysis import (
    GRAIN_LADDER,
    GrainEstimate,
    InsufficientData,
    MethodMetrics,
    estimate_grain,
    estimate_refresh_period,
    hold_interpolate,
    tracking_error,
)
from kpiprobe.model import CPE_A, Method, quantize


# --- refresh period ---------------------------------------------------------

def _held_series(refresh: float, sample_period: float, duration: float):
    """Construction oracle: a value that changes exactly every ``refresh``
    seconds, sampled every ``sample_period`` seconds."""
    times, values = [], []
    k = 0
    while k * sample_period < duration:
        t = k * sample_period
        times.append(t)
        values.append(math.floor(t / refresh))  # one new value per refresh
        k += 1
    return times, values


def test_refresh_one_second_value_changes():
    times, values = _held_series(refresh=1.0, sample_period=0.25, duration=30.0)
    assert estimate_refresh_period(times, values) == pytest.approx(1.0, abs=0.25)


def test_refresh_every_sample_changes():
    times, values = _held_series(refresh=0.25, sample_period=0.25, duration=30.0)
    assert estimate_refresh_period(times, values) == pytest.approx(0.25, abs=1e-9)


def test_refresh_constant_series_errors():
    times = [k * 0.25 for k in range(40)]
    with pytest.raises(InsufficientData, match="insufficient variation"):
        estimate_refresh_period(times, [5.0] * 40)


def test_refresh_needs_three_change_events():
    with pytest.raises(InsufficientData):
        estimate_refresh_period([0.0, 1.0, 2.0, 3.0], [1, 1, 2, 2])


# --- grain -------------------------------------------------------------------

def _oracle_grain(values) -> float | None:
    """Independent divisibility oracle in exact rational arithmetic."""
    for candidate in GRAIN_LADDER:
        step = Fraction(str(candidate))
        if all((Fraction(str(v)) / step).denominator == 1 for v in values):
            return candidate
    return None


@pytest.mark.parametrize("values,expected", [
    ([-79.0, -80.0, -78.0], 1.0),
    ([-78.02, -78.11, -79.37], 0.01),
    ([14.5, 14.0, 15.0], 0.5),
    ([-78.1, -78.3, -79.0], 0.1),
    ([12.35, 12.4, 12.45], 0.05),
])
def test_grain_examples_match_oracle(values, expected):
    assert _oracle_grain(values) == expected
    estimate = estimate_grain(values)
    assert estimate == GrainEstimate(grain=expected, exact=True)


def test_grain_ladder_round_trip():
    rng = random.Random(5)
    for grain in GRAIN_LADDER:
        values = [quantize(rng.uniform(-90, -70), grain).value for _ in range(60)]
        values.append(quantize(-78.0 + grain, grain).value)
        values.append(quantize(-78.0 + 3 * grain, grain).value)  # odd multiples
        if _oracle_grain(values) != grain:
            # the random draw happened to be expressible at a coarser grain
            values.append(round(-78.0 + grain, 10))
        assert estimate_grain(values).grain == _oracle_grain(values) == grain


def test_grain_no_candidate_fits_returns_smallest_with_flag():
    estimate = estimate_grain([0.003, 0.007, 1.0])
    assert estimate.grain == GRAIN_LADDER[-1]
    assert not estimate.exact


def test_grain_requires_two_distinct_values():
    with pytest.raises(InsufficientData):
        estimate_grain([-78.0, -78.0, -78.0])


# --- tracking ------------------------------------------------------------------

def _rich_truth(t: float) -> float:
    # multi-tone trace with structure at several time scales
    return -80.0 + 4.0 * math.sin(2 * math.pi * t / 13.0) + 1.5 * math.sin(
        2 * math.pi * t / 4.7
    )


def test_tracking_exact_series_has_zero_error():
    times = [k * 0.25 for k in range(120)]
    values = [_rich_truth(t) for t in times]
    result = tracking_error(times, values, _rich_truth, t0=0.0)
    assert result.rmse == pytest.approx(0.0, abs=1e-9)
    assert result.lag == 0.0


def test_tracking_recovers_constructed_delay():
    delay = 0.6
    times = [k * 0.25 for k in range(120)]
    values = [_rich_truth(t - delay) for t in times]
    result = tracking_error(times, values, _rich_truth, t0=0.0)
    assert result.lag == pytest.approx(delay, abs=0.05)
    assert result.rmse <= 0.05


def test_tracking_invariant_under_wall_clock_offset():
    times = [k * 0.25 for k in range(120)]
    values = [_rich_truth(t - 0.6) for t in times]
    base = tracking_error(times, values, _rich_truth)
    shifted = tracking_error([t + 986.5 for t in times], values, _rich_truth)
    assert shifted == base


def test_tracking_requires_four_samples():
    with pytest.raises(InsufficientData):
        tracking_error([0.0, 0.25, 0.5], [1.0, 2.0, 3.0], _rich_truth)


def test_hold_interpolate_steps():
    grid, held = hold_interpolate([0.0, 1.0, 2.0], [10.0, 20.0, 30.0], step=0.5)
    assert grid == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert held == [10.0, 10.0, 20.0, 20.0, 30.0]


def test_method_ranking_on_default_profiles(campaign_cpe_a):
    # value resolution: TM finest, dashboard middle, AT coarsest;
    # refresh cadence: AT faster than TM
    _, by_method = campaign_cpe_a

    def rsrp_values(method):
        return [s.radio.rsrp.value for s in by_method[method].samples]

    grain_xcal = estimate_grain(rsrp_values(Method.XCAL_L3)).grain
    grain_web = estimate_grain(rsrp_values(Method.WEB)).grain
    grain_at = estimate_grain(rsrp_values(Method.AT_DEBUG)).grain
    assert grain_xcal < grain_web < grain_at

    def refresh(method):
        series = by_method[method]
        times = [s.timestamp.unix for s in series.samples]
        return estimate_refresh_period(times, rsrp_values(method))

    assert refresh(Method.AT_DEBUG) < refresh(Method.XCAL_L3)


# --- report ------------------------------------------------------------------------

def _metrics(method, device=CPE_A, **kwargs) -> MethodMetrics:
    defaults = dict(sample_count=120, error_count=0, effective_refresh_period=0.25,
                    estimated_grain=1.0, rmse_vs_truth=0.28, lag_vs_truth=0.1)
    defaults.update(kwargs)
    return MethodMetrics(method=method, device=device, **defaults)


def test_report_three_method_rows(tmp_path):
    metrics = [
        _metrics(Method.XCAL_L3, effective_refresh_period=1.0, estimated_grain=0.01),
        _metrics(Method.WEB, effective_refresh_period=4.0, estimated_grain=0.1),
        _metrics(Method.AT_DEBUG),
    ]
    text = analysis.build_report(metrics, tmp_path)
    assert (tmp_path / "report.csv").exists()
    assert (tmp_path / "report.txt").exists()
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == ("method,device,samples,errors,refresh_period_s,"
                        "grain_rsrp,rmse_db,lag_s")
    assert len(lines) == 4
    # ordered by method, every metric column populated
    assert lines[1].startswith("WEB") and lines[2].startswith("AT_DEBUG")
    assert lines[3].startswith("XCAL_L3")
    assert "" not in lines[1].split(",")
    assert "WEB" in text


def test_report_empty_trace_row_blank_metrics(tmp_path):
    empty = MethodMetrics(method=Method.WEB, device=CPE_A, sample_count=0,
                          error_count=7)
    analysis.build_report([empty], tmp_path)
    row = (tmp_path / "report.csv").read_text().splitlines()[1]
    assert row == "WEB,cpe-a,0,7,,,,"


def test_report_rerun_is_byte_identical(tmp_path):
    metrics = [_metrics(Method.AT_DEBUG), _metrics(Method.WEB)]
    first = tmp_path / "a"
    second = tmp_path / "b"
    analysis.build_report(metrics, first)
    analysis.build_report(metrics, second)
    assert (first / "report.csv").read_bytes() == (second / "report.csv").read_bytes()
    assert (first / "report.txt").read_bytes() == (second / "report.txt").read_bytes()


def test_overlay_svg_written(tmp_path):
    traces = {
        "xcal": ([0.0, 1.0, 2.0], [-78.0, -79.0, -80.0]),
        "at": ([0.0, 1.0, 2.0], [-78.0, -78.0, -81.0]),
    }
    path = tmp_path / "traces.svg"
    analysis.write_overlay_svg(traces, path)
    body = path.read_text()
    assert body.startswith("<svg") and "polyline" in body
