from __future__ import annotations

import time
from dataclasses import replace

import pytest

import goldens
from conftest import run_sim_campaign
from kpiprobe.atcmd import AtCollector
from kpiprobe.clock import SimulatedClock, SystemClock
from kpiprobe.collector import (
    CollectorDescriptor,
    KpiSeries,
    append,
    read_series_csv,
    run_campaign,
    write_series_csv,
)
from kpiprobe.errors import ErrorKind, ParseFailed, ProtocolViolation
from kpiprobe.model import CPE_A, Method, Timestamp
from kpiprobe.tm import TmCollector


def _descriptor(period=0.25) -> CollectorDescriptor:
    return CollectorDescriptor(method=Method.XCAL_L3, device=CPE_A,
                               nominal_request_period=period)


def _stamped(monotonic: float):
    return replace(goldens.XCAL_SNAPSHOT,
                   timestamp=Timestamp(monotonic=monotonic, unix=monotonic))


class FakeCollector:
    """Instant-response collector yielding valid snapshots."""

    method = Method.XCAL_L3
    device = CPE_A
    endpoint = "fake"

    def __init__(self, clock, period=0.25, fail_with=None, poll_delay=0.0):
        self.clock = clock
        self.period = period
        self.fail_with = fail_with
        self.poll_delay = poll_delay

    def connect(self):
        pass

    def poll(self):
        if self.poll_delay:
            time.sleep(self.poll_delay)
        if self.fail_with is not None:
            raise self.fail_with
        return replace(goldens.XCAL_SNAPSHOT,
                       timestamp=Timestamp(self.clock.now(), self.clock.wall()))

    def close(self):
        pass


# --- append ---------------------------------------------------------------------

def test_append_to_empty_series():
    series = KpiSeries(_descriptor())
    append(series, _stamped(1.0))
    assert len(series) == 1


def test_append_out_of_order_rejected():
    series = KpiSeries(_descriptor())
    append(series, _stamped(5.0))
    with pytest.raises(ProtocolViolation):
        append(series, _stamped(4.0))
    with pytest.raises(ProtocolViolation):
        append(series, _stamped(5.0))  # strictly increasing


def test_120_sequential_appends_stay_ordered():
    series = KpiSeries(_descriptor())
    for k in range(120):
        append(series, _stamped(k * 0.25))
        assert len(series) == k + 1
    stamps = [s.timestamp.monotonic for s in series.samples]
    assert stamps == sorted(stamps)


# --- campaign scheduling ------------------------------------------------------------

def test_campaign_sample_counts_30s():
    clock = SimulatedClock()
    collectors = [FakeCollector(clock) for _ in range(3)]
    result = run_campaign(collectors, duration=30.0, clock=clock)
    for series in result.values():
        assert abs(len(series) - 120) <= 1
        stamps = [s.timestamp.monotonic for s in series.samples]
        assert stamps == sorted(stamps)


def test_campaign_boundary_single_sample():
    clock = SimulatedClock()
    result = run_campaign([FakeCollector(clock)], duration=0.25, clock=clock)
    (series,) = result.values()
    assert len(series) == 1


def test_campaign_requires_positive_duration():
    with pytest.raises(ValueError):
        run_campaign([], duration=0.0)


def test_campaign_closed_endpoint_yields_empty_series_with_errors():
    clock = SimulatedClock()
    dead_at = AtCollector("127.0.0.1", 1, device=CPE_A, clock=clock, timeout=0.3)
    dead_at.period = 0.25
    dead_tm = TmCollector("127.0.0.1", 1, device=CPE_A, clock=clock, timeout=0.3)
    dead_tm.period = 0.25
    result = run_campaign([dead_at, dead_tm], duration=1.0, clock=clock)
    for series in result.values():
        assert len(series) == 0
        assert series.error_count(ErrorKind.TRANSPORT_DOWN) >= 1


def test_failure_isolation():
    clock = SimulatedClock()
    healthy = [FakeCollector(clock) for _ in range(2)]
    broken = FakeCollector(clock, fail_with=ParseFailed("injected", raw=b"junk"))
    result = run_campaign(healthy + [broken], duration=30.0, clock=clock)
    for collector in healthy:
        assert abs(len(result[collector]) - 120) <= 1
    assert len(result[broken]) == 0
    assert result[broken].error_count(ErrorKind.PARSE_FAILED) == 120
    assert result[broken].errors[0].raw == b"junk"


def test_scheduler_jitter_real_clock():
    clock = SystemClock()
    collector = FakeCollector(clock, period=0.1)
    result = run_campaign([collector], duration=1.2, clock=clock)
    (series,) = result.values()
    stamps = [s.timestamp.monotonic for s in series.samples]
    intervals = [b - a for a, b in zip(stamps, stamps[1:])]
    assert len(intervals) >= 9
    for interval in intervals:
        assert 0.09 <= interval <= 0.11


def test_slow_poll_skips_ticks_with_note():
    clock = SystemClock()
    collector = FakeCollector(clock, period=0.1, poll_delay=0.25)
    result = run_campaign([collector], duration=1.0, clock=clock)
    (series,) = result.values()
    assert 3 <= len(series) <= 5  # each ~0.25 s poll spans two extra ticks
    skip_notes = [e for e in series.errors
                  if e.kind is ErrorKind.TIMEOUT and "skipped" in e.detail]
    assert skip_notes
    stamps = [s.timestamp.monotonic for s in series.samples]
    assert stamps == sorted(stamps)


def test_invalid_snapshot_logged_not_appended():
    class WrongColumn(FakeCollector):
        def poll(self):
            bad = replace(goldens.XCAL_SNAPSHOT,
                          radio=replace(goldens.XCAL_SNAPSHOT.radio,
                                        snr=goldens.mv(12.0, goldens.Unit.DB, 1.0)))
            return replace(bad, timestamp=Timestamp(self.clock.now(), self.clock.wall()))

    clock = SimulatedClock()
    result = run_campaign([WrongColumn(clock)], duration=1.0, clock=clock)
    (series,) = result.values()
    assert len(series) == 0
    assert series.error_count(ErrorKind.PARSE_FAILED) == 4


# --- CSV export ----------------------------------------------------------------------

def test_series_csv_round_trip(tmp_path):
    _, by_method = run_sim_campaign(device=CPE_A, noise=True, seed=77, duration=5.0)
    series = by_method[Method.AT_DEBUG]
    path = tmp_path / "at.csv"
    write_series_csv(series, path)

    text = path.read_text().splitlines()
    assert text[0].startswith("timestamp_iso,rat,mcc,mnc,nr_cell_id,tac,pci,band")
    assert text[0].endswith("method,device,ts_unix_ms")

    loaded = read_series_csv(path)
    assert loaded.method is Method.AT_DEBUG
    assert loaded.device == CPE_A
    assert len(loaded.rows) == len(series)
    for row, sample in zip(loaded.rows, series.samples):
        assert row["rsrp_dbm"] == sample.radio.rsrp.value
        assert row["ts_unix_ms"] == sample.timestamp.unix_ms
        assert row["rssi_branches"][:2] == [b.value for b in sample.radio.rssi_branches[:2]]
        assert "pci" not in row  # blank cell stays absent


def test_series_csv_absent_fields_are_empty_cells(tmp_path):
    _, by_method = run_sim_campaign(device=CPE_A, noise=False, seed=1, duration=1.0)
    path = tmp_path / "web.csv"
    write_series_csv(by_method[Method.WEB], path)
    header, first = path.read_text().splitlines()[:2]
    columns = header.split(",")
    cells = first.split(",")
    # WEB cpe-a exposes no TAC/SCS/SINR/duplex; those cells must be empty
    for column in ("tac", "scs_khz", "sinr_db", "duplex", "freq_range_type"):
        assert cells[columns.index(column)] == ""


def test_read_series_csv_rejects_non_series_file(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_series_csv(path)
