"""Collector contract, fixed-rate polling scheduler, and series recording.

Scheduling is fixed-rate (tick k fires at start + k * period), not
fixed-delay: a slow backend cannot stretch the request grid, which is what
lets response cadence be observed as a property of the backend rather than
of the requester. A poll that outlives following ticks causes those ticks
to be skipped (serial links cannot interleave) and noted as timeouts.
"""

from __future__ import annotations

import csv
import heapq
import json
import logging
import math
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .clock import SimulatedClock, SystemClock
from .errors import CollectError, CollectorError, ErrorKind, ParseFailed, ProtocolViolation
from .model import (
    CANONICAL_COLUMNS,
    CoverageMatrix,
    KpiSnapshot,
    Method,
    DEFAULT_COVERAGE,
    to_canonical_json,
    validate_snapshot,
)

log = logging.getLogger("kpiprobe.collector")

DEFAULT_REQUEST_PERIOD = 0.25


@dataclass(frozen=True)
class CollectorDescriptor:
    method: Method
    device: str
    nominal_request_period: float = DEFAULT_REQUEST_PERIOD
    endpoint: str = ""

    def __post_init__(self):
        if not (self.nominal_request_period > 0):
            raise ValueError("nominal_request_period must be positive")

    @property
    def name(self) -> str:
        return f"{self.method.value.lower()}-{self.device}"


class KpiSeries:
    """Append-only ordered sequence of snapshots from one collector run."""

    def __init__(self, descriptor: CollectorDescriptor):
        self.descriptor = descriptor
        self.samples: list[KpiSnapshot] = []
        self.errors: list[CollectError] = []
        self.start_monotonic: float | None = None
        self.start_wall: float | None = None
        self.stop_wall: float | None = None
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.samples)

    def append(self, snapshot: KpiSnapshot) -> "KpiSeries":
        with self._lock:
            if self.samples and snapshot.timestamp.monotonic <= self.samples[-1].timestamp.monotonic:
                raise ProtocolViolation(
                    f"out-of-order sample at {snapshot.timestamp.monotonic}; "
                    f"series already at {self.samples[-1].timestamp.monotonic}"
                )
            self.samples.append(snapshot)
        return self

    def record_error(self, error: CollectError) -> None:
        with self._lock:
            self.errors.append(error)

    def error_count(self, kind: ErrorKind | None = None) -> int:
        if kind is None:
            return len(self.errors)
        return sum(1 for err in self.errors if err.kind == kind)


def append(series: KpiSeries, snapshot: KpiSnapshot) -> KpiSeries:
    return series.append(snapshot)


def _poll_once(collector, series: KpiSeries, clock, matrix: CoverageMatrix) -> None:
    try:
        snapshot = collector.poll()
        result = _validate(snapshot, matrix)
        if result is not None:
            raise result
        series.append(snapshot)
    except CollectorError as exc:
        series.record_error(CollectError.from_exception(exc, timestamp=clock.now()))


def _validate(snapshot: KpiSnapshot, matrix: CoverageMatrix) -> CollectorError | None:
    result = validate_snapshot(snapshot, matrix)
    if not result.ok:
        return ParseFailed(
            "snapshot failed validation: " + "; ".join(result.violations),
            raw=snapshot.raw,
        )
    return None


def _run_collector(collector, series: KpiSeries, clock, start: float, duration: float,
                   matrix: CoverageMatrix) -> None:
    period = series.descriptor.nominal_request_period
    k = 0
    while True:
        target = start + k * period
        if target - start >= duration:
            break
        now = clock.now()
        if now < target:
            clock.sleep(target - now)
        _poll_once(collector, series, clock, matrix)
        arrival = clock.now()
        k += 1
        # Skip grid points the previous poll ran past; overlapping in-flight
        # requests to one endpoint are forbidden.
        next_free = math.ceil((arrival - start) / period - 1e-9)
        if next_free > k:
            series.record_error(CollectError(
                kind=ErrorKind.TIMEOUT,
                detail=f"skipped {next_free - k} tick(s): previous poll still in flight",
                timestamp=arrival,
            ))
            k = next_free


def run_campaign(collectors: list, duration: float, clock=None,
                 matrix: CoverageMatrix = DEFAULT_COVERAGE) -> dict:
    """Poll every collector at its nominal period for the full duration.

    Per-poll failures are logged on the collector's series and never abort
    the campaign; a collector whose endpoint is down simply contributes an
    empty series with errors attached. Under a simulated clock the campaign
    runs as a deterministic single-threaded event loop; under the system
    clock each collector runs as its own periodic task.
    """
    if not (duration > 0):
        raise ValueError("campaign duration must be positive")
    clock = clock or SystemClock()

    runs: list[tuple] = []  # (collector, series, connected)
    for collector in collectors:
        descriptor = CollectorDescriptor(
            method=getattr(collector, "method", Method.WEB),
            device=collector.device,
            nominal_request_period=getattr(collector, "period", DEFAULT_REQUEST_PERIOD),
            endpoint=getattr(collector, "endpoint", ""),
        )
        series = KpiSeries(descriptor)
        series.start_monotonic = clock.now()
        series.start_wall = clock.wall()
        connected = False
        try:
            collector.connect()
            connected = True
        except CollectorError as exc:
            series.record_error(CollectError.from_exception(exc, timestamp=clock.now()))
            log.warning("collector %s failed to connect: %s", descriptor.name, exc)
        runs.append((collector, series, connected))

    start = clock.now()
    if isinstance(clock, SimulatedClock):
        _run_simulated(runs, duration, clock, start, matrix)
    else:
        _run_threaded(runs, duration, clock, start, matrix)

    results = {}
    for collector, series, connected in runs:
        # Refresh the descriptor: AT collectors only know their dialect
        # (and therefore their method) after connecting.
        series.descriptor = CollectorDescriptor(
            method=getattr(collector, "method", series.descriptor.method),
            device=series.descriptor.device,
            nominal_request_period=series.descriptor.nominal_request_period,
            endpoint=series.descriptor.endpoint,
        )
        series.stop_wall = clock.wall()
        try:
            collector.close()
        except Exception:
            log.debug("collector %s close failed", series.descriptor.name, exc_info=True)
        results[collector] = series
    return results


def _run_simulated(runs, duration, clock: SimulatedClock, start, matrix) -> None:
    heap: list[tuple[float, int]] = []
    for index, (collector, series, connected) in enumerate(runs):
        if connected:
            heapq.heappush(heap, (0.0, index))
    while heap:
        offset, index = heapq.heappop(heap)
        collector, series, _ = runs[index]
        clock.advance_to(start + offset)
        _poll_once(collector, series, clock, matrix)
        next_offset = offset + series.descriptor.nominal_request_period
        if next_offset < duration - 1e-9:
            heapq.heappush(heap, (next_offset, index))
    clock.advance_to(start + duration)


def _run_threaded(runs, duration, clock, start, matrix) -> None:
    threads = []
    for collector, series, connected in runs:
        if not connected:
            continue
        thread = threading.Thread(
            target=_run_collector,
            args=(collector, series, clock, start, duration, matrix),
            daemon=True,
        )
        thread.start()
        threads.append(thread)
    for thread in threads:
        thread.join()


# -- CSV export ------------------------------------------------------------

CSV_COLUMNS = ["timestamp_iso"] + CANONICAL_COLUMNS


def _iso8601(unix_seconds: float) -> str:
    stamp = datetime.fromtimestamp(unix_seconds, tz=timezone.utc)
    return stamp.isoformat(timespec="milliseconds")


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        return json.dumps(value, separators=(", ", ": "))
    return str(value)


def write_series_csv(series: KpiSeries, path) -> None:
    """One CSV per collector: canonical JSON field names plus an ISO-8601
    timestamp column; absent fields become empty cells."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for snapshot in series.samples:
            flat = to_canonical_json(snapshot)
            row = [_iso8601(snapshot.timestamp.unix)]
            row += [_cell_text(flat.get(column)) for column in CANONICAL_COLUMNS]
            writer.writerow(row)


@dataclass
class LoadedSeries:
    """A series read back from its CSV, as the analysis stage sees it."""

    method: Method
    device: str
    times: list[float] = field(default_factory=list)  # unix seconds
    rows: list[dict] = field(default_factory=list)

    def values(self, column: str) -> list:
        return [row.get(column) for row in self.rows]

    @property
    def name(self) -> str:
        return f"{self.method.value.lower()}-{self.device}"


_INT_COLUMNS = {"nr_cell_id", "tac", "pci", "band", "arfcn", "ts_unix_ms"}
_FLOAT_COLUMNS = {"bandwidth_mhz", "scs_khz", "rsrp_dbm", "rsrq_db", "snr_db", "sinr_db"}


def read_series_csv(path) -> LoadedSeries:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "ts_unix_ms" not in reader.fieldnames:
            raise ValueError(f"{path}: not a series CSV (missing header)")
        series: LoadedSeries | None = None
        for record in reader:
            row: dict = {}
            for column, text in record.items():
                if text == "" or text is None:
                    continue
                if column == "rssi_branches":
                    row[column] = json.loads(text)
                elif column in _INT_COLUMNS:
                    row[column] = int(text)
                elif column in _FLOAT_COLUMNS:
                    row[column] = float(text)
                else:
                    row[column] = text
            if series is None:
                series = LoadedSeries(method=Method(row["method"]), device=row["device"])
            series.times.append(row["ts_unix_ms"] / 1000.0)
            series.rows.append(row)
    if series is None:
        raise ValueError(f"{path}: series CSV contains no samples")
    return series
