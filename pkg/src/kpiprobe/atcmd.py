"""AT-command KPI extraction over a line-oriented transport.

The two CPEs each answer exactly one of the query commands, so the collector
probes both once and caches the dialect that answered. Responses are
``KEY:VALUE`` lines terminated by ``OK`` (or ``ERROR`` for a rejected
command); the full grammar lives in docs/at-grammar.md.
"""

from __future__ import annotations

import enum
import socket
import threading

from . import wire
from .clock import SystemClock
from .errors import (
    CollectTimeout,
    DialectUnsupported,
    ParseFailed,
    ProtocolViolation,
    TransportDown,
)
from .model import (
    CellIdentity,
    KpiSnapshot,
    Method,
    RadioMetrics,
    Timestamp,
    Unit,
    normalize_rat,
)

CRLF = b"\r\n"


class AtDialect(enum.Enum):
    DEBUG = "AT^DEBUG?"
    SGCELLINFOEX = "AT+SGCELLINFOEX?"

    @property
    def command(self) -> str:
        return self.value

    @property
    def method(self) -> Method:
        return Method.AT_DEBUG if self is AtDialect.DEBUG else Method.AT_SGCELLINFOEX


class AtTransport:
    """Line-oriented exchange over TCP standing in for a serial link.

    A serial link cannot interleave, so at most one command may be in
    flight; a concurrent send is rejected locally.
    """

    def __init__(self, host: str, port: int, timeout: float = 2.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._buffer = b""
        self._busy = threading.Lock()

    def connect(self) -> None:
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as exc:
            raise TransportDown(f"AT endpoint {self.host}:{self.port} unreachable: {exc}") from exc

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def _drain(self) -> None:
        # Discard stale bytes (e.g. a response that arrived after its probe
        # already timed out) so they cannot be misread as the next reply.
        assert self._sock is not None
        self._buffer = b""
        self._sock.settimeout(0)
        try:
            while self._sock.recv(4096):
                pass
        except (BlockingIOError, OSError):
            pass

    def _read_line(self, timeout: float) -> str:
        assert self._sock is not None
        self._sock.settimeout(timeout)
        while CRLF not in self._buffer:
            try:
                chunk = self._sock.recv(4096)
            except socket.timeout as exc:
                raise CollectTimeout(
                    f"no response line within {timeout} s", raw=self._buffer or None
                ) from exc
            except OSError as exc:
                raise TransportDown(f"AT link failed: {exc}", raw=self._buffer or None) from exc
            if not chunk:
                raise TransportDown("AT link closed by peer", raw=self._buffer or None)
            self._buffer += chunk
        line, self._buffer = self._buffer.split(CRLF, 1)
        return line.decode("utf-8", errors="replace")

    def send_command(self, command: str, timeout: float | None = None) -> list[str]:
        """Send one command and collect payload lines up to the terminator.

        The ``OK``/``ERROR`` terminator is consumed but excluded from the
        returned payload; ``ERROR`` raises DialectUnsupported carrying the
        command that was rejected.
        """
        if not command.strip():
            raise ValueError("empty AT command")
        if self._sock is None:
            raise TransportDown("AT transport is not connected")
        if not self._busy.acquire(blocking=False):
            raise ProtocolViolation("a command is already in flight on this transport")
        try:
            timeout = self.timeout if timeout is None else timeout
            self._drain()
            try:
                self._sock.sendall(command.encode("ascii") + CRLF)
            except OSError as exc:
                raise TransportDown(f"AT link failed: {exc}") from exc
            lines: list[str] = []
            while True:
                line = self._read_line(timeout)
                if line == "OK":
                    return lines
                if line == "ERROR":
                    raise DialectUnsupported(
                        f"device rejected {command!r}", raw="\r\n".join(lines + [line])
                    )
                lines.append(line)
        finally:
            self._busy.release()


def detect_dialect(transport: AtTransport, probe_timeout: float | None = None) -> AtDialect:
    """Probe the two query dialects; return the first that answers ``OK``.

    The unsupported command may answer ``ERROR`` or simply stay silent, so
    both a rejection and a probe timeout move on to the next candidate.
    """
    for dialect in (AtDialect.DEBUG, AtDialect.SGCELLINFOEX):
        try:
            transport.send_command(dialect.command, timeout=probe_timeout)
            return dialect
        except (DialectUnsupported, CollectTimeout):
            continue
    raise DialectUnsupported("device answered neither AT^DEBUG? nor AT+SGCELLINFOEX?")


def _key_values(lines: list[str], raw: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for line in lines:
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseFailed(f"malformed response line {line!r}", raw=raw)
        fields[key.strip().upper()] = value.strip()
    return fields


def _require_rat(fields: dict[str, str], raw: str) -> str:
    if "RAT" not in fields:
        raise ParseFailed("missing mandatory RAT line", raw=raw)
    return fields["RAT"]


def parse_debug_response(lines: list[str], device: str = "") -> KpiSnapshot:
    """Parse an ``AT^DEBUG?`` payload into a snapshot (RSRP/RSRQ at 1 dB grain,
    SINR at 0.1 dB, per-branch RSSI at 0.1 dBm)."""
    raw = "\r\n".join(lines)
    fields = _key_values(lines, raw)
    rat_raw = _require_rat(fields, raw)
    try:
        band, band_raw = (None, None)
        if "BAND" in fields:
            band, band_raw = wire.parse_band(fields["BAND"])
        branches: tuple = ()
        declared = None
        if "RSSI" in fields:
            branches, declared = wire.parse_rssi(fields["RSSI"], grain=0.1)
        cell = CellIdentity(
            rat=normalize_rat(rat_raw),
            rat_raw=rat_raw,
            mcc=fields.get("MCC"),
            mnc=fields.get("MNC"),
            nr_cell_id=wire.parse_int(fields["NR_CELL_ID"]) if "NR_CELL_ID" in fields else None,
            tac=wire.parse_int(fields["NR_TAC"]) if "NR_TAC" in fields else None,
            band=band,
            band_raw=band_raw,
            arfcn=wire.parse_int(fields["DL_UL_CHANNEL"]) if "DL_UL_CHANNEL" in fields else None,
        )
        radio = RadioMetrics(
            rssi_branches=branches,
            rssi_branch_count=declared,
            rsrp=_measure(fields, "RSRP", 1.0, Unit.DBM),
            rsrq=_measure(fields, "RSRQ", 1.0, Unit.DB),
            sinr=_measure(fields, "SINR", 0.1, Unit.DB),
            bandwidth=_measure(fields, "BANDWIDTH", 0.1, Unit.MHZ),
        )
    except ValueError as exc:
        raise ParseFailed(str(exc), raw=raw) from exc
    return KpiSnapshot(method=Method.AT_DEBUG, device=device, cell=cell, radio=radio, raw=raw)


def parse_sgcellinfoex_response(lines: list[str], device: str = "") -> KpiSnapshot:
    """Parse an ``AT+SGCELLINFOEX?`` payload into a snapshot (RSRP/RSRQ at
    1 dB grain, SINR at 0.5 dB)."""
    raw = "\r\n".join(lines)
    fields = _key_values(lines, raw)
    rat_raw = _require_rat(fields, raw)
    try:
        band, band_raw = (None, None)
        if "BAND" in fields:
            band, band_raw = wire.parse_band(fields["BAND"])
        cell = CellIdentity(
            rat=normalize_rat(rat_raw),
            rat_raw=rat_raw,
            mcc=fields.get("MCC"),
            mnc=fields.get("MNC"),
            nr_cell_id=wire.parse_int(fields["NR_CELL_ID"]) if "NR_CELL_ID" in fields else None,
            tac=wire.parse_int(fields["NR_TAC"]) if "NR_TAC" in fields else None,
            pci=wire.parse_int(fields["PHYSICAL_CELL_ID"]) if "PHYSICAL_CELL_ID" in fields else None,
            band=band,
            band_raw=band_raw,
            arfcn=wire.parse_int(fields["DL_UL_CHANNEL"]) if "DL_UL_CHANNEL" in fields else None,
        )
        radio = RadioMetrics(
            rsrp=_measure(fields, "RSRP", 1.0, Unit.DBM),
            rsrq=_measure(fields, "RSRQ", 1.0, Unit.DB),
            sinr=_measure(fields, "SINR", 0.5, Unit.DB),
            bandwidth=_measure(fields, "BANDWIDTH", 1.0, Unit.MHZ),
            scs=_measure(fields, "SUB_CARRIER_SPACING", 1.0, Unit.KHZ),
            freq_range_type=(
                wire.parse_freq_range(fields["FREQUENCY_RANGE_TYPE"])
                if "FREQUENCY_RANGE_TYPE" in fields else None
            ),
            duplex=wire.parse_duplex(fields["DUPLEX_MODE"]) if "DUPLEX_MODE" in fields else None,
        )
    except ValueError as exc:
        raise ParseFailed(str(exc), raw=raw) from exc
    return KpiSnapshot(
        method=Method.AT_SGCELLINFOEX, device=device, cell=cell, radio=radio, raw=raw
    )


def _measure(fields: dict[str, str], key: str, grain: float, unit: Unit):
    if key not in fields:
        return None
    return wire.parse_measurement(fields[key], grain, unit)


_PARSERS = {
    AtDialect.DEBUG: parse_debug_response,
    AtDialect.SGCELLINFOEX: parse_sgcellinfoex_response,
}


class AtCollector:
    """Polls one CPE over its AT endpoint using the auto-detected dialect."""

    def __init__(self, host: str, port: int, device: str, clock=None,
                 timeout: float = 2.0, probe_timeout: float = 0.75):
        self.device = device
        self.clock = clock or SystemClock()
        self.probe_timeout = probe_timeout
        self.transport = AtTransport(host, port, timeout=timeout)
        self.dialect: AtDialect | None = None

    @property
    def method(self) -> Method:
        if self.dialect is None:
            return Method.AT_DEBUG
        return self.dialect.method

    def connect(self) -> None:
        self.transport.connect()
        if self.dialect is None:
            self.dialect = detect_dialect(self.transport, probe_timeout=self.probe_timeout)

    def poll(self) -> KpiSnapshot:
        if self.dialect is None:
            raise ProtocolViolation("collector polled before dialect detection")
        lines = self.transport.send_command(self.dialect.command)
        snapshot = _PARSERS[self.dialect](lines, device=self.device)
        return snapshot.stamped(Timestamp(self.clock.now(), self.clock.wall()))

    def close(self) -> None:
        self.transport.close()
