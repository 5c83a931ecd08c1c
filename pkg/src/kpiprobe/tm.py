"""Test-manager remote-access client: L3 KPI report over a framed TCP socket.

Frame layout (big-endian): a 32-bit length counting the command word plus the
body, a 16-bit command code, then the body. The L3 report request is command
0x80A3 with an empty body, i.e. exactly ``00 00 00 02 80 A3``. Report bodies
are ASCII-hex of UTF-8 ``KEY=VALUE`` lines. Byte-level examples live in
docs/tm-wire.md.
"""

from __future__ import annotations

import binascii
import socket
import struct
import threading
from dataclasses import dataclass, field

from . import wire
from .clock import SystemClock
from .errors import (
    CollectTimeout,
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

L3_REPORT_COMMAND = 0x80A3

MAX_FRAME_BYTES = 1 << 24  # sanity cap; a length beyond this is a corrupt stream


@dataclass(frozen=True)
class TmFrame:
    command: int
    body: bytes = b""

    @property
    def length(self) -> int:
        # The length word counts the 2-byte command plus the body.
        return 2 + len(self.body)

    def encode(self) -> bytes:
        return struct.pack(">IH", self.length, self.command) + self.body


def encode_l3_request() -> bytes:
    """The fixed 6-byte L3 report request: 00 00 00 02 80 A3."""
    return TmFrame(command=L3_REPORT_COMMAND).encode()


class FrameReader:
    """Incremental frame decoder; feeding one byte at a time yields the same
    frames as feeding the whole buffer."""

    def __init__(self):
        self._buffer = b""

    @property
    def pending(self) -> int:
        return len(self._buffer)

    def feed(self, data: bytes) -> list[TmFrame]:
        self._buffer += data
        frames: list[TmFrame] = []
        while True:
            if len(self._buffer) < 4:
                return frames
            (length,) = struct.unpack(">I", self._buffer[:4])
            if length < 2:
                raise ProtocolViolation(
                    f"frame length {length} cannot hold a command word",
                    raw=self._buffer,
                )
            if length > MAX_FRAME_BYTES:
                raise ProtocolViolation(
                    f"frame length {length} exceeds cap {MAX_FRAME_BYTES}",
                    raw=self._buffer[:64],
                )
            if len(self._buffer) < 4 + length:
                return frames
            (command,) = struct.unpack(">H", self._buffer[4:6])
            body = self._buffer[6:4 + length]
            self._buffer = self._buffer[4 + length:]
            frames.append(TmFrame(command=command, body=body))


_RECOGNIZED_KEYS = (
    "RAT", "PCI", "BAND", "SCS", "ARFCN", "RSRP", "RSRQ", "SINR", "DUPLEX",
)


@dataclass(frozen=True)
class L3Report:
    """Decoded L3 parameter report.

    The recognized subset is promoted into ``snapshot``; everything else the
    report carried (SSB index, MCS, BER, ...) is preserved in ``extras``.
    """

    params: dict[str, str]
    snapshot: KpiSnapshot
    extras: dict[str, str] = field(default_factory=dict)


def decode_l3_response(frame: TmFrame, device: str = "") -> L3Report:
    """Decode a 0x80A3 response frame into an L3 report.

    dB/dBm parameters carry grain 0.01: the report is the only path that
    preserves centibel resolution.
    """
    if frame.command != L3_REPORT_COMMAND:
        raise ProtocolViolation(
            f"expected command 0x{L3_REPORT_COMMAND:04X}, got 0x{frame.command:04X}",
            raw=frame.body,
        )
    try:
        payload = binascii.unhexlify(frame.body.strip())
    except (binascii.Error, ValueError) as exc:
        raise ProtocolViolation(f"body is not ASCII hex: {exc}", raw=frame.body) from exc
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseFailed(f"report payload is not UTF-8: {exc}", raw=payload) from exc

    params: dict[str, str] = {}
    for index, line in enumerate(text.split("\n")):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ParseFailed(f"unparseable report line {index}: {line!r}", raw=payload)
        params[key.strip().upper()] = value.strip()
    if not params:
        raise ParseFailed("empty report", raw=payload)

    extras = {k: v for k, v in params.items() if k not in _RECOGNIZED_KEYS}
    try:
        band, band_raw = (None, None)
        if "BAND" in params:
            band, band_raw = wire.parse_band(params["BAND"])
        cell = CellIdentity(
            rat=normalize_rat(params["RAT"]) if "RAT" in params else None,
            rat_raw=params.get("RAT"),
            pci=wire.parse_int(params["PCI"]) if "PCI" in params else None,
            band=band,
            band_raw=band_raw,
            arfcn=wire.parse_int(params["ARFCN"]) if "ARFCN" in params else None,
        )
        radio = RadioMetrics(
            rsrp=_measure(params, "RSRP", 0.01, Unit.DBM),
            rsrq=_measure(params, "RSRQ", 0.01, Unit.DB),
            sinr=_measure(params, "SINR", 0.01, Unit.DB),
            scs=_measure(params, "SCS", 1.0, Unit.KHZ),
            duplex=wire.parse_duplex(params["DUPLEX"]) if "DUPLEX" in params else None,
        )
    except ValueError as exc:
        raise ParseFailed(str(exc), raw=payload) from exc
    snapshot = KpiSnapshot(
        method=Method.XCAL_L3, device=device, cell=cell, radio=radio, raw=frame.body
    )
    return L3Report(params=params, snapshot=snapshot, extras=extras)


def _measure(params: dict[str, str], key: str, grain: float, unit: Unit):
    if key not in params:
        return None
    return wire.parse_measurement(params[key], grain, unit)


class TmConnection:
    """One request/response connection to the TM endpoint.

    Requests strictly alternate with responses; a second poll while one is
    in flight is rejected locally.
    """

    def __init__(self, host: str, port: int, timeout: float = 3.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._reader = FrameReader()
        self._busy = threading.Lock()

    def connect(self) -> None:
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as exc:
            raise TransportDown(f"TM endpoint {self.host}:{self.port} unreachable: {exc}") from exc

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def request(self, payload: bytes) -> TmFrame:
        if self._sock is None:
            raise TransportDown("TM connection is not open")
        if not self._busy.acquire(blocking=False):
            raise ProtocolViolation("a poll is already in flight on this connection")
        try:
            self._sock.settimeout(self.timeout)
            try:
                self._sock.sendall(payload)
            except OSError as exc:
                raise TransportDown(f"TM link failed: {exc}") from exc
            while True:
                try:
                    chunk = self._sock.recv(4096)
                except socket.timeout as exc:
                    raise CollectTimeout(
                        f"no TM response within {self.timeout} s"
                    ) from exc
                except OSError as exc:
                    raise TransportDown(f"TM link failed: {exc}") from exc
                if not chunk:
                    raise TransportDown(
                        "TM connection closed mid-frame"
                        if self._reader.pending else "TM connection closed",
                    )
                frames = self._reader.feed(chunk)
                if frames:
                    return frames[0]
        finally:
            self._busy.release()


def poll_l3(connection: TmConnection, device: str = "", clock=None) -> KpiSnapshot:
    """Request one L3 report and return its snapshot stamped at arrival time."""
    clock = clock or SystemClock()
    frame = connection.request(encode_l3_request())
    report = decode_l3_response(frame, device=device)
    return report.snapshot.stamped(Timestamp(clock.now(), clock.wall()))


class TmCollector:
    """Polls the TM endpoint for L3 reports on a persistent connection."""

    method = Method.XCAL_L3

    def __init__(self, host: str, port: int, device: str, clock=None, timeout: float = 3.0):
        self.device = device
        self.clock = clock or SystemClock()
        self.connection = TmConnection(host, port, timeout=timeout)

    def connect(self) -> None:
        self.connection.connect()

    def poll(self) -> KpiSnapshot:
        return poll_l3(self.connection, device=self.device, clock=self.clock)

    def close(self) -> None:
        self.connection.close()
