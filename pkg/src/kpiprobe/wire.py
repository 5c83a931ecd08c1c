"""Shared text conventions for KPI fields on the emulated wire formats.

Parsers and the emulator's renderers both import from here so that the two
sides can never drift apart. Anything raising ValueError in this module is
wrapped into a structured ParseFailed by the calling parser.
"""

from __future__ import annotations

import re

from .model import Duplex, FreqRange, MeasurementValue, Unit, quantize

_NUMBER_RE = re.compile(
    r"^\s*(-?\d+(?:\.(\d+))?)\s*(dBm|dB|MHz|kHz)?\s*$"
)
_RSSI_RE = re.compile(r"^\s*(\d+)\s*\((.*)\)\s*$")


def split_number(text: str) -> tuple[float, int, str | None]:
    """Split a value token into (number, decimal places shown, unit suffix)."""
    match = _NUMBER_RE.match(text)
    if not match:
        raise ValueError(f"expected numeric token, got {text!r}")
    number, decimals, unit = match.group(1), match.group(2), match.group(3)
    return float(number), len(decimals or ""), unit


def parse_measurement(text: str, grain: float, unit: Unit) -> MeasurementValue:
    """Parse a value token at a fixed reporting grain."""
    number, _, _ = split_number(text)
    return quantize(number, grain, unit)


def parse_measurement_inferred(text: str, unit: Unit) -> MeasurementValue:
    """Parse a value token, inferring grain from the decimals displayed.

    One decimal shown means grain 0.1, none means 1.0; the reporting grain
    of a dashboard is a rendering property of the page, not configuration.
    """
    number, decimals, _ = split_number(text)
    return quantize(number, 10.0 ** -decimals, unit)


def parse_int(text: str) -> int:
    stripped = text.strip()
    if not re.match(r"^-?\d+$", stripped):
        raise ValueError(f"expected integer token, got {text!r}")
    return int(stripped)


def parse_band(text: str) -> tuple[int, str]:
    """Parse a band label such as ``n258`` or ``258`` into (number, raw label)."""
    raw = text.strip()
    match = re.match(r"^[nN]?(\d+)$", raw)
    if not match:
        raise ValueError(f"expected NR band label, got {text!r}")
    return int(match.group(1)), raw


def render_band(band: int, raw: str | None) -> str:
    return raw if raw is not None else str(band)


def parse_duplex(text: str) -> Duplex:
    token = text.strip().upper()
    if token.startswith("TDD"):
        return Duplex.TDD
    if token.startswith("FDD"):
        return Duplex.FDD
    raise ValueError(f"unrecognized duplex mode {text!r}")


def parse_freq_range(text: str) -> FreqRange:
    token = text.strip().upper().removeprefix("FR")
    if token == "1":
        return FreqRange.FR1
    if token == "2":
        return FreqRange.FR2
    raise ValueError(f"unrecognized frequency range type {text!r}")


def render_freq_range(fr: FreqRange) -> str:
    return "1" if fr is FreqRange.FR1 else "2"


def parse_rssi(text: str, grain: float) -> tuple[tuple[MeasurementValue | None, ...], int]:
    """Parse a count-prefixed RSSI branch list.

    ``"3 (-84.3 dBm, -78.6 dBm,  ,  )"`` yields the four slots verbatim with
    blanks as None and the declared count 3; the declared count is recorded
    as-is even when it disagrees with the populated slots, since that is a
    quirk real responses exhibit. An all-blank list collapses to ().
    """
    match = _RSSI_RE.match(text)
    if not match:
        raise ValueError(f"malformed RSSI branch list {text!r}")
    declared = int(match.group(1))
    inner = match.group(2)
    slots: list[MeasurementValue | None] = []
    if inner.strip():
        for token in inner.split(","):
            token = token.strip()
            if not token:
                slots.append(None)
            else:
                number, _, _ = split_number(token)
                slots.append(quantize(number, grain, Unit.DBM))
    if all(slot is None for slot in slots):
        slots = []
    return tuple(slots), declared


def render_rssi(branches: tuple[MeasurementValue | None, ...], declared: int) -> str:
    slots = [f"{b.render()} dBm" if b is not None else " " for b in branches]
    while len(slots) < 4:
        slots.append(" ")
    return f"{declared} ({', '.join(slots)})"
