"""Unified KPI schema spanning the three extraction methods and both devices.

Every backend parses into the same :class:`KpiSnapshot` shape; which fields a
given (method, device) pair may populate is governed by a coverage matrix.
Blank coverage cells are modeled as absent optionals, never zero: blank means
"method does not expose this field".
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field, replace

from .errors import NoCoverageEntry

CPE_A = "cpe-a"
CPE_B = "cpe-b"


class Unit(enum.Enum):
    DBM = "dBm"
    DB = "dB"
    MHZ = "MHz"
    KHZ = "kHz"
    NONE = "none"


class Rat(enum.Enum):
    NR5G_SA = "NR5G_SA"
    NR5G_NSA = "NR5G_NSA"
    LTE = "LTE"
    UNKNOWN = "UNKNOWN"


class FreqRange(enum.Enum):
    FR1 = "FR1"
    FR2 = "FR2"


class Duplex(enum.Enum):
    TDD = "TDD"
    FDD = "FDD"


class Method(enum.Enum):
    WEB = "WEB"
    AT_DEBUG = "AT_DEBUG"
    AT_SGCELLINFOEX = "AT_SGCELLINFOEX"
    XCAL_L3 = "XCAL_L3"


# Vendors label the same attached network three different ways ("5G",
# "NR5G_SA", "5GNR"); normalize to one enum but keep the raw label.
_RAT_SA_LABELS = {"5G", "5GNR", "5G NR", "NR", "NR5G", "NR5G_SA", "NR5G SA", "5G SA"}
_RAT_NSA_LABELS = {"NR5G_NSA", "NR5G NSA", "5G NSA", "EN-DC"}


def normalize_rat(raw: str) -> Rat:
    label = raw.strip().upper()
    if label in _RAT_NSA_LABELS or "NSA" in label:
        return Rat.NR5G_NSA
    if label in _RAT_SA_LABELS:
        return Rat.NR5G_SA
    if label == "LTE":
        return Rat.LTE
    return Rat.UNKNOWN


def quantize(value: float, grain: float, unit: Unit = Unit.NONE) -> "MeasurementValue":
    """Snap ``value`` to the nearest multiple of ``grain``; ties round away from zero."""
    if not math.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    if not (grain > 0):
        raise ValueError(f"grain must be positive, got {grain!r}")
    steps = math.floor(abs(value) / grain + 0.5)
    # Re-round to the grain's decimal representation so the result compares
    # equal to the same number parsed back from rendered text.
    snapped = round(math.copysign(steps * grain, value), 12)
    return MeasurementValue(value=snapped, unit=unit, grain=grain)


def grain_decimals(grain: float) -> int:
    """Number of decimal places needed to render multiples of ``grain``."""
    for decimals in range(10):
        scaled = grain * 10**decimals
        if abs(scaled - round(scaled)) < 1e-9:
            return decimals
    raise ValueError(f"grain {grain!r} has no finite decimal rendering")


@dataclass(frozen=True)
class MeasurementValue:
    """A reported numeric KPI with its unit and quantization step.

    ``grain`` encodes the value resolution of the reporting path: 1.0 for
    integer-converted dBm readings, 0.01 for two-decimal reports.
    """

    value: float
    unit: Unit = Unit.NONE
    grain: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"value must be finite, got {self.value!r}")
        if not (self.grain > 0):
            raise ValueError(f"grain must be positive, got {self.grain!r}")
        nearest = round(self.value / self.grain) * self.grain
        if abs(self.value - nearest) > 1e-9:
            raise ValueError(
                f"value {self.value!r} is not a multiple of grain {self.grain!r}"
            )

    def render(self) -> str:
        return f"{self.value:.{grain_decimals(self.grain)}f}"


@dataclass(frozen=True)
class CellIdentity:
    """Serving-cell identity fields; every field optional per coverage."""

    rat: Rat | None = None
    rat_raw: str | None = None
    mcc: str | None = None
    mnc: str | None = None
    nr_cell_id: int | None = None
    tac: int | None = None
    pci: int | None = None
    band: int | None = None
    band_raw: str | None = None
    arfcn: int | None = None


@dataclass(frozen=True)
class RadioMetrics:
    """Signal-quality readings; every field optional per coverage.

    ``rssi_branches`` holds the per-antenna slots verbatim, blanks as None;
    ``rssi_branch_count`` is the count the response declared, which vendor
    firmware does not always keep in sync with the populated slots.
    """

    rssi_branches: tuple[MeasurementValue | None, ...] = ()
    rssi_branch_count: int | None = None
    rsrp: MeasurementValue | None = None
    rsrq: MeasurementValue | None = None
    snr: MeasurementValue | None = None
    sinr: MeasurementValue | None = None
    bandwidth: MeasurementValue | None = None
    scs: MeasurementValue | None = None
    freq_range_type: FreqRange | None = None
    duplex: Duplex | None = None


@dataclass(frozen=True)
class Timestamp:
    """Monotonic instant for metrics plus wall-clock time for export."""

    monotonic: float
    unix: float

    @property
    def unix_ms(self) -> int:
        return int(round(self.unix * 1000))


@dataclass(frozen=True)
class KpiSnapshot:
    """One timestamped reading of all KPI fields from one method on one device."""

    method: Method
    device: str
    cell: CellIdentity = field(default_factory=CellIdentity)
    radio: RadioMetrics = field(default_factory=RadioMetrics)
    timestamp: Timestamp = Timestamp(0.0, 0.0)
    raw: bytes | str | None = None

    def stamped(self, timestamp: Timestamp, device: str | None = None) -> "KpiSnapshot":
        if device is None:
            return replace(self, timestamp=timestamp)
        return replace(self, timestamp=timestamp, device=device)

    def payload(self) -> tuple[CellIdentity, RadioMetrics]:
        """The semantic content, exclusive of stamping and raw audit data."""
        return (self.cell, self.radio)


# Short field names used by the coverage matrix, keyed to accessors and to
# the canonical flat-JSON names.
_FIELD_SPECS = [
    # (short name, json name, accessor)
    ("rat", "rat", lambda s: s.cell.rat),
    ("mcc", "mcc", lambda s: s.cell.mcc),
    ("mnc", "mnc", lambda s: s.cell.mnc),
    ("nr_cell_id", "nr_cell_id", lambda s: s.cell.nr_cell_id),
    ("tac", "tac", lambda s: s.cell.tac),
    ("pci", "pci", lambda s: s.cell.pci),
    ("band", "band", lambda s: s.cell.band),
    ("bandwidth", "bandwidth_mhz", lambda s: s.radio.bandwidth),
    ("scs", "scs_khz", lambda s: s.radio.scs),
    ("freq_range_type", "freq_range_type", lambda s: s.radio.freq_range_type),
    ("arfcn", "arfcn", lambda s: s.cell.arfcn),
    ("rssi", "rssi_branches", lambda s: s.radio.rssi_branches or None),
    ("rsrp", "rsrp_dbm", lambda s: s.radio.rsrp),
    ("rsrq", "rsrq_db", lambda s: s.radio.rsrq),
    ("snr", "snr_db", lambda s: s.radio.snr),
    ("sinr", "sinr_db", lambda s: s.radio.sinr),
    ("duplex", "duplex", lambda s: s.radio.duplex),
]

FIELD_NAMES = [name for name, _, _ in _FIELD_SPECS]
_ACCESSORS = {name: accessor for name, _, accessor in _FIELD_SPECS}
JSON_NAMES = {name: json_name for name, json_name, _ in _FIELD_SPECS}

CANONICAL_COLUMNS = [JSON_NAMES[name] for name in FIELD_NAMES] + [
    "method",
    "device",
    "ts_unix_ms",
]


def populated_fields(snapshot: KpiSnapshot) -> set[str]:
    populated = set()
    for name in FIELD_NAMES:
        if _ACCESSORS[name](snapshot) is not None:
            populated.add(name)
    # The declared branch count counts as RSSI coverage too.
    if snapshot.radio.rssi_branch_count is not None:
        populated.add("rssi")
    return populated


CoverageMatrix = dict[tuple[Method, str], frozenset[str]]

# Per-method field coverage for the two devices; blank cells in the vendor
# responses define the absences.
DEFAULT_COVERAGE: CoverageMatrix = {
    (Method.WEB, CPE_A): frozenset(
        {"rat", "mcc", "mnc", "nr_cell_id", "pci", "band", "bandwidth",
         "arfcn", "rsrp", "rsrq", "snr"}
    ),
    (Method.WEB, CPE_B): frozenset(
        {"rat", "pci", "band", "rsrp", "rsrq", "sinr"}
    ),
    (Method.AT_DEBUG, CPE_A): frozenset(
        {"rat", "mcc", "mnc", "nr_cell_id", "tac", "band", "bandwidth",
         "arfcn", "rssi", "rsrp", "rsrq", "sinr"}
    ),
    (Method.AT_SGCELLINFOEX, CPE_B): frozenset(
        {"rat", "mcc", "mnc", "nr_cell_id", "tac", "pci", "band", "bandwidth",
         "scs", "freq_range_type", "arfcn", "rsrp", "rsrq", "sinr", "duplex"}
    ),
    (Method.XCAL_L3, CPE_A): frozenset(
        {"rat", "pci", "band", "scs", "arfcn", "rsrp", "rsrq", "sinr", "duplex"}
    ),
    (Method.XCAL_L3, CPE_B): frozenset(
        {"rat", "pci", "band", "scs", "arfcn", "rsrp", "rsrq", "sinr", "duplex"}
    ),
}

# 3GPP reporting ranges used as validity bounds.
RSRP_RANGE = (-156.0, -31.0)
RSRQ_RANGE = (-43.0, 20.0)
SINR_RANGE = (-23.0, 40.0)

_MCC_RE = re.compile(r"^\d{3}$")
_MNC_RE = re.compile(r"^\d{2,3}$")


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


def _check_range(name: str, mv: MeasurementValue | None,
                 bounds: tuple[float, float], violations: list[str]) -> None:
    if mv is not None and not (bounds[0] <= mv.value <= bounds[1]):
        violations.append(
            f"{name} {mv.value} outside reporting range [{bounds[0]}, {bounds[1]}]"
        )


def validate_snapshot(snapshot: KpiSnapshot, matrix: CoverageMatrix) -> ValidationResult:
    """Check a snapshot against the coverage matrix and field invariants.

    Returns ok iff every populated field is covered for the snapshot's
    (method, device) pair and all value invariants hold; each violation
    names the offending field. A declared-vs-populated RSSI branch count
    mismatch is only flagged as a warning, since vendor responses exhibit
    exactly that quirk.
    """
    key = (snapshot.method, snapshot.device)
    if key not in matrix:
        raise NoCoverageEntry(
            f"no coverage entry for ({snapshot.method.value}, {snapshot.device})"
        )
    covered = matrix[key]
    violations: list[str] = []
    warnings: list[str] = []

    for name in sorted(populated_fields(snapshot)):
        if name not in covered:
            violations.append(f"{name} not covered by {snapshot.method.value}")

    cell, radio = snapshot.cell, snapshot.radio
    if cell.pci is not None and not (0 <= cell.pci <= 1007):
        violations.append(f"pci {cell.pci} outside 0..1007")
    if cell.band is not None and not (1 <= cell.band <= 1024):
        violations.append(f"band {cell.band} outside 1..1024")
    if cell.mcc is not None and not _MCC_RE.match(cell.mcc):
        violations.append(f"mcc {cell.mcc!r} is not a 3-digit string")
    if cell.mnc is not None and not _MNC_RE.match(cell.mnc):
        violations.append(f"mnc {cell.mnc!r} is not a 2-or-3-digit string")

    _check_range("rsrp", radio.rsrp, RSRP_RANGE, violations)
    _check_range("rsrq", radio.rsrq, RSRQ_RANGE, violations)
    _check_range("snr", radio.snr, SINR_RANGE, violations)
    _check_range("sinr", radio.sinr, SINR_RANGE, violations)

    if radio.rssi_branch_count is not None:
        populated_branches = sum(1 for b in radio.rssi_branches if b is not None)
        if radio.rssi_branch_count != populated_branches:
            warnings.append(
                "rssi declared branch count "
                f"{radio.rssi_branch_count} != populated branches {populated_branches}"
            )

    return ValidationResult(
        ok=not violations,
        violations=tuple(violations),
        warnings=tuple(warnings),
    )


def to_canonical_json(snapshot: KpiSnapshot) -> dict:
    """Flatten a snapshot to the canonical JSON object; absent fields omitted."""
    out: dict = {}
    cell, radio = snapshot.cell, snapshot.radio
    if cell.rat is not None:
        out["rat"] = cell.rat.value
    if cell.mcc is not None:
        out["mcc"] = cell.mcc
    if cell.mnc is not None:
        out["mnc"] = cell.mnc
    if cell.nr_cell_id is not None:
        out["nr_cell_id"] = cell.nr_cell_id
    if cell.tac is not None:
        out["tac"] = cell.tac
    if cell.pci is not None:
        out["pci"] = cell.pci
    if cell.band is not None:
        out["band"] = cell.band
    if radio.bandwidth is not None:
        out["bandwidth_mhz"] = radio.bandwidth.value
    if radio.scs is not None:
        out["scs_khz"] = radio.scs.value
    if radio.freq_range_type is not None:
        out["freq_range_type"] = radio.freq_range_type.value
    if cell.arfcn is not None:
        out["arfcn"] = cell.arfcn
    if radio.rssi_branches or radio.rssi_branch_count is not None:
        out["rssi_branches"] = [
            b.value if b is not None else None for b in radio.rssi_branches
        ]
    if radio.rsrp is not None:
        out["rsrp_dbm"] = radio.rsrp.value
    if radio.rsrq is not None:
        out["rsrq_db"] = radio.rsrq.value
    if radio.snr is not None:
        out["snr_db"] = radio.snr.value
    if radio.sinr is not None:
        out["sinr_db"] = radio.sinr.value
    if radio.duplex is not None:
        out["duplex"] = radio.duplex.value
    out["method"] = snapshot.method.value
    out["device"] = snapshot.device
    out["ts_unix_ms"] = snapshot.timestamp.unix_ms
    return out
