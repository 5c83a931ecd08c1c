"""kpiprobe: real-time network-KPI extraction bench.

Three collector backends (web dashboard scraping, AT-command querying, a
test-manager socket protocol), a CPE device emulator that serves all three
interfaces from one ground-truth signal model, and an analysis suite that
compares the methods on value resolution, refresh rate, and tracking
fidelity.
"""

__version__ = "0.1.0"

from .model import (
    CPE_A,
    CPE_B,
    CellIdentity,
    CoverageMatrix,
    Duplex,
    FreqRange,
    KpiSnapshot,
    MeasurementValue,
    Method,
    RadioMetrics,
    Rat,
    DEFAULT_COVERAGE,
    Timestamp,
    Unit,
    quantize,
    to_canonical_json,
    validate_snapshot,
)

__all__ = [
    "CPE_A",
    "CPE_B",
    "CellIdentity",
    "CoverageMatrix",
    "Duplex",
    "FreqRange",
    "KpiSnapshot",
    "MeasurementValue",
    "Method",
    "RadioMetrics",
    "Rat",
    "DEFAULT_COVERAGE",
    "Timestamp",
    "Unit",
    "quantize",
    "to_canonical_json",
    "validate_snapshot",
    "__version__",
]
