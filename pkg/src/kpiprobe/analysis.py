"""Comparison metrics over collected series: effective refresh period,
value-resolution grain, and tracking fidelity against the scenario truth.

The refresh period is estimated from distinct-value events rather than from
request times, because backends repeat a held value between internal
refreshes even when every request succeeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median

from .collector import LoadedSeries
from .model import Method

# Candidate quantization steps, largest first. A fixed ladder beats a
# floating-point GCD, which is numerically brittle; these cover every
# reporting precision the backends exhibit.
GRAIN_LADDER = (1.0, 0.5, 0.1, 0.05, 0.01)
GRAIN_TOLERANCE = 1e-6

DEFAULT_MAX_LAG = 5.0
DEFAULT_LAG_STEP = 0.05


class InsufficientData(ValueError):
    pass


def change_instants(times: list[float], values: list) -> list[float]:
    """Instants at which the observed value differs from the previous sample."""
    return [
        times[i]
        for i in range(1, len(values))
        if values[i] != values[i - 1]
    ]


def estimate_refresh_period(times: list[float], values: list) -> float:
    """Median inter-arrival time between consecutive distinct-value instants."""
    events = change_instants(times, values)
    if len(events) < 3:
        raise InsufficientData(
            f"insufficient variation: {len(events)} value-change event(s), need >= 3"
        )
    intervals = [b - a for a, b in zip(events, events[1:])]
    return median(intervals)


@dataclass(frozen=True)
class GrainEstimate:
    grain: float
    exact: bool  # False when no ladder candidate fits and the smallest was returned


def _divides(value: float, grain: float) -> bool:
    return abs(value - round(value / grain) * grain) <= GRAIN_TOLERANCE


def estimate_grain(values: list[float]) -> GrainEstimate:
    """Largest ladder step that every observed value is a multiple of."""
    distinct = set(values)
    if len(distinct) < 2:
        raise InsufficientData(
            f"need >= 2 distinct values to estimate grain, got {len(distinct)}"
        )
    for candidate in GRAIN_LADDER:
        if all(_divides(value, candidate) for value in distinct):
            return GrainEstimate(grain=candidate, exact=True)
    return GrainEstimate(grain=GRAIN_LADDER[-1], exact=False)


@dataclass(frozen=True)
class TrackingError:
    rmse: float
    lag: float


def _pearson(xs: list[float], ys: list[float]) -> float | None:
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    if var_x <= 0 or var_y <= 0:
        return None
    return cov / math.sqrt(var_x * var_y)


def hold_interpolate(times: list[float], values: list[float],
                     step: float) -> tuple[list[float], list[float]]:
    """Zero-order-hold interpolation of a series onto a regular grid."""
    grid: list[float] = []
    held: list[float] = []
    index = 0
    count = int(round((times[-1] - times[0]) / step))
    for k in range(count + 1):
        t = times[0] + k * step
        while index + 1 < len(times) and times[index + 1] <= t + 1e-9:
            index += 1
        grid.append(t)
        held.append(values[index])
    return grid, held


def tracking_error(times: list[float], values: list[float], truth,
                   t0: float | None = None, max_lag: float = DEFAULT_MAX_LAG,
                   lag_step: float = DEFAULT_LAG_STEP) -> TrackingError:
    """Lag and RMSE of a series against the ground-truth trace.

    The lag is the shift in [0, max_lag] maximizing the normalized
    cross-correlation between the held series and the truth trace at the
    sample instants; the RMSE is computed after applying that shift. The
    truth callable must accept arguments down to -max_lag (the scenario
    trace extends periodically; see ``ScenarioModel.rsrp_extended``).
    Times are taken relative to ``t0`` (default: the first sample), which
    makes the result invariant under a constant wall-clock offset on all
    timestamps.
    """
    if len(values) < 4:
        raise InsufficientData(f"insufficient data: {len(values)} sample(s), need >= 4")
    base = times[0] if t0 is None else t0
    rel = [t - base for t in times]

    best_lag = 0.0
    best_score = None
    for k in range(int(round(max_lag / lag_step)) + 1):
        shift = k * lag_step
        score = _pearson(values, [truth(t - shift) for t in rel])
        if score is not None and (best_score is None or score > best_score + 1e-12):
            best_score = score
            best_lag = shift

    residuals = [(v - truth(t - best_lag)) for v, t in zip(values, rel)]
    rmse = math.sqrt(sum(r * r for r in residuals) / len(residuals))
    return TrackingError(rmse=rmse, lag=best_lag)


@dataclass
class MethodMetrics:
    method: Method
    device: str
    sample_count: int
    error_count: int
    effective_refresh_period: float | None = None
    estimated_grain: float | None = None
    grain_exact: bool = True
    rmse_vs_truth: float | None = None
    lag_vs_truth: float | None = None

    @property
    def name(self) -> str:
        return f"{self.method.value.lower()}-{self.device}"


def compute_metrics(series: LoadedSeries, field: str = "rsrp_dbm", truth=None,
                    t0: float | None = None, error_count: int = 0) -> MethodMetrics:
    """All comparison metrics for one series; metrics stay blank where the
    series does not support them (constant or empty traces)."""
    mask = [(t, row.get(field)) for t, row in zip(series.times, series.rows)
            if row.get(field) is not None]
    times = [t for t, _ in mask]
    values = [v for _, v in mask]
    metrics = MethodMetrics(
        method=series.method,
        device=series.device,
        sample_count=len(series.rows),
        error_count=error_count,
    )
    try:
        metrics.effective_refresh_period = estimate_refresh_period(times, values)
    except InsufficientData:
        pass
    try:
        estimate = estimate_grain(values)
        metrics.estimated_grain = estimate.grain
        metrics.grain_exact = estimate.exact
    except InsufficientData:
        pass
    if truth is not None and values:
        try:
            tracking = tracking_error(times, values, truth, t0=t0)
            metrics.rmse_vs_truth = tracking.rmse
            metrics.lag_vs_truth = tracking.lag
        except InsufficientData:
            pass
    return metrics


# -- report rendering --------------------------------------------------------

_METHOD_ORDER = {method: index for index, method in enumerate(Method)}

REPORT_COLUMNS = [
    "method", "device", "samples", "errors",
    "refresh_period_s", "grain_rsrp", "rmse_db", "lag_s",
]


def _fmt(value, decimals: int = 3) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{decimals}f}"
    return str(value)


def report_rows(metrics: list[MethodMetrics]) -> list[list[str]]:
    ordered = sorted(metrics, key=lambda m: (_METHOD_ORDER[m.method], m.device))
    rows = []
    for m in ordered:
        rows.append([
            m.method.value,
            m.device,
            str(m.sample_count),
            str(m.error_count),
            _fmt(m.effective_refresh_period),
            _fmt(m.estimated_grain, 2),
            _fmt(m.rmse_vs_truth),
            _fmt(m.lag_vs_truth, 2),
        ])
    return rows


def render_report_csv(metrics: list[MethodMetrics]) -> str:
    lines = [",".join(REPORT_COLUMNS)]
    for row in report_rows(metrics):
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def render_report_text(metrics: list[MethodMetrics]) -> str:
    header = ["method", "device", "samples", "errors",
              "refresh[s]", "grain[dB]", "rmse[dB]", "lag[s]"]
    rows = [header] + report_rows(metrics)
    widths = [max(len(row[col]) for row in rows) for col in range(len(header))]
    lines = []
    for index, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * width for width in widths))
    return "KPI extraction method comparison (RSRP)\n" + "\n".join(lines) + "\n"


def build_report(metrics: list[MethodMetrics], out_dir) -> str:
    """Write report.csv and report.txt under out_dir; returns the text form."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_text = render_report_csv(metrics)
    txt_text = render_report_text(metrics)
    with open(os.path.join(out_dir, "report.csv"), "w") as handle:
        handle.write(csv_text)
    with open(os.path.join(out_dir, "report.txt"), "w") as handle:
        handle.write(txt_text)
    return txt_text


def write_trace_csv(series: LoadedSeries, path, field: str = "rsrp_dbm",
                    t0: float | None = None) -> None:
    """Per-series (time, value) trace suitable for plotting overlays."""
    base = t0 if t0 is not None else (series.times[0] if series.times else 0.0)
    with open(path, "w") as handle:
        handle.write(f"t_s,{field}\n")
        for t, row in zip(series.times, series.rows):
            value = row.get(field)
            if value is None:
                continue
            handle.write(f"{t - base},{value}\n")


def write_truth_csv(truth, duration: float, path, step: float = 0.05) -> None:
    with open(path, "w") as handle:
        handle.write("t_s,rsrp_dbm\n")
        count = int(round(duration / step))
        for k in range(count + 1):
            t = round(k * step, 9)
            handle.write(f"{t},{truth(t)}\n")


def write_overlay_svg(traces: dict[str, tuple[list[float], list[float]]], path,
                      width: int = 900, height: int = 420) -> None:
    """Minimal deterministic SVG line plot of the RSRP-vs-time overlays."""
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]
    points = [(t, v) for ts, vs in traces.values() for t, v in zip(ts, vs)]
    if not points:
        raise InsufficientData("no trace points to plot")
    t_low = min(p[0] for p in points)
    t_high = max(p[0] for p in points) or 1.0
    v_low = min(p[1] for p in points)
    v_high = max(p[1] for p in points)
    if v_high - v_low < 1e-9:
        v_high = v_low + 1.0
    margin = 45.0

    def sx(t: float) -> float:
        return margin + (t - t_low) / (t_high - t_low) * (width - 2 * margin)

    def sy(v: float) -> float:
        return height - margin - (v - v_low) / (v_high - v_low) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">'
        "RSRP vs time</text>",
    ]
    for index, (name, (ts, vs)) in enumerate(sorted(traces.items())):
        color = palette[index % len(palette)]
        coords = " ".join(f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(ts, vs))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{coords}"/>')
        parts.append(f'<text x="{margin + 4:.1f}" y="{margin + 14 * (index + 1):.1f}" '
                     f'fill="{color}" font-size="11">{name}</text>')
    parts.append("</svg>")
    with open(path, "w") as handle:
        handle.write("\n".join(parts) + "\n")
