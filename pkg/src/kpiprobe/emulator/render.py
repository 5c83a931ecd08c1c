"""Wire renderers for the three emulated interfaces.

Each renderer is the exact inverse of the corresponding collector parser:
parse(render(snapshot)) reproduces the snapshot for every schema-valid
input. Absent fields are omitted from the output entirely.
"""

from __future__ import annotations

import binascii

from .. import wire
from ..model import KpiSnapshot, MeasurementValue
from ..tm import L3_REPORT_COMMAND, TmFrame


def _mv(value: MeasurementValue | None, unit_suffix: str = "") -> str | None:
    if value is None:
        return None
    return value.render() + unit_suffix


def render_debug_lines(snapshot: KpiSnapshot) -> list[str]:
    """Serialize a snapshot as an ``AT^DEBUG?`` payload."""
    cell, radio = snapshot.cell, snapshot.radio
    lines: list[str] = []

    def put(key: str, value: str | None):
        if value is not None:
            lines.append(f"{key}:{value}")

    put("RAT", cell.rat_raw)
    put("MCC", cell.mcc)
    put("MNC", cell.mnc)
    put("NR_CELL_ID", None if cell.nr_cell_id is None else str(cell.nr_cell_id))
    put("NR_TAC", None if cell.tac is None else str(cell.tac))
    put("BAND", None if cell.band is None else wire.render_band(cell.band, cell.band_raw))
    put("BANDWIDTH", _mv(radio.bandwidth, " MHz"))
    put("DL_UL_CHANNEL", None if cell.arfcn is None else str(cell.arfcn))
    if radio.rssi_branch_count is not None or radio.rssi_branches:
        put("RSSI", wire.render_rssi(radio.rssi_branches, radio.rssi_branch_count or 0))
    put("RSRP", _mv(radio.rsrp, " dBm"))
    put("RSRQ", _mv(radio.rsrq, " dB"))
    put("SINR", _mv(radio.sinr, " dB"))
    return lines


def render_sgcellinfoex_lines(snapshot: KpiSnapshot) -> list[str]:
    """Serialize a snapshot as an ``AT+SGCELLINFOEX?`` payload."""
    cell, radio = snapshot.cell, snapshot.radio
    lines: list[str] = []

    def put(key: str, value: str | None):
        if value is not None:
            lines.append(f"{key}:{value}")

    put("RAT", cell.rat_raw)
    put("MCC", cell.mcc)
    put("MNC", cell.mnc)
    put("NR_CELL_ID", None if cell.nr_cell_id is None else str(cell.nr_cell_id))
    put("NR_TAC", None if cell.tac is None else str(cell.tac))
    put("PHYSICAL_CELL_ID", None if cell.pci is None else str(cell.pci))
    put("BAND", None if cell.band is None else wire.render_band(cell.band, cell.band_raw))
    put("BANDWIDTH", _mv(radio.bandwidth, " MHz"))
    put("SUB_CARRIER_SPACING", _mv(radio.scs))
    if radio.freq_range_type is not None:
        put("FREQUENCY_RANGE_TYPE", wire.render_freq_range(radio.freq_range_type))
    put("DL_UL_CHANNEL", None if cell.arfcn is None else str(cell.arfcn))
    put("RSRP", _mv(radio.rsrp, " dBm"))
    put("RSRQ", _mv(radio.rsrq, " dB"))
    put("SINR", _mv(radio.sinr, " dB"))
    if radio.duplex is not None:
        put("DUPLEX_MODE", f"{radio.duplex.value} NR5G")
    return lines


_CPE_A_PAGE = """<html>
<head><title>5G CPE Dashboard</title></head>
<body>
<div class="topbar"><span class="product">Outdoor CPE</span><span class="uptime">up</span></div>
<div class="nav"><a href="/">Home</a><a href="/status">Cellular</a></div>
<table id="cell-info">
{rows}
</table>
<div class="footer"><span id="copyright">status console</span></div>
</body>
</html>
"""

_CPE_B_PAGE = """<html>
<head><title>CPE Router</title></head>
<body>
<div class="hero"><h1>Network Status</h1><p class="note">auto refresh</p></div>
<div class="status-card" id="nr-status">
{cards}
</div>
<div class="sidebar"><ul><li>WAN</li><li>LAN</li><li>Wi-Fi</li></ul></div>
</body>
</html>
"""


def _cpe_a_row(label: str, span_id: str, value: str) -> str:
    return f' <tr><td class="k">{label}</td><td><span id="{span_id}">{value}</span></td></tr>'


def _cpe_b_card(label: str, div_id: str, value: str) -> str:
    return f' <div class="metric" id="{div_id}"><label>{label}</label><b>{value}</b></div>'


def render_web_page(snapshot: KpiSnapshot) -> str:
    """Serve a snapshot as the device's status page.

    The two vendors lay their dashboards out differently (table with span
    ids versus metric cards), which is exactly why the extraction side is
    selector-map driven.
    """
    cell, radio = snapshot.cell, snapshot.radio
    if snapshot.device == "cpe-b":
        cards = []
        if cell.rat_raw is not None:
            cards.append(_cpe_b_card("Network Type", "nr-rat", cell.rat_raw))
        if cell.pci is not None:
            cards.append(_cpe_b_card("Cell", "nr-pci", str(cell.pci)))
        if cell.band is not None:
            cards.append(_cpe_b_card("Band", "nr-band", wire.render_band(cell.band, cell.band_raw)))
        if radio.rsrp is not None:
            cards.append(_cpe_b_card("RSRP", "nr-rsrp", f"{radio.rsrp.render()} dBm"))
        if radio.rsrq is not None:
            cards.append(_cpe_b_card("RSRQ", "nr-rsrq", f"{radio.rsrq.render()} dB"))
        if radio.sinr is not None:
            cards.append(_cpe_b_card("SINR", "nr-sinr", f"{radio.sinr.render()} dB"))
        return _CPE_B_PAGE.format(cards="\n".join(cards))

    rows = []
    if cell.rat_raw is not None:
        rows.append(_cpe_a_row("RAT", "rat", cell.rat_raw))
    if cell.mcc is not None:
        rows.append(_cpe_a_row("MCC", "mcc", cell.mcc))
    if cell.mnc is not None:
        rows.append(_cpe_a_row("MNC", "mnc", cell.mnc))
    if cell.nr_cell_id is not None:
        rows.append(_cpe_a_row("NR Cell ID", "cell-id", str(cell.nr_cell_id)))
    if cell.pci is not None:
        rows.append(_cpe_a_row("Physical Cell ID", "pci", str(cell.pci)))
    if cell.band is not None:
        rows.append(_cpe_a_row("Band", "band", wire.render_band(cell.band, cell.band_raw)))
    if radio.bandwidth is not None:
        rows.append(_cpe_a_row("Bandwidth", "bandwidth", f"{radio.bandwidth.render()} MHz"))
    if cell.arfcn is not None:
        rows.append(_cpe_a_row("DL/UL Channel", "arfcn", str(cell.arfcn)))
    if radio.rsrp is not None:
        rows.append(_cpe_a_row("RSRP", "rsrp", f"{radio.rsrp.render()} dBm"))
    if radio.rsrq is not None:
        rows.append(_cpe_a_row("RSRQ", "rsrq", f"{radio.rsrq.render()} dB"))
    if radio.snr is not None:
        rows.append(_cpe_a_row("SNR", "snr", f"{radio.snr.render()} dB"))
    return _CPE_A_PAGE.format(rows="\n".join(rows))


_L3_KEY_ORDER = ("RAT", "PCI", "BAND", "SCS", "ARFCN", "RSRP", "RSRQ", "SINR", "DUPLEX")


def l3_report_text(snapshot: KpiSnapshot, extras: dict[str, str] | None = None) -> str:
    cell, radio = snapshot.cell, snapshot.radio
    values: dict[str, str | None] = {
        "RAT": cell.rat_raw,
        "PCI": None if cell.pci is None else str(cell.pci),
        "BAND": None if cell.band is None else wire.render_band(cell.band, cell.band_raw),
        "SCS": _mv(radio.scs),
        "ARFCN": None if cell.arfcn is None else str(cell.arfcn),
        "RSRP": _mv(radio.rsrp),
        "RSRQ": _mv(radio.rsrq),
        "SINR": _mv(radio.sinr),
        "DUPLEX": None if radio.duplex is None else radio.duplex.value,
    }
    lines = [f"{key}={values[key]}" for key in _L3_KEY_ORDER if values[key] is not None]
    for key, value in (extras or {}).items():
        lines.append(f"{key}={value}")
    return "\n".join(lines)


def encode_l3_report(snapshot: KpiSnapshot, extras: dict[str, str] | None = None) -> TmFrame:
    """Package a snapshot as a 0x80A3 response frame (hex-of-UTF-8 body)."""
    body = binascii.hexlify(l3_report_text(snapshot, extras).encode("utf-8"))
    return TmFrame(command=L3_REPORT_COMMAND, body=body)
