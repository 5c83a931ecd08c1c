"""Per-interface emulation profiles and snapshot composition.

Each interface serves the shared ground truth through its own zero-order
hold and quantization: the TM socket refreshes every second at 0.01 dB
grain, the AT endpoint refreshes every 0.25 s but integer-converts, and the
dashboards hold values for seconds beyond their internal refresh. Identity
fields are rendered verbatim from per-device constants.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..errors import NoCoverageEntry
from ..model import (
    CPE_A,
    CPE_B,
    CellIdentity,
    Duplex,
    FreqRange,
    KpiSnapshot,
    MeasurementValue,
    Method,
    RadioMetrics,
    Unit,
    normalize_rat,
    quantize,
)
from ..atcmd import AtDialect
from .scenario import ScenarioModel


class Interface(enum.Enum):
    WEB = "WEB"
    AT = "AT"
    TM = "TM"


class UnsupportedCommandBehavior(enum.Enum):
    SILENT = "SILENT"
    ERROR = "ERROR"


_FIELD_UNITS = {
    "rsrp": Unit.DBM,
    "rsrq": Unit.DB,
    "snr": Unit.DB,
    "sinr": Unit.DB,
    "rssi": Unit.DBM,
    "bandwidth": Unit.MHZ,
    "scs": Unit.KHZ,
}


@dataclass(frozen=True)
class InterfaceProfile:
    interface: Interface
    device: str
    internal_refresh_period: float
    grain_map: dict[str, float]
    response_latency: float = 0.0
    staleness_hold: float = 0.0
    at_dialect: AtDialect | None = None
    unsupported_command_behavior: UnsupportedCommandBehavior = UnsupportedCommandBehavior.ERROR

    def __post_init__(self):
        if not (self.internal_refresh_period > 0):
            raise ValueError("internal_refresh_period must be positive")
        if self.staleness_hold and self.interface is not Interface.WEB:
            raise ValueError("staleness_hold applies to the web interface only")

    @property
    def effective_hold(self) -> float:
        return self.internal_refresh_period + self.staleness_hold

    def hold_start(self, t: float) -> float:
        return math.floor(t / self.effective_hold) * self.effective_hold


def sampled_value(t: float, field_name: str, profile: InterfaceProfile,
                  model: ScenarioModel) -> MeasurementValue:
    """Zero-order hold then quantize: the value an interface reports at t."""
    if field_name not in profile.grain_map:
        raise NoCoverageEntry(
            f"field {field_name!r} not covered by {profile.interface.value} profile"
        )
    t_eff = profile.hold_start(t)
    return quantize(
        model.truth(field_name, t_eff),
        profile.grain_map[field_name],
        _FIELD_UNITS.get(field_name, Unit.NONE),
    )


@dataclass(frozen=True)
class DeviceIdentity:
    """Static identity constants rendered verbatim by every interface."""

    mcc: str = "286"
    mnc: str = "01"
    nr_cell_id: int = 16400395
    tac: int = 1000
    pci: int = 2
    band: int = 258
    bandwidth_mhz: float = 200.0
    scs_khz: float = 120.0
    arfcn: int = 2058427
    duplex: Duplex = Duplex.TDD
    freq_range_type: FreqRange = FreqRange.FR2


@dataclass(frozen=True)
class DeviceProfile:
    """One emulated CPE: identity constants plus its three interface profiles."""

    device: str
    identity: DeviceIdentity
    web: InterfaceProfile
    at: InterfaceProfile
    tm: InterfaceProfile
    web_username: str | None = "admin"
    web_password: str | None = "admin"
    # Offsets of the populated RSSI branches relative to RSRP; chosen so the
    # boresight level reproduces the branch readings in the vendor response.
    rssi_branch_offsets: tuple[float, ...] = (-6.3, -0.6)
    rssi_slot_count: int = 4
    rssi_declared_count: int = 3

    def interface_profile(self, interface: Interface) -> InterfaceProfile:
        return {Interface.WEB: self.web, Interface.AT: self.at, Interface.TM: self.tm}[interface]


def default_device_profile(device: str) -> DeviceProfile:
    """Default profiles calibrated to the observed interface behaviors:
    TM refreshes at 1 s with 0.01 grain, AT at 0.25 s with integer RSRP,
    and the dashboards hold readings for ~3 s."""
    if device == CPE_A:
        identity = DeviceIdentity(nr_cell_id=16400395)
        web = InterfaceProfile(
            interface=Interface.WEB, device=device,
            internal_refresh_period=1.0, staleness_hold=3.0,
            grain_map={"rsrp": 0.1, "rsrq": 0.1, "snr": 1.0, "bandwidth": 0.1},
        )
        at = InterfaceProfile(
            interface=Interface.AT, device=device,
            internal_refresh_period=0.25,
            grain_map={"rsrp": 1.0, "rsrq": 1.0, "sinr": 0.1, "rssi": 0.1,
                       "bandwidth": 0.1},
            at_dialect=AtDialect.DEBUG,
            unsupported_command_behavior=UnsupportedCommandBehavior.ERROR,
        )
    elif device == CPE_B:
        identity = DeviceIdentity(nr_cell_id=16400398)
        web = InterfaceProfile(
            interface=Interface.WEB, device=device,
            internal_refresh_period=1.0, staleness_hold=3.0,
            grain_map={"rsrp": 1.0, "rsrq": 1.0, "sinr": 0.1},
        )
        at = InterfaceProfile(
            interface=Interface.AT, device=device,
            internal_refresh_period=0.25,
            grain_map={"rsrp": 1.0, "rsrq": 1.0, "sinr": 0.5, "bandwidth": 1.0,
                       "scs": 1.0},
            at_dialect=AtDialect.SGCELLINFOEX,
            unsupported_command_behavior=UnsupportedCommandBehavior.SILENT,
        )
    else:
        raise ValueError(f"unknown device profile {device!r}")
    tm = InterfaceProfile(
        interface=Interface.TM, device=device,
        internal_refresh_period=1.0,
        grain_map={"rsrp": 0.01, "rsrq": 0.01, "sinr": 0.01, "scs": 1.0},
    )
    return DeviceProfile(device=device, identity=identity, web=web, at=at, tm=tm)


def _static_measure(value: float, grain: float, unit: Unit) -> MeasurementValue:
    return quantize(value, grain, unit)


def _cell(rat_raw: str, **fields) -> CellIdentity:
    return CellIdentity(rat=normalize_rat(rat_raw), rat_raw=rat_raw, **fields)


def compose_snapshot(interface: Interface, profile: DeviceProfile, t: float,
                     model: ScenarioModel) -> KpiSnapshot:
    """The snapshot an interface would report at scenario time t, before
    serialization to its wire format."""
    iface = profile.interface_profile(interface)
    ident = profile.identity
    device = profile.device

    if interface is Interface.WEB and device == CPE_A:
        cell = _cell(
            "5G", mcc=ident.mcc, mnc=ident.mnc,
            nr_cell_id=ident.nr_cell_id, pci=ident.pci,
            band=ident.band, band_raw=f"n{ident.band}", arfcn=ident.arfcn,
        )
        radio = RadioMetrics(
            rsrp=sampled_value(t, "rsrp", iface, model),
            rsrq=sampled_value(t, "rsrq", iface, model),
            snr=sampled_value(t, "snr", iface, model),
            bandwidth=_static_measure(ident.bandwidth_mhz, iface.grain_map["bandwidth"], Unit.MHZ),
        )
        method = Method.WEB
    elif interface is Interface.WEB and device == CPE_B:
        cell = _cell(
            "5G", pci=ident.pci, band=ident.band, band_raw=f"n{ident.band}",
        )
        radio = RadioMetrics(
            rsrp=sampled_value(t, "rsrp", iface, model),
            rsrq=sampled_value(t, "rsrq", iface, model),
            sinr=sampled_value(t, "sinr", iface, model),
        )
        method = Method.WEB
    elif interface is Interface.AT and iface.at_dialect is AtDialect.DEBUG:
        rssi_grain = iface.grain_map["rssi"]
        rsrp_truth = model.truth("rssi", iface.hold_start(t))
        branches: list[MeasurementValue | None] = [
            quantize(rsrp_truth + offset, rssi_grain, Unit.DBM)
            for offset in profile.rssi_branch_offsets
        ]
        branches += [None] * (profile.rssi_slot_count - len(branches))
        cell = _cell(
            "NR5G_SA", mcc=ident.mcc, mnc=ident.mnc,
            nr_cell_id=ident.nr_cell_id, tac=ident.tac,
            band=ident.band, band_raw=f"n{ident.band}", arfcn=ident.arfcn,
        )
        radio = RadioMetrics(
            rssi_branches=tuple(branches),
            rssi_branch_count=profile.rssi_declared_count,
            rsrp=sampled_value(t, "rsrp", iface, model),
            rsrq=sampled_value(t, "rsrq", iface, model),
            sinr=sampled_value(t, "sinr", iface, model),
            bandwidth=_static_measure(ident.bandwidth_mhz, iface.grain_map["bandwidth"], Unit.MHZ),
        )
        method = Method.AT_DEBUG
    elif interface is Interface.AT:
        cell = _cell(
            "5G", mcc=ident.mcc, mnc=ident.mnc,
            nr_cell_id=ident.nr_cell_id, tac=ident.tac, pci=ident.pci,
            band=ident.band, band_raw=str(ident.band), arfcn=ident.arfcn,
        )
        radio = RadioMetrics(
            rsrp=sampled_value(t, "rsrp", iface, model),
            rsrq=sampled_value(t, "rsrq", iface, model),
            sinr=sampled_value(t, "sinr", iface, model),
            bandwidth=_static_measure(ident.bandwidth_mhz, iface.grain_map["bandwidth"], Unit.MHZ),
            scs=_static_measure(ident.scs_khz, iface.grain_map["scs"], Unit.KHZ),
            freq_range_type=ident.freq_range_type,
            duplex=ident.duplex,
        )
        method = Method.AT_SGCELLINFOEX
    elif interface is Interface.TM:
        cell = _cell(
            "5GNR", pci=ident.pci,
            band=ident.band, band_raw=str(ident.band), arfcn=ident.arfcn,
        )
        radio = RadioMetrics(
            rsrp=sampled_value(t, "rsrp", iface, model),
            rsrq=sampled_value(t, "rsrq", iface, model),
            sinr=sampled_value(t, "sinr", iface, model),
            scs=_static_measure(ident.scs_khz, iface.grain_map["scs"], Unit.KHZ),
            duplex=ident.duplex,
        )
        method = Method.XCAL_L3
    else:
        raise ValueError(f"unsupported interface {interface!r}")

    return KpiSnapshot(method=method, device=device, cell=cell, radio=radio)
