"""Campaign configuration: scenario parameters, device endpoints, selector
maps, and the glue that builds emulators and collectors from them.

Configuration lives in a TOML file; command-line flags override file
values. Every knob has a default, so the zero-config pipeline works out of
the box against the bundled device profiles.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .atcmd import AtCollector
from .collector import KpiSeries
from .emulator import (
    CpeEmulator,
    ScenarioModel,
    UnsupportedCommandBehavior,
    default_device_profile,
)
from .model import CPE_A, CPE_B
from .tm import TmCollector
from .web import SelectorMap, WebCollector, WebSessionConfig

DEFAULT_PORTS = {
    CPE_A: {"web": 8080, "at": 9923, "tm": 9925},
    CPE_B: {"web": 8081, "at": 9924, "tm": 9926},
}

_DEFAULT_SELECTOR_PATHS = {
    CPE_A: {
        "rat": "span#rat",
        "mcc": "span#mcc",
        "mnc": "span#mnc",
        "nr_cell_id": "span#cell-id",
        "pci": "span#pci",
        "band": "span#band",
        "bandwidth": "span#bandwidth",
        "arfcn": "span#arfcn",
        "rsrp": "span#rsrp",
        "rsrq": "span#rsrq",
        "snr": "span#snr",
    },
    CPE_B: {
        "rat": "div#nr-rat/b",
        "pci": "div#nr-pci/b",
        "band": "div#nr-band/b",
        "rsrp": "div#nr-rsrp/b",
        "rsrq": "div#nr-rsrq/b",
        "sinr": "div#nr-sinr/b",
    },
}


def default_selectors(device: str) -> SelectorMap:
    return SelectorMap.from_paths(_DEFAULT_SELECTOR_PATHS[device])


# Interface-profile knobs a config file may override; quantization grains
# stay fixed per device column.
_PROFILE_OVERRIDE_KEYS = {
    "internal_refresh_period", "staleness_hold", "response_latency",
    "unsupported_command_behavior",
}


@dataclass
class DeviceConfig:
    device: str
    host: str = "127.0.0.1"
    web_port: int = 0
    at_port: int = 0
    tm_port: int = 0
    username: str | None = "admin"
    password: str | None = "admin"
    selector_paths: dict[str, str] = field(default_factory=dict)
    # per-interface profile overrides, e.g. {"web": {"staleness_hold": 5.0}}
    profile_overrides: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        if not self.selector_paths:
            self.selector_paths = dict(_DEFAULT_SELECTOR_PATHS[self.device])
        if not self.web_port:
            self.web_port = DEFAULT_PORTS[self.device]["web"]
        if not self.at_port:
            self.at_port = DEFAULT_PORTS[self.device]["at"]
        if not self.tm_port:
            self.tm_port = DEFAULT_PORTS[self.device]["tm"]
        for interface, overrides in self.profile_overrides.items():
            if interface not in ("web", "at", "tm"):
                raise ValueError(f"unknown interface {interface!r} in profile overrides")
            unknown = set(overrides) - _PROFILE_OVERRIDE_KEYS
            if unknown:
                raise ValueError(f"unknown profile override(s) {sorted(unknown)}")

    def selectors(self) -> SelectorMap:
        return SelectorMap.from_paths(self.selector_paths)

    def ports(self) -> dict[str, int]:
        return {"web": self.web_port, "at": self.at_port, "tm": self.tm_port}


@dataclass
class CampaignConfig:
    scenario: ScenarioModel = field(default_factory=ScenarioModel)
    devices: list[DeviceConfig] = field(default_factory=list)
    duration: float = 30.0
    period: float = 0.25
    out_dir: str = "out"

    def __post_init__(self):
        if not self.devices:
            self.devices = [DeviceConfig(device=CPE_A)]
        ports = [(d.host, p) for d in self.devices for p in d.ports().values()]
        if len(set(ports)) != len(ports):
            raise ValueError("device endpoint ports must be unique")

    def device(self, device_id: str) -> DeviceConfig:
        for device in self.devices:
            if device.device == device_id:
                return device
        raise KeyError(f"no device {device_id!r} in configuration")


def load_config(path: str | None = None, **overrides) -> CampaignConfig:
    """Load a TOML campaign configuration; keyword overrides win over file
    values (seed, noise, duration, out_dir, rotation_period)."""
    data: dict = {}
    if path is not None:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)

    scenario_data = dict(data.get("scenario", {}))
    if "seed" in data:
        scenario_data.setdefault("seed", data["seed"])
    if "noise" in data:
        scenario_data.setdefault("noise_enabled", data["noise"])
    for key in ("seed", "rotation_period", "noise_sigma", "boresight_rsrp",
                "pattern_exponent", "pattern_floor"):
        if overrides.get(key) is not None:
            scenario_data[key] = overrides[key]
    if overrides.get("noise") is not None:
        scenario_data["noise_enabled"] = overrides["noise"]
    scenario = ScenarioModel(**scenario_data)

    campaign_data = data.get("campaign", {})
    devices = []
    for device_id, device_data in data.get("devices", {}).items():
        if device_id not in (CPE_A, CPE_B):
            raise ValueError(f"unknown device profile {device_id!r}")
        devices.append(DeviceConfig(
            device=device_id,
            host=device_data.get("host", "127.0.0.1"),
            web_port=device_data.get("web_port", 0),
            at_port=device_data.get("at_port", 0),
            tm_port=device_data.get("tm_port", 0),
            username=device_data.get("username", "admin"),
            password=device_data.get("password", "admin"),
            selector_paths=device_data.get("selectors", {}),
            profile_overrides={
                key: dict(device_data[key])
                for key in ("web", "at", "tm") if key in device_data
            },
        ))

    config = CampaignConfig(
        scenario=scenario,
        devices=devices,
        duration=campaign_data.get("duration", 30.0),
        period=campaign_data.get("period", 0.25),
        out_dir=campaign_data.get("out_dir", "out"),
    )
    if overrides.get("duration") is not None:
        config.duration = overrides["duration"]
    if overrides.get("out_dir") is not None:
        config.out_dir = overrides["out_dir"]
    if overrides.get("period") is not None:
        config.period = overrides["period"]
    return config


def build_emulator(device_config: DeviceConfig, scenario: ScenarioModel, clock=None,
                   ephemeral: bool = False) -> CpeEmulator:
    profile = default_device_profile(device_config.device)
    profile = replace(
        profile,
        web_username=device_config.username,
        web_password=device_config.password,
    )
    for interface, overrides in device_config.profile_overrides.items():
        fields = dict(overrides)
        if "unsupported_command_behavior" in fields:
            fields["unsupported_command_behavior"] = UnsupportedCommandBehavior(
                fields["unsupported_command_behavior"].upper()
            )
        profile = replace(profile, **{
            interface: replace(getattr(profile, interface), **fields)
        })
    return CpeEmulator(
        profile=profile,
        model=scenario,
        clock=clock,
        host=device_config.host,
        web_port=0 if ephemeral else device_config.web_port,
        at_port=0 if ephemeral else device_config.at_port,
        tm_port=0 if ephemeral else device_config.tm_port,
    )


def build_collectors(config: CampaignConfig, clock=None,
                     ports: dict[str, dict[str, int]] | None = None) -> list:
    """One collector per interface per configured device.

    ``ports`` optionally overrides the configured endpoints, which is how
    the in-process pipeline points collectors at ephemeral emulator ports.
    """
    collectors = []
    for device in config.devices:
        actual = (ports or {}).get(device.device, device.ports())
        base_url = f"http://{device.host}:{actual['web']}"
        web = WebCollector(
            WebSessionConfig(
                base_url=base_url,
                device=device.device,
                username=device.username,
                password=device.password,
            ),
            selectors=device.selectors(),
            clock=clock,
        )
        web.period = config.period
        web.endpoint = base_url
        at = AtCollector(device.host, actual["at"], device=device.device, clock=clock)
        at.period = config.period
        at.endpoint = f"{device.host}:{actual['at']}"
        tm = TmCollector(device.host, actual["tm"], device=device.device, clock=clock)
        tm.period = config.period
        tm.endpoint = f"{device.host}:{actual['tm']}"
        collectors += [web, at, tm]
    return collectors


def scenario_to_dict(scenario: ScenarioModel) -> dict:
    return {
        "boresight_rsrp": scenario.boresight_rsrp,
        "rotation_period": scenario.rotation_period,
        "pattern_exponent": scenario.pattern_exponent,
        "pattern_floor": scenario.pattern_floor,
        "noise_enabled": scenario.noise_enabled,
        "noise_sigma": scenario.noise_sigma,
        "seed": scenario.seed,
        "rsrq_offset": scenario.rsrq_offset,
        "rsrq_slope": scenario.rsrq_slope,
        "sinr_offset": scenario.sinr_offset,
        "sinr_slope": scenario.sinr_slope,
    }


def write_manifest(out_dir: str, config: CampaignConfig, series_map: dict,
                   campaign_start: float) -> str:
    """Record scenario parameters and per-collector outcomes next to the
    series CSVs, so the analysis stage can rebuild the truth trace."""
    entries = []
    for series in series_map.values():
        entries.append({
            "name": series.descriptor.name,
            "method": series.descriptor.method.value,
            "device": series.descriptor.device,
            "csv": f"{series.descriptor.name}.csv",
            "samples": len(series),
            "errors": series.error_count(),
            "error_kinds": sorted({err.kind.value for err in series.errors}),
        })
    entries.sort(key=lambda e: e["name"])
    manifest = {
        "scenario": scenario_to_dict(config.scenario),
        "duration": config.duration,
        "period": config.period,
        "campaign_start_unix": campaign_start,
        "series": entries,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def read_manifest(out_dir: str) -> dict | None:
    path = os.path.join(out_dir, "manifest.json")
    if not os.path.exists(path):
        return None
    with open(path) as handle:
        return json.load(handle)


def export_series(series_map: dict, out_dir: str) -> list[str]:
    from .collector import write_series_csv

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for series in series_map.values():
        path = os.path.join(out_dir, f"{series.descriptor.name}.csv")
        write_series_csv(series, path)
        paths.append(path)
    return sorted(paths)


def series_by_name(series_map: dict) -> dict[str, KpiSeries]:
    return {series.descriptor.name: series for series in series_map.values()}
