from __future__ import annotations

import pytest

from kpiprobe.config import (
    CampaignConfig,
    DeviceConfig,
    default_selectors,
    load_config,
)
from kpiprobe.model import CPE_A, CPE_B

EXAMPLE_TOML = """
seed = 7
noise = false

[scenario]
boresight_rsrp = -80.0
rotation_period = 45.0

[campaign]
duration = 12.0
period = 0.5
out_dir = "results"

[devices.cpe-a]
web_port = 18080
at_port = 19923
tm_port = 19925
username = "root"
password = "hunter2"

[devices.cpe-a.selectors]
rsrp = "td#rsrp-cell"

[devices.cpe-b]
web_port = 18081
at_port = 19924
tm_port = 19926
"""


def test_load_config_file(tmp_path):
    path = tmp_path / "campaign.toml"
    path.write_text(EXAMPLE_TOML)
    config = load_config(str(path))
    assert config.scenario.seed == 7
    assert config.scenario.noise_enabled is False
    assert config.scenario.boresight_rsrp == -80.0
    assert config.scenario.rotation_period == 45.0
    assert config.duration == 12.0
    assert config.period == 0.5
    assert config.out_dir == "results"
    device_a = config.device(CPE_A)
    assert device_a.web_port == 18080
    assert device_a.username == "root"
    assert device_a.selector_paths["rsrp"] == "td#rsrp-cell"
    # unspecified selectors fall back to the defaults
    assert config.device(CPE_B).selector_paths["rsrp"] == "div#nr-rsrp/b"


def test_overrides_beat_file_values(tmp_path):
    path = tmp_path / "campaign.toml"
    path.write_text(EXAMPLE_TOML)
    config = load_config(str(path), seed=42, noise=True, duration=3.0,
                         rotation_period=90.0)
    assert config.scenario.seed == 42
    assert config.scenario.noise_enabled is True
    assert config.scenario.rotation_period == 90.0
    assert config.duration == 3.0


def test_defaults_without_file():
    config = load_config(None)
    assert [d.device for d in config.devices] == [CPE_A]
    assert config.duration == 30.0
    assert config.period == 0.25
    assert config.scenario.rotation_period == 90.0


def test_duplicate_ports_rejected():
    with pytest.raises(ValueError, match="unique"):
        CampaignConfig(devices=[
            DeviceConfig(device=CPE_A, web_port=9000, at_port=9001, tm_port=9002),
            DeviceConfig(device=CPE_B, web_port=9000, at_port=9003, tm_port=9004),
        ])


def test_unknown_device_rejected(tmp_path):
    path = tmp_path / "campaign.toml"
    path.write_text("[devices.cpe-z]\nweb_port = 1\n")
    with pytest.raises(ValueError, match="cpe-z"):
        load_config(str(path))


def test_profile_overrides_from_file(tmp_path):
    path = tmp_path / "campaign.toml"
    path.write_text("""
[devices.cpe-a]
web_port = 18080
at_port = 19923
tm_port = 19925

[devices.cpe-a.web]
staleness_hold = 5.0

[devices.cpe-a.at]
internal_refresh_period = 0.5
unsupported_command_behavior = "silent"
""")
    from kpiprobe.config import build_emulator
    from kpiprobe.emulator import ScenarioModel, UnsupportedCommandBehavior

    config = load_config(str(path))
    emulator = build_emulator(config.device(CPE_A), ScenarioModel(), ephemeral=True)
    assert emulator.profile.web.staleness_hold == 5.0
    assert emulator.profile.web.effective_hold == 6.0
    assert emulator.profile.at.internal_refresh_period == 0.5
    assert (emulator.profile.at.unsupported_command_behavior
            is UnsupportedCommandBehavior.SILENT)
    # grain maps stay the device column's
    assert emulator.profile.at.grain_map["rsrp"] == 1.0


def test_unknown_profile_override_rejected():
    with pytest.raises(ValueError, match="unknown profile override"):
        DeviceConfig(device=CPE_A, profile_overrides={"web": {"grain_map": {}}})
    with pytest.raises(ValueError, match="unknown interface"):
        DeviceConfig(device=CPE_A, profile_overrides={"usb": {}})


def test_default_selector_maps_cover_their_columns():
    assert set(default_selectors(CPE_A).selectors) == {
        "rat", "mcc", "mnc", "nr_cell_id", "pci", "band", "bandwidth",
        "arfcn", "rsrp", "rsrq", "snr",
    }
    assert set(default_selectors(CPE_B).selectors) == {
        "rat", "pci", "band", "rsrp", "rsrq", "sinr",
    }
