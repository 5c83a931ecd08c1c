from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kpiprobe.clock import SimulatedClock
from kpiprobe.collector import run_campaign
from kpiprobe.config import CampaignConfig, DeviceConfig, build_collectors, build_emulator
from kpiprobe.model import CPE_A


def run_sim_campaign(device: str = CPE_A, noise: bool = True, seed: int = 42,
                     duration: float = 30.0, **scenario_overrides):
    """One simulated-clock campaign against an in-process emulator; returns
    (campaign config, {method: series})."""
    clock = SimulatedClock()
    config = CampaignConfig(devices=[DeviceConfig(device=device)])
    config.scenario = replace(
        config.scenario, noise_enabled=noise, seed=seed, **scenario_overrides
    )
    emulator = build_emulator(config.devices[0], config.scenario, clock=clock,
                              ephemeral=True)
    emulator.start()
    ports = {device: {"web": emulator.web_port, "at": emulator.at_port,
                      "tm": emulator.tm_port}}
    try:
        series_map = run_campaign(
            build_collectors(config, clock=clock, ports=ports),
            duration=duration, clock=clock,
        )
    finally:
        emulator.stop()
    return config, {s.descriptor.method: s for s in series_map.values()}


@pytest.fixture(scope="session")
def campaign_cpe_a():
    """Default 30 s noisy campaign against CPE-A, shared across tests."""
    return run_sim_campaign(device=CPE_A, noise=True, seed=42)


def rsrp_series(series):
    times = [s.timestamp.unix for s in series.samples]
    values = [s.radio.rsrp.value for s in series.samples if s.radio.rsrp is not None]
    return times, values
