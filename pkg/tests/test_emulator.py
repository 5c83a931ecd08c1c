from __future__ import annotations

from dataclasses import replace

import pytest

from conftest import run_sim_campaign
from kpiprobe.clock import SimulatedClock
from kpiprobe.emulator import (
    CpeEmulator,
    Interface,
    ScenarioModel,
    UnsupportedCommandBehavior,
    compose_snapshot,
    default_device_profile,
    ground_truth_rsrp,
    render_response,
    sampled_value,
)
from kpiprobe.emulator.profiles import InterfaceProfile
from kpiprobe.errors import NoCoverageEntry
from kpiprobe.model import CPE_A, CPE_B, Method, DEFAULT_COVERAGE, validate_snapshot

CLEAN = ScenarioModel(noise_enabled=False)


# --- ground truth ------------------------------------------------------------

def test_boresight_is_reference_level():
    assert ground_truth_rsrp(0.0, CLEAN) == pytest.approx(-78.0)


def test_back_lobe_clamps_at_pattern_floor():
    t_back = CLEAN.rotation_period / 2
    assert ground_truth_rsrp(t_back, CLEAN) == pytest.approx(-78.0 + CLEAN.pattern_floor)
    assert ground_truth_rsrp(t_back, CLEAN) == pytest.approx(-103.0)


def test_rotation_is_periodic():
    assert ground_truth_rsrp(CLEAN.rotation_period, CLEAN) == pytest.approx(
        ground_truth_rsrp(0.0, CLEAN)
    )


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        CLEAN.rsrp(-0.1)


def test_extended_trace_wraps_periodically():
    assert CLEAN.rsrp_extended(-1.0) == pytest.approx(
        CLEAN.rsrp(CLEAN.rotation_period - 1.0)
    )


def test_trace_deterministic_per_seed():
    noisy = ScenarioModel(seed=5)
    other = ScenarioModel(seed=6)
    points = [0.33, 1.0, 7.25]
    assert [noisy.rsrp(t) for t in points] == [ScenarioModel(seed=5).rsrp(t) for t in points]
    assert any(noisy.rsrp(t) != other.rsrp(t) for t in points)


def test_trace_stays_in_documented_envelope():
    noisy = ScenarioModel(seed=3)
    low = noisy.boresight_rsrp + noisy.pattern_floor - 5 * noisy.noise_sigma
    high = noisy.boresight_rsrp + 5 * noisy.noise_sigma
    for k in range(4000):
        value = noisy.rsrp(k * 0.025)
        assert low - 1e-9 <= value <= high + 1e-9


def test_affine_companion_traces():
    assert CLEAN.rsrq(0.0) == pytest.approx(CLEAN.rsrq_offset)
    assert CLEAN.sinr(0.0) == pytest.approx(CLEAN.sinr_offset)
    # companion traces move with the RSRP trace
    drop = CLEAN.rsrp(20.0) - CLEAN.boresight_rsrp
    assert CLEAN.sinr(20.0) == pytest.approx(CLEAN.sinr_offset + CLEAN.sinr_slope * drop)


# --- sampled_value -------------------------------------------------------------

TM_PROFILE = default_device_profile(CPE_A).tm
AT_PROFILE = default_device_profile(CPE_A).at
WEB_B_PROFILE = default_device_profile(CPE_B).web


def test_hold_window_repeats_value():
    noisy = ScenarioModel(seed=11)
    first = sampled_value(1.30, "rsrp", TM_PROFILE, noisy)
    second = sampled_value(1.80, "rsrp", TM_PROFILE, noisy)
    assert first == second
    assert first.grain == 0.01


def test_integer_grain_quantizes():
    model = replace(CLEAN, boresight_rsrp=-78.56)
    assert sampled_value(0.0, "rsrp", AT_PROFILE, model).value == -79.0


def test_web_staleness_extends_hold():
    noisy = ScenarioModel(seed=12)
    assert WEB_B_PROFILE.effective_hold == 4.0
    assert sampled_value(0.5, "rsrp", WEB_B_PROFILE, noisy) == sampled_value(
        3.9, "rsrp", WEB_B_PROFILE, noisy
    )


def test_uncovered_field_raises():
    with pytest.raises(NoCoverageEntry):
        sampled_value(0.0, "rssi", TM_PROFILE, CLEAN)


def test_staleness_only_for_web():
    with pytest.raises(ValueError):
        InterfaceProfile(interface=Interface.TM, device=CPE_A,
                         internal_refresh_period=1.0, grain_map={"rsrp": 0.01},
                         staleness_hold=2.0)


def test_refresh_period_must_be_positive():
    with pytest.raises(ValueError):
        InterfaceProfile(interface=Interface.TM, device=CPE_A,
                         internal_refresh_period=0.0, grain_map={})


# --- composed snapshots ----------------------------------------------------------

@pytest.mark.parametrize("device,interface,method", [
    (CPE_A, Interface.WEB, Method.WEB),
    (CPE_B, Interface.WEB, Method.WEB),
    (CPE_A, Interface.AT, Method.AT_DEBUG),
    (CPE_B, Interface.AT, Method.AT_SGCELLINFOEX),
    (CPE_A, Interface.TM, Method.XCAL_L3),
    (CPE_B, Interface.TM, Method.XCAL_L3),
])
def test_composed_snapshots_cover_their_columns(device, interface, method):
    profile = default_device_profile(device)
    snapshot = compose_snapshot(interface, profile, 4.2, CLEAN)
    assert snapshot.method is method
    result = validate_snapshot(snapshot, DEFAULT_COVERAGE)
    assert result.ok, result.violations


def test_static_identity_fields_match_vendor_responses():
    profile_a = default_device_profile(CPE_A)
    at_snapshot = compose_snapshot(Interface.AT, profile_a, 0.0, CLEAN)
    assert at_snapshot.cell.mcc == "286" and at_snapshot.cell.mnc == "01"
    assert at_snapshot.cell.nr_cell_id == 16400395
    assert at_snapshot.cell.tac == 1000
    assert at_snapshot.cell.band_raw == "n258"
    assert at_snapshot.cell.arfcn == 2058427
    assert at_snapshot.radio.bandwidth.value == 200.0
    assert at_snapshot.radio.rssi_branch_count == 3

    profile_b = default_device_profile(CPE_B)
    sg_snapshot = compose_snapshot(Interface.AT, profile_b, 0.0, CLEAN)
    assert sg_snapshot.cell.nr_cell_id == 16400398
    assert sg_snapshot.cell.pci == 2
    assert sg_snapshot.radio.scs.value == 120.0
    assert sg_snapshot.cell.band_raw == "258"


def test_rssi_branches_track_rsrp_at_boresight():
    snapshot = compose_snapshot(Interface.AT, default_device_profile(CPE_A), 0.0, CLEAN)
    assert snapshot.radio.rssi_branches[0].value == -84.3
    assert snapshot.radio.rssi_branches[1].value == -78.6
    assert snapshot.radio.rssi_branches[2] is None


def test_tm_boresight_value_exact():
    snapshot = compose_snapshot(Interface.TM, default_device_profile(CPE_B), 0.0, CLEAN)
    assert snapshot.radio.rsrp.value == -78.0
    assert snapshot.radio.rsrp.grain == 0.01


def test_render_response_shapes():
    profile = default_device_profile(CPE_A)
    html = render_response(Interface.WEB, profile, 0.0, CLEAN)
    assert html.startswith("<html>") and 'id="rsrp"' in html
    at_text = render_response(Interface.AT, profile, 0.0, CLEAN)
    assert at_text.endswith("OK\r\n") and "RAT:NR5G_SA" in at_text
    tm_bytes = render_response(Interface.TM, profile, 0.0, CLEAN)
    assert tm_bytes[:4] == (len(tm_bytes) - 4).to_bytes(4, "big")


# --- end-to-end fidelity -----------------------------------------------------------

def test_collector_parsed_equals_sampled_value():
    # the campaign's parsed samples reproduce sampled_value outputs exactly
    config, by_method = run_sim_campaign(device=CPE_A, noise=True, seed=21,
                                         duration=5.0)
    profile = default_device_profile(CPE_A)
    for method, interface in ((Method.WEB, Interface.WEB),
                              (Method.AT_DEBUG, Interface.AT),
                              (Method.XCAL_L3, Interface.TM)):
        series = by_method[method]
        assert len(series) == 20
        iface = profile.interface_profile(interface)
        for sample in series.samples:
            t = sample.timestamp.monotonic
            expected = sampled_value(t, "rsrp", iface, config.scenario)
            assert sample.radio.rsrp == expected


def test_cross_method_consistency_bound():
    # noise off: |truth - parsed| <= grain/2 + max-slope * effective hold
    config, by_method = run_sim_campaign(device=CPE_A, noise=False, seed=22,
                                         duration=30.0)
    slope_bound = config.scenario.max_abs_slope(30.0)
    profile = default_device_profile(CPE_A)
    for method, interface in ((Method.WEB, Interface.WEB),
                              (Method.AT_DEBUG, Interface.AT),
                              (Method.XCAL_L3, Interface.TM)):
        iface = profile.interface_profile(interface)
        grain = iface.grain_map["rsrp"]
        bound = grain / 2 + slope_bound * iface.effective_hold + 1e-9
        for sample in by_method[method].samples:
            truth = config.scenario.rsrp(sample.timestamp.monotonic)
            assert abs(truth - sample.radio.rsrp.value) <= bound


def test_emulator_serving_is_deterministic():
    def poll_bytes(seed):
        clock = SimulatedClock()
        with CpeEmulator(default_device_profile(CPE_A), ScenarioModel(seed=seed),
                         clock=clock) as emulator:
            out = []
            import socket

            for offset in (0.0, 0.25, 1.5):
                clock.advance_to(offset)
                with socket.create_connection(("127.0.0.1", emulator.at_port)) as sock:
                    sock.sendall(b"AT^DEBUG?\r\n")
                    sock.settimeout(2.0)
                    data = b""
                    while b"OK\r\n" not in data:
                        data += sock.recv(4096)
                    out.append(data)
            return out

    assert poll_bytes(33) == poll_bytes(33)
    assert poll_bytes(33) != poll_bytes(34)


def test_unsupported_behavior_flags():
    assert (default_device_profile(CPE_A).at.unsupported_command_behavior
            is UnsupportedCommandBehavior.ERROR)
    assert (default_device_profile(CPE_B).at.unsupported_command_behavior
            is UnsupportedCommandBehavior.SILENT)
