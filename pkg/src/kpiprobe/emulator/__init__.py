"""CPE device emulator: rotating-signal scenario, per-interface profiles,
wire renderers, and the three network listeners."""

from .profiles import (
    DeviceIdentity,
    DeviceProfile,
    Interface,
    InterfaceProfile,
    UnsupportedCommandBehavior,
    compose_snapshot,
    default_device_profile,
    sampled_value,
)
from .render import (
    encode_l3_report,
    l3_report_text,
    render_debug_lines,
    render_sgcellinfoex_lines,
    render_web_page,
)
from .scenario import ScenarioModel, ground_truth_rsrp
from .servers import L3_EXTRAS, CpeEmulator, render_response

__all__ = [
    "CpeEmulator",
    "DeviceIdentity",
    "DeviceProfile",
    "Interface",
    "InterfaceProfile",
    "L3_EXTRAS",
    "ScenarioModel",
    "UnsupportedCommandBehavior",
    "compose_snapshot",
    "default_device_profile",
    "encode_l3_report",
    "ground_truth_rsrp",
    "l3_report_text",
    "render_debug_lines",
    "render_response",
    "render_sgcellinfoex_lines",
    "render_web_page",
    "sampled_value",
]
