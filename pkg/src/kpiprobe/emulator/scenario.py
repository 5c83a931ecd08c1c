"""Ground-truth signal model for the rotating-CPE scenario.

The CPE sits on a tripod that rotates in azimuth; received power follows the
device's horizontal pattern, modeled as a cosine-power main lobe clamped at a
back-lobe attenuation floor. RSRQ and SINR are affine functions of the RSRP
trace so all reported fields co-vary plausibly. The noise term is a pure
function of (seed, t), which keeps every run bit-reproducible.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

_TINY = 1e-12


@dataclass(frozen=True)
class ScenarioModel:
    boresight_rsrp: float = -78.0
    rotation_period: float = 90.0
    pattern_exponent: float = 3.0
    pattern_floor: float = -25.0
    noise_enabled: bool = True
    noise_sigma: float = 0.75
    seed: int = 42
    rsrq_offset: float = -11.0
    rsrq_slope: float = 0.3
    sinr_offset: float = 14.0
    sinr_slope: float = 0.8

    def pattern_gain(self, theta_deg: float) -> float:
        """Azimuth pattern attenuation in dB: 0 at boresight, clamped at the
        back-lobe floor (the clamp binds at 180 deg, where the cosine nulls)."""
        c = abs(math.cos(math.radians(theta_deg) / 2.0))
        if c < _TINY:
            return self.pattern_floor
        gain = 20.0 * self.pattern_exponent * math.log10(c)
        return max(self.pattern_floor, gain)

    def _noise(self, t: float) -> float:
        if not self.noise_enabled or self.noise_sigma == 0.0:
            return 0.0
        key = struct.pack(">qd", self.seed, t)
        digest = hashlib.blake2b(key, digest_size=16).digest()
        a, b = struct.unpack(">QQ", digest)
        u1 = (a + 1) / (2.0**64 + 2)
        u2 = b / 2.0**64
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        # Clamp so the trace provably stays inside the documented envelope.
        return self.noise_sigma * max(-5.0, min(5.0, z))

    def rsrp(self, t: float) -> float:
        """Ground-truth RSRP in dBm at scenario time t (seconds)."""
        if t < 0:
            raise ValueError(f"scenario time must be >= 0, got {t}")
        theta = 360.0 * t / self.rotation_period
        return self.boresight_rsrp + self.pattern_gain(theta) + self._noise(t)

    def rsrp_extended(self, t: float) -> float:
        """RSRP trace extended to negative times by rotation periodicity,
        for lag-shifted comparisons near the scenario start."""
        while t < 0:
            t += self.rotation_period
        return self.rsrp(t)

    def rsrq(self, t: float) -> float:
        return self.rsrq_offset + self.rsrq_slope * (self.rsrp(t) - self.boresight_rsrp)

    def sinr(self, t: float) -> float:
        return self.sinr_offset + self.sinr_slope * (self.rsrp(t) - self.boresight_rsrp)

    def truth(self, field: str, t: float) -> float:
        """Noisy ground truth for one dynamic KPI field."""
        if field in ("rsrp", "rssi"):
            return self.rsrp(t)
        if field == "rsrq":
            return self.rsrq(t)
        if field in ("sinr", "snr"):
            return self.sinr(t)
        raise KeyError(f"no ground-truth trace for field {field!r}")

    def clean(self) -> "ScenarioModel":
        """The same scenario with noise disabled (reference trace for metrics)."""
        from dataclasses import replace

        return replace(self, noise_enabled=False)

    def max_abs_slope(self, duration: float, step: float = 0.01) -> float:
        """Numeric bound on |d rsrp/dt| of the noise-free trace over [0, duration]."""
        clean = self.clean()
        worst = 0.0
        t = 0.0
        previous = clean.rsrp(0.0)
        while t < duration:
            t_next = min(t + step, duration)
            current = clean.rsrp(t_next)
            if t_next > t:
                worst = max(worst, abs(current - previous) / (t_next - t))
            previous = current
            t = t_next
        return worst


def ground_truth_rsrp(t: float, model: ScenarioModel) -> float:
    return model.rsrp(t)
