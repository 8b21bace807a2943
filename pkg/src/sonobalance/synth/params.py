"""Mapping from a sway point to the full audio-render parameter set.

Each region has its own coding:

* A -- reassuring full-band pink noise at the user's reference volume.
* B -- wide-band filtered noise (128 Hz .. 14263 Hz) at 1.5x volume.
* C -- band-passed noise (415 Hz .. 4390 Hz) at 3x volume.
* D -- 800 Hz-wide narrow-band noise whose lower cut-off rises
  exponentially with the roll angle, so the perceived pitch tracks tilt.
* E/F -- the same narrow-band noise gated by a 50% duty square wave whose
  period shrinks as the pitch angle grows, panned hard left (E) or hard
  right (F).

In regions A-D the stereo image pans with the pitch angle under an
equal-power law, so perceived loudness stays constant across the arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..geometry import Region, SwayPoint, classify

__all__ = [
    "NoiseSource",
    "SynthParams",
    "RenderConfig",
    "MAX_ANGLE_DEG",
    "NARROW_BAND_WIDTH_HZ",
    "GATE_DUTY",
    "FULL_BAND_HZ",
    "LOW_WARNING_BAND_HZ",
    "MEDIUM_WARNING_BAND_HZ",
    "lower_cutoff_hz",
    "gate_period_s",
    "pan_position",
    "equal_power_gains",
    "map_params",
]

MAX_ANGLE_DEG = 20.0
NARROW_BAND_WIDTH_HZ = 800.0
GATE_DUTY = 0.5

FULL_BAND_HZ = (20.0, 20000.0)
LOW_WARNING_BAND_HZ = (128.0, 14263.0)
MEDIUM_WARNING_BAND_HZ = (415.0, 4390.0)

_VOLUME_SAFETY = 1.0
_VOLUME_LOW = 1.5
_VOLUME_HIGH = 3.0


class NoiseSource(Enum):
    PINK_NOISE = "pink_noise"
    FILTERED_NOISE = "filtered_noise"
    NARROW_BAND_NOISE = "narrow_band_noise"


@dataclass(frozen=True)
class SynthParams:
    """Complete description of the warning sound for one sway sample."""

    region: Region
    source: NoiseSource
    band_low: float
    band_high: float
    gate_period: float | None
    gate_duty: float
    volume_mult: float
    pan: float


@dataclass
class RenderConfig:
    """Renderer settings; defaults keep block latency at ~5.3 ms."""

    sample_rate: int = 48000
    block_size: int = 256
    reference_volume: float = 0.1
    crossfade: float = 0.03
    param_smoothing: float = 0.01
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")
        if not 0.0 < self.reference_volume <= 1.0:
            raise ValueError(f"reference_volume must be in (0, 1], got {self.reference_volume}")
        if self.crossfade < 0 or self.param_smoothing < 0:
            raise ValueError("crossfade and param_smoothing must be non-negative")


def _clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def lower_cutoff_hz(roll_deg: float) -> float:
    """Lower cut-off of the narrow warning band, 256 Hz .. 4096 Hz.

    Exponential in the roll angle: doubling every 10 degrees, so equal tilt
    steps read as equal perceived pitch steps.
    """
    y = _clamp(roll_deg, -MAX_ANGLE_DEG, MAX_ANGLE_DEG)
    return 2.0 ** (8.0 + 4.0 * (y + MAX_ANGLE_DEG) / (2.0 * MAX_ANGLE_DEG))


def gate_period_s(pitch_deg: float) -> float:
    """Square-wave gate period in seconds, shrinking as |pitch| grows.

    8^h milliseconds with h falling linearly from 2.5 at 0 degrees to 2.0
    at 20 degrees, i.e. ~181 ms down to 64 ms (a ~15.6 Hz pulse train at
    full tilt).
    """
    a = min(abs(pitch_deg), MAX_ANGLE_DEG)
    h = 2.5 - 0.5 * a / MAX_ANGLE_DEG
    return 0.001 * 8.0 ** h


def pan_position(pitch_deg: float) -> float:
    """Stereo pan in [-1, +1]; negative pitch drives the left channel up."""
    return _clamp(pitch_deg / MAX_ANGLE_DEG, -1.0, 1.0)


def equal_power_gains(pan: float) -> tuple[float, float]:
    """(left, right) gains for a pan position; left^2 + right^2 == 1."""
    theta = (pan + 1.0) * math.pi / 4.0
    return math.cos(theta), math.sin(theta)


def map_params(point: SwayPoint, cfg: RenderConfig | None = None) -> SynthParams:
    """Derive the render parameters for one sway point.

    Pure function of the point; ``cfg`` is accepted so callers can thread
    their render configuration through, but the mapping itself does not
    depend on it. Coordinates are clamped to +-20 degrees before the
    frequency, gate and pan formulas are evaluated.
    """
    region = classify(point)
    x = _clamp(point.x, -MAX_ANGLE_DEG, MAX_ANGLE_DEG)
    y = _clamp(point.y, -MAX_ANGLE_DEG, MAX_ANGLE_DEG)

    if region is Region.A:
        return SynthParams(
            region=region,
            source=NoiseSource.PINK_NOISE,
            band_low=FULL_BAND_HZ[0],
            band_high=FULL_BAND_HZ[1],
            gate_period=None,
            gate_duty=GATE_DUTY,
            volume_mult=_VOLUME_SAFETY,
            pan=pan_position(x),
        )
    if region is Region.B:
        return SynthParams(
            region=region,
            source=NoiseSource.FILTERED_NOISE,
            band_low=LOW_WARNING_BAND_HZ[0],
            band_high=LOW_WARNING_BAND_HZ[1],
            gate_period=None,
            gate_duty=GATE_DUTY,
            volume_mult=_VOLUME_LOW,
            pan=pan_position(x),
        )
    if region is Region.C:
        return SynthParams(
            region=region,
            source=NoiseSource.FILTERED_NOISE,
            band_low=MEDIUM_WARNING_BAND_HZ[0],
            band_high=MEDIUM_WARNING_BAND_HZ[1],
            gate_period=None,
            gate_duty=GATE_DUTY,
            volume_mult=_VOLUME_HIGH,
            pan=pan_position(x),
        )

    f_low = lower_cutoff_hz(y)
    f_high = f_low + NARROW_BAND_WIDTH_HZ
    if region is Region.D:
        return SynthParams(
            region=region,
            source=NoiseSource.NARROW_BAND_NOISE,
            band_low=f_low,
            band_high=f_high,
            gate_period=None,
            gate_duty=GATE_DUTY,
            volume_mult=_VOLUME_HIGH,
            pan=pan_position(x),
        )
    # E/F: gated narrow band, hard-panned to the side the subject leans to.
    return SynthParams(
        region=region,
        source=NoiseSource.NARROW_BAND_NOISE,
        band_low=f_low,
        band_high=f_high,
        gate_period=gate_period_s(x),
        gate_duty=GATE_DUTY,
        volume_mult=_VOLUME_HIGH,
        pan=-1.0 if region is Region.E else 1.0,
    )
