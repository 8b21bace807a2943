"""Offline/streaming stereo renderer for the warning audio.

Rendering is organised around *chains*: one synthesis chain per region
visit, owning its own noise generator, filter memory, gate phase and
smoothed gain/pan state. Region changes swap chains under an equal-power
crossfade; in-region parameter moves (the narrow band tracking the roll
angle, pan tracking pitch) retune the active chain in place.

Every chain draws from its own seeded RNG stream and all ramps, fades and
gate phases advance by sample position, so a render is bit-identical
regardless of how the work is chopped into blocks and reproducible from
the config seed alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import signal
from scipy.io import wavfile

from ..geometry import SwayPoint
from .dsp import BAND_SECTIONS, clamp_band, pink_noise_sos, white_rms_gain
from .params import NoiseSource, RenderConfig, SynthParams, map_params

__all__ = [
    "SynthState",
    "TimelineEntry",
    "render_block",
    "render_trial",
    "params_to_dict",
    "timeline_to_json",
    "write_wav",
]

_QUARTER_PI = np.pi / 4.0
_HALF_PI = np.pi / 2.0
_CLIP_KNEE = 0.95


@dataclass(frozen=True)
class TimelineEntry:
    """One parameter change in a rendered trial."""

    t: float
    params: SynthParams


class _Ramp:
    """Linear per-sample ramp toward a target, fixed slope per ramp start."""

    __slots__ = ("start", "target", "pos", "length")

    def __init__(self, value: float, length: int):
        self.start = value
        self.target = value
        self.pos = 0
        self.length = max(1, length)

    @property
    def value(self) -> float:
        if self.pos >= self.length:
            return self.target
        u = self.pos / self.length
        return self.start + (self.target - self.start) * u

    def retarget(self, target: float) -> None:
        if target == self.target:
            return
        self.start = self.value
        self.target = target
        self.pos = 0

    def block(self, n: int) -> np.ndarray:
        if self.pos >= self.length or self.start == self.target:
            self.pos += n
            return np.full(n, self.target)
        u = np.minimum((self.pos + np.arange(1, n + 1)) / self.length, 1.0)
        self.pos += n
        return self.start + (self.target - self.start) * u


class _Chain:
    """One synthesis chain: seeded noise -> filter -> gate -> gain/pan."""

    def __init__(self, params: SynthParams, cfg: RenderConfig, state: "SynthState"):
        self.params = params
        self.cfg = cfg
        self.rng = np.random.default_rng(state._spawn_seed())
        self._design_filter(params, state)
        self.zi = np.zeros((self.sos.shape[0], 2))
        self.pos = 0  # samples rendered since chain birth
        # gate time = pos / fs + offset; offset only moves on period retunes,
        # so the gate is an exact function of sample position. Phase 0 = on.
        self.gate_offset = 0.0
        smoothing = max(1, int(round(cfg.param_smoothing * cfg.sample_rate)))
        self.gain = _Ramp(cfg.reference_volume * params.volume_mult, smoothing)
        self.pan = _Ramp(params.pan, smoothing)

    def _design_filter(self, params: SynthParams, state: "SynthState") -> None:
        fs = self.cfg.sample_rate
        if params.source is NoiseSource.PINK_NOISE:
            self.sos = pink_noise_sos(fs)
        else:
            lo, hi, warning = clamp_band(params.band_low, params.band_high, fs)
            if warning is not None:
                state.warnings.append(warning)
            self.sos = signal.butter(BAND_SECTIONS, [lo, hi], btype="bandpass", fs=fs, output="sos")
        self.norm = 1.0 / white_rms_gain(self.sos, fs)

    def retune(self, params: SynthParams, state: "SynthState") -> None:
        """In-place update for same-region parameter moves.

        The filter is redesigned at the new corners but keeps its state,
        the gate keeps its phase fraction, and gain/pan ramp to the new
        targets over the smoothing window.
        """
        old = self.params
        if (params.source, params.band_low, params.band_high) != (old.source, old.band_low, old.band_high):
            self._design_filter(params, state)
        if params.gate_period and old.gate_period and params.gate_period != old.gate_period:
            t_now = self.pos / self.cfg.sample_rate + self.gate_offset
            frac = (t_now % old.gate_period) / old.gate_period
            self.gate_offset = frac * params.gate_period - self.pos / self.cfg.sample_rate
        self.gain.retarget(self.cfg.reference_volume * params.volume_mult)
        self.pan.retarget(params.pan)
        self.params = params

    def refresh_volume(self) -> None:
        # reference_volume is live-adjustable; pick up changes between blocks
        self.gain.retarget(self.cfg.reference_volume * self.params.volume_mult)

    def render(self, frames: int) -> np.ndarray:
        fs = self.cfg.sample_rate
        mono = self.rng.standard_normal(frames)
        mono, self.zi = signal.sosfilt(self.sos, mono, zi=self.zi)
        mono *= self.norm
        period = self.params.gate_period
        if period:
            t = (self.pos + np.arange(frames)) / fs + self.gate_offset
            mono *= (t % period) < self.params.gate_duty * period
        self.pos += frames
        gain = self.gain.block(frames)
        theta = (self.pan.block(frames) + 1.0) * _QUARTER_PI
        out = np.empty((frames, 2))
        out[:, 0] = mono * gain * np.cos(theta)
        out[:, 1] = mono * gain * np.sin(theta)
        return out


class SynthState:
    """All mutable DSP state for one render session."""

    def __init__(self, cfg: RenderConfig):
        self.cfg = cfg
        self.active: _Chain | None = None
        self.fading: _Chain | None = None
        self.fade_total = max(1, int(round(cfg.crossfade * cfg.sample_rate)))
        self.fade_remaining = 0
        self.warnings: list[str] = []
        self._seed_seq = np.random.SeedSequence(cfg.rng_seed)

    def _spawn_seed(self) -> np.random.SeedSequence:
        return self._seed_seq.spawn(1)[0]


def _soft_clip(block: np.ndarray) -> np.ndarray:
    # Transparent below the knee; tanh saturation above keeps peaks < 1.0.
    over = np.abs(block) > _CLIP_KNEE
    if np.any(over):
        x = block[over]
        block[over] = np.sign(x) * (
            _CLIP_KNEE + (1.0 - _CLIP_KNEE) * np.tanh((np.abs(x) - _CLIP_KNEE) / (1.0 - _CLIP_KNEE))
        )
    return block


def render_block(params: SynthParams, cfg: RenderConfig, frames: int, state: SynthState) -> np.ndarray:
    """Render one stereo block, advancing chains, fades and ramps.

    Parameter changes are detected against the active chain: a region
    change starts an equal-power crossfade into a fresh chain, anything
    else retunes in place.
    """
    if state.active is None:
        state.active = _Chain(params, cfg, state)
    elif params != state.active.params:
        if params.region is state.active.params.region:
            state.active.retune(params, state)
        else:
            state.fading = state.active
            state.fade_remaining = state.fade_total
            state.active = _Chain(params, cfg, state)
    state.active.refresh_volume()

    out = state.active.render(frames)
    if state.fading is not None:
        n_fade = min(frames, state.fade_remaining)
        done = state.fade_total - state.fade_remaining
        u = (done + np.arange(1, n_fade + 1)) / state.fade_total * _HALF_PI
        out[:n_fade] *= np.sin(u)[:, None]
        out[:n_fade] += state.fading.render(n_fade) * np.cos(u)[:, None]
        state.fade_remaining -= n_fade
        if state.fade_remaining == 0:
            state.fading = None
    return _soft_clip(out)


def render_trial(
    points: Sequence[SwayPoint],
    cfg: RenderConfig,
    *,
    rate: float = 50.0,
    on_params: Callable[[TimelineEntry], None] | None = None,
) -> tuple[np.ndarray, list[TimelineEntry]]:
    """Render a whole trial offline.

    Parameters update at each sway sample and hold in between; the buffer
    spans the full trial duration at ``cfg.sample_rate``. Returns the
    stereo buffer and the timeline of parameter changes.
    """
    state = SynthState(cfg)
    fs = cfg.sample_rate
    n_points = len(points)
    total = int(round(n_points / rate * fs))
    buffer = np.zeros((total, 2))
    timeline: list[TimelineEntry] = []
    pos = 0
    for k, point in enumerate(points):
        params = map_params(point, cfg)
        if not timeline or params != timeline[-1].params:
            entry = TimelineEntry(t=k / rate, params=params)
            timeline.append(entry)
            if on_params is not None:
                on_params(entry)
        end = min(total, int(round((k + 1) * fs / rate)))
        while pos < end:
            n = min(cfg.block_size, end - pos)
            buffer[pos:pos + n] = render_block(params, cfg, n, state)
            pos += n
    return buffer, timeline


def params_to_dict(params: SynthParams) -> dict:
    return {
        "region": params.region.label,
        "warning": params.region.warning.name.lower(),
        "source": params.source.value,
        "band_low_hz": params.band_low,
        "band_high_hz": params.band_high,
        "gate_period_s": params.gate_period,
        "gate_duty": params.gate_duty,
        "volume_mult": params.volume_mult,
        "pan": params.pan,
    }


def timeline_to_json(timeline: Sequence[TimelineEntry]) -> str:
    return json.dumps(
        [{"t": e.t, **params_to_dict(e.params)} for e in timeline],
        indent=2,
    )


def write_wav(path: str | Path, buffer: np.ndarray, sample_rate: int,
              sample_format: str = "float32") -> None:
    """Write a stereo buffer as a RIFF WAV, 32-bit float or 16-bit PCM."""
    if sample_format == "float32":
        wavfile.write(str(path), sample_rate, buffer.astype(np.float32))
    elif sample_format == "int16":
        scaled = np.clip(buffer, -1.0, 1.0) * 32767.0
        wavfile.write(str(path), sample_rate, scaled.astype(np.int16))
    else:
        raise ValueError(f"unsupported sample format: {sample_format!r}")
