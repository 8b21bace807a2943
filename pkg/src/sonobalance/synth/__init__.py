"""Stereo warning-audio synthesis: sway-to-parameter mapping and rendering."""

from .params import (
    GATE_DUTY,
    MAX_ANGLE_DEG,
    NARROW_BAND_WIDTH_HZ,
    NoiseSource,
    RenderConfig,
    SynthParams,
    equal_power_gains,
    gate_period_s,
    lower_cutoff_hz,
    map_params,
    pan_position,
)
from .dsp import InvalidBand, band_pass_sos, pink_noise_sos, white_rms_gain
from .renderer import (
    SynthState,
    TimelineEntry,
    params_to_dict,
    render_block,
    render_trial,
    timeline_to_json,
    write_wav,
)

__all__ = [
    "GATE_DUTY",
    "MAX_ANGLE_DEG",
    "NARROW_BAND_WIDTH_HZ",
    "NoiseSource",
    "RenderConfig",
    "SynthParams",
    "equal_power_gains",
    "gate_period_s",
    "lower_cutoff_hz",
    "map_params",
    "pan_position",
    "InvalidBand",
    "band_pass_sos",
    "pink_noise_sos",
    "white_rms_gain",
    "SynthState",
    "TimelineEntry",
    "params_to_dict",
    "render_block",
    "render_trial",
    "timeline_to_json",
    "write_wav",
]
