"""INI config-file support; CLI flags override anything set here.

Recognised sections and keys::

    [render]
    sample_rate = 48000
    block_size = 256
    reference_volume = 0.1
    crossfade = 0.03
    param_smoothing = 0.01
    rng_seed = 0

    [sim]
    seed = 0
    sigma = 1.0
    tau = 2.0
    drift = 0.0
    gain_low = 0.3
    gain_medium = 0.5
    gain_high = 0.7
    eyes_closed_mult = 1.5
    foam_mult = 1.3
    reaction_delay = 0.25

    [ingest]
    sample_rate = 50
    dropout_policy = hold_last

    [session]
    duration = 60
    calibration_window = 5
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .geometry import WarningLevel
from .ingest import DropoutPolicy
from .simulate import SimConfig
from .synth.params import RenderConfig

__all__ = ["AppConfig", "load_config"]


@dataclass
class AppConfig:
    render: RenderConfig
    sim: SimConfig
    ingest_rate: float = 50.0
    dropout_policy: DropoutPolicy = DropoutPolicy.HOLD_LAST
    trial_duration: float = 60.0
    calibration_window: float = 5.0


def _default() -> AppConfig:
    return AppConfig(render=RenderConfig(), sim=SimConfig())


def load_config(path: str | Path | None) -> AppConfig:
    """Load settings from an INI file; missing file or sections keep defaults."""
    cfg = _default()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    if parser.has_section("render"):
        s = parser["render"]
        cfg.render = RenderConfig(
            sample_rate=s.getint("sample_rate", cfg.render.sample_rate),
            block_size=s.getint("block_size", cfg.render.block_size),
            reference_volume=s.getfloat("reference_volume", cfg.render.reference_volume),
            crossfade=s.getfloat("crossfade", cfg.render.crossfade),
            param_smoothing=s.getfloat("param_smoothing", cfg.render.param_smoothing),
            rng_seed=s.getint("rng_seed", cfg.render.rng_seed),
        )
    if parser.has_section("sim"):
        s = parser["sim"]
        cfg.sim = SimConfig(
            seed=s.getint("seed", cfg.sim.seed),
            sigma=s.getfloat("sigma", cfg.sim.sigma),
            tau=s.getfloat("tau", cfg.sim.tau),
            drift=s.getfloat("drift", cfg.sim.drift),
            feedback_gain={
                WarningLevel.LOW: s.getfloat("gain_low", 0.3),
                WarningLevel.MEDIUM: s.getfloat("gain_medium", 0.5),
                WarningLevel.HIGH: s.getfloat("gain_high", 0.7),
            },
            eyes_closed_mult=s.getfloat("eyes_closed_mult", cfg.sim.eyes_closed_mult),
            foam_mult=s.getfloat("foam_mult", cfg.sim.foam_mult),
            reaction_delay=s.getfloat("reaction_delay", cfg.sim.reaction_delay),
        )
    if parser.has_section("ingest"):
        s = parser["ingest"]
        cfg.ingest_rate = s.getfloat("sample_rate", cfg.ingest_rate)
        cfg.dropout_policy = DropoutPolicy(s.get("dropout_policy", cfg.dropout_policy.value))
    if parser.has_section("session"):
        s = parser["session"]
        cfg.trial_duration = s.getfloat("duration", cfg.trial_duration)
        cfg.calibration_window = s.getfloat("calibration_window", cfg.calibration_window)
    return cfg
