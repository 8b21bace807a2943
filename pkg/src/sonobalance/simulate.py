"""Synthetic standing subject: a stochastic inverted-pendulum surrogate.

Each tilt axis follows a discretised mean-reverting random walk

    x <- x + (-x / tau + drift) * dt + sigma * sqrt(dt) * N(0,1) * m

where ``m`` multiplies up the noise under sensory-deprivation conditions
(eyes closed, foam surface). When warning feedback is active the stochastic
term is additionally scaled by ``1 - gain[warning]`` after the configured
reaction delay, modelling the subject stiffening up on hearing the alert.

The process is deliberately simple: bounded, stationary (std per axis
``sigma * sqrt(tau / 2)``), fully seeded, and responsive enough that the
whole feedback pipeline can be exercised end to end on a desk.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Baseline,
    RawSample,
    WarningLevel,
    apply_baseline,
    calibrate,
    classify,
)

__all__ = ["SimConfig", "SwaySimulator", "SimRun", "run_virtual_subject"]

DEFAULT_RATE_HZ = 50.0
DEFAULT_TRIAL_S = 60.0
DEFAULT_CALIBRATION_S = 5.0


@dataclass
class SimConfig:
    seed: int = 0
    sigma: float = 1.0            # noise scale, degrees
    tau: float = 2.0              # mean-reversion time constant, seconds
    drift: float = 0.0            # degrees/s
    # noise suppression per warning level when the subject hears the alert
    feedback_gain: dict[WarningLevel, float] = field(
        default_factory=lambda: {
            WarningLevel.LOW: 0.3,
            WarningLevel.MEDIUM: 0.5,
            WarningLevel.HIGH: 0.7,
        }
    )
    eyes_closed_mult: float = 1.5
    foam_mult: float = 1.3
    reaction_delay: float = 0.25  # seconds before a warning changes behaviour

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        for level, gain in self.feedback_gain.items():
            if not 0.0 <= gain < 1.0:
                raise ValueError(f"feedback gain for {level.name} must be in [0, 1), got {gain}")
        ordered = [self.feedback_gain.get(lvl, 0.0)
                   for lvl in (WarningLevel.LOW, WarningLevel.MEDIUM, WarningLevel.HIGH)]
        if any(a > b for a, b in zip(ordered, ordered[1:])):
            raise ValueError("feedback gain must not decrease with warning severity")
        if self.eyes_closed_mult < 1.0 or self.foam_mult < 1.0:
            raise ValueError("condition multipliers must be >= 1")


class SwaySimulator:
    """Stateful two-axis sway generator with delayed warning feedback."""

    def __init__(self, cfg: SimConfig, *, rate: float = DEFAULT_RATE_HZ,
                 eyes_closed: bool = False, on_foam: bool = False,
                 feedback_enabled: bool = False,
                 initial: tuple[float, float] = (0.0, 0.0)):
        self.cfg = cfg
        self.seed = cfg.seed
        self.rate = rate
        self.feedback_enabled = feedback_enabled
        self.multiplier = (cfg.eyes_closed_mult if eyes_closed else 1.0) * (
            cfg.foam_mult if on_foam else 1.0
        )
        self._rng = np.random.default_rng(cfg.seed)
        self._state = np.array(initial, dtype=np.float64)  # pitch, roll
        delay_steps = max(1, int(round(cfg.reaction_delay * rate)))
        # warnings queue up and take effect delay_steps later
        self._pending: deque[WarningLevel | None] = deque([None] * delay_steps, maxlen=delay_steps)

    def notify_warning(self, level: WarningLevel | None) -> None:
        self._pending.append(level)

    def step(self, dt: float, warning: WarningLevel | None = None) -> tuple[float, float]:
        """Advance both axes by dt and return (pitch, roll) in degrees.

        The warning acting on this step is whatever was reported
        ``reaction_delay`` ago. Report the current one either through the
        ``warning`` argument or by calling :meth:`notify_warning` after
        classifying the emitted sample -- once per step, not both.
        """
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        effective = self._pending[0]
        scale = 1.0
        if self.feedback_enabled and effective is not None and effective >= WarningLevel.LOW:
            scale = 1.0 - self.cfg.feedback_gain.get(effective, 0.0)
        cfg = self.cfg
        noise = self._rng.standard_normal(2)
        self._state = (
            self._state
            + (-self._state / cfg.tau + cfg.drift) * dt
            + cfg.sigma * math.sqrt(dt) * noise * self.multiplier * scale
        )
        if warning is not None:
            self.notify_warning(warning)
        return float(self._state[0]), float(self._state[1])


@dataclass
class SimRun:
    """Output of one simulated session: calibration phase plus the trial."""

    calibration: list[RawSample]
    baseline: Baseline
    samples: list[RawSample]


def run_virtual_subject(
    cfg: SimConfig,
    *,
    eyes_closed: bool = False,
    on_foam: bool = False,
    abf_on: bool = False,
    duration: float = DEFAULT_TRIAL_S,
    rate: float = DEFAULT_RATE_HZ,
    calibration_window: float = DEFAULT_CALIBRATION_S,
) -> SimRun:
    """Run a full simulated session: quiet stance, then the recorded trial.

    During the trial each emitted sample is classified live and, when
    ``abf_on``, the warning level is fed back into the simulator, closing
    the loop. Matched seeds with feedback on and off therefore share the
    identical noise sequence, which is what makes paired comparisons
    meaningful.
    """
    sim = SwaySimulator(cfg, rate=rate, eyes_closed=eyes_closed, on_foam=on_foam,
                        feedback_enabled=abf_on)
    dt = 1.0 / rate

    calibration = []
    for k in range(int(round(calibration_window * rate))):
        pitch, roll = sim.step(dt)
        calibration.append(RawSample(t=k * dt, pitch=pitch, roll=roll))
    baseline = calibrate(calibration, window=calibration_window)

    n = int(round(duration * rate))
    samples: list[RawSample] = []
    for k in range(n):
        pitch, roll = sim.step(dt)
        sample = RawSample(t=k * dt, pitch=pitch, roll=roll)
        samples.append(sample)
        if abf_on:
            region = classify(apply_baseline(sample, baseline))
            sim.notify_warning(region.warning)
    return SimRun(calibration=calibration, baseline=baseline, samples=samples)
