"""Trunk-sway geometry: calibration, baseline subtraction, region classification.

Coordinates are trunk tilt angles in degrees: pitch (x, anterior/posterior)
and roll (y, medial/lateral). The floor-projected sway point is classified
into six nested severity regions:

* ``A`` -- safety zone, unit circle around the calibrated stance.
* ``B``/``C`` -- low/medium warning ellipses, shifted forward because frontal
  sway tolerance is larger than backward or lateral tolerance.
* ``D`` -- high warning, outside ``C`` but with ``|x| < 2``.
* ``E``/``F`` -- high warning, pitch beyond -2/+2 degrees (backward/forward).

Membership is by closed interiors with precedence E/F, then A, B, C, D, so
every finite point maps to exactly one region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "EmptyCalibration",
    "WarningLevel",
    "Region",
    "RawSample",
    "Baseline",
    "SwayPoint",
    "DEFAULT_CALIBRATION_WINDOW_S",
    "calibrate",
    "apply_baseline",
    "classify",
    "classify_xy",
    "classify_grid",
    "region_from_code",
    "dist",
    "display_norm",
]

# Region contour parameters, all in degrees. Shared with the boundary
# export so plots and classification can never disagree.
ELLIPSE_Y_CENTER = 0.5
B_X_SEMI = 1.5
B_Y_SEMI = 2.25
C_X_SEMI = 2.0
C_Y_SEMI = 3.0
PITCH_LIMIT = 2.0  # |x| at or beyond this is region E (backward) or F (forward)

DEFAULT_CALIBRATION_WINDOW_S = 5.0


class EmptyCalibration(ValueError):
    """Raised when no samples fall inside the calibration window."""


class WarningLevel(IntEnum):
    """Severity of the current sway region; ordered so comparisons work."""

    SAFETY = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3


class Region(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"

    @property
    def label(self) -> str:
        return self.value

    @property
    def warning(self) -> WarningLevel:
        return _WARNING_BY_REGION[self]


_WARNING_BY_REGION = {
    Region.A: WarningLevel.SAFETY,
    Region.B: WarningLevel.LOW,
    Region.C: WarningLevel.MEDIUM,
    Region.D: WarningLevel.HIGH,
    Region.E: WarningLevel.HIGH,
    Region.F: WarningLevel.HIGH,
}

# Stable numeric codes for vectorised classification.
_REGIONS_BY_CODE = (Region.A, Region.B, Region.C, Region.D, Region.E, Region.F)
_CODE_A, _CODE_B, _CODE_C, _CODE_D, _CODE_E, _CODE_F = range(6)


@dataclass(frozen=True)
class RawSample:
    """One tilt sample from the sensor stream.

    ``t`` is in seconds relative to stream start; ``pitch``/``roll`` in
    degrees. Angles beyond +-90 degrees are physically impossible for a
    standing trunk and rejected outright.
    """

    t: float
    pitch: float
    roll: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and math.isfinite(self.pitch) and math.isfinite(self.roll)):
            raise ValueError(f"non-finite sample: {self!r}")
        if self.t < 0:
            raise ValueError(f"negative timestamp: {self.t}")
        if abs(self.pitch) > 90.0 or abs(self.roll) > 90.0:
            raise ValueError(f"tilt out of +-90 deg sanity range: {self!r}")


@dataclass(frozen=True)
class Baseline:
    """Natural-stance reference captured during the calibration phase."""

    x0: float
    y0: float
    window: float
    n_samples: int


@dataclass(frozen=True)
class SwayPoint:
    """Baseline-subtracted sway point, degrees."""

    t: float
    x: float
    y: float


def calibrate(samples: Sequence[RawSample] | Iterable[RawSample],
              window: float = DEFAULT_CALIBRATION_WINDOW_S) -> Baseline:
    """Average the samples inside the calibration window into a Baseline.

    Only samples within ``window`` seconds of the first sample count.
    Raises :class:`EmptyCalibration` when nothing falls inside the window.
    """
    samples = list(samples)
    if not samples:
        raise EmptyCalibration("no calibration samples")
    t0 = samples[0].t
    selected = [s for s in samples if s.t - t0 <= window]
    if not selected:
        raise EmptyCalibration(f"no samples within {window} s calibration window")
    n = len(selected)
    x0 = math.fsum(s.pitch for s in selected) / n
    y0 = math.fsum(s.roll for s in selected) / n
    return Baseline(x0=x0, y0=y0, window=window, n_samples=n)


def apply_baseline(raw: RawSample, baseline: Baseline) -> SwayPoint:
    """Shift a raw sample into baseline-centred sway coordinates."""
    return SwayPoint(t=raw.t, x=raw.pitch - baseline.x0, y=raw.roll - baseline.y0)


def classify_xy(x: float, y: float) -> Region:
    """Classify a sway point given by bare coordinates.

    Closed interiors, severity-first pitch thresholds, then safest nested
    region: E/F win on ``|x| >= 2``; otherwise the innermost contour that
    contains the point (A, then B, then C) wins; D is everything left.
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite coordinates: ({x}, {y})")
    if x <= -PITCH_LIMIT:
        return Region.E
    if x >= PITCH_LIMIT:
        return Region.F
    if x * x + y * y <= 1.0:
        return Region.A
    dy = y - ELLIPSE_Y_CENTER
    if (dy / B_Y_SEMI) ** 2 + (x / B_X_SEMI) ** 2 <= 1.0:
        return Region.B
    if (dy / C_Y_SEMI) ** 2 + (x / C_X_SEMI) ** 2 <= 1.0:
        return Region.C
    return Region.D


def classify(p: SwayPoint) -> Region:
    return classify_xy(p.x, p.y)


def classify_grid(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorised classifier; returns uint8 region codes (A=0 .. F=5).

    Equivalent to :func:`classify_xy` point-wise; painted safest-last so the
    nested contours overwrite each other, with the pitch thresholds on top.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    codes = np.full(x.shape, _CODE_D, dtype=np.uint8)
    dy = y - ELLIPSE_Y_CENTER
    codes[(dy / C_Y_SEMI) ** 2 + (x / C_X_SEMI) ** 2 <= 1.0] = _CODE_C
    codes[(dy / B_Y_SEMI) ** 2 + (x / B_X_SEMI) ** 2 <= 1.0] = _CODE_B
    codes[x * x + y * y <= 1.0] = _CODE_A
    codes[x <= -PITCH_LIMIT] = _CODE_E
    codes[x >= PITCH_LIMIT] = _CODE_F
    return codes


def region_from_code(code: int) -> Region:
    return _REGIONS_BY_CODE[code]


def dist(p: SwayPoint) -> float:
    """Scalar sway magnitude: Euclidean norm of the baseline-centred point."""
    return math.hypot(p.x, p.y)


def display_norm(angle_deg: float) -> float:
    """Map an angle to the 0..1 display range (+-20 deg full scale, clamped)."""
    v = (angle_deg + 20.0) / 40.0
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v
