"""Filter designs for the noise sources.

Both generators start from unit-variance white noise and are normalised so
the shaped output comes back at unit RMS; volume multipliers then act on a
level playing field regardless of how much energy the filter removed.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

__all__ = [
    "InvalidBand",
    "NYQUIST_CLAMP",
    "BAND_SECTIONS",
    "clamp_band",
    "band_pass_sos",
    "pink_noise_sos",
    "white_rms_gain",
]

# Corners above this fraction of the sample rate are pulled down before the
# bilinear design; keeps the warped response sane near Nyquist.
NYQUIST_CLAMP = 0.45

# Four cascaded second-order sections (8th order). Needed to keep >= 85% of
# the noise energy inside the commanded corners; shallower designs leak too
# much into the skirts.
BAND_SECTIONS = 4

_PINK_SECTIONS = 3
_PINK_START_HZ = 10.0


class InvalidBand(ValueError):
    """Raised when a band is unusable even after the Nyquist clamp."""


def clamp_band(low: float, high: float, sample_rate: float) -> tuple[float, float, str | None]:
    """Clamp corners to the usable range; returns (low, high, warning)."""
    limit = NYQUIST_CLAMP * sample_rate
    warning = None
    if high > limit:
        warning = f"band high {high:.0f} Hz clamped to {limit:.0f} Hz at fs={sample_rate}"
        high = limit
    if low <= 0.0 or low >= high:
        raise InvalidBand(f"band [{low}, {high}] Hz unusable at fs={sample_rate}")
    return low, high, warning


def band_pass_sos(low: float, high: float, sample_rate: float) -> np.ndarray:
    """Butterworth band-pass as second-order sections, corners pre-clamped."""
    lo, hi, _ = clamp_band(low, high, sample_rate)
    return signal.butter(BAND_SECTIONS, [lo, hi], btype="bandpass", fs=sample_rate, output="sos")


def pink_noise_sos(sample_rate: float) -> np.ndarray:
    """1/f shaping filter: log-spaced real poles with zeros at the geometric
    midpoints, bilinear-transformed. Flat below ~10 Hz, pink through the
    audio band, flattening again near Nyquist."""
    order = _PINK_SECTIONS * 2
    f_start = _PINK_START_HZ
    f_end = 5.0 * sample_rate / 12.0  # 5/6 of Nyquist
    f_poles = np.array([f_start * (f_end / f_start) ** (n / (order - 1)) for n in range(order)])
    f_zeros = np.sqrt(f_poles[1:] * f_poles[:-1])
    z, p, k = signal.bilinear_zpk(-2 * np.pi * f_zeros, -2 * np.pi * f_poles, 1.0, fs=sample_rate)
    return signal.zpk2sos(z, p, k)


def white_rms_gain(sos: np.ndarray, sample_rate: float, n_impulse: int = 1 << 14) -> float:
    """RMS gain of a filter for unit-variance white-noise input.

    Computed from the impulse-response energy (Parseval); ``n_impulse`` must
    cover the response decay, which it comfortably does for the band-pass
    and pink designs used here.
    """
    impulse = np.zeros(n_impulse)
    impulse[0] = 1.0
    h = signal.sosfilt(sos, impulse)
    return float(np.sqrt(np.sum(h * h)))
