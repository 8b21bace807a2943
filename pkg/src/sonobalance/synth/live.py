"""Live playback to the system audio device.

Optional: requires the ``sounddevice`` package and a working output
device, neither of which exists on headless boxes; everything else in the
package works without it. The control thread publishes parameter
snapshots through a single atomic slot and the audio callback renders
from whatever snapshot is current, so the callback never waits on the
control side.
"""

from __future__ import annotations

import numpy as np

from .params import RenderConfig, SynthParams
from .renderer import SynthState, render_block

__all__ = ["AudioDeviceUnavailable", "AudioDevicePlayer"]


class AudioDeviceUnavailable(RuntimeError):
    """No usable audio backend/device for live playback."""


class AudioDevicePlayer:
    """Streams the warning audio to the default stereo output device."""

    def __init__(self, cfg: RenderConfig):
        try:
            import sounddevice
        except ImportError as exc:
            raise AudioDeviceUnavailable(
                "live playback needs the optional 'sounddevice' package "
                "(pip install sonobalance[audio])"
            ) from exc
        self._sd = sounddevice
        self.cfg = cfg
        self._params: SynthParams | None = None  # single-slot snapshot exchange
        self._state: SynthState | None = None
        self._stream = None

    def update_params(self, params: SynthParams) -> None:
        self._params = params

    def _callback(self, outdata, frames, _time_info, _status) -> None:
        params = self._params
        if params is None or self._state is None:
            outdata[:] = 0.0
            return
        outdata[:] = render_block(params, self.cfg, frames, self._state).astype(np.float32)

    def start(self) -> None:
        if self._stream is not None:
            return
        self._state = SynthState(self.cfg)
        self._params = None
        try:
            self._stream = self._sd.OutputStream(
                samplerate=self.cfg.sample_rate,
                blocksize=self.cfg.block_size,
                channels=2,
                dtype="float32",
                callback=self._callback,
            )
            self._stream.start()
        except Exception as exc:
            self._stream = None
            raise AudioDeviceUnavailable(f"cannot open audio output: {exc}") from exc

    def stop(self) -> None:
        if self._stream is not None:
            self._stream.stop()
            self._stream.close()
            self._stream = None
        self._state = None
        self._params = None
