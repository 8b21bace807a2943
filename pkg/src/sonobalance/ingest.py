"""Sample sources and fixed-rate regularisation.

Three sources produce the tilt stream: CSV replay, UDP datagrams from a
live sensor bridge, and the built-in sway simulator. All of them yield
:class:`~sonobalance.geometry.RawSample` in non-decreasing time order; the
session loop then pins them to an exact fixed rate with
:class:`Regularizer` so variance statistics and the audio update cadence
see evenly spaced samples.

UDP wire format (one sample per datagram, little-endian, 20 bytes):
``u32 sequence, u64 timestamp_micros, f32 pitch_deg, f32 roll_deg``.
Datagrams whose sequence number regresses are dropped; short or
non-finite datagrams count as malformed and are skipped.
"""

from __future__ import annotations

import csv
import math
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .geometry import RawSample, WarningLevel

__all__ = [
    "SourceUnavailable",
    "MalformedRecord",
    "SourceKind",
    "DropoutPolicy",
    "SourceConfig",
    "SampleSource",
    "ReplaySource",
    "UdpSource",
    "SimSource",
    "open_source",
    "Regularizer",
    "StreamPump",
    "DATAGRAM_STRUCT",
    "encode_datagram",
    "write_replay_csv",
]

DATAGRAM_STRUCT = struct.Struct("<IQff")
CSV_HEADER = ["t_s", "pitch_deg", "roll_deg"]

MIN_SAMPLE_RATE = 4.0
MAX_SAMPLE_RATE = 1000.0


class SourceUnavailable(RuntimeError):
    """The configured source cannot be opened."""


class MalformedRecord(ValueError):
    """A replay record could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class SourceKind(Enum):
    REPLAY = "replay"
    UDP = "udp"
    SIM = "sim"


class DropoutPolicy(Enum):
    HOLD_LAST = "hold_last"
    INTERPOLATE = "interpolate"


@dataclass
class SourceConfig:
    kind: SourceKind
    path: str | None = None            # replay file
    address: tuple[str, int] | None = None  # udp bind address
    sample_rate: float = 50.0
    dropout_policy: DropoutPolicy = DropoutPolicy.HOLD_LAST
    realtime: bool = False             # pace samples against the wall clock
    sim_seed: int = 0

    def __post_init__(self) -> None:
        if not MIN_SAMPLE_RATE <= self.sample_rate <= MAX_SAMPLE_RATE:
            raise ValueError(
                f"sample rate {self.sample_rate} outside device range "
                f"[{MIN_SAMPLE_RATE}, {MAX_SAMPLE_RATE}] Hz"
            )
        if self.kind is SourceKind.REPLAY:
            if not self.path:
                raise ValueError("replay source needs a file path")
            if not Path(self.path).is_file():
                raise SourceUnavailable(f"replay file not found: {self.path}")
        if self.kind is SourceKind.UDP and self.address is None:
            raise ValueError("udp source needs a bind address")


class SampleSource:
    """Base interface: iterate RawSamples, optionally accept warning feedback."""

    malformed = 0
    dropped = 0

    def samples(self) -> Iterator[RawSample]:
        raise NotImplementedError

    def set_warning(self, level: WarningLevel | None) -> None:
        """Feedback hook for closed-loop sources; a no-op for replay/UDP."""

    def close(self) -> None:
        pass

    def describe(self) -> str:
        return type(self).__name__


class ReplaySource(SampleSource):
    """CSV replay; header ``t_s,pitch_deg,roll_deg``, UTF-8, decimal point."""

    def __init__(self, path: str | Path, realtime: bool = False):
        self.path = Path(path)
        self.realtime = realtime
        if not self.path.is_file():
            raise SourceUnavailable(f"replay file not found: {self.path}")

    def samples(self) -> Iterator[RawSample]:
        start_wall = time.monotonic()
        with open(self.path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != CSV_HEADER:
                raise MalformedRecord(1, f"expected header {','.join(CSV_HEADER)}")
            t_first: float | None = None
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    t, pitch, roll = (float(v) for v in row[:3])
                    sample = RawSample(t=t, pitch=pitch, roll=roll)
                except (ValueError, IndexError) as exc:
                    raise MalformedRecord(line_no, str(exc)) from exc
                if t_first is None:
                    t_first = sample.t
                if self.realtime:
                    due = start_wall + (sample.t - t_first)
                    delay = due - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                yield sample

    def describe(self) -> str:
        return f"replay:{self.path}"


class UdpSource(SampleSource):
    """Live datagram listener; stops when :meth:`close` is called."""

    def __init__(self, address: tuple[str, int], recv_timeout: float = 0.5):
        self._closed = threading.Event()
        try:
            self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._sock.bind(address)
        except OSError as exc:
            raise SourceUnavailable(f"cannot bind udp {address}: {exc}") from exc
        self._sock.settimeout(recv_timeout)
        self.address = self._sock.getsockname()
        self.malformed = 0
        self.dropped = 0

    def samples(self) -> Iterator[RawSample]:
        last_seq: int | None = None
        t0_us: int | None = None
        while not self._closed.is_set():
            try:
                data, _peer = self._sock.recvfrom(64)
            except socket.timeout:
                continue
            except OSError:
                break
            if len(data) != DATAGRAM_STRUCT.size:
                self.malformed += 1
                continue
            seq, ts_us, pitch, roll = DATAGRAM_STRUCT.unpack(data)
            if not (math.isfinite(pitch) and math.isfinite(roll)):
                self.malformed += 1
                continue
            if last_seq is not None and seq <= last_seq:
                self.dropped += 1
                continue
            last_seq = seq
            if t0_us is None:
                t0_us = ts_us
            try:
                yield RawSample(t=(ts_us - t0_us) * 1e-6, pitch=float(pitch), roll=float(roll))
            except ValueError:
                self.malformed += 1

    def close(self) -> None:
        self._closed.set()
        self._sock.close()

    def describe(self) -> str:
        return f"udp:{self.address[0]}:{self.address[1]}"


class SimSource(SampleSource):
    """Adapter that streams a sway simulator as a sample source.

    The session loop may feed the classified warning level back through
    :meth:`set_warning`; the simulator applies it after its configured
    reaction delay.
    """

    def __init__(self, simulator, sample_rate: float = 50.0, realtime: bool = False,
                 duration: float | None = None):
        self.simulator = simulator
        self.sample_rate = sample_rate
        self.realtime = realtime
        self.duration = duration
        self._closed = threading.Event()

    def samples(self) -> Iterator[RawSample]:
        dt = 1.0 / self.sample_rate
        start_wall = time.monotonic()
        k = 0
        while not self._closed.is_set():
            t = k * dt
            if self.duration is not None and t >= self.duration:
                return
            pitch, roll = self.simulator.step(dt)
            if self.realtime:
                delay = start_wall + t - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            yield RawSample(t=t, pitch=pitch, roll=roll)
            k += 1

    def set_warning(self, level: WarningLevel | None) -> None:
        self.simulator.notify_warning(level)

    def close(self) -> None:
        self._closed.set()

    def describe(self) -> str:
        return f"sim:seed={getattr(self.simulator, 'seed', '?')}"


def open_source(cfg: SourceConfig) -> SampleSource:
    """Open the configured source; raises SourceUnavailable when unreachable."""
    if cfg.kind is SourceKind.REPLAY:
        return ReplaySource(cfg.path, realtime=cfg.realtime)
    if cfg.kind is SourceKind.UDP:
        return UdpSource(cfg.address)
    from .simulate import SimConfig, SwaySimulator

    sim = SwaySimulator(SimConfig(seed=cfg.sim_seed), rate=cfg.sample_rate)
    return SimSource(sim, sample_rate=cfg.sample_rate, realtime=cfg.realtime)


class Regularizer:
    """Re-clock a non-decreasing sample stream to exact 1/rate spacing.

    Ticks land at ``t0 + k/rate``. A sample within half a step of the tick
    is emitted at the tick time; ticks with no sample are filled per the
    dropout policy (hold the previous value, or midpoint/linear
    interpolation toward the next arrival) and counted in ``gap_count``.
    Extra samples between ticks replace the held value without being
    emitted. Already-regular input passes through unchanged.
    """

    def __init__(self, stream: Iterable[RawSample], rate: float,
                 policy: DropoutPolicy = DropoutPolicy.HOLD_LAST):
        self.stream = iter(stream)
        self.rate = rate
        self.policy = policy
        self.gap_count = 0

    def __iter__(self) -> Iterator[RawSample]:
        half = 0.5 / self.rate
        prev = next(self.stream, None)
        if prev is None:
            return
        t0 = prev.t
        yield RawSample(t=t0, pitch=prev.pitch, roll=prev.roll)
        k = 1
        for sample in self.stream:
            if sample.t < prev.t:
                continue  # non-decreasing contract; drop regressions defensively
            tick = t0 + k / self.rate
            while sample.t > tick + half:
                self.gap_count += 1
                if self.policy is DropoutPolicy.INTERPOLATE and sample.t > prev.t:
                    u = (tick - prev.t) / (sample.t - prev.t)
                    fill = RawSample(
                        t=tick,
                        pitch=prev.pitch + (sample.pitch - prev.pitch) * u,
                        roll=prev.roll + (sample.roll - prev.roll) * u,
                    )
                else:
                    fill = RawSample(t=tick, pitch=prev.pitch, roll=prev.roll)
                yield fill
                k += 1
                tick = t0 + k / self.rate
            if abs(sample.t - tick) <= half:
                yield RawSample(t=tick, pitch=sample.pitch, roll=sample.roll)
                k += 1
            prev = sample


class StreamPump:
    """Run a source in its own thread, buffering into a bounded queue.

    Keeps at most one second of samples; beyond that the oldest are
    dropped and counted, so a stalled consumer can never wedge a live
    source.
    """

    _SENTINEL = object()

    def __init__(self, source: SampleSource, rate: float):
        self.source = source
        self.queue: queue.Queue = queue.Queue(maxsize=max(1, int(rate)))
        self.overflow_dropped = 0
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._started = False

    def start(self) -> "StreamPump":
        self._started = True
        self._thread.start()
        return self

    def _run(self) -> None:
        try:
            for sample in self.source.samples():
                while True:
                    try:
                        self.queue.put_nowait(sample)
                        break
                    except queue.Full:
                        try:
                            self.queue.get_nowait()
                            self.overflow_dropped += 1
                        except queue.Empty:
                            pass
        finally:
            self.queue.put(self._SENTINEL)

    def __iter__(self) -> Iterator[RawSample]:
        if not self._started:
            self.start()
        while True:
            item = self.queue.get()
            if item is self._SENTINEL:
                return
            yield item

    def stop(self) -> None:
        self.source.close()


def encode_datagram(seq: int, timestamp_micros: int, pitch_deg: float, roll_deg: float) -> bytes:
    """Pack one sample in the UDP wire format."""
    return DATAGRAM_STRUCT.pack(seq, timestamp_micros, pitch_deg, roll_deg)


def write_replay_csv(path: str | Path, samples: Iterable[RawSample]) -> None:
    """Write samples as a replay CSV with the canonical header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in samples:
            writer.writerow([repr(s.t), repr(s.pitch), repr(s.roll)])
