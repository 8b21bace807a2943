"""Live engine: one operator, one subject, one trial at a time.

The engine owns the session state machine (idle / calibrating / in a
trial), the subject baseline, the trial store and the telemetry fan-out.
Commands arrive from the HTTP layer on arbitrary threads and are
serialised through one lock; the running trial executes on its own worker
thread and publishes telemetry without ever blocking on consumers.
"""

from __future__ import annotations

import asyncio
import itertools
import threading
import time
from enum import Enum

from ..geometry import Baseline, RawSample, calibrate, display_norm
from ..ingest import ReplaySource, SampleSource, SourceConfig, SourceKind, UdpSource
from ..metrics import GroupReport, dispersion_export
from ..session import (
    ALL_CONDITIONS,
    Condition,
    Group,
    TrialProgress,
    run_trial,
    simulated_source_factory,
)
from ..simulate import SimConfig
from ..store import TrialStore, report_from_store
from ..synth.params import RenderConfig
from ..synth.renderer import params_to_dict

__all__ = ["EngineBusy", "EngineState", "LiveEngine", "TelemetryHub"]

TELEMETRY_BUFFER = 4096


class EngineBusy(RuntimeError):
    """The requested command is not allowed in the current state."""


class EngineState(Enum):
    IDLE = "idle"
    CALIBRATING = "calibrating"
    TRIAL = "trial"


class TelemetryHub:
    """Fan-out of telemetry frames to websocket subscribers.

    Publishing never blocks: each subscriber owns a bounded asyncio queue
    on its own event loop, and when a consumer falls behind the oldest
    frames are dropped for that consumer only.
    """

    def __init__(self, buffer: int = TELEMETRY_BUFFER):
        self.buffer = buffer
        self._lock = threading.Lock()
        self._subscribers: dict[int, tuple[asyncio.AbstractEventLoop, asyncio.Queue]] = {}
        self._next_id = itertools.count()

    def subscribe(self, loop: asyncio.AbstractEventLoop) -> tuple[int, asyncio.Queue]:
        queue: asyncio.Queue = asyncio.Queue(maxsize=self.buffer)
        with self._lock:
            token = next(self._next_id)
            self._subscribers[token] = (loop, queue)
        return token, queue

    def unsubscribe(self, token: int) -> None:
        with self._lock:
            self._subscribers.pop(token, None)

    @staticmethod
    def _offer(queue: asyncio.Queue, frame: dict) -> None:
        if queue.full():
            try:
                queue.get_nowait()  # slow consumer: skip the oldest frame
            except asyncio.QueueEmpty:
                pass
        queue.put_nowait(frame)

    def publish(self, frame: dict) -> None:
        with self._lock:
            targets = list(self._subscribers.values())
        for loop, queue in targets:
            try:
                loop.call_soon_threadsafe(self._offer, queue, frame)
            except RuntimeError:
                pass  # loop already closed; unsubscribe will clean up


class LiveEngine:
    """Session state machine behind the gateway."""

    def __init__(
        self,
        source_config: SourceConfig,
        store_dir: str,
        *,
        render_config: RenderConfig | None = None,
        sim_config: SimConfig | None = None,
        subject_id: str = "operator",
        group: Group = Group.UNSPECIFIED,
        rate: float = 50.0,
        audio: bool = False,
    ):
        self.source_config = source_config
        self.render_config = render_config or RenderConfig()
        self.sim_config = sim_config or SimConfig(seed=source_config.sim_seed)
        self.subject_id = subject_id
        self.group = group
        self.rate = rate
        self.store = TrialStore(store_dir)
        self.hub = TelemetryHub()

        self._lock = threading.RLock()
        self._state = EngineState.IDLE
        self._baseline: Baseline | None = None
        self._reference_volume = self.render_config.reference_volume
        self._stop_event = threading.Event()
        self._trial_thread: threading.Thread | None = None
        self._trial_info: dict | None = None
        self._last_error: str | None = None
        self._frame_seq = itertools.count()
        self._sim_factory = simulated_source_factory(self.sim_config, rate=rate)
        self._udp_source: UdpSource | None = None
        self._player = None
        if audio:
            from ..synth.live import AudioDevicePlayer

            self._player = AudioDevicePlayer(self.render_config)

    # ------------------------------------------------------------------ state

    @property
    def state(self) -> EngineState:
        with self._lock:
            return self._state

    def snapshot(self) -> dict:
        with self._lock:
            baseline = None
            if self._baseline is not None:
                baseline = {
                    "x0": self._baseline.x0,
                    "y0": self._baseline.y0,
                    "window": self._baseline.window,
                    "n_samples": self._baseline.n_samples,
                }
            return {
                "state": self._state.value,
                "baseline": baseline,
                "reference_volume": self._reference_volume,
                "subject_id": self.subject_id,
                "trial": dict(self._trial_info) if self._trial_info else None,
                "last_error": self._last_error,
                "source": self.source_config.kind.value,
                "protocol_complete": self.store.protocol_complete(self.subject_id),
            }

    # ---------------------------------------------------------------- sources

    def _open_source(self, condition: Condition, abf_on: bool) -> SampleSource:
        kind = self.source_config.kind
        if kind is SourceKind.SIM:
            return self._sim_factory(condition, abf_on)
        if kind is SourceKind.REPLAY:
            return ReplaySource(self.source_config.path, realtime=self.source_config.realtime)
        if self._udp_source is None:
            self._udp_source = UdpSource(self.source_config.address)
        return self._udp_source

    def _release_source(self, source: SampleSource) -> None:
        if source is not self._udp_source:
            source.close()

    # ------------------------------------------------------------- calibration

    def calibrate(self, window: float = 5.0) -> Baseline:
        with self._lock:
            if self._state is not EngineState.IDLE:
                raise EngineBusy(f"cannot calibrate while {self._state.value}")
            self._state = EngineState.CALIBRATING
        source = self._open_source(ALL_CONDITIONS[0], False)
        try:
            samples: list[RawSample] = []
            needed = int(round(window * self.rate))
            for sample in source.samples():
                samples.append(sample)
                if len(samples) >= needed:
                    break
            baseline = calibrate(samples, window=window)
        finally:
            self._release_source(source)
            with self._lock:
                self._state = EngineState.IDLE
        with self._lock:
            self._baseline = baseline
        return baseline

    # ----------------------------------------------------------------- trials

    def start_trial(self, condition: Condition, abf_on: bool, duration: float = 60.0) -> dict:
        with self._lock:
            if self._state is not EngineState.IDLE:
                raise EngineBusy(f"cannot start a trial while {self._state.value}")
            if self._baseline is None:
                raise EngineBusy("calibration missing")
            self._state = EngineState.TRIAL
            self._stop_event.clear()
            self._trial_info = {
                "condition": condition.label,
                "abf_on": abf_on,
                "duration_s": duration,
                "samples_seen": 0,
                "started_at": time.time(),
            }
            baseline = self._baseline
        if self._player is not None:
            self._player.start()
        thread = threading.Thread(
            target=self._run_trial, args=(condition, abf_on, duration, baseline), daemon=True
        )
        self._trial_thread = thread
        thread.start()
        return dict(self._trial_info)

    def _publish_progress(self, progress: TrialProgress) -> None:
        with self._lock:
            if self._trial_info is not None:
                self._trial_info["samples_seen"] = progress.index + 1
            trial = dict(self._trial_info) if self._trial_info else None
        frame = {
            "seq": next(self._frame_seq),
            "t": progress.t,
            "x": progress.x,
            "y": progress.y,
            "x_norm": display_norm(progress.x),
            "y_norm": display_norm(progress.y),
            "region": progress.region.label,
            "warning": progress.region.warning.name.lower(),
            "dist": progress.dist,
            "params": params_to_dict(progress.params) if progress.params else None,
            "trial": trial,
        }
        if self._player is not None and progress.params is not None:
            self._player.update_params(progress.params)
        self.hub.publish(frame)

    def _run_trial(self, condition: Condition, abf_on: bool, duration: float,
                   baseline: Baseline) -> None:
        source = self._open_source(condition, abf_on)
        try:
            record = run_trial(
                source,
                condition,
                abf_on,
                baseline=baseline,
                duration=duration,
                rate=self.rate,
                policy=self.source_config.dropout_policy,
                subject_id=self.subject_id,
                group=self.group,
                reference_volume=self._reference_volume,
                on_sample=self._publish_progress,
                should_stop=self._stop_event.is_set,
            )
            self.store.append(record)
            with self._lock:
                self._last_error = None
        except Exception as exc:  # surfaced via /state; the engine must survive
            with self._lock:
                self._last_error = f"{type(exc).__name__}: {exc}"
        finally:
            self._release_source(source)
            if self._player is not None:
                self._player.stop()
            with self._lock:
                self._state = EngineState.IDLE
                self._trial_info = None

    def stop_trial(self) -> bool:
        """Request the running trial to stop; true when one was running.

        Idempotent: stopping an idle engine is a no-op success.
        """
        with self._lock:
            running = self._state is EngineState.TRIAL
            thread = self._trial_thread
        if running:
            self._stop_event.set()
            if thread is not None:
                thread.join(timeout=10.0)
        return running

    def wait_idle(self, timeout: float = 120.0) -> bool:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.state is EngineState.IDLE:
                return True
            time.sleep(0.02)
        return False

    # ---------------------------------------------------------------- queries

    def set_volume(self, value: float) -> float:
        if not 0.0 < value <= 1.0:
            raise ValueError(f"reference volume must be in (0, 1], got {value}")
        with self._lock:
            self._reference_volume = value
        self.render_config.reference_volume = value  # live renderer picks this up
        return value

    @property
    def reference_volume(self) -> float:
        with self._lock:
            return self._reference_volume

    def trials(self) -> list[dict]:
        out = []
        for record in self.store.load_all():
            out.append({
                "trial_id": record.trial_id,
                "subject_id": record.subject_id,
                "group": record.group.value,
                "condition": record.condition.label,
                "abf_on": record.abf_on,
                "n_samples": len(record.samples),
                "aborted": record.aborted,
                "metrics": {"r": record.metrics.r, "v": record.metrics.v},
                "started_at": record.started_at,
            })
        return out

    def report(self) -> GroupReport:
        return report_from_store(self.store)

    def dispersion(self, trial_id: str) -> dict | None:
        record = self.store.load_trial(trial_id)
        if record is None:
            return None
        payload = dispersion_export(record.samples)
        payload["trial_id"] = trial_id
        payload["condition"] = record.condition.label
        payload["abf_on"] = record.abf_on
        return payload

    def shutdown(self) -> None:
        self.stop_trial()
        if self._udp_source is not None:
            self._udp_source.close()
        if self._player is not None:
            self._player.stop()
