"""Trial and protocol orchestration.

A *trial* is 60 s of regularised samples pushed through baseline
subtraction, region classification and (when feedback is on) the audio
parameter mapping. A *protocol* is the full grid: four conditions
(eyes open/closed x floor/foam), each run once without and once with
feedback, yielding four paired improvements.
"""

from __future__ import annotations

import random
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterator

from .geometry import (
    Baseline,
    RawSample,
    Region,
    SwayPoint,
    calibrate,
    classify,
    dist,
)
from .ingest import DropoutPolicy, Regularizer, SampleSource, SimSource
from .metrics import PairedImprovement, TrialMetrics, paired_improvement, trial_metrics
from .simulate import SimConfig, SwaySimulator
from .synth.params import SynthParams, map_params

__all__ = [
    "CalibrationMissing",
    "Eyes",
    "Surface",
    "Condition",
    "ALL_CONDITIONS",
    "Group",
    "TrialRecord",
    "TrialProgress",
    "ProtocolResult",
    "run_trial",
    "run_protocol",
    "simulated_source_factory",
]

DEFAULT_TRIAL_S = 60.0
DEFAULT_RATE_HZ = 50.0
DEFAULT_CALIBRATION_S = 5.0


class CalibrationMissing(RuntimeError):
    """A trial was started without a baseline."""


class Eyes(Enum):
    OPEN = "open"
    CLOSED = "closed"


class Surface(Enum):
    FLOOR = "floor"
    FOAM = "foam"


@dataclass(frozen=True)
class Condition:
    eyes: Eyes
    surface: Surface

    @property
    def label(self) -> str:
        return f"{self.surface.value}_{self.eyes.value}"

    @classmethod
    def from_label(cls, label: str) -> "Condition":
        surface, _, eyes = label.partition("_")
        return cls(eyes=Eyes(eyes), surface=Surface(surface))


# Reporting row order: floor before foam, open before closed.
ALL_CONDITIONS: tuple[Condition, ...] = (
    Condition(Eyes.OPEN, Surface.FLOOR),
    Condition(Eyes.CLOSED, Surface.FLOOR),
    Condition(Eyes.OPEN, Surface.FOAM),
    Condition(Eyes.CLOSED, Surface.FOAM),
)


class Group(Enum):
    YOUNGER = "younger"
    OLDER = "older"
    UNSPECIFIED = "unspecified"


@dataclass(frozen=True)
class TrialRecord:
    """One persisted trial: provenance, the sway series and its metrics."""

    trial_id: str
    subject_id: str
    group: Group
    condition: Condition
    abf_on: bool
    baseline: Baseline
    samples: list[SwayPoint]
    metrics: TrialMetrics
    reference_volume: float
    started_at: str
    source: str
    duration_s: float
    rate_hz: float
    aborted: bool = False


@dataclass(frozen=True)
class TrialProgress:
    """Per-sample progress snapshot handed to live observers."""

    index: int
    n_target: int
    t: float
    x: float
    y: float
    region: Region
    dist: float
    params: SynthParams | None
    abf_on: bool


def _consume_calibration(stream: Iterator[RawSample], window: float, rate: float) -> Baseline:
    n = int(round(window * rate))
    samples = []
    for sample in stream:
        samples.append(sample)
        if len(samples) >= n:
            break
    return calibrate(samples, window=window)


def run_trial(
    source: SampleSource,
    condition: Condition,
    abf_on: bool,
    *,
    baseline: Baseline | None = None,
    self_calibrate: bool = False,
    calibration_window: float = DEFAULT_CALIBRATION_S,
    duration: float = DEFAULT_TRIAL_S,
    rate: float = DEFAULT_RATE_HZ,
    policy: DropoutPolicy = DropoutPolicy.HOLD_LAST,
    subject_id: str = "anonymous",
    group: Group = Group.UNSPECIFIED,
    reference_volume: float = 0.1,
    on_sample: Callable[[TrialProgress], None] | None = None,
    params_sink: Callable[[SynthParams], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> TrialRecord:
    """Run one trial over a source and return the persisted-shape record.

    Requires a baseline unless ``self_calibrate`` consumes the first
    ``calibration_window`` seconds of the stream for it. With feedback on,
    every classified sample is mapped to synth parameters (pushed to
    ``params_sink``) and its warning level is fed back to the source; with
    feedback off neither happens, keeping the control arm pure. A stream
    that dries up early, or ``should_stop`` returning true, marks the
    record as aborted.
    """
    stream = iter(Regularizer(source.samples(), rate, policy))
    if baseline is None:
        if not self_calibrate:
            raise CalibrationMissing(f"no baseline for subject {subject_id!r}")
        baseline = _consume_calibration(stream, calibration_window, rate)

    started_at = datetime.now(timezone.utc).isoformat()
    n_target = int(round(duration * rate))
    sway_points: list[SwayPoint] = []
    dist_series: list[float] = []
    regions: list[Region] = []
    aborted = False
    t_first: float | None = None

    for sample in stream:
        if should_stop is not None and should_stop():
            aborted = True
            break
        if t_first is None:
            t_first = sample.t
        point = SwayPoint(
            t=sample.t - t_first,
            x=sample.pitch - baseline.x0,
            y=sample.roll - baseline.y0,
        )
        region = classify(point)
        d = dist(point)
        params: SynthParams | None = None
        if abf_on:
            params = map_params(point)
            if params_sink is not None:
                params_sink(params)
            source.set_warning(region.warning)
        sway_points.append(point)
        dist_series.append(d)
        regions.append(region)
        if on_sample is not None:
            on_sample(TrialProgress(
                index=len(sway_points) - 1,
                n_target=n_target,
                t=point.t,
                x=point.x,
                y=point.y,
                region=region,
                dist=d,
                params=params,
                abf_on=abf_on,
            ))
        if len(sway_points) >= n_target:
            break
    else:
        aborted = True  # source lost before the trial finished

    metrics = trial_metrics(dist_series, regions)
    return TrialRecord(
        trial_id=uuid.uuid4().hex,
        subject_id=subject_id,
        group=group,
        condition=condition,
        abf_on=abf_on,
        baseline=baseline,
        samples=sway_points,
        metrics=metrics,
        reference_volume=reference_volume,
        started_at=started_at,
        source=source.describe(),
        duration_s=duration,
        rate_hz=rate,
        aborted=aborted,
    )


@dataclass
class ProtocolResult:
    records: list[TrialRecord]
    improvements: dict[str, PairedImprovement] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        done = {(r.condition, r.abf_on) for r in self.records if not r.aborted}
        return all((c, flag) in done for c in ALL_CONDITIONS for flag in (False, True))


SourceFactory = Callable[[Condition, bool], SampleSource]


def run_protocol(
    subject_id: str,
    source_factory: SourceFactory,
    *,
    group: Group = Group.UNSPECIFIED,
    baseline: Baseline | None = None,
    order: str = "fixed",
    shuffle_seed: int | None = None,
    abf_first: bool = False,
    duration: float = DEFAULT_TRIAL_S,
    rate: float = DEFAULT_RATE_HZ,
    policy: DropoutPolicy = DropoutPolicy.HOLD_LAST,
    calibration_window: float = DEFAULT_CALIBRATION_S,
    reference_volume: float = 0.1,
    confirm: Callable[[Condition], bool] | None = None,
    store=None,
    resume: bool = False,
    params_sink: Callable[[SynthParams], None] | None = None,
    on_sample: Callable[[TrialProgress], None] | None = None,
) -> ProtocolResult:
    """Run the full 4x2 grid and compute the paired improvements.

    Each trial opens a fresh source from the factory. Without an explicit
    baseline every trial self-calibrates on its own first seconds, which
    keeps matched-seed simulator arms comparable. ``confirm`` is asked once
    per condition change (surface swaps and eye closing are physical acts);
    returning false stops the protocol early. With ``resume`` and a store,
    already-completed cells are loaded instead of re-run.
    """
    conditions = list(ALL_CONDITIONS)
    if order == "shuffled":
        random.Random(shuffle_seed).shuffle(conditions)
    elif order != "fixed":
        raise ValueError(f"unknown trial order {order!r}")
    arms = (True, False) if abf_first else (False, True)

    existing: dict[tuple[Condition, bool], TrialRecord] = {}
    if resume and store is not None:
        for record in store.load_subject(subject_id):
            if not record.aborted:
                existing[(record.condition, record.abf_on)] = record

    records: list[TrialRecord] = []
    by_cell: dict[tuple[Condition, bool], TrialRecord] = {}
    for condition in conditions:
        if confirm is not None and not confirm(condition):
            break
        for abf_on in arms:
            cell = (condition, abf_on)
            if cell in existing:
                record = existing[cell]
            else:
                source = source_factory(condition, abf_on)
                try:
                    record = run_trial(
                        source,
                        condition,
                        abf_on,
                        baseline=baseline,
                        self_calibrate=baseline is None,
                        calibration_window=calibration_window,
                        duration=duration,
                        rate=rate,
                        policy=policy,
                        subject_id=subject_id,
                        group=group,
                        reference_volume=reference_volume,
                        params_sink=params_sink,
                        on_sample=on_sample,
                    )
                finally:
                    source.close()
                if store is not None:
                    store.append(record)
            records.append(record)
            by_cell[cell] = record

    improvements: dict[str, PairedImprovement] = {}
    for condition in ALL_CONDITIONS:
        off = by_cell.get((condition, False))
        on = by_cell.get((condition, True))
        if off is not None and on is not None and not off.aborted and not on.aborted:
            improvements[condition.label] = paired_improvement(off.metrics, on.metrics)
    return ProtocolResult(records=records, improvements=improvements)


def simulated_source_factory(cfg: SimConfig, *, rate: float = DEFAULT_RATE_HZ) -> SourceFactory:
    """Source factory for simulated protocols.

    Both arms of a condition share one derived seed, so their noise
    sequences match and the paired improvement isolates the feedback
    effect.
    """
    index = {c: i for i, c in enumerate(ALL_CONDITIONS)}

    def factory(condition: Condition, abf_on: bool) -> SampleSource:
        child = SimConfig(
            seed=cfg.seed * len(ALL_CONDITIONS) + index[condition],
            sigma=cfg.sigma,
            tau=cfg.tau,
            drift=cfg.drift,
            feedback_gain=dict(cfg.feedback_gain),
            eyes_closed_mult=cfg.eyes_closed_mult,
            foam_mult=cfg.foam_mult,
            reaction_delay=cfg.reaction_delay,
        )
        sim = SwaySimulator(
            child,
            rate=rate,
            eyes_closed=condition.eyes is Eyes.CLOSED,
            on_foam=condition.surface is Surface.FOAM,
            feedback_enabled=abf_on,
        )
        return SimSource(sim, sample_rate=rate)

    return factory
