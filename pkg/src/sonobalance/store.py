"""JSON-lines persistence for trial records, one file per subject."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterator

from .geometry import Baseline, SwayPoint
from .metrics import (
    GroupReport,
    MissingCondition,
    PairedImprovement,
    TrialMetrics,
    group_report,
    paired_improvement,
)
from .session import ALL_CONDITIONS, Condition, Group, TrialRecord

__all__ = ["SCHEMA_VERSION", "StoreError", "SchemaVersionMismatch", "TrialStore",
           "record_to_dict", "record_from_dict", "pairs_from_store", "report_from_store"]

SCHEMA_VERSION = 1

_SUBJECT_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class StoreError(ValueError):
    """A store file could not be read; message names the offending line."""


class SchemaVersionMismatch(StoreError):
    """A stored record was written by an incompatible schema version."""


def record_to_dict(record: TrialRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "trial_id": record.trial_id,
        "subject_id": record.subject_id,
        "group": record.group.value,
        "condition": {"eyes": record.condition.eyes.value,
                      "surface": record.condition.surface.value},
        "abf_on": record.abf_on,
        "baseline": {"x0": record.baseline.x0, "y0": record.baseline.y0,
                     "window": record.baseline.window,
                     "n_samples": record.baseline.n_samples},
        "samples": [[p.t, p.x, p.y] for p in record.samples],
        "metrics": {"r": record.metrics.r, "v": record.metrics.v, "n": record.metrics.n,
                    "region_occupancy": record.metrics.region_occupancy},
        "reference_volume": record.reference_volume,
        "started_at": record.started_at,
        "source": record.source,
        "duration_s": record.duration_s,
        "rate_hz": record.rate_hz,
        "aborted": record.aborted,
    }


def record_from_dict(data: dict) -> TrialRecord:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"record schema version {version!r}, expected {SCHEMA_VERSION}"
        )
    cond = data["condition"]
    base = data["baseline"]
    met = data["metrics"]
    return TrialRecord(
        trial_id=data["trial_id"],
        subject_id=data["subject_id"],
        group=Group(data["group"]),
        condition=Condition.from_label(f"{cond['surface']}_{cond['eyes']}"),
        abf_on=data["abf_on"],
        baseline=Baseline(x0=base["x0"], y0=base["y0"], window=base["window"],
                          n_samples=base["n_samples"]),
        samples=[SwayPoint(t=t, x=x, y=y) for t, x, y in data["samples"]],
        metrics=TrialMetrics(r=met["r"], v=met["v"], n=met["n"],
                             region_occupancy=dict(met["region_occupancy"])),
        reference_volume=data["reference_volume"],
        started_at=data["started_at"],
        source=data["source"],
        duration_s=data["duration_s"],
        rate_hz=data["rate_hz"],
        aborted=data["aborted"],
    )


class TrialStore:
    """Append-only JSON-lines store rooted at a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, subject_id: str) -> Path:
        if not _SUBJECT_RE.match(subject_id):
            raise ValueError(f"subject id {subject_id!r} must match [A-Za-z0-9_-]+")
        return self.root / f"{subject_id}.jsonl"

    def append(self, record: TrialRecord) -> None:
        line = json.dumps(record_to_dict(record), separators=(",", ":"))
        with open(self.path_for(record.subject_id), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def subjects(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def load_subject(self, subject_id: str) -> list[TrialRecord]:
        path = self.path_for(subject_id)
        if not path.exists():
            return []
        records = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreError(f"{path} line {line_no}: invalid JSON ({exc})") from exc
                try:
                    records.append(record_from_dict(data))
                except SchemaVersionMismatch:
                    raise
                except (KeyError, TypeError, ValueError) as exc:
                    raise StoreError(f"{path} line {line_no}: bad record ({exc})") from exc
        return records

    def load_all(self) -> Iterator[TrialRecord]:
        for subject in self.subjects():
            yield from self.load_subject(subject)

    def load_trial(self, trial_id: str) -> TrialRecord | None:
        for record in self.load_all():
            if record.trial_id == trial_id:
                return record
        return None

    def protocol_complete(self, subject_id: str) -> bool:
        done = {(r.condition, r.abf_on) for r in self.load_subject(subject_id) if not r.aborted}
        return all((c, flag) in done for c in ALL_CONDITIONS for flag in (False, True))


def pairs_from_store(
    store: TrialStore,
) -> tuple[dict[tuple[str, str], PairedImprovement], dict[str, str]]:
    """Paired improvements and subject groups across all stored subjects.

    For each (subject, condition) cell the latest non-aborted record of
    each arm is used; cells missing an arm are skipped.
    """
    latest: dict[tuple[str, str, bool], TrialRecord] = {}
    groups: dict[str, str] = {}
    for record in store.load_all():
        if record.aborted:
            continue
        latest[(record.subject_id, record.condition.label, record.abf_on)] = record
        groups[record.subject_id] = record.group.value
    pairs: dict[tuple[str, str], PairedImprovement] = {}
    for (subject, cond, abf_on), record in latest.items():
        if abf_on:
            continue
        partner = latest.get((subject, cond, True))
        if partner is not None:
            pairs[(subject, cond)] = paired_improvement(record.metrics, partner.metrics)
    return pairs, groups


def report_from_store(store: TrialStore) -> GroupReport:
    """Median-improvement table over everything in the store."""
    pairs, groups = pairs_from_store(store)
    if not pairs:
        raise MissingCondition([("*", "*")])
    present = {cond for _subj, cond in pairs}
    order = [c.label for c in ALL_CONDITIONS if c.label in present]
    return group_report(pairs, groups=groups, condition_order=order)
