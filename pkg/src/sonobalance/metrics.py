"""Per-trial sway statistics and paired no-feedback/feedback comparisons.

A trial reduces to the scalar ``dist`` series; its range ``R`` (max - min)
and population variance ``V`` summarise how much the subject swayed. Pairing
a feedback-off trial with a feedback-on trial of the same condition gives
the percentage improvements

    P_R = (R_off - R_on) / R_off * 100
    P_V = (V_off - V_on) / V_off * 100

so positive values mean the feedback reduced sway.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .geometry import (
    B_X_SEMI,
    B_Y_SEMI,
    C_X_SEMI,
    C_Y_SEMI,
    ELLIPSE_Y_CENTER,
    PITCH_LIMIT,
    Region,
    SwayPoint,
    classify_grid,
    region_from_code,
)

__all__ = [
    "EmptySeries",
    "DegenerateBaselineTrial",
    "MissingCondition",
    "TrialMetrics",
    "PairedImprovement",
    "GroupReport",
    "trial_metrics",
    "metrics_from_points",
    "paired_improvement",
    "group_report",
    "dispersion_export",
    "region_boundaries",
]


class EmptySeries(ValueError):
    """Raised when statistics are requested for an empty trial series."""


class DegenerateBaselineTrial(ValueError):
    """Raised when the feedback-off trial has zero range or variance."""


class MissingCondition(ValueError):
    """Raised when a report cell has no paired improvement to aggregate."""

    def __init__(self, cells: Sequence[tuple[str, str]]):
        self.cells = list(cells)
        listing = ", ".join(f"{cond}:{group}" for cond, group in self.cells)
        super().__init__(f"no paired improvements for cells: {listing}")


@dataclass(frozen=True)
class TrialMetrics:
    """Summary of one trial's dist series.

    ``r`` is the range (max - min) in degrees, ``v`` the population variance
    in degrees squared, ``region_occupancy`` the fraction of samples spent in
    each region label.
    """

    r: float
    v: float
    n: int
    region_occupancy: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PairedImprovement:
    """Percentage reduction of R and V between feedback-off and -on trials."""

    p_r: float
    p_v: float


def trial_metrics(dist_series: Sequence[float], regions: Sequence[Region]) -> TrialMetrics:
    """Compute R, V and region occupancy for one trial.

    ``dist_series`` and ``regions`` must be the same length and non-empty.
    Variance is the population variance (divide by n): the trial is the
    complete population of interest, not a sample from a longer one.
    """
    if len(dist_series) == 0:
        raise EmptySeries("empty dist series")
    if len(dist_series) != len(regions):
        raise ValueError(
            f"dist series ({len(dist_series)}) and regions ({len(regions)}) differ in length"
        )
    arr = np.asarray(dist_series, dtype=np.float64)
    counts = Counter(region.label for region in regions)
    n = len(regions)
    occupancy = {region.label: counts.get(region.label, 0) / n for region in Region}
    return TrialMetrics(
        r=float(arr.max() - arr.min()),
        v=float(np.var(arr)),
        n=n,
        region_occupancy=occupancy,
    )


def metrics_from_points(points: Sequence[SwayPoint]) -> TrialMetrics:
    """Recompute trial metrics from stored sway points."""
    if not points:
        raise EmptySeries("no sway points")
    xs = np.array([p.x for p in points], dtype=np.float64)
    ys = np.array([p.y for p in points], dtype=np.float64)
    dists = np.hypot(xs, ys)
    regions = [region_from_code(int(c)) for c in classify_grid(xs, ys)]
    return trial_metrics(dists.tolist(), regions)


def paired_improvement(no_feedback: TrialMetrics, feedback: TrialMetrics) -> PairedImprovement:
    """Percentage improvement of the feedback trial over its control arm."""
    if no_feedback.r == 0.0 or no_feedback.v == 0.0:
        raise DegenerateBaselineTrial(
            f"control trial has R={no_feedback.r}, V={no_feedback.v}; cannot normalise"
        )
    return PairedImprovement(
        p_r=(no_feedback.r - feedback.r) / no_feedback.r * 100.0,
        p_v=(no_feedback.v - feedback.v) / no_feedback.v * 100.0,
    )


def _median(values: Sequence[float]) -> float:
    # Even count -> midpoint of the two central values.
    srt = sorted(values)
    n = len(srt)
    mid = n // 2
    if n % 2:
        return srt[mid]
    return (srt[mid - 1] + srt[mid]) / 2.0


@dataclass
class GroupReport:
    """Median improvements per condition, per group and pooled overall."""

    condition_order: list[str]
    group_order: list[str]
    # cells[condition][group] -> (median P_R, median P_V); "overall" pools everyone
    cells: dict[str, dict[str, tuple[float, float]]]

    def to_json_dict(self) -> dict:
        return {
            "conditions": self.condition_order,
            "groups": self.group_order + ["overall"],
            "cells": {
                cond: {
                    group: {"p_r": pr, "p_v": pv}
                    for group, (pr, pv) in by_group.items()
                }
                for cond, by_group in self.cells.items()
            },
        }

    def to_csv(self) -> str:
        cols = self.group_order + ["overall"]
        header = ["condition"]
        for g in cols:
            header += [f"{g}_p_r", f"{g}_p_v"]
        lines = [",".join(header)]
        for cond in self.condition_order:
            row = [cond]
            for g in cols:
                pr, pv = self.cells[cond][g]
                row += [f"{pr:.4f}", f"{pv:.4f}"]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def group_report(
    pairs: Mapping[tuple[Hashable, str], PairedImprovement],
    *,
    groups: Mapping[Hashable, str] | None = None,
    condition_order: Sequence[str] | None = None,
) -> GroupReport:
    """Aggregate paired improvements into the per-condition median table.

    ``pairs`` is keyed by (subject, condition label). ``groups`` maps
    subjects to a group label; subjects without one land in "unspecified".
    Every (condition, group) cell must hold at least one pair, otherwise
    :class:`MissingCondition` lists the empty cells. The "overall" column
    pools all subjects regardless of group.
    """
    if not pairs:
        raise MissingCondition([("*", "*")])
    groups = dict(groups or {})
    subject_group = {subj: groups.get(subj, "unspecified") for subj, _cond in pairs}
    group_order = sorted(set(subject_group.values()))
    if condition_order is None:
        condition_order = sorted({cond for _subj, cond in pairs})
    condition_order = list(condition_order)

    by_cell: dict[str, dict[str, list[PairedImprovement]]] = {
        cond: {g: [] for g in group_order + ["overall"]} for cond in condition_order
    }
    for (subj, cond), improvement in pairs.items():
        if cond not in by_cell:
            raise ValueError(f"condition {cond!r} not in condition order {condition_order}")
        by_cell[cond][subject_group[subj]].append(improvement)
        by_cell[cond]["overall"].append(improvement)

    missing = [
        (cond, group)
        for cond in condition_order
        for group in group_order + ["overall"]
        if not by_cell[cond][group]
    ]
    if missing:
        raise MissingCondition(missing)

    cells = {
        cond: {
            group: (
                _median([imp.p_r for imp in by_cell[cond][group]]),
                _median([imp.p_v for imp in by_cell[cond][group]]),
            )
            for group in group_order + ["overall"]
        }
        for cond in condition_order
    }
    return GroupReport(condition_order=condition_order, group_order=group_order, cells=cells)


# Contour polylines are sampled finely enough that the longest chord stays
# well under 0.1 degrees.
_ELLIPSE_POINTS = 1024
_LINE_STEP = 0.05
_LINE_EXTENT = 20.0


def _ellipse(x_semi: float, y_semi: float, y_center: float) -> list[list[float]]:
    t = np.linspace(0.0, 2.0 * np.pi, _ELLIPSE_POINTS, endpoint=False)
    xs = x_semi * np.cos(t)
    ys = y_center + y_semi * np.sin(t)
    pts = [[float(x), float(y)] for x, y in zip(xs, ys)]
    pts.append(pts[0])  # close the loop
    return pts


def _vertical_line(x: float) -> list[list[float]]:
    ys = np.arange(-_LINE_EXTENT, _LINE_EXTENT + _LINE_STEP / 2, _LINE_STEP)
    return [[float(x), float(y)] for y in ys]


def region_boundaries() -> dict[str, list[list[float]]]:
    """Region contour polylines in degrees, keyed by region label.

    D has no contour of its own: it is bounded by C and the E/F lines.
    """
    return {
        "A": _ellipse(1.0, 1.0, 0.0),
        "B": _ellipse(B_X_SEMI, B_Y_SEMI, ELLIPSE_Y_CENTER),
        "C": _ellipse(C_X_SEMI, C_Y_SEMI, ELLIPSE_Y_CENTER),
        "E": _vertical_line(-PITCH_LIMIT),
        "F": _vertical_line(PITCH_LIMIT),
    }


def dispersion_export(points: Sequence[SwayPoint]) -> dict:
    """Scatter dataset for dispersion plots: labelled points plus contours."""
    if not points:
        raise EmptySeries("no sway points to export")
    xs = np.array([p.x for p in points])
    ys = np.array([p.y for p in points])
    codes = classify_grid(xs, ys)
    return {
        "points": [
            {"t": p.t, "x": p.x, "y": p.y, "region": region_from_code(int(c)).label}
            for p, c in zip(points, codes)
        ],
        "boundaries": region_boundaries(),
    }
