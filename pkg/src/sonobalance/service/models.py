"""Pydantic request/response models for the gateway API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..session import Condition, Eyes, Surface


class ConditionModel(BaseModel):
    eyes: Literal["open", "closed"]
    surface: Literal["floor", "foam"]

    def to_condition(self) -> Condition:
        return Condition(eyes=Eyes(self.eyes), surface=Surface(self.surface))

    @classmethod
    def from_condition(cls, condition: Condition) -> "ConditionModel":
        return cls(eyes=condition.eyes.value, surface=condition.surface.value)


class CalibrateRequest(BaseModel):
    window_s: float = Field(default=5.0, gt=0.0, le=60.0)


class BaselineModel(BaseModel):
    x0: float
    y0: float
    window: float
    n_samples: int


class TrialStartRequest(BaseModel):
    condition: ConditionModel
    abf_on: bool
    duration_s: float = Field(default=60.0, gt=0.0)


class TrialStartResponse(BaseModel):
    condition: str
    abf_on: bool
    duration_s: float
    samples_seen: int
    started_at: float


class StopResponse(BaseModel):
    stopped: bool
    state: str


class VolumeRequest(BaseModel):
    reference_volume: float = Field(gt=0.0, le=1.0)


class VolumeResponse(BaseModel):
    reference_volume: float


class StateResponse(BaseModel):
    state: str
    baseline: BaselineModel | None
    reference_volume: float
    subject_id: str
    trial: dict | None
    last_error: str | None
    source: str
    protocol_complete: bool


class TrialSummary(BaseModel):
    trial_id: str
    subject_id: str
    group: str
    condition: str
    abf_on: bool
    n_samples: int
    aborted: bool
    metrics: dict
    started_at: str


class ReportCell(BaseModel):
    p_r: float
    p_v: float


class ReportResponse(BaseModel):
    conditions: list[str]
    groups: list[str]
    cells: dict[str, dict[str, ReportCell]]


class DispersionPoint(BaseModel):
    t: float
    x: float
    y: float
    region: str


class DispersionResponse(BaseModel):
    trial_id: str
    condition: str
    abf_on: bool
    points: list[DispersionPoint]
    boundaries: dict[str, list[list[float]]]
