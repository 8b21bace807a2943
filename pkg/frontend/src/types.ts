/** Payload shapes of the gateway API (see docs/api.md in the engine repo). */

export type RegionLabel = "A" | "B" | "C" | "D" | "E" | "F";
export type WarningName = "safety" | "low" | "medium" | "high";

export interface SynthParamsSummary {
  region: RegionLabel;
  warning: WarningName;
  source: string;
  band_low_hz: number;
  band_high_hz: number;
  gate_period_s: number | null;
  gate_duty: number;
  volume_mult: number;
  pan: number;
}

export interface TrialInfo {
  condition: string;
  abf_on: boolean;
  duration_s: number;
  samples_seen: number;
  started_at: number;
}

export interface TelemetryFrame {
  seq: number;
  t: number;
  x: number;
  y: number;
  x_norm: number;
  y_norm: number;
  region: RegionLabel;
  warning: WarningName;
  dist: number;
  params: SynthParamsSummary | null;
  trial: TrialInfo | null;
}

export interface Baseline {
  x0: number;
  y0: number;
  window: number;
  n_samples: number;
}

export interface StateSnapshot {
  state: "idle" | "calibrating" | "trial";
  baseline: Baseline | null;
  reference_volume: number;
  subject_id: string;
  trial: TrialInfo | null;
  last_error: string | null;
  source: string;
  protocol_complete: boolean;
}

export interface TrialSummary {
  trial_id: string;
  subject_id: string;
  group: string;
  condition: string;
  abf_on: boolean;
  n_samples: number;
  aborted: boolean;
  metrics: { r: number; v: number };
  started_at: string;
}

export interface ReportCell {
  p_r: number;
  p_v: number;
}

export interface Report {
  conditions: string[];
  groups: string[];
  cells: Record<string, Record<string, ReportCell>>;
}

export interface DispersionPoint {
  t: number;
  x: number;
  y: number;
  region: RegionLabel;
}

/** Region contour polylines in degrees, keyed by region label. */
export type Boundaries = Record<string, [number, number][]>;

export interface Dispersion {
  trial_id: string;
  condition: string;
  abf_on: boolean;
  points: DispersionPoint[];
  boundaries: Boundaries;
}

export interface Condition {
  eyes: "open" | "closed";
  surface: "floor" | "foam";
}
