/** Console state: scatter ring buffer, protocol grid, report.
 *
 * No sway math happens here or anywhere else client-side: every region
 * label, warning level, boundary point and metric is taken verbatim from
 * gateway payloads.
 */

import type {
  ConnectionStatus,
} from "./telemetry.js";
import type {
  RegionLabel,
  Report,
  TelemetryFrame,
  TrialSummary,
  WarningName,
} from "./types.js";

export const SCATTER_CAPACITY = 3000;

export interface ScatterPoint {
  x: number;
  y: number;
  region: RegionLabel;
  warning: WarningName;
}

/** Fixed-capacity ring: oldest points are evicted first. */
export class ScatterBuffer {
  private buffer: ScatterPoint[] = [];
  private start = 0;

  constructor(readonly capacity: number = SCATTER_CAPACITY) {}

  push(point: ScatterPoint): void {
    if (this.buffer.length < this.capacity) {
      this.buffer.push(point);
    } else {
      this.buffer[this.start] = point;
      this.start = (this.start + 1) % this.capacity;
    }
  }

  get length(): number {
    return this.buffer.length;
  }

  /** Points in arrival order, oldest first. */
  points(): ScatterPoint[] {
    return this.buffer.slice(this.start).concat(this.buffer.slice(0, this.start));
  }

  clear(): void {
    this.buffer = [];
    this.start = 0;
  }
}

/** The 8 protocol cells in reporting order: condition x feedback arm. */
export const GRID_CELLS: ReadonlyArray<{ condition: string; abfOn: boolean }> = [
  "floor_open", "floor_closed", "foam_open", "foam_closed",
].flatMap((condition) => [
  { condition, abfOn: false },
  { condition, abfOn: true },
]);

export type CellStatus = "pending" | "done" | "aborted";

export interface GridCell {
  condition: string;
  abfOn: boolean;
  status: CellStatus;
}

/** Derive the grid from the gateway's trial list (latest record wins). */
export function gridFromTrials(trials: TrialSummary[]): GridCell[] {
  const status = new Map<string, CellStatus>();
  for (const trial of trials) {
    status.set(`${trial.condition}|${trial.abf_on}`, trial.aborted ? "aborted" : "done");
  }
  return GRID_CELLS.map(({ condition, abfOn }) => ({
    condition,
    abfOn,
    status: status.get(`${condition}|${abfOn}`) ?? "pending",
  }));
}

export function gridCompleteCount(grid: GridCell[]): number {
  return grid.filter((cell) => cell.status === "done").length;
}

export function gridComplete(grid: GridCell[]): boolean {
  return gridCompleteCount(grid) === GRID_CELLS.length;
}

export class ConsoleState {
  connection: ConnectionStatus = "disconnected";
  latest: TelemetryFrame | null = null;
  scatter = new ScatterBuffer();
  grid: GridCell[] = gridFromTrials([]);
  report: Report | null = null;
  lastError: string | null = null;

  /** Every frame lands in the scatter buffer; `latest` wins for rendering. */
  applyFrame(frame: TelemetryFrame): void {
    this.latest = frame;
    this.scatter.push({
      x: frame.x,
      y: frame.y,
      region: frame.region,
      warning: frame.warning,
    });
  }

  applyTrials(trials: TrialSummary[]): void {
    this.grid = gridFromTrials(trials);
  }

  applyConnection(status: ConnectionStatus): void {
    this.connection = status;
  }

  applyReport(report: Report): void {
    this.report = report;
  }
}
