import { describe, expect, it } from "vitest";

import framesFixture from "../fixtures/telemetry_frames.json";
import trialsScript from "../fixtures/trials_scripted_protocol.json";
import {
  ConsoleState,
  GRID_CELLS,
  SCATTER_CAPACITY,
  ScatterBuffer,
  gridComplete,
  gridCompleteCount,
  gridFromTrials,
} from "../src/state.js";
import type { TelemetryFrame, TrialSummary } from "../src/types.js";

const frames = framesFixture as TelemetryFrame[];
const script = trialsScript as TrialSummary[][];

describe("scatter ring buffer", () => {
  it("appends every frame until capacity", () => {
    const buffer = new ScatterBuffer();
    for (const frame of frames) {
      buffer.push({ x: frame.x, y: frame.y, region: frame.region, warning: frame.warning });
    }
    expect(buffer.length).toBe(frames.length);
    expect(buffer.points().map((p) => p.region)).toEqual(frames.map((f) => f.region));
  });

  it("evicts oldest first at capacity", () => {
    const buffer = new ScatterBuffer(3);
    for (let i = 0; i < 5; i++) {
      buffer.push({ x: i, y: 0, region: "A", warning: "safety" });
    }
    expect(buffer.length).toBe(3);
    expect(buffer.points().map((p) => p.x)).toEqual([2, 3, 4]);
  });

  it("defaults to the 3000-point viewport history", () => {
    expect(SCATTER_CAPACITY).toBe(3000);
    const buffer = new ScatterBuffer();
    for (let i = 0; i < SCATTER_CAPACITY + 10; i++) {
      buffer.push({ x: i, y: 0, region: "A", warning: "safety" });
    }
    expect(buffer.length).toBe(SCATTER_CAPACITY);
    expect(buffer.points()[0].x).toBe(10); // the first ten were evicted
  });
});

describe("console state", () => {
  it("keeps the latest frame and appends all frames to the scatter", () => {
    const state = new ConsoleState();
    for (const frame of frames) {
      state.applyFrame(frame);
    }
    expect(state.latest?.seq).toBe(frames[frames.length - 1].seq);
    expect(state.scatter.length).toBe(frames.length);
  });
});

describe("protocol grid from the recorded trial script", () => {
  it("has 8 cells in condition-major order", () => {
    expect(GRID_CELLS).toHaveLength(8);
    expect(GRID_CELLS[0]).toEqual({ condition: "floor_open", abfOn: false });
    expect(GRID_CELLS[7]).toEqual({ condition: "foam_closed", abfOn: true });
  });

  it("starts fully pending", () => {
    const grid = gridFromTrials([]);
    expect(grid.every((cell) => cell.status === "pending")).toBe(true);
    expect(gridCompleteCount(grid)).toBe(0);
  });

  it("reaches 8/8 as the scripted protocol progresses", () => {
    const counts: number[] = [];
    for (const snapshot of script) {
      counts.push(gridCompleteCount(gridFromTrials(snapshot)));
    }
    expect(counts).toEqual([1, 2, 3, 4, 5, 6, 7, 8]);
    const finalGrid = gridFromTrials(script[script.length - 1]);
    expect(gridComplete(finalGrid)).toBe(true);
    expect(finalGrid.every((cell) => cell.status === "done")).toBe(true);
  });

  it("marks aborted trials distinctly and lets a rerun clear them", () => {
    const record = script[0][0];
    const aborted = { ...record, aborted: true };
    const cellOf = (grid: ReturnType<typeof gridFromTrials>) =>
      grid.find((c) => c.condition === record.condition && c.abfOn === record.abf_on);
    expect(cellOf(gridFromTrials([aborted]))?.status).toBe("aborted");
    // a later clean record for the same cell wins
    expect(cellOf(gridFromTrials([aborted, record]))?.status).toBe("done");
  });
});
