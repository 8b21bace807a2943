/** Sway scatter view: fixed +-20 degree viewport, gateway-supplied contours.
 *
 * The view only projects and paints. Region boundaries come from the
 * `/dispersion` payload and are drawn as-is; point labels and warning
 * levels are whatever the telemetry frames said.
 */

import type { ScatterPoint } from "./state.js";
import type { Boundaries, TelemetryFrame, WarningName } from "./types.js";

export const VIEW_DEGREES = 20;

export const WARNING_COLORS: Record<WarningName, string> = {
  safety: "#2e7d32",
  low: "#f9a825",
  medium: "#ef6c00",
  high: "#c62828",
};

const BOUNDARY_COLOR = "#9e9e9e";
const POINT_RADIUS = 1.5;
const HIGHLIGHT_RADIUS = 5;

/** Subset of CanvasRenderingContext2D the painter needs (stubbable in tests). */
export interface Canvas2DLike {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
}

export interface PlottedPoint extends ScatterPoint {
  px: number;
  py: number;
  color: string;
}

export class ScatterView {
  private boundaries: Boundaries = {};
  private points: PlottedPoint[] = [];
  private current: PlottedPoint | null = null;

  constructor(readonly width: number, readonly height: number) {}

  /** Degrees -> pixels; x (pitch) rightward, y (roll) upward. */
  project(xDeg: number, yDeg: number): [number, number] {
    const px = ((xDeg + VIEW_DEGREES) / (2 * VIEW_DEGREES)) * this.width;
    const py = ((VIEW_DEGREES - yDeg) / (2 * VIEW_DEGREES)) * this.height;
    return [px, py];
  }

  setBoundaries(boundaries: Boundaries): void {
    this.boundaries = boundaries;
  }

  getBoundaries(): Boundaries {
    return this.boundaries;
  }

  /** Rebuild the plotted set from the scatter buffer (all frames, in order). */
  setPoints(points: ScatterPoint[]): void {
    this.points = points.map((point) => this.toPlotted(point));
  }

  plotFrame(frame: TelemetryFrame): void {
    const plotted = this.toPlotted({
      x: frame.x,
      y: frame.y,
      region: frame.region,
      warning: frame.warning,
    });
    this.points.push(plotted);
    this.current = plotted;
  }

  setCurrent(point: ScatterPoint | null): void {
    this.current = point ? this.toPlotted(point) : null;
  }

  private toPlotted(point: ScatterPoint): PlottedPoint {
    const [px, py] = this.project(point.x, point.y);
    return { ...point, px, py, color: WARNING_COLORS[point.warning] };
  }

  plotted(): readonly PlottedPoint[] {
    return this.points;
  }

  currentPoint(): PlottedPoint | null {
    return this.current;
  }

  draw(ctx: Canvas2DLike): void {
    ctx.clearRect(0, 0, this.width, this.height);

    ctx.globalAlpha = 1.0;
    ctx.lineWidth = 1.0;
    ctx.strokeStyle = BOUNDARY_COLOR;
    for (const polyline of Object.values(this.boundaries)) {
      if (polyline.length < 2) {
        continue;
      }
      ctx.beginPath();
      const [x0, y0] = this.project(polyline[0][0], polyline[0][1]);
      ctx.moveTo(x0, y0);
      for (let i = 1; i < polyline.length; i++) {
        const [x, y] = this.project(polyline[i][0], polyline[i][1]);
        ctx.lineTo(x, y);
      }
      ctx.stroke();
    }

    ctx.globalAlpha = 0.6;
    for (const point of this.points) {
      ctx.fillStyle = point.color;
      ctx.beginPath();
      ctx.arc(point.px, point.py, POINT_RADIUS, 0, 2 * Math.PI);
      ctx.fill();
    }

    if (this.current) {
      ctx.globalAlpha = 1.0;
      ctx.lineWidth = 2.0;
      ctx.strokeStyle = this.current.color;
      ctx.beginPath();
      ctx.arc(this.current.px, this.current.py, HIGHLIGHT_RADIUS, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}
