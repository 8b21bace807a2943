/** DOM wiring for the operator console. */

import { GatewayClient, GatewayError } from "./client.js";
import { ScatterView, WARNING_COLORS } from "./scatter.js";
import { ConsoleState, gridComplete, gridCompleteCount } from "./state.js";
import { TelemetryFeed } from "./telemetry.js";
import type { Condition, Report } from "./types.js";

const httpBase = `${location.protocol}//${location.host}`;
const wsBase = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}`;

const client = new GatewayClient(httpBase);
const state = new ConsoleState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scatter");
const view = new ScatterView(canvas.width, canvas.height);
const ctx = canvas.getContext("2d")!;

const banner = el<HTMLDivElement>("banner");
const regionIndicator = el<HTMLDivElement>("region-indicator");
const statusLine = el<HTMLDivElement>("status-line");
const gridBox = el<HTMLDivElement>("grid");
const reportBox = el<HTMLDivElement>("report");
const errorBox = el<HTMLDivElement>("error");

function showError(err: unknown): void {
  errorBox.textContent = err instanceof GatewayError
    ? `gateway: ${err.message}`
    : String(err);
  errorBox.classList.remove("hidden");
  setTimeout(() => errorBox.classList.add("hidden"), 6000);
}

async function guarded(action: () => Promise<unknown>): Promise<void> {
  try {
    await action();
    await refreshState();
  } catch (err) {
    showError(err);
  }
}

function currentCondition(): Condition {
  return {
    eyes: el<HTMLSelectElement>("eyes").value as Condition["eyes"],
    surface: el<HTMLSelectElement>("surface").value as Condition["surface"],
  };
}

el<HTMLButtonElement>("calibrate").onclick = () =>
  guarded(() => client.calibrate(Number(el<HTMLInputElement>("window").value)));

el<HTMLButtonElement>("start").onclick = () =>
  guarded(() => client.startTrial(
    currentCondition(),
    el<HTMLInputElement>("abf").checked,
    Number(el<HTMLInputElement>("duration").value),
  ));

el<HTMLButtonElement>("stop").onclick = () => guarded(() => client.stopTrial());

el<HTMLInputElement>("volume").onchange = (event) => {
  const value = Number((event.target as HTMLInputElement).value);
  guarded(() => client.setVolume(value));
};

el<HTMLButtonElement>("load-report").onclick = () => guarded(async () => {
  state.applyReport(await client.getReport());
  renderReport(state.report!);
});

function renderGrid(): void {
  gridBox.innerHTML = "";
  for (const cell of state.grid) {
    const div = document.createElement("div");
    div.className = `cell ${cell.status}`;
    div.textContent = `${cell.condition} ${cell.abfOn ? "ABF" : "ctl"}`;
    gridBox.appendChild(div);
  }
  const done = gridCompleteCount(state.grid);
  el<HTMLSpanElement>("grid-count").textContent = `${done}/8`;
  el<HTMLButtonElement>("load-report").disabled = !gridComplete(state.grid);
}

function renderReport(report: Report): void {
  const groups = report.groups;
  let html = "<table><tr><th>condition</th>";
  for (const group of groups) {
    html += `<th>${group} P_R</th><th>${group} P_V</th>`;
  }
  html += "</tr>";
  for (const condition of report.conditions) {
    html += `<tr><td>${condition}</td>`;
    for (const group of groups) {
      const cell = report.cells[condition][group];
      html += `<td>${cell.p_r.toFixed(2)}</td><td>${cell.p_v.toFixed(2)}</td>`;
    }
    html += "</tr>";
  }
  reportBox.innerHTML = html + "</table>";
}

async function refreshState(): Promise<void> {
  const snapshot = await client.getState();
  statusLine.textContent =
    `state: ${snapshot.state} | volume: ${snapshot.reference_volume.toFixed(2)}` +
    (snapshot.baseline ? "" : " | calibration required") +
    (snapshot.last_error ? ` | last error: ${snapshot.last_error}` : "");
  state.applyTrials(await client.getTrials());
  renderGrid();
}

async function loadBoundaries(): Promise<void> {
  // contour geometry comes from the gateway; retry until a trial exists
  try {
    const trials = await client.getTrials();
    if (trials.length > 0) {
      const dispersion = await client.getDispersion(trials[0].trial_id);
      view.setBoundaries(dispersion.boundaries);
      return;
    }
  } catch {
    // gateway not ready; retry below
  }
  setTimeout(loadBoundaries, 3000);
}

const feed = new TelemetryFeed(`${wsBase}/ws/telemetry`);
feed.onFrame((frame) => {
  state.applyFrame(frame);
});
feed.onStatus((status) => {
  state.applyConnection(status);
  banner.textContent = status === "connected" ? "" : `telemetry ${status}…`;
  banner.classList.toggle("hidden", status === "connected");
});
feed.connect();

// render loop: latest frame wins, full buffer redrawn at display refresh
function paint(): void {
  view.setPoints(state.scatter.points());
  const latest = state.latest;
  view.setCurrent(latest
    ? { x: latest.x, y: latest.y, region: latest.region, warning: latest.warning }
    : null);
  view.draw(ctx);
  if (latest) {
    regionIndicator.textContent = `${latest.region} (${latest.warning})`;
    regionIndicator.style.backgroundColor = WARNING_COLORS[latest.warning];
    el<HTMLSpanElement>("dist").textContent = latest.dist.toFixed(3);
  }
  requestAnimationFrame(paint);
}

refreshState().catch(showError);
loadBoundaries();
setInterval(() => refreshState().catch(() => undefined), 2000);
requestAnimationFrame(paint);
