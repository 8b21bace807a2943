/** HTTP client for the gateway; all command buttons funnel through here. */

import type {
  Baseline,
  Condition,
  Dispersion,
  Report,
  StateSnapshot,
  TrialSummary,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Carries the gateway's reason string so the UI can show it verbatim. */
export class GatewayError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(detail);
    this.name = "GatewayError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") {
      detail = body.detail;
    } else if (body.detail) {
      detail = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new GatewayError(response.status, detail);
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  calibrate(windowS = 5.0): Promise<Baseline> {
    return this.request("POST", "/calibrate", { window_s: windowS });
  }

  startTrial(condition: Condition, abfOn: boolean, durationS = 60.0): Promise<unknown> {
    return this.request("POST", "/trial/start", {
      condition,
      abf_on: abfOn,
      duration_s: durationS,
    });
  }

  stopTrial(): Promise<{ stopped: boolean; state: string }> {
    return this.request("POST", "/trial/stop");
  }

  setVolume(referenceVolume: number): Promise<{ reference_volume: number }> {
    return this.request("PUT", "/volume", { reference_volume: referenceVolume });
  }

  getState(): Promise<StateSnapshot> {
    return this.request("GET", "/state");
  }

  getTrials(): Promise<TrialSummary[]> {
    return this.request("GET", "/trials");
  }

  getReport(): Promise<Report> {
    return this.request("GET", "/report");
  }

  getDispersion(trialId: string): Promise<Dispersion> {
    return this.request("GET", `/dispersion/${trialId}`);
  }
}
