// Thin typed client for the trial service. All state lives on the server;
// the console only relays and renders.

import type {
  EventsPage,
  OutcomeDelta,
  PartitionView,
  PredictiveView,
  RecommendationView,
  TrialStateView,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly kind: string;

  constructor(status: number, kind: string, detail: string) {
    super(detail);
    this.status = status;
    this.kind = kind;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, {
      headers: { "content-type": "application/json" },
      ...init,
    });
  } catch (err) {
    throw new ApiError(0, "offline", `service unreachable: ${String(err)}`);
  }
  if (!resp.ok) {
    let kind = `http_${resp.status}`;
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { error?: string; detail?: unknown };
      if (body.error) kind = body.error;
      if (body.detail) detail = JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, kind, detail);
  }
  return (await resp.json()) as T;
}

export class TrialApi {
  constructor(
    readonly baseUrl: string = "",
    readonly trialId: string,
  ) {}

  static async createTrial(
    baseUrl: string,
    config: Record<string, unknown>,
    idempotencyKey?: string,
  ): Promise<{ trial_id: string }> {
    return request(`${baseUrl}/trials`, {
      method: "POST",
      body: JSON.stringify({ config, idempotency_key: idempotencyKey ?? null }),
    });
  }

  state(): Promise<TrialStateView> {
    return request(`${this.baseUrl}/trials/${this.trialId}/state`);
  }

  enroll(biomarkers: number[]): Promise<RecommendationView> {
    return request(`${this.baseUrl}/trials/${this.trialId}/patients`, {
      method: "POST",
      body: JSON.stringify({ biomarkers }),
    });
  }

  recordOutcome(patientId: number, y: 0 | 1): Promise<OutcomeDelta> {
    return request(
      `${this.baseUrl}/trials/${this.trialId}/patients/${patientId}/outcome`,
      { method: "POST", body: JSON.stringify({ y }) },
    );
  }

  partition(): Promise<PartitionView> {
    return request(`${this.baseUrl}/trials/${this.trialId}/partition`);
  }

  predictive(x: number[]): Promise<PredictiveView> {
    const packed = x.map((v) => String(v)).join(",");
    return request(
      `${this.baseUrl}/trials/${this.trialId}/predictive?x=${encodeURIComponent(packed)}`,
    );
  }

  eventsSince(seq: number): Promise<EventsPage> {
    return request(`${this.baseUrl}/trials/${this.trialId}/events?since=${seq}`);
  }
}
