// Typed client for the pre-assessment service. The UI never computes
// predictions itself; every number shown comes from these responses.

export interface FeatureSpec {
  name: string;
  unit: string;
  lo: number;
  hi: number;
  description: string;
}

export interface SchemaResponse {
  features: FeatureSpec[];
  ranking: string[];
}

export interface HeadPrediction {
  mu: number;
  sigma: number;
  sigma_scaled: number;
  kappa: number;
  n_passes: number;
}

export interface HeadAssessment {
  mu: number;
  sigma_scaled: number;
  lower_bound: number;
  class: TriageClass;
  near_boundary: boolean;
}

export type TriageClass = "red" | "orange" | "green";
export type HeadName = "ms" | "mc" | "v";

export interface TriageResult {
  class: TriageClass;
  governing_head: HeadName;
  margin: number;
  heads: Record<HeadName, HeadAssessment>;
}

export interface PredictResponse {
  heads: Record<HeadName, HeadPrediction>;
  triage: TriageResult;
  input_mode: "full" | "reduced";
  diagnostics: Record<HeadName, { between_share: number }>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, init);
  const text = await resp.text();
  if (!resp.ok) {
    let body: ApiErrorBody;
    try {
      body = JSON.parse(text) as ApiErrorBody;
    } catch {
      body = { code: "unexpected", message: text, details: {} };
    }
    throw new ApiError(resp.status, body);
  }
  return JSON.parse(text) as T;
}

export function fetchSchema(base: string): Promise<SchemaResponse> {
  return request<SchemaResponse>(base, "/v1/schema");
}

export function fetchPrediction(
  base: string,
  features: Record<string, number>,
  seed: number,
): Promise<PredictResponse> {
  return request<PredictResponse>(base, "/v1/predict", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ features, seed }),
  });
}
