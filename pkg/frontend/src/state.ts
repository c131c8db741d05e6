// Form state: which features are known, their raw text inputs, and whether
// the current state is submittable. Validation ranges come from the fetched
// schema, never from constants baked into the UI.

import type { FeatureSpec, PredictResponse } from "./api.js";

export interface FieldState {
  text: string;
  unknown: boolean;
}

export interface FormState {
  fields: Record<string, FieldState>;
  seed: number;
  pending: boolean;
  requestCounter: number;
  lastResponse: PredictResponse | null;
}

export function initialForm(specs: FeatureSpec[], seed = 0): FormState {
  const fields: Record<string, FieldState> = {};
  for (const spec of specs) {
    fields[spec.name] = { text: "", unknown: true };
  }
  return { fields, seed, pending: false, requestCounter: 0, lastResponse: null };
}

export interface FieldIssue {
  name: string;
  reason: "not-a-number" | "out-of-range";
}

export function knownValues(
  state: FormState,
  specs: FeatureSpec[],
): { values: Record<string, number>; issues: FieldIssue[] } {
  const values: Record<string, number> = {};
  const issues: FieldIssue[] = [];
  for (const spec of specs) {
    const field = state.fields[spec.name];
    if (!field || field.unknown) continue;
    const parsed = Number(field.text.trim());
    if (field.text.trim() === "" || Number.isNaN(parsed)) {
      issues.push({ name: spec.name, reason: "not-a-number" });
    } else if (parsed < spec.lo || parsed > spec.hi) {
      issues.push({ name: spec.name, reason: "out-of-range" });
    } else {
      values[spec.name] = parsed;
    }
  }
  return { values, issues };
}

export function canSubmit(state: FormState, specs: FeatureSpec[]): boolean {
  const { values, issues } = knownValues(state, specs);
  return issues.length === 0 && Object.keys(values).length >= 1;
}

// Monotonic counter: a submission takes the next ticket, and a response is
// applied only if no newer submission has been issued meanwhile.
export function nextTicket(state: FormState): number {
  state.requestCounter += 1;
  return state.requestCounter;
}

export function acceptResponse(
  state: FormState,
  ticket: number,
  response: PredictResponse,
): boolean {
  if (ticket !== state.requestCounter) {
    return false; // a newer submission superseded this response
  }
  state.lastResponse = response;
  state.pending = false;
  return true;
}
