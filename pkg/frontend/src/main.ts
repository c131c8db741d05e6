// DOM glue: schema-driven form on the left, prediction panel on the right.
// Feature rows are generated from /v1/schema (ordered by the stored
// importance ranking) so schema changes need no UI edits.

import {
  ApiError,
  fetchPrediction,
  fetchSchema,
  type FeatureSpec,
  type SchemaResponse,
} from "./api.js";
import { nextFeature } from "./guidance.js";
import { decodePermalink, encodePermalink } from "./permalink.js";
import { predictionHtml } from "./render.js";
import {
  acceptResponse,
  canSubmit,
  initialForm,
  knownValues,
  nextTicket,
  type FormState,
} from "./state.js";

const API_BASE =
  (window as unknown as { BT_API_BASE?: string }).BT_API_BASE ?? "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function orderedSpecs(schema: SchemaResponse): FeatureSpec[] {
  const byName = new Map(schema.features.map((f) => [f.name, f]));
  const ordered: FeatureSpec[] = [];
  for (const name of schema.ranking) {
    const spec = byName.get(name);
    if (spec) ordered.push(spec);
  }
  for (const spec of schema.features) {
    if (!schema.ranking.includes(spec.name)) ordered.push(spec);
  }
  return ordered;
}

function buildForm(specs: FeatureSpec[], state: FormState, onChange: () => void): void {
  const form = el<HTMLDivElement>("feature-form");
  form.innerHTML = "";
  for (const spec of specs) {
    const row = document.createElement("div");
    row.className = "feature-row";
    row.innerHTML = `
      <label title="${spec.description}">${spec.name} <small>[${spec.lo}, ${spec.hi}] ${spec.unit}</small></label>
      <input type="number" step="any" data-feature="${spec.name}" disabled>
      <label class="unknown-toggle">
        <input type="checkbox" data-unknown="${spec.name}" checked> unknown
      </label>`;
    form.appendChild(row);

    const input = row.querySelector<HTMLInputElement>("input[type=number]")!;
    const toggle = row.querySelector<HTMLInputElement>("input[type=checkbox]")!;
    input.addEventListener("input", () => {
      state.fields[spec.name].text = input.value;
      onChange();
    });
    toggle.addEventListener("change", () => {
      state.fields[spec.name].unknown = toggle.checked;
      input.disabled = toggle.checked;
      onChange();
    });
  }
}

function syncFormInputs(state: FormState): void {
  for (const [name, field] of Object.entries(state.fields)) {
    const input = document.querySelector<HTMLInputElement>(
      `input[data-feature="${name}"]`,
    );
    const toggle = document.querySelector<HTMLInputElement>(
      `input[data-unknown="${name}"]`,
    );
    if (input) {
      input.value = field.text;
      input.disabled = field.unknown;
    }
    if (toggle) toggle.checked = field.unknown;
  }
}

async function run(): Promise<void> {
  const schema = await fetchSchema(API_BASE);
  const specs = orderedSpecs(schema);
  const state = initialForm(specs);

  const submit = el<HTMLButtonElement>("submit");
  const panel = el<HTMLDivElement>("prediction");
  const guidance = el<HTMLDivElement>("guidance");
  const status = el<HTMLDivElement>("status");
  const permalink = el<HTMLButtonElement>("permalink");
  const seedInput = el<HTMLInputElement>("seed");

  const refresh = () => {
    submit.disabled = !canSubmit(state, specs) || state.pending;
    const { values, issues } = knownValues(state, specs);
    for (const row of document.querySelectorAll(".feature-row")) {
      row.classList.remove("invalid");
    }
    for (const issue of issues) {
      document
        .querySelector(`input[data-feature="${issue.name}"]`)
        ?.closest(".feature-row")
        ?.classList.add("invalid");
    }
    const next = nextFeature(Object.keys(values), schema.ranking);
    if (next === null || Object.keys(values).length === specs.length) {
      guidance.hidden = true;
    } else {
      guidance.hidden = false;
      guidance.textContent = `most informative input to provide next: ${next}`;
    }
  };

  const doSubmit = async () => {
    const { values } = knownValues(state, specs);
    state.seed = Number(seedInput.value) || 0;
    state.pending = true;
    refresh();
    const ticket = nextTicket(state);
    status.textContent = "querying...";
    try {
      const resp = await fetchPrediction(API_BASE, values, state.seed);
      if (acceptResponse(state, ticket, resp)) {
        panel.innerHTML = predictionHtml(resp);
        status.textContent = "";
      }
    } catch (err) {
      state.pending = false;
      if (err instanceof ApiError) {
        status.textContent = `${err.body.code}: ${err.body.message}`;
        const violations =
          (err.body.details.violations as { feature: string }[] | undefined) ?? [];
        for (const v of violations) {
          document
            .querySelector(`input[data-feature="${v.feature}"]`)
            ?.closest(".feature-row")
            ?.classList.add("invalid");
        }
      } else {
        status.textContent = String(err);
      }
    } finally {
      state.pending = false;
      refresh();
    }
  };

  buildForm(specs, state, refresh);
  submit.addEventListener("click", doSubmit);
  permalink.addEventListener("click", () => {
    const { values } = knownValues(state, specs);
    const hash = encodePermalink({ features: values, seed: state.seed });
    history.replaceState(null, "", hash);
    navigator.clipboard?.writeText(window.location.href).catch(() => {});
    status.textContent = "permalink copied to the address bar";
  });

  const fromLink = decodePermalink(window.location.hash);
  if (fromLink) {
    seedInput.value = String(fromLink.seed);
    state.seed = fromLink.seed;
    for (const [name, value] of Object.entries(fromLink.features)) {
      if (name in state.fields) {
        state.fields[name] = { text: String(value), unknown: false };
      }
    }
    syncFormInputs(state);
    refresh();
    if (canSubmit(state, specs)) void doSubmit();
  } else {
    refresh();
  }
}

run().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to load schema: ${err}`;
});
