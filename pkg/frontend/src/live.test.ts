// Contract checks against a live service (see scripts/dev_service.sh).
// Skipped unless BT_SERVICE_URL is set, e.g.
//   BT_SERVICE_URL=http://127.0.0.1:8080 npx vitest run src/live.test.ts

import { describe, expect, it } from "vitest";

import { fetchPrediction, fetchSchema, type HeadName } from "./api.js";
import { sig3 } from "./format.js";
import { encodePermalink, decodePermalink } from "./permalink.js";
import { headRowHtml, modeIndicatorHtml, predictionHtml } from "./render.js";

const BASE = process.env.BT_SERVICE_URL ?? "";
const liveIt = BASE ? it : it.skip;

async function midpointFeatures(): Promise<Record<string, number>> {
  const schema = await fetchSchema(BASE);
  const features: Record<string, number> = {};
  for (const f of schema.features) {
    features[f.name] = (f.lo + f.hi) / 2;
  }
  return features;
}

describe("live service contract", () => {
  liveIt("midpoint input renders three bands matching the response to 3 sig digits", async () => {
    const features = await midpointFeatures();
    const resp = await fetchPrediction(BASE, features, 1);
    expect(resp.input_mode).toBe("full");
    const html = predictionHtml(resp);
    for (const head of ["ms", "mc", "v"] as HeadName[]) {
      const pred = resp.heads[head];
      const row = headRowHtml(head, resp);
      expect(html).toContain(row);
      expect(row).toContain(`>${sig3(pred.mu)}<`);
      expect(row).toContain(sig3(pred.mu - 2 * pred.sigma_scaled));
      expect(row).toContain(sig3(pred.mu + 2 * pred.sigma_scaled));
    }
  }, 30_000);

  liveIt("toggling a feature to unknown flips the indicator and widens the shear band", async () => {
    const features = await midpointFeatures();
    const full = await fetchPrediction(BASE, features, 1);
    const partial = { ...features };
    delete partial.reinf_ratio_shear;
    const reduced = await fetchPrediction(BASE, partial, 1);
    expect(reduced.input_mode).toBe("reduced");
    expect(modeIndicatorHtml(reduced)).toContain("partial input");
    const widthFull = 4 * full.heads.v.sigma_scaled;
    const widthReduced = 4 * reduced.heads.v.sigma_scaled;
    // widen-or-preserve, with a little slack for Monte Carlo differences
    expect(widthReduced).toBeGreaterThanOrEqual(widthFull * 0.9);
  }, 60_000);

  liveIt("permalink reproduces an identical response body", async () => {
    const features = await midpointFeatures();
    const link = encodePermalink({ features, seed: 123 });
    const replay = decodePermalink(link);
    expect(replay).not.toBeNull();
    const a = await fetchPrediction(BASE, features, 123);
    const b = await fetchPrediction(BASE, replay!.features, replay!.seed);
    expect(JSON.stringify(b)).toBe(JSON.stringify(a));
  }, 60_000);
});
