// Pure view computation: band geometry and HTML fragments for the
// prediction panel. Numbers are formatted for display only; everything
// originates verbatim from the API response.

import type { HeadName, PredictResponse, TriageClass } from "./api.js";
import { formatBand, sig3 } from "./format.js";

export const HEAD_ORDER: HeadName[] = ["ms", "mc", "v"];

export const HEAD_LABELS: Record<HeadName, string> = {
  ms: "Bending (steel)",
  mc: "Bending (concrete)",
  v: "Shear",
};

export const CLASS_TEXT: Record<TriageClass, string> = {
  red: "Critical: prioritize this structure for detailed analysis; even refined methods may not show sufficient capacity.",
  orange: "Likely compliant, but the uncertainty is high; a refined analysis is recommended, particularly when the mean sits just above 1.",
  green: "High confidence in compliance; no further analysis needed at this stage.",
};

export interface BandGeometry {
  lo: number;
  hi: number;
  mu: number;
  // fractions of the drawing domain, for CSS positioning
  loFrac: number;
  hiFrac: number;
  muFrac: number;
  refFrac: number; // position of the eta = 1 reference line
  domain: [number, number];
}

export function bandGeometry(mu: number, sigmaScaled: number): BandGeometry {
  const lo = mu - 2 * sigmaScaled;
  const hi = mu + 2 * sigmaScaled;
  // domain covers the band, the reference line, and a little margin
  const dLo = Math.min(lo, 1.0, mu) - 0.25;
  const dHi = Math.max(hi, 1.0, mu) + 0.25;
  const span = dHi - dLo;
  const frac = (v: number) => (v - dLo) / span;
  return {
    lo,
    hi,
    mu,
    loFrac: frac(lo),
    hiFrac: frac(hi),
    muFrac: frac(mu),
    refFrac: frac(1.0),
    domain: [dLo, dHi],
  };
}

export function headRowHtml(head: HeadName, resp: PredictResponse): string {
  const pred = resp.heads[head];
  const assess = resp.triage.heads[head];
  const geom = bandGeometry(pred.mu, pred.sigma_scaled);
  const pct = (f: number) => `${(100 * Math.min(Math.max(f, 0), 1)).toFixed(2)}%`;
  const near = assess.near_boundary
    ? '<span class="near-boundary" title="mean only slightly above 1">!</span>'
    : "";
  return `
    <div class="head-row head-${assess.class}" data-head="${head}">
      <div class="head-label">${HEAD_LABELS[head]} ${near}</div>
      <div class="band-track">
        <div class="band" style="left:${pct(geom.loFrac)};width:${pct(geom.hiFrac - geom.loFrac)}"></div>
        <div class="mu-marker" style="left:${pct(geom.muFrac)}" title="mean"></div>
        <div class="ref-line" style="left:${pct(geom.refFrac)}" title="compliance threshold"></div>
      </div>
      <div class="band-numbers">
        <span class="mu" data-field="mu">${sig3(pred.mu)}</span>
        <span class="band-text" data-field="band">${formatBand(geom.lo, geom.hi)}</span>
      </div>
    </div>`;
}

export function badgeHtml(resp: PredictResponse): string {
  const klass = resp.triage.class;
  const head = resp.triage.governing_head;
  return `
    <div class="badge badge-${klass}">
      <span class="badge-class">${klass.toUpperCase()}</span>
      <span class="badge-head">governing: ${HEAD_LABELS[head]}</span>
      <p class="badge-text">${CLASS_TEXT[klass]}</p>
    </div>`;
}

export function modeIndicatorHtml(resp: PredictResponse): string {
  if (resp.input_mode === "reduced") {
    return '<div class="mode mode-reduced">estimated from partial input</div>';
  }
  return '<div class="mode mode-full">full input</div>';
}

export function predictionHtml(resp: PredictResponse): string {
  const rows = HEAD_ORDER.map((h) => headRowHtml(h, resp)).join("\n");
  return `${modeIndicatorHtml(resp)}\n${badgeHtml(resp)}\n<div class="heads">${rows}</div>`;
}
