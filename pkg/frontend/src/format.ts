// Display formatting: numbers shown to 3 significant digits; the underlying
// response values are never mutated.

export function sig3(x: number): string {
  if (!Number.isFinite(x)) return String(x);
  if (x === 0) return "0.00";
  return Number(x.toPrecision(3)).toString();
}

export function formatBand(lo: number, hi: number): string {
  return `[${sig3(lo)}, ${sig3(hi)}]`;
}
