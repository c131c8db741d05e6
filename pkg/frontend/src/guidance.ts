// What-if loop support: suggest the most influential feature the engineer
// has not provided yet, following the service's stored importance ranking.

export function nextFeature(known: Iterable<string>, ranking: string[]): string | null {
  const have = new Set(known);
  for (const name of ranking) {
    if (!have.has(name)) return name;
  }
  return null;
}
