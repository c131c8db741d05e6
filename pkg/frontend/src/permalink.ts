// Reproducibility: the permalink encodes the known features plus the seed,
// so reopening it replays the identical request (and, because the service is
// deterministic per seed, the identical response).

export interface PermalinkState {
  features: Record<string, number>;
  seed: number;
}

export function encodePermalink(state: PermalinkState): string {
  const parts = Object.keys(state.features)
    .sort()
    .map((k) => `${encodeURIComponent(k)}=${state.features[k]}`);
  parts.push(`seed=${state.seed}`);
  return "#" + parts.join("&");
}

export function decodePermalink(hash: string): PermalinkState | null {
  const body = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!body) return null;
  const features: Record<string, number> = {};
  let seed = 0;
  for (const part of body.split("&")) {
    const idx = part.indexOf("=");
    if (idx < 0) return null;
    const key = decodeURIComponent(part.slice(0, idx));
    const value = Number(part.slice(idx + 1));
    if (Number.isNaN(value)) return null;
    if (key === "seed") {
      seed = value;
    } else {
      features[key] = value;
    }
  }
  return { features, seed };
}
