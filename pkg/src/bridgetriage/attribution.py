"""Model-agnostic Shapley attributions by weighted coalition regression.

Coalition values marginalize missing features over a background set; the
attribution solves the kernel-weighted least squares with the efficiency
constraint eliminated analytically, so base_value plus the contributions
reproduces the model output at the explained point exactly (up to float
arithmetic). For k features and a coalition budget of at least 2^k the full
coalition set is enumerated and the result equals the exact Shapley values.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from .domain import BridgeParams, FeatureSchema, default_schema

DEFAULT_COALITIONS = 2048
MEAN_EVAL_PASSES = 200


@dataclass(frozen=True)
class Attribution:
    head: str
    base_value: float
    shap_values: tuple[float, ...]
    feature_names: tuple[str, ...]
    feature_values: tuple[float, ...]
    background_size: int
    coalition_samples: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "head": self.head,
            "base_value": self.base_value,
            "features": [
                {"name": n, "value": v, "shap": s}
                for n, v, s in zip(self.feature_names, self.feature_values,
                                   self.shap_values)
            ],
            "background_size": self.background_size,
            "coalition_samples": self.coalition_samples,
            "seed": self.seed,
        }


def shapley_kernel_weight(k: int, size: int) -> float:
    """Regression weight for an interior coalition of the given size."""
    if not 0 < size < k:
        raise ValueError("kernel weight is defined for 0 < |z| < k only")
    return (k - 1) / (comb(k, size) * size * (k - size))


def _enumerated_coalitions(k: int):
    codes = np.arange(2**k, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(k)) & 1).astype(bool)
    sizes = masks.sum(axis=1)
    interior = masks[(sizes > 0) & (sizes < k)]
    weights = np.array([shapley_kernel_weight(k, int(m.sum())) for m in interior])
    return interior, weights


def _sampled_coalitions(k: int, n: int, rng: np.random.Generator):
    sizes = np.arange(1, k)
    mass = (k - 1) / (sizes * (k - sizes))
    prob = mass / mass.sum()
    drawn_sizes = rng.choice(sizes, size=n, p=prob)
    masks = np.zeros((n, k), dtype=bool)
    for i, s in enumerate(drawn_sizes):
        masks[i, rng.permutation(k)[:s]] = True
    uniq, counts = np.unique(masks, axis=0, return_counts=True)
    return uniq, counts.astype(float)


def kernel_shap(
    model_mean: Callable[[np.ndarray], np.ndarray],
    x,
    background,
    n_coalitions: int = DEFAULT_COALITIONS,
    seed: int = 0,
    head: str = "",
    feature_names: Sequence[str] | None = None,
) -> Attribution:
    """Attribute model_mean(x) over the features against a background set.

    model_mean maps raw feature rows (n, k) to outputs (n,) and must be
    deterministic; x is a BridgeParams or a length-k vector; background is a
    list of BridgeParams or an (m, k) array. The all-ones and all-zeros
    coalitions always enter through the constraint side of the regression.
    """
    x = x.as_array() if isinstance(x, BridgeParams) else np.asarray(x, dtype=float)
    k = x.size
    if isinstance(background, np.ndarray):
        bg = np.atleast_2d(np.asarray(background, dtype=float))
    else:
        bg = np.stack([b.as_array() if isinstance(b, BridgeParams) else np.asarray(b, dtype=float)
                       for b in background])
    if bg.shape[0] == 0:
        raise ValueError("background must be nonempty")
    if bg.shape[1] != k:
        raise ValueError("background dimension does not match x")
    if n_coalitions < 2 * k:
        raise ValueError("n_coalitions must be at least 2k")

    v1 = float(model_mean(x[None, :])[0])
    base = float(np.mean(model_mean(bg)))

    if k == 1:
        return Attribution(head=head, base_value=base,
                           shap_values=(float(v1 - base),),
                           feature_names=tuple(feature_names or ("x0",)),
                           feature_values=(float(x[0]),),
                           background_size=bg.shape[0], coalition_samples=2,
                           seed=seed)

    if 2**k <= n_coalitions:
        masks, weights = _enumerated_coalitions(k)
        n_used = 2**k
    else:
        rng = np.random.default_rng(seed)
        masks, weights = _sampled_coalitions(k, n_coalitions - 2, rng)
        n_used = n_coalitions

    m = bg.shape[0]
    # completions: coalition-major blocks of the background, evaluated in one go
    completed = np.where(masks[:, None, :], x[None, None, :], bg[None, :, :])
    values = model_mean(completed.reshape(-1, k)).reshape(len(masks), m).mean(axis=1)

    z = masks.astype(float)
    excess = v1 - base
    a = z[:, :-1] - z[:, -1:]
    b = values - base - z[:, -1] * excess
    sw = np.sqrt(weights)
    sol, _, rank, _ = np.linalg.lstsq(a * sw[:, None], b * sw, rcond=None)
    if rank < k - 1:
        raise ValueError(
            "coalition regression is singular; increase n_coalitions to get "
            "more distinct coalitions")
    phi = np.append(sol, excess - sol.sum())

    names = tuple(feature_names) if feature_names is not None else tuple(
        f"x{i}" for i in range(k))
    if len(names) != k:
        raise ValueError("feature_names length does not match x")
    return Attribution(head=head, base_value=base,
                       shap_values=tuple(float(v) for v in phi),
                       feature_names=names,
                       feature_values=tuple(float(v) for v in x),
                       background_size=bg.shape[0],
                       coalition_samples=int(n_used), seed=seed)


def rank_features(attrs: Sequence[Attribution],
                  schema: FeatureSchema | None = None) -> list[str]:
    """Order features by mean |shap| over the attributions, largest first.

    Ties keep schema order, so an all-zero attribution set degenerates to the
    schema ordering.
    """
    if not attrs:
        raise ValueError("need at least one attribution")
    schema = schema or default_schema()
    names = schema.names
    totals = {n: 0.0 for n in names}
    for a in attrs:
        for n, s in zip(a.feature_names, a.shap_values):
            totals[n] += abs(s)
    means = {n: totals[n] / len(attrs) for n in names}
    order = {n: i for i, n in enumerate(names)}
    return sorted(names, key=lambda n: (-means[n], order[n]))


def next_feature_guidance(known, ranking: Sequence[str]) -> str | None:
    """Highest-ranked feature not yet provided; None once everything is known."""
    known = set(known)
    for name in ranking:
        if name not in known:
            return name
    return None
