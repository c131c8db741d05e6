"""Training designs: Latin Hypercube coverage plus density-guided resampling.

The adaptive scheme scores candidate points by how close their predicted
minimum compliance factor (1-nearest-neighbor proxy from already-labeled
data) lies to the decision boundary, concentrating new samples where the
triage outcome is genuinely uncertain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .domain import BridgeParams, Dataset, FeatureSchema


@dataclass(frozen=True)
class Design:
    """Unit-cube point set; `strategy` records how it was produced."""

    points: np.ndarray  # (n, k), all coordinates in [0, 1]
    seed: int
    strategy: str  # "lhs" | "adaptive"

    def __post_init__(self):
        if self.strategy not in ("lhs", "adaptive"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.points.ndim != 2:
            raise ValueError("points must be 2-D")
        if np.any(self.points < 0.0) or np.any(self.points > 1.0):
            raise ValueError("design coordinates must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]


def lhs_sample(n: int, k: int, seed: int) -> Design:
    """Stratified design: per dimension, exactly one point per stratum.

    Point i gets coordinate (perm_j(i) + u_ij) / n in dimension j, with the
    permutations and within-stratum offsets drawn from one seeded generator
    (permutations first, then offsets), so equal seeds give equal designs.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    strata = np.empty((n, k), dtype=float)
    for j in range(k):
        strata[:, j] = rng.permutation(n)
    offsets = rng.random((n, k))
    return Design((strata + offsets) / n, seed=seed, strategy="lhs")


def scale_to_schema(design: Design, schema: FeatureSchema) -> list[BridgeParams]:
    """Affine map of unit-cube coordinates onto the schema box."""
    if design.k != schema.k:
        raise ValueError(f"design has {design.k} dims, schema has {schema.k}")
    lo, hi = schema.lo_array(), schema.hi_array()
    scaled = lo + design.points * (hi - lo)
    return [BridgeParams.from_array(row) for row in scaled]


def kde_density(values, query, bandwidth: float):
    """Gaussian-kernel density estimate at `query` given sample `values`."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("values must be nonempty")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    q = np.asarray(query, dtype=float)
    z = (q[..., None] - v) / bandwidth
    dens = np.exp(-0.5 * z**2).sum(axis=-1) / (v.size * bandwidth * math.sqrt(2 * math.pi))
    return float(dens) if np.isscalar(query) or q.ndim == 0 else dens


def silverman_bandwidth(values) -> float:
    """0.9 * min(std, iqr/1.34) * n^(-1/5), the usual rule-of-thumb default."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("values must be nonempty")
    q75, q25 = np.percentile(v, [75, 25])
    a = min(v.std(), (q75 - q25) / 1.34)
    return 0.9 * a * v.size ** (-0.2)


def adaptive_resample(
    existing: Dataset,
    n_new: int,
    seed: int,
    schema: FeatureSchema,
    target: float = 1.0,
    band: float = 0.25,
    oversample: int = 10,
) -> list[BridgeParams]:
    """Pick n_new points whose nearest labeled neighbor has eta_min near target.

    Candidates come from a fresh LHS design (oversample * n_new points). Each
    candidate is scored w = exp(-(eta_min_nn - target)^2 / (2 band^2)) where
    eta_min_nn is the minimum compliance factor of the nearest existing row in
    standardized feature space. The n_new best candidates win; equal scores
    keep candidate index order (stable sort), so the result is fully
    deterministic given the seed.
    """
    if len(existing) == 0:
        raise ValueError("existing dataset must be nonempty")
    if n_new < 1:
        raise ValueError("n_new must be >= 1")
    design = lhs_sample(n_new * oversample, schema.k, seed)
    lo, hi = schema.lo_array(), schema.hi_array()
    candidates = lo + design.points * (hi - lo)

    mean = existing.x.mean(axis=0)
    std = existing.x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    tree = cKDTree((existing.x - mean) / std)
    _, nn_idx = tree.query((candidates - mean) / std, k=1)
    eta_min_nn = existing.y[nn_idx].min(axis=1)
    score = np.exp(-((eta_min_nn - target) ** 2) / (2.0 * band**2))

    order = np.argsort(-score, kind="stable")[:n_new]
    return [BridgeParams.from_array(candidates[i]) for i in order]
