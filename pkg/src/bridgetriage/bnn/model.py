"""Mean-field Gaussian MLP: parameters, sampling forward pass, persistence.

Every network weight and bias carries a variational mean m and a raw scale r
with stddev s = softplus(r), so s stays positive without constraints. A
forward pass realizes weights as w = m + s * eps for standard normal eps and
runs a ReLU MLP with a softplus output, keeping predictions strictly
positive. Parameters live in flat vectors with a fixed layout (per layer:
weight matrix row-major, then biases), which Adam, serialization, and the
gradient code all share.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..domain import HEADS, BridgeParams, FeatureSchema, default_schema

ARCHITECTURE = (10, 64, 64, 1)
MODEL_FORMAT_VERSION = 1

INIT_MEAN_STD = 0.05
INIT_SCALE = 0.05
DEFAULT_PRIOR_STD = math.sqrt(0.1)


def softplus(x):
    return np.logaddexp(0.0, x)


def param_count(layer_sizes) -> int:
    return sum((ni + 1) * no for ni, no in zip(layer_sizes[:-1], layer_sizes[1:]))


def split_flat(flat: np.ndarray, layer_sizes):
    """Flat vector (..., n_params) -> list of (W, b) per layer.

    Layout per layer: row-major (n_in, n_out) weights, then n_out biases.
    Leading axes of `flat` are preserved (used for stacked noise draws).
    """
    lead = flat.shape[:-1]
    out = []
    pos = 0
    for ni, no in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = flat[..., pos:pos + ni * no].reshape(*lead, ni, no)
        pos += ni * no
        b = flat[..., pos:pos + no]
        pos += no
        out.append((w, b))
    if pos != flat.shape[-1]:
        raise ValueError(f"flat vector has {flat.shape[-1]} entries, layout needs {pos}")
    return out


@dataclass
class BnnModel:
    head: str
    layer_sizes: tuple[int, ...]
    means: np.ndarray       # flat, length param_count(layer_sizes)
    raw_scales: np.ndarray  # same layout; stddev = softplus(raw)
    prior_std: float = DEFAULT_PRIOR_STD
    feat_mean: np.ndarray = field(default_factory=lambda: np.zeros(10))
    feat_std: np.ndarray = field(default_factory=lambda: np.ones(10))
    kappa: float = 1.0
    train_config_fingerprint: str = ""

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        n = param_count(self.layer_sizes)
        if self.means.shape != (n,) or self.raw_scales.shape != (n,):
            raise ValueError("parameter vectors do not match the layer sizes")
        if np.any(self.feat_std <= 0):
            raise ValueError("standardization std must be positive")

    @property
    def n_params(self) -> int:
        return self.means.shape[0]

    def scales(self) -> np.ndarray:
        return softplus(self.raw_scales)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feat_mean) / self.feat_std

    def with_kappa(self, kappa: float) -> "BnnModel":
        return replace(self, kappa=float(kappa))


def init_model(head: str, seed: int, layer_sizes=ARCHITECTURE) -> BnnModel:
    """Fresh model: means ~ N(0, 0.05^2), every stddev exactly 0.05."""
    rng = np.random.default_rng(seed)
    n = param_count(layer_sizes)
    means = rng.standard_normal(n) * INIT_MEAN_STD
    raw = np.full(n, math.log(math.expm1(INIT_SCALE)))
    return BnnModel(head=head, layer_sizes=tuple(layer_sizes), means=means,
                    raw_scales=raw)


def kl_divergence(model: BnnModel) -> float:
    """KL(q || prior) for diagonal Gaussians against N(0, prior_std^2 I)."""
    s = model.scales()
    m = model.means
    sp2 = model.prior_std**2
    terms = np.log(model.prior_std / s) + (s**2 + m**2) / (2.0 * sp2) - 0.5
    return float(terms.sum())


def realize_weights(model: BnnModel, eps: np.ndarray):
    """eps (..., n_params) -> per-layer (W, b) with w = m + softplus(r) * eps."""
    theta = model.means + model.scales() * eps
    return split_flat(theta, model.layer_sizes)


def forward_realized(x: np.ndarray, layers) -> np.ndarray:
    """ReLU MLP with softplus output for realized weights.

    x is (B, n_in); layers may carry a leading pass axis (T, n_in, n_out),
    in which case the result is (T, B, 1).
    """
    a = x
    if layers and layers[0][0].ndim == 3 and a.ndim == 2:
        a = a[None]
    for i, (w, b) in enumerate(layers):
        z = np.matmul(a, w) + b[..., None, :]
        a = np.maximum(z, 0.0) if i < len(layers) - 1 else softplus(z)
    return a


def forward_sample(model: BnnModel, x_std: np.ndarray, noise: np.ndarray) -> float:
    """Single stochastic pass; deterministic given (model, x_std, noise)."""
    x_std = np.asarray(x_std, dtype=float)
    if x_std.shape != (model.layer_sizes[0],):
        raise ValueError(f"x must have {model.layer_sizes[0]} entries")
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (model.n_params,):
        raise ValueError(f"noise must have {model.n_params} entries")
    layers = realize_weights(model, noise)
    return float(forward_realized(x_std[None, :], layers)[0, 0])


@dataclass(frozen=True)
class PredictiveDistribution:
    head: str
    mu: float
    sigma: float
    sigma_scaled: float
    kappa: float
    n_passes: int

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def to_json_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma,
                "sigma_scaled": self.sigma_scaled, "kappa": self.kappa,
                "n_passes": self.n_passes}


def _mc_moments(model: BnnModel, x_std: np.ndarray, n_passes: int, seed: int,
                pass_chunk: int = 200, row_chunk: int = 1024):
    """Per-row MC mean/std over n_passes weight draws shared across rows.

    Chunked over both rows and passes to bound memory; the noise stream
    restarts from the seed for every row chunk, so results are independent of
    the chunking and of how rows are batched together.
    """
    n_rows = x_std.shape[0]
    mu = np.empty(n_rows)
    sigma = np.empty(n_rows)
    for r0 in range(0, n_rows, row_chunk):
        rows = x_std[r0:r0 + row_chunk]
        rng = np.random.default_rng(seed)
        total = np.zeros(rows.shape[0])
        total_sq = np.zeros(rows.shape[0])
        done = 0
        while done < n_passes:
            t = min(pass_chunk, n_passes - done)
            eps = rng.standard_normal((t, model.n_params))
            layers = realize_weights(model, eps)
            yh = forward_realized(rows, layers)[..., 0]  # (t, rows)
            total += yh.sum(axis=0)
            total_sq += (yh**2).sum(axis=0)
            done += t
        m = total / n_passes
        var = (total_sq - n_passes * m**2) / (n_passes - 1)
        mu[r0:r0 + row_chunk] = m
        sigma[r0:r0 + row_chunk] = np.sqrt(np.maximum(var, 0.0))
    return mu, sigma


def predict(model: BnnModel, x: BridgeParams, n_passes: int = 1000,
            seed: int = 0) -> PredictiveDistribution:
    """Monte Carlo predictive distribution at a single input."""
    if n_passes < 2:
        raise ValueError("n_passes must be >= 2")
    x_std = model.standardize(x.as_array())[None, :]
    mu, sigma = _mc_moments(model, x_std, n_passes, seed)
    return PredictiveDistribution(head=model.head, mu=float(mu[0]),
                                  sigma=float(sigma[0]),
                                  sigma_scaled=float(model.kappa * sigma[0]),
                                  kappa=model.kappa, n_passes=n_passes)


def predict_batch(model: BnnModel, x: np.ndarray, n_passes: int = 1000,
                  seed: int = 0):
    """Vectorized predict over raw feature rows (n, 10) -> (mu, sigma) arrays.

    Shares the per-pass weight draws across rows, so row i equals
    predict(model, row_i) with the same seed and pass count.
    """
    if n_passes < 2:
        raise ValueError("n_passes must be >= 2")
    x_std = model.standardize(np.asarray(x, dtype=float))
    return _mc_moments(model, x_std, n_passes, seed)


def predictive_mean_fn(model: BnnModel, n_passes: int = 200, seed: int = 0):
    """Deterministic mean-only view of the model (fixed noise stream).

    Returns f(x_rows) -> mu array; used where a plain function of the inputs
    is needed (feature attribution) and kappa must not enter.
    """
    def f(x_rows: np.ndarray) -> np.ndarray:
        mu, _ = predict_batch(model, np.atleast_2d(x_rows), n_passes=n_passes,
                              seed=seed)
        return mu
    return f


def model_to_json_dict(model: BnnModel, schema: FeatureSchema | None = None) -> dict:
    schema = schema or default_schema()
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "head": model.head,
        "schema": schema.to_json_dict(),
        "architecture": list(model.layer_sizes),
        "standardization": {
            "mean": [float(v) for v in model.feat_mean],
            "std": [float(v) for v in model.feat_std],
        },
        "prior_std": model.prior_std,
        "variational_means": [float(v) for v in model.means],
        "variational_raw_scales": [float(v) for v in model.raw_scales],
        "kappa": model.kappa,
        "train_config_fingerprint": model.train_config_fingerprint,
    }


def model_from_json_dict(d: dict) -> tuple[BnnModel, FeatureSchema]:
    if d.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {d.get('format_version')!r}")
    schema = FeatureSchema.from_json_dict(d["schema"])
    model = BnnModel(
        head=d["head"],
        layer_sizes=tuple(int(v) for v in d["architecture"]),
        means=np.array(d["variational_means"], dtype=float),
        raw_scales=np.array(d["variational_raw_scales"], dtype=float),
        prior_std=float(d["prior_std"]),
        feat_mean=np.array(d["standardization"]["mean"], dtype=float),
        feat_std=np.array(d["standardization"]["std"], dtype=float),
        kappa=float(d["kappa"]),
        train_config_fingerprint=d.get("train_config_fingerprint", ""),
    )
    return model, schema


def save_model(path, model: BnnModel, schema: FeatureSchema | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_json_dict(model, schema), fh, indent=1)
        fh.write("\n")


def load_model(path) -> tuple[BnnModel, FeatureSchema]:
    with open(path, encoding="utf-8") as fh:
        return model_from_json_dict(json.load(fh))


def file_fingerprint(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
