"""Lifecycle plumbing shared by the CLI and the HTTP service.

Owns the model-directory layout (one JSON file per head plus the background
and feature-ranking artifacts), the held-out metric computation, and the
validation-split scale fitting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .attribution import kernel_shap, rank_features
from .bnn.model import (
    BnnModel,
    file_fingerprint,
    load_model,
    predict_batch,
    predictive_mean_fn,
    save_model,
)
from .bnn.training import split_indices
from .calibration import CalibrationReport, calibration_metrics, fit_kappa
from .domain import HEADS, Dataset, FeatureSchema
from .sampling import lhs_sample

MODEL_FILES = {h: f"{h}.json" for h in HEADS}
BACKGROUND_FILE = "background.json"
RANKING_FILE = "ranking.json"

EVAL_MC_PASSES = 1000
EVAL_SEED = 2024
CRITICAL_BAND = (0.5, 1.5)


def save_models(model_dir, models: dict[str, BnnModel],
                schema: FeatureSchema | None = None) -> None:
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    for head, model in models.items():
        save_model(model_dir / MODEL_FILES[head], model, schema)


def load_models(model_dir) -> tuple[dict[str, BnnModel], FeatureSchema]:
    """Load all three heads; refuse partial or schema-incompatible sets."""
    model_dir = Path(model_dir)
    missing = [h for h in HEADS if not (model_dir / MODEL_FILES[h]).exists()]
    if missing:
        raise FileNotFoundError(
            f"model dir {model_dir} is missing heads: {', '.join(missing)}")
    models, schemas = {}, []
    for h in HEADS:
        model, schema = load_model(model_dir / MODEL_FILES[h])
        if model.head != h:
            raise ValueError(f"{MODEL_FILES[h]} holds head {model.head!r}")
        models[h] = model
        schemas.append(schema)
    if any(s != schemas[0] for s in schemas[1:]):
        raise ValueError("head models disagree on the feature schema")
    return models, schemas[0]


def model_fingerprints(model_dir) -> dict[str, str]:
    model_dir = Path(model_dir)
    return {h: file_fingerprint(model_dir / MODEL_FILES[h]) for h in HEADS}


def background_points(schema: FeatureSchema, seed: int, n: int = 100) -> np.ndarray:
    design = lhs_sample(n, schema.k, seed)
    lo, hi = schema.lo_array(), schema.hi_array()
    return lo + design.points * (hi - lo)


def write_background(model_dir, points: np.ndarray, seed: int) -> None:
    payload = {"seed": seed, "points": [[float(v) for v in row] for row in points]}
    with open(Path(model_dir) / BACKGROUND_FILE, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_background(model_dir) -> np.ndarray | None:
    path = Path(model_dir) / BACKGROUND_FILE
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        return np.array(json.load(fh)["points"], dtype=float)


def compute_ranking(models: dict[str, BnnModel], schema: FeatureSchema,
                    background: np.ndarray, seed: int, n_probes: int = 8,
                    n_coalitions: int = 256, mean_passes: int = 50) -> dict:
    """Feature importance from attributions at LHS probe points, all heads.

    Cheaper settings than a single-point explanation (fewer coalitions and
    Monte Carlo passes) since only the ordering matters here.
    """
    probes = background_points(schema, seed + 1, n_probes)
    attrs = []
    for head in HEADS:
        f = predictive_mean_fn(models[head], n_passes=mean_passes, seed=seed)
        for i, probe in enumerate(probes):
            attrs.append(kernel_shap(f, probe, background,
                                     n_coalitions=n_coalitions,
                                     seed=seed + i, head=head,
                                     feature_names=schema.names))
    ranking = rank_features(attrs, schema)
    totals = {n: 0.0 for n in schema.names}
    for a in attrs:
        for n, s in zip(a.feature_names, a.shap_values):
            totals[n] += abs(s)
    return {
        "ranking": ranking,
        "mean_abs_shap": {n: totals[n] / len(attrs) for n in ranking},
        "n_probes": n_probes,
        "n_coalitions": n_coalitions,
        "seed": seed,
    }


def write_ranking(model_dir, ranking: dict) -> None:
    with open(Path(model_dir) / RANKING_FILE, "w", encoding="utf-8") as fh:
        json.dump(ranking, fh, indent=1)
        fh.write("\n")


def load_ranking(model_dir) -> dict | None:
    path = Path(model_dir) / RANKING_FILE
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def mape(pred: np.ndarray, truth: np.ndarray) -> float:
    return float(np.mean(np.abs(pred - truth) / np.abs(truth)) * 100.0)


def head_metrics(mu: np.ndarray, truth: np.ndarray) -> dict:
    """Overall and safety-band-restricted error metrics for one head."""
    lo, hi = CRITICAL_BAND
    band = (truth >= lo) & (truth <= hi)
    out = {
        "n": int(truth.size),
        "rmse": rmse(mu, truth),
        "mape_pct": mape(mu, truth),
        "n_band": int(band.sum()),
    }
    if band.any():
        out["rmse_band"] = rmse(mu[band], truth[band])
        out["mape_band_pct"] = mape(mu[band], truth[band])
    return out


def predict_heads(models: dict[str, BnnModel], x: np.ndarray,
                  n_passes: int = EVAL_MC_PASSES, seed: int = EVAL_SEED):
    """Batched per-head (mu, sigma) over raw feature rows."""
    return {h: predict_batch(models[h], x, n_passes=n_passes, seed=seed)
            for h in HEADS}


def fit_kappas_on_validation(models: dict[str, BnnModel], data: Dataset,
                             split_seed: int):
    """Fit each head's scale on the validation split.

    Returns (kappas, before, after) where before/after are per-head
    CalibrationReports on the validation rows.
    """
    _, val_idx, _ = split_indices(len(data), split_seed)
    if val_idx.size == 0:
        raise ValueError("dataset too small: empty validation split")
    x_val = data.x[val_idx]
    stats = predict_heads(models, x_val)
    kappas: dict[str, float] = {}
    before: dict[str, CalibrationReport] = {}
    after: dict[str, CalibrationReport] = {}
    for i, h in enumerate(HEADS):
        mu, sig = stats[h]
        truth = data.y[val_idx, i]
        before[h] = calibration_metrics(mu, sig, truth, kappa=models[h].kappa)
        kappas[h] = fit_kappa(mu, sig, truth)
        after[h] = calibration_metrics(mu, sig, truth, kappa=kappas[h])
    return kappas, before, after


def evaluate_on_rows(models: dict[str, BnnModel], x: np.ndarray, y: np.ndarray,
                     n_passes: int = EVAL_MC_PASSES, seed: int = EVAL_SEED) -> dict:
    """Accuracy and calibration summary on explicit test rows."""
    stats = predict_heads(models, x, n_passes=n_passes, seed=seed)
    report: dict = {"n_rows": int(x.shape[0]), "heads": {}}
    for i, h in enumerate(HEADS):
        mu, sig = stats[h]
        truth = y[:, i]
        entry = head_metrics(mu, truth)
        entry["kappa"] = models[h].kappa
        entry["calibration_raw"] = calibration_metrics(mu, sig, truth, kappa=1.0).to_json_dict()
        entry["calibration"] = calibration_metrics(
            mu, sig, truth, kappa=models[h].kappa).to_json_dict()
        report["heads"][h] = entry
    return report


def evaluate_on_test_split(models: dict[str, BnnModel], data: Dataset,
                           split_seed: int) -> dict:
    _, _, test_idx = split_indices(len(data), split_seed)
    if test_idx.size == 0:
        raise ValueError("dataset too small: empty test split")
    report = evaluate_on_rows(models, data.x[test_idx], data.y[test_idx])
    report["split_seed"] = split_seed
    report["split"] = "test"
    return report
