"""Shared fixtures.

The acceptance-scale models (8k training rows, full default config) are slow
to produce, so they are trained once and cached under .cache/ keyed by the
pipeline fingerprint; delete the directory or set BT_TEST_NO_CACHE=1 to force
retraining.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pytest

from bridgetriage import pipeline
from bridgetriage.bnn.training import TrainConfig, train
from bridgetriage.domain import Dataset, default_schema, generate_dataset
from bridgetriage.sampling import adaptive_resample, lhs_sample, scale_to_schema

CACHE_ROOT = Path(__file__).resolve().parent.parent / ".cache"

PIPELINE_SEED = 7
N_TRAIN_ROWS = 8000
N_HOLDOUT_ROWS = 1000


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def small_dataset(schema):
    """600 labeled LHS rows; enough for fast training sanity checks."""
    params = scale_to_schema(lhs_sample(600, schema.k, seed=101), schema)
    return generate_dataset(schema, params)


@pytest.fixture(scope="session")
def small_models(schema, small_dataset):
    """Quickly trained heads for interface-level tests (not accuracy)."""
    cfg = TrainConfig(epochs=30, seed=11)
    return {h: train(small_dataset, h, cfg, split_seed=11)
            for h in ("ms", "mc", "v")}


def _mixed_design_dataset(schema, n_total: int, seed: int) -> Dataset:
    """Half broad LHS coverage, half concentrated near the decision boundary."""
    n_seed = (n_total + 1) // 2
    seed_params = scale_to_schema(lhs_sample(n_seed, schema.k, seed), schema)
    seed_ds = generate_dataset(schema, seed_params)
    extra = adaptive_resample(seed_ds, n_total - n_seed, seed + 1, schema)
    extra_ds = generate_dataset(schema, extra)
    return Dataset(np.vstack([seed_ds.x, extra_ds.x]),
                   np.vstack([seed_ds.y, extra_ds.y]))


@pytest.fixture(scope="session")
def pipeline_data(schema):
    """(train_dataset, holdout_dataset): 8k rows to fit on, 1k held out.

    Both come from the same LHS+adaptive design, shuffled together so the
    holdout distribution matches training.
    """
    ds = _mixed_design_dataset(schema, N_TRAIN_ROWS + N_HOLDOUT_ROWS, PIPELINE_SEED)
    perm = np.random.default_rng(PIPELINE_SEED + 5).permutation(len(ds))
    train_ds = ds.subset(perm[:N_TRAIN_ROWS])
    holdout = ds.subset(perm[N_TRAIN_ROWS:])
    return train_ds, holdout


def _cache_key(cfg: TrainConfig) -> str:
    payload = json.dumps({
        "cfg": cfg.fingerprint(),
        "seed": PIPELINE_SEED,
        "rows": [N_TRAIN_ROWS, N_HOLDOUT_ROWS],
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@pytest.fixture(scope="session")
def trained_models(schema, pipeline_data):
    """Full-config heads trained on the 8k rows, calibrated on validation."""
    train_ds, _ = pipeline_data
    base = TrainConfig(seed=PIPELINE_SEED)
    cache_dir = CACHE_ROOT / f"models-{_cache_key(base)}"
    use_cache = os.environ.get("BT_TEST_NO_CACHE", "") != "1"
    if use_cache and (cache_dir / "v.json").exists():
        models, _ = pipeline.load_models(cache_dir)
        return models

    models = {}
    for offset, head in enumerate(("ms", "mc", "v")):
        cfg = TrainConfig(seed=PIPELINE_SEED + offset)
        models[head] = train(train_ds, head, cfg, split_seed=PIPELINE_SEED)
    kappas, _, _ = pipeline.fit_kappas_on_validation(models, train_ds, PIPELINE_SEED)
    models = {h: m.with_kappa(kappas[h]) for h, m in models.items()}
    if use_cache:
        cache_dir.mkdir(parents=True, exist_ok=True)
        pipeline.save_models(cache_dir, models, schema)
    return models


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, schema, small_models):
    """Model directory with all artifacts, backed by the fast small models."""
    d = tmp_path_factory.mktemp("models")
    pipeline.save_models(d, small_models, schema)
    background = pipeline.background_points(schema, seed=3, n=20)
    pipeline.write_background(d, background, seed=3)
    ranking = pipeline.compute_ranking(small_models, schema, background,
                                       seed=3, n_probes=2, n_coalitions=64,
                                       mean_passes=20)
    pipeline.write_ranking(d, ranking)
    return d


@pytest.fixture(scope="session")
def feature_ranking(schema, trained_models):
    background = pipeline.background_points(schema, PIPELINE_SEED, n=50)
    doc = pipeline.compute_ranking(trained_models, schema, background,
                                   PIPELINE_SEED, n_probes=4,
                                   n_coalitions=256, mean_passes=50)
    return doc["ranking"]
