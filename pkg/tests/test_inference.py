import numpy as np
import pytest

from bridgetriage.bnn.model import init_model, predict_batch
from bridgetriage.domain import HEADS, default_schema
from bridgetriage.inference import (
    REDUCED_COMPLETION_PASSES,
    Query,
    predict_full,
    predict_reduced,
)
from bridgetriage.sampling import lhs_sample

SCHEMA = default_schema()


def full_features(**overrides):
    vals = {f.name: (f.lo + f.hi) / 2 for f in SCHEMA.features}
    vals.update(overrides)
    return vals


class TestQuery:
    def test_unknown_feature_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            Query(known={"bogus": 1.0})

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="span_m"):
            Query(known={"span_m": 99.0})

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            Query(known={})

    def test_missing_complement(self):
        q = Query(known={"span_m": 10.0, "load_kn_m2": 30.0})
        assert set(q.missing) | set(q.known) == set(SCHEMA.names)
        assert set(q.missing) & set(q.known) == set()


class TestPredictFull:
    def test_three_heads_in_order(self, small_models):
        from bridgetriage.domain import BridgeParams
        p = BridgeParams.from_dict(full_features())
        preds = predict_full(small_models, p, n_passes=200, seed=1)
        assert list(preds) == list(HEADS)
        assert all(preds[h].mu > 0 for h in HEADS)

    def test_reproducible(self, small_models):
        from bridgetriage.domain import BridgeParams
        p = BridgeParams.from_dict(full_features())
        a = predict_full(small_models, p, n_passes=200, seed=2)
        b = predict_full(small_models, p, n_passes=200, seed=2)
        assert all(a[h].mu == b[h].mu and a[h].sigma == b[h].sigma for h in HEADS)


class TestPredictReduced:
    def test_no_missing_equals_full(self, small_models):
        from bridgetriage.domain import BridgeParams
        q = Query(known=full_features(), n_mc_passes=300, seed=3)
        preds, diags = predict_reduced(small_models, q)
        direct = predict_full(small_models,
                              BridgeParams.from_dict(full_features()),
                              n_passes=300, seed=3)
        for h in HEADS:
            assert preds[h].mu == direct[h].mu
            assert preds[h].sigma == direct[h].sigma
            assert diags[h]["between_share"] == 0.0

    def test_total_variance_identity(self, small_models):
        q = Query(known={"span_m": 12.0, "load_kn_m2": 30.0,
                         "deck_thickness_m": 0.8},
                  n_marginal_samples=64, seed=4)
        preds, diags = predict_reduced(small_models, q)
        for h in HEADS:
            total = preds[h].sigma ** 2
            assert total == pytest.approx(
                diags[h]["within_var"] + diags[h]["between_var"], abs=1e-10)

    def test_identity_against_recomputed_completions(self, small_models):
        known = {"span_m": 12.0, "load_kn_m2": 30.0}
        q = Query(known=known, n_marginal_samples=32, seed=5)
        preds, _ = predict_reduced(small_models, q)
        # rebuild the completion set exactly as the implementation specifies
        missing = q.missing
        design = lhs_sample(32, len(missing), 5)
        completions = np.empty((32, 10))
        for i, name in enumerate(SCHEMA.names):
            if name in known:
                completions[:, i] = known[name]
            else:
                spec = SCHEMA.spec(name)
                j = missing.index(name)
                completions[:, i] = spec.lo + design.points[:, j] * (spec.hi - spec.lo)
        mu_j, sig_j = predict_batch(small_models["ms"], completions,
                                    n_passes=REDUCED_COMPLETION_PASSES, seed=5)
        mu = float(mu_j.mean())
        var = float(np.mean(sig_j**2) + np.var(mu_j))
        assert preds["ms"].mu == pytest.approx(mu, rel=1e-12)
        assert preds["ms"].sigma ** 2 == pytest.approx(var, rel=1e-9)

    def test_insensitive_feature_adds_no_spread(self):
        # a model that provably ignores width_m: zero mean weights and
        # (numerically) zero scales on that input row
        model = init_model("ms", 23)
        w_rows = 10
        idx = SCHEMA.names.index("width_m")
        first_w = model.means[: w_rows * 64].reshape(10, 64)
        first_r = model.raw_scales[: w_rows * 64].reshape(10, 64)
        first_w[idx, :] = 0.0
        first_r[idx, :] = -60.0
        models = {h: model for h in HEADS}

        known = full_features()
        del known["width_m"]
        q = Query(known=known, n_marginal_samples=64, seed=6)
        preds, diags = predict_reduced(models, q)

        from bridgetriage.domain import BridgeParams
        direct = predict_full(models, BridgeParams.from_dict(full_features()),
                              n_passes=1000, seed=6)
        assert diags["ms"]["between_var"] == pytest.approx(0.0, abs=1e-12)
        assert preds["ms"].sigma == pytest.approx(direct["ms"].sigma, rel=0.25)

    def test_marginalization_widens(self, small_models):
        from bridgetriage.domain import BridgeParams
        rng = np.random.default_rng(7)
        lo, hi = SCHEMA.lo_array(), SCHEMA.hi_array()
        widened = 0
        for trial in range(5):
            x = lo + rng.random(10) * (hi - lo)
            full = predict_full(small_models, BridgeParams.from_array(x),
                                n_passes=1000, seed=trial)
            known = {n: float(v) for n, v in zip(SCHEMA.names, x)}
            for drop in ("span_m", "load_kn_m2", "deck_thickness_m"):
                known.pop(drop)
            q = Query(known=known, n_marginal_samples=64, seed=trial)
            reduced, _ = predict_reduced(small_models, q)
            for h in HEADS:
                if reduced[h].sigma >= full[h].sigma * 0.9:
                    widened += 1
        assert widened >= 13  # 15 comparisons, allow a little MC slack

    def test_deterministic(self, small_models):
        q = Query(known={"span_m": 8.0}, n_marginal_samples=16, seed=8)
        a, _ = predict_reduced(small_models, q)
        b, _ = predict_reduced(small_models, q)
        assert all(a[h].mu == b[h].mu and a[h].sigma == b[h].sigma for h in HEADS)
