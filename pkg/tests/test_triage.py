import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bridgetriage.bnn.model import PredictiveDistribution
from bridgetriage.domain import BridgeParams, default_schema
from bridgetriage.triage import (
    BATCH_CSV_HEADER,
    batch_to_csv,
    batch_triage,
    classify_head,
    triage,
)

SCHEMA = default_schema()


def pred(head, mu, sigma, kappa=1.0):
    return PredictiveDistribution(head=head, mu=mu, sigma=sigma,
                                  sigma_scaled=kappa * sigma, kappa=kappa,
                                  n_passes=100)


def expected_class(mu, sigma, kappa=1.0):
    # independently stated rule: red iff mu <= 1; orange iff lower bound < 1
    if mu <= 1.0:
        return "red"
    if mu - 2.0 * kappa * sigma < 1.0:
        return "orange"
    return "green"


class TestClassifyHead:
    def test_policy_grid(self):
        for mu in (0.5, 0.99, 1.0, 1.01, 1.2, 2.0):
            for sigma in (0.0, 0.05, 0.15, 0.5):
                assert classify_head(mu, sigma, 1.0) == expected_class(mu, sigma)

    def test_paper_examples(self):
        assert classify_head(0.8, 0.5) == "red"
        assert classify_head(1.2, 0.15) == "orange"   # lower bound 0.9
        assert classify_head(1.2, 0.05) == "green"    # lower bound 1.1

    def test_boundary_mean_is_red(self):
        assert classify_head(1.0, 0.0) == "red"

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            classify_head(1.0, -0.1)
        with pytest.raises(ValueError):
            classify_head(1.0, 0.1, kappa=0.0)

    @given(mu=st.floats(0.01, 5.0), sigma=st.floats(0.0, 2.0),
           kappa=st.floats(0.1, 5.0))
    def test_total_function(self, mu, sigma, kappa):
        assert classify_head(mu, sigma, kappa) in ("red", "orange", "green")

    @given(mu=st.floats(1.0001, 5.0), sigma=st.floats(0.0, 2.0),
           bump=st.floats(0.0, 2.0))
    def test_sigma_monotone(self, mu, sigma, bump):
        order = {"green": 0, "orange": 1, "red": 2}
        a = classify_head(mu, sigma, 1.0)
        b = classify_head(mu, sigma + bump, 1.0)
        assert order[b] >= order[a]
        assert b != "red"  # sigma can never push a passing mean to red

    @given(mu=st.floats(0.01, 5.0), drop=st.floats(0.0, 2.0),
           sigma=st.floats(0.0, 2.0))
    def test_mu_monotone(self, mu, drop, sigma):
        order = {"green": 0, "orange": 1, "red": 2}
        assert (order[classify_head(max(mu - drop, 1e-9), sigma, 1.0)]
                >= order[classify_head(mu, sigma, 1.0)])

    @given(mu=st.floats(0.01, 5.0), sigma=st.floats(0.0, 2.0),
           kappa=st.floats(0.1, 4.0), bump=st.floats(0.0, 3.0))
    def test_kappa_monotone(self, mu, sigma, kappa, bump):
        a = classify_head(mu, sigma, kappa)
        b = classify_head(mu, sigma, kappa + bump)
        if a == "red":
            assert b == "red"
        if a == "green":
            assert b in ("green", "orange")


class TestTriage:
    def test_all_green_governed_by_shear(self):
        preds = {h: pred(h, 3.0, 0.01) for h in ("ms", "mc", "v")}
        t = triage(preds)
        assert t.klass == "green"
        assert t.governing_head == "v"
        assert t.margin == pytest.approx(3.0 - 0.02 - 1.0)

    def test_orange_on_shear_governs(self):
        preds = {"ms": pred("ms", 3.0, 0.01), "mc": pred("mc", 3.0, 0.01),
                 "v": pred("v", 1.2, 0.15)}
        t = triage(preds)
        assert (t.klass, t.governing_head) == ("orange", "v")

    def test_worst_class_rule(self):
        preds = {"ms": pred("ms", 3.0, 0.01), "mc": pred("mc", 0.8, 0.01),
                 "v": pred("v", 1.2, 0.15)}
        t = triage(preds)
        assert (t.klass, t.governing_head) == ("red", "mc")

    def test_kappa_override(self):
        preds = {h: pred(h, 1.2, 0.05, kappa=1.0) for h in ("ms", "mc", "v")}
        assert triage(preds).klass == "green"
        assert triage(preds, kappas={h: 3.0 for h in preds}).klass == "orange"

    def test_near_boundary_flag(self):
        preds = {"ms": pred("ms", 1.05, 0.001), "mc": pred("mc", 1.2, 0.001),
                 "v": pred("v", 3.0, 0.001)}
        t = triage(preds)
        assert t.per_head["ms"].near_boundary
        assert not t.per_head["mc"].near_boundary

    def test_missing_head_rejected(self):
        with pytest.raises(ValueError, match="mc"):
            triage({"ms": pred("ms", 1.0, 0.1), "v": pred("v", 1.0, 0.1)})


def midpoint(**overrides):
    vals = {f.name: (f.lo + f.hi) / 2 for f in SCHEMA.features}
    vals.update(overrides)
    return BridgeParams(**vals)


class TestBatch:
    def test_empty(self, small_models):
        rows, counts = batch_triage([], small_models)
        assert rows == []
        assert counts == {"n_red": 0, "n_orange": 0, "n_green": 0}

    def test_counts_and_order(self, small_models):
        params = [midpoint(), midpoint(load_kn_m2=58.0, span_m=19.0),
                  midpoint(span_m=4.0)]
        rows, counts = batch_triage(params, small_models, n_passes=200)
        assert [r.row for r in rows] == [0, 1, 2]
        assert sum(counts.values()) == 3
        classes = [r.result.klass for r in rows]
        assert counts == {"n_red": classes.count("red"),
                          "n_orange": classes.count("orange"),
                          "n_green": classes.count("green")}

    def test_invalid_row_collected(self, small_models):
        params = [midpoint(), midpoint(span_m=99.0), midpoint()]
        rows, counts = batch_triage(params, small_models, n_passes=200)
        assert rows[1].result is None
        assert "span_m" in rows[1].error
        assert rows[0].result is not None and rows[2].result is not None
        assert sum(counts.values()) == 2

    def test_matches_single_triage(self, small_models):
        from bridgetriage.inference import predict_full
        p = midpoint(span_m=16.0)
        rows, _ = batch_triage([p], small_models, n_passes=300, seed=5)
        preds = predict_full(small_models, p, n_passes=300, seed=5)
        direct = triage(preds)
        assert rows[0].result.klass == direct.klass
        assert rows[0].result.per_head["v"].mu == pytest.approx(
            direct.per_head["v"].mu, rel=1e-12)

    def test_csv_rendering(self, small_models):
        params = [midpoint(), midpoint(span_m=99.0)]
        rows, _ = batch_triage(params, small_models, n_passes=100)
        text = batch_to_csv(rows)
        lines = text.splitlines()
        assert lines[0] == BATCH_CSV_HEADER
        assert lines[1].startswith("0,")
        assert lines[2].startswith("1,,") and "span_m" in lines[2]
