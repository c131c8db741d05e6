import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgetriage.domain import Dataset, default_schema, generate_dataset
from bridgetriage.sampling import (
    Design,
    adaptive_resample,
    kde_density,
    lhs_sample,
    scale_to_schema,
    silverman_bandwidth,
)

SCHEMA = default_schema()

PHI_0 = 0.3989422804014327   # standard normal pdf at 0
PHI_1 = 0.24197072451914337  # and at 1


def assert_stratified(points: np.ndarray):
    n = points.shape[0]
    for j in range(points.shape[1]):
        col = np.sort(points[:, j])
        lo = np.arange(n) / n
        hi = (np.arange(n) + 1) / n
        assert np.all(col >= lo) and np.all(col < hi)


class TestLhs:
    def test_single_point(self):
        d = lhs_sample(1, 3, seed=0)
        assert d.points.shape == (1, 3)
        assert np.all(d.points >= 0) and np.all(d.points < 1)

    def test_small_design_stratified(self):
        d = lhs_sample(4, 2, seed=7)
        assert_stratified(d.points)

    def test_marginal_means_near_half(self):
        d = lhs_sample(100, 10, seed=3)
        means = d.points.mean(axis=0)
        assert np.all(np.abs(means - 0.5) < 0.05)

    def test_seed_determinism(self):
        a = lhs_sample(50, 4, seed=9)
        b = lhs_sample(50, 4, seed=9)
        assert np.array_equal(a.points, b.points)
        assert not np.array_equal(a.points, lhs_sample(50, 4, seed=10).points)

    def test_zero_points_rejected(self):
        with pytest.raises(ValueError):
            lhs_sample(0, 3, seed=0)

    @settings(max_examples=40)
    @given(n=st.integers(1, 120), k=st.integers(1, 12),
           seed=st.integers(0, 2**31 - 1))
    def test_stratification_property(self, n, k, seed):
        assert_stratified(lhs_sample(n, k, seed).points)


class TestScale:
    def _design(self, value):
        return Design(np.full((3, SCHEMA.k), value), seed=0, strategy="lhs")

    def test_zero_maps_to_lo(self):
        params = scale_to_schema(self._design(0.0), SCHEMA)
        assert params[0].as_array() == pytest.approx(SCHEMA.lo_array())

    def test_one_maps_to_hi(self):
        params = scale_to_schema(self._design(1.0), SCHEMA)
        assert params[0].as_array() == pytest.approx(SCHEMA.hi_array())

    def test_half_maps_to_midpoint(self):
        params = scale_to_schema(self._design(0.5), SCHEMA)
        mid = (SCHEMA.lo_array() + SCHEMA.hi_array()) / 2.0
        assert params[0].as_array() == pytest.approx(mid)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            scale_to_schema(Design(np.zeros((2, 3)), 0, "lhs"), SCHEMA)


class TestKde:
    def test_single_kernel_peak(self):
        assert kde_density([1.0], 1.0, 1.0) == pytest.approx(PHI_0, rel=1e-12)

    def test_symmetric_pair(self):
        assert kde_density([0.0, 2.0], 1.0, 1.0) == pytest.approx(PHI_1, rel=1e-12)

    def test_integrates_to_one(self):
        values = [0.3, 1.1, 1.2, 2.5, 0.9]
        bw = 0.4
        grid = np.linspace(-10.0, 13.0, 20001)
        dens = kde_density(values, grid, bw)
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)

    def test_errors(self):
        with pytest.raises(ValueError):
            kde_density([], 0.0, 1.0)
        with pytest.raises(ValueError):
            kde_density([1.0], 0.0, 0.0)

    def test_silverman_positive(self):
        rng = np.random.default_rng(0)
        assert silverman_bandwidth(rng.normal(size=200)) > 0


def _oracle_lhs_dataset(n, seed):
    params = scale_to_schema(lhs_sample(n, SCHEMA.k, seed), SCHEMA)
    return generate_dataset(SCHEMA, params)


class TestAdaptive:
    def test_constant_scores_keep_index_order(self):
        # constant labels make every candidate score identical
        existing = Dataset(_oracle_lhs_dataset(50, 1).x, np.full((50, 3), 9.0))
        picked = adaptive_resample(existing, 5, seed=4, schema=SCHEMA)
        design = lhs_sample(50, SCHEMA.k, seed=4)
        lo, hi = SCHEMA.lo_array(), SCHEMA.hi_array()
        expected = lo + design.points[:5] * (hi - lo)
        got = np.stack([p.as_array() for p in picked])
        assert np.array_equal(got, expected)

    def test_huge_band_degenerates_to_lhs_prefix(self):
        existing = _oracle_lhs_dataset(200, 2)
        picked = adaptive_resample(existing, 7, seed=5, schema=SCHEMA, band=1e12)
        design = lhs_sample(70, SCHEMA.k, seed=5)
        lo, hi = SCHEMA.lo_array(), SCHEMA.hi_array()
        expected = lo + design.points[:7] * (hi - lo)
        got = np.stack([p.as_array() for p in picked])
        assert np.array_equal(got, expected)

    def test_determinism(self):
        existing = _oracle_lhs_dataset(300, 3)
        a = adaptive_resample(existing, 20, seed=6, schema=SCHEMA)
        b = adaptive_resample(existing, 20, seed=6, schema=SCHEMA)
        assert a == b

    def test_enriches_safety_band(self):
        existing = _oracle_lhs_dataset(1500, 10)
        n = 200

        def band_fraction(ds):
            emin = ds.y.min(axis=1)
            return np.mean((emin >= 0.5) & (emin <= 1.5))

        adaptive = generate_dataset(
            SCHEMA, adaptive_resample(existing, n, seed=11, schema=SCHEMA))
        plain = _oracle_lhs_dataset(n, 12)
        assert band_fraction(adaptive) > band_fraction(plain) + 0.1

    def test_empty_existing_rejected(self):
        empty = Dataset(np.empty((0, 10)), np.empty((0, 3)))
        with pytest.raises(ValueError):
            adaptive_resample(empty, 3, seed=0, schema=SCHEMA)
