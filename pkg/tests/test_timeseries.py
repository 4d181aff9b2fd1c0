import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from knockoff_gc.errors import (ConstantColumn, DimensionMismatch, LengthMismatch,
                                NearZeroActual, OutOfRange)
from knockoff_gc.timeseries import (MultivariateSeries, RealizationSet, StandardizationParams,
                                    destandardize, mape, split_context_horizon, standardize)


def series(col):
    return MultivariateSeries(np.asarray(col, dtype=float).reshape(-1, 1))


class TestSeries:
    def test_default_names_and_shape(self):
        s = MultivariateSeries(np.zeros((5, 3)))
        assert s.names == ("X1", "X2", "X3")
        assert (s.r, s.n_vars) == (5, 3)

    @pytest.mark.parametrize("values", [np.array([[np.nan]]), np.array([[np.inf, 1.0]])])
    def test_rejects_non_finite(self, values):
        with pytest.raises(ValueError):
            MultivariateSeries(values)

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError):
            MultivariateSeries(np.zeros((2, 2)), ["a", "a"])

    def test_values_are_read_only(self):
        s = MultivariateSeries(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            s.values[0, 0] = 1.0

    def test_with_column_leaves_others_alone(self):
        rng = np.random.default_rng(0)
        s = MultivariateSeries(rng.normal(size=(10, 3)))
        out = s.with_column(1, np.zeros(10))
        assert np.array_equal(out.values[:, [0, 2]], s.values[:, [0, 2]])
        assert np.all(out.column(1) == 0)

    def test_realization_set_requires_matching_members(self):
        a = MultivariateSeries(np.zeros((4, 2)))
        b = MultivariateSeries(np.zeros((5, 2)))
        with pytest.raises(ValueError):
            RealizationSet([a, b])
        with pytest.raises(ValueError):
            RealizationSet([])


class TestStandardize:
    def test_constant_column(self):
        with pytest.raises(ConstantColumn):
            standardize(series([0, 0, 0, 0]))

    def test_one_two_three(self):
        out, params = standardize(series([1, 2, 3]))
        sd = np.sqrt(2.0 / 3.0)  # population form, denominator n
        assert params.means[0] == pytest.approx(2.0, abs=1e-12)
        assert params.stds[0] == pytest.approx(sd, abs=1e-12)
        np.testing.assert_allclose(out.values[:, 0], [-1 / sd, 0, 1 / sd], atol=1e-12)

    def test_idempotent_on_standardized_input(self):
        rng = np.random.default_rng(1)
        first, _ = standardize(MultivariateSeries(rng.normal(size=(50, 3))))
        second, params = standardize(first)
        np.testing.assert_allclose(params.means, 0, atol=1e-10)
        np.testing.assert_allclose(params.stds, 1, atol=1e-10)
        np.testing.assert_allclose(second.values, first.values, atol=1e-10)

    def test_destandardize_examples(self):
        out, params = standardize(series([1, 2, 3]))
        np.testing.assert_allclose(destandardize(out, params).values[:, 0], [1, 2, 3], atol=1e-10)
        zeros = series(np.zeros(4))
        back = destandardize(zeros, StandardizationParams(np.array([5.0]), np.array([2.0])))
        assert np.all(back.values == 5.0)
        ident = destandardize(series([3, -1]), StandardizationParams(np.array([0.0]), np.array([1.0])))
        assert np.array_equal(ident.values[:, 0], [3, -1])

    def test_dimension_mismatch(self):
        params = StandardizationParams(np.zeros(2), np.ones(2))
        with pytest.raises(DimensionMismatch):
            destandardize(series([1, 2]), params)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (12, 3), elements=st.floats(-1e3, 1e3)))
    def test_round_trip(self, values):
        if np.any(values.std(axis=0) < 1e-3):
            return
        s = MultivariateSeries(values)
        out, params = standardize(s)
        np.testing.assert_allclose(out.values.mean(axis=0), 0, atol=1e-10)
        np.testing.assert_allclose(out.values.std(axis=0), 1, atol=1e-10)
        np.testing.assert_allclose(destandardize(out, params).values, values, atol=1e-10 * max(1, np.abs(values).max()))
        again = standardize(destandardize(out, params))[0]
        np.testing.assert_allclose(again.values, out.values, atol=1e-8)


class TestSplit:
    def test_two_hundred_rows_fourteen_ahead(self):
        s = MultivariateSeries(np.arange(200.0)[:, None])
        ctx, hor = split_context_horizon(s, 187, 14)
        assert (ctx.r, hor.r) == (186, 14)
        assert np.array_equal(np.vstack([ctx.values, hor.values]), s.values)

    def test_empty_context(self):
        s = MultivariateSeries(np.arange(10.0)[:, None])
        ctx, hor = split_context_horizon(s, 1, 10)
        assert ctx.r == 0 and hor == s

    @pytest.mark.parametrize("t0,T", [(8, 5), (0, 3), (11, 1)])
    def test_out_of_range(self, t0, T):
        s = MultivariateSeries(np.arange(10.0)[:, None])
        with pytest.raises(OutOfRange):
            split_context_horizon(s, t0, T)

    @given(st.integers(1, 30), st.integers(1, 30))
    def test_rows_preserved(self, t0, T):
        s = MultivariateSeries(np.arange(60.0).reshape(30, 2))
        if t0 + T - 1 > 30:
            return
        ctx, hor = split_context_horizon(s, t0, T)
        assert np.array_equal(np.vstack([ctx.values, hor.values]), s.values[: t0 + T - 1])


class TestMape:
    @pytest.mark.parametrize("actual,predicted,expected", [
        ([1, 2, 4], [1, 2, 4], 0.0),
        ([1, 2], [2, 4], 1.0),
        ([2], [1], 0.5),
    ])
    def test_examples(self, actual, predicted, expected):
        assert abs(mape(actual, predicted) - expected) <= 1e-12

    def test_guards(self):
        with pytest.raises(NearZeroActual):
            mape([1.0, 1e-9], [1.0, 1.0])
        with pytest.raises(LengthMismatch):
            mape([1.0, 2.0], [1.0])

    @settings(max_examples=100)
    @given(arrays(np.float64, 6, elements=st.floats(0.1, 100)),
           arrays(np.float64, 6, elements=st.floats(-100, 100)),
           st.floats(0.01, 100), st.booleans())
    def test_scale_invariance(self, a, p, c, neg):
        c = -c if neg else c
        assert mape(a, p) >= 0
        assert mape(a, a) == 0
        assert abs(mape(c * a, c * p) - mape(a, p)) <= 1e-12 * max(1.0, mape(a, p))
