"""Multivariate series containers, standardization, windowing and MAPE.

Time indices are 0-based throughout the code. Where an argument mirrors a
1-based time index (``t0`` in :func:`split_context_horizon`) the docstring
says so explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConstantColumn,
    DimensionMismatch,
    LengthMismatch,
    NearZeroActual,
    OutOfRange,
)

MAPE_EPS = 1e-8
_CONSTANT_STD = 1e-12


@dataclass(frozen=True, eq=False)
class MultivariateSeries:
    """An ``r x N`` table of observations, one named column per variable.

    The values array is copied on construction and made read-only.
    """

    values: np.ndarray
    names: tuple[str, ...]

    def __init__(self, values, names: Sequence[str] | None = None):
        arr = np.array(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d array, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise DimensionMismatch("series needs at least one variable")
        if not np.all(np.isfinite(arr)):
            raise ValueError("series contains non-finite values")
        if names is None:
            names = [f"X{k + 1}" for k in range(arr.shape[1])]
        names = tuple(str(n) for n in names)
        if len(names) != arr.shape[1]:
            raise DimensionMismatch(
                f"{len(names)} names given for {arr.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValueError(f"variable names are not unique: {names}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "names", names)

    @property
    def r(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def rows(self, start: int, stop: int) -> "MultivariateSeries":
        return MultivariateSeries(self.values[start:stop], self.names)

    def with_column(self, i: int, column) -> "MultivariateSeries":
        """Copy of the series with column ``i`` replaced."""
        values = self.values.copy()
        values[:, i] = column
        return MultivariateSeries(values, self.names)

    def __len__(self) -> int:
        return self.r

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultivariateSeries):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"MultivariateSeries(r={self.r}, names={list(self.names)})"


class RealizationSet(Sequence[MultivariateSeries]):
    """Non-empty ordered collection of equally shaped realizations."""

    def __init__(self, realizations: Sequence[MultivariateSeries]):
        realizations = list(realizations)
        if not realizations:
            raise ValueError("a realization set cannot be empty")
        first = realizations[0]
        for k, real in enumerate(realizations[1:], start=1):
            if real.names != first.names or real.r != first.r:
                raise DimensionMismatch(
                    f"realization {k} has shape/names differing from realization 0"
                )
        self._items = tuple(realizations)

    def __getitem__(self, k):
        return self._items[k]

    def __len__(self) -> int:
        return len(self._items)

    @property
    def names(self) -> tuple[str, ...]:
        return self._items[0].names

    @property
    def n_vars(self) -> int:
        return self._items[0].n_vars

    @property
    def r(self) -> int:
        return self._items[0].r

    def stacked(self) -> np.ndarray:
        """All rows of all realizations, shape ``(count * r, N)``."""
        return np.concatenate([real.values for real in self._items], axis=0)


@dataclass(frozen=True)
class StandardizationParams:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).ravel()
        stds = np.asarray(self.stds, dtype=float).ravel()
        if means.shape != stds.shape:
            raise DimensionMismatch("means and stds differ in length")
        if np.any(stds <= 0):
            raise ValueError("standard deviations must be strictly positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.means) / self.stds

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.stds + self.means


def fit_standardization(values: np.ndarray, allow_constant: bool = False) -> StandardizationParams:
    """Column means and population standard deviations of ``values``.

    With ``allow_constant`` a zero-variance column gets unit scale (it is only
    centred) instead of raising :class:`ConstantColumn`.
    """
    values = np.asarray(values, dtype=float)
    means = values.mean(axis=0)
    stds = values.std(axis=0)
    constant = stds < _CONSTANT_STD
    if np.any(constant):
        if not allow_constant:
            cols = np.flatnonzero(constant).tolist()
            raise ConstantColumn(f"columns {cols} have zero standard deviation")
        stds = np.where(constant, 1.0, stds)
    return StandardizationParams(means, stds)


def standardize(series: MultivariateSeries) -> tuple[MultivariateSeries, StandardizationParams]:
    params = fit_standardization(series.values)
    return MultivariateSeries(params.apply(series.values), series.names), params


def destandardize(series: MultivariateSeries, params: StandardizationParams) -> MultivariateSeries:
    if params.means.shape[0] != series.n_vars:
        raise DimensionMismatch(
            f"params cover {params.means.shape[0]} variables, series has {series.n_vars}"
        )
    return MultivariateSeries(params.invert(series.values), series.names)


def split_context_horizon(
    series: MultivariateSeries, t0: int, T: int
) -> tuple[MultivariateSeries, MultivariateSeries]:
    """Split at the 1-based time index ``t0``.

    The context holds rows ``1 .. t0-1`` and the horizon rows ``t0 .. t0+T-1``
    (both 1-based, inclusive).
    """
    if t0 < 1 or T < 1 or t0 + T - 1 > series.r:
        raise OutOfRange(f"t0={t0}, T={T} do not fit a series of length {series.r}")
    start = t0 - 1
    return series.rows(0, start), series.rows(start, start + T)


def mape(actual, predicted, eps: float = MAPE_EPS) -> float:
    """Mean absolute percentage error, as a fraction (not multiplied by 100)."""
    actual = np.asarray(actual, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    if actual.shape != predicted.shape:
        raise LengthMismatch(f"{actual.shape[0]} actuals vs {predicted.shape[0]} predictions")
    if actual.size == 0:
        raise LengthMismatch("empty horizon")
    scale = np.abs(actual)
    if np.any(scale < eps):
        where = np.flatnonzero(scale < eps).tolist()
        raise NearZeroActual(f"actual values at positions {where} are below {eps}")
    return float(np.mean(np.abs(actual - predicted) / scale))
