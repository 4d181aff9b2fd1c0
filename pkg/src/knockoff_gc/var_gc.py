"""Linear vector-autoregressive Granger causality.

The conditional score of ``i -> j`` is the log ratio of equation-``j``
residual variances between a VAR(p) without and with the lags of ``i``::

    gamma_{i->j} = ln(var_j(reduced) / var_j(full))

Significance comes from the nested-model F statistic, or optionally from a
block permutation of the candidate cause.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import BadIndex, SingularDesign, TooShort
from .timeseries import MultivariateSeries

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class VarModel:
    order: int
    coeff: list[np.ndarray]  # A_m, with coeff[m-1][j, i] the effect of z_i(t-m) on z_j(t)
    intercept: np.ndarray
    residual_cov: np.ndarray
    residuals: np.ndarray
    design: np.ndarray


@dataclass(frozen=True)
class GcResult:
    gamma: np.ndarray
    p_values: np.ndarray
    order: int
    alpha: float

    @property
    def adjacency(self) -> np.ndarray:
        adj = self.p_values < self.alpha
        np.fill_diagonal(adj, False)
        return adj


def _values(series) -> np.ndarray:
    if isinstance(series, MultivariateSeries):
        return series.values
    arr = np.asarray(series, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def lagged_design(values: np.ndarray, p: int, skip: int = 0):
    """Regressors ``[1, z_{t-1}, ..., z_{t-p}]`` and targets ``z_t``.

    ``skip`` drops extra leading rows so designs for different orders can
    share one estimation sample. Column ``1 + (m-1)*N + i`` holds ``z_i(t-m)``.
    """
    r, n = values.shape
    start = p + skip
    rows = r - start
    X = np.empty((rows, 1 + n * p))
    X[:, 0] = 1.0
    for m in range(1, p + 1):
        X[:, 1 + (m - 1) * n: 1 + m * n] = values[start - m: r - m]
    return X, values[start:]


def _lstsq(X, Y):
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] <= _RANK_TOL * s[0]:
        raise SingularDesign("lagged regressors are collinear")
    beta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    return beta


def fit_var(series, p: int) -> VarModel:
    values = _values(series)
    r, n = values.shape
    if p < 1:
        raise ValueError("order must be at least 1")
    if r <= n * p + 1 + p:
        raise TooShort(f"{r} rows are too few for a VAR({p}) in {n} variables")
    X, Y = lagged_design(values, p)
    beta = _lstsq(X, Y)
    resid = Y - X @ beta
    cov = resid.T @ resid / (r - p)
    coeff = [beta[1 + (m - 1) * n: 1 + m * n].T.copy() for m in range(1, p + 1)]
    return VarModel(p, coeff, beta[0].copy(), cov, resid, X)


def select_order(series, p_max: int) -> int:
    """Order in ``1..p_max`` minimizing the Bayesian information criterion.

    All candidate orders are fitted on the same estimation sample.
    """
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    values = _values(series)
    n = values.shape[1]
    best, best_bic = 1, np.inf
    for p in range(1, p_max + 1):
        X, Y = lagged_design(values, p, skip=p_max - p)
        beta = _lstsq(X, Y)
        resid = Y - X @ beta
        n_obs = Y.shape[0]
        _, logdet = np.linalg.slogdet(resid.T @ resid / n_obs)
        bic = logdet + np.log(n_obs) / n_obs * (n * n * p + n)
        if bic < best_bic:
            best, best_bic = p, bic
    return best


def _cause_columns(n: int, p: int, i: int) -> list[int]:
    return [1 + (m - 1) * n + i for m in range(1, p + 1)]


def _rss(X, y) -> float:
    beta = _lstsq(X, y)
    resid = y - X @ beta
    return float(resid @ resid)


def _pair_stats(X, Y, n, p, i, j):
    y = Y[:, j]
    rss_full = _rss(X, y)
    keep = np.setdiff1d(np.arange(X.shape[1]), _cause_columns(n, p, i))
    rss_reduced = _rss(X[:, keep], y)
    return rss_full, rss_reduced


def gc_score(series, i: int, j: int, p: int) -> float:
    """Conditional Granger score ``gamma_{i->j}`` for a VAR(p)."""
    values = _values(series)
    n = values.shape[1]
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise BadIndex(f"need distinct indices in 0..{n - 1}, got {i}, {j}")
    fit_var(values, p)  # length and rank checks
    X, Y = lagged_design(values, p)
    rss_full, rss_reduced = _pair_stats(X, Y, n, p, i, j)
    return float(np.log(rss_reduced / rss_full))


def _f_pvalue(rss_full, rss_reduced, n_obs, n_params, q) -> float:
    df2 = n_obs - n_params
    F = ((rss_reduced - rss_full) / q) / (rss_full / df2)
    return float(stats.f.sf(max(F, 0.0), q, df2))


def _block_permute(x: np.ndarray, block: int, rng) -> np.ndarray:
    n_blocks = -(-len(x) // block)
    pieces = [x[b * block:(b + 1) * block] for b in range(n_blocks)]
    order = rng.permutation(n_blocks)
    return np.concatenate([pieces[k] for k in order])


def gc_matrix(series, p: int | None = None, alpha: float = 0.05, p_max: int = 10,
              test: str = "f", n_permutations: int = 200, block: int | None = None,
              seed: int = 0) -> GcResult:
    """Scores and p-values for every ordered pair.

    ``p=None`` picks the order by BIC up to ``p_max``. ``test="permutation"``
    replaces the F-test by block-permuting the cause series.
    """
    values = _values(series)
    n = values.shape[1]
    if p is None:
        p = select_order(values, p_max)
    fit_var(values, p)
    X, Y = lagged_design(values, p)
    n_obs, n_params = X.shape
    gamma = np.zeros((n, n))
    pvals = np.ones((n, n))
    rng = np.random.default_rng(seed)
    block = max(p, 10) if block is None else block
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            rss_full, rss_reduced = _pair_stats(X, Y, n, p, i, j)
            gamma[i, j] = np.log(rss_reduced / rss_full)
            if test == "f":
                pvals[i, j] = _f_pvalue(rss_full, rss_reduced, n_obs, n_params, p)
            elif test == "permutation":
                exceed = 0
                for _ in range(n_permutations):
                    permuted = values.copy()
                    permuted[:, i] = _block_permute(values[:, i], block, rng)
                    Xp, Yp = lagged_design(permuted, p)
                    f, red = _pair_stats(Xp, Yp, n, p, i, j)
                    exceed += np.log(red / f) >= gamma[i, j]
                pvals[i, j] = (1 + exceed) / (1 + n_permutations)
            else:
                raise ValueError(f"unknown test {test!r}")
    return GcResult(gamma, pvals, p, alpha)
