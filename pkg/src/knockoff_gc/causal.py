"""Counterfactual interventions, causal significance scores and graph extraction.

For an ordered pair ``i -> j`` the score of one realization is::

    CSS = ln(MAPE_j after intervening on i / MAPE_j before)

where both MAPEs come from the predictive mean of the forecaster over the
final ``T`` rows. By default the horizon forecast of ``j`` is conditioned on
the observed (or, for ``i``, intervened) horizon values of every other
variable, and ``j`` alone is sampled ancestrally. Factual and counterfactual
forecasts share one seed so their Monte Carlo noise cancels in the ratio.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats

from .errors import BadIndex, DegenerateMape, InvalidConfig, TooFewRealizations
from .forecaster import TrainedModel, forecast, predictive_mean
from .knockoffs import KnockoffSampler, MixtureKnockoffSampler, fit_mixture, knockoff_series
from .timeseries import MultivariateSeries, RealizationSet, mape, split_context_horizon

MAPE_FLOOR = 1e-12


class Intervention:
    kind = "identity"

    def apply(self, realization: MultivariateSeries, i: int, seed: int) -> MultivariateSeries:
        return realization

    def describe(self) -> dict:
        return {"kind": self.kind}


class MeanIntervention(Intervention):
    """Replace the column by its sample mean."""

    kind = "mean"

    def apply(self, realization, i, seed):
        _check_index(realization, i)
        col = realization.column(i)
        return realization.with_column(i, np.full(col.shape, col.mean()))


@dataclass
class OutOfDistributionIntervention(Intervention):
    """Replace the column with draws from a foreign uniform distribution.

    With ``relative=True`` the bounds are offsets from the column mean in units
    of the column standard deviation. The draw is reshuffled up to
    ``n_shuffles`` times and the ordering least correlated with the original
    column is kept.
    """

    low: float = 3.0
    high: float = 6.0
    relative: bool = True
    n_shuffles: int = 20
    kind = "outdist"

    def __post_init__(self):
        if not self.high > self.low:
            raise InvalidConfig("need high > low")

    def apply(self, realization, i, seed):
        _check_index(realization, i)
        col = realization.column(i)
        low, high = self.low, self.high
        if self.relative:
            sd = col.std() if col.std() > 0 else 1.0
            low, high = col.mean() + low * sd, col.mean() + high * sd
        rng = np.random.default_rng([seed, i])
        draw = rng.uniform(low, high, col.shape[0])
        best, best_corr = draw, np.inf
        for _ in range(self.n_shuffles):
            cand = rng.permutation(draw)
            corr = abs(_corr(cand, col))
            if corr < best_corr:
                best, best_corr = cand, corr
        return realization.with_column(i, best)

    def describe(self):
        return {"kind": self.kind, "low": self.low, "high": self.high,
                "relative": self.relative, "n_shuffles": self.n_shuffles}


@dataclass
class KnockoffIntervention(Intervention):
    """Swap the column for its knockoff copy drawn by ``sampler``."""

    sampler: KnockoffSampler | MixtureKnockoffSampler
    kind = "knockoff"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def knockoffs(self, realization: MultivariateSeries, seed: int) -> np.ndarray:
        key = (id(realization), seed)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not realization:
            hit = (realization, knockoff_series(realization, self.sampler, seed).knockoffs.values)
            self._cache[key] = hit
        return hit[1]

    def apply(self, realization, i, seed):
        _check_index(realization, i)
        return realization.with_column(i, self.knockoffs(realization, seed)[:, i])

    def describe(self):
        return {"kind": self.kind, "s_diag": _s_diag_summary(self.sampler)}


def _s_diag_summary(sampler):
    if isinstance(sampler, MixtureKnockoffSampler):
        return [c.s_diag.tolist() for c in sampler.components]
    return sampler.s_diag.tolist()


def _corr(a, b) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def _check_index(realization, i):
    if not 0 <= i < realization.n_vars:
        raise BadIndex(f"variable index {i} outside 0..{realization.n_vars - 1}")


def make_intervention(kind: str, data: RealizationSet | None = None, **options) -> Intervention:
    """Intervention from its tag; knockoff samplers are fitted on ``data`` when needed."""
    if kind == "mean":
        return MeanIntervention()
    if kind == "outdist":
        return OutOfDistributionIntervention(**options)
    if kind == "knockoff":
        sampler = options.pop("sampler", None)
        if sampler is None:
            if data is None:
                raise InvalidConfig("knockoff intervention needs data or a sampler")
            sampler = fit_mixture(data.stacked(), **options)
        return KnockoffIntervention(sampler)
    if kind == "identity":
        return Intervention()
    raise InvalidConfig(f"unknown intervention kind {kind!r}")


def intervene(realization: MultivariateSeries, i: int, kind: Intervention, seed: int = 0) -> MultivariateSeries:
    return kind.apply(realization, i, seed)


@dataclass(frozen=True)
class CssParams:
    """How each realization is split and forecast.

    ``t0`` is the 1-based first horizon row (default: the last ``T`` rows).
    ``conditioning="observed"`` feeds every non-target variable its known
    horizon values; ``"sampled"`` samples all variables ancestrally.
    """

    T: int = 14
    num_samples: int = 100
    seed: int = 0
    t0: int | None = None
    conditioning: str = "observed"

    def __post_init__(self):
        if self.conditioning not in ("observed", "sampled"):
            raise InvalidConfig(f"conditioning must be 'observed' or 'sampled'")
        if self.T < 1 or self.num_samples < 1:
            raise InvalidConfig("T and num_samples must be positive")

    def start(self, r: int) -> int:
        return r - self.T + 1 if self.t0 is None else self.t0

    def to_dict(self) -> dict:
        return asdict(self)


def target_mape(model: TrainedModel, realization: MultivariateSeries, j: int,
                params: CssParams, seed: int) -> float:
    """MAPE of the forecast for variable ``j`` on one realization."""
    t0 = params.start(realization.r)
    context, horizon = split_context_horizon(realization, t0, params.T)
    clamp = None
    if params.conditioning == "observed":
        clamp = {k: horizon.values[:, k] for k in range(realization.n_vars) if k != j}
    samples = forecast(model, context, params.T, params.num_samples, seed, clamp)
    return mape(horizon.values[:, j], predictive_mean(samples)[:, j])


def css_from_errors(mape_before: float, mape_after: float) -> float:
    if mape_before < MAPE_FLOOR or mape_after < MAPE_FLOOR:
        raise DegenerateMape(f"MAPE values {mape_before}, {mape_after} are too small for a log ratio")
    # difference of logs, so swapping the arguments negates the score exactly
    return float(np.log(mape_after) - np.log(mape_before))


def _realization_seed(base: int, k: int) -> int:
    return int(np.random.SeedSequence([base, k]).generate_state(1)[0])


def css(model, realization, i, j, kind: Intervention, t0=None, T=14, S=100, seed=0,
        conditioning="observed") -> float:
    """Causal significance score of ``i -> j`` on a single realization."""
    if i == j:
        raise BadIndex("css needs i != j")
    params = CssParams(T=T, num_samples=S, seed=seed, t0=t0, conditioning=conditioning)
    before = target_mape(model, realization, j, params, seed)
    after = target_mape(model, intervene(realization, i, kind, seed), j, params, seed)
    return css_from_errors(before, after)


@dataclass
class CssDistribution:
    pair: tuple[int, int]
    kind: str
    values: np.ndarray
    mapes: np.ndarray  # (count, 2): MAPE_j before and after intervening on i

    def __len__(self) -> int:
        return len(self.values)


def css_distribution(model, data: RealizationSet, i: int, j: int, kind: Intervention,
                     params: CssParams = CssParams(), _factual: dict | None = None) -> CssDistribution:
    """One score per realization; realization ``k`` uses a seed derived from ``(seed, k)``."""
    if i == j:
        raise BadIndex("css needs i != j")
    _check_index(data[0], i)
    _check_index(data[0], j)
    factual = {} if _factual is None else _factual
    values, mapes = [], []
    for k, real in enumerate(data):
        seed_k = _realization_seed(params.seed, k)
        if (k, j) not in factual:
            factual[(k, j)] = target_mape(model, real, j, params, seed_k)
        before = factual[(k, j)]
        after = target_mape(model, intervene(real, i, kind, seed_k), j, params, seed_k)
        values.append(css_from_errors(before, after))
        mapes.append((before, after))
    return CssDistribution((i, j), kind.kind, np.array(values), np.array(mapes))


@dataclass(frozen=True)
class HypothesisConfig:
    alpha: float = 0.05
    tail: str = "right"
    min_realizations: int = 10

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidConfig("alpha must lie strictly between 0 and 1")
        if self.tail not in ("right", "two_sided"):
            raise InvalidConfig("tail must be 'right' or 'two_sided'")
        if self.min_realizations < 2:
            raise InvalidConfig("min_realizations must be at least 2")

    @classmethod
    def from_dict(cls, data: Mapping) -> "HypothesisConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown hypothesis config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LinkTest:
    decision: bool
    p_value: float
    mean_css: float


def test_link(dist: CssDistribution, config: HypothesisConfig = HypothesisConfig()) -> LinkTest:
    """One-sample t-test of the mean score against zero."""
    values = np.asarray(dist.values, dtype=float)
    if len(values) < config.min_realizations:
        raise TooFewRealizations(
            f"{len(values)} realizations, at least {config.min_realizations} required"
        )
    mean = float(values.mean())
    if np.all(values == values[0]):
        # zero variance: the sign alone decides
        positive = mean > 0 if config.tail == "right" else mean != 0
        return LinkTest(bool(positive), 0.0 if positive else 1.0, mean)
    alternative = "greater" if config.tail == "right" else "two-sided"
    p = float(stats.ttest_1samp(values, 0.0, alternative=alternative).pvalue)
    return LinkTest(p < config.alpha, p, mean)


test_link.__test__ = False  # keep pytest from collecting it


@dataclass
class CausalGraph:
    names: tuple[str, ...]
    adjacency: np.ndarray
    mean_css: np.ndarray
    p_value: np.ndarray
    kind: str
    config: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.adjacency) if i != j]


def causal_graph(model, data: RealizationSet, kind: Intervention,
                 config: HypothesisConfig = HypothesisConfig(),
                 params: CssParams = CssParams()) -> CausalGraph:
    """Test every ordered pair ``i != j`` and collect the accepted links."""
    n = data.n_vars
    adjacency = np.zeros((n, n), dtype=bool)
    mean_css = np.zeros((n, n))
    p_value = np.ones((n, n))
    factual: dict = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dist = css_distribution(model, data, i, j, kind, params, _factual=factual)
            result = test_link(dist, config)
            adjacency[i, j] = result.decision
            mean_css[i, j] = result.mean_css
            p_value[i, j] = result.p_value
    echo = {"hypothesis": config.to_dict(), "css": params.to_dict(), "intervention": kind.describe()}
    return CausalGraph(tuple(data.names), adjacency, mean_css, p_value, kind.kind, echo)
