"""Ground-truth data generators.

``generate_climate`` simulates a four-variable climate/ecosystem toy model
(radiation, air temperature, gross primary production, ecosystem respiration)
with a seasonal driver, a multiplicative coupling and a temperature-sensitivity
term ``beta ** ((X2 - Q) / 10)``. ``generate_linear_var`` simulates a stable
VAR for checking the linear baseline.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidConfig, NonFiniteTrajectory, TooShort, Unstable
from .timeseries import MultivariateSeries, RealizationSet

BURN_IN = 100
CLIMATE_NAMES = ("X1", "X2", "X3", "X4")


@dataclass(frozen=True)
class SyntheticConfig:
    c: tuple[float, float, float, float] = (0.95, 0.80, 0.50, 0.75)
    beta: float = 1.0
    taus: tuple[int, int, int, int, int, int] = (1, 2, 1, 2, 1, 1)
    noise_vars: tuple[float, float, float] = (0.30, 0.35, 0.25)
    Q: float = 10.0
    period: float = 150.0
    length: int = 3000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        object.__setattr__(self, "taus", tuple(self.taus))
        object.__setattr__(self, "noise_vars", tuple(float(x) for x in self.noise_vars))
        if len(self.c) != 4 or len(self.taus) != 6 or len(self.noise_vars) != 3:
            raise InvalidConfig("need 4 couplings, 6 lags and 3 noise variances")
        for tau in self.taus:
            if not isinstance(tau, (int, np.integer)) or not 0 <= tau <= 10:
                raise InvalidConfig(f"lags must be integers in [0, 10], got {tau!r}")
        if min(self.noise_vars) <= 0:
            raise InvalidConfig("noise variances must be positive")
        if not self.beta > 0:
            raise InvalidConfig("beta must be positive")
        if not self.period > 0:
            raise InvalidConfig("period must be positive")
        if self.length <= max(self.taus) + BURN_IN:
            raise InvalidConfig(f"length must exceed {max(self.taus) + BURN_IN}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SyntheticConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown synthetic config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("c", "taus", "noise_vars"):
            out[key] = list(out[key])
        return out


@dataclass(frozen=True)
class GroundTruth:
    """Directed edges ``adjacency[i, j]`` meaning variable i drives variable j."""

    adjacency: np.ndarray
    names: tuple[str, ...] = field(default=())
    self_links: tuple[int, ...] = ()

    def edges(self) -> set[tuple[int, int]]:
        idx = np.argwhere(self.adjacency)
        return {(int(i), int(j)) for i, j in idx if i != j}

    @property
    def n_vars(self) -> int:
        return self.adjacency.shape[0]


def climate_ground_truth(config: SyntheticConfig) -> GroundTruth:
    c1, c2, c3, c4 = config.c
    adj = np.zeros((4, 4), dtype=bool)
    if c2 != 0:
        adj[0, 1] = True
    if c3 != 0:
        adj[0, 2] = adj[1, 2] = True
    if c4 != 0:
        adj[2, 3] = adj[1, 3] = True
    self_links = (1,) if c1 != 0 else ()
    return GroundTruth(adj, CLIMATE_NAMES, self_links)


def climate_noise(config: SyntheticConfig, seed: int) -> np.ndarray:
    """The ``(length, 4)`` noise matrix driving X1 and the three dynamical noises.

    Drawn up front and in a fixed order, so changing coefficients never
    changes the noise a given seed produces.
    """
    rng = np.random.default_rng(seed)
    scale = np.sqrt(np.array((1.0,) + config.noise_vars))
    return rng.standard_normal((config.length, 4)) * scale


def generate_climate(config: SyntheticConfig, seed: int | None = None):
    """Simulate the four coupled equations; returns ``(series, truth)``.

    The first ``BURN_IN`` steps are discarded, leaving ``length - 100`` rows.
    The seasonal driver is ``|cos(2 pi t / period)|``.
    """
    seed = config.seed if seed is None else seed
    c1, c2, c3, c4 = config.c
    t1, t2, t3, t4, t5, t6 = config.taus
    beta, Q = config.beta, config.Q
    L = config.length
    noise = climate_noise(config, seed)
    t = np.arange(L)
    x1 = noise[:, 0] + np.abs(np.cos(2.0 * np.pi * t / config.period))
    x2 = np.zeros(L)
    x3 = np.zeros(L)
    x4 = np.zeros(L)
    start = max(config.taus)
    for k in range(start, L):
        x2[k] = c1 * x2[k - t1] + c2 * x1[k - t2] + noise[k, 1]
        x3[k] = c3 * x1[k - t3] * x2[k - t4] + noise[k, 2]
        x4[k] = c4 * x3[k - t5] * beta ** ((x2[k - t6] - Q) / 10.0) + noise[k, 3]
    values = np.column_stack([x1, x2, x3, x4])[BURN_IN:]
    if not np.all(np.isfinite(values)):
        raise NonFiniteTrajectory("the simulated trajectory diverged")
    return MultivariateSeries(values, CLIMATE_NAMES), climate_ground_truth(config)


def companion_spectral_radius(A_list: Sequence[np.ndarray]) -> float:
    A_list = [np.asarray(A, dtype=float) for A in A_list]
    n = A_list[0].shape[0]
    p = len(A_list)
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.hstack(A_list)
    comp[n:, :-n] = np.eye(n * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def generate_linear_var(A_list, noise_cov, length: int, seed: int, burn_in: int = BURN_IN,
                        names: Sequence[str] | None = None):
    """Simulate ``z_t = sum_m A_m z_{t-m} + e_t`` with Gaussian ``e_t``."""
    A_list = [np.atleast_2d(np.asarray(A, dtype=float)) for A in A_list]
    n = A_list[0].shape[0]
    p = len(A_list)
    if companion_spectral_radius(A_list) >= 1.0:
        raise Unstable("companion matrix has spectral radius >= 1")
    noise_cov = np.atleast_2d(np.asarray(noise_cov, dtype=float))
    rng = np.random.default_rng(seed)
    total = length + burn_in
    eps = rng.multivariate_normal(np.zeros(n), noise_cov, size=total, method="cholesky")
    z = np.zeros((total + p, n))
    for k in range(p, total + p):
        acc = eps[k - p].copy()
        for m, A in enumerate(A_list, start=1):
            acc += A @ z[k - m]
        z[k] = acc
    adj = np.zeros((n, n), dtype=bool)
    for A in A_list:
        adj |= (A != 0).T
    np.fill_diagonal(adj, False)
    series = MultivariateSeries(z[p + burn_in:], names)
    return series, GroundTruth(adj, series.names)


def make_realizations(series: MultivariateSeries, r: int, count: int, stride: int | None = None) -> RealizationSet:
    """``count`` windows of ``r`` rows starting every ``stride`` rows (default ``r``)."""
    stride = r if stride is None else stride
    if r < 1 or count < 1 or stride < 1:
        raise InvalidConfig("r, count and stride must be positive")
    if (count - 1) * stride + r > series.r:
        raise TooShort(
            f"{count} windows of {r} rows with stride {stride} need "
            f"{(count - 1) * stride + r} rows, series has {series.r}"
        )
    return RealizationSet([series.rows(k * stride, k * stride + r) for k in range(count)])
