import numpy as np
import pytest

from knockoff_gc.forecaster import NetworkConfig, build_model, train
from knockoff_gc.timeseries import MultivariateSeries, RealizationSet


def ar1(length, phi=0.8, n_vars=1, seed=0, burn=200):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((length + burn, n_vars))
    z = np.zeros_like(e)
    for t in range(1, len(z)):
        z[t] = phi * z[t - 1] + e[t]
    return z[burn:]


@pytest.fixture(scope="session")
def small_model():
    """Two-variable net trained briefly on coupled AR data; shared read-only."""
    rng = np.random.default_rng(11)
    z = np.zeros((1200, 2))
    for t in range(1, len(z)):
        z[t, 0] = 0.6 * z[t - 1, 0] + rng.standard_normal()
        z[t, 1] = 0.5 * z[t - 1, 1] + 0.8 * z[t - 1, 0] + rng.standard_normal()
    z += 5.0
    series = MultivariateSeries(z, ["a", "b"])
    data = RealizationSet([series.rows(k * 100, (k + 1) * 100) for k in range(12)])
    cfg = NetworkConfig(num_layers=1, hidden_size=8, epochs=4, prediction_length=5,
                        context_length=20, window_stride=5, seed=3)
    return train(build_model(cfg, 2), data, cfg), data
