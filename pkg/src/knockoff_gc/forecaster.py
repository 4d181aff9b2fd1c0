"""Recurrent probabilistic forecaster.

A stack of LSTM layers reads the previous observation vector of all N
variables (plus optional seasonal time features) and emits a diagonal Gaussian
for the next observation. Training maximizes the Gaussian likelihood with
teacher forcing; forecasting warms the state on a context and then samples
traces ancestrally, feeding each draw back as the next input.

Gradients are derived by hand (backpropagation through time); the gradient
check in the test suite is the contract for their correctness.
"""

from __future__ import annotations

import io
import json
import os
import zipfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InvalidConfig, NonFiniteLoss, UntrainedModel
from .timeseries import (
    MultivariateSeries,
    RealizationSet,
    StandardizationParams,
    fit_standardization,
    mape,
    split_context_horizon,
)

CHECKPOINT_VERSION = 1
SIGMA_FLOOR = 1e-4
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_ADAM_BETAS = (0.9, 0.999)
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class NetworkConfig:
    num_layers: int = 4
    hidden_size: int = 40
    dropout: float = 0.05
    epochs: int = 150
    prediction_length: int = 14
    context_length: int | None = None  # None: realization length minus prediction_length
    learning_rate: float = 1e-3
    batch_size: int = 32
    grad_clip: float = 10.0
    seed: int = 0
    window_stride: int = 1
    covariate_period: float | None = None
    holdout_horizon: bool = True

    def __post_init__(self):
        positive_ints = ("num_layers", "hidden_size", "epochs", "prediction_length",
                         "batch_size", "window_stride")
        for name in positive_ints:
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidConfig(f"{name} must be a positive integer, got {value!r}")
        if self.context_length is not None and self.context_length < 1:
            raise InvalidConfig("context_length must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfig(f"dropout must lie in [0, 1), got {self.dropout}")
        if not self.learning_rate > 0 or not self.grad_clip > 0:
            raise InvalidConfig("learning_rate and grad_clip must be positive")
        if self.covariate_period is not None and not self.covariate_period > 0:
            raise InvalidConfig("covariate_period must be positive")

    @property
    def n_covariates(self) -> int:
        return 0 if self.covariate_period is None else 2

    @classmethod
    def from_dict(cls, data: Mapping) -> "NetworkConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown network config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainedModel:
    """Network weights plus the configuration and scaling they were fitted with."""

    params: dict[str, np.ndarray]
    config: NetworkConfig
    n_vars: int
    standardization: StandardizationParams | None = None
    loss_trace: list[float] = field(default_factory=list)

    @property
    def is_trained(self) -> bool:
        return self.standardization is not None

    @property
    def input_size(self) -> int:
        return self.n_vars + self.config.n_covariates

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))


def expected_parameter_count(n_vars: int, hidden: int, layers: int, n_covariates: int = 0) -> int:
    """Closed-form size of the network built by :func:`build_model`."""
    count = 0
    fan_in = n_vars + n_covariates
    for _ in range(layers):
        count += 4 * hidden * (fan_in + hidden) + 4 * hidden
        fan_in = hidden
    return count + hidden * 2 * n_vars + 2 * n_vars


def build_model(config: NetworkConfig, n_vars: int) -> TrainedModel:
    if n_vars < 1:
        raise InvalidConfig("n_vars must be positive")
    rng = np.random.default_rng(config.seed)
    H = config.hidden_size
    params = {}
    fan_in = n_vars + config.n_covariates
    for layer in range(config.num_layers):
        bound = 1.0 / np.sqrt(fan_in + H)
        params[f"lstm{layer}.W"] = rng.uniform(-bound, bound, (fan_in + H, 4 * H))
        params[f"lstm{layer}.b"] = rng.uniform(-bound, bound, 4 * H)
        fan_in = H
    bound = 1.0 / np.sqrt(H)
    params["head.W"] = rng.uniform(-bound, bound, (H, 2 * n_vars))
    params["head.b"] = rng.uniform(-bound, bound, 2 * n_vars)
    return TrainedModel(params, config, n_vars)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


def time_features(times: np.ndarray, period: float | None) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if period is None:
        return np.zeros(times.shape + (0,))
    angle = 2.0 * np.pi * times / period
    return np.stack([np.sin(angle), np.cos(angle)], axis=-1)


class _LSTMStack:
    """Forward and backward passes for a batch of equal-length sequences."""

    def __init__(self, params: dict[str, np.ndarray], num_layers: int, hidden: int):
        self.params = params
        self.num_layers = num_layers
        self.H = hidden

    def cell(self, layer: int, x, h, c):
        W = self.params[f"lstm{layer}.W"]
        b = self.params[f"lstm{layer}.b"]
        H = self.H
        a = np.concatenate([x, h], axis=-1) @ W + b
        i = _sigmoid(a[..., :H])
        f = _sigmoid(a[..., H:2 * H])
        o = _sigmoid(a[..., 2 * H:3 * H])
        g = np.tanh(a[..., 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        return o * tc, c_new, (i, f, o, g, tc)

    def head(self, h):
        out = h @ self.params["head.W"] + self.params["head.b"]
        n = out.shape[-1] // 2
        raw = out[..., n:]
        return out[..., :n], _softplus(raw) + SIGMA_FLOOR, raw

    def forward(self, X, masks=None):
        """Run sequences ``X`` of shape ``(L, B, D)``; returns (mu, sigma, cache)."""
        L, B, _ = X.shape
        H = self.H
        layer_in = X
        caches = []
        for layer in range(self.num_layers):
            if layer > 0 and masks is not None:
                layer_in = layer_in * masks[layer - 1]
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            hs = np.empty((L, B, H))
            cs = np.empty((L + 1, B, H))
            cs[0] = c
            gates = []
            for t in range(L):
                h, c, gate = self.cell(layer, layer_in[t], h, c)
                hs[t] = h
                cs[t + 1] = c
                gates.append(gate)
            caches.append((layer_in, hs, cs, gates))
            layer_in = hs
        mu, sigma, raw = self.head(layer_in)
        return mu, sigma, (caches, raw)

    def backward(self, cache, d_top, masks=None):
        """Gradients of all LSTM weights given the gradient on the top hidden states."""
        caches, _ = cache
        H = self.H
        grads = {}
        d_out = d_top
        for layer in reversed(range(self.num_layers)):
            layer_in, hs, cs, gates = caches[layer]
            W = self.params[f"lstm{layer}.W"]
            L, B, D = layer_in.shape
            dW = np.zeros_like(W)
            db = np.zeros(4 * H)
            d_in = np.empty((L, B, D))
            dh_next = np.zeros((B, H))
            dc_next = np.zeros((B, H))
            zeros = np.zeros((B, H))
            for t in reversed(range(L)):
                i, f, o, g, tc = gates[t]
                dh = d_out[t] + dh_next
                do = dh * tc
                dc = dh * o * (1.0 - tc * tc) + dc_next
                di = dc * g
                dg = dc * i
                df = dc * cs[t]
                dc_next = dc * f
                da = np.concatenate(
                    [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)],
                    axis=-1,
                )
                h_prev = hs[t - 1] if t > 0 else zeros
                xh = np.concatenate([layer_in[t], h_prev], axis=-1)
                dW += xh.T @ da
                db += da.sum(axis=0)
                dxh = da @ W.T
                d_in[t] = dxh[:, :D]
                dh_next = dxh[:, D:]
            grads[f"lstm{layer}.W"] = dW
            grads[f"lstm{layer}.b"] = db
            if layer > 0 and masks is not None:
                d_in = d_in * masks[layer - 1]
            d_out = d_in
        return grads


def gaussian_nll(y, mu, sigma) -> float:
    """Mean negative log-likelihood of ``y`` under independent Gaussians."""
    z = (y - mu) / sigma
    return float(np.mean(np.log(sigma) + 0.5 * z * z + _HALF_LOG_2PI))


def loss_and_grad(model: TrainedModel, X, Y, masks=None):
    """Mean Gaussian NLL over all steps, sequences and variables, with gradients.

    ``X`` has shape ``(L, B, input_size)`` and ``Y`` shape ``(L, B, N)``.
    ``masks`` are fixed inter-layer dropout masks (already scaled), one per
    layer above the first, or None for no dropout.
    """
    cfg = model.config
    net = _LSTMStack(model.params, cfg.num_layers, cfg.hidden_size)
    mu, sigma, cache = net.forward(X, masks)
    loss = gaussian_nll(Y, mu, sigma)
    count = Y.size
    resid = Y - mu
    inv_var = 1.0 / (sigma * sigma)
    d_mu = -resid * inv_var / count
    d_sigma = (1.0 / sigma - resid * resid * inv_var / sigma) / count
    d_raw = d_sigma * _sigmoid(cache[1])
    d_head = np.concatenate([d_mu, d_raw], axis=-1)
    top = cache[0][-1][1]
    grads = {
        "head.W": np.einsum("lbh,lbk->hk", top, d_head),
        "head.b": d_head.sum(axis=(0, 1)),
    }
    d_top = d_head @ model.params["head.W"].T
    grads.update(net.backward(cache, d_top, masks))
    return loss, grads


def _build_windows(data: np.ndarray, length: int, stride: int):
    """Start indices of sliding windows of ``length`` rows over each realization."""
    count, r, _ = data.shape
    starts = range(0, r - length + 1, stride)
    return [(k, s) for k in range(count) for s in starts]


def _window_tensors(data, windows, length, period):
    blocks = np.stack([data[k, s:s + length] for k, s in windows], axis=1)
    starts = np.array([s for _, s in windows])
    times = starts[None, :] + np.arange(1, length)[:, None]
    X = np.concatenate([blocks[:-1], time_features(times, period)], axis=-1)
    return X, blocks[1:]


def _dropout_masks(rng, cfg: NetworkConfig, L: int, B: int):
    if cfg.dropout <= 0 or cfg.num_layers < 2:
        return None
    keep = 1.0 - cfg.dropout
    return [
        (rng.random((L, B, cfg.hidden_size)) < keep) / keep
        for _ in range(cfg.num_layers - 1)
    ]


def _clip_by_global_norm(grads, max_norm):
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def train(model: TrainedModel, data: RealizationSet, config: NetworkConfig | None = None) -> TrainedModel:
    """Fit the network on all realizations and return a trained copy.

    Data are standardized internally (zero-variance columns are only centred)
    and the parameters are stored on the returned model. With
    ``holdout_horizon`` the final ``prediction_length`` rows of every
    realization are kept out of the training windows, so forecasts of those
    rows are out-of-sample.
    """
    cfg = model.config if config is None else config
    if isinstance(data, MultivariateSeries):
        data = RealizationSet([data])
    if data.n_vars != model.n_vars:
        raise InvalidConfig(f"model expects {model.n_vars} variables, data has {data.n_vars}")
    stacked = data.stacked()
    std_params = fit_standardization(stacked, allow_constant=True)
    scaled = np.stack([std_params.apply(real.values) for real in data])

    usable = data.r - cfg.prediction_length if cfg.holdout_horizon else data.r
    context = cfg.context_length if cfg.context_length is not None else data.r - cfg.prediction_length
    length = min(context + cfg.prediction_length, usable)
    if length < 2:
        raise InvalidConfig("realizations are too short to form training windows")
    windows = _build_windows(scaled[:, :usable], length, cfg.window_stride)
    X_all, Y_all = _window_tensors(scaled, windows, length, cfg.covariate_period)

    params = {k: v.copy() for k, v in model.params.items()}
    trained = TrainedModel(params, cfg, model.n_vars)
    rng = np.random.default_rng(cfg.seed + 1)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    b1, b2 = _ADAM_BETAS
    step = 0
    trace = []
    n_windows = len(windows)
    for _ in range(cfg.epochs):
        order = rng.permutation(n_windows)
        losses = []
        for start in range(0, n_windows, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            X, Y = X_all[:, idx], Y_all[:, idx]
            masks = _dropout_masks(rng, cfg, X.shape[0], X.shape[1])
            loss, grads = loss_and_grad(trained, X, Y, masks)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at step {step}")
            _clip_by_global_norm(grads, cfg.grad_clip)
            step += 1
            lr_t = cfg.learning_rate * np.sqrt(1 - b2**step) / (1 - b1**step)
            for key, g in grads.items():
                m[key] = b1 * m[key] + (1 - b1) * g
                v[key] = b2 * v[key] + (1 - b2) * g * g
                params[key] -= lr_t * m[key] / (np.sqrt(v[key]) + _ADAM_EPS)
            losses.append(loss)
        trace.append(float(np.mean(losses)))
    trained.standardization = std_params
    trained.loss_trace = trace
    return trained


def _require_trained(model: TrainedModel):
    if not model.is_trained:
        raise UntrainedModel("the model has not been trained")


def one_step_predict(model: TrainedModel, series: MultivariateSeries):
    """Teacher-forced one-step predictive ``(mu, sigma)`` for every row, original scale.

    Row 0 is predicted from a zero (mean) input and a zero state.
    """
    _require_trained(model)
    cfg = model.config
    std = model.standardization
    z = std.apply(series.values)
    inputs = np.vstack([np.zeros((1, model.n_vars)), z[:-1]])
    cov = time_features(np.arange(series.r), cfg.covariate_period)
    X = np.concatenate([inputs, cov], axis=-1)[:, None, :]
    net = _LSTMStack(model.params, cfg.num_layers, cfg.hidden_size)
    mu, sigma, _ = net.forward(X)
    return std.invert(mu[:, 0]), sigma[:, 0] * std.stds


@dataclass(frozen=True)
class ForecastSamples:
    traces: np.ndarray  # (S, T, N), original scale

    @property
    def num_samples(self) -> int:
        return self.traces.shape[0]

    @property
    def horizon(self) -> int:
        return self.traces.shape[1]


def forecast(
    model: TrainedModel,
    context: MultivariateSeries,
    T: int,
    num_samples: int = 100,
    seed: int = 0,
    clamp: Mapping[int, np.ndarray] | None = None,
) -> ForecastSamples:
    """Sample ``num_samples`` traces of length ``T`` following ``context``.

    ``clamp`` maps column indices to length-``T`` arrays of known horizon
    values (original scale). Those columns are fed back with the given values
    instead of their samples; every other column is fed its own draw. Noise
    is drawn only for the free columns, in column order, so two calls with the
    same seed and the same clamped set share their random numbers whatever
    the clamped values are.
    """
    _require_trained(model)
    if num_samples < 1 or T < 1:
        raise InvalidConfig("num_samples and T must be positive")
    cfg = model.config
    std = model.standardization
    net = _LSTMStack(model.params, cfg.num_layers, cfg.hidden_size)
    N = model.n_vars
    H = cfg.hidden_size
    clamp = {
        int(k): (np.asarray(v, dtype=float) - std.means[k]) / std.stds[k]
        for k, v in (clamp or {}).items()
    }
    for k, v in clamp.items():
        if v.shape != (T,):
            raise InvalidConfig(f"clamped column {k} needs {T} values")

    c_len = context.r
    z_ctx = std.apply(context.values)
    hs = [np.zeros((1, H)) for _ in range(cfg.num_layers)]
    cs = [np.zeros((1, H)) for _ in range(cfg.num_layers)]

    def step(x, t):
        inp = np.concatenate([x, time_features(np.full(x.shape[0], t), cfg.covariate_period)], axis=-1)
        for layer in range(cfg.num_layers):
            hs[layer], cs[layer], _ = net.cell(layer, inp, hs[layer], cs[layer])
            inp = hs[layer]
        mu, sigma, _ = net.head(inp)
        return mu, sigma

    x = np.zeros((1, N))
    for t in range(c_len):
        step(x, t)
        x = z_ctx[t:t + 1]
    hs = [np.repeat(h, num_samples, axis=0) for h in hs]
    cs = [np.repeat(c, num_samples, axis=0) for c in cs]
    x = np.repeat(x, num_samples, axis=0)

    rng = np.random.default_rng(seed)
    free = [k for k in range(N) if k not in clamp]
    out = np.empty((num_samples, T, N))
    for k in range(T):
        mu, sigma = step(x, c_len + k)
        draw = mu
        draw[:, free] += sigma[:, free] * rng.standard_normal((num_samples, len(free)))
        for col, values in clamp.items():
            draw[:, col] = values[k]
        out[:, k] = draw
        x = draw
    return ForecastSamples(std.invert(out))


def predictive_mean(samples: ForecastSamples) -> np.ndarray:
    return samples.traces.mean(axis=0)


def forecast_error(model, realization: MultivariateSeries, t0: int, T: int,
                   num_samples: int = 100, seed: int = 0, clamp=None) -> np.ndarray:
    """Per-variable MAPE of the predictive mean over the horizon starting at 1-based ``t0``."""
    context, horizon = split_context_horizon(realization, t0, T)
    mean = predictive_mean(forecast(model, context, T, num_samples, seed, clamp))
    return np.array([mape(horizon.values[:, j], mean[:, j]) for j in range(realization.n_vars)])


def save_model(model: TrainedModel, path) -> None:
    _require_trained(model)
    meta = {
        "format": "knockoff_gc.forecaster",
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "n_vars": model.n_vars,
        "loss_trace": model.loss_trace,
    }
    arrays = {f"param/{k}": v for k, v in model.params.items()}
    arrays["standardization/means"] = model.standardization.means
    arrays["standardization/stds"] = model.standardization.stds
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            # fixed timestamp so identical models give identical bytes
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.ascontiguousarray(arrays[name]), allow_pickle=False)
    tmp = Path(f"{path}.tmp")
    tmp.write_bytes(buf.getvalue())
    os.replace(tmp, path)


def load_model(path) -> TrainedModel:
    with np.load(Path(path), allow_pickle=False) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise InvalidConfig(f"unsupported checkpoint version {meta.get('version')}")
        params = {k[len("param/"):]: data[k].copy() for k in data.files if k.startswith("param/")}
        std = StandardizationParams(data["standardization/means"], data["standardization/stds"])
    config = NetworkConfig.from_dict(meta["config"])
    return TrainedModel(params, config, meta["n_vars"], std, list(meta["loss_trace"]))

