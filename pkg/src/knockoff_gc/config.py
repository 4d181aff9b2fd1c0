"""Pipeline configuration: one nested JSON document, strict about unknown keys.

A single ``seed`` drives data generation, network initialization, knockoff
fitting and forecast sampling. Every field has a default; see
:func:`default_config_dict` for the complete document.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .causal import HypothesisConfig
from .errors import InvalidConfig
from .forecaster import NetworkConfig
from .synthetic import SyntheticConfig


def _strict(cls, data: Mapping | None, section: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise InvalidConfig(f"unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise InvalidConfig(f"bad values in [{section}]: {exc}") from exc


@dataclass(frozen=True)
class RealizationConfig:
    r: int = 200
    count: int = 14
    stride: int | None = None

    def __post_init__(self):
        if self.r < 2 or self.count < 1 or (self.stride is not None and self.stride < 1):
            raise InvalidConfig("realizations need r >= 2, count >= 1, stride >= 1")


@dataclass(frozen=True)
class CssConfig:
    num_samples: int = 100
    conditioning: str = "observed"

    def __post_init__(self):
        if self.num_samples < 1:
            raise InvalidConfig("num_samples must be positive")
        if self.conditioning not in ("observed", "sampled"):
            raise InvalidConfig("conditioning must be 'observed' or 'sampled'")


@dataclass(frozen=True)
class InterventionConfig:
    kind: str = "knockoff"
    mixture_components: int = 1
    outdist_low: float = 3.0
    outdist_high: float = 6.0
    outdist_relative: bool = True

    def __post_init__(self):
        if self.kind not in ("knockoff", "mean", "outdist"):
            raise InvalidConfig(f"unknown intervention kind {self.kind!r}")
        if self.mixture_components < 1:
            raise InvalidConfig("mixture_components must be positive")


@dataclass(frozen=True)
class VarConfig:
    alpha: float = 0.05
    order: int | None = None
    p_max: int = 10
    test: str = "f"
    n_permutations: int = 200

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise InvalidConfig("var alpha must lie in [0, 1)")
        if self.test not in ("f", "permutation"):
            raise InvalidConfig("var test must be 'f' or 'permutation'")


_SECTIONS = {
    "synthetic": SyntheticConfig,
    "network": NetworkConfig,
    "hypothesis": HypothesisConfig,
    "css": CssConfig,
    "intervention": InterventionConfig,
    "realizations": RealizationConfig,
    "var": VarConfig,
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    csv_path: str | None = None
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    hypothesis: HypothesisConfig = field(default_factory=HypothesisConfig)
    css: CssConfig = field(default_factory=CssConfig)
    intervention: InterventionConfig = field(default_factory=InterventionConfig)
    realizations: RealizationConfig = field(default_factory=RealizationConfig)
    var: VarConfig = field(default_factory=VarConfig)

    def __post_init__(self):
        if self.csv_path is not None and not str(self.csv_path):
            raise InvalidConfig("csv_path must be a nonempty path")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        data = dict(data)
        unknown = set(data) - {"seed", "csv_path"} - set(_SECTIONS)
        if unknown:
            raise InvalidConfig(f"unknown top-level config keys: {sorted(unknown)}")
        kwargs = {name: _strict(section, data.get(name), name) for name, section in _SECTIONS.items()}
        if "seed" in data:
            kwargs["seed"] = int(data["seed"])
        if "csv_path" in data:
            kwargs["csv_path"] = data["csv_path"]
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    def to_dict(self) -> dict:
        out = {"seed": self.seed, "csv_path": self.csv_path}
        for name in _SECTIONS:
            section = getattr(self, name)
            out[name] = section.to_dict() if hasattr(section, "to_dict") else asdict(section)
        return out

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def merged(self, overrides: Mapping[str, Any]) -> "PipelineConfig":
        """Apply a nested dict of overrides (same layout as the config file)."""
        base = self.to_dict()
        for key, value in overrides.items():
            if isinstance(value, Mapping) and isinstance(base.get(key), dict):
                base[key] = {**base[key], **value}
            else:
                base[key] = value
        return PipelineConfig.from_dict(base)

    def with_overrides(self, beta: float | None = None, seed: int | None = None) -> "PipelineConfig":
        cfg = self
        if beta is not None:
            cfg = replace(cfg, synthetic=replace(cfg.synthetic, beta=beta))
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        return cfg

    @property
    def resolved_network(self) -> NetworkConfig:
        return replace(self.network, seed=self.seed)

    @property
    def resolved_synthetic(self) -> SyntheticConfig:
        return replace(self.synthetic, seed=self.seed)


def desk_config(**overrides) -> PipelineConfig:
    """Reduced-scale settings used by the acceptance suite and the demos."""
    base = PipelineConfig(
        network=NetworkConfig(num_layers=2, hidden_size=40, epochs=50, context_length=50,
                              window_stride=4),
        synthetic=SyntheticConfig(beta=0.2),
    )
    return base.merged(overrides) if overrides else base


def default_config_dict() -> dict:
    return PipelineConfig().to_dict()
