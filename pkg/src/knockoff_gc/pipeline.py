"""End-to-end runs shared by the command line and the beta sweep."""

from __future__ import annotations

from .causal import CausalGraph, CssParams, causal_graph, make_intervention
from .config import PipelineConfig
from .forecaster import TrainedModel, build_model, train
from .synthetic import generate_climate, make_realizations
from .timeseries import MultivariateSeries, RealizationSet
from .var_gc import gc_matrix


def synthetic_data(cfg: PipelineConfig):
    return generate_climate(cfg.resolved_synthetic)


def realizations(cfg: PipelineConfig, series: MultivariateSeries) -> RealizationSet:
    rc = cfg.realizations
    return make_realizations(series, rc.r, rc.count, rc.stride)


def train_model(cfg: PipelineConfig, data: RealizationSet) -> TrainedModel:
    net = cfg.resolved_network
    return train(build_model(net, data.n_vars), data, net)


def css_params(cfg: PipelineConfig, model: TrainedModel) -> CssParams:
    return CssParams(T=model.config.prediction_length, num_samples=cfg.css.num_samples,
                     seed=cfg.seed, conditioning=cfg.css.conditioning)


def build_intervention(cfg: PipelineConfig, data: RealizationSet, kind: str | None = None):
    ic = cfg.intervention
    kind = ic.kind if kind is None else kind
    if kind == "knockoff":
        return make_intervention("knockoff", data, n_components=ic.mixture_components, seed=cfg.seed)
    if kind == "outdist":
        return make_intervention("outdist", low=ic.outdist_low, high=ic.outdist_high,
                                 relative=ic.outdist_relative)
    return make_intervention(kind)


def analyze_deepar(cfg: PipelineConfig, model: TrainedModel, data: RealizationSet,
                   kind: str | None = None) -> CausalGraph:
    intervention = build_intervention(cfg, data, kind)
    graph = causal_graph(model, data, intervention, cfg.hypothesis, css_params(cfg, model))
    graph.kind = {"knockoff": "DeepAR-Knockoffs", "mean": "DeepAR-Mean",
                  "outdist": "DeepAR-OutDist"}[intervention.kind]
    return graph


def analyze_var(cfg: PipelineConfig, data) -> CausalGraph:
    """VAR-GC on all rows (realizations are concatenated in order)."""
    values = data.stacked() if isinstance(data, RealizationSet) else data.values
    vc = cfg.var
    result = gc_matrix(values, p=vc.order, alpha=vc.alpha, p_max=vc.p_max, test=vc.test,
                       n_permutations=vc.n_permutations, seed=cfg.seed)
    names = data.names
    return CausalGraph(tuple(names), result.adjacency, result.gamma, result.p_values, "VAR-GC",
                       {"var": {"order": result.order, "alpha": vc.alpha, "test": vc.test}})
