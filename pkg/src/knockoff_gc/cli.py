"""Command line entry point: ``knockoff-gc <subcommand>``.

Every subcommand writes its outputs plus a run manifest holding the fully
resolved configuration, the non-config arguments, input/output hashes and
timings. ``knockoff-gc replay MANIFEST`` re-executes a run from its manifest
alone and, with ``--verify``, checks the new outputs hash-identical.

Errors exit with status 2 and print ``{"error": <class>, "message": ...}``
on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Callable

from . import __version__, io, pipeline
from .config import PipelineConfig, desk_config
from .errors import InvalidConfig, KnockoffGCError
from .evaluation import METHODS, beta_sweep
from .forecaster import load_model, save_model
from .knockoffs import KnockoffSampler, exchangeability_diagnostic, fit_mixture, knockoff_series
from .synthetic import make_realizations
from .timeseries import MultivariateSeries, RealizationSet

SEED_ENV = "KNOCKOFF_GC_SEED"

# argument names holding output paths, per command (used by replay --out-dir)
OUTPUT_ARGS = {
    "generate": ("out", "truth"),
    "train": ("out",),
    "analyze": ("out", "dot", "model_out"),
    "gc": ("out", "dot"),
    "evaluate": ("out", "long", "summary"),
    "knockoffs": ("out", "diagnostics"),
}
INPUT_ARGS = ("input", "model")


def _realizations(cfg: PipelineConfig, series: MultivariateSeries) -> RealizationSet:
    rc = cfg.realizations
    if series.r < rc.r:
        raise InvalidConfig(f"series has {series.r} rows, realizations need {rc.r}")
    count = rc.count
    stride = rc.stride or rc.r
    count = min(count, (series.r - rc.r) // stride + 1)
    return make_realizations(series, rc.r, count, stride)


def cmd_generate(cfg: PipelineConfig, args: dict) -> None:
    series, truth = pipeline.synthetic_data(cfg)
    io.save_csv(series, args["out"])
    if args.get("truth"):
        edges = [{"from": series.names[i], "to": series.names[j]} for i, j in sorted(truth.edges())]
        io.write_json(args["truth"], {"names": list(series.names), "edges": edges,
                                      "self_links": [series.names[k] for k in truth.self_links]})


def cmd_train(cfg: PipelineConfig, args: dict) -> None:
    series = io.load_csv(args["input"])
    model = pipeline.train_model(cfg, _realizations(cfg, series))
    save_model(model, args["out"])


def _lineage(args: dict) -> dict:
    out = {"data_sha256": io.sha256_file(args["input"])}
    if args.get("model"):
        out["model_sha256"] = io.sha256_file(args["model"])
    return out


def cmd_analyze(cfg: PipelineConfig, args: dict) -> None:
    series = io.load_csv(args["input"])
    data = _realizations(cfg, series)
    if args.get("model"):
        model = load_model(args["model"])
    else:
        model = pipeline.train_model(cfg, data)
        if args.get("model_out"):
            save_model(model, args["model_out"])
    graph = pipeline.analyze_deepar(cfg, model, data)
    lineage = _lineage(args)
    if "model_sha256" not in lineage and args.get("model_out"):
        lineage["model_sha256"] = io.sha256_file(args["model_out"])
    doc = io.save_graph(graph, args["out"], "json", cfg.fingerprint(), lineage)
    if args.get("dot"):
        io.save_graph(doc, args["dot"], "dot")


def cmd_gc(cfg: PipelineConfig, args: dict) -> None:
    series = io.load_csv(args["input"])
    graph = pipeline.analyze_var(cfg, series)
    doc = io.save_graph(graph, args["out"], "json", cfg.fingerprint(), _lineage(args))
    if args.get("dot"):
        io.save_graph(doc, args["dot"], "dot")


def cmd_evaluate(cfg: PipelineConfig, args: dict) -> None:
    report = beta_sweep(args["betas"], args["methods"], args["seeds"], cfg)
    io.atomic_write(args["out"], report.to_csv())
    if args.get("long"):
        io.atomic_write(args["long"], report.to_long_csv())
    if args.get("summary"):
        io.write_json(args["summary"], {"aggregate": report.aggregate(), "notes": report.notes})


def cmd_knockoffs(cfg: PipelineConfig, args: dict) -> None:
    series = io.load_csv(args["input"])
    sampler = fit_mixture(series.values, cfg.intervention.mixture_components, seed=cfg.seed)
    ks = knockoff_series(series, sampler, cfg.seed)
    io.save_csv(ks.knockoffs, args["out"])
    if args.get("diagnostics"):
        single = sampler.components[0] if len(sampler.components) == 1 else None
        diag = exchangeability_diagnostic(ks, single if isinstance(single, KnockoffSampler) else None)
        io.write_json(args["diagnostics"], {
            "max_block_deviation": diag["max_block_deviation"],
            "per_variable_correlation": dict(zip(series.names, diag["per_variable_correlation"].tolist())),
            "s_diag": [c.s_diag.tolist() for c in sampler.components],
            "mixture_weights": sampler.weights.tolist(),
        })


COMMANDS: dict[str, Callable[[PipelineConfig, dict], None]] = {
    "generate": cmd_generate,
    "train": cmd_train,
    "analyze": cmd_analyze,
    "gc": cmd_gc,
    "evaluate": cmd_evaluate,
    "knockoffs": cmd_knockoffs,
}


def _parse_list(text: str, cast):
    return [cast(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knockoff-gc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        p.add_argument("--config", help="JSON pipeline config; flags override its values")
        p.add_argument("--preset", choices=("full", "desk"), default="full",
                       help="defaults to start from before the config file is applied")
        p.add_argument("--seed", type=int)
        p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        if needs_input:
            p.add_argument("--in", dest="input", required=True, help="input CSV")

    def network_flags(p):
        p.add_argument("--epochs", type=int)
        p.add_argument("--layers", type=int)
        p.add_argument("--hidden", type=int)

    p = sub.add_parser("generate", help="simulate the synthetic climate model to CSV")
    common(p, needs_input=False)
    p.add_argument("--beta", type=float)
    p.add_argument("--length", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="write the ground-truth edge list as JSON")

    p = sub.add_parser("train", help="train the forecaster on a CSV's realizations")
    common(p)
    network_flags(p)
    p.add_argument("--out", required=True, help="model checkpoint (.npz)")

    p = sub.add_parser("analyze", help="extract a causal graph with counterfactual forecasts")
    common(p)
    network_flags(p)
    p.add_argument("--model", help="trained checkpoint; trains one when omitted")
    p.add_argument("--model-out", dest="model_out", help="save the model trained inline")
    p.add_argument("--intervention", choices=("knockoff", "mean", "outdist"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", required=True, help="graph JSON")
    p.add_argument("--dot", help="also write a DOT rendering")

    p = sub.add_parser("gc", help="linear VAR Granger causality graph")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--dot")

    p = sub.add_parser("evaluate", help="beta sweep against the synthetic ground truth")
    common(p, needs_input=False)
    network_flags(p)
    p.add_argument("--betas", default="0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", required=True, help="one row per (beta, method, seed)")
    p.add_argument("--long", help="long-format plot data")
    p.add_argument("--summary", help="aggregate JSON with caveats")

    p = sub.add_parser("knockoffs", help="export knockoff copies and exchangeability diagnostics")
    common(p)
    p.add_argument("--components", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics")

    p = sub.add_parser("replay", help="re-execute a run from its manifest")
    p.add_argument("manifest_path")
    p.add_argument("--out-dir", help="write outputs here instead of their recorded paths")
    p.add_argument("--verify", action="store_true", help="fail unless output hashes match")
    return parser


def resolve_config(ns: argparse.Namespace) -> PipelineConfig:
    cfg = desk_config() if ns.preset == "desk" else PipelineConfig()
    if ns.config:
        file_data = json.loads(Path(ns.config).read_text(encoding="utf-8")) \
            if Path(ns.config).exists() else None
        if file_data is None:
            raise InvalidConfig(f"config file {ns.config} does not exist")
        cfg = cfg.merged(file_data)
    overrides: dict = {}
    seed = ns.seed
    if seed is None and os.environ.get(SEED_ENV):
        seed = int(os.environ[SEED_ENV])
    if seed is not None:
        overrides["seed"] = seed
    net = {k: v for k, v in (("epochs", getattr(ns, "epochs", None)),
                             ("num_layers", getattr(ns, "layers", None)),
                             ("hidden_size", getattr(ns, "hidden", None))) if v is not None}
    if net:
        overrides["network"] = net
    syn = {k: v for k, v in (("beta", getattr(ns, "beta", None)),
                             ("length", getattr(ns, "length", None))) if v is not None}
    if syn:
        overrides["synthetic"] = syn
    if getattr(ns, "intervention", None):
        overrides["intervention"] = {"kind": ns.intervention}
    if getattr(ns, "components", None):
        overrides.setdefault("intervention", {})["mixture_components"] = ns.components
    alpha = getattr(ns, "alpha", None)
    if alpha is not None:
        overrides["var" if ns.command == "gc" else "hypothesis"] = {"alpha": alpha}
    if getattr(ns, "order", None) is not None:
        overrides.setdefault("var", {})["order"] = ns.order
    return cfg.merged(overrides) if overrides else cfg


def command_args(ns: argparse.Namespace) -> dict:
    args = {}
    for name in set(OUTPUT_ARGS[ns.command]) | set(INPUT_ARGS):
        value = getattr(ns, name, None)
        args[name] = str(Path(value).resolve()) if value else None
    if ns.command == "evaluate":
        args["betas"] = _parse_list(ns.betas, float)
        args["methods"] = _parse_list(ns.methods, str)
        args["seeds"] = _parse_list(ns.seeds, int)
    return args


def execute(command: str, cfg: PipelineConfig, args: dict, manifest_path=None) -> dict:
    """Run one subcommand and write its manifest; returns the manifest."""
    started = time.time()
    t0 = time.perf_counter()
    inputs = {args[k]: io.sha256_file(args[k]) for k in INPUT_ARGS if args.get(k)}
    COMMANDS[command](cfg, args)
    elapsed = time.perf_counter() - t0
    outputs = {args[k]: io.sha256_file(args[k]) for k in OUTPUT_ARGS[command] if args.get(k)}
    manifest = {
        "schema_version": io.MANIFEST_SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "args": args,
        "config": cfg.to_dict(),
        "config_fingerprint": cfg.fingerprint(),
        "seed": cfg.seed,
        "inputs": inputs,
        "outputs": outputs,
        "timings": {"started_unix": started, "seconds": elapsed},
    }
    manifest_path = manifest_path or f"{args['out']}.manifest.json"
    io.write_json(manifest_path, manifest)
    return manifest


def replay(manifest_path, out_dir=None, verify=False) -> dict:
    recorded = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    if recorded.get("schema_version") != io.MANIFEST_SCHEMA_VERSION:
        raise InvalidConfig(f"unsupported manifest schema {recorded.get('schema_version')}")
    command = recorded["command"]
    args = dict(recorded["args"])
    if out_dir is not None:
        for key in OUTPUT_ARGS[command]:
            if args.get(key):
                args[key] = str(Path(out_dir).resolve() / Path(args[key]).name)
    cfg = PipelineConfig.from_dict(recorded["config"])
    target = Path(out_dir) / Path(manifest_path).name if out_dir else manifest_path
    manifest = execute(command, cfg, args, target)
    if verify:
        old = [recorded["outputs"][recorded["args"][k]] for k in OUTPUT_ARGS[command]
               if recorded["args"].get(k)]
        new = [manifest["outputs"][args[k]] for k in OUTPUT_ARGS[command] if args.get(k)]
        if old != new:
            raise ReplayMismatch(f"outputs of {command} differ from the manifest")
    return manifest


class ReplayMismatch(KnockoffGCError):
    code = "replay_mismatch"


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "replay":
            manifest = replay(ns.manifest_path, ns.out_dir, ns.verify)
        else:
            cfg = resolve_config(ns)
            manifest = execute(ns.command, cfg, command_args(ns), ns.manifest)
    except KnockoffGCError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "io_error", "message": str(exc)}), file=sys.stderr)
        return 2
    print(json.dumps({"command": manifest["command"], "outputs": manifest["outputs"]}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
