"""File formats: series CSV, graph documents (JSON/DOT), run manifests.

CSV dialect: UTF-8, comma separator, dot decimal, one header row of unique
variable names, one numeric row per time step, no missing cells. Values are
written with 17 significant digits so ``load_csv(save_csv(x))`` is exact.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .causal import CausalGraph
from .errors import DuplicateHeader, IoError, MissingValue, ParseError
from .timeseries import MultivariateSeries

MANIFEST_SCHEMA_VERSION = 1
_MISSING = {"", "nan", "na", "n/a", "null", "none", "-", "?"}


def atomic_write(path, data: str | bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_csv(path) -> MultivariateSeries:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(f"{path}:1: missing header row")
    header = [h.strip() for h in lines[0].split(",")]
    seen = set()
    for col, name in enumerate(header, start=1):
        if not name:
            raise ParseError(f"{path}:1:{col}: empty variable name")
        if name in seen:
            raise DuplicateHeader(f"{path}:1:{col}: duplicate variable name {name!r}")
        seen.add(name)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} cells, found {len(cells)}")
        row = []
        for col, cell in enumerate(cells, start=1):
            cell = cell.strip()
            if cell.lower() in _MISSING:
                raise MissingValue(f"{path}:{lineno}:{col}: missing value {cell!r}")
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{path}:{lineno}:{col}: not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise MissingValue(f"{path}:{lineno}:{col}: non-finite value {cell!r}")
            row.append(value)
        rows.append(row)
    if not rows:
        raise ParseError(f"{path}: file has a header but no data rows")
    return MultivariateSeries(np.array(rows), header)


def format_csv(series: MultivariateSeries) -> str:
    lines = [",".join(series.names)]
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in series.values)
    return "\n".join(lines) + "\n"


def save_csv(series: MultivariateSeries, path) -> None:
    atomic_write(path, format_csv(series))


@dataclass
class GraphDocument:
    names: list[str]
    edges: list[dict]
    method: str
    config_fingerprint: str
    tool_version: str = __version__
    lineage: dict = field(default_factory=dict)

    @classmethod
    def from_graph(cls, graph: CausalGraph, config_fingerprint: str, lineage=None) -> "GraphDocument":
        edges = [
            {"from": graph.names[i], "to": graph.names[j],
             "mean_css": float(graph.mean_css[i, j]), "p_value": float(graph.p_value[i, j])}
            for i, j in graph.edges()
        ]
        return cls(list(graph.names), edges, graph.kind, config_fingerprint, __version__,
                   dict(lineage or {}))

    def to_dict(self) -> dict:
        return {"names": self.names, "edges": self.edges, "method": self.method,
                "config_fingerprint": self.config_fingerprint,
                "tool_version": self.tool_version, "lineage": self.lineage}

    @classmethod
    def from_dict(cls, data: dict) -> "GraphDocument":
        expected = {"names", "edges", "method", "config_fingerprint", "tool_version", "lineage"}
        if set(data) != expected:
            raise ParseError(f"graph document keys {sorted(data)} differ from {sorted(expected)}")
        known = set(data["names"])
        for edge in data["edges"]:
            if set(edge) != {"from", "to", "mean_css", "p_value"}:
                raise ParseError(f"malformed edge {edge}")
            if edge["from"] not in known or edge["to"] not in known:
                raise ParseError(f"edge {edge} references an unknown variable")
        return cls(**data)

    def edge_set(self) -> set[tuple[str, str]]:
        return {(e["from"], e["to"]) for e in self.edges}


def to_json(doc: GraphDocument) -> str:
    return json.dumps(doc.to_dict(), indent=2, sort_keys=True) + "\n"


def to_dot(doc: GraphDocument) -> str:
    lines = [f'digraph "{doc.method}" {{']
    lines.extend(f'  "{name}";' for name in doc.names)
    for e in doc.edges:
        lines.append(f'  "{e["from"]}" -> "{e["to"]}" '
                     f'[label="CSS={e["mean_css"]:.4f}, p={e["p_value"]:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_graph(graph: CausalGraph | GraphDocument, path, format: str = "json",
               config_fingerprint: str = "", lineage=None) -> GraphDocument:
    doc = graph if isinstance(graph, GraphDocument) else \
        GraphDocument.from_graph(graph, config_fingerprint, lineage)
    if format == "json":
        atomic_write(path, to_json(doc))
    elif format == "dot":
        atomic_write(path, to_dot(doc))
    else:
        raise ValueError(f"unknown graph format {format!r}")
    return doc


def load_graph(path) -> GraphDocument:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return GraphDocument.from_dict(data)


def write_json(path, payload) -> None:
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
