import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from knockoff_gc.causal import CausalGraph
from knockoff_gc.config import PipelineConfig, default_config_dict, desk_config
from knockoff_gc.errors import DuplicateHeader, InvalidConfig, IoError, MissingValue, ParseError
from knockoff_gc.io import GraphDocument, load_csv, load_graph, save_csv, save_graph, to_dot
from knockoff_gc.timeseries import MultivariateSeries

RIVERS = ("K", "D", "I")


def river_graph(edges):
    adj = np.zeros((3, 3), bool)
    css = np.zeros((3, 3))
    p = np.ones((3, 3))
    for i, j in edges:
        adj[i, j] = True
        css[i, j] = 0.123456
        p[i, j] = 0.001234
    return CausalGraph(RIVERS, adj, css, p, "DeepAR-Knockoffs")


class TestCsv:
    def test_three_years_daily(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.gamma(2.0, 50.0, size=(1095, 3))
        path = tmp_path / "rivers.csv"
        save_csv(MultivariateSeries(values, RIVERS), path)
        series = load_csv(path)
        assert (series.r, series.n_vars) == (1095, 3)
        assert series.names == RIVERS

    def test_header_only(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n")
        with pytest.raises(ParseError):
            load_csv(path)

    @pytest.mark.parametrize("cell", ["NaN", "", "inf"])
    def test_missing_value_location(self, tmp_path, cell):
        path = tmp_path / "m.csv"
        path.write_text(f"a,b\n1,2\n3,{cell}\n")
        with pytest.raises(MissingValue, match=r":3:2"):
            load_csv(path)

    def test_duplicate_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,a\n1,2\n")
        with pytest.raises(DuplicateHeader):
            load_csv(path)

    def test_bad_number(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("a,b\n1,2\n3,x4\n")
        with pytest.raises(ParseError, match=r":3:2"):
            load_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("a,b\n1,2,3\n")
        with pytest.raises(ParseError, match=r":2"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_csv(tmp_path / "nope.csv")

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (7, 2), elements=st.floats(allow_nan=False, allow_infinity=False)))
    def test_round_trip_exact(self, values):
        import tempfile, pathlib
        with tempfile.TemporaryDirectory() as d:
            path = pathlib.Path(d) / "x.csv"
            save_csv(MultivariateSeries(values), path)
            assert np.array_equal(load_csv(path).values, values)


class TestGraph:
    def test_empty_graph(self, tmp_path):
        g = river_graph([])
        save_graph(g, tmp_path / "g.json", "json", "abc")
        data = json.loads((tmp_path / "g.json").read_text())
        assert data["edges"] == []
        assert set(data) == {"names", "edges", "method", "config_fingerprint", "tool_version", "lineage"}
        save_graph(g, tmp_path / "g.dot", "dot", "abc")
        dot = (tmp_path / "g.dot").read_text()
        assert "->" not in dot and '"K";' in dot

    def test_contemporaneous_link(self, tmp_path):
        doc = save_graph(river_graph([(0, 1)]), tmp_path / "g.json", "json", "abc")
        assert doc.edge_set() == {("K", "D")}
        assert to_dot(doc).count("->") == 1
        assert '"K" -> "D" [label="CSS=0.1235, p=0.0012"];' in to_dot(doc)

    def test_round_trip(self, tmp_path):
        doc = save_graph(river_graph([(0, 1), (2, 0)]), tmp_path / "g.json", "json", "f" * 64,
                         {"data_sha256": "0" * 64})
        assert load_graph(tmp_path / "g.json") == doc

    def test_unknown_names_rejected(self):
        doc = GraphDocument.from_graph(river_graph([(0, 1)]), "x").to_dict()
        doc["edges"][0]["to"] = "Z"
        with pytest.raises(ParseError):
            GraphDocument.from_dict(doc)

    def test_bad_format(self, tmp_path):
        with pytest.raises(ValueError):
            save_graph(river_graph([]), tmp_path / "g.png", "png")

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(IoError):
            save_graph(river_graph([]), blocker / "g.json")


class TestConfig:
    def test_defaults_round_trip(self):
        cfg = PipelineConfig.from_dict(default_config_dict())
        assert cfg == PipelineConfig()
        assert cfg.network.num_layers == 4 and cfg.network.hidden_size == 40
        assert cfg.network.epochs == 150 and cfg.network.prediction_length == 14

    def test_fingerprint_reproducible(self):
        assert PipelineConfig(seed=3).fingerprint() == PipelineConfig(seed=3).fingerprint()
        assert PipelineConfig(seed=3).fingerprint() != PipelineConfig(seed=4).fingerprint()

    @pytest.mark.parametrize("doc", [{"sed": 1}, {"network": {"hiden_size": 3}},
                                     {"var": {"test": "lrt"}}, {"csv_path": ""}])
    def test_strict(self, doc):
        with pytest.raises(InvalidConfig):
            PipelineConfig.from_dict(doc)

    def test_load_errors(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{bad")
        with pytest.raises(InvalidConfig, match=":1:2"):
            PipelineConfig.load(path)

    def test_seed_propagates(self):
        cfg = desk_config().with_overrides(seed=9)
        assert cfg.resolved_network.seed == 9 and cfg.resolved_synthetic.seed == 9

    def test_merged(self):
        cfg = desk_config(network={"epochs": 3})
        assert cfg.network.epochs == 3 and cfg.network.num_layers == 2
