import itertools

import numpy as np
import pytest

from knockoff_gc.config import PipelineConfig
from knockoff_gc.errors import InvalidConfig, ShapeMismatch
from knockoff_gc.evaluation import (BETA_ONE_CAVEAT, ConfusionCounts, SweepReport, beta_sweep,
                                    confusion, fpr, fscore)
from knockoff_gc.synthetic import SyntheticConfig, climate_ground_truth

TRUTH = climate_ground_truth(SyntheticConfig())


class TestConfusion:
    def test_perfect(self):
        assert confusion(TRUTH.adjacency, TRUTH) == ConfusionCounts(5, 0, 7, 0)

    def test_empty(self):
        assert confusion(np.zeros((4, 4), bool), TRUTH) == ConfusionCounts(0, 0, 7, 5)

    def test_full(self):
        assert confusion(np.ones((4, 4), bool), TRUTH) == ConfusionCounts(5, 7, 0, 0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            confusion(np.zeros((3, 3), bool), TRUTH)

    @pytest.mark.parametrize("seed", range(10))
    def test_permutation_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        pred = rng.random((5, 5)) < 0.4
        true = rng.random((5, 5)) < 0.4
        perm = rng.permutation(5)
        assert confusion(pred, true) == confusion(pred[np.ix_(perm, perm)], true[np.ix_(perm, perm)])
        assert confusion(pred, true).total == 20


class TestScores:
    @pytest.mark.parametrize("counts,f", [((3, 0, 9, 0), 1.0), ((2, 1, 8, 1), 2 / 3)])
    def test_fscore(self, counts, f):
        assert abs(fscore(ConfusionCounts(*counts)) - f) <= 1e-12

    def test_fpr(self):
        assert abs(fpr(ConfusionCounts(2, 1, 9, 0)) - 0.1) <= 1e-12
        assert fpr(ConfusionCounts(12, 0, 0, 0)) == 0.0

    def test_exhaustive(self):
        checked = 0
        for tp, fp, tn in itertools.product(range(13), repeat=3):
            fn = 12 - tp - fp - tn
            if fn < 0:
                continue
            counts = ConfusionCounts(tp, fp, tn, fn)
            f_ref = tp / (tp + 0.5 * (fp + fn)) if tp + fp + fn else 0.0
            r_ref = fp / (fp + tn) if fp + tn else 0.0
            assert abs(fscore(counts) - f_ref) <= 1e-12
            assert abs(fpr(counts) - r_ref) <= 1e-12
            assert 0 <= fscore(counts) <= 1 and 0 <= fpr(counts) <= 1
            checked += 1
        assert checked == 455


class TestSweep:
    def test_var_gc_cardinality(self):
        report = beta_sweep([1.0], ["VAR-GC"], [1, 2, 3], PipelineConfig())
        assert len(report.rows) == 3
        agg = report.aggregate()
        assert len(agg) == 1 and agg[0]["n_seeds"] == 3
        assert report.notes == [BETA_ONE_CAVEAT]
        assert report.to_csv().splitlines()[0] == "beta,method,seed,f_score,fpr"
        assert len(report.to_long_csv().splitlines()) == 1 + 6

    def test_beta_one_misses_power_edge(self):
        from knockoff_gc import pipeline
        cfg = PipelineConfig(seed=2).with_overrides(beta=1.0)
        series, truth = pipeline.synthetic_data(cfg)
        graph = pipeline.analyze_var(cfg, pipeline.realizations(cfg, series))
        assert truth.adjacency[1, 3] and not graph.adjacency[1, 3]

    def test_deterministic(self):
        a = beta_sweep([0.4], ["VAR-GC"], [4], PipelineConfig())
        b = beta_sweep([0.4], ["VAR-GC"], [4], PipelineConfig())
        assert a.rows == b.rows and a.to_csv() == b.to_csv()

    def test_unknown_method(self):
        with pytest.raises(InvalidConfig):
            beta_sweep([0.2], ["PCMCI"], [0], PipelineConfig())

    def test_select(self):
        report = SweepReport()
        report.add(0.2, "VAR-GC", 0, ConfusionCounts(5, 0, 7, 0))
        report.add(0.4, "VAR-GC", 0, ConfusionCounts(0, 0, 7, 5))
        assert [r["f_score"] for r in report.select(beta=0.4)] == [0.0]


@pytest.mark.slow
def test_knockoff_pipeline_on_beta_one():
    from knockoff_gc.config import desk_config
    report = beta_sweep([1.0], ["DeepAR-Knockoffs"], [1], desk_config())
    assert report.rows[0]["f_score"] >= 0.7
