# # Analysing your own CSV
#
# The same pipeline runs on any CSV with a header row of variable names, for
# example daily discharges of three gauges on a river network. Pass the path
# as the first argument. Without one, a stand-in with a one-day upstream link
# (K feeds D) is generated so the script still runs; it is not real data.
#
#     python3 notebooks/05_river_csv.py rivers.csv

import sys
import tempfile
from pathlib import Path

import numpy as np

from knockoff_gc import io, pipeline
from knockoff_gc.config import desk_config
from knockoff_gc.timeseries import MultivariateSeries

# ## Load

if len(sys.argv) > 1:
    path = Path(sys.argv[1])
else:
    rng = np.random.default_rng(0)
    n = 1095
    season = 1.0 + 0.5 * np.cos(2 * np.pi * np.arange(n) / 365)
    k = np.zeros(n)
    d = np.zeros(n)
    i = np.zeros(n)
    for t in range(1, n):
        k[t] = 0.8 * k[t - 1] + rng.gamma(2.0, 1.0) * season[t]
        i[t] = 0.8 * i[t - 1] + rng.gamma(2.0, 1.0) * season[t]
        d[t] = 0.5 * d[t - 1] + 0.6 * k[t - 1] + rng.gamma(2.0, 0.5)
    path = Path(tempfile.mkdtemp()) / "stand_in.csv"
    io.save_csv(MultivariateSeries(np.column_stack([k, d, i]) + 10.0, ["K", "D", "I"]), path)

series = io.load_csv(path)
series.r, series.names

# ## Realizations and training
#
# The columns are standardized inside the forecaster; no deseasonalization.

# three years of daily data give ten 100-day realizations, the minimum for the
# test; with so few rows every window start is used for training
cfg = desk_config(realizations={"r": 100, "count": series.r // 100},
                  network={"context_length": 40, "window_stride": 1, "epochs": 60})
data = pipeline.realizations(cfg, series)
model = pipeline.train_model(cfg, data)

# ## Graphs from both methods

knock = pipeline.analyze_deepar(cfg, model, data, "knockoff")
var = pipeline.analyze_var(cfg, data)
for graph in (knock, var):
    doc = io.GraphDocument.from_graph(graph, cfg.fingerprint())
    print(graph.kind, sorted(doc.edge_set()))

print(io.to_dot(io.GraphDocument.from_graph(knock, cfg.fingerprint())))
