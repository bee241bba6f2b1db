"""Clustering insurers after averaging five years of premiums per line.

A synthetic 52 x 15 panel (three coverage lines, five years each) is
written to a temp dir, then the cluster pipeline collapses each line to its
five-year mean before standardizing.  That is the same run the CLI does
with a ``groups`` entry in the config.
"""
import json
import tempfile
from pathlib import Path

import numpy as np

from marketdef.pipeline import RunConfig, run, write_run

rng = np.random.default_rng(11)
kinds = ("liability", "collision", "comprehensive")
cols = [f"{k}_{y}" for k in kinds for y in range(2015, 2020)]
# three premium regimes (per line), with a little drift across years
centers = np.array([[300.0, 420, 180], [520, 380, 260], [410, 640, 330]])
rows = []
for c, n in zip(centers, (20, 18, 14)):
    base = np.repeat(c, 5) * np.tile(np.linspace(1.0, 1.12, 5), 3)
    rows.append(rng.normal(base, 30, (n, 15)))
rows = np.vstack(rows)

work = Path(tempfile.mkdtemp(prefix="marketdef-demo-"))
lines = ["state," + ",".join(cols)]
lines += [f"S{i:02d}," + ",".join(f"{v:.2f}" for v in r) for i, r in enumerate(rows)]
(work / "premiums.csv").write_text("\n".join(lines) + "\n")

cfg = RunConfig.from_dict({
    "pipeline": "cluster", "input": "premiums.csv", "id_column": "state", "features": cols,
    "groups": {k: [c for c in cols if c.startswith(k)] for k in kinds},
    "k_max": 8, "B": 20, "restarts": 50, "gap_restarts": 5, "seed": 3,
}, config_dir=work)
report = run(cfg)
out = write_run(report, work / "out")

res = report.results
print("features after collapsing:", [f["name"] for f in res["standardization"]["features"]])
print("dendrogram candidates:", res["dendrogram"]["candidate_k"])
print("gap picks", res["k_selection"]["selected_k_gap"], "| elbow picks", res["k_selection"]["selected_k_elbow"])
a = res["final"]["assignment"]
print(f"k={a['k']} ({res['final']['k_source']}), sizes {a['sizes']}")
print("report written to", out)
print(json.dumps(report.warnings) if report.warnings else "no warnings")
