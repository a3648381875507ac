"""
Shape functions and the empirical audit
=======================================

Overlays NAM and monotone-NAM shape functions of the juvenile count
features and audits the raw data for the dips that motivate the
constraints. Writes SVG charts to ``notebooks/out``.

Run with ``python notebooks/03_shapes_and_audit.py path/to/compas-scores-two-years.csv``.
"""

# %%
import sys
from pathlib import Path

import numpy as np

from mnam import data as D
from mnam import evaluation as E
from mnam import nam_model as nm
from mnam import svg
from mnam import trainer as T

path = sys.argv[1] if len(sys.argv) > 1 else "compas-scores-two-years.csv"
out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
data, spec = D.prepare("compas", D.load_raw("compas", path))

# %% [markdown]
# Audit: the share reoffending drops from 2 to 3 juvenile misdemeanors.

# %%
report = E.audit_monotonicity(data, ["juv_felony", "juv_misdemeanor"], pairs=[("juv_felony", "juv_misdemeanor")])
for name, audit in report.features.items():
    means = ", ".join(f"{pt.x}:{pt.mean:.3f}" for pt in audit.curve if pt.present)
    print(f"{name}: {means}  drops {audit.step_violations}")
print(report.summary()["pairwise"])

# %% [markdown]
# Shape functions over the observed range of each feature.

# %%
train, _ = D.split(data, 0.8, seed=0)
cfg = T.TrainConfig(seed=0)
nam = T.train_nam(train, spec, cfg)
mnam, _ = T.train_mnam(train, spec, cfg)
for name in ("juv_felony", "juv_misdemeanor"):
    i = data.names.index(name)
    grid = nm.default_grid(nam, i)
    series = [(label, grid, nm.shape_function(m, i, grid)[:, 1]) for label, m in (("NAM", nam), ("MNAM", mnam))]
    (out / f"shape_{name}.svg").write_text(svg.line_chart(series, name, "standardized value", "f(x)"))
    print(f"{name}: NAM min slope {np.diff(series[0][2]).min():+.4f}, MNAM min slope {np.diff(series[1][2]).min():+.4f}")
