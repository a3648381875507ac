"""
COMPAS: FCNN vs NAM vs monotone NAM
===================================

Loads the two-year recidivism file, trains the three models on an 80/20
split and compares test error, AUC and certification. The NAM is free to
let a juvenile misdemeanor count matter more than a felony count; the
monotone NAM is not.

Run with ``python notebooks/02_compas_walkthrough.py path/to/compas-scores-two-years.csv``.
"""

# %%
import sys

from mnam import data as D
from mnam import evaluation as E
from mnam import monotonicity as mono
from mnam import nam_model as nm
from mnam import trainer as T

path = sys.argv[1] if len(sys.argv) > 1 else "compas-scores-two-years.csv"
data, spec = D.prepare("compas", D.load_raw("compas", path))
train, test = D.split(data, 0.8, seed=0)
print(f"{data.X.shape[0]} rows, features {data.names}")
print(f"constraints: {spec.monotone_features}, pairs {spec.pairwise_constraints}")

# %%
cfg = T.TrainConfig(seed=0)
fcnn = T.train_fcnn(train, spec, cfg)
nam = T.train_nam(train, spec, cfg)
mnam, log = T.train_mnam(train, spec, cfg)

# %% [markdown]
# Test metrics. Parameter counts show the additive models are far smaller.

# %%
for name, model, predict in (("FCNN", fcnn, nm.fcnn_predict), ("NAM", nam, nm.predict), ("MNAM", mnam, nm.predict)):
    print(E.metrics(predict(model, test.X), test.y).to_table(f"{name} ({model.n_params} params): "))
    print()

# %% [markdown]
# Certification on a dense grid plus the training values.

# %%
print("NAM\n" + mono.certify(nam, data=train).to_table())
print("MNAM\n" + mono.certify(mnam, data=train).to_table())
print("escalation log\n" + log.to_csv())
