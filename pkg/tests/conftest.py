import os
from pathlib import Path

import numpy as np
import pytest

from mnam.schema import Dataset, FeatureMeta, ModelSpec

COMPAS_CANDIDATES = [
    Path(os.environ.get("MNAM_DATA_DIR", "/nonexistent")) / "compas-scores-two-years.csv",
    Path("/root/data/compas-scores-two-years.csv"),
]


def data_file(name: str) -> Path | None:
    """Locate a public benchmark file in $MNAM_DATA_DIR (COMPAS also has a local fallback)."""
    base = os.environ.get("MNAM_DATA_DIR")
    if base and (Path(base) / name).is_file():
        return Path(base) / name
    if name == "compas-scores-two-years.csv":
        for p in COMPAS_CANDIDATES:
            if p.is_file():
                return p
    return None


def make_data(X, y, task="regression", monotone=(), pairs=(), names=None):
    """Dataset plus a matching spec; observed ranges are taken from X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"x{j}" for j in range(X.shape[1])]
    features = [FeatureMeta(n, min=float(X[:, j].min()), max=float(X[:, j].max())) for j, n in enumerate(names)]
    data = Dataset(X, y, features, task)
    spec = ModelSpec(tuple(features), task, tuple((i, "increasing") for i in monotone), tuple(pairs))
    return data, spec


def spec_for(p, task="regression", monotone=(), pairs=(), lo=-3.0, hi=3.0):
    features = tuple(FeatureMeta(f"x{j}", min=lo, max=hi) for j in range(p))
    return ModelSpec(features, task, tuple((i, "increasing") for i in monotone), tuple(pairs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance criteria append (criterion, status, detail) here; the lines are
# repeated in the terminal summary so they survive output capture.
ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{status:<4}  {criterion}: {detail}")
