"""Additive models g(E[y|x]) = b + sum_i f_i(x_i) and the dense baseline.

The link is the logit for classification (predictions are sigmoid of the
raw score) and the identity for regression.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import feature_net as fn
from .schema import Dataset, ModelSpec

PROB_CLAMP = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NamModel:
    intercept: float
    params: np.ndarray  # (p, 7), one row per feature net
    spec: ModelSpec

    def __post_init__(self):
        params = _frozen(self.params)
        if params.shape != (self.spec.n_features, fn.N_PARAMS):
            raise ValueError(
                f"params shape {params.shape} does not match {self.spec.n_features} features"
            )
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "intercept", float(self.intercept))
        if not (np.isfinite(params).all() and np.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")

    @property
    def task(self) -> str:
        return self.spec.task

    @property
    def nets(self) -> list[fn.FeatureNetParams]:
        return [fn.FeatureNetParams.from_vector(row) for row in self.params]

    @property
    def n_params(self) -> int:
        return self.params.size + 1

    def replace(self, intercept=None, params=None, spec=None) -> NamModel:
        return NamModel(
            self.intercept if intercept is None else intercept,
            self.params if params is None else params,
            self.spec if spec is None else spec,
        )


@dataclass(frozen=True)
class FcnnModel:
    """Dense net: logistic hidden layer of width ``hidden`` then a linear output."""

    W: np.ndarray  # (hidden, p)
    b: np.ndarray  # (hidden,)
    v: np.ndarray  # (hidden,)
    c: float
    spec: ModelSpec

    def __post_init__(self):
        W, b, v = _frozen(self.W), _frozen(self.b), _frozen(self.v)
        h = W.shape[0]
        if W.ndim != 2 or W.shape[1] != self.spec.n_features or b.shape != (h,) or v.shape != (h,):
            raise ValueError("inconsistent FCNN parameter shapes")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "c", float(self.c))

    @property
    def task(self) -> str:
        return self.spec.task

    @property
    def hidden(self) -> int:
        return self.W.shape[0]

    @property
    def n_params(self) -> int:
        return self.W.size + self.b.size + self.v.size + 1

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.b, self.v, [self.c]])

    def from_flat(self, theta) -> FcnnModel:
        h, p = self.W.shape
        theta = np.asarray(theta, dtype=np.float64)
        k = h * p
        return FcnnModel(
            theta[:k].reshape(h, p), theta[k : k + h], theta[k + h : k + 2 * h], theta[-1], self.spec
        )


def init_nam(spec: ModelSpec, rng: np.random.Generator) -> NamModel:
    return NamModel(0.0, fn.init_params(rng, spec.n_features), spec)


def init_fcnn(spec: ModelSpec, rng: np.random.Generator, hidden: int | None = None) -> FcnnModel:
    p = spec.n_features
    h = 2 * p if hidden is None else hidden
    return FcnnModel(
        W=rng.uniform(-1.0, 1.0, size=(h, p)),
        b=np.zeros(h),
        v=rng.uniform(-1.0, 1.0, size=h),
        c=0.0,
        spec=spec,
    )


def _check_X(X, p: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    if X2.ndim != 2 or X2.shape[1] != p:
        raise ValueError(f"expected inputs with {p} features, got shape {X.shape}")
    if not np.isfinite(X2).all():
        raise ValueError("inputs must be finite")
    return X2, single


def _unwrap(out: np.ndarray, single: bool):
    return float(out[0]) if single else out


def _link_inverse(raw, task: str):
    return expit(raw) if task == "classification" else raw


# --- NAM -------------------------------------------------------------------


def predict_raw(m: NamModel, X):
    """b + sum_i f_i(x_i) for one row (returns a float) or a matrix of rows."""
    X2, single = _check_X(X, m.spec.n_features)
    out = m.intercept + fn.forward_batch(m.params, X2).sum(axis=1)
    return _unwrap(out, single)


def predict(m: NamModel, X):
    """Probability for classification, raw score for regression."""
    return _link_inverse(predict_raw(m, X), m.task)


def contributions(m: NamModel, X) -> np.ndarray:
    """Per-feature terms f_i(x_i), shape (n, p); rows sum to predict_raw - intercept."""
    X2, _ = _check_X(X, m.spec.n_features)
    return fn.forward_batch(m.params, X2)


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, Dataset):
        return data.X, data.y
    X, y = data
    return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64)


def data_loss(raw: np.ndarray, y: np.ndarray, task: str) -> float:
    """Mean squared error or mean negative log-likelihood of raw scores."""
    raw = np.asarray(raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("loss of an empty dataset is undefined")
    if task == "regression":
        return float(np.mean((y - raw) ** 2))
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("classification labels must be 0 or 1")
    p = np.clip(expit(raw), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def data_loss_grad(raw: np.ndarray, y: np.ndarray, task: str) -> np.ndarray:
    """d(data_loss)/d(raw), one entry per row."""
    n = raw.shape[0]
    if task == "regression":
        return -2.0 * (y - raw) / n
    p = expit(raw)
    g = (p - y) / n
    # the clamp is flat outside [PROB_CLAMP, 1 - PROB_CLAMP]
    g[(p < PROB_CLAMP) | (p > 1.0 - PROB_CLAMP)] = 0.0
    return g


def loss(m: NamModel, data) -> float:
    X, y = _as_xy(data)
    return data_loss(predict_raw(m, np.atleast_2d(X)), y, m.task)


def loss_gradient(m: NamModel, data) -> tuple[float, np.ndarray]:
    """Gradient of ``loss`` as (d/d intercept, d/d params with shape (p, 7))."""
    X, y = _as_xy(data)
    X2, _ = _check_X(X, m.spec.n_features)
    raw = m.intercept + fn.forward_batch(m.params, X2).sum(axis=1)
    g = data_loss_grad(raw, y, m.task)
    return float(g.sum()), fn.output_grad_batch(m.params, X2, g)


def shape_function(m: NamModel, i: int, grid) -> np.ndarray:
    """Centered shape function of feature ``i`` as an (n, 2) array of (x, f_i(x) - mean)."""
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise ValueError("shape_function needs a nonempty grid")
    meta = m.spec.features[i]
    if meta.max > meta.min and (grid.min() < meta.min or grid.max() > meta.max):
        warnings.warn(
            f"grid for {meta.name!r} extrapolates beyond the observed range "
            f"[{meta.min:g}, {meta.max:g}]",
            stacklevel=2,
        )
    values = fn.forward(m.params[i], grid)
    return np.column_stack([grid, values - values.mean()])


def default_grid(m: NamModel, i: int, n_points: int = 101) -> np.ndarray:
    meta = m.spec.features[i]
    if meta.kind == "binary":
        return np.array([meta.min, meta.max]) if meta.max > meta.min else np.array([meta.min])
    return np.linspace(meta.min, meta.max, n_points)


# --- FCNN ------------------------------------------------------------------


def fcnn_forward(m: FcnnModel, X):
    """Raw score c + v . sigmoid(W x + b)."""
    X2, single = _check_X(X, m.spec.n_features)
    H = expit(X2 @ m.W.T + m.b)
    return _unwrap(H @ m.v + m.c, single)


def fcnn_predict(m: FcnnModel, X):
    return _link_inverse(fcnn_forward(m, X), m.task)


def fcnn_loss(m: FcnnModel, data) -> float:
    X, y = _as_xy(data)
    return data_loss(fcnn_forward(m, np.atleast_2d(X)), y, m.task)


def fcnn_loss_gradient(m: FcnnModel, data) -> np.ndarray:
    """Gradient of ``fcnn_loss`` in the order of ``FcnnModel.flat``."""
    X, y = _as_xy(data)
    X2, _ = _check_X(X, m.spec.n_features)
    H = expit(X2 @ m.W.T + m.b)
    g = data_loss_grad(H @ m.v + m.c, y, m.task)
    dv = H.T @ g
    dpre = (g[:, None] * m.v) * H * (1.0 - H)
    dW = dpre.T @ X2
    db = dpre.sum(axis=0)
    return np.concatenate([dW.ravel(), db, dv, [g.sum()]])


# --- serialization ---------------------------------------------------------


def to_dict(m: NamModel | FcnnModel) -> dict:
    if isinstance(m, NamModel):
        return {
            "kind": "nam",
            "spec": m.spec.to_dict(),
            "intercept": m.intercept,
            "param_names": list(fn.PARAM_NAMES),
            "params": {f.name: row.tolist() for f, row in zip(m.spec.features, m.params)},
        }
    return {
        "kind": "fcnn",
        "spec": m.spec.to_dict(),
        "W": m.W.tolist(),
        "b": m.b.tolist(),
        "v": m.v.tolist(),
        "c": m.c,
    }


def from_dict(d: dict) -> NamModel | FcnnModel:
    spec = ModelSpec.from_dict(d["spec"])
    if d["kind"] == "nam":
        params = np.array([d["params"][name] for name in spec.names], dtype=np.float64)
        return NamModel(d["intercept"], params.reshape(spec.n_features, fn.N_PARAMS), spec)
    if d["kind"] == "fcnn":
        return FcnnModel(np.array(d["W"]), np.array(d["b"]), np.array(d["v"]), d["c"], spec)
    raise ValueError(f"unknown model kind {d['kind']!r}")


def save_model(m: NamModel | FcnnModel, path) -> None:
    # json writes floats with repr, which round-trips exactly
    Path(path).write_text(json.dumps(to_dict(m), indent=2) + "\n")


def load_model(path) -> NamModel | FcnnModel:
    return from_dict(json.loads(Path(path).read_text()))
