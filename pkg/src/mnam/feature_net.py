"""One-hidden-layer scalar networks with two logistic units.

Every shape function of the additive model is one of these nets. A net is
stored as a flat 7-vector in the order

    [w1_1, w1_2, b1_1, b1_2, w2_1, w2_2, b2]

so that a whole additive model is simply a ``(p, 7)`` array. The batched
helpers at the bottom of this module work on that array directly; the
single-net functions above them are thin wrappers used for tests,
inspection and export.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

N_PARAMS = 7
PARAM_NAMES = ("w1_1", "w1_2", "b1_1", "b1_2", "w2_1", "w2_2", "b2")

# column slices into a (..., 7) parameter array
W1 = slice(0, 2)
B1 = slice(2, 4)
W2 = slice(4, 6)
B2 = 6


@dataclass(frozen=True)
class FeatureNetParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        for name in ("w1", "b1", "w2"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if arr.shape != (2,):
                raise ValueError(f"{name} must have exactly 2 entries, got {arr.shape}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b2", float(self.b2))
        if not np.all(np.isfinite(self.as_vector())):
            raise ValueError("feature net parameters must be finite")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.w1, self.b1, self.w2, [self.b2]])

    @classmethod
    def from_vector(cls, vec) -> FeatureNetParams:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (N_PARAMS,):
            raise ValueError(f"expected a {N_PARAMS}-vector, got shape {vec.shape}")
        return cls(w1=vec[W1], b1=vec[B1], w2=vec[W2], b2=vec[B2])

    @classmethod
    def zeros(cls) -> FeatureNetParams:
        return cls.from_vector(np.zeros(N_PARAMS))


def init_params(rng: np.random.Generator, n_features: int) -> np.ndarray:
    """Weights uniform on [-1, 1], biases zero. Returns a ``(n_features, 7)`` array."""
    params = np.zeros((n_features, N_PARAMS))
    params[:, W1] = rng.uniform(-1.0, 1.0, size=(n_features, 2))
    params[:, W2] = rng.uniform(-1.0, 1.0, size=(n_features, 2))
    return params


def _as_vec(p) -> np.ndarray:
    if isinstance(p, FeatureNetParams):
        return p.as_vector()
    return np.asarray(p, dtype=np.float64)


def forward(p, x):
    """f(x) = sum_k w2_k * sigmoid(w1_k * x + b1_k) + b2."""
    v = _as_vec(p)
    x = np.asarray(x, dtype=np.float64)
    s = expit(np.multiply.outer(x, v[W1]) + v[B1])
    out = s @ v[W2] + v[B2]
    return float(out) if out.ndim == 0 else out


def input_derivative(p, x):
    """df/dx = sum_k w2_k * w1_k * s_k * (1 - s_k)."""
    v = _as_vec(p)
    x = np.asarray(x, dtype=np.float64)
    s = expit(np.multiply.outer(x, v[W1]) + v[B1])
    out = (s * (1.0 - s)) @ (v[W2] * v[W1])
    return float(out) if out.ndim == 0 else out


def param_gradient(p, x) -> np.ndarray:
    """Gradient of ``forward`` with respect to the 7 parameters.

    Scalar ``x`` gives a 7-vector; an array of shape ``s`` gives ``s + (7,)``.
    """
    v = _as_vec(p)
    x = np.asarray(x, dtype=np.float64)
    s = expit(np.multiply.outer(x, v[W1]) + v[B1])
    d = s * (1.0 - s)
    grad = np.empty(x.shape + (N_PARAMS,))
    grad[..., W1] = v[W2] * d * x[..., None]
    grad[..., B1] = v[W2] * d
    grad[..., W2] = s
    grad[..., B2] = 1.0
    return grad


def mixed_gradient(p, x) -> np.ndarray:
    """Gradient of ``input_derivative`` with respect to the 7 parameters."""
    v = _as_vec(p)
    x = np.asarray(x, dtype=np.float64)
    s = expit(np.multiply.outer(x, v[W1]) + v[B1])
    d = s * (1.0 - s)
    dd = d * (1.0 - 2.0 * s)
    w1, w2 = v[W1], v[W2]
    grad = np.empty(x.shape + (N_PARAMS,))
    grad[..., W1] = w2 * (d + w1 * dd * x[..., None])
    grad[..., B1] = w2 * w1 * dd
    grad[..., W2] = w1 * d
    grad[..., B2] = 0.0
    return grad


# --- batched over features -------------------------------------------------
#
# ``params`` is (p, 7) and ``X`` is (n, p): column j of X is fed to net j.


def _hidden(params: np.ndarray, X: np.ndarray) -> np.ndarray:
    # (n, p, 2)
    return expit(X[:, :, None] * params[None, :, W1] + params[None, :, B1])


def forward_batch(params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Per-feature outputs f_j(X[:, j]) as an ``(n, p)`` array."""
    s = _hidden(params, X)
    return np.einsum("npk,pk->np", s, params[:, W2]) + params[:, B2]


def derivative_batch(params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Per-feature slopes f_j'(X[:, j]) as an ``(n, p)`` array."""
    s = _hidden(params, X)
    return np.einsum("npk,pk->np", s * (1.0 - s), params[:, W2] * params[:, W1])


def output_grad_batch(params: np.ndarray, X: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_n weights[n, j] * d f_j(X[n, j]) / d params[j]  ->  (p, 7).

    ``weights`` is the upstream gradient dL/df_j for each row, shape (n, p)
    or (n,) when it is shared by all features (the additive case).
    """
    if weights.ndim == 1:
        weights = weights[:, None]
    s = _hidden(params, X)
    d = s * (1.0 - s)
    wd = weights[:, :, None] * d * params[None, :, W2]
    grad = np.empty(params.shape)
    grad[:, W1] = np.einsum("npk,np->pk", wd, X)
    grad[:, B1] = wd.sum(axis=0)
    grad[:, W2] = np.einsum("npk,np->pk", s, np.broadcast_to(weights, X.shape))
    grad[:, B2] = np.broadcast_to(weights, X.shape).sum(axis=0)
    return grad
