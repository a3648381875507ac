"""Feature metadata, constraint specifications and the in-memory dataset."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TASKS = ("regression", "classification")
KINDS = ("numeric", "binary", "ordinal")
DIRECTIONS = ("increasing", "decreasing")


@dataclass(frozen=True)
class FeatureMeta:
    """Column description plus every transform applied to reach model space.

    Model-space value = (sign * min(raw, cap) - shift) / scale, where
    sign is -1 when ``negated``. ``min``/``max`` are observed in model space.
    """

    name: str
    kind: str = "numeric"
    min: float = 0.0
    max: float = 0.0
    negated: bool = False
    cap: float | None = None
    standardize: bool = False
    scale_group: str | None = None
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError(f"{self.name}: scale must be positive")

    def to_model(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if self.cap is not None:
            raw = np.minimum(raw, self.cap)
        if self.negated:
            raw = -raw
        return (raw - self.shift) / self.scale

    def to_raw(self, value):
        """Inverse of ``to_model`` (truncation is not invertible and stays applied)."""
        raw = np.asarray(value, dtype=np.float64) * self.scale + self.shift
        return -raw if self.negated else raw

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FeatureMeta:
        return cls(**d)


@dataclass(frozen=True)
class ModelSpec:
    features: tuple[FeatureMeta, ...]
    task: str = "classification"
    monotone_features: tuple[tuple[int, str], ...] = ()
    pairwise_constraints: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(
            self,
            "monotone_features",
            tuple((int(i), str(d)) for i, d in self.monotone_features),
        )
        object.__setattr__(
            self,
            "pairwise_constraints",
            tuple((int(u), int(v)) for u, v in self.pairwise_constraints),
        )
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        p = len(self.features)
        seen = set()
        for i, direction in self.monotone_features:
            if not 0 <= i < p:
                raise ValueError(f"monotone feature index {i} out of range for {p} features")
            if direction not in DIRECTIONS:
                raise ValueError(f"unknown direction {direction!r}")
            if i in seen:
                raise ValueError(f"feature {i} listed twice in monotone_features")
            seen.add(i)
        pairs = set()
        for u, v in self.pairwise_constraints:
            if not (0 <= u < p and 0 <= v < p):
                raise ValueError(f"pairwise constraint ({u}, {v}) out of range")
            if u == v:
                raise ValueError(f"pairwise constraint ({u}, {v}) compares a feature with itself")
            if (u, v) in pairs:
                raise ValueError(f"duplicate pairwise constraint ({u}, {v})")
            if u not in seen or v not in seen:
                raise ValueError(
                    f"pairwise constraint ({u}, {v}): both features must also be individually monotone"
                )
            pairs.add((u, v))
        directions = dict(self.monotone_features)
        for u, v in self.pairwise_constraints:
            if directions[u] != directions[v]:
                raise ValueError(f"pairwise constraint ({u}, {v}) mixes monotone directions")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def monotone_indices(self) -> list[int]:
        return [i for i, _ in self.monotone_features]

    @property
    def has_constraints(self) -> bool:
        return bool(self.monotone_features or self.pairwise_constraints)

    def is_normal_form(self) -> bool:
        """True when every monotone constraint is increasing."""
        return all(d == "increasing" for _, d in self.monotone_features)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def with_features(self, features: Sequence[FeatureMeta]) -> ModelSpec:
        features = tuple(features)
        if [f.name for f in features] != self.names:
            raise ValueError("feature names do not match the spec")
        return dataclasses.replace(self, features=features)

    def without_constraints(self) -> ModelSpec:
        return dataclasses.replace(self, monotone_features=(), pairwise_constraints=())

    def to_dict(self) -> dict:
        return {
            "features": [f.to_dict() for f in self.features],
            "task": self.task,
            "monotone_features": [[i, d] for i, d in self.monotone_features],
            "pairwise_constraints": [[u, v] for u, v in self.pairwise_constraints],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ModelSpec:
        return cls(
            features=tuple(FeatureMeta.from_dict(f) for f in d["features"]),
            task=d["task"],
            monotone_features=tuple(tuple(x) for x in d.get("monotone_features", ())),
            pairwise_constraints=tuple(tuple(x) for x in d.get("pairwise_constraints", ())),
        )


@dataclass(frozen=True)
class Dataset:
    """Prepared feature matrix (column-major float64), labels and column metadata."""

    X: np.ndarray
    y: np.ndarray
    features: tuple[FeatureMeta, ...]
    task: str = "classification"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asfortranarray(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"row count mismatch: X has {X.shape[0]}, y has {y.shape[0]}")
        if X.shape[1] != len(self.features):
            raise ValueError("one FeatureMeta per column is required")
        if np.isnan(X).any() or np.isnan(y).any():
            raise ValueError("dataset contains NaN")
        if self.task == "classification" and not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("classification labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "features", tuple(self.features))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]

    def subset(self, rows) -> Dataset:
        return Dataset(self.X[rows], self.y[rows], self.features, self.task, dict(self.meta))

    def to_model_space(self, raw_rows) -> np.ndarray:
        raw_rows = np.atleast_2d(np.asarray(raw_rows, dtype=np.float64))
        return np.column_stack([f.to_model(raw_rows[:, j]) for j, f in enumerate(self.features)])

    def to_raw_space(self) -> np.ndarray:
        return np.column_stack([f.to_raw(self.X[:, j]) for j, f in enumerate(self.features)])
