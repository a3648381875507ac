"""Hinge penalties on shape-function slopes and grid certification.

Individual constraint on feature a:   f_a'(x) >= 0
Pairwise constraint, u over v:        f_u'(x) - f_v'(x) >= 0

Training penalizes squared shortfalls below a small margin, so that the
trained slopes clear zero with room to spare; certification checks the raw
(zero-margin) inequalities on a dense grid.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import feature_net as fn
from .nam_model import NamModel
from .schema import Dataset, ModelSpec

DEFAULT_MARGIN = 1e-3
DEFAULT_RESOLUTION = 1000


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float = 0.0
    eta: float = 0.0
    margin: float = DEFAULT_MARGIN
    eval_points: dict = field(default_factory=dict)  # feature index -> points
    pair_points: dict = field(default_factory=dict)  # (u, v) -> points

    def __post_init__(self):
        if self.lam < 0 or self.eta < 0 or self.margin < 0:
            raise ValueError("lam, eta and margin must be nonnegative")
        ep = {int(k): np.unique(np.asarray(v, dtype=np.float64)) for k, v in self.eval_points.items()}
        pp = {
            (int(u), int(v)): np.unique(np.asarray(x, dtype=np.float64))
            for (u, v), x in self.pair_points.items()
        }
        for k, v in list(ep.items()) + list(pp.items()):
            if v.size == 0:
                raise ValueError(f"empty evaluation points for {k}")
        object.__setattr__(self, "eval_points", ep)
        object.__setattr__(self, "pair_points", pp)

    def with_weights(self, lam: float, eta: float) -> PenaltyConfig:
        return PenaltyConfig(lam, eta, self.margin, self.eval_points, self.pair_points)

    def with_extra_points(self, eval_points=None, pair_points=None) -> PenaltyConfig:
        """Union the given points into the existing evaluation sets."""
        ep = dict(self.eval_points)
        for k, v in (eval_points or {}).items():
            ep[k] = np.union1d(ep.get(k, np.empty(0)), v)
        pp = dict(self.pair_points)
        for k, v in (pair_points or {}).items():
            pp[k] = np.union1d(pp.get(k, np.empty(0)), v)
        return PenaltyConfig(self.lam, self.eta, self.margin, ep, pp)


def _check_pair_ranges(spec: ModelSpec, u: int, v: int) -> None:
    fu, fv = spec.features[u], spec.features[v]
    if fu.max < fv.min or fv.max < fu.min:
        raise ValueError(
            f"pairwise constraint {fu.name} over {fv.name}: observed ranges "
            f"[{fu.min:g}, {fu.max:g}] and [{fv.min:g}, {fv.max:g}] do not overlap"
        )


def penalty_config_from_data(
    spec: ModelSpec, X, lam: float = 0.0, eta: float = 0.0, margin: float = DEFAULT_MARGIN
) -> PenaltyConfig:
    """Evaluation points taken from the training values of each constrained feature.

    Pairs use the union of both features' training values.
    """
    X = X.X if isinstance(X, Dataset) else np.asarray(X, dtype=np.float64)
    eval_points = {i: X[:, i] for i in spec.monotone_indices}
    pair_points = {}
    for u, v in spec.pairwise_constraints:
        _check_pair_ranges(spec, u, v)
        pair_points[(u, v)] = np.concatenate([X[:, u], X[:, v]])
    return PenaltyConfig(lam, eta, margin, eval_points, pair_points)


def _individual_points(m: NamModel, cfg: PenaltyConfig):
    for i, _ in m.spec.monotone_features:
        if i not in cfg.eval_points:
            raise ValueError(f"no evaluation points for constrained feature {m.spec.features[i].name!r}")
        yield i, cfg.eval_points[i]


def _pair_points(m: NamModel, cfg: PenaltyConfig):
    for u, v in m.spec.pairwise_constraints:
        _check_pair_ranges(m.spec, u, v)
        if (u, v) not in cfg.pair_points:
            raise ValueError(f"no evaluation points for pair ({u}, {v})")
        yield u, v, cfg.pair_points[(u, v)]


def penalty_individual(m: NamModel, cfg: PenaltyConfig, margin: float | None = None) -> float:
    """h1 = sum_i sum_j max(0, margin - f_i'(x_j))^2 over constrained features."""
    eps = cfg.margin if margin is None else margin
    total = 0.0
    for i, pts in _individual_points(m, cfg):
        short = np.maximum(0.0, eps - fn.input_derivative(m.params[i], pts))
        total += float(np.sum(short**2))
    return total


def penalty_pairwise(m: NamModel, cfg: PenaltyConfig, margin: float | None = None) -> float:
    """h2 = sum_pairs sum_j max(0, margin - (f_u'(x_j) - f_v'(x_j)))^2."""
    eps = cfg.margin if margin is None else margin
    total = 0.0
    for u, v, pts in _pair_points(m, cfg):
        gap = fn.input_derivative(m.params[u], pts) - fn.input_derivative(m.params[v], pts)
        total += float(np.sum(np.maximum(0.0, eps - gap) ** 2))
    return total


def penalties(m: NamModel, cfg: PenaltyConfig, margin: float | None = None) -> tuple[float, float]:
    return penalty_individual(m, cfg, margin), penalty_pairwise(m, cfg, margin)


def penalty_gradient(m: NamModel, cfg: PenaltyConfig) -> tuple[float, np.ndarray]:
    """Gradient of lam*h1 + eta*h2 as (d/d intercept, d/d params)."""
    grad = np.zeros_like(m.params)
    eps = cfg.margin
    if cfg.lam > 0:
        for i, pts in _individual_points(m, cfg):
            short = np.maximum(0.0, eps - fn.input_derivative(m.params[i], pts))
            if short.any():
                grad[i] -= 2.0 * cfg.lam * (short @ fn.mixed_gradient(m.params[i], pts))
    if cfg.eta > 0:
        for u, v, pts in _pair_points(m, cfg):
            gap = fn.input_derivative(m.params[u], pts) - fn.input_derivative(m.params[v], pts)
            short = np.maximum(0.0, eps - gap)
            if short.any():
                grad[u] -= 2.0 * cfg.eta * (short @ fn.mixed_gradient(m.params[u], pts))
                grad[v] += 2.0 * cfg.eta * (short @ fn.mixed_gradient(m.params[v], pts))
    return 0.0, grad


# --- certification ---------------------------------------------------------


@dataclass(frozen=True)
class ConstraintCheck:
    kind: str  # "individual" or "pairwise"
    features: tuple[str, ...]
    minimum: float
    argmin: float  # model-space location of the minimum
    n_points: int

    @property
    def passed(self) -> bool:
        return self.minimum >= 0.0

    def label(self) -> str:
        if self.kind == "individual":
            return self.features[0]
        return f"{self.features[0]} over {self.features[1]}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "features": list(self.features),
            "minimum": self.minimum,
            "argmin": self.argmin,
            "n_points": self.n_points,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class CertificationReport:
    checks: tuple[ConstraintCheck, ...]
    resolution: int

    @property
    def individual(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if c.kind == "individual"]

    @property
    def pairwise(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if c.kind == "pairwise"]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "grid": {"resolution": self.resolution, "includes_training_values": True},
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        rows = [("constraint", "type", "min slope/gap", "at x", "result")]
        for c in self.checks:
            rows.append(
                (c.label(), c.kind, f"{c.minimum:.6g}", f"{c.argmin:.4g}", "pass" if c.passed else "FAIL")
            )
        widths = [max(len(r[k]) for r in rows) for k in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def certification_grid(lo: float, hi: float, resolution: int, extra=None) -> np.ndarray:
    if hi < lo:
        raise ValueError("grid upper bound below lower bound")
    if hi == lo:
        warnings.warn(f"degenerate range [{lo:g}, {hi:g}]: single-point check", stacklevel=3)
        grid = np.array([lo])
    else:
        grid = np.linspace(lo, hi, resolution)
    if extra is not None:
        grid = np.union1d(grid, np.asarray(extra, dtype=np.float64))
    return grid


def certify(m: NamModel, resolution: int = DEFAULT_RESOLUTION, data=None) -> CertificationReport:
    """Grid minima of every constrained slope and pairwise slope gap.

    The grid spans each feature's observed range (the union of both ranges
    for a pair) with ``resolution`` uniform points, plus all training values
    of the feature(s) when ``data`` is given. A pass is exact on the grid and
    approximate over the continuum.
    """
    spec = m.spec
    if not spec.has_constraints:
        raise ValueError("model spec has no monotonicity constraints to certify")
    X = None
    if data is not None:
        X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    checks = []
    for i, _ in spec.monotone_features:
        f = spec.features[i]
        grid = certification_grid(f.min, f.max, resolution, None if X is None else X[:, i])
        slope = fn.input_derivative(m.params[i], grid)
        k = int(np.argmin(slope))
        checks.append(ConstraintCheck("individual", (f.name,), float(slope[k]), float(grid[k]), grid.size))
    for u, v in spec.pairwise_constraints:
        fu, fv = spec.features[u], spec.features[v]
        extra = None if X is None else np.concatenate([X[:, u], X[:, v]])
        grid = certification_grid(min(fu.min, fv.min), max(fu.max, fv.max), resolution, extra)
        gap = fn.input_derivative(m.params[u], grid) - fn.input_derivative(m.params[v], grid)
        k = int(np.argmin(gap))
        checks.append(
            ConstraintCheck("pairwise", (fu.name, fv.name), float(gap[k]), float(grid[k]), grid.size)
        )
    return CertificationReport(tuple(checks), resolution)


def violating_points(m: NamModel, resolution: int = DEFAULT_RESOLUTION, data=None) -> tuple[dict, dict]:
    """Grid points where certification fails, keyed like PenaltyConfig points."""
    spec = m.spec
    X = None
    if data is not None:
        X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    ind, pair = {}, {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, _ in spec.monotone_features:
            f = spec.features[i]
            grid = certification_grid(f.min, f.max, resolution, None if X is None else X[:, i])
            bad = grid[fn.input_derivative(m.params[i], grid) < 0]
            if bad.size:
                ind[i] = bad
        for u, v in spec.pairwise_constraints:
            fu, fv = spec.features[u], spec.features[v]
            extra = None if X is None else np.concatenate([X[:, u], X[:, v]])
            grid = certification_grid(min(fu.min, fv.min), max(fu.max, fv.max), resolution, extra)
            gap = fn.input_derivative(m.params[u], grid) - fn.input_derivative(m.params[v], grid)
            bad = grid[gap < 0]
            if bad.size:
                pair[(u, v)] = bad
    return ind, pair
