"""Classification metrics and the empirical monotonicity audit."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .simulation import CurvePoint, empirical_marginal_curve, is_violated_individual

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class MetricsReport:
    error: float
    auc: float | None  # None when only one class is present
    tp: int
    fn: int
    fp: int
    tn: int
    threshold: float
    n: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "threshold": self.threshold,
            "error": self.error,
            "auc": self.auc,
            "confusion": {"TP": self.tp, "FN": self.fn, "FP": self.fp, "TN": self.tn},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self, title: str = "") -> str:
        auc = "undefined" if self.auc is None else f"{100 * self.auc:.1f}%"
        w = max(len(str(v)) for v in (self.tp, self.fn, self.fp, self.tn, "Predicted: Yes"))
        lines = [
            f"{title}classification error {100 * self.error:.1f}%  AUC {auc}  (n={self.n}, threshold {self.threshold:g})",
            f"{'':<12}  {'Predicted: Yes':>{w}}  {'Predicted: No':>{w}}",
            f"{'Actual: Yes':<12}  {self.tp:>{w}}  {self.fn:>{w}}",
            f"{'Actual: No':<12}  {self.fp:>{w}}  {self.tn:>{w}}",
        ]
        return "\n".join(lines)


def auc_rank(scores, labels) -> float | None:
    """P(score of a random positive > score of a random negative), ties counting 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)  # average ranks resolve ties as 1/2
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def metrics(probabilities, labels, threshold: float = DEFAULT_THRESHOLD) -> MetricsReport:
    """Error, rank AUC and confusion counts; a score equal to the threshold is predicted positive."""
    p = np.asarray(probabilities, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if p.shape != y.shape:
        raise ValueError("probabilities and labels differ in length")
    if p.size == 0:
        raise ValueError("no predictions")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    if ((p < 0) | (p > 1) | np.isnan(p)).any():
        raise ValueError("probabilities must lie in [0, 1]")
    pred = p >= threshold
    pos = y == 1
    tp = int((pred & pos).sum())
    fn = int((~pred & pos).sum())
    fp = int((pred & ~pos).sum())
    tn = int((~pred & ~pos).sum())
    return MetricsReport((fp + fn) / p.size, auc_rank(p, y), tp, fn, fp, tn, float(threshold), int(p.size))


# --- audit -------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureAudit:
    name: str
    curve: list[CurvePoint]
    step_violations: list[tuple[int, int]]  # (x, next present x) where the mean drops
    histogram: list[tuple[int, int]]  # (level, count) over all observed levels

    @property
    def violated(self) -> bool:
        return bool(self.step_violations)


@dataclass(frozen=True)
class PairAudit:
    dominant: str
    dominated: str
    increments: list[tuple[int, float, float]]  # (x, rise of dominant, rise of dominated), x -> x+1
    violations: list[int]

    @property
    def violated(self) -> bool:
        return bool(self.violations)


@dataclass
class AuditReport:
    features: dict = field(default_factory=dict)  # name -> FeatureAudit
    pairs: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "individual": {
                name: {"violated": a.violated, "drops": [list(s) for s in a.step_violations]}
                for name, a in self.features.items()
            },
            "pairwise": [
                {"dominant": p.dominant, "dominated": p.dominated, "violated": p.violated,
                 "levels": p.violations}
                for p in self.pairs
            ],
        }  # fmt: skip


def _levels(values: np.ndarray, name: str, bins=None) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if bins is not None:
        return np.digitize(values, np.asarray(bins, dtype=np.float64)).astype(np.int64)
    rounded = np.round(values)
    # de-standardized columns carry rounding noise
    if not np.allclose(values, rounded, rtol=0, atol=1e-9):
        raise ValueError(f"feature {name!r} is not integer-valued; pass bin edges")
    return rounded.astype(np.int64)


def audit_feature(xs, ys, name: str = "x", x_max: int | None = None, bins=None) -> FeatureAudit:
    """Marginal curve y-bar | x on levels 0..x_max, drops between present levels, and a histogram."""
    levels = _levels(xs, name, bins)
    observed = np.unique(levels)
    if observed.size < 2:
        raise ValueError(f"feature {name!r} has a single observed level")
    if observed.min() < 0:
        raise ValueError(f"feature {name!r} has negative levels; shift or bin it first")
    top = int(observed.max()) if x_max is None else int(x_max)
    curve = empirical_marginal_curve(levels, ys, top)
    present = [pt for pt in curve if pt.present]
    drops = [(a.x, b.x) for a, b in zip(present, present[1:]) if b.mean < a.mean]
    counts = np.bincount(levels)
    hist = [(int(v), int(counts[v])) for v in observed]
    return FeatureAudit(name, curve, drops, hist)


def audit_pair(a: FeatureAudit, b: FeatureAudit) -> PairAudit:
    top = min(len(a.curve), len(b.curve))
    rows, bad = [], []
    for x in range(top - 1):
        pa, pa1, pb, pb1 = a.curve[x], a.curve[x + 1], b.curve[x], b.curve[x + 1]
        if pa.present and pa1.present and pb.present and pb1.present:
            da, db = pa1.mean - pa.mean, pb1.mean - pb.mean
            rows.append((x, da, db))
            if da < db:
                bad.append(x)
    return PairAudit(a.name, b.name, rows, bad)


def audit_monotonicity(data, features, pairs=(), x_max: int | None = None, bins=None) -> AuditReport:
    """Audit the named (integer-valued) columns of a prepared, unstandardized dataset.

    ``data`` is a Dataset or an ``(X, y, names)`` triple; ``pairs`` lists
    (dominant, dominated) names.
    """
    if hasattr(data, "X"):
        raw, y, names = data.to_raw_space(), data.y, data.names
    else:
        raw, y, names = data
        raw = np.asarray(raw, dtype=np.float64)
    report = AuditReport()
    for name in features:
        col = raw[:, names.index(name)]
        report.features[name] = audit_feature(col, y, name, x_max, (bins or {}).get(name))
    for u, v in pairs:
        for name in (u, v):
            if name not in report.features:
                report.features[name] = audit_feature(raw[:, names.index(name)], y, name, x_max)
        report.pairs.append(audit_pair(report.features[u], report.features[v]))
    return report


def curve_is_monotone(curve) -> bool:
    return not is_violated_individual(curve)
