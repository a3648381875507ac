"""Monte Carlo rates of empirical monotonicity violations.

Covariates are Poisson counts and the response follows a log utility,
y = alpha * log(c + x) + noise, which is increasing with a flattening
slope. Each replication averages y within each integer level of x on
[0, x_check_max] and asks whether the resulting curve is monotone.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class CurvePoint:
    x: int
    mean: float  # nan when count == 0
    count: int

    @property
    def present(self) -> bool:
        return self.count > 0


def empirical_marginal_curve(xs, ys, x_max: int) -> list[CurvePoint]:
    """Mean of ``ys`` at each integer level 0..x_max of ``xs``, with counts."""
    xs = np.asarray(xs)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    if xs.size == 0:
        raise ValueError("empty sample")
    counts, sums = _bin(xs, ys, x_max)
    return [
        CurvePoint(v, float(sums[v] / counts[v]) if counts[v] else math.nan, int(counts[v]))
        for v in range(x_max + 1)
    ]


def _bin(xs: np.ndarray, ys: np.ndarray, x_max: int) -> tuple[np.ndarray, np.ndarray]:
    keep = (xs >= 0) & (xs <= x_max)
    idx = xs[keep].astype(np.int64)
    counts = np.bincount(idx, minlength=x_max + 1)
    sums = np.bincount(idx, weights=ys[keep], minlength=x_max + 1)
    return counts, sums


def _present_means(curve) -> np.ndarray:
    return np.array([pt.mean for pt in curve if pt.present])


def is_violated_individual(curve, mode: str = "adjacent") -> bool:
    """True when the curve strictly decreases somewhere.

    ``adjacent`` compares each present level with the next present level
    (empty levels are bridged); ``all_pairs`` compares every ordered pair of
    present levels. Fewer than two present levels is vacuously monotone.
    """
    means = _present_means(curve)
    if means.size < 2:
        return False
    if mode == "adjacent":
        return bool(np.any(np.diff(means) < 0))
    if mode == "all_pairs":
        return bool(np.any(np.maximum.accumulate(means)[:-1] > means[1:]))
    raise ValueError(f"unknown mode {mode!r}")


def is_violated_pairwise(curve_u, curve_v) -> bool:
    """True when, at some level x, the dominant curve rises less than the dominated one.

    Increments are taken from x to x + 1 wherever both levels are present in
    both curves.
    """
    mu = np.array([pt.mean if pt.present else np.nan for pt in curve_u])
    mv = np.array([pt.mean if pt.present else np.nan for pt in curve_v])
    du, dv = np.diff(mu), np.diff(mv)
    ok = ~(np.isnan(du) | np.isnan(dv))
    return bool(np.any(du[ok] < dv[ok]))


def _check_individual(counts, sums, mode) -> bool:
    present = counts > 0
    means = sums[present] / counts[present]
    if means.size < 2:
        return False
    if mode == "adjacent":
        return bool(np.any(np.diff(means) < 0))
    return bool(np.any(np.maximum.accumulate(means)[:-1] > means[1:]))


def _check_pairwise(cu, su, cv, sv) -> bool:
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(cu > 0, su / np.maximum(cu, 1), np.nan)
        mv = np.where(cv > 0, sv / np.maximum(cv, 1), np.nan)
    du, dv = np.diff(mu), np.diff(mv)
    ok = ~(np.isnan(du) | np.isnan(dv))
    return bool(np.any(du[ok] < dv[ok]))


@dataclass(frozen=True)
class SimConfigIndividual:
    alpha: float = 1.0
    c: float = 10.0
    poisson_rate: float = 0.5
    sigma: float = 0.2
    n_samples: int = 10_000
    n_reps: int = 1000
    x_check_max: int = 4
    seed: int = 0
    mode: str = "adjacent"

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("c must be at least 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.poisson_rate > 0:
            raise ValueError("poisson_rate must be positive")
        if self.n_samples < 1 or self.n_reps < 1:
            raise ValueError("n_samples and n_reps must be positive")


@dataclass(frozen=True)
class SimConfigPairwise:
    alpha: float = 1.2
    beta: float = 1.0
    c: float = 10.0
    rate1: float = 0.5
    rate2: float = 0.4
    sigma: float = 0.2
    n_samples: int = 10_000
    n_reps: int = 1000
    x_check_max: int = 4
    seed: int = 0
    mode: str = "adjacent"

    def __post_init__(self):
        if not self.alpha >= self.beta:
            raise ValueError("alpha must not be below beta")
        if self.c < 1:
            raise ValueError("c must be at least 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not (self.rate1 > 0 and self.rate2 > 0):
            raise ValueError("Poisson rates must be positive")
        if self.n_samples < 1 or self.n_reps < 1:
            raise ValueError("n_samples and n_reps must be positive")


@dataclass(frozen=True)
class Ratio:
    violations: int
    n_reps: int

    @property
    def ratio(self) -> float:
        return self.violations / self.n_reps

    @property
    def stderr(self) -> float:
        p = self.ratio
        return math.sqrt(p * (1.0 - p) / self.n_reps)


@dataclass(frozen=True)
class SimResult:
    ratios: dict  # name -> Ratio
    config: SimConfigIndividual | SimConfigPairwise
    extra: dict = field(default_factory=dict)

    @property
    def n_reps(self) -> int:
        return self.config.n_reps

    def ratio(self, name: str = "x") -> float:
        return self.ratios[name].ratio

    def stderr(self, name: str = "x") -> float:
        return self.ratios[name].stderr

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "ratios": {k: {"ratio": r.ratio, "stderr": r.stderr, "violations": r.violations} for k, r in self.ratios.items()},
        }


def _rep_generators(seed: int, n_reps: int) -> list[np.random.Generator]:
    # one independent stream per replication, so results do not depend on execution order
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_reps)]


def simulate_individual(cfg: SimConfigIndividual) -> SimResult:
    violations = 0
    for rng in _rep_generators(cfg.seed, cfg.n_reps):
        x = rng.poisson(cfg.poisson_rate, cfg.n_samples)
        y = cfg.alpha * np.log(cfg.c + x)
        if cfg.sigma > 0:
            y = y + rng.normal(0.0, cfg.sigma, cfg.n_samples)
        counts, sums = _bin(x, y, cfg.x_check_max)
        violations += _check_individual(counts, sums, cfg.mode)
    return SimResult({"x": Ratio(violations, cfg.n_reps)}, cfg)


def simulate_pairwise(cfg: SimConfigPairwise) -> SimResult:
    v1 = v2 = vp = 0
    for rng in _rep_generators(cfg.seed, cfg.n_reps):
        x1 = rng.poisson(cfg.rate1, cfg.n_samples)
        x2 = rng.poisson(cfg.rate2, cfg.n_samples)
        y = cfg.alpha * np.log(cfg.c + x1) + cfg.beta * np.log(cfg.c + x2)
        if cfg.sigma > 0:
            y = y + rng.normal(0.0, cfg.sigma, cfg.n_samples)
        c1, s1 = _bin(x1, y, cfg.x_check_max)
        c2, s2 = _bin(x2, y, cfg.x_check_max)
        v1 += _check_individual(c1, s1, cfg.mode)
        v2 += _check_individual(c2, s2, cfg.mode)
        vp += _check_pairwise(c1, s1, c2, s2)
    n = cfg.n_reps
    return SimResult({"x1": Ratio(v1, n), "x2": Ratio(v2, n), "pairwise": Ratio(vp, n)}, cfg)


# Published violation ratios for the individual study: (swept parameter, value) -> ratio.
TABLE1 = {
    ("c", 5): 0.018, ("c", 10): 0.104, ("c", 15): 0.158, ("c", 20): 0.216,
    ("sigma", 0.1): 0.007, ("sigma", 0.2): 0.083, ("sigma", 0.3): 0.201, ("sigma", 0.4): 0.249,
    ("poisson_rate", 0.3): 0.298, ("poisson_rate", 0.4): 0.201,
    ("poisson_rate", 0.5): 0.079, ("poisson_rate", 0.6): 0.034,
}  # fmt: skip

# Base settings held fixed while one parameter is swept.
TABLE1_BASE = {
    "c": dict(alpha=1.0, sigma=0.2, poisson_rate=0.5),
    "sigma": dict(alpha=1.0, c=10.0, poisson_rate=0.5),
    "poisson_rate": dict(alpha=1.0, c=10.0, sigma=0.2),
}

PAIRWISE_PUBLISHED = {"x1": 0.054, "x2": 0.216, "pairwise": 0.692}


def table1_configs(n_reps: int = 1000, n_samples: int = 10_000, seed: int = 0) -> list[tuple[str, float, SimConfigIndividual]]:
    out = []
    for (param, value) in TABLE1:
        kwargs = dict(TABLE1_BASE[param])
        kwargs[param] = value
        out.append((param, value, SimConfigIndividual(n_samples=n_samples, n_reps=n_reps, seed=seed, **kwargs)))
    return out


SWEEP_COLUMNS = ["study", "swept", "alpha", "beta", "c", "rate1", "rate2", "sigma", "n_samples",
                 "x_check_max", "target", "ratio", "stderr", "n_reps", "seed"]  # fmt: skip


def sweep_rows(results: list[tuple[str, str, SimResult]]) -> list[dict]:
    """Flatten (study, swept parameter, result) triples into CSV rows."""
    rows = []
    for study, swept, res in results:
        cfg = res.config
        if isinstance(cfg, SimConfigIndividual):
            params = dict(alpha=cfg.alpha, beta="", c=cfg.c, rate1=cfg.poisson_rate, rate2="")
        else:
            params = dict(alpha=cfg.alpha, beta=cfg.beta, c=cfg.c, rate1=cfg.rate1, rate2=cfg.rate2)
        for target, r in res.ratios.items():
            rows.append(
                dict(study=study, swept=swept, sigma=cfg.sigma, n_samples=cfg.n_samples,
                     x_check_max=cfg.x_check_max, target=target, ratio=r.ratio, stderr=r.stderr,
                     n_reps=r.n_reps, seed=cfg.seed, **params)
            )  # fmt: skip
    return rows


def sweep_csv(results) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in sweep_rows(results):
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
