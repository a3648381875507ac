"""Penalized training of additive models and the penalty-escalation loop."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import feature_net as fn
from . import monotonicity as mono
from . import nam_model as nm
from .schema import Dataset, ModelSpec

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


class MonotonicityNotAchieved(RuntimeError):
    def __init__(self, message: str, log: EscalationLog, model: nm.NamModel):
        super().__init__(message)
        self.log = log
        self.model = model


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    epochs: int = 2000
    batch_size: int = 0  # 0 means full batch
    step_size: float = 1e-2
    optimizer: str = "adam"  # or "gd"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lambda_init: float = 0.1
    eta_init: float = 0.1
    escalation_factor: float = 10.0
    max_escalations: int = 12
    margin: float = mono.DEFAULT_MARGIN
    tol: float = 1e-10
    warm_start: bool = True
    cert_resolution: int = mono.DEFAULT_RESOLUTION
    fcnn_hidden: int | None = None  # None means 2 * n_features

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.escalation_factor > 1:
            raise ValueError("escalation_factor must exceed 1")
        if self.max_escalations < 1:
            raise ValueError("max_escalations must be at least 1")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 0 or self.batch_size < 0:
            raise ValueError("epochs and batch_size must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        return cls(**d)


class Adam:
    def __init__(self, size: int, step: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.step_size, self.beta1, self.beta2, self.eps = step, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def update(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.step_size * m_hat / (np.sqrt(v_hat) + self.eps)


class GradientDescent:
    def __init__(self, size: int, step: float):
        self.step_size = step

    def update(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta - self.step_size * grad


def _optimizer(cfg: TrainConfig, size: int):
    if cfg.optimizer == "adam":
        return Adam(size, cfg.step_size, cfg.beta1, cfg.beta2, cfg.adam_eps)
    return GradientDescent(size, cfg.step_size)


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    if batch_size == 0 or batch_size >= n:
        yield slice(None)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _bind(spec: ModelSpec, data: Dataset) -> ModelSpec:
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.names != spec.names:
        raise ValueError(f"dataset columns {data.names} do not match spec features {spec.names}")
    if data.task != spec.task:
        raise ValueError(f"dataset task {data.task!r} does not match spec task {spec.task!r}")
    if not spec.is_normal_form():
        raise ValueError("decreasing constraints must be normalized (negated) before training")
    return spec.with_features(data.features)


@dataclass
class StageResult:
    model: nm.NamModel
    objective: list[float]  # penalized objective at the start of every epoch, then the final value
    loss: float
    h1: float  # at the training margin
    h2: float


def objective(m: nm.NamModel, data, pcfg: mono.PenaltyConfig) -> float:
    value = nm.loss(m, data)
    if pcfg.lam > 0:
        value += pcfg.lam * mono.penalty_individual(m, pcfg)
    if pcfg.eta > 0:
        value += pcfg.eta * mono.penalty_pairwise(m, pcfg)
    return value


def _pack(m: nm.NamModel) -> np.ndarray:
    return np.concatenate([[m.intercept], m.params.ravel()])


def _unpack(theta: np.ndarray, spec: ModelSpec) -> nm.NamModel:
    return nm.NamModel(theta[0], theta[1:].reshape(spec.n_features, -1), spec)


class _Design:
    """Training matrix stored per feature as unique values plus an inverse index.

    Count, binary and coarsely measured features have far fewer distinct
    values than rows, so nets are evaluated once per distinct value.
    """

    def __init__(self, X: np.ndarray):
        self.n = X.shape[0]
        self.columns = [np.unique(X[:, j], return_inverse=True) for j in range(X.shape[1])]

    def raw(self, intercept: float, params: np.ndarray) -> np.ndarray:
        out = np.full(self.n, intercept)
        for j, (vals, inv) in enumerate(self.columns):
            out += fn.forward(params[j], vals)[inv]
        return out

    def grad(self, params: np.ndarray, g: np.ndarray) -> np.ndarray:
        out = np.empty_like(params)
        for j, (vals, inv) in enumerate(self.columns):
            w = np.bincount(inv, weights=g, minlength=vals.size)
            out[j] = w @ fn.param_gradient(params[j], vals)
        return out


def _objective_and_grad(m: nm.NamModel, X, y, pcfg, design: _Design | None = None) -> tuple[float, np.ndarray]:
    if design is None:
        value = nm.loss(m, (X, y))
        g0, gp = nm.loss_gradient(m, (X, y))
    else:
        raw = design.raw(m.intercept, m.params)
        value = nm.data_loss(raw, y, m.task)
        g = nm.data_loss_grad(raw, y, m.task)
        g0, gp = float(g.sum()), design.grad(m.params, g)
    if pcfg.lam > 0 or pcfg.eta > 0:
        if pcfg.lam > 0:
            value += pcfg.lam * mono.penalty_individual(m, pcfg)
        if pcfg.eta > 0:
            value += pcfg.eta * mono.penalty_pairwise(m, pcfg)
        _, pg = mono.penalty_gradient(m, pcfg)
        gp = gp + pg
    return value, np.concatenate([[g0], gp.ravel()])


def train_nam_stage(
    data: Dataset,
    spec: ModelSpec,
    cfg: TrainConfig,
    lam: float = 0.0,
    eta: float = 0.0,
    init: nm.NamModel | None = None,
    penalty: mono.PenaltyConfig | None = None,
) -> StageResult:
    """Minimize loss + lam*h1 + eta*h2 from ``init`` (or a seeded fresh init)."""
    spec = _bind(spec, data)
    pcfg = penalty if penalty is not None else mono.penalty_config_from_data(spec, data, margin=cfg.margin)
    pcfg = pcfg.with_weights(lam, eta)
    rng = np.random.default_rng(cfg.seed)
    model = nm.init_nam(spec, rng) if init is None else init.replace(spec=spec)
    batch_rng = np.random.default_rng([cfg.seed, 1])
    theta = _pack(model)
    opt = _optimizer(cfg, theta.size)
    X, y = data.X, data.y
    history = []
    prev = np.inf
    minibatch = 0 < cfg.batch_size < data.n
    design = None if minibatch else _Design(X)
    for epoch in range(cfg.epochs):
        start_value = objective(_unpack(theta, spec), data, pcfg) if minibatch else None
        for rows in _batches(data.n, cfg.batch_size, batch_rng):
            value, grad = _objective_and_grad(_unpack(theta, spec), X[rows], y[rows], pcfg, design)
            if not (np.isfinite(value) and np.isfinite(grad).all()):
                raise TrainingDivergedError(
                    f"non-finite objective at epoch {epoch} (lam={lam:g}, eta={eta:g}); "
                    "reduce the step size"
                )
            if start_value is None:
                start_value = value
            theta = opt.update(theta, grad)
        history.append(float(start_value))
        if abs(prev - start_value) < cfg.tol:
            break
        prev = start_value
    model = _unpack(theta, spec)
    final = objective(model, data, pcfg)
    if not np.isfinite(final):
        raise TrainingDivergedError("non-finite objective after training; reduce the step size")
    history.append(final)
    h1, h2 = mono.penalties(model, pcfg)
    return StageResult(model, history, nm.loss(model, data), h1, h2)


def train_nam(
    data: Dataset,
    spec: ModelSpec,
    cfg: TrainConfig,
    lam: float = 0.0,
    eta: float = 0.0,
    init: nm.NamModel | None = None,
) -> nm.NamModel:
    return train_nam_stage(data, spec, cfg, lam, eta, init).model


@dataclass(frozen=True)
class EscalationRound:
    round: int
    lam: float
    eta: float
    loss: float
    h1: float  # zero-margin penalties at the evaluation points
    h2: float
    certified: bool


@dataclass
class EscalationLog:
    rounds: list[EscalationRound] = field(default_factory=list)

    def append(self, r: EscalationRound) -> None:
        self.rounds.append(r)
        log.info(
            "round %d  lambda=%g  eta=%g  loss=%.6f  h1=%.3g  h2=%.3g  certified=%s",
            r.round, r.lam, r.eta, r.loss, r.h1, r.h2, r.certified,
        )

    def __len__(self) -> int:
        return len(self.rounds)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "lambda", "eta", "loss", "h1", "h2"])
        for r in self.rounds:
            w.writerow([r.round, repr(r.lam), repr(r.eta), repr(r.loss), repr(r.h1), repr(r.h2)])
        return buf.getvalue()


def _escalate(weight: float, init: float, factor: float) -> float:
    return init if weight == 0 else weight * factor


def train_mnam(data: Dataset, spec: ModelSpec, cfg: TrainConfig) -> tuple[nm.NamModel, EscalationLog]:
    """Penalty escalation: retrain with growing weights until both penalties vanish.

    Starts unpenalized. After each stage, if the zero-margin penalty h1 (h2)
    is positive at the evaluation points, lam (eta) goes 0 -> lambda_init
    (eta_init) and is multiplied by ``escalation_factor`` afterwards. The
    loop continues while either penalty is positive or the grid
    certification fails; grid points that fail certification are added to
    the evaluation points. Training uses the strictness margin
    ``cfg.margin``; termination uses zero.
    """
    spec = _bind(spec, data)
    escalation = EscalationLog()
    if not spec.has_constraints:
        stage = train_nam_stage(data, spec, cfg)
        escalation.append(EscalationRound(0, 0.0, 0.0, stage.loss, 0.0, 0.0, True))
        return stage.model, escalation

    pcfg = mono.penalty_config_from_data(spec, data, margin=cfg.margin)
    lam = eta = 0.0
    stage = train_nam_stage(data, spec, cfg, lam, eta, penalty=pcfg)
    for rnd in range(cfg.max_escalations + 1):
        model = stage.model
        h1, h2 = mono.penalties(model, pcfg, margin=0.0)
        report = mono.certify(model, cfg.cert_resolution, data)
        escalation.append(EscalationRound(rnd, lam, eta, stage.loss, h1, h2, report.passed))
        if h1 == 0 and h2 == 0 and report.passed:
            return model, escalation
        if rnd == cfg.max_escalations:
            break
        if not report.passed:
            bad_ind, bad_pair = mono.violating_points(model, cfg.cert_resolution, data)
            pcfg = pcfg.with_extra_points(bad_ind, bad_pair)
            h1, h2 = mono.penalties(model, pcfg, margin=0.0)
        if h1 > 0:
            lam = _escalate(lam, cfg.lambda_init, cfg.escalation_factor)
        if h2 > 0:
            eta = _escalate(eta, cfg.eta_init, cfg.escalation_factor)
        init = model if cfg.warm_start else None
        stage = train_nam_stage(data, spec, cfg, lam, eta, init=init, penalty=pcfg)
    raise MonotonicityNotAchieved(
        f"constraints still violated after {cfg.max_escalations} escalations", escalation, stage.model
    )


def train_fcnn(data: Dataset, spec: ModelSpec, cfg: TrainConfig) -> nm.FcnnModel:
    """Unpenalized dense baseline; monotonicity constraints in ``spec`` are ignored."""
    spec = _bind(spec.without_constraints(), data)
    rng = np.random.default_rng(cfg.seed)
    model = nm.init_fcnn(spec, rng, cfg.fcnn_hidden)
    batch_rng = np.random.default_rng([cfg.seed, 1])
    theta = model.flat()
    opt = _optimizer(cfg, theta.size)
    prev = np.inf
    for epoch in range(cfg.epochs):
        value = None
        for rows in _batches(data.n, cfg.batch_size, batch_rng):
            cur = model.from_flat(theta)
            batch = (data.X[rows], data.y[rows])
            v, grad = nm.fcnn_loss(cur, batch), nm.fcnn_loss_gradient(cur, batch)
            if not (np.isfinite(v) and np.isfinite(grad).all()):
                raise TrainingDivergedError(f"non-finite FCNN loss at epoch {epoch}; reduce the step size")
            value = v if value is None else value
            theta = opt.update(theta, grad)
        if abs(prev - value) < cfg.tol:
            break
        prev = value
    return model.from_flat(theta)
