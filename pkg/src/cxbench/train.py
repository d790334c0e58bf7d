"""AdamW training with per-step gradient telemetry and dead-seed detection.

Telemetry record ``s`` describes the parameters after ``s`` optimizer updates
(record 0 is the initialization) evaluated on minibatch ``s``. So the step-1
record is the first one that feels the learning rate.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .data import Splits
from .families import CostReport, FamilySpec, Model, build

DEAD_WINDOW = 20
DEAD_MIN_STEPS = 40
DEAD_LOSS_BAND = 0.02
DEAD_GRAD = 1e-3
DEAD_ACC_MARGIN = 0.05


class DivergenceError(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01
    batch_size: int = 64
    steps: int = 200
    seed: int = 0
    family: str = "complex"
    activation: str = "crelu"
    width: int = 32
    view: str | None = None
    telemetry_cap: int = 200
    sparse_every: int = 10

    def __post_init__(self):
        if not (self.lr >= 0 and math.isfinite(self.lr)):
            raise ValueError("learning rate must be finite and non-negative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        self.betas = tuple(float(b) for b in self.betas)

    def spec(self) -> FamilySpec:
        return FamilySpec(self.family, self.view, self.activation, self.width)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int):
        return cls(np.zeros(n), np.zeros(n), 0)


def cross_entropy(logits, label: int) -> float:
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 1 or logits.size < 2:
        raise ValueError("need a 1-D logit vector with at least two classes")
    return float(logsumexp(logits) - logits[label])


def adamw_step(values: np.ndarray, grad: np.ndarray, state: AdamState, cfg: TrainConfig) -> np.ndarray:
    """One decoupled-weight-decay Adam update; returns new values, mutates ``state``."""
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite gradient")
    b1, b2 = cfg.betas
    state.t += 1
    state.m = b1 * state.m + (1 - b1) * grad
    with np.errstate(over="ignore"):
        state.v = b2 * state.v + (1 - b2) * grad * grad
    if not np.all(np.isfinite(state.v)):
        raise DivergenceError("second-moment estimate overflowed")
    mhat = state.m / (1 - b1 ** state.t)
    vhat = state.v / (1 - b2 ** state.t)
    decayed = values * (1 - cfg.lr * cfg.weight_decay)
    return decayed - cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)


@dataclass
class StepRecord:
    step: int
    loss: float
    total_grad_norm: float
    max_param_abs: float
    groups: dict

    @property
    def head_weight_grad_norm(self) -> float:
        return self.groups.get("head.weight", float("nan"))


@dataclass
class RunResult:
    train_loss: float
    val_acc: float
    test_acc: float
    dead: bool
    reason: str
    cost: CostReport
    config: dict
    telemetry: list = field(default_factory=list, repr=False)
    telemetry_path: str | None = None

    def record(self, step: int) -> StepRecord | None:
        for r in self.telemetry:
            if r.step == step:
                return r
        return None

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "train_loss": self.train_loss,
            "val_acc": self.val_acc,
            "test_acc": self.test_acc,
            "dead": self.dead,
            "reason": self.reason,
            "cost": self.cost.as_dict(),
            "telemetry_path": self.telemetry_path,
        }


def detect_dead(trace, test_acc: float, num_classes: int) -> bool:
    """Collapse to uniform predictions with vanishing gradients and chance-level accuracy."""
    if len(trace) < DEAD_MIN_STEPS:
        return False
    tail = trace[-DEAD_WINDOW:]
    loss = np.array([r.loss for r in tail])
    grad = np.array([r.total_grad_norm for r in tail])
    if not (np.all(np.isfinite(loss)) and np.all(np.isfinite(grad))):
        return True
    return bool(
        np.mean(np.abs(loss - math.log(num_classes))) <= DEAD_LOSS_BAND
        and np.mean(grad) <= DEAD_GRAD
        and test_acc <= 1.0 / num_classes + DEAD_ACC_MARGIN
    )


class BatchSampler:
    """Class-balanced minibatches: each class is drawn from its own reshuffled queue.

    The batch is trimmed to a multiple of the class count so every batch has
    the same label histogram. With a ragged remainder a collapsed model would
    keep a nonzero head-bias gradient forever.
    """

    def __init__(self, y: np.ndarray, batch_size: int, rng: np.random.Generator):
        self.rng = rng
        self.classes = np.unique(y)
        self.pools = [np.flatnonzero(y == c) for c in self.classes]
        self.queues = [np.empty(0, dtype=np.int64) for _ in self.pools]
        C = len(self.pools)
        self.batch_size = batch_size - batch_size % C if batch_size >= C else batch_size
        self.turn = 0

    def _take(self, i: int, n: int) -> np.ndarray:
        out = []
        while n > 0:
            if self.queues[i].size == 0:
                self.queues[i] = self.rng.permutation(self.pools[i])
            got = self.queues[i][:n]
            self.queues[i] = self.queues[i][n:]
            out.append(got)
            n -= got.size
        return np.concatenate(out)

    def next(self) -> np.ndarray:
        C = len(self.pools)
        base, extra = divmod(self.batch_size, C)
        order = [(self.turn + j) % C for j in range(C)]
        self.turn += 1
        idx = [self._take(i, base + (1 if rank < extra else 0)) for rank, i in enumerate(order)]
        return np.sort(np.concatenate(idx))


def _group_norms(model: Model, grad: np.ndarray) -> dict:
    return {name: float(np.linalg.norm(grad[sl])) for name, sl in model.params.named_slices()}


def accuracy(model: Model, x: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return float("nan")
    return float(np.mean(np.argmax(model.logits(x), axis=1) == y))


def _recorded(step: int, cfg: TrainConfig) -> bool:
    return step <= cfg.telemetry_cap or step % cfg.sparse_every == 0 or step == cfg.steps


def train_run(cfg: TrainConfig, data: Splits, model: Model | None = None, out_dir=None) -> RunResult:
    """Train, evaluate on val/test, and flag dead seeds. Deterministic in ``(cfg, data)``."""
    train, val, test = data.train, data.val, data.test
    n_classes = data.n_classes
    if model is None:
        ss = np.random.SeedSequence([int(cfg.seed), 0])
        model = build(cfg.spec(), n_classes, train.channels, train.length, seed=ss)
    xtr = model.prepare(train.x)
    sampler = BatchSampler(train.y, min(cfg.batch_size, len(train.y)),
                           np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 1])))
    state = AdamState.zeros(model.params.size)
    trace, reason = [], ""
    for step in range(cfg.steps + 1):
        idx = sampler.next()
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grad = model.loss_and_grad(xtr[idx], train.y[idx])
        if _recorded(step, cfg):
            groups = _group_norms(model, grad)
            trace.append(StepRecord(step, loss, float(np.linalg.norm(grad)),
                                    float(np.max(np.abs(model.params.values))), groups))
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            reason = "diverged"
            break
        if step < cfg.steps:
            try:
                model.params.values = adamw_step(model.params.values, grad, state, cfg)
            except DivergenceError:
                reason = "diverged"
                break
            model.params.step = state.t
            if not np.all(np.isfinite(model.params.values)):
                reason = "diverged"
                break
    if reason == "diverged":
        val_acc = test_acc = 1.0 / n_classes
        dead = True
    else:
        val_acc = accuracy(model, model.prepare(val.x), val.y)
        test_acc = accuracy(model, model.prepare(test.x), test.y)
        dead = detect_dead(trace, test_acc, n_classes)
        reason = "collapsed" if dead else ""
    echo = asdict(cfg)
    echo.update(view=model.view, resolved_width=model.width, n_classes=n_classes)
    result = RunResult(trace[-1].loss, val_acc, test_acc, dead, reason, model.cost(), echo, trace)
    if out_dir is not None:
        write_run(result, out_dir)
    return result


def telemetry_rows(trace) -> tuple:
    groups = list(trace[0].groups) if trace else []
    header = ["step", "loss", "total_grad_norm", "head_weight_grad_norm", "max_param_abs"] + groups
    rows = [[r.step, r.loss, r.total_grad_norm, r.head_weight_grad_norm, r.max_param_abs]
            + [r.groups[g] for g in groups] for r in trace]
    return header, rows


def write_run(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header, rows = telemetry_rows(result.telemetry)
    with open(out / "telemetry.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    result.telemetry_path = str(out / "telemetry.csv")
    (out / "result.json").write_text(json.dumps(result.as_dict(), indent=2, sort_keys=True) + "\n")
    return out
