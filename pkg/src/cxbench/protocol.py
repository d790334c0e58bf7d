"""Search space, sweep records, the two selection rules, paired intervals, dead tallies."""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from itertools import product
from pathlib import Path

import numpy as np
from scipy import stats

N_TRIALS = 16
LR_BOX = (1e-3, 5e-2)
WIDTHS = (16, 32, 64, 96)
UNSTABLE_LR = 2.2e-2
STABLE_LR = 3e-3
TELEMETRY_FAMILIES = ("real_stacked", "real_param_matched", "real_flop_matched")
RULES = ("matched_shared", "independent")


class ProtocolError(RuntimeError):
    pass


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class Trial:
    index: int
    lr: float
    width: int
    batch_size: int = 64
    weight_decay: float = 0.01

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchSpace:
    trials: list
    master_seed: int

    def __len__(self):
        return len(self.trials)

    def __getitem__(self, i) -> Trial:
        return self.trials[i]

    @property
    def lrs(self) -> np.ndarray:
        return np.array([t.lr for t in self.trials])


def build_search_space(master_seed: int, n: int = N_TRIALS, max_draws: int = 1000) -> SearchSpace:
    """``n`` trials, lr log-uniform on ``LR_BOX`` and width from ``WIDTHS``.

    Draws repeat (deterministically) until the lr set has at least one value in
    the unstable regime and one in the stable regime.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(master_seed), 16]))
    lo, hi = np.log(LR_BOX[0]), np.log(LR_BOX[1])
    for _ in range(max_draws):
        lrs = np.exp(rng.uniform(lo, hi, n))
        widths = rng.choice(WIDTHS, n)
        if lrs.max() >= UNSTABLE_LR and lrs.min() <= STABLE_LR:
            break
    else:
        raise ProtocolError("could not draw a search space covering both lr regimes")
    trials = [Trial(i, float(f"{lr:.4g}"), int(w)) for i, (lr, w) in enumerate(zip(lrs, widths))]
    return SearchSpace(trials, int(master_seed))


@dataclass
class SweepRecord:
    condition: str
    family: str
    activation: str
    trial: int
    seed: int
    val_acc: float
    test_acc: float
    dead: bool
    lr: float = float("nan")
    width: int = 0
    train_loss: float = float("nan")
    step1_head_grad: float = float("nan")

    def key(self) -> tuple:
        return (self.condition, self.family, self.activation, self.trial, self.seed)


RECORD_FIELDS = [f.name for f in fields(SweepRecord)]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in sorted(records, key=SweepRecord.key):
        w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


def write_records(path, records) -> Path:
    path = Path(path)
    path.write_text(records_csv(records))
    return path


def read_records(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(SweepRecord(
                row["condition"], row["family"], row["activation"], int(row["trial"]), int(row["seed"]),
                float(row["val_acc"]), float(row["test_acc"]), row["dead"] == "1",
                float(row["lr"]), int(row["width"]), float(row["train_loss"]), float(row["step1_head_grad"]),
            ))
    return out


def check_grid(records, families=None, trials=None, seeds=None) -> None:
    """Raise :class:`ProtocolError` unless every (family, trial, seed) cell holds exactly one record."""
    if not records:
        raise ProtocolError("no sweep records")
    families = sorted({r.family for r in records}) if families is None else families
    trials = sorted({r.trial for r in records}) if trials is None else trials
    seeds = sorted({r.seed for r in records}) if seeds is None else seeds
    count = defaultdict(int)
    for r in records:
        count[(r.family, r.trial, r.seed)] += 1
    missing = [c for c in product(families, trials, seeds) if count[c] == 0]
    dupes = [c for c, n in count.items() if n > 1]
    if missing or dupes:
        msg = []
        if missing:
            msg.append("missing cells: " + ", ".join(f"{f}/trial{t}/seed{s}" for f, t, s in missing))
        if dupes:
            msg.append("duplicate cells: " + ", ".join(f"{f}/trial{t}/seed{s}" for f, t, s in sorted(dupes)))
        raise ProtocolError("; ".join(msg))


def paired_ci(diffs, level: float = 0.95) -> tuple:
    """Mean and t half-width of paired differences."""
    d = np.asarray(diffs, dtype=float)
    n = d.size
    if n < 2:
        raise StatsError("a paired interval needs at least two matched seeds")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return mean, 0.0
    tcrit = stats.t.ppf(0.5 + level / 2, n - 1)
    return mean, float(tcrit * sd / math.sqrt(n))


@dataclass
class FamilyResult:
    family: str
    trial: int
    mean_val: float
    mean_test: float
    std_test: float
    dead: int
    n: int


@dataclass
class GapRow:
    baseline: str
    gap: float
    ci_half_width: float
    n: int


@dataclass
class SelectionReport:
    rule: str
    anchor: str
    anchor_trial: int
    families: dict
    gaps: list
    best_real: str
    best_real_gap: float
    condition: str = ""
    activation: str = ""

    def as_dict(self) -> dict:
        return {
            "rule": self.rule,
            "condition": self.condition,
            "activation": self.activation,
            "anchor": self.anchor,
            "anchor_trial": self.anchor_trial,
            "families": {k: asdict(v) for k, v in self.families.items()},
            "gaps": [asdict(g) for g in self.gaps],
            "best_real": self.best_real,
            "best_real_gap": self.best_real_gap,
        }


def _argmax_trial(means: dict) -> int:
    # lower trial index wins ties
    best = max(means.values())
    return min(t for t, v in means.items() if v == best)


def select(records, rule: str, anchor: str = "complex") -> SelectionReport:
    """Apply one selection rule to a complete (family x trial x seed) grid.

    Validation score of a trial is its mean val accuracy over seeds.
    ``matched_shared`` evaluates every family at the anchor's best trial;
    ``independent`` lets each family pick its own.
    """
    if rule not in RULES:
        raise ProtocolError(f"unknown selection rule {rule!r}; expected one of {RULES}")
    records = list(records)
    check_grid(records)
    fams = sorted({r.family for r in records})
    if anchor not in fams:
        raise ProtocolError(f"anchor family {anchor!r} has no records")
    cell = defaultdict(list)
    for r in sorted(records, key=lambda r: (r.family, r.trial, r.seed)):
        cell[(r.family, r.trial)].append(r)
    trials = sorted({r.trial for r in records})
    val = {f: {t: float(np.mean([r.val_acc for r in cell[(f, t)]])) for t in trials} for f in fams}
    anchor_trial = _argmax_trial(val[anchor])
    chosen = {f: anchor_trial if rule == "matched_shared" else _argmax_trial(val[f]) for f in fams}
    results = {}
    for f in fams:
        rs = cell[(f, chosen[f])]
        test = np.array([r.test_acc for r in rs])
        results[f] = FamilyResult(f, chosen[f], val[f][chosen[f]], float(test.mean()),
                                  float(test.std(ddof=1)) if len(test) > 1 else 0.0,
                                  int(sum(r.dead for r in rs)), len(rs))
    gaps = []
    anchor_by_seed = {r.seed: r.test_acc for r in cell[(anchor, chosen[anchor])]}
    for f in fams:
        if f == anchor:
            continue
        other = {r.seed: r.test_acc for r in cell[(f, chosen[f])]}
        diffs = [anchor_by_seed[s] - other[s] for s in sorted(anchor_by_seed)]
        if len(diffs) >= 2:
            m, h = paired_ci(diffs)
        else:
            m, h = float(diffs[0]), float("nan")
        gaps.append(GapRow(f, m, h, len(diffs)))
    reals = [f for f in fams if f != anchor]
    best = max(reals, key=lambda f: (results[f].mean_test, -fams.index(f))) if reals else ""
    best_gap = results[anchor].mean_test - results[best].mean_test if best else float("nan")
    first = records[0]
    return SelectionReport(rule, anchor, anchor_trial, results, gaps, best, best_gap,
                           first.condition, first.activation)


def dead_tally(records, families=TELEMETRY_FAMILIES, trial: int | None = None) -> tuple:
    """``(dead, total)`` over the given families, optionally at one trial."""
    pool = [r for r in records if r.family in families and (trial is None or r.trial == trial)]
    return sum(bool(r.dead) for r in pool), len(pool)


@dataclass
class FactorialCell:
    activation: str
    lr_label: str
    lr: float
    dead: int
    total: int
    step1_head_grad_max: float
    dead_final_losses: list = field(default_factory=list)
    base: Trial | None = None

    def row(self) -> dict:
        return {
            "activation": self.activation,
            "lr_label": self.lr_label,
            "lr": self.lr,
            "dead": self.dead,
            "total": self.total,
            "step1_head_grad_max": self.step1_head_grad_max,
            "width": self.base.width if self.base else "",
            "batch_size": self.base.batch_size if self.base else "",
            "weight_decay": self.base.weight_decay if self.base else "",
        }


FACTORIAL_FIELDS = ["activation", "lr_label", "lr", "dead", "total", "step1_head_grad_max",
                    "width", "batch_size", "weight_decay"]


def factorial_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, FACTORIAL_FIELDS, lineterminator="\n")
    w.writeheader()
    for c in cells:
        w.writerow({k: _fmt(v) for k, v in c.row().items()})
    return buf.getvalue()
