"""Experiment grids: every suite expands to a list of :class:`RunSpec` cells,
runs them (optionally in a process pool), and writes a sweep directory.

Sweep directory layout::

    records.csv                 one SweepRecord per (condition, family, trial, seed)
    summary.csv                 per (condition, family) mean/std test accuracy
    selection_matched.json      replication only
    selection_independent.json  replication only
    factorial.csv               factorial only
    trilemma.csv                trilemma only
    runs/<condition>/<family>/t<trial>_s<seed>/{telemetry.csv,result.json}
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import activations as A
from .eeggen import EegConfig, make_eeg_dataset
from .eeggen import TASKS as EEG_TASKS
from .protocol import (TELEMETRY_FAMILIES, FactorialCell, SweepRecord, Trial, build_search_space,
                       dead_tally, factorial_csv, records_csv, select)
from .qmgen import QuantumConfig, make_quantum_dataset
from .qmgen import TASKS as QM_TASKS
from .rfgen import STRESS_TASKS, RfCondition, make_dataset
from .rfgen import TASKS as RF_TASKS
from .train import TrainConfig, train_run

SUITES = ("rf_stress", "quantum_pilot", "eeg_pilot", "replication", "factorial", "trilemma")
VIEW_FAMILIES = ("complex", "real_stacked", "real_phase", "real_polar", "real_magnitude")
REPLICATION_FAMILIES = ("complex",) + TELEMETRY_FAMILIES
HIGH_LR = 0.0236
LOW_LR = 0.0024


class SuiteError(RuntimeError):
    pass


DEFAULTS = {
    "rf_stress": {
        "domain": "rf", "conditions": list(STRESS_TASKS),
        "families": ["complex", "real_stacked", "real_phase", "real_magnitude"],
        "activation": "crelu", "seeds": 6, "steps": 400, "lr": 3e-3, "width": 32,
        "batch_size": 64, "weight_decay": 0.01,
    },
    "quantum_pilot": {
        "domain": "quantum", "conditions": ["momentum", "potential_inverse", "global_shift", "global_aug"],
        "families": list(VIEW_FAMILIES), "activation": "crelu", "seeds": 3, "steps": 140,
        "lr": 3e-3, "width": 32, "batch_size": 64, "weight_decay": 0.01,
    },
    "eeg_pilot": {
        "domain": "eeg", "conditions": list(EEG_TASKS), "families": list(VIEW_FAMILIES),
        "activation": "crelu", "seeds": 3, "steps": 120, "lr": 3e-3, "width": 32,
        "batch_size": 64, "weight_decay": 0.01,
    },
    "replication": {
        "domain": "rf", "conditions": ["awgn_replication"], "families": list(REPLICATION_FAMILIES),
        "activation": "crelu", "seeds": 3, "steps": 200, "trials": 16,
    },
    "factorial": {
        "domain": "rf", "conditions": ["awgn_replication"], "families": list(TELEMETRY_FAMILIES),
        "activations": ["crelu", "zrelu"], "lrs": {"high": HIGH_LR, "low": LOW_LR},
        # matched-trial configuration per activation (lr is overridden per cell)
        "base": {"crelu": {"lr": HIGH_LR, "width": 96}, "zrelu": {"lr": LOW_LR, "width": 32}},
        "seeds": 3, "steps": 200, "batch_size": 64, "weight_decay": 0.01,
    },
    "trilemma": {"activations": list(A.COMPLEX_ACTIVATIONS), "init_seeds": [0, 1, 2, 3, 4]},
}


def resolve_config(name: str, overrides: dict | None = None) -> dict:
    if name not in SUITES:
        raise SuiteError(f"unknown suite {name!r}; expected one of {SUITES}")
    cfg = json.loads(json.dumps(DEFAULTS[name]))
    for k, v in (overrides or {}).items():
        if k not in cfg:
            raise SuiteError(f"suite {name} has no setting {k!r}")
        cfg[k] = v
    return cfg


def seed_list(master: int, n: int) -> list:
    return [int(master) * 1000 + i for i in range(int(n))]


# -- datasets -------------------------------------------------------------

def _condition(domain: str, name: str, seed: int):
    if domain == "rf":
        return RfCondition(task=name, seed=seed)
    if domain == "quantum":
        return QuantumConfig(task=name, seed=seed)
    if domain == "eeg":
        return EegConfig(task=name, seed=seed)
    raise SuiteError(f"unknown domain {domain!r}")


def condition_names(domain: str) -> tuple:
    return {"rf": tuple(RF_TASKS), "quantum": QM_TASKS, "eeg": EEG_TASKS}[domain]


@lru_cache(maxsize=8)
def dataset(domain: str, name: str, seed: int):
    cond = _condition(domain, name, seed)
    if domain == "rf":
        return make_dataset(cond)
    if domain == "quantum":
        return make_quantum_dataset(cond)
    return make_eeg_dataset(cond)


# -- cells ----------------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    domain: str
    condition: str
    family: str
    activation: str
    trial: Trial
    seed: int
    steps: int
    out_dir: str | None = None

    def train_config(self) -> TrainConfig:
        t = self.trial
        return TrainConfig(lr=t.lr, weight_decay=t.weight_decay, batch_size=t.batch_size, steps=self.steps,
                           seed=self.seed, family=self.family, activation=self.activation, width=t.width)

    def run_dir(self, root) -> Path:
        return Path(root) / "runs" / self.condition / self.family / f"t{self.trial.index}_s{self.seed}"


@dataclass
class CellResult:
    spec: RunSpec
    record: SweepRecord | None
    reason: str = ""
    error: str = ""


def execute(spec: RunSpec) -> CellResult:
    """Run one grid cell. Errors are captured so the grid can report holes."""
    try:
        data = dataset(spec.domain, spec.condition, spec.seed)
        res = train_run(spec.train_config(), data, out_dir=spec.out_dir)
    except Exception as exc:  # a failing cell becomes a hole, not a crash
        return CellResult(spec, None, error=f"{type(exc).__name__}: {exc}")
    step1 = res.record(1)
    rec = SweepRecord(spec.condition, spec.family, spec.activation, spec.trial.index, spec.seed,
                      float(res.val_acc), float(res.test_acc), bool(res.dead), float(spec.trial.lr),
                      int(res.config["resolved_width"]), float(res.train_loss),
                      float(step1.head_weight_grad_norm) if step1 else float("nan"))
    return CellResult(spec, rec, res.reason)


def run_cells(specs, jobs: int = 1, progress=None) -> list:
    """Results in the order of ``specs`` regardless of ``jobs``."""
    specs = list(specs)
    if jobs <= 1 or len(specs) <= 1:
        out = []
        for s in specs:
            out.append(execute(s))
            if progress:
                progress(out[-1])
        return out
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        out = []
        for r in pool.map(execute, specs, chunksize=1):
            out.append(r)
            if progress:
                progress(r)
        return out


# -- summaries ------------------------------------------------------------

def summarize(records) -> list:
    """Mean/std test accuracy and dead count per (condition, family, activation, trial)."""
    groups = {}
    for r in records:
        groups.setdefault((r.condition, r.family, r.activation, r.trial), []).append(r)
    rows = []
    for (cond, fam, act, trial), rs in sorted(groups.items()):
        acc = np.array([r.test_acc for r in rs])
        rows.append({"condition": cond, "family": fam, "activation": act, "trial": trial, "n": len(rs),
                     "mean_test": float(acc.mean()), "std_test": float(acc.std(ddof=1)) if len(rs) > 1 else 0.0,
                     "mean_val": float(np.mean([r.val_acc for r in rs])),
                     "dead": int(sum(r.dead for r in rs))})
    return rows


SUMMARY_FIELDS = ["condition", "family", "activation", "trial", "n", "mean_test", "std_test", "mean_val", "dead"]


def _csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def summary_csv(records) -> str:
    return _csv(summarize(records), SUMMARY_FIELDS)


def mean_acc(records, condition: str, family: str) -> float:
    accs = [r.test_acc for r in records if r.condition == condition and r.family == family]
    return float(np.mean(accs)) if accs else float("nan")


@dataclass
class SuiteResult:
    name: str
    out_dir: Path
    records: list
    failures: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def _finish(name, out, results, telemetry: bool) -> SuiteResult:
    records = [r.record for r in results if r.record is not None]
    failures = [f"{r.spec.condition}/{r.spec.family}/trial{r.spec.trial.index}/seed{r.spec.seed}: {r.error}"
                for r in results if r.record is None]
    (out / "records.csv").write_text(records_csv(records))
    (out / "summary.csv").write_text(summary_csv(records))
    arts = ["records.csv", "summary.csv"] + (["runs/"] if telemetry else [])
    if failures:
        (out / "failures.txt").write_text("\n".join(failures) + "\n")
        arts.append("failures.txt")
    return SuiteResult(name, out, records, failures, arts)


# -- suites ---------------------------------------------------------------

def _grid_suite(name, cfg, master_seed, out, jobs, telemetry, progress) -> SuiteResult:
    trial = Trial(0, float(cfg["lr"]), int(cfg["width"]), int(cfg["batch_size"]), float(cfg["weight_decay"]))
    valid = condition_names(cfg["domain"])
    for c in cfg["conditions"]:
        if c not in valid:
            raise SuiteError(f"unknown {cfg['domain']} condition {c!r}")
    specs = []
    for cond in cfg["conditions"]:
        for fam in cfg["families"]:
            for s in seed_list(master_seed, cfg["seeds"]):
                sp = RunSpec(cfg["domain"], cond, fam, cfg["activation"], trial, s, int(cfg["steps"]))
                if telemetry:
                    sp = replace(sp, out_dir=str(sp.run_dir(out)))
                specs.append(sp)
    return _finish(name, out, run_cells(specs, jobs, progress), telemetry)


def _replication(cfg, master_seed, out, jobs, telemetry, progress) -> SuiteResult:
    space = build_search_space(master_seed, int(cfg["trials"]))
    specs = []
    for cond in cfg["conditions"]:
        for t in space.trials:
            for fam in cfg["families"]:
                for s in seed_list(master_seed, cfg["seeds"]):
                    sp = RunSpec("rf", cond, fam, cfg["activation"], t, s, int(cfg["steps"]))
                    if telemetry:
                        sp = replace(sp, out_dir=str(sp.run_dir(out)))
                    specs.append(sp)
    res = _finish("replication", out, run_cells(specs, jobs, progress), telemetry)
    (out / "search_space.json").write_text(json.dumps(
        {"master_seed": space.master_seed, "trials": [t.as_dict() for t in space.trials]}, indent=2) + "\n")
    res.artifacts.append("search_space.json")
    if res.ok:
        for rule, fname in (("matched_shared", "selection_matched.json"), ("independent", "selection_independent.json")):
            rep = select(res.records, rule)
            d = rep.as_dict()
            d["dead_real"] = list(dead_tally(res.records, trial=rep.anchor_trial)) if rule == "matched_shared" else None
            (out / fname).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
            res.artifacts.append(fname)
            res.extra[rule] = rep
    return res


def _factorial(cfg, master_seed, out, jobs, telemetry, progress) -> SuiteResult:
    cells, specs = [], []
    for act in cfg["activations"]:
        base = cfg["base"][act]
        for label, lr in cfg["lrs"].items():
            t = Trial(len(cells), float(lr), int(base["width"]), int(cfg["batch_size"]), float(cfg["weight_decay"]))
            cells.append((act, label, t))
            for fam in cfg["families"]:
                for s in seed_list(master_seed, cfg["seeds"]):
                    sp = RunSpec(cfg["domain"], cfg["conditions"][0], fam, act, t, s, int(cfg["steps"]))
                    if telemetry:
                        sp = replace(sp, out_dir=str(sp.run_dir(out)))
                    specs.append(sp)
    res = _finish("factorial", out, run_cells(specs, jobs, progress), telemetry)
    report = []
    for act, label, t in cells:
        rs = [r for r in res.records if r.activation == act and r.trial == t.index]
        dead, total = dead_tally(rs, families=tuple(cfg["families"]))
        grads = [r.step1_head_grad for r in rs if math.isfinite(r.step1_head_grad)]
        report.append(FactorialCell(act, label, t.lr, dead, total, float(max(grads)) if grads else float("nan"),
                                    [r.train_loss for r in rs if r.dead], t))
    (out / "factorial.csv").write_text(factorial_csv(report))
    res.artifacts.append("factorial.csv")
    res.extra["cells"] = report
    return res


def _trilemma(cfg, master_seed, out, jobs, telemetry, progress) -> SuiteResult:
    reports = [A.trilemma_scan(a, init_seeds=tuple(cfg["init_seeds"])) for a in cfg["activations"]]
    (out / "trilemma.csv").write_text(A.trilemma_csv(reports))
    res = SuiteResult("trilemma", out, [], artifacts=["trilemma.csv"])
    res.extra["reports"] = reports
    return res


_RUNNERS = {
    "rf_stress": lambda *a: _grid_suite("rf_stress", *a),
    "quantum_pilot": lambda *a: _grid_suite("quantum_pilot", *a),
    "eeg_pilot": lambda *a: _grid_suite("eeg_pilot", *a),
    "replication": _replication,
    "factorial": _factorial,
    "trilemma": _trilemma,
}


def run_suite(name: str, master_seed: int, out_dir, overrides: dict | None = None, jobs: int = 1,
              telemetry: bool = True, progress=None) -> SuiteResult:
    cfg = resolve_config(name, overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[name](cfg, int(master_seed), out, int(jobs), telemetry, progress)
