"""Report tables derived from a sweep's records.csv.

CSV rows are computed first; markdown is rendered from those same rows.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .protocol import RULES, ProtocolError, check_grid, dead_tally, read_records, select


def accuracy_grid(records) -> tuple:
    """Condition x family grid of mean test accuracy (single-trial suites)."""
    conds = list(dict.fromkeys(r.condition for r in records))
    fams = list(dict.fromkeys(r.family for r in records))
    cells = {}
    for r in records:
        cells.setdefault((r.condition, r.family), []).append(r.test_acc)
    rows = []
    for c in conds:
        row = {"condition": c}
        for f in fams:
            v = cells.get((c, f))
            row[f] = float(np.mean(v)) if v else float("nan")
        rows.append(row)
    return ["condition"] + fams, rows


def selection_table(records) -> tuple:
    """One row per rule: complex accuracy, best real, gap, paired CI and dead tally."""
    fields = ["rule", "anchor_trial", "complex", "best_real", "best_real_family", "gap_pp",
              "gap_ci_pp", "dead_real"]
    rows = []
    for rule in RULES:
        rep = select(records, rule)
        best = rep.best_real
        gap = next((g for g in rep.gaps if g.baseline == best), None)
        if rule == "matched_shared":
            dead, total = dead_tally(records, trial=rep.anchor_trial)
        else:
            pool = [r for r in records if r.family != rep.anchor and r.trial == rep.families[r.family].trial]
            dead, total = dead_tally(pool)
        rows.append({
            "rule": rule,
            "anchor_trial": rep.anchor_trial,
            "complex": rep.families[rep.anchor].mean_test,
            "best_real": rep.families[best].mean_test,
            "best_real_family": best,
            "gap_pp": 100 * rep.best_real_gap,
            "gap_ci_pp": 100 * gap.ci_half_width if gap else float("nan"),
            "dead_real": f"{dead}/{total}",
        })
    return fields, rows


def family_table(records, rule: str) -> tuple:
    rep = select(records, rule)
    fields = ["family", "trial", "mean_test", "std_test", "dead", "n", "gap_pp", "gap_ci_pp"]
    gaps = {g.baseline: g for g in rep.gaps}
    rows = []
    for fam, fr in rep.families.items():
        g = gaps.get(fam)
        rows.append({"family": fam, "trial": fr.trial, "mean_test": fr.mean_test, "std_test": fr.std_test,
                     "dead": fr.dead, "n": fr.n, "gap_pp": 100 * g.gap if g else float("nan"),
                     "gap_ci_pp": 100 * g.ci_half_width if g else float("nan")})
    return fields, rows


def _cell(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.4f}"
    return str(v)


def to_csv(fields, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def to_markdown(fields, rows) -> str:
    lines = ["| " + " | ".join(fields) + " |", "|" + "---|" * len(fields)]
    for row in rows:
        lines.append("| " + " | ".join(_cell(row[f]) for f in fields) + " |")
    return "\n".join(lines) + "\n"


def build_reports(sweep_dir) -> dict:
    """Name -> (fields, rows). Raises FileNotFoundError / ProtocolError."""
    path = Path(sweep_dir) / "records.csv"
    if not path.is_file():
        raise FileNotFoundError(f"no records.csv in {sweep_dir}")
    records = read_records(path)
    if not records:
        raise ProtocolError(f"{path} holds no records")
    trials = {r.trial for r in records}
    if len(trials) > 1:
        check_grid(records)
        out = {"selection": selection_table(records)}
        for rule in RULES:
            out[f"families_{rule}"] = family_table(records, rule)
        return out
    return {"accuracy": accuracy_grid(records)}


def write_reports(sweep_dir, fmt: str = "csv", out_dir=None) -> list:
    tables = build_reports(sweep_dir)
    out = Path(out_dir or sweep_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (fields, rows) in tables.items():
        text = to_csv(fields, rows)
        p = out / f"report_{name}.csv"
        p.write_text(text)
        written.append(p)
        if fmt == "md":
            # re-read the CSV so markdown never diverges from it
            back = list(csv.DictReader(io.StringIO(text)))
            parsed = [{k: _parse(v) for k, v in r.items()} for r in back]
            p = out / f"report_{name}.md"
            p.write_text(to_markdown(fields, parsed))
            written.append(p)
    return written


def _parse(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v
