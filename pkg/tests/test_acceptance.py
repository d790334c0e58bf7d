"""Acceptance criteria 1-10. Each test records one pass/fail line.

The suite-backed criteria drive the real CLI on the default presets, so this
module takes a while (see the README for timings).
"""
import csv
import json
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE

from cxbench import activations as A
from cxbench import cli
from cxbench import layers as L
from cxbench.families import FAMILIES, FamilySpec, build
from cxbench.protocol import UNSTABLE_LR, paired_ci
from cxbench.train import cross_entropy
from cxbench.wirtinger import finite_diff_check

SEED = 0
LN3 = math.log(3)


def verdict(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}", file=sys.stderr)
    assert ok, detail


def suite(name, out, *extra):
    t0 = time.time()
    code = cli.main(["suite", name, "--seed", str(SEED), "--out", str(out), *extra])
    assert code == 0, f"suite {name} exited {code}"
    return time.time() - t0


def mean_acc(rows, cond, fam):
    return float(np.mean([float(r["test_acc"]) for r in rows if r["condition"] == cond and r["family"] == fam]))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- 1 --------------------------------------------------------------------

def _kink_free(family, act, rng):
    for attempt in range(500):
        # small inputs keep ComplexTanh pre-activations away from its poles
        x = 0.2 * (rng.standard_normal((4, 1, 21)) + 1j * rng.standard_normal((4, 1, 21)))
        m = build(FamilySpec(family, activation=act, width=4), 3, 1, 21, seed=[int(rng.integers(1 << 30)), attempt])
        for name, sl in m.params.named_slices():
            if "bias" in name:
                m.params.values[sl] = rng.uniform(-0.5, 0.5, sl.stop - sl.start)
        xm = m.prepare(x)
        if m.kink_clearance(xm) >= 1.0:
            return m, (xm, rng.integers(0, 3, 4))
    raise AssertionError(f"no kink-free draw for {family}/{act}")


def test_criterion_01_gradient_correctness():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    combos = [("complex", a) for a in A.COMPLEX_ACTIVATIONS]
    combos += [(f, "crelu") for f in rng.choice(FAMILIES[1:], 4, replace=False)]
    errs = {}
    for fam, act in combos:
        m, batch = _kink_free(fam, act, rng)
        errs[f"{fam}/{act}"] = finite_diff_check(m, batch)
    worst = max(errs.values())
    dt = time.time() - t0
    verdict(1, len(errs) == 10 and worst <= 1e-4 and dt < 60,
            f"10 models, max rel err {worst:.2e} (<= 1e-4), {dt:.1f} s")


# -- 2 --------------------------------------------------------------------

def test_criterion_02_equivalence_witness():
    rng = np.random.default_rng(SEED)
    dev = 0.0
    for _ in range(100):
        cin, cout = rng.integers(1, 5, 2)
        layer = L.ComplexConv1d.random(rng, int(cin), int(cout), k=5, stride=int(rng.integers(1, 3)))
        x = rng.standard_normal((2, cin, 24)) + 1j * rng.standard_normal((2, cin, 24))
        y = L.cconv_forward(layer, x)
        yr = L.constrained_real_forward(layer.taps(), L.stack_channels(x), layer.bias, layer.stride)
        dev = max(dev, float(np.max(np.abs(L.stack_channels(y) - yr))))
    defect = 0.0
    for _ in range(100):
        layer = L.ComplexConv1d.random(rng, 2, 3, bias=False)
        x = rng.standard_normal((2, 24)) + 1j * rng.standard_normal((2, 24))
        rot = np.exp(1j * rng.uniform(0, 2 * np.pi))
        defect = max(defect, float(np.max(np.abs(L.cconv_forward(layer, rot * x) - rot * L.cconv_forward(layer, x)))))
    verdict(2, dev <= 1e-6 and defect <= 1e-9,
            f"max deviation {dev:.1e} (<= 1e-6), phase defect {defect:.1e} (<= 1e-9)")


# -- 3 --------------------------------------------------------------------

def test_criterion_03_trilemma(tmp_path):
    assert cli.main(["trilemma", "--out", str(tmp_path)]) == 0
    rows = {r["activation"]: r for r in read_rows(tmp_path / "trilemma.csv")}
    ct, sg = rows["ctanh"], rows["siglog"]
    both = [a for a, r in rows.items() if float(r["cr_median"]) <= 1e-8 and r["bounded"] == "true"]
    ok = (float(ct["cr_median"]) <= 1e-8 and ct["bounded"] == "false"
          and sg["bounded"] == "true" and float(sg["cr_median"]) > 1e-3 and not both)
    verdict(3, ok, f"ctanh cr {float(ct['cr_median']):.1e} bounded={ct['bounded']}; "
                   f"siglog cr {float(sg['cr_median']):.3f} bounded={sg['bounded']}; "
                   f"holomorphic and bounded on grid: {both or 'none'}")


# -- 4 and 10 share the rf_stress sweep -------------------------------------

@pytest.fixture(scope="module")
def rf_stress(tmp_path_factory):
    root = tmp_path_factory.mktemp("rf_stress")
    dt = suite("rf_stress", root / "a")
    return root, dt


def test_criterion_04_rf_stress_pattern(rf_stress):
    root, dt = rf_stress
    rows = read_rows(root / "a" / "records.csv")
    acc = lambda c, f: mean_acc(rows, c, f)  # noqa: E731
    psk_mag = acc("psk_only", "real_magnitude")
    checks = {
        "psk magnitude near chance": 0.28 <= psk_mag <= 0.40,
        "psk complex/phase >= 0.65": min(acc("psk_only", "complex"), acc("psk_only", "real_phase")) >= 0.65,
        "qam magnitude > phase": acc("qam_only", "real_magnitude") > acc("qam_only", "real_phase"),
        "rotation drops below 0.45": all(acc("fixed_rotation_psk", f) < 0.45 and acc("psk_only", f) >= 0.65
                                         for f in ("complex", "real_stacked", "real_phase")),
        "augmentation recovers >= 0.15": acc("rotation_aug_psk", "complex")
        >= acc("fixed_rotation_psk", "complex") + 0.15,
        "runtime <= 30 min": dt <= 1800,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"psk mag {psk_mag:.3f}, psk complex {acc('psk_only', 'complex'):.3f}, "
              f"qam mag/phase {acc('qam_only', 'real_magnitude'):.3f}/{acc('qam_only', 'real_phase'):.3f}, "
              f"rotated complex {acc('fixed_rotation_psk', 'complex'):.3f} -> aug "
              f"{acc('rotation_aug_psk', 'complex'):.3f}, {dt / 60:.1f} min")
    verdict(4, not failed, detail + (f"; failed: {failed}" if failed else ""))


def test_criterion_10_determinism(rf_stress):
    root, _ = rf_stress
    suite("rf_stress", root / "b")
    a = (root / "a" / "records.csv").read_bytes()
    b = (root / "b" / "records.csv").read_bytes()
    verdict(10, a == b, f"records.csv byte-identical across two runs ({len(a)} bytes)")


# -- 5 --------------------------------------------------------------------

def test_criterion_05_quantum_pattern(tmp_path):
    dt = suite("quantum_pilot", tmp_path)
    rows = read_rows(tmp_path / "records.csv")
    acc = lambda c, f: mean_acc(rows, c, f)  # noqa: E731
    views = {f: acc("momentum", f) for f in ("complex", "real_stacked", "real_phase", "real_polar")}
    mag = acc("momentum", "real_magnitude")
    drop = acc("potential_inverse", "complex") - acc("global_shift", "complex")
    ok = min(views.values()) >= 0.95 and 0.18 <= mag <= 0.32 and drop >= 0.10 and dt <= 600
    verdict(5, ok, f"momentum views min {min(views.values()):.3f}, magnitude {mag:.3f}, "
                   f"global-shift drop {drop:.3f}, {dt / 60:.1f} min")


# -- 6 --------------------------------------------------------------------

def test_criterion_06_eeg_pattern(tmp_path):
    dt = suite("eeg_pilot", tmp_path)
    rows = read_rows(tmp_path / "records.csv")
    acc = lambda c, f: mean_acc(rows, c, f)  # noqa: E731
    pl_phase, pl_mag = acc("phase_locking", "real_phase"), acc("phase_locking", "real_magnitude")
    ae_mag, ae_phase = acc("amplitude_event", "real_magnitude"), acc("amplitude_event", "real_phase")
    pac = acc("pac", "real_polar") - max(acc("pac", "real_phase"), acc("pac", "real_magnitude"))
    ok = (pl_phase >= 0.95 and 0.18 <= pl_mag <= 0.32 and ae_mag >= 0.85 and ae_phase <= 0.35
          and pac >= 0.30 and dt <= 600)
    verdict(6, ok, f"phase-locking phase/mag {pl_phase:.3f}/{pl_mag:.3f}, amplitude mag/phase "
                   f"{ae_mag:.3f}/{ae_phase:.3f}, pac polar margin {pac:.3f}, {dt / 60:.1f} min")


# -- 7 --------------------------------------------------------------------

def test_criterion_07_dead_seed_factorial(tmp_path):
    dt = suite("factorial", tmp_path)
    cells = {(r["activation"], r["lr_label"]): r for r in read_rows(tmp_path / "factorial.csv")}
    hi, lo = cells[("crelu", "high")], cells[("crelu", "low")]
    ratio = float(hi["step1_head_grad_max"]) / float(lo["step1_head_grad_max"])
    tails = []
    for r in read_rows(tmp_path / "records.csv"):
        if r["dead"] == "1":
            tel = read_rows(tmp_path / "runs" / r["condition"] / r["family"] / f"t{r['trial']}_s{r['seed']}"
                            / "telemetry.csv")
            tails.append(float(np.mean([float(t["loss"]) for t in tel[-20:]])))
    ok = (int(hi["dead"]) >= 1 and ratio >= 10 and cells[("crelu", "low")]["dead"] == "0"
          and cells[("zrelu", "low")]["dead"] == "0" and all(abs(t - LN3) <= 0.02 for t in tails) and dt <= 900)
    verdict(7, ok, f"crelu high {hi['dead']}/{hi['total']} dead, step-1 head grad ratio {ratio:.1f}x, "
                   f"low cells {lo['dead']}/9 and {cells[('zrelu', 'low')]['dead']}/9, "
                   f"dead tail losses {[round(t, 4) for t in tails]}, {dt / 60:.1f} min")


# -- 8 --------------------------------------------------------------------

def test_criterion_08_selection_contrast(tmp_path):
    suite("replication", tmp_path, "--no-telemetry")
    matched = json.loads((tmp_path / "selection_matched.json").read_text())
    indep = json.loads((tmp_path / "selection_independent.json").read_text())
    space = json.loads((tmp_path / "search_space.json").read_text())
    anchor_lr = space["trials"][matched["anchor_trial"]]["lr"]
    g_m, g_i = matched["best_real_gap"], indep["best_real_gap"]
    same = matched["families"]["complex"] == indep["families"]["complex"]
    ok = anchor_lr >= UNSTABLE_LR and g_m - g_i >= 0.05 and same
    verdict(8, ok, f"anchor trial {matched['anchor_trial']} lr {anchor_lr:g}, gaps matched {100 * g_m:.2f} pp vs "
                   f"independent {100 * g_i:.2f} pp, complex identical={same}, dead real {matched['dead_real']}")


# -- 9 --------------------------------------------------------------------

def test_criterion_09_statistics_oracle():
    m, h = paired_ci([1, 2, 3])
    ce = max(abs(cross_entropy(np.zeros(C), 0) - math.log(C)) for C in (2, 3, 5, 10))
    verdict(9, abs(m - 2.0) < 5e-4 and abs(h - 2.484) <= 1e-3 and ce <= 1e-12,
            f"paired_ci mean {m:.3f} half-width {h:.3f}, uniform CE error {ce:.1e}")
