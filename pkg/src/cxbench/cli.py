"""``cxbench`` command line: gen, train, suite, select, report, trilemma.

Exit codes: 0 success, 1 experiment-level failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import activations as A
from .data import write_dataset
from .families import FAMILIES, ConfigError
from .protocol import RULES, ProtocolError, read_records, select
from .report import write_reports
from .suites import SUITES, SuiteError, condition_names, dataset, resolve_config, run_suite
from .train import TrainConfig, train_run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(out_dir, argv, cfg: dict, artifacts, started: float) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": ["cxbench"] + list(argv),
        "config": cfg,
        "config_hash": config_hash(cfg),
        "artifacts": sorted(str(a) for a in artifacts),
        "version": __version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def parse_sets(items) -> dict:
    """``key=value`` pairs; values are parsed as JSON when possible."""
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def master_seed(args, cfg: dict) -> int:
    # flag > env > config file > 0
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CXBENCH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"CXBENCH_SEED must be an integer, got {env!r}") from exc
    return int(cfg.get("seed", 0))


# -- commands -------------------------------------------------------------

def cmd_gen(args, argv) -> int:
    started = time.time()
    cfg = load_config(args.config)
    seed = master_seed(args, cfg)
    condition = args.condition or cfg.get("condition")
    if condition not in condition_names(args.domain):
        raise UsageError(f"unknown {args.domain} condition {condition!r}; expected one of {condition_names(args.domain)}")
    splits = dataset(args.domain, condition, seed)
    out = Path(args.out or f"{args.domain}_{condition}_s{seed}.cxds")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(out, splits)
    resolved = {"domain": args.domain, "condition": condition, "seed": seed}
    write_manifest(out.parent, argv, resolved, [out.name], started)
    print(f"wrote {out} ({splits.n_classes} classes, shape {splits.train.x.shape[1:]})")
    return EXIT_OK


TRAIN_KEYS = ("domain", "condition", "family", "activation", "lr", "width", "steps", "batch_size", "weight_decay")


def cmd_train(args, argv) -> int:
    started = time.time()
    cfg = {"domain": "rf", "condition": "psk_only", "family": "complex", "activation": "crelu",
           "lr": 3e-3, "width": 32, "steps": 200, "batch_size": 64, "weight_decay": 0.01}
    cfg.update({k: v for k, v in load_config(args.config).items() if k in TRAIN_KEYS})
    cfg.update({k: getattr(args, k) for k in TRAIN_KEYS if getattr(args, k) is not None})
    cfg["seed"] = master_seed(args, load_config(args.config))
    if cfg["family"] not in FAMILIES:
        raise UsageError(f"unknown family {cfg['family']!r}; expected one of {FAMILIES}")
    if cfg["condition"] not in condition_names(cfg["domain"]):
        raise UsageError(f"unknown {cfg['domain']} condition {cfg['condition']!r}")
    try:
        tc = TrainConfig(lr=float(cfg["lr"]), weight_decay=float(cfg["weight_decay"]),
                         batch_size=int(cfg["batch_size"]), steps=int(cfg["steps"]), seed=cfg["seed"],
                         family=cfg["family"], activation=cfg["activation"], width=int(cfg["width"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = dataset(cfg["domain"], cfg["condition"], cfg["seed"])
    out = Path(args.out)
    res = train_run(tc, data, out_dir=out)
    write_manifest(out, argv, cfg, ["telemetry.csv", "result.json"], started)
    status = f" dead ({res.reason})" if res.dead else ""
    print(f"val {res.val_acc:.4f} test {res.test_acc:.4f} loss {res.train_loss:.4f}{status}")
    return EXIT_FAIL if res.reason == "diverged" else EXIT_OK


def cmd_suite(args, argv) -> int:
    started = time.time()
    file_cfg = load_config(args.config)
    seed = master_seed(args, file_cfg)
    jobs = args.jobs if args.jobs is not None else int(file_cfg.get("jobs", 1))
    overrides = {k: v for k, v in file_cfg.items() if k not in ("seed", "jobs")}
    overrides.update(parse_sets(args.set))
    resolved = resolve_config(args.name, overrides)
    out = Path(args.out or f"sweep_{args.name}_s{seed}")

    def progress(cell):
        if args.verbose:
            r = cell.record
            msg = f"acc {r.test_acc:.3f}{' dead' if r.dead else ''}" if r else f"FAILED {cell.error}"
            print(f"{cell.spec.condition} {cell.spec.family} t{cell.spec.trial.index} s{cell.spec.seed}: {msg}",
                  file=sys.stderr, flush=True)

    res = run_suite(args.name, seed, out, overrides, jobs=jobs, telemetry=not args.no_telemetry,
                    progress=progress)
    write_manifest(out, argv, {"suite": args.name, "seed": seed, **resolved}, res.artifacts, started)
    if res.failures:
        print(f"{len(res.failures)} grid cell(s) failed; see {out / 'failures.txt'}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {out}")
    return EXIT_OK


def cmd_select(args, argv) -> int:
    path = Path(args.sweep_dir) / "records.csv"
    if not path.is_file():
        raise UsageError(f"no records.csv in {args.sweep_dir}")
    records = read_records(path)
    rules = RULES if args.rule == "both" else (args.rule,)
    out = {}
    for rule in rules:
        out[rule] = select(records, rule).as_dict()
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_report(args, argv) -> int:
    if not (Path(args.sweep_dir) / "records.csv").is_file():
        raise UsageError(f"no records.csv in {args.sweep_dir}")
    for p in write_reports(args.sweep_dir, args.format, args.out):
        print(p)
    return EXIT_OK


def cmd_trilemma(args, argv) -> int:
    started = time.time()
    acts = args.activations or list(A.COMPLEX_ACTIVATIONS)
    for a in acts:
        A.check_id(a)
    reports = [A.trilemma_scan(a) for a in acts]
    text = A.trilemma_csv(reports)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trilemma.csv").write_text(text)
        write_manifest(out, argv, {"activations": acts}, ["trilemma.csv"], started)
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides CXBENCH_SEED)")
    common.add_argument("--config", default=None, help="JSON config; flags win over its values")

    p = argparse.ArgumentParser(prog="cxbench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cxbench {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a dataset file")
    g.add_argument("domain", choices=("rf", "quantum", "eeg"))
    g.add_argument("--condition", default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", parents=[common], help="train one model with telemetry")
    t.add_argument("--domain", choices=("rf", "quantum", "eeg"))
    t.add_argument("--condition")
    t.add_argument("--family")
    t.add_argument("--activation")
    t.add_argument("--lr", type=float)
    t.add_argument("--width", type=int)
    t.add_argument("--steps", type=int)
    t.add_argument("--batch-size", dest="batch_size", type=int)
    t.add_argument("--weight-decay", dest="weight_decay", type=float)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("suite", parents=[common], help="run a named experiment grid")
    s.add_argument("name", choices=SUITES)
    s.add_argument("--out", default=None)
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one suite setting")
    s.add_argument("--no-telemetry", action="store_true", help="skip per-run telemetry directories")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_suite)

    se = sub.add_parser("select", help="apply a selection rule to a sweep")
    se.add_argument("sweep_dir")
    se.add_argument("--rule", choices=RULES + ("both",), default="both")
    se.set_defaults(func=cmd_select)

    r = sub.add_parser("report", help="emit report tables for a sweep")
    r.add_argument("sweep_dir")
    r.add_argument("--format", choices=("csv", "md"), default="csv")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)

    tr = sub.add_parser("trilemma", help="activation trilemma scan")
    tr.add_argument("--activations", nargs="*")
    tr.add_argument("--out", default=None)
    tr.set_defaults(func=cmd_trilemma)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (UsageError, SuiteError, ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"cxbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProtocolError as exc:
        print(f"cxbench: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
