"""Command line entry point: run, sweep, generate, fetch, assign."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import urllib.request
from dataclasses import fields

from . import synth
from .harness import AXES, ConfigError, ExperimentConfig, report_json, rows_csv, run, sweep
from .model import ClusterModel
from .oracle import DatasetError, load_dataset, save_dataset

EXIT_CONFIG = 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with experiment settings (flags override it)")
    p.add_argument("--dataset", help="generator kind or path to a csv/tsv file")
    p.add_argument("--fmt", choices=("csv", "tsv"))
    p.add_argument("--gen-seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--budget", help="query budget, or 'none' to run to completion")
    p.add_argument("--curve", choices=("hilbert", "z", "peano"))
    p.add_argument("--fanout", type=int)
    p.add_argument("--min-cell-size", type=float)
    p.add_argument("--c", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--merge-threshold", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--methods", help="comma separated: hdbscan,baseline")
    p.add_argument("--noise-pct", type=float)
    p.add_argument("--timing", action="store_true", default=None,
                   help="add wall time to the report (makes it non-reproducible)")


def _budget(text: str):
    if text.lower() in ("none", "unlimited"):
        return None
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"budget must be an integer or 'none', got {text!r}") from None


def _config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is None:
            continue
        if f.name == "methods":
            v = tuple(v.split(","))
        elif f.name == "budget":
            v = _budget(v)
        base[f.name] = v
    return ExperimentConfig.from_dict(base).validate()


def _write(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_run(args) -> int:
    cfg = _config(args)
    report = run(cfg)
    _write(report_json(report), args.out)
    if args.save_model:
        from .cluster2d import hdbscan
        from .dbscan_ref import DbscanParams
        from .harness import load_experiment_data
        from .oracle import KnnOracle

        ds = load_experiment_data(cfg)
        model = hdbscan(KnnOracle(ds, cfg.k, cfg.budget), DbscanParams(cfg.eps, cfg.min_pts),
                        cfg.hdbscan_config(), rng=cfg.seed)
        model.save(args.save_model)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    _write(rows_csv(sweep(cfg, args.axis, values)), args.out)
    return 0


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def cmd_generate(args) -> int:
    try:
        ds = synth.generate(args.kind, seed=args.seed, **_parse_params(args.param))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    save_dataset(ds, args.out)
    return 0


def cmd_fetch(args) -> int:
    with urllib.request.urlopen(args.url, timeout=args.timeout) as resp:
        data = resp.read()
    ds = load_dataset(data, args.fmt)   # refuse to save something we cannot parse
    with open(args.out, "wb") as fh:
        fh.write(data)
    print(f"saved {len(ds)} points to {args.out}", file=sys.stderr)
    return 0


def cmd_assign(args) -> int:
    try:
        model = ClusterModel.load(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load model: {exc}") from None
    ds = load_dataset(args.points, args.fmt)
    labels = model.assign_many(ds.points)
    with (open(args.out, "w", newline="", encoding="utf-8") if args.out not in (None, "-")
          else _Stdout()) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for i, lab in enumerate(labels.tolist()):
            w.writerow([i, lab])
    return 0


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lbscluster", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="score methods against full DBSCAN, JSON report")
    _add_config_flags(p)
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--save-model", help="also write the first repetition's model JSON here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vary one setting, CSV of medians")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--values", required=True, help="comma separated values")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("kind", choices=synth.KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="generator argument, e.g. n=5000 or noise=0.2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fetch", help="download a dataset file (e.g. a Chameleon benchmark)")
    p.add_argument("--url", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fmt", choices=("csv", "tsv"), default="tsv")
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("assign", help="label points with a saved model (no queries)")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--fmt", choices=("csv", "tsv"), default="csv")
    p.add_argument("--out", help="labels CSV path (default stdout)")
    p.set_defaults(func=cmd_assign)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
