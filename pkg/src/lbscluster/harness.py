"""Experiment runner: score HDBSCAN and the sampling baseline against full DBSCAN."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from . import synth
from .cluster2d import HdbscanConfig, hdbscan
from .dbscan_ref import DbscanParams, baseline_cluster, dbscan
from .metrics import scores
from .oracle import NOISE, Dataset, KnnOracle, load_dataset
from .sfc import CURVES

METHODS = ("hdbscan", "baseline")
AXES = ("budget", "k", "min_cell_size", "fanout", "noise_pct", "curve")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    # a generator kind ("noisy", "blobs", ...) or a path to a csv/tsv file
    dataset: str = "noisy"
    fmt: str = "csv"
    gen_seed: int = 0
    eps: float = 20.0
    min_pts: int = 14
    k: int = 14
    budget: Optional[int] = 200    # None runs until nothing is left to learn
    curve: str = "hilbert"
    fanout: Optional[int] = None
    min_cell_size: Optional[float] = None
    c: int = 3
    l: Optional[int] = None
    merge_threshold: Optional[float] = None
    seed: int = 0
    repetitions: int = 10
    methods: tuple = ("hdbscan",)
    noise_pct: float = 0.0
    timing: bool = False

    def validate(self) -> "ExperimentConfig":
        def positive(name, allow_none=False):
            v = getattr(self, name)
            if v is None and allow_none:
                return
            if v is None or not v > 0:
                raise ConfigError(f"{name} must be positive, got {v!r}")

        for name in ("eps", "min_pts", "k", "c", "repetitions"):
            positive(name)
        for name in ("fanout", "min_cell_size", "l", "merge_threshold"):
            positive(name, allow_none=True)
        if self.budget is not None and self.budget < 0:
            raise ConfigError("budget must be >= 0")
        if self.min_pts > self.k:
            raise ConfigError(f"min_pts ({self.min_pts}) must not exceed k ({self.k})")
        if self.curve not in CURVES:
            raise ConfigError(f"curve must be one of {CURVES}")
        if self.fanout is not None:
            allowed = (9,) if self.curve == "peano" else (4, 16, 64)
            if self.fanout not in allowed:
                raise ConfigError(f"fanout for {self.curve} must be one of {allowed}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        if "baseline" in self.methods and self.budget is None:
            raise ConfigError("the baseline needs a finite budget")
        if self.noise_pct < 0:
            raise ConfigError("noise_pct must be >= 0")
        if self.fmt not in ("csv", "tsv"):
            raise ConfigError("fmt must be csv or tsv")
        return self

    def resolved(self) -> dict:
        """Every setting with defaults filled in, as written into reports."""
        params = DbscanParams(self.eps, self.min_pts)
        hc = self.hdbscan_config().resolve(params)
        d = asdict(self)
        d.update(fanout=hc.fanout, min_cell_size=hc.min_cell_size, l=hc.l,
                 merge_threshold=hc.merge_threshold, methods=list(self.methods))
        return d

    def hdbscan_config(self) -> HdbscanConfig:
        return HdbscanConfig(self.curve, self.fanout, self.min_cell_size, self.c, self.l,
                             self.merge_threshold)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "methods" in d:
            m = d["methods"]
            d["methods"] = tuple([m] if isinstance(m, str) else m)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_experiment_data(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset in synth.KINDS:
        ds = synth.generate(cfg.dataset, seed=cfg.gen_seed)
    else:
        try:
            ds = load_dataset(cfg.dataset, cfg.fmt)
        except OSError as exc:
            raise ConfigError(f"cannot read dataset: {exc}") from None
    if cfg.noise_pct:
        ds = synth.inject_noise(ds, cfg.noise_pct, seed=cfg.gen_seed + 1)
    return ds


_REF_CACHE: dict = {}


def reference_labels(ds: Dataset, params: DbscanParams, cache_key=None) -> np.ndarray:
    key = (cache_key, params) if cache_key is not None else None
    if key is not None and key in _REF_CACHE:
        return _REF_CACHE[key]
    labels = dbscan(ds, params)
    if key is not None:
        _REF_CACHE[key] = labels
    return labels


def _run_once(method: str, ds: Dataset, ref: np.ndarray, cfg: ExperimentConfig, seed: int) -> dict:
    params = DbscanParams(cfg.eps, cfg.min_pts)
    oracle = KnnOracle(ds, cfg.k, cfg.budget)
    t0 = time.perf_counter()
    if method == "hdbscan":
        model = hdbscan(oracle, params, cfg.hdbscan_config(), rng=seed)
        labels = model.assign_many(ds.points)
        extra = {"h": model.stats["h"], "h_prime": model.stats["h_prime"],
                 "leaves": model.stats["leaves"], "provisional": model.stats["provisional"]}
    else:
        model = baseline_cluster(oracle, params, rng=seed)
        labels = model.assign_many(ds.points)
        extra = {"h": model.n_clusters, "h_prime": model.n_clusters}
    elapsed = time.perf_counter() - t0
    if cfg.budget is not None and oracle.queries_used > cfg.budget:
        raise AssertionError("budget exceeded")
    rec = {"seed": seed, **scores(ref, labels), "queries": oracle.queries_used,
           "observed": len(oracle.observed_ids()),
           "labeled": int(np.count_nonzero(labels != NOISE)), **extra}
    if cfg.timing:
        rec["seconds"] = round(elapsed, 3)
    return rec


def _summary(reps: list[dict]) -> dict:
    out = {}
    for key in ("rand", "jaccard", "fm", "queries"):
        vals = np.array([r[key] for r in reps], dtype=float)
        out[key] = {"median": round(float(np.median(vals)), 6), "std": round(float(vals.std()), 6)}
    return out


def run(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> dict:
    """Run every configured method ``repetitions`` times (seeds seed, seed+1, ...)."""
    cfg.validate()
    ds = dataset if dataset is not None else load_experiment_data(cfg)
    cache_key = None if dataset is not None else (cfg.dataset, cfg.fmt, cfg.gen_seed, cfg.noise_pct)
    ref = reference_labels(ds, DbscanParams(cfg.eps, cfg.min_pts), cache_key)
    report = {
        "config": cfg.resolved(),
        "dataset": {"points": len(ds), "reference_clusters": len(set(ref.tolist()) - {NOISE}),
                    "reference_noise": int(np.count_nonzero(ref == NOISE))},
        "methods": {},
    }
    for method in cfg.methods:
        reps = [_run_once(method, ds, ref, cfg, cfg.seed + r) for r in range(cfg.repetitions)]
        report["methods"][method] = {"reps": reps, "summary": _summary(reps)}
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _coerce(axis: str, value):
    if axis == "curve":
        return str(value)
    if axis == "budget":
        return None if value in (None, "none", "None") else int(value)
    if axis in ("k", "fanout"):
        return int(value)
    return float(value)


def sweep(cfg: ExperimentConfig, axis: str, values) -> list[dict]:
    """One run per value of ``axis``; rows of medians and standard deviations."""
    if axis not in AXES:
        raise ConfigError(f"axis must be one of {AXES}")
    rows = []
    for raw in values:
        value = _coerce(axis, raw)
        sub = replace(cfg, **{axis: value})
        if axis == "curve" and value == "peano":
            sub = replace(sub, fanout=None)
        report = run(sub)
        for method, res in report["methods"].items():
            row = {"axis": axis, "value": value, "method": method}
            for metric, st in res["summary"].items():
                row[f"{metric}_median"] = st["median"]
                row[f"{metric}_std"] = st["std"]
            rows.append(row)
    return rows


SWEEP_COLUMNS = ["axis", "value", "method"] + [
    f"{m}_{s}" for m in ("rand", "jaccard", "fm", "queries") for s in ("median", "std")
]


def rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
