"""Experiment grids: training pollution (unsup) and labeled anomalies (sad).

A grid is a list of split jobs. Each job builds one train/test split, fits the
needed preprocessors once, then runs every configured method on it. Every
stochastic component draws from a stream keyed by the experiment cell, so job
order and worker count do not change any result.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .data import CLASS_IDS, Dataset, RngStream, SampleRole, load_dataset, make_split
from .deep import DEFAULT_ARCH, ConvAutoencoder, DeepSAD, DeepSVDD
from .metrics import CellResult, roc_auc
from .preprocess import Preprocessor, preselect_energy
from .shallow import IsolationForest, LocalOutlierFactor, OneClassSVM, RandomProjectionDepth
from .synth import generate_benchmark

log = logging.getLogger(__name__)

DETECTORS = ("ocsvm", "iforest", "lof", "rpd", "cae", "dsvdd", "dsvdd_pretrained", "dsad")
DEEP = ("cae", "dsvdd", "dsvdd_pretrained", "dsad")

DEFAULT_UNSUP_METHODS = [
    "ocsvm/minmax_pca", "iforest/raw", "iforest/minmax_pca", "lof/raw", "rpd/raw", "rpd/minmax_pca",
    "cae/minmax", "dsvdd/minmax", "dsvdd_pretrained/minmax",
]
DEFAULT_SAD_METHODS = ["dsad/minmax"]
DEFAULT_RATIOS = [0.0, 0.01, 0.05, 0.1]

RESULTS_HEADER = ["method", "normal_class", "contam_class", "contam_kind", "ratio", "seed", "auc"]


class ConfigError(ValueError):
    pass


@dataclass
class Hyper:
    nu: float = 0.1
    gamma: object = "auto"
    n_trees: int = 100
    subsample: int = 1024
    k_neighbors: int = 48
    n_projections: int = 1000
    contamination: float = 0.1  # accepted for completeness; AUC scoring ignores it
    epochs_cae: int = 10
    epochs_dsvdd: int = 20
    eta: float = 1.0
    batch_size: int = 128
    learning_rate: float = 1e-3
    weight_decay: float = 1e-6
    pca_variance: float = 0.95


@dataclass
class ExperimentConfig:
    dataset: dict = field(default_factory=lambda: {"synth": {"n_per_class": 1000, "seed": 0}})
    preselect: dict | None = field(default_factory=lambda: {"low_q": 0.05, "high_q": 0.95})
    methods: list = field(default_factory=lambda: list(DEFAULT_UNSUP_METHODS))
    sad_methods: list = field(default_factory=lambda: list(DEFAULT_SAD_METHODS))
    normal_classes: list = field(default_factory=lambda: list(CLASS_IDS))
    pollution_ratios: list = field(default_factory=lambda: list(DEFAULT_RATIOS))
    labeled_ratios: list = field(default_factory=lambda: list(DEFAULT_RATIOS))
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    test_fraction: float = 0.1
    hyper: Hyper = field(default_factory=Hyper)
    architecture: dict = field(default_factory=lambda: dict(DEFAULT_ARCH))
    output_dir: str = "runs/default"

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc or {})
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        hyper = doc.pop("hyper", {}) or {}
        bad = set(hyper) - set(Hyper.__dataclass_fields__)
        if bad:
            raise ConfigError(f"unknown hyper keys: {sorted(bad)}")
        if "seeds" in doc and isinstance(doc["seeds"], int):
            doc["seeds"] = list(range(doc["seeds"]))
        for key in ("methods", "sad_methods"):
            if key in doc:
                doc[key] = expand_methods(doc[key])
        cfg = cls(**doc, hyper=Hyper(**hyper))
        cfg.architecture = {**DEFAULT_ARCH, **(cfg.architecture or {})}
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["architecture"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["architecture"].items()}
        return d

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode("utf-8")).hexdigest()

    def validate(self) -> None:
        for m in self.methods + self.sad_methods:
            parse_method(m)
        for m in self.sad_methods:
            if parse_method(m)[0] != "dsad":
                raise ConfigError(f"SAD grid only runs dsad, got {m}")
        for m in self.methods:
            if parse_method(m)[0] == "dsad":
                raise ConfigError("dsad belongs to sad_methods")
        for c in self.normal_classes:
            if c not in CLASS_IDS:
                raise ConfigError(f"unknown normal class {c}")
        for r in self.pollution_ratios + self.labeled_ratios:
            if not 0 <= r <= 0.1 + 1e-12:
                raise ConfigError(f"ratio {r} outside [0, 0.1]")
        if not self.seeds:
            raise ConfigError("no seeds")
        if not ("synth" in self.dataset) ^ ("path" in self.dataset):
            raise ConfigError("dataset needs exactly one of 'synth' or 'path'")


def expand_methods(entries) -> list[str]:
    """Accept ``"iforest/raw"`` strings or ``{detector, preprocess: [..]}`` mappings."""
    out = []
    for e in entries:
        if isinstance(e, str):
            out.append(e if "/" in e else f"{e}/{'minmax' if e in DEEP else 'raw'}")
        elif isinstance(e, dict):
            modes = e.get("preprocess", ["minmax" if e["detector"] in DEEP else "raw"])
            modes = [modes] if isinstance(modes, str) else modes
            out += [f"{e['detector']}/{m}" for m in modes]
        else:
            raise ConfigError(f"bad method entry {e!r}")
    return out


def parse_method(method: str) -> tuple[str, str]:
    try:
        det, mode = method.split("/")
    except ValueError:
        raise ConfigError(f"method id must be 'detector/preprocess', got {method!r}") from None
    if det not in DETECTORS:
        raise ConfigError(f"unknown detector {det!r}")
    if mode not in Preprocessor.MODES:
        raise ConfigError(f"unknown preprocessing {mode!r}")
    return det, mode


def build_dataset(cfg: ExperimentConfig) -> Dataset:
    if "synth" in cfg.dataset:
        spec = cfg.dataset["synth"] or {}
        ds = generate_benchmark(int(spec.get("n_per_class", 1000)), int(spec.get("seed", 0)))
    else:
        ds = load_dataset(cfg.dataset["path"])
    if cfg.preselect:
        ds = preselect_energy(ds, cfg.preselect.get("low_q", 0.05), cfg.preselect.get("high_q", 0.95))
    return ds


@dataclass(frozen=True)
class SplitJob:
    grid: str
    normal_class: int
    contam_class: int | None
    ratio: float
    seed: int
    methods: tuple

    @property
    def contam_kind(self) -> str:
        if self.contam_class is None:
            return "none"
        return "pollution" if self.grid == "unsup" else "labeled"

    def cell_key(self) -> tuple:
        return (self.normal_class, self.contam_class, self.ratio)


def plan_jobs(cfg: ExperimentConfig, grid: str) -> list[SplitJob]:
    """Zero-ratio cells run once per (normal class, seed); others once per contaminating class."""
    if grid not in ("unsup", "sad"):
        raise ConfigError(f"unknown grid {grid!r}")
    methods = tuple(cfg.methods if grid == "unsup" else cfg.sad_methods)
    ratios = cfg.pollution_ratios if grid == "unsup" else cfg.labeled_ratios
    jobs = []
    for normal in cfg.normal_classes:
        for seed in cfg.seeds:
            for ratio in sorted(set(float(r) for r in ratios)):
                if ratio == 0:
                    jobs.append(SplitJob(grid, normal, None, 0.0, seed, methods))
                    continue
                for contam in CLASS_IDS:
                    if contam != normal:
                        jobs.append(SplitJob(grid, normal, contam, ratio, seed, methods))
    return jobs


def _stream(job: SplitJob, family: str) -> RngStream:
    return RngStream(job.seed, (family, job.normal_class, job.contam_class, job.ratio))


def _make_detector(det: str, job: SplitJob, hyper: Hyper, arch: dict, method: str, pretrained=None):
    common = dict(batch_size=hyper.batch_size, lr=hyper.learning_rate, weight_decay=hyper.weight_decay, arch=arch)
    if det == "ocsvm":
        return OneClassSVM(nu=hyper.nu, gamma=hyper.gamma)
    if det == "iforest":
        return IsolationForest(hyper.n_trees, hyper.subsample, hyper.contamination, rng=_stream(job, method))
    if det == "lof":
        return LocalOutlierFactor(hyper.k_neighbors, hyper.contamination)
    if det == "rpd":
        return RandomProjectionDepth(hyper.n_projections, rng=_stream(job, method))
    if det == "cae":
        return ConvAutoencoder(epochs=hyper.epochs_cae, rng=_stream(job, "cae"), **common)
    if det == "dsvdd":
        return DeepSVDD(epochs=hyper.epochs_dsvdd, rng=_stream(job, "hypersphere"), **common)
    if det == "dsvdd_pretrained":
        return DeepSVDD(epochs=hyper.epochs_dsvdd, rng=_stream(job, "hypersphere"), pretrained=pretrained, **common)
    if det == "dsad":
        return DeepSAD(eta=hyper.eta, epochs=hyper.epochs_dsvdd, rng=_stream(job, "hypersphere"), **common)
    raise ConfigError(det)


def run_job(job: SplitJob, dataset: Dataset, cfg: ExperimentConfig) -> list[dict]:
    """Run every method of one split; failures are recorded per method."""
    split_kwargs = {}
    if job.contam_class is not None:
        if job.grid == "unsup":
            split_kwargs = dict(pollution_class=job.contam_class, pollution_ratio=job.ratio)
        else:
            split_kwargs = dict(labeled_anomaly_class=job.contam_class, labeled_ratio=job.ratio)
    split = make_split(dataset, job.normal_class, seed=job.seed, test_fraction=cfg.test_fraction, **split_kwargs)
    x_train = split.train_matrix()
    x_test = split.test_matrix()
    semi = split.semi_labels()
    unlabeled = semi == 0
    hyper = cfg.hyper

    preprocessors: dict[str, Preprocessor] = {}
    transformed: dict[str, tuple] = {}
    cae_models: dict[str, ConvAutoencoder] = {}

    def features(mode):
        if mode not in transformed:
            pp = Preprocessor(mode, hyper.pca_variance).fit(x_train[unlabeled])
            preprocessors[mode] = pp
            transformed[mode] = (pp.transform(x_train), pp.transform(x_test))
        return transformed[mode]

    def cae_for(mode, xtr):
        if mode not in cae_models:
            cae_models[mode] = _make_detector("cae", job, hyper, cfg.architecture, f"cae/{mode}").fit(xtr[unlabeled])
        return cae_models[mode]

    records = []
    for method in job.methods:
        det, mode = parse_method(method)
        rec = {"method": method, "normal_class": job.normal_class, "contam_class": job.contam_class,
               "contam_kind": job.contam_kind, "ratio": job.ratio, "seed": job.seed}
        t0 = time.perf_counter()
        try:
            xtr, xte = features(mode)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                if det == "cae":
                    model = cae_for(mode, xtr)
                elif det == "dsvdd_pretrained":
                    model = _make_detector(det, job, hyper, cfg.architecture, method,
                                           pretrained=cae_for(mode, xtr)).fit(xtr[unlabeled])
                elif det == "dsad":
                    model = _make_detector(det, job, hyper, cfg.architecture, method).fit(xtr, semi)
                else:
                    model = _make_detector(det, job, hyper, cfg.architecture, method).fit(xtr)
                scores = np.asarray(model.score(xte), dtype=np.float64)
            rec["auc"] = roc_auc(scores, split.test_labels)
            rec["status"] = "ok"
            rec["warnings"] = [str(w.message) for w in caught]
        except Exception as exc:  # isolate per-cell failures
            log.warning("cell %s failed: %s", rec, exc)
            rec["status"] = "failed"
            rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["seconds"] = round(time.perf_counter() - t0, 4)
        records.append(rec)
    return records


_WORKER_STATE: dict = {}


def _worker_init(dataset_arrays, cfg_dict):
    _WORKER_STATE["dataset"] = Dataset(*dataset_arrays)
    _WORKER_STATE["cfg"] = ExperimentConfig.from_dict(cfg_dict)


def _worker_run(job):
    return run_job(job, _WORKER_STATE["dataset"], _WORKER_STATE["cfg"])


def _record_key(rec):
    contam = -1 if rec["contam_class"] is None else rec["contam_class"]
    return (rec["method"], rec["normal_class"], rec["ratio"], contam, rec["seed"])


def run_grid(cfg: ExperimentConfig, grid: str, workers: int = 1, dataset: Dataset | None = None,
             progress=None) -> list[dict]:
    dataset = build_dataset(cfg) if dataset is None else dataset
    jobs = plan_jobs(cfg, grid)
    records = []
    if workers <= 1:
        for i, job in enumerate(jobs):
            records += run_job(job, dataset, cfg)
            if progress:
                progress(i + 1, len(jobs))
    else:
        arrays = (dataset.ids, dataset.class_ids, dataset.cells)
        with ProcessPoolExecutor(workers, initializer=_worker_init, initargs=(arrays, cfg.to_dict())) as ex:
            for i, recs in enumerate(ex.map(_worker_run, jobs)):
                records += recs
                if progress:
                    progress(i + 1, len(jobs))
    return sorted(records, key=_record_key)


def run_unsupervised_grid(cfg: ExperimentConfig, workers: int = 1, **kw) -> list[dict]:
    return run_grid(cfg, "unsup", workers, **kw)


def run_sad_grid(cfg: ExperimentConfig, workers: int = 1, **kw) -> list[dict]:
    return run_grid(cfg, "sad", workers, **kw)


def format_results(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    for r in sorted(records, key=_record_key):
        if r.get("status", "ok") != "ok":
            continue
        contam = "" if r["contam_class"] is None else r["contam_class"]
        w.writerow([r["method"], r["normal_class"], contam, r["contam_kind"], repr(float(r["ratio"])),
                    r["seed"], repr(float(r["auc"]))])
    return buf.getvalue()


def read_results(path) -> list[CellResult]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULTS_HEADER:
            raise ValueError(f"{path}: unexpected results header {reader.fieldnames}")
        for row in reader:
            out.append(CellResult(row["method"], int(row["normal_class"]),
                                  int(row["contam_class"]) if row["contam_class"] else None,
                                  row["contam_kind"], float(row["ratio"]), int(row["seed"]), float(row["auc"])))
    return out


def write_run(cfg: ExperimentConfig, grid: str, records: list[dict], out_dir, wall_seconds: float) -> dict:
    """Write ``results.csv`` and ``manifest.json`` into ``out_dir``; return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.csv"
    results_path.write_text(format_results(records), encoding="utf-8")
    cells = []
    for r in records:
        cell = {k: r[k] for k in ("method", "normal_class", "contam_class", "contam_kind", "ratio", "seed",
                                  "status", "seconds")}
        if "error" in r:
            cell["error"] = r["error"]
        if r.get("warnings"):
            cell["warnings"] = r["warnings"]
        cells.append(cell)
    manifest = {
        "config_hash": cfg.hash(),
        "grid": grid,
        "config": cfg.to_dict(),
        "n_cells": len(records),
        "n_failed": sum(r["status"] != "ok" for r in records),
        "wall_seconds": round(wall_seconds, 3),
        "cells": cells,
        "artifacts": {"results": str(results_path)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest
