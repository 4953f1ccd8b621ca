"""Single runs, benchmark sweeps and scoring behind the CLI.

Estimation config (JSON)::

    {"alpha": 0.3,                                   required
     "dataset": "data.csv",                          or "generate": {...}
     "generate": {"dim": 16, "n": 100000, "adversary": "isotropic:10000",
                  "inlier_rule": "identity", "mean": [...], "seed": 1},
     "seed": 0, "algo": {...AlgoConfig fields...}, "output": "report.json"}

Sweep config (JSON)::

    {"dims": [16], "ns": [25000, 50000], "alphas": [0.3],
     "adversaries": ["isotropic:10000"], "inlier_rule": "identity",
     "trials": 30, "estimators": ["entangled", "sample_mean", "oracle_inlier_mean"],
     "seed": 0, "mean_scale": 0.0, "timing": false, "algo": {...}, "output": "rows.csv"}

Each (cell, trial) gets the seed ``derive_seed(root, D, N, alpha, adversary, trial)``
so any cell can be regenerated on its own.
"""

import csv
import io as _io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmestError
from .io import read_dataset, read_estimate, require_truth
from .model import AdversarySpec, ModelParams, generate_dataset
from .recursive import BASELINES, AlgoConfig, baseline_estimators, entangled_mean_estimation
from .rng import derive_seed, substream

CSV_HEADER = ["D", "N", "alpha", "adversary", "estimator", "trial", "seed", "l2_error", "ms",
              "notes"]
ESTIMATORS = ("entangled",) + BASELINES


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", "config")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}", "config")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", "config")
    return doc


def _require(doc, key, kind, prefix=""):
    path = prefix + key
    if key not in doc:
        raise ConfigError(f"missing required field '{path}'", path)
    value = doc[key]
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "number": isinstance(value, (int, float)) and not isinstance(value, bool),
        "str": isinstance(value, str),
        "list": isinstance(value, list) and len(value) > 0,
    }[kind]
    if not ok:
        raise ConfigError(f"field '{path}' must be a {'non-empty list' if kind == 'list' else kind}",
                          path)
    return value


def _algo(doc):
    raw = doc.get("algo", {})
    if not isinstance(raw, dict):
        raise ConfigError("field 'algo' must be an object", "algo")
    try:
        return AlgoConfig.from_dict(raw)
    except TypeError as exc:
        raise ConfigError(f"bad algo options: {exc}", "algo")


def _generated(gen, seed_default):
    if not isinstance(gen, dict):
        raise ConfigError("field 'generate' must be an object", "generate")
    dim = _require(gen, "dim", "int", "generate.")
    n = _require(gen, "n", "int", "generate.")
    alpha = _require(gen, "alpha", "number", "generate.") if "alpha" in gen else None
    adversary = AdversarySpec.parse(gen.get("adversary", "identity"),
                                    gen.get("inlier_rule", "identity"))
    return dim, n, alpha, adversary, gen.get("mean"), int(gen.get("seed", seed_default))


def run_single(config_path, seed=None):
    """One estimation run from a JSON config; returns the report document."""
    doc = load_json(config_path)
    alpha = float(_require(doc, "alpha", "number"))
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"field 'alpha' must lie in (0, 1], got {alpha}", "alpha")
    run_seed = int(seed if seed is not None else doc.get("seed", 0))
    cfg = _algo(doc)

    if "dataset" in doc:
        path = _require(doc, "dataset", "str")
        if not os.path.isabs(path):
            path = os.path.join(os.path.dirname(os.path.abspath(config_path)), path)
        if not os.path.exists(path):
            raise ConfigError(f"dataset file {path} does not exist", "dataset")
        data = read_dataset(path)
    elif "generate" in doc:
        dim, n, gen_alpha, adversary, mean, gen_seed = _generated(doc["generate"], run_seed)
        params = ModelParams(dim, n, gen_alpha if gen_alpha is not None else alpha, mean)
        data = generate_dataset(params, adversary, gen_seed)
    else:
        raise ConfigError("config needs either 'dataset' or 'generate'", "dataset")

    truth = data.true_mean if data.has_truth else None
    report = entangled_mean_estimation(data.samples, alpha, cfg, run_seed, truth_mean=truth)
    out = report.to_dict()
    if truth is not None:
        out["l2_error"] = float(np.linalg.norm(report.estimate - truth))
    return out, doc.get("output")


@dataclass(frozen=True)
class SweepConfig:
    dims: tuple
    ns: tuple
    alphas: tuple
    adversaries: tuple
    trials: int
    estimators: tuple
    seed: int = 0
    inlier_rule: str = "identity"
    mean_scale: float = 0.0
    timing: bool = False
    algo: AlgoConfig = AlgoConfig()
    output: str = None

    @classmethod
    def from_dict(cls, doc):
        dims = tuple(int(v) for v in _require(doc, "dims", "list"))
        ns = tuple(int(v) for v in _require(doc, "ns", "list"))
        alphas = tuple(float(v) for v in _require(doc, "alphas", "list"))
        adversaries = tuple(str(v) for v in _require(doc, "adversaries", "list"))
        trials = int(_require(doc, "trials", "int"))
        estimators = tuple(doc.get("estimators", ["entangled", "sample_mean"]))
        if trials < 1:
            raise ConfigError("field 'trials' must be >= 1", "trials")
        for name in estimators:
            if name not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {name!r}", "estimators")
        rule = doc.get("inlier_rule", "identity")
        for a in adversaries:
            AdversarySpec.parse(a, rule)
        for d in dims:
            for n in ns:
                for a in alphas:
                    ModelParams(d, n, a)
        return cls(dims=dims, ns=ns, alphas=alphas, adversaries=adversaries, trials=trials,
                   estimators=estimators, seed=int(doc.get("seed", 0)), inlier_rule=rule,
                   mean_scale=float(doc.get("mean_scale", 0.0)),
                   timing=bool(doc.get("timing", False)), algo=_algo(doc),
                   output=doc.get("output"))

    def tasks(self):
        for d in self.dims:
            for n in self.ns:
                for a in self.alphas:
                    for adv in self.adversaries:
                        for trial in range(self.trials):
                            yield (d, n, a, adv, trial)


def cell_seed(root, dim, n, alpha, adversary, trial):
    return derive_seed(root, dim, n, float(alpha), adversary, trial)


def _fmt_float(v):
    return "nan" if not math.isfinite(v) else format(v, ".12g")


def run_trial(sweep, task):
    """All estimator rows for one (cell, trial)."""
    dim, n, alpha, adv_text, trial = task
    seed = cell_seed(sweep.seed, dim, n, alpha, adv_text, trial)
    adversary = AdversarySpec.parse(adv_text, sweep.inlier_rule)
    mean = sweep.mean_scale * substream(seed, "sweep", "mean").standard_normal(dim)
    data = generate_dataset(ModelParams(dim, n, alpha, mean), adversary, seed)
    rows = []
    for name in sweep.estimators:
        started = time.perf_counter()
        notes = ""
        try:
            if name == "entangled":
                rep = entangled_mean_estimation(data.samples, alpha, sweep.algo, seed)
                est = rep.estimate
                rates = rep.acceptance_rates()
                notes = f"depth={rep.recursion_depth};batches={rep.batches_used}"
                if rates:
                    notes += f";acc={np.mean(rates):.4f}"
                if rep.early_return:
                    notes += ";early_return"
            else:
                est = baseline_estimators(data.samples, alpha, data.inlier_mask, [name])[name]
            err = float(np.linalg.norm(est - data.true_mean))
        except (EmestError, np.linalg.LinAlgError) as exc:
            err = math.nan
            notes = f"failed:{getattr(exc, 'exit_code', 4)}"
        ms = (time.perf_counter() - started) * 1e3
        rows.append([dim, n, alpha, adv_text, name, trial, seed, err, ms, notes])
    return rows


def _workers():
    raw = os.environ.get("EMEST_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError("EMEST_THREADS must be an integer", "EMEST_THREADS")
    return os.cpu_count() or 1


def sweep_rows(sweep, workers=None):
    tasks = list(sweep.tasks())
    workers = min(workers or _workers(), len(tasks))
    if workers <= 1:
        chunks = [run_trial(sweep, t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_trial, [sweep] * len(tasks), tasks))
    rows = [r for chunk in chunks for r in chunk]
    order = {name: i for i, name in enumerate(sweep.estimators)}
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], order[r[4]], r[5]))
    return rows


def format_csv(rows, timing=False):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for d, n, a, adv, name, trial, seed, err, ms, notes in rows:
        writer.writerow([d, n, repr(float(a)), adv, name, trial, seed, _fmt_float(err),
                         f"{ms:.1f}" if timing else "", notes])
    return buf.getvalue()


def run_sweep(config_path, output=None, workers=None):
    """Run a sweep config and write the CSV; returns the output path."""
    doc = load_json(config_path)
    sweep = SweepConfig.from_dict(doc)
    out = output or sweep.output
    if not out:
        raise ConfigError("no output path: set 'output' or pass --out", "output")
    text = format_csv(sweep_rows(sweep, workers), sweep.timing)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return out


def score(estimate_path, dataset_path):
    data = read_dataset(dataset_path)
    mu = require_truth(data, dataset_path)
    est = read_estimate(estimate_path)
    if est.shape != mu.shape:
        raise ConfigError(f"estimate has {est.shape[0]} entries, dataset has dimension "
                          f"{mu.shape[0]}", "estimate")
    return float(np.linalg.norm(est - mu))
