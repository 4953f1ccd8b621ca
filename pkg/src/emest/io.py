"""Dataset file format.

::

    # emest-v1 D=<int> N=<int> alpha=<float> seed=<int>
    <D comma-separated floats>          (N lines)
    # truth
    # mu,<D floats>
    # inliers,<N values 0/1>

Floats are written with 17 significant digits, which round-trips IEEE
doubles.  The ``# truth`` trailer is optional; readers that skip ``#`` lines
see a plain numeric CSV.
"""

import re

import numpy as np

from .errors import ConfigError, MissingTruthError
from .model import Dataset, ModelParams

MAGIC = "emest-v1"
_HEADER = re.compile(
    r"^#\s*emest-v1\s+D=(?P<D>\d+)\s+N=(?P<N>\d+)\s+alpha=(?P<alpha>\S+)\s+seed=(?P<seed>-?\d+)\s*$")


def _fmt(values):
    return ",".join(format(float(v), ".17g") for v in values)


def write_dataset(path, data, include_truth=True):
    p = data.params
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {MAGIC} D={p.dim} N={p.n_samples} alpha={p.alpha!r} seed={int(data.seed)}\n")
        for row in data.samples:
            fh.write(_fmt(row) + "\n")
        if include_truth and data.has_truth:
            fh.write("# truth\n")
            fh.write("# mu," + _fmt(p.true_mean) + "\n")
            if data.inlier_mask is not None:
                fh.write("# inliers," + ",".join("1" if b else "0" for b in data.inlier_mask)
                         + "\n")


def read_dataset(path):
    """Read a dataset file; ``has_truth`` tells whether a trailer was present."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        match = _HEADER.match(header.strip())
        if not match:
            raise ConfigError(f"{path}: missing '# {MAGIC} ...' header", "dataset")
        dim, n = int(match["D"]), int(match["N"])
        alpha, seed = float(match["alpha"]), int(match["seed"])
        rows, mu, mask, in_truth = [], None, None, False
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body == "truth":
                    in_truth = True
                elif in_truth and body.startswith("mu,"):
                    mu = np.array([float(v) for v in body[3:].split(",")])
                elif in_truth and body.startswith("inliers,"):
                    mask = np.array([v.strip() == "1" for v in body[8:].split(",")])
                continue
            if in_truth:
                raise ConfigError(f"{path}:{lineno}: data row after the truth trailer")
            values = line.split(",")
            if len(values) != dim:
                raise ConfigError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            rows.append([float(v) for v in values])
    samples = np.array(rows, float).reshape(-1, dim)
    if samples.shape[0] != n:
        raise ConfigError(f"{path}: header says N={n} but found {samples.shape[0]} rows")
    has_truth = mu is not None
    if has_truth and mu.shape != (dim,):
        raise ConfigError(f"{path}: truth mean has {mu.shape[0]} entries, expected {dim}")
    if mask is not None and mask.shape != (n,):
        raise ConfigError(f"{path}: inlier mask has {mask.shape[0]} entries, expected {n}")
    params = ModelParams(dim=dim, n_samples=n, alpha=alpha, true_mean=mu)
    return Dataset(samples=samples, params=params, inlier_mask=mask, seed=seed,
                   has_truth=has_truth)


def require_truth(data, path="dataset"):
    if not data.has_truth:
        raise MissingTruthError(f"{path} has no '# truth' trailer")
    return data.true_mean


def read_estimate(path):
    """Estimate vector from a JSON report (``estimate`` field) or a CSV line."""
    import json

    with open(path, encoding="utf-8") as fh:
        text = fh.read().strip()
    if text.startswith("{"):
        doc = json.loads(text)
        if "estimate" not in doc:
            raise ConfigError(f"{path}: JSON has no 'estimate' field", "estimate")
        return np.asarray(doc["estimate"], float)
    return np.array([float(v) for v in text.replace("\n", ",").split(",") if v.strip()])
