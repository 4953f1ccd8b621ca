"""Recursive dimension-halving estimator and the outer refinement loop.

One call of :func:`recursive_estimate` on a ``d``-dimensional subspace:

1. draws a fresh batch and projects it onto the subspace,
2. improves the incoming estimate with a tournament (two more batches),
3. stops with the per-axis 1-d estimator when ``d`` is small, or with the
   tournament winner when the 1-d error profile already exceeds ``sqrt(d)``,
4. otherwise estimates the mean inside the low-variance half of the subspace
   and recurses on the high-variance half.

:func:`entangled_mean_estimation` splits the data into independent batches,
warm-starts from the zero vector and runs ``r`` such calls on the full space.
"""

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import BatchesExhaustedError, ConfigError, EmptyAcceptanceError, InfeasibleError
from .model import split_batches
from .rng import substream
from .scalar import ErrorProfileConfig, Shorth, f_delta, naive_multivariate
from .subspace import partial_estimate
from .tournament import tournament_improve

R_POLICIES = ("pseudocode", "proof")


@dataclass(frozen=True)
class AlgoConfig:
    delta: float = 3.0
    base_case_constant: float = 4.0
    kappa_factor: float = 10.0
    tau: float = None  # None: N^-delta / r
    f_profile: ErrorProfileConfig = field(default_factory=ErrorProfileConfig)
    max_candidates: int = 256
    outer_iterations: int = None  # None: from r_policy
    r_policy: str = "pseudocode"
    r_cap: int = 40
    min_batch_size: int = 10
    preprocess: bool = False
    exhaustive_tournament: bool = False

    def __post_init__(self):
        checks = {
            "delta": self.delta > 0,
            "base_case_constant": self.base_case_constant >= 0,
            "kappa_factor": self.kappa_factor > 0,
            "max_candidates": self.max_candidates >= 2,
            "r_cap": self.r_cap >= 1,
            "min_batch_size": self.min_batch_size >= 1,
            "tau": self.tau is None or 0 < self.tau < 1,
            "outer_iterations": self.outer_iterations is None or self.outer_iterations >= 1,
        }
        for name, ok in checks.items():
            if not ok:
                raise ConfigError(f"invalid AlgoConfig.{name}: {getattr(self, name)!r}", name)
        if self.r_policy not in R_POLICIES:
            raise ConfigError(f"r_policy must be one of {R_POLICIES}", "r_policy")

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            name = sorted(unknown)[0]
            raise ConfigError(f"unknown algorithm option {name!r}", f"algo.{name}")
        if "f_profile" in raw:
            fp = raw["f_profile"]
            raw["f_profile"] = fp if isinstance(fp, ErrorProfileConfig) else ErrorProfileConfig(**fp)
        return cls(**raw)

    def to_dict(self):
        return asdict(self)


def padded_dim(dim):
    """Next power of two, at least 2."""
    return max(2, 1 << (int(dim) - 1).bit_length())


def outer_iterations(n_total, cfg):
    if cfg.outer_iterations is not None:
        return int(cfg.outer_iterations)
    lg = math.log2(max(n_total, 2))
    r = math.ceil(lg) if cfg.r_policy == "pseudocode" else math.ceil(0.5 * lg)
    return max(1, min(cfg.r_cap, r))


def error_profile(alpha, n, cfg):
    """``f_delta`` for the pipeline; clean data (alpha = 1) uses the alpha -> 1 limit."""
    return f_delta(min(alpha, 1.0 - 1e-12), n, cfg.f_profile)


@dataclass(frozen=True)
class Schedule:
    """Per-run quantities: padded dimension, recursion depth bound, iterations, batches."""

    dim: int  # padded
    n_total: int
    alpha: float
    m: int
    r: int
    t: int
    n: int
    tau: float
    f_bound: float

    @classmethod
    def plan(cls, n_total, dim, alpha, cfg):
        dpad = padded_dim(dim)
        m = int(math.log2(dpad))
        r = outer_iterations(n_total, cfg)
        t = 2 + m * (3 * r + 1)
        n = n_total // t
        if n < cfg.min_batch_size:
            raise InfeasibleError(
                f"N={n_total} gives batches of {n} < {cfg.min_batch_size} samples "
                f"({t} batches); need N >= {minimal_n(dim, cfg)}",
                min_samples=minimal_n(dim, cfg))
        return cls.with_batch(n, dim, alpha, cfg, n_total=n_total, r=r, t=t)

    @classmethod
    def with_batch(cls, n, dim, alpha, cfg, n_total=None, r=None, t=None):
        """Schedule for externally supplied batches of ``n`` samples."""
        dpad = padded_dim(dim)
        m = int(math.log2(dpad))
        n_total = n_total if n_total is not None else n
        r = r if r is not None else outer_iterations(n_total, cfg)
        t = t if t is not None else 2 + m * (3 * r + 1)
        tau = cfg.tau if cfg.tau is not None else n_total ** (-cfg.delta) / r
        return cls(dim=dpad, n_total=n_total, alpha=alpha, m=m, r=r, t=t, n=n, tau=tau,
                   f_bound=error_profile(alpha, n, cfg))

    @classmethod
    def for_batch_size(cls, n, dim, alpha, cfg):
        """Schedule whose total ``N = t * n`` is consistent with its own ``r`` and ``t``."""
        m = int(math.log2(padded_dim(dim)))
        r = 1
        for _ in range(64):
            t = 2 + m * (3 * r + 1)
            r_next = outer_iterations(n * t, cfg)
            if r_next == r:
                break
            r = r_next
        return cls.with_batch(n, dim, alpha, cfg, n_total=n * t, r=r, t=t)

    def base_threshold(self, cfg, d):
        """Dimension at or below which the recursion stops with the per-axis estimator."""
        return cfg.base_case_constant * math.log(self.n * d / self.tau) * self.m ** 2


def minimal_n(dim, cfg):
    """Smallest N whose batch plan yields batches of ``cfg.min_batch_size`` samples."""
    m = int(math.log2(padded_dim(dim)))
    n_total = 2
    while True:
        r = outer_iterations(n_total, cfg)
        t = 2 + m * (3 * r + 1)
        if n_total // t >= cfg.min_batch_size:
            return n_total
        n_total = max(n_total + 1, cfg.min_batch_size * t)


class BatchSupplier:
    """Hands out independent batches one at a time and keeps a ledger.

    ``batches`` is a list of arrays or any iterable producing them lazily.
    """

    def __init__(self, batches):
        if isinstance(batches, (list, tuple)):
            self._batches = [np.asarray(b, float) for b in batches]
            self._source = None
        else:
            self._batches = None
            self._source = iter(batches)
        self.ledger = []

    @classmethod
    def from_samples(cls, samples, t, seed):
        _, batches = split_batches(np.asarray(samples, float), t, seed)
        return cls(batches)

    @property
    def remaining(self):
        return None if self._batches is None else len(self._batches) - len(self.ledger)

    @property
    def consumed(self):
        return sum(size for _, size in self.ledger)

    @property
    def allocated(self):
        return None if self._batches is None else sum(b.shape[0] for b in self._batches)

    def draw(self, purpose=""):
        i = len(self.ledger)
        if self._batches is not None:
            batch = self._batches[i] if i < len(self._batches) else None
        else:
            batch = next(self._source, None)
            batch = None if batch is None else np.asarray(batch, float)
        if batch is None:
            raise BatchesExhaustedError(
                f"batch supplier exhausted after {i} batches (requested for {purpose!r})")
        self.ledger.append((purpose, batch.shape[0]))
        return batch


class _Run:
    """Mutable state shared by one estimation run."""

    def __init__(self, supplier, schedule, cfg, seed, est, iteration=0):
        self.supplier = supplier
        self.schedule = schedule
        self.cfg = cfg
        self.seed = seed
        self.est = est
        self.iteration = iteration
        self.log = []
        self.calls = 0

    def stream(self, *tags):
        self.calls += 1
        return int(substream(self.seed, "recursion", self.iteration, self.calls, *tags)
                   .integers(2 ** 63))


def recursive_estimate(P, supplier, current, schedule, cfg=None, seed=0, est=None, log=None,
                       iteration=0):
    """Refine ``current`` (an estimate of ``P @ mu``) using the batch supplier.

    ``P`` is a row-orthonormal ``d x D`` matrix (``D`` the padded dimension).
    Appends one entry per recursion level to ``log`` if given.
    """
    cfg = cfg or AlgoConfig()
    P = np.asarray(P, float)
    if not np.allclose(P @ P.T, np.eye(P.shape[0]), atol=1e-8):
        raise ConfigError("P must be row-orthonormal")
    run = _Run(supplier, schedule, cfg, seed, est or Shorth(), iteration)
    out = _recurse(run, P, np.asarray(current, float), depth=0)
    if log is not None:
        log.extend(run.log)
    return out


def _recurse(run, P, current, depth):
    sched, cfg = run.schedule, run.cfg
    d = P.shape[0]
    x = run.supplier.draw("data") @ P.T
    batch_a = run.supplier.draw("tournament-a") @ P.T
    batch_b = run.supplier.draw("tournament-b") @ P.T
    center, outcome = tournament_improve(
        current, batch_a, batch_b, sched.alpha, run.est, sched.f_bound,
        max_candidates=cfg.max_candidates, seed=run.stream("tournament"),
        exhaustive=cfg.exhaustive_tournament, return_outcome=True)
    entry = {"iteration": run.iteration, "depth": depth, "d": d,
             "tournament_winner": "current" if outcome.winner == 0 else "sample",
             "retries": 0}
    run.log.append(entry)

    if d <= max(2.0, sched.base_threshold(cfg, d)):
        entry["branch"] = "naive"
        return naive_multivariate(x, sched.alpha, run.est)
    if math.sqrt(d) <= sched.f_bound:
        entry["branch"] = "tournament"
        return center

    entry["branch"] = "split"
    try:
        part = partial_estimate(center, x, run.stream("reject"))
    except EmptyAcceptanceError:
        entry["retries"] = 1
        x = run.supplier.draw("retry") @ P.T
        part = partial_estimate(center, x, run.stream("reject-retry"))
    entry.update(part.diagnostics)
    mu_high = _recurse(run, part.p_high @ P, part.p_high @ current, depth + 1)
    return part.mu_low + part.p_high.T @ mu_high


@dataclass
class EstimateReport:
    estimate: np.ndarray
    trace: list
    recursion_log: list
    seeds: dict
    config_echo: dict
    schedule: dict
    early_return: bool
    batches_used: int
    samples_used: int
    wall_time: float

    @property
    def recursion_depth(self):
        return max((e["depth"] for e in self.recursion_log), default=-1) + 1

    def acceptance_rates(self):
        return [e["acceptance_rate"] for e in self.recursion_log if "acceptance_rate" in e]

    def to_dict(self):
        return {
            "estimate": [float(v) for v in self.estimate],
            "trace": [float(v) for v in self.trace],
            "recursion_log": [_jsonable(e) for e in self.recursion_log],
            "seeds": self.seeds,
            "config_echo": self.config_echo,
            "schedule": self.schedule,
            "early_return": self.early_return,
            "batches_used": self.batches_used,
            "samples_used": self.samples_used,
            "wall_time": self.wall_time,
        }


def _jsonable(entry):
    return {k: (float(v) if isinstance(v, (np.floating, float)) else
                int(v) if isinstance(v, (np.integer,)) else v) for k, v in entry.items()}


def entangled_mean_estimation(samples, alpha, cfg=None, seed=0, est=None, truth_mean=None):
    """Estimate the common mean of an ``N x D`` sample matrix.

    ``truth_mean`` is only used to record the per-iteration error trace.
    """
    started = time.perf_counter()
    cfg = cfg or AlgoConfig()
    est = est or Shorth()
    x = np.asarray(samples, float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ConfigError("samples must be a non-empty N x D matrix")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}", "alpha")
    n_total, dim = x.shape
    schedule = Schedule.plan(n_total, dim, alpha, cfg)

    scale = 1.0
    if cfg.preprocess:
        noise = substream(seed, "pipeline", "preprocess").standard_normal(x.shape)
        x = (x + noise) / math.sqrt(2.0)
        scale = math.sqrt(2.0)
    if schedule.dim > dim:
        x = np.hstack([x, np.zeros((n_total, schedule.dim - dim))])

    split_seed = int(substream(seed, "pipeline", "split").integers(2 ** 63))
    supplier = BatchSupplier.from_samples(x, schedule.t, split_seed)

    def error(v):
        if truth_mean is None:
            return None
        return float(np.linalg.norm(scale * v[:dim] - np.asarray(truth_mean, float)))

    warm_seed = int(substream(seed, "pipeline", "warm").integers(2 ** 63))
    estimate = tournament_improve(
        np.zeros(schedule.dim), supplier.draw("warm-a"), supplier.draw("warm-b"), alpha, est,
        schedule.f_bound, max_candidates=cfg.max_candidates, seed=warm_seed,
        exhaustive=cfg.exhaustive_tournament)
    trace, log = [], []
    early = schedule.f_bound >= math.sqrt(schedule.dim)
    if not early:
        eye = np.eye(schedule.dim)
        for i in range(schedule.r):
            iter_seed = int(substream(seed, "pipeline", "iteration", i).integers(2 ** 63))
            estimate = recursive_estimate(eye, supplier, estimate, schedule, cfg, iter_seed, est,
                                          log=log, iteration=i)
            if truth_mean is not None:
                trace.append(error(estimate))

    return EstimateReport(
        estimate=scale * estimate[:dim],
        trace=trace,
        recursion_log=log,
        seeds={"root": int(seed), "split": split_seed, "warm_start": warm_seed},
        config_echo=cfg.to_dict(),
        schedule=asdict(schedule),
        early_return=early,
        batches_used=len(supplier.ledger),
        samples_used=supplier.consumed,
        wall_time=time.perf_counter() - started,
    )


BASELINES = ("sample_mean", "coordinate_median", "naive_1d", "oracle_inlier_mean")


def baseline_estimators(samples, alpha, inlier_mask=None, names=None, est=None):
    """Comparison estimators keyed by name.

    ``oracle_inlier_mean`` needs the ground-truth inlier mask; it is included by
    default only when the mask is given.
    """
    from .errors import MissingTruthError

    x = np.asarray(samples, float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ConfigError("samples must be a non-empty N x D matrix")
    if names is None:
        names = BASELINES if inlier_mask is not None else BASELINES[:3]
    out = {}
    for name in names:
        if name == "sample_mean":
            out[name] = x.mean(axis=0)
        elif name == "coordinate_median":
            out[name] = np.median(x, axis=0)
        elif name == "naive_1d":
            out[name] = naive_multivariate(x, alpha, est)
        elif name == "oracle_inlier_mean":
            if inlier_mask is None:
                raise MissingTruthError("oracle_inlier_mean needs the ground-truth inlier mask")
            mask = np.asarray(inlier_mask, bool)
            if not mask.any():
                raise ConfigError("inlier mask selects no sample")
            out[name] = x[mask].mean(axis=0)
        else:
            raise ConfigError(f"unknown baseline {name!r}", "estimators")
    return out
