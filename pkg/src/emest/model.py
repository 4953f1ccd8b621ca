"""Subset-of-signals data model: generation, batch splitting, preprocessing.

Each sample ``x_i ~ N(mu, Sigma_i)``.  At least ``ceil(alpha * N)`` of the
covariances satisfy ``Sigma_i <= I`` (the inliers); the others are chosen by an
:class:`AdversarySpec`.  Covariances are stored compactly as

    Sigma_i = iso_i * I + spike_i * U U^T

with one shared ``D x r`` factor ``U`` with orthonormal columns, which covers
every adversary family below without materialising ``N`` dense matrices.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .rng import substream

EIG_TOL = 1e-9


def inlier_count(alpha, n):
    """``ceil(alpha * n)`` guarded against float noise (0.3 * 10 -> 3, not 4)."""
    return min(n, max(1, math.ceil(round(alpha * n, 9))))


@dataclass(frozen=True)
class ModelParams:
    dim: int
    n_samples: int
    alpha: float
    true_mean: np.ndarray = None

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}", "dim")
        if int(self.n_samples) < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}", "n_samples")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}", "alpha")
        mean = np.zeros(self.dim) if self.true_mean is None else np.asarray(self.true_mean, float)
        if mean.shape != (self.dim,):
            raise ConfigError(
                f"true_mean has shape {mean.shape}, expected ({self.dim},)", "true_mean")
        object.__setattr__(self, "true_mean", mean)

    @property
    def n_inliers(self):
        return inlier_count(self.alpha, self.n_samples)


ADVERSARY_KINDS = ("identity", "isotropic", "lowrank", "embed1d")
INLIER_RULES = ("identity", "uniform")


@dataclass(frozen=True)
class AdversarySpec:
    """How the non-inlier covariances are chosen.

    ``identity``   Sigma = I for everyone (clean data).
    ``isotropic``  Sigma = sigma2 * I.
    ``lowrank``    variance sigma2 along ``rank`` shared random directions, 1 elsewhere.
    ``embed1d``    variance sigma2 along coordinate ``axis`` and exactly zero elsewhere.

    ``inlier_rule`` is ``identity`` (Sigma = I) or ``uniform`` (Sigma = s I with
    s ~ U[1/2, 1] per sample).
    """

    kind: str = "identity"
    sigma2: float = 1.0
    rank: int = 1
    axis: int = 0
    inlier_rule: str = "identity"

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ConfigError(f"unknown adversary {self.kind!r}", "adversary")
        if self.inlier_rule not in INLIER_RULES:
            raise ConfigError(f"unknown inlier rule {self.inlier_rule!r}", "inlier_rule")
        if not self.sigma2 >= 0.0:
            raise ConfigError("adversary variance must be nonnegative", "adversary")
        if self.kind == "lowrank" and self.rank < 1:
            raise ConfigError("lowrank adversary needs rank >= 1", "adversary")

    @property
    def name(self):
        s2 = f"{self.sigma2:g}"
        if self.kind == "identity":
            return "identity"
        if self.kind == "isotropic":
            return f"isotropic:{s2}"
        if self.kind == "lowrank":
            return f"lowrank:{self.rank}:{s2}"
        return f"embed1d:{self.axis}:{s2}"

    @classmethod
    def parse(cls, text, inlier_rule="identity"):
        """Parse ``identity``, ``isotropic:<s2>``, ``lowrank:<r>:<s2>`` or ``embed1d:<axis>:<s2>``."""
        parts = str(text).strip().split(":")
        kind, args = parts[0].lower(), parts[1:]
        try:
            if kind == "identity" and not args:
                return cls("identity", inlier_rule=inlier_rule)
            if kind == "isotropic" and len(args) == 1:
                return cls("isotropic", sigma2=float(args[0]), inlier_rule=inlier_rule)
            if kind == "lowrank" and len(args) == 2:
                return cls("lowrank", rank=int(args[0]), sigma2=float(args[1]),
                           inlier_rule=inlier_rule)
            if kind == "embed1d" and len(args) == 2:
                return cls("embed1d", axis=int(args[0]), sigma2=float(args[1]),
                           inlier_rule=inlier_rule)
        except ValueError as exc:
            raise ConfigError(f"bad adversary parameters in {text!r}: {exc}", "adversary")
        raise ConfigError(f"cannot parse adversary {text!r}", "adversary")


@dataclass(frozen=True)
class CovDescriptors:
    """Per-sample covariances ``iso[i] * I + spike[i] * U U^T``."""

    iso: np.ndarray
    spike: np.ndarray
    factors: np.ndarray  # D x r, orthonormal columns (r may be 0)

    def __post_init__(self):
        iso = np.asarray(self.iso, float)
        spike = np.asarray(self.spike, float)
        factors = np.asarray(self.factors, float)
        if factors.ndim != 2:
            raise ConfigError("covariance factors must be a D x r matrix")
        if iso.shape != spike.shape:
            raise ConfigError("iso and spike arrays differ in length")
        if factors.shape[1] and not np.allclose(factors.T @ factors, np.eye(factors.shape[1]),
                                                atol=1e-10):
            raise ConfigError("covariance factors must have orthonormal columns")
        lo, _ = _eig_bounds(iso, spike, factors)
        if np.any(lo < -EIG_TOL):
            raise ConfigError("covariance descriptor is not positive semidefinite")
        for name, arr in (("iso", iso), ("spike", spike), ("factors", factors)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self):
        return self.factors.shape[0]

    def __len__(self):
        return self.iso.shape[0]

    def eig_bounds(self):
        """(smallest, largest) eigenvalue of every Sigma_i."""
        return _eig_bounds(self.iso, self.spike, self.factors)

    def dense(self, i):
        u = self.factors
        return self.iso[i] * np.eye(self.dim) + self.spike[i] * (u @ u.T)

    def subset(self, idx):
        return CovDescriptors(self.iso[idx], self.spike[idx], self.factors)

    def half_identity(self):
        return CovDescriptors((self.iso + 1.0) / 2.0, self.spike / 2.0, self.factors)

    def draw(self, mean, rng):
        """One sample per descriptor from ``N(mean, Sigma_i)``."""
        n, d = len(self), self.dim
        z = rng.standard_normal((n, d))
        root_iso = np.sqrt(self.iso)
        x = mean + root_iso[:, None] * z
        if self.factors.shape[1]:
            coef = (np.sqrt(self.iso + self.spike) - root_iso)[:, None]
            x += coef * ((z @ self.factors) @ self.factors.T)
        return x


def _eig_bounds(iso, spike, factors):
    r, d = factors.shape[1], factors.shape[0]
    if r == 0:
        return iso.copy(), iso.copy()
    top = iso + spike
    if r == d:
        return top.copy(), top.copy()
    return np.minimum(iso, top), np.maximum(iso, top)


@dataclass(frozen=True)
class Dataset:
    """Samples plus ground truth.

    Estimators only ever receive ``samples``; ``inlier_mask``, ``cov`` and
    ``params.true_mean`` are for scoring and checks.  ``cov`` is ``None`` for
    datasets read from disk.
    """

    samples: np.ndarray
    params: ModelParams
    inlier_mask: np.ndarray = None
    cov: CovDescriptors = None
    seed: int = 0
    has_truth: bool = True

    def __post_init__(self):
        x = np.asarray(self.samples, float)
        if x.ndim != 2 or x.shape != (self.params.n_samples, self.params.dim):
            raise ConfigError(
                f"samples have shape {x.shape}, expected "
                f"({self.params.n_samples}, {self.params.dim})")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        if self.inlier_mask is not None:
            mask = np.asarray(self.inlier_mask, bool)
            mask.setflags(write=False)
            object.__setattr__(self, "inlier_mask", mask)

    @property
    def dim(self):
        return self.params.dim

    @property
    def n(self):
        return self.params.n_samples

    @property
    def true_mean(self):
        return self.params.true_mean if self.has_truth else None

    def subset(self, idx):
        idx = np.asarray(idx)
        params = replace(self.params, n_samples=int(idx.shape[0]))
        return Dataset(
            samples=self.samples[idx],
            params=params,
            inlier_mask=None if self.inlier_mask is None else self.inlier_mask[idx],
            cov=None if self.cov is None else self.cov.subset(idx),
            seed=self.seed,
            has_truth=self.has_truth,
        )


def _random_orthonormal(rng, d, r):
    q, rr = np.linalg.qr(rng.standard_normal((d, r)))
    return q * np.sign(np.diag(rr))


def _descriptors(params, adversary, seed):
    """Covariance descriptors and the role (inlier) assignment."""
    n, d = params.n_samples, params.dim
    k = params.n_inliers
    roles = np.zeros(n, bool)
    roles[substream(seed, "model", "roles").permutation(n)[:k]] = True

    if adversary.inlier_rule == "identity":
        inlier_iso = np.ones(k)
    else:
        inlier_iso = substream(seed, "model", "inlier-scale").uniform(0.5, 1.0, size=k)

    iso = np.empty(n)
    spike = np.zeros(n)
    kind, s2 = adversary.kind, adversary.sigma2
    if kind in ("identity", "isotropic"):
        factors = np.zeros((d, 0))
        iso[~roles] = 1.0 if kind == "identity" else s2
    elif kind == "lowrank":
        if adversary.rank > d:
            raise ConfigError(f"lowrank rank {adversary.rank} exceeds dimension {d}", "adversary")
        factors = _random_orthonormal(substream(seed, "model", "factors"), d, adversary.rank)
        iso[~roles] = 1.0
        spike[~roles] = s2 - 1.0
    else:
        if not 0 <= adversary.axis < d:
            raise ConfigError(f"embed1d axis {adversary.axis} outside [0, {d})", "adversary")
        factors = np.zeros((d, 1))
        factors[adversary.axis, 0] = 1.0
        iso[~roles] = 0.0
        spike[~roles] = s2
    iso[roles] = inlier_iso
    return CovDescriptors(iso, spike, factors)


def generate_dataset(params, adversary, seed):
    """Draw a :class:`Dataset` from the subset-of-signals model."""
    cov = _descriptors(params, adversary, seed)
    x = cov.draw(params.true_mean, substream(seed, "model", "noise"))
    _, hi = cov.eig_bounds()
    return Dataset(samples=x, params=params, inlier_mask=hi <= 1.0 + EIG_TOL, cov=cov,
                   seed=int(seed))


@dataclass(frozen=True)
class BatchPlan:
    t: int
    batch_sizes: tuple
    assignment: tuple = field(repr=False)  # one index array per batch


def split_batches(data, t, seed):
    """Split ``data`` into ``t`` disjoint batches along a uniform random permutation.

    The first ``N mod t`` batches receive one extra sample.
    """
    n = data.n if isinstance(data, Dataset) else len(data)
    t = int(t)
    if t < 1:
        raise ConfigError(f"batch count must be >= 1, got {t}", "t")
    if t > n:
        raise ConfigError(f"cannot split {n} samples into {t} batches", "t")
    perm = substream(seed, "split", t).permutation(n)
    base, extra = divmod(n, t)
    sizes = tuple(base + (1 if i < extra else 0) for i in range(t))
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    assignment = tuple(perm[bounds[i]:bounds[i + 1]] for i in range(t))
    plan = BatchPlan(t=t, batch_sizes=sizes, assignment=assignment)
    if isinstance(data, Dataset):
        return plan, [data.subset(idx) for idx in assignment]
    arr = np.asarray(data)
    return plan, [arr[idx] for idx in assignment]


def preprocess_half_identity(data, seed):
    """Replace each sample by ``(x + y) / sqrt(2)`` with fresh ``y ~ N(0, I)``.

    Afterwards every covariance satisfies ``Sigma' = (Sigma + I) / 2 >= I / 2``
    and the common mean becomes ``mu / sqrt(2)``.
    """
    y = substream(seed, "preprocess").standard_normal(data.samples.shape)
    x = (data.samples + y) / math.sqrt(2.0)
    params = replace(data.params, true_mean=data.params.true_mean / math.sqrt(2.0))
    return Dataset(
        samples=x,
        params=params,
        inlier_mask=data.inlier_mask,
        cov=None if data.cov is None else data.cov.half_identity(),
        seed=data.seed,
        has_truth=data.has_truth,
    )
