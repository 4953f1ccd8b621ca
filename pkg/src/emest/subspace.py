"""Rejection sampling around a centre and low-variance subspace estimation.

A sample ``x`` is kept with probability ``exp(-|x - c|^2 / d)``.  Conditioned
on acceptance, ``x ~ N(mu, Sigma)`` becomes another Gaussian (see
:func:`conditional_params`), whose covariance is at most ``d/2`` in every
direction.  The bottom half of the eigenvectors of the accepted samples'
second moment about ``c`` spans a subspace where their mean is trustworthy.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyAcceptanceError, NumericalError
from .rng import substream


@dataclass
class RejectionOutcome:
    accepted: np.ndarray  # sorted indices
    probabilities: np.ndarray
    center: np.ndarray


def acceptance_probabilities(samples, center):
    x = np.asarray(samples, float)
    d = x.shape[1]
    sq = np.sum((x - center) ** 2, axis=1)
    return np.exp(-sq / d)


def rejection_sample(samples, center, seed):
    x = np.asarray(samples, float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ConfigError("rejection sampling needs a non-empty n x d sample matrix")
    center = np.asarray(center, float)
    p = acceptance_probabilities(x, center)
    u = substream(seed, "reject").random(x.shape[0])
    return RejectionOutcome(accepted=np.flatnonzero(u < p), probabilities=p, center=center)


@dataclass
class ConditionalGaussian:
    mean: np.ndarray
    cov: np.ndarray


def _sym(a):
    return (a + a.T) / 2.0


def conditional_params(sigma, mu, center):
    """Law of ``x ~ N(mu, sigma)`` conditioned on acceptance around ``center``.

    ``cov = (sigma^{-1} + (2/d) I)^{-1}`` and
    ``mean = cov ((2/d) center + sigma^{-1} mu)``, evaluated without forming
    ``sigma^{-1}``: ``cov = sigma (I + (2/d) sigma)^{-1}`` and
    ``cov sigma^{-1} = (I + (2/d) sigma)^{-1}``.
    """
    sigma = _sym(np.asarray(sigma, float))
    mu = np.asarray(mu, float)
    center = np.asarray(center, float)
    d = mu.shape[0]
    eig = np.linalg.eigvalsh(sigma)
    if eig[0] <= 1e-12 * max(1.0, eig[-1]):
        raise NumericalError("covariance is singular; apply preprocess_half_identity first")
    a = np.eye(d) + (2.0 / d) * sigma
    cov = _sym(np.linalg.solve(a, sigma))
    mean = (2.0 / d) * (cov @ center) + np.linalg.solve(a, mu)
    return ConditionalGaussian(mean=mean, cov=cov)


def expected_bias(conditionals, mu, center):
    """``(2/d) * mean(cov_i) @ (center - mu)``: average conditional mean minus ``mu``."""
    if not conditionals:
        raise ConfigError("need at least one conditional Gaussian")
    mu = np.asarray(mu, float)
    d = mu.shape[0]
    avg = np.mean([c.cov for c in conditionals], axis=0)
    return (2.0 / d) * avg @ (np.asarray(center, float) - mu)


def acceptance_probability_oracle(sigma, mu, center):
    """``E[exp(-|x - center|^2 / d)]`` for ``x ~ N(mu, sigma)``, in closed form."""
    sigma = _sym(np.asarray(sigma, float))
    diff = np.asarray(mu, float) - np.asarray(center, float)
    d = diff.shape[0]
    eig = np.linalg.eigvalsh(sigma)
    if eig[0] < -1e-10 * max(1.0, abs(eig[-1])):
        raise ConfigError("covariance is not positive semidefinite")
    a = np.eye(d) + (2.0 / d) * sigma
    sign, logdet = np.linalg.slogdet(a)
    quad = diff @ np.linalg.solve(a, diff) / d
    return float(np.exp(-0.5 * logdet - quad))


@dataclass
class SubspaceSplit:
    p_low: np.ndarray  # ceil(d/2) x d, bottom eigenvectors as rows
    p_high: np.ndarray  # floor(d/2) x d, top eigenvectors as rows
    eigenvalues: np.ndarray  # descending

    @property
    def low_max_eigenvalue(self):
        return float(self.eigenvalues[self.p_high.shape[0]])


def second_moment(center, accepted):
    """Symmetrised ``(1/k) sum (x_i - c)(x_i - c)^T``."""
    y = np.asarray(accepted, float) - np.asarray(center, float)
    return _sym(y.T @ y / y.shape[0])


def find_subspace(center, accepted):
    accepted = np.asarray(accepted, float)
    if accepted.ndim != 2 or accepted.shape[0] == 0:
        raise EmptyAcceptanceError("no accepted samples to search a subspace in")
    d = accepted.shape[1]
    if d < 2 or d % 2:
        raise ConfigError(f"subspace search needs an even dimension >= 2, got {d}")
    m = second_moment(center, accepted)
    w, v = np.linalg.eigh(m)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    half = d // 2
    return SubspaceSplit(p_low=v[:, half:].T.copy(), p_high=v[:, :half].T.copy(), eigenvalues=w)


@dataclass
class PartialResult:
    p_high: np.ndarray
    mu_low: np.ndarray
    split: SubspaceSplit
    n_accepted: int
    n_samples: int
    trace: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def p_low(self):
        return self.split.p_low


def partial_estimate(center, samples, seed):
    """Mean of the accepted samples inside the low-variance half of the space.

    ``mu_low`` is returned lifted back to ``R^d`` (``P_low^T P_low mean``).
    Raises :class:`EmptyAcceptanceError` when nothing is accepted.
    """
    x = np.asarray(samples, float)
    center = np.asarray(center, float)
    rej = rejection_sample(x, center, seed)
    if rej.accepted.size == 0:
        raise EmptyAcceptanceError(f"rejection sampling accepted 0 of {x.shape[0]} samples")
    kept = x[rej.accepted]
    split = find_subspace(center, kept)
    mu_low = split.p_low.T @ (split.p_low @ kept.mean(axis=0))
    trace = float(np.sum(split.eigenvalues))
    return PartialResult(
        p_high=split.p_high,
        mu_low=mu_low,
        split=split,
        n_accepted=int(rej.accepted.size),
        n_samples=int(x.shape[0]),
        trace=trace,
        diagnostics={
            "accepted": int(rej.accepted.size),
            "acceptance_rate": rej.accepted.size / x.shape[0],
            "trace": trace,
            "low_max_eigenvalue": split.low_max_eigenvalue,
        },
    )
