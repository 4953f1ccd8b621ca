"""One-dimensional subset-of-signals estimation.

``f_delta`` is the error profile a 1-d estimator is expected to meet; the
pipeline uses it as the tolerance of tournament comparisons and to decide
when a recursion level can stop.  The default 1-d estimator is the shorth
midpoint: the centre of the shortest window holding ``ceil(alpha * n)``
points.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import inlier_count


@dataclass(frozen=True)
class ErrorProfileConfig:
    delta: float = 3.0
    c_delta: float = 1.0
    polylog_exponent: int = 1

    def __post_init__(self):
        if not self.c_delta > 0:
            raise ConfigError("c_delta must be positive", "f_profile.c_delta")
        if self.delta < 0 or self.polylog_exponent < 0:
            raise ConfigError("delta and polylog_exponent must be nonnegative", "f_profile")


def f_delta(alpha, n, cfg=None):
    """Error profile of the 1-d estimator; ``math.inf`` outside its valid range.

    ``C * log(n/alpha)^p / (alpha^2 n^{3/2})`` in the sparse regime
    ``C log(n)/n <= alpha <= n^{-3/4}`` and ``C * log(n/alpha)^p / (alpha^{2/3} n^{1/2})``
    for ``n^{-3/4} < alpha < 1``.
    """
    cfg = cfg or ErrorProfileConfig()
    if n < 1 or not 0.0 < alpha < 1.0:
        return math.inf
    if alpha < cfg.c_delta * math.log(n) / n:
        return math.inf
    factor = cfg.c_delta * math.log(n / alpha) ** cfg.polylog_exponent
    if alpha <= n ** -0.75:
        return factor / (alpha ** 2 * n ** 1.5)
    return factor / (alpha ** (2.0 / 3.0) * math.sqrt(n))


class Shorth:
    """Midpoint of the shortest window containing ``ceil(alpha * n)`` points.

    Ties between equally short windows go to the one with the smallest left
    endpoint.
    """

    name = "shorth"

    def estimate(self, samples, alpha):
        x = np.asarray(samples, float).ravel()
        return float(self.estimate_columns(x[:, None], alpha)[0])

    def estimate_columns(self, values, alpha):
        """Shorth of every column of an ``n x P`` array."""
        values = np.asarray(values, float)
        return self.estimate_rows(np.ascontiguousarray(values.T), alpha)

    def estimate_rows(self, rows, alpha):
        """Shorth of every row of a ``P x n`` array (the fast layout for sorting)."""
        rows = np.asarray(rows, float)
        n = rows.shape[1]
        if n == 0:
            raise ConfigError("cannot estimate from an empty sample")
        if not 0.0 < alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {alpha}", "alpha")
        k = inlier_count(alpha, n)
        xs = np.sort(rows, axis=1)
        widths = xs[:, k - 1:] - xs[:, : n - k + 1]
        left = np.argmin(widths, axis=1)
        idx = np.arange(xs.shape[0])
        return (xs[idx, left] + xs[idx, left + k - 1]) / 2.0

    def estimate_projections(self, samples, directions, alpha):
        """Shorth of ``samples @ directions[:, j]`` for every column ``j``."""
        x = np.asarray(samples, float)
        return self.estimate_rows(np.asarray(directions, float).T @ x.T, alpha)


def one_d_estimate(samples, alpha, est=None):
    est = est or Shorth()
    x = np.asarray(samples, float).ravel()
    if x.size == 0:
        raise ConfigError("cannot estimate from an empty sample")
    return est.estimate(x, alpha)


def _as_matrix(samples):
    try:
        x = np.asarray(samples, float)
    except ValueError as exc:
        raise ConfigError(f"samples have inconsistent dimensions: {exc}") from None
    if x.ndim != 2:
        raise ConfigError(f"expected an n x d sample matrix, got shape {x.shape}")
    if x.shape[0] == 0:
        raise ConfigError("cannot estimate from an empty sample")
    return x


def naive_multivariate(samples, alpha, est=None):
    """Run the 1-d estimator independently along every coordinate axis."""
    est = est or Shorth()
    x = _as_matrix(samples)
    return est.estimate_projections(x, np.eye(x.shape[1]), alpha)
