"""Diagnostic estimators that read the true mean.  Never use outside tests."""

import numpy as np


class InjectedOracle:
    """1-d "estimator" that returns the exact projection of a known mean.

    ``value`` is a scalar (for 1-d use) or the full mean vector.  ``perturb``,
    if given, maps an ``d x P`` direction matrix to ``P`` additive errors, which
    lets tests inject estimates with a controlled error bound.
    """

    name = "oracle"

    def __init__(self, value, perturb=None):
        self.value = np.asarray(value, float)
        self.perturb = perturb

    def estimate(self, samples, alpha):
        if len(np.asarray(samples).ravel()) == 0:
            raise ValueError("empty sample")
        return float(self.value.ravel()[0])

    def estimate_projections(self, samples, directions, alpha):
        directions = np.asarray(directions, float)
        out = directions.T @ self.value
        if self.perturb is not None:
            out = out + self.perturb(directions)
        return out
