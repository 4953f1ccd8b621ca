"""Deterministic invariant checks run by ``emest selftest``.

Each check returns ``(passed, detail)``.  They use small randomized
instances with fixed seeds, so a run is reproducible.
"""

import math

import numpy as np

from .recursive import AlgoConfig, BatchSupplier, Schedule, recursive_estimate
from .rng import substream
from .subspace import (acceptance_probability_oracle, conditional_params, expected_bias,
                       find_subspace, second_moment)
from .testing import InjectedOracle
from .tournament import tournament_select


def random_psd(rng, d, floor=0.5, spread=4.0):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (q * rng.uniform(floor, floor + spread, d)) @ q.T


def bias_identity(instances=200, seed=0):
    worst = 0.0
    for i in range(instances):
        rng = substream(seed, "check", "bias", i)
        d = int(rng.choice([2, 4, 8, 16]))
        k = int(rng.integers(1, 51))
        mu = rng.normal(0, 3, d)
        center = mu + rng.normal(0, 2, d)
        conds = [conditional_params(random_psd(rng, d), mu, center) for _ in range(k)]
        lhs = np.mean([c.mean for c in conds], axis=0) - mu
        rhs = expected_bias(conds, mu, center)
        worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    return worst <= 1e-10, f"max relative deviation {worst:.2e}"


def _cloud(rng):
    d = 2 * int(rng.integers(1, 17))
    k = int(rng.integers(1, 4 * d))
    scales = rng.lognormal(0, 1.5, d)
    return rng.normal(0, 1, (k, d)) * scales, rng.normal(0, 1, d)


def spectral_bound(instances=500, seed=0):
    worst = -math.inf
    for i in range(instances):
        rng = substream(seed, "check", "spectral", i)
        pts, center = _cloud(rng)
        d = pts.shape[1]
        m = second_moment(center, pts)
        lam = np.sort(np.linalg.eigvalsh(m))[::-1]
        worst = max(worst, lam[d // 2] - 2 * np.trace(m) / d)
    return worst <= 1e-9, f"max excess {worst:.2e}"


def split_identities(instances=500, seed=0):
    worst = 0.0
    for i in range(instances):
        rng = substream(seed, "check", "split", i)
        pts, center = _cloud(rng)
        s = find_subspace(center, pts)
        d = pts.shape[1]
        errs = [
            np.abs(s.p_low @ s.p_low.T - np.eye(s.p_low.shape[0])).max(),
            np.abs(s.p_high @ s.p_high.T - np.eye(s.p_high.shape[0])).max(),
            np.abs(s.p_low @ s.p_high.T).max(),
            np.abs(s.p_low.T @ s.p_low + s.p_high.T @ s.p_high - np.eye(d)).max(),
        ]
        worst = max(worst, *errs)
        if np.any(np.diff(s.eigenvalues) > 1e-12):
            return False, f"instance {i}: eigenvalues not descending"
    return worst <= 1e-8, f"max identity error {worst:.2e}"


def acceptance_closed_forms():
    a = acceptance_probability_oracle(np.eye(2), np.zeros(2), np.zeros(2))
    b = acceptance_probability_oracle(np.eye(10), np.zeros(10), np.zeros(10))
    ok = abs(a - 0.5) < 1e-12 and abs(b - (10 / 12) ** 5) < 1e-12
    return ok, f"d=2: {a:.12f}, d=10: {b:.12f}"


def tournament_exactness(instances=300, seed=0):
    for i in range(instances):
        rng = substream(seed, "check", "tournament", i)
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 9))
        mu = rng.normal(0, 1, d)
        cands = mu + rng.normal(0, 1, (k, d)) * rng.lognormal(0, 1, (k, 1))
        out = tournament_select(cands, np.zeros((1, d)), 0.5, InjectedOracle(mu), 0.0)
        dist = np.linalg.norm(cands - mu, axis=1)
        if dist[out.winner] > 2 * dist.min() + 1e-12:
            return False, f"instance {i}: winner at {dist[out.winner]:.4g}, best {dist.min():.4g}"
    return True, f"{instances} instances"


def noiseless_fixed_point(dims=(4, 8, 16, 32), seed=0):
    worst = 0.0
    for dim in dims:
        rng = substream(seed, "check", "noiseless", dim)
        mu = rng.normal(0, 5, dim)
        batch = np.tile(mu, (64, 1))
        for cfg in (AlgoConfig(), AlgoConfig(base_case_constant=0.0)):
            sched = Schedule.with_batch(64, dim, 0.5, cfg, n_total=10 ** 5)
            supplier = BatchSupplier([batch] * (3 * sched.m + 3))
            out = recursive_estimate(np.eye(dim), supplier, np.zeros(dim), sched, cfg, seed)
            worst = max(worst, np.abs(out - mu).max())
    return worst <= 1e-8, f"max deviation {worst:.2e}"


CHECKS = {
    "bias_identity": bias_identity,
    "spectral_bound": spectral_bound,
    "split_identities": split_identities,
    "acceptance_closed_forms": acceptance_closed_forms,
    "tournament_exactness": tournament_exactness,
    "noiseless_fixed_point": noiseless_fixed_point,
}


def run_all():
    return {name: fn() for name, fn in CHECKS.items()}
