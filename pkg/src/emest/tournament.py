"""Tournament selection among candidate means via projected 1-d estimates.

For an ordered pair ``(j, l)`` of distinct candidates let ``v`` be the unit
vector from ``mu_j`` to ``mu_l`` and ``m`` the 1-d estimate of the samples
projected on ``v``.  Candidate ``j`` is disqualified when

    |v.mu_j - m| > |v.mu_l - m| + 2 * f_bound

for some ``l``.  The winner is the lowest-index survivor.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import substream
from .scalar import Shorth

# Projection buffer budget (floats) for one vectorised batch of 1-d estimates.
_CHUNK_FLOATS = 1 << 22


@dataclass
class TournamentOutcome:
    winner: int
    disqualified: np.ndarray  # k x k, [j, l] True when l knocked out j
    estimates: np.ndarray  # k x k, 1-d estimate along v_{j,l}; nan when not evaluated
    survivors_empty: bool = False
    comparisons: int = 0


def _check(candidates, samples):
    cands = np.asarray(candidates, float)
    if cands.ndim != 2 or cands.shape[0] == 0:
        raise ConfigError("tournament needs a non-empty k x d candidate list")
    x = np.asarray(samples, float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ConfigError("tournament needs a non-empty n x d sample matrix")
    if x.shape[1] != cands.shape[1]:
        raise ConfigError("candidates and samples differ in dimension")
    return cands, x


class _Judge:
    """Evaluates rows of the disqualification matrix, caching nothing but counts."""

    def __init__(self, cands, samples, alpha, est, f_bound):
        self.cands = cands
        self.samples = samples
        self.alpha = alpha
        self.est = est
        self.slack = 2.0 * f_bound
        k = cands.shape[0]
        self.dq = np.zeros((k, k), bool)
        self.est_mat = np.full((k, k), np.nan)
        self.comparisons = 0

    def compare(self, j, others):
        """Evaluate pairs (j, l) for l in ``others``; return True if j is disqualified."""
        diff = self.cands[others] - self.cands[j]
        norms = np.linalg.norm(diff, axis=1)
        keep = norms > 0.0  # identical candidates are never compared
        others = others[keep]
        if others.size == 0:
            return False
        dirs = (diff[keep] / norms[keep, None]).T
        m = self.est.estimate_projections(self.samples, dirs, self.alpha)
        own = self.cands[j] @ dirs
        rival = np.einsum("ij,ji->i", self.cands[others], dirs)
        hit = np.abs(own - m) > np.abs(rival - m) + self.slack
        self.est_mat[j, others] = m
        self.dq[j, others] = hit
        self.comparisons += others.size
        return bool(hit.any())


def tournament_select(candidates, samples, alpha, est=None, f_bound=0.0, exhaustive=True):
    """Pick a candidate mean by pairwise projected comparisons.

    With ``exhaustive=False`` each row stops at its first disqualifier and rows
    after the first survivor are skipped.  The winner is the same; only the
    recorded matrices are sparser.  If nobody survives (the 1-d estimates
    broke their error bound) the full matrix is computed and the candidate
    with the fewest disqualifications wins.
    """
    est = est or Shorth()
    if f_bound < 0:
        raise ConfigError("f_bound must be nonnegative", "f_bound")
    cands, x = _check(candidates, samples)
    k = cands.shape[0]
    judge = _Judge(cands, x, alpha, est, f_bound)
    step = max(1, _CHUNK_FLOATS // x.shape[0])

    if exhaustive:
        for j in range(k):
            others = np.delete(np.arange(k), j)
            for s in range(0, others.size, step):
                judge.compare(j, others[s:s + step])
        alive = ~judge.dq.any(axis=1)
        winner = int(np.argmax(alive)) if alive.any() else None
    else:
        winner = None
        for j in range(k):
            others = np.delete(np.arange(k), j)
            s, width, out = 0, 8, False
            while s < others.size and not out:
                width = min(width, step)
                out = judge.compare(j, others[s:s + width])
                s += width
                width *= 2
            if not out:
                winner = j
                break
        if winner is None:
            return tournament_select(cands, x, alpha, est, f_bound, exhaustive=True)

    empty = winner is None
    if empty:
        winner = int(np.argmin(judge.dq.sum(axis=1)))
    return TournamentOutcome(winner=winner, disqualified=judge.dq, estimates=judge.est_mat,
                             survivors_empty=empty, comparisons=judge.comparisons)


def candidate_pool(current, batch_a, max_candidates=256, seed=0):
    """``current`` followed by the points of ``batch_a``.

    Above ``max_candidates`` entries, a uniform subsample of ``batch_a`` is kept
    (in original order) and ``current`` always stays at index 0.
    """
    a = np.asarray(batch_a, float)
    cur = np.asarray(current, float).reshape(1, -1)
    if a.ndim != 2 or a.shape[0] == 0:
        raise ConfigError("tournament_improve needs a non-empty candidate batch")
    if a.shape[1] != cur.shape[1]:
        raise ConfigError("current estimate and batch differ in dimension")
    budget = max(1, int(max_candidates) - 1)
    if a.shape[0] > budget:
        idx = np.sort(substream(seed, "tournament", "pool").choice(a.shape[0], budget,
                                                                  replace=False))
        a = a[idx]
    return np.vstack([cur, a])


def tournament_improve(current, batch_a, batch_b, alpha, est=None, f_bound=0.0,
                       max_candidates=256, seed=0, exhaustive=False, return_outcome=False):
    """Warm-start improvement: tournament over ``{current} + batch_a`` judged on ``batch_b``.

    ``current`` sits at index 0, so it wins whenever it survives.
    """
    b = np.asarray(batch_b, float)
    if b.ndim != 2 or b.shape[0] == 0:
        raise ConfigError("tournament_improve needs a non-empty judging batch")
    pool = candidate_pool(current, batch_a, max_candidates, seed)
    outcome = tournament_select(pool, b, alpha, est, f_bound, exhaustive=exhaustive)
    winner = pool[outcome.winner].copy()
    if return_outcome:
        return winner, outcome
    return winner
