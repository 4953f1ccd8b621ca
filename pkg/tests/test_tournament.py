import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emest.errors import ConfigError
from emest.model import AdversarySpec, ModelParams, generate_dataset
from emest.scalar import Shorth, f_delta
from emest.testing import InjectedOracle
from emest.tournament import candidate_pool, tournament_improve, tournament_select

from oracles import tournament_bound_holds

DUMMY = np.zeros((1, 2))


def test_single_candidate_wins_without_comparisons():
    out = tournament_select([[3.0, 4.0]], DUMMY, 0.5, InjectedOracle([0, 0]))
    assert out.winner == 0 and out.comparisons == 0


def test_hand_executed_pair():
    out = tournament_select([[1.0, 0.0], [10.0, 0.0]], DUMMY, 0.5, InjectedOracle([0.0, 0.0]))
    assert out.winner == 0
    assert not out.disqualified[0].any()
    assert out.disqualified[1, 0]
    assert out.estimates[1, 0] == pytest.approx(0.0)


def test_identical_candidates_are_skipped():
    out = tournament_select(np.ones((5, 2)), DUMMY, 0.5, InjectedOracle([9.0, 9.0]))
    assert out.winner == 0 and not out.disqualified.any() and out.comparisons == 0


def _instance(rng, k, d):
    mu = rng.normal(0, 1, d)
    cands = mu + rng.normal(0, 1, (k, d)) * rng.lognormal(0, 1, (k, 1))
    return mu, cands


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2 ** 32), k=st.integers(1, 8), d=st.integers(1, 4))
def test_exact_oracle_winner_within_twice_best(seed, k, d):
    mu, cands = _instance(np.random.default_rng(seed), k, d)
    out = tournament_select(cands, DUMMY[:, :1].repeat(d, 1), 0.5, InjectedOracle(mu), 0.0)
    assert tournament_bound_holds(cands, mu, out.winner)
    assert not out.survivors_empty


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32), k=st.integers(2, 8), d=st.integers(1, 4),
       f=st.floats(0.0, 0.5))
def test_perturbed_oracle_winner_bound(seed, k, d, f):
    rng = np.random.default_rng(seed)
    mu, cands = _instance(rng, k, d)

    def noise(dirs):
        return rng.uniform(-f, f, dirs.shape[1])

    out = tournament_select(cands, np.zeros((1, d)), 0.5, InjectedOracle(mu, noise), f)
    assert not out.survivors_empty
    assert tournament_bound_holds(cands, mu, out.winner, slack=4 * f)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32), k=st.integers(1, 12), d=st.integers(1, 4))
def test_lazy_and_exhaustive_agree(seed, k, d):
    rng = np.random.default_rng(seed)
    mu, cands = _instance(rng, k, d)
    x = mu + rng.normal(0, 1, (60, d))
    full = tournament_select(cands, x, 0.5, Shorth(), 0.05, exhaustive=True)
    lazy = tournament_select(cands, x, 0.5, Shorth(), 0.05, exhaustive=False)
    assert full.winner == lazy.winner
    assert np.array_equal(lazy.disqualified, lazy.disqualified & full.disqualified)


def test_empty_survivor_fallback_picks_fewest_losses():
    # a lying oracle makes every candidate lose to some other one
    cands = np.array([[0.0], [1.0], [2.0]])

    def liar(dirs):
        return np.full(dirs.shape[1], 100.0) * np.sign(dirs[0])

    out = tournament_select(cands, np.zeros((1, 1)), 0.5, InjectedOracle([1.0], liar), 0.0)
    losses = out.disqualified.sum(axis=1)
    if out.survivors_empty:
        assert losses[out.winner] == losses.min()
    else:
        assert losses[out.winner] == 0


def test_tournament_validates_inputs():
    with pytest.raises(ConfigError):
        tournament_select(np.zeros((0, 2)), DUMMY, 0.5)
    with pytest.raises(ConfigError):
        tournament_select(np.zeros((2, 3)), DUMMY, 0.5)
    with pytest.raises(ConfigError):
        tournament_select(np.zeros((2, 2)), DUMMY, 0.5, f_bound=-1)


def test_candidate_pool_keeps_current_first():
    a = np.arange(1000.0).reshape(500, 2)
    pool = candidate_pool([-1.0, -1.0], a, 64, seed=3)
    assert pool.shape == (64, 2)
    assert pool[0].tolist() == [-1.0, -1.0]
    assert np.all(np.diff(pool[1:, 0]) > 0)
    assert candidate_pool([0, 0], a[:5], 64, 0).shape == (6, 2)


def test_improve_returns_exact_mean_when_present():
    mu = np.array([0.5, -1.0])
    batch_a = np.array([[4.0, 4.0], mu, [-3.0, 2.0]])
    out = tournament_improve([9.0, 9.0], batch_a, np.zeros((3, 2)), 0.5, InjectedOracle(mu), 0.0)
    np.testing.assert_array_equal(out, mu)


def test_improve_keeps_good_current():
    mu = np.zeros(3)
    out = tournament_improve(mu, np.ones((4, 3)), np.zeros((2, 3)), 0.5, InjectedOracle(mu), 0.0)
    np.testing.assert_array_equal(out, mu)


@pytest.mark.slow
def test_improve_from_far_away_lands_within_sqrt_d():
    adv = AdversarySpec.parse("isotropic:10000")
    n, d, hits = 5000, 16, 0
    f = f_delta(0.3, n)
    for trial in range(100):
        rng = np.random.default_rng(trial)
        mu = rng.normal(0, 1, d)
        a = generate_dataset(ModelParams(d, n, 0.3, mu), adv, 2 * trial).samples
        b = generate_dataset(ModelParams(d, n, 0.3, mu), adv, 2 * trial + 1).samples
        u = rng.standard_normal(d)
        current = mu + 1e6 * u / np.linalg.norm(u)
        out = tournament_improve(current, a, b, 0.3, Shorth(), f, seed=trial)
        hits += np.linalg.norm(out - mu) <= 4 * np.sqrt(d)
    assert hits >= 90
