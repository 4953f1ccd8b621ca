import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emest.errors import ConfigError
from emest.model import (AdversarySpec, ModelParams, generate_dataset, inlier_count,
                         preprocess_half_identity, split_batches)

ADVERSARIES = ["identity", "isotropic:10000", "lowrank:2:500", "embed1d:1:50"]


def test_inlier_count_guards_float_noise():
    assert inlier_count(0.3, 10) == 3
    assert inlier_count(0.25, 10) == 3
    assert inlier_count(1e-9, 10) == 1
    assert inlier_count(1.0, 7) == 7


@pytest.mark.parametrize("kw, field", [
    ({"dim": 0, "n_samples": 5, "alpha": 0.5}, "dim"),
    ({"dim": 2, "n_samples": 0, "alpha": 0.5}, "n_samples"),
    ({"dim": 2, "n_samples": 5, "alpha": 0.0}, "alpha"),
    ({"dim": 2, "n_samples": 5, "alpha": 1.5}, "alpha"),
    ({"dim": 2, "n_samples": 5, "alpha": 0.5, "true_mean": [1.0]}, "true_mean"),
])
def test_model_params_validation(kw, field):
    with pytest.raises(ConfigError) as info:
        ModelParams(**kw)
    assert info.value.field == field


@pytest.mark.parametrize("text", ADVERSARIES)
def test_adversary_round_trip(text):
    assert AdversarySpec.parse(text).name == text


@pytest.mark.parametrize("text", ["bogus", "isotropic", "lowrank:x:1", "identity:3"])
def test_adversary_parse_rejects(text):
    with pytest.raises(ConfigError):
        AdversarySpec.parse(text)


@pytest.mark.parametrize("adv", ADVERSARIES)
def test_alpha_one_makes_everyone_an_inlier(adv):
    data = generate_dataset(ModelParams(4, 50, 1.0), AdversarySpec.parse(adv), 3)
    assert data.inlier_mask.all()
    assert np.all(data.cov.eig_bounds()[1] <= 1.0 + 1e-12)


@pytest.mark.parametrize("adv", ADVERSARIES)
@pytest.mark.parametrize("rule", ["identity", "uniform"])
def test_inlier_fraction_and_psd_bounds(adv, rule):
    params = ModelParams(6, 301, 0.3)
    data = generate_dataset(params, AdversarySpec.parse(adv, rule), 11)
    lo, hi = data.cov.eig_bounds()
    assert data.inlier_mask.sum() >= math.ceil(0.3 * 301)
    assert np.all(lo >= -1e-12)
    dense_hi = max(np.linalg.eigvalsh(data.cov.dense(i)).max() for i in range(0, 301, 37))
    assert dense_hi <= hi.max() + 1e-9


def test_descriptors_match_dense_draw_covariance():
    data = generate_dataset(ModelParams(3, 40, 0.5), AdversarySpec.parse("lowrank:1:9"), 5)
    for i in range(40):
        eig = np.linalg.eigvalsh(data.cov.dense(i))
        lo, hi = data.cov.eig_bounds()
        assert eig.min() == pytest.approx(lo[i]) and eig.max() == pytest.approx(hi[i])


def test_identity_adversary_empirical_covariance():
    data = generate_dataset(ModelParams(2, 100_000, 0.3), AdversarySpec(), 0)
    cov = np.cov(data.samples.T)
    assert np.linalg.norm(cov - np.eye(2), 2) <= 0.05


def test_dataset_is_read_only_and_deterministic():
    params = ModelParams(3, 20, 0.5, [1.0, 2.0, 3.0])
    a = generate_dataset(params, AdversarySpec.parse("isotropic:4"), 9)
    b = generate_dataset(params, AdversarySpec.parse("isotropic:4"), 9)
    np.testing.assert_array_equal(a.samples, b.samples)
    with pytest.raises(ValueError):
        a.samples[0, 0] = 1.0


def test_split_small_partition():
    x = np.arange(12.0).reshape(12, 1)
    plan, batches = split_batches(x, 3, 0)
    assert plan.batch_sizes == (4, 4, 4)
    assert sorted(np.concatenate(batches).ravel()) == list(range(12))
    _, single = split_batches(x, 1, 0)
    assert sorted(single[0].ravel()) == list(range(12))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 200), t=st.integers(1, 50), seed=st.integers(0, 2 ** 32))
def test_split_is_a_partition(n, t, seed):
    if t > n:
        with pytest.raises(ConfigError):
            split_batches(np.zeros((n, 1)), t, seed)
        return
    plan, _ = split_batches(np.zeros((n, 1)), t, seed)
    idx = np.concatenate(plan.assignment)
    assert sorted(idx.tolist()) == list(range(n))
    assert max(plan.batch_sizes) - min(plan.batch_sizes) <= 1


def test_split_keeps_inlier_fraction():
    params = ModelParams(1, 10_000, 0.3)
    data = generate_dataset(params, AdversarySpec.parse("isotropic:100"), 0)
    good = 0
    for seed in range(200):
        plan, _ = split_batches(data, 4, seed)
        fracs = [data.inlier_mask[idx].mean() for idx in plan.assignment]
        good += min(fracs) >= 0.9 * 0.3
    assert good / 200 >= 0.99


def test_split_dataset_carries_truth():
    data = generate_dataset(ModelParams(2, 30, 0.5), AdversarySpec.parse("isotropic:9"), 1)
    _, parts = split_batches(data, 3, 4)
    assert sum(p.n for p in parts) == 30
    assert all(p.cov is not None and p.inlier_mask.shape == (p.n,) for p in parts)


def test_preprocess_half_identity_descriptors():
    params = ModelParams(2, 3, 1.0, [2.0, 0.0])
    data = generate_dataset(params, AdversarySpec(), 0)
    out = preprocess_half_identity(data, 1)
    np.testing.assert_allclose(out.true_mean, [math.sqrt(2), 0.0])
    np.testing.assert_allclose(out.cov.dense(0), np.eye(2))
    point = generate_dataset(ModelParams(2, 3, 0.5), AdversarySpec.parse("embed1d:0:0"), 0)
    half = preprocess_half_identity(point, 1).cov
    massless = int(np.flatnonzero(point.cov.iso + point.cov.spike == 0)[0])
    np.testing.assert_allclose(half.dense(massless), 0.5 * np.eye(2))


def test_preprocess_lower_bound_statistically():
    params = ModelParams(2, 50_000, 0.5)
    data = generate_dataset(params, AdversarySpec.parse("embed1d:0:0"), 2)
    out = preprocess_half_identity(data, 3)
    outliers = out.samples[data.cov.iso + data.cov.spike == 0]
    assert np.linalg.eigvalsh(np.cov(outliers.T)).min() == pytest.approx(0.5, abs=0.03)
