import dataclasses
import math

import numpy as np
import pytest

from regime_scout import explorer, gpr
from regime_scout.errors import ConfigInvalid, DegenerateClustering, EmptyPool, NonFinite
from regime_scout.explorer import FAILED, classify, extract_boundaries, initial_sample, run, select_next
from regime_scout.gpr import GPModel, Hyperparameters
from regime_scout.oracles import grid_points


class FixedMean:
    """Stand-in model whose posterior mean is a given function of the query."""

    def __init__(self, f):
        self.f = f

    def predict_many(self, thetas):
        thetas = np.atleast_2d(thetas)
        return self.f(thetas), np.zeros(len(thetas))


def test_initial_sample_stays_in_box_and_is_seeded():
    lo, hi = np.array([-3.5, -2.5]), np.array([3.5, 2.5])
    pts = initial_sample(lo, hi, 100_000, 1)
    assert np.all((pts >= lo) & (pts <= hi))
    assert np.array_equal(initial_sample(lo, hi, 50, 7), initial_sample(lo, hi, 50, 7))
    assert not np.array_equal(initial_sample(lo, hi, 50, 7), initial_sample(lo, hi, 50, 8))


def test_initial_batch_is_a_fifth_of_the_budget(small_config):
    assert small_config(budget=200).n_initial == 40
    assert small_config(budget=300).n_initial == 60


def tiny_model():
    X = np.array([[0.2, 0.2], [0.8, 0.8]])
    return GPModel(X, [0.0, 1.0], Hyperparameters(0.05, 0.3, 1.0), np.zeros(2), np.ones(2))


def test_single_candidate_is_returned():
    assert np.array_equal(select_next(tiny_model(), set(), [[0.4, 0.6]], 1.0, 0.01), [0.4, 0.6])


def test_uncertain_candidate_beats_certain_one_at_equal_mean():
    class Stub:
        def predict_many(self, thetas):
            return np.array([1.01, 1.01]), np.array([0.0, 0.5])

    assert np.array_equal(select_next(Stub(), set(), [[0.1, 0.1], [0.2, 0.2]], 1.0, 0.01), [0.2, 0.2])


def test_selection_matches_exhaustive_ei():
    model = tiny_model()
    rng = np.random.default_rng(0)
    for _ in range(50):
        cands = rng.uniform(size=(5, 2))
        scores = [gpr.expected_improvement(gpr.predict(model, c), 1.0, 0.01) for c in cands]
        assert np.array_equal(select_next(model, set(), cands, 1.0, 0.01), cands[int(np.argmax(scores))])


def test_sampled_points_are_excluded():
    model = tiny_model()
    cands = np.array([[0.5, 0.5], [0.9, 0.1]])
    best = select_next(model, set(), cands, 1.0, 0.01)
    other = cands[1] if np.array_equal(best, cands[0]) else cands[0]
    assert np.array_equal(select_next(model, {tuple(best)}, cands, 1.0, 0.01), other)
    with pytest.raises(EmptyPool):
        select_next(model, {tuple(c) for c in cands}, cands, 1.0, 0.01)


def test_zero_improvement_falls_back_to_largest_std():
    model = tiny_model()
    cands = np.array([[0.2, 0.2], [0.0, 1.0], [0.5, 0.5]])
    _, std = model.predict_many(cands)
    assert np.array_equal(select_next(model, set(), cands, 1e6, 0.0), cands[int(np.argmax(std))])


@pytest.mark.parametrize("mean, n_regimes, expected", [(0.2, 2, 0), (0.5, 2, 1), (7.9, 3, 2), (-0.6, 2, 0), (1.49, 3, 1)])
def test_classify_rounds_and_clamps(mean, n_regimes, expected):
    model = FixedMean(lambda t: np.full(len(t), mean))
    assert classify(model, [0.0, 0.0], n_regimes) == expected


def test_linear_field_boundary():
    axes = [np.linspace(0, 1, 101), np.linspace(0, 1, 101)]
    model = FixedMean(lambda t: t[:, 0])
    levels = extract_boundaries(model, axes, 2)
    assert list(levels) == [0.5]
    (line,) = levels[0.5]
    assert np.abs(line[:, 0] - 0.5).max() <= 0.01


def test_level_count_is_regimes_minus_one():
    axes = [np.linspace(0, 1, 31), np.linspace(0, 1, 31)]
    model = FixedMean(lambda t: 3.0 * t[:, 0])
    assert list(extract_boundaries(model, axes, 4)) == [0.5, 1.5, 2.5]
    assert extract_boundaries(model, axes, 1) == {}
    assert extract_boundaries(model, axes[:1], 2) == {}


def test_run_finds_both_pendulum_regimes(small_report):
    rep = small_report
    # rotations may split into left- and right-turning clusters
    assert rep.n_regimes in (2, 3)
    assert rep.stop_reason == "budget"
    assert len(rep.thetas) == 40
    assert list(rep.boundaries) == [k + 0.5 for k in range(rep.n_regimes - 1)]
    lo, hi = rep.config.system.lower, rep.config.system.upper
    assert np.all((rep.thetas >= lo) & (rep.thetas <= hi))
    for line in (ln for lines in rep.boundaries.values() for ln in lines):
        assert np.all((line >= lo - 1e-12) & (line <= hi + 1e-12))


def test_budget_accounting(small_report):
    rep = small_report
    n0 = rep.config.n_initial
    assert rep.iterations[:n0] == [0] * n0
    assert rep.iterations[n0:] == list(range(1, len(rep.thetas) - n0 + 1))
    assert len(rep.log) == len(rep.thetas) - n0
    assert all(ei is None for ei in rep.eis[:n0]) and all(ei >= 0 for ei in rep.eis[n0:])


def test_classifier_agrees_with_half_level(small_report):
    rep = small_report
    pts = grid_points(rep.grid_axes)
    labels = rep.classify(pts)
    assert np.array_equal(labels >= 1, rep.grid_mean >= 0.5)


def test_runs_are_reproducible(small_config):
    a = run(small_config(budget=24, initial_fraction=0.5))
    b = run(small_config(budget=24, initial_fraction=0.5))
    assert np.array_equal(a.thetas, b.thetas)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.grid_mean, b.grid_mean) and np.array_equal(a.grid_std, b.grid_std)


def test_zero_iterations_with_t_max_zero(small_config):
    rep = run(small_config(t_max=0))
    assert rep.stop_reason == "t_max"
    assert len(rep.thetas) == rep.config.n_initial and rep.log == []


def test_stopping_rules(small_config):
    rep = run(small_config(zeta_stop=10.0))
    assert rep.stop_reason == "uncertainty" and rep.log == []
    rep = run(small_config(zeta_stop=0.0, t_max=5))
    assert rep.stop_reason == "t_max" and len(rep.log) == 5


def test_frozen_hyperparameters_never_raise_uncertainty(small_config):
    rep = run(small_config(refit_every=10_000, budget=36, initial_fraction=0.5))
    stds = [r.max_std for r in rep.log]
    assert all(b <= a + 1e-12 for a, b in zip(stds, stds[1:]))


def test_step_shrinks_uncertainty_at_the_new_point(small_config):
    cfg = small_config(refit_every=10_000)
    state = explorer.start(cfg)
    for _ in range(5):
        before = state.model
        old = state.labels.copy()
        explorer.step(state)
        theta = state.thetas[-1]
        # a new sample can pull earlier noise into a cluster; otherwise growth is 0 or 1
        if np.array_equal(state.labels[:-1] >= 0, old >= 0):
            grew = int((state.labels >= 0).sum()) - int((old >= 0).sum())
            assert grew == int(state.labels[-1] >= 0)
        if state.labels[-1] >= 0:
            assert gpr.predict(state.model, theta).std < gpr.predict(before, theta).std


def test_diverged_simulation_is_marked_failed(small_config, monkeypatch):
    real = explorer.simulate_batch
    calls = {"n": 0}

    def flaky(spec, thetas, *args, **kwargs):
        calls["n"] += 1
        if len(thetas) == 1 and calls["n"] == 3:
            raise NonFinite("boom", step=1, index=0)
        return real(spec, thetas, *args, **kwargs)

    monkeypatch.setattr(explorer, "simulate_batch", flaky)
    rep = run(small_config(t_max=4))
    assert (rep.labels == FAILED).sum() == 1
    assert len(rep.thetas) == rep.config.n_initial + 4
    failed = int(np.flatnonzero(rep.labels == FAILED)[0])
    assert failed not in rep.embedded
    assert len(rep.model.targets) == int((rep.labels >= 0).sum())


def test_all_noise_aborts_with_guidance(small_config):
    with pytest.raises(DegenerateClustering, match="eps"):
        run(small_config(cluster=dataclasses.replace(small_config().cluster, eps=1e-6)))


@pytest.mark.parametrize("changes, path", [
    ({"initial_fraction": 1.0}, "sampling.initial_fraction"),
    ({"budget": 5}, "sampling.budget"),
    ({"zeta_stop": None, "t_max": None}, "stop"),
    ({"grid_resolution": 1}, "sampling.grid_resolution"),
])
def test_config_invariants(small_config, changes, path):
    with pytest.raises(ConfigInvalid) as err:
        small_config(**changes)
    assert err.value.path == path


def test_embedding_window_must_fit_the_record(small_config):
    from regime_scout.embedding import EmbeddingConfig

    with pytest.raises(ConfigInvalid, match="embedding.n_f"):
        small_config(embedding=EmbeddingConfig(512, 0.0))


def test_three_dimensional_box_runs_without_contours(small_config):
    from regime_scout.dynamics import Axis

    spec = small_config().system.replace(
        coefficients={"lam": 0.0},
        free_axes=(Axis("x0", -3.5, 3.5), Axis("v0", -2.5, 2.5), Axis("omega", 0.8, 1.2)),
    )
    rep = run(small_config(system=spec, t_max=2, grid_resolution=5))
    assert rep.boundaries == {}
    assert rep.grid_mean.shape == (125,)
    assert math.isfinite(rep.grid_std.max())
