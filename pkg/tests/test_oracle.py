import numpy as np
import pytest

from conftest import random_chain
from patrolchain import chain
from patrolchain.objectives import j_sg, team_capture_matrix
from patrolchain.oracle import (SimConfig, empirical_capture, first_arrivals, simulate_hitting,
                                simulate_hitting_all)

CYCLE = np.array([[0.0, 1.0], [1.0, 0.0]])
HALF = np.full((2, 2), 0.5)
ONES2 = np.ones((2, 2), dtype=int)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(trials=0)
    with pytest.raises(ValueError):
        SimConfig(horizon=0)


def test_cycle_arrives_in_one_step():
    s = simulate_hitting(CYCLE, ONES2, 0, 1, SimConfig(trials=1000, horizon=5))
    assert s.freq[0] == 1.0 and s.censored == 0.0 and s.mean == 1.0


def test_geometric_return_law():
    cfg = SimConfig(trials=200_000, horizon=12, seed=4)
    s = simulate_hitting(HALF, ONES2, 0, 0, cfg)
    exact = 0.5 ** np.arange(1, 13)
    sigma = np.sqrt(exact * (1 - exact) / cfg.trials)
    assert np.all(np.abs(s.freq - exact) <= 4 * sigma)
    assert s.censored == pytest.approx(0.5 ** 12, abs=5 * np.sqrt(0.5 ** 12 / cfg.trials))


def test_weighted_two_cycle_return():
    s = simulate_hitting(CYCLE, np.full((2, 2), 2), 0, 0, SimConfig(trials=500, horizon=6))
    assert s.freq[3] == 1.0 and s.freq.sum() == 1.0


def test_hops_mode_ignores_weights():
    s = simulate_hitting(CYCLE, np.full((2, 2), 2), 0, 0,
                         SimConfig(trials=500, horizon=6, weighted=False))
    assert s.freq[1] == 1.0


def test_censoring_reported():
    s = simulate_hitting(CYCLE, np.full((2, 2), 7), 0, 1, SimConfig(trials=100, horizon=5))
    assert s.censored == 1.0 and np.isnan(s.mean)


def test_all_targets_agree_with_recursion(rng):
    P = random_chain(rng, 4)
    W = rng.integers(1, 3, size=(4, 4))
    cfg = SimConfig(trials=100_000, horizon=15, seed=2)
    F = chain.hitting_probs(P, W, 15).F
    for j, s in enumerate(simulate_hitting_all(P, W, 1, cfg)):
        sigma = np.sqrt(np.maximum(F[:, 1, j] * (1 - F[:, 1, j]), 1e-12) / cfg.trials)
        assert np.all(np.abs(s.freq - F[:, 1, j]) <= 5 * sigma + 1e-12)


def test_determinism_and_blocks(rng):
    P = random_chain(rng, 3)
    cfg = SimConfig(trials=150_000, horizon=10, seed=9)  # spans two blocks
    a = first_arrivals(P, np.ones((3, 3)), 0, cfg)
    b = first_arrivals(P, np.ones((3, 3)), 0, cfg)
    assert np.array_equal(a, b)
    c = first_arrivals(P, np.ones((3, 3)), 0, SimConfig(150_000, 10, seed=10))
    assert not np.array_equal(a, c)


def test_capture_deterministic_cycle():
    emp = empirical_capture(CYCLE, ONES2, [2, 2], SimConfig(trials=200))
    assert np.all(emp.Lambda == 1.0)


def test_two_robot_capture():
    cfg = SimConfig(trials=100_000, seed=1)
    emp = empirical_capture([HALF, HALF], [ONES2, ONES2], [1, 1], cfg, rows=[(0, 1)])
    assert emp.Lambda[0, 0] == pytest.approx(0.75, abs=4 * np.sqrt(0.75 * 0.25 / cfg.trials))
    assert emp.configs == [(0, 1)]


def test_team_capture_agrees(rng):
    Ps = [random_chain(rng, 3), random_chain(rng, 3)]
    Ws = [np.array([[1, 2, 1], [1, 1, 2], [2, 1, 1]])] * 2
    cfg = SimConfig(trials=20_000, seed=5)
    emp = empirical_capture(Ps, Ws, [2, 3, 2], cfg)
    exact = team_capture_matrix(Ps, Ws, [2, 3, 2])
    assert emp.Lambda.shape == exact.shape == (9, 3)
    sigma = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / cfg.trials)
    z = np.abs(emp.Lambda - exact) / sigma
    assert np.all(z < 5)


def test_sf_min_capture_agrees(rng, sf):
    g, _ = sf
    P = random_chain(rng, 12)
    cfg = SimConfig(trials=20_000, seed=8)
    exact = team_capture_matrix([P], [g.weights], 9)
    i, j = np.unravel_index(np.argmin(exact), exact.shape)
    emp = empirical_capture(P, g.weights, 9, cfg, rows=[(i,)])
    sigma = np.sqrt(exact[i, j] * (1 - exact[i, j]) / cfg.trials)
    assert abs(emp.Lambda[0, j] - j_sg(P, g.weights, 9)) < 4 * sigma
