import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_chain
from patrolchain import chain
from patrolchain.oracle import SimConfig, first_arrivals

CYCLE = np.array([[0.0, 1.0], [1.0, 0.0]])
HALF = np.full((2, 2), 0.5)


# -- parametrization --------------------------------------------------------------

def test_parametrize_examples():
    assert np.allclose(chain.parametrize(np.ones((3, 3)), np.ones((3, 3))), 1 / 3)
    P = chain.parametrize([[1, -2], [3, 0]], np.ones((2, 2)))
    assert np.allclose(P, [[1 / 3, 2 / 3], [1, 0]])


def test_parametrize_degenerate_row():
    with pytest.raises(chain.DegenerateRowError, match="degenerate row"):
        chain.parametrize([[0.0, 0.0], [1.0, 2.0]], np.ones((2, 2)))
    # mass only on a disallowed entry is also degenerate
    with pytest.raises(chain.DegenerateRowError):
        chain.parametrize([[0.0, 5.0], [1.0, 2.0]], [[1, 0], [1, 1]])


def test_parametrize_rejects_nonfinite():
    with pytest.raises(ValueError):
        chain.parametrize([[np.nan, 1.0], [1.0, 1.0]], np.ones((2, 2)))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    arrays(float, (n, n), elements=st.floats(-10, 10)),
    arrays(np.int64, (n, n), elements=st.integers(0, 1)))))
def test_parametrize_properties(QA):
    Q, A = QA
    A = A.copy()
    np.fill_diagonal(A, 1)
    Q = Q + np.eye(len(Q)) * (np.abs(np.diag(Q)) < 1e-3)  # keep every row alive
    P = chain.parametrize(Q, A)
    assert np.all(P >= 0)
    assert np.all(P[A == 0] == 0)
    assert np.allclose(P.sum(axis=1), 1, atol=1e-12, rtol=0)


# -- stationary distributions ---------------------------------------------------

def test_power_examples():
    ds = np.array([[0.2, 0.8], [0.8, 0.2]])
    for iters in (0, 1, 7):
        assert np.array_equal(chain.stationary_power(ds, iters).pi, [0.5, 0.5])
    res = chain.stationary_power([[0.9, 0.1], [0.5, 0.5]], 200)
    assert np.allclose(res.pi, [5 / 6, 1 / 6], atol=1e-12)
    assert res.residual < 1e-12
    assert np.array_equal(chain.stationary_power(CYCLE, 10).pi, [0.5, 0.5])


def test_power_iterates_shape():
    its = chain.power_iterates(HALF, 4)
    assert its.shape == (5, 2)


def test_direct_examples():
    assert np.allclose(chain.stationary_direct(np.full((4, 4), 0.25)).pi, 0.25)
    res = chain.stationary_direct([[0.9, 0.1], [0.5, 0.5]])
    assert np.allclose(res.pi, [5 / 6, 1 / 6], atol=1e-14)
    assert res.residual <= 1e-12
    with pytest.raises(chain.ReducibleChainError, match="reducible chain"):
        chain.stationary_direct(np.eye(2))


def test_power_agrees_with_direct(rng):
    for _ in range(20):
        P = random_chain(rng, int(rng.integers(2, 12)))
        a = chain.stationary_power(P, 500).pi
        b = chain.stationary_direct(P).pi
        assert np.max(np.abs(a - b)) < 1e-9


# -- hitting-time recursions ----------------------------------------------------

def test_homogeneous_examples():
    F = chain.hitting_probs_homogeneous(HALF, 2)
    assert np.allclose(F.at(2), 0.25)
    F = chain.hitting_probs_homogeneous(CYCLE, 2)
    assert np.array_equal(F.at(1), CYCLE)
    assert np.array_equal(F.at(2), np.eye(2))
    with pytest.raises(IndexError):
        F.at(3)


def test_heterogeneous_two_cycle():
    F = chain.hitting_probs_heterogeneous(CYCLE, np.full((2, 2), 2), 4).F
    expected = np.zeros((4, 2, 2))
    expected[1, 0, 1] = expected[1, 1, 0] = 1.0  # F_2 off-diagonal
    expected[3, 0, 0] = expected[3, 1, 1] = 1.0  # F_4 returns
    assert np.array_equal(F, expected)


def test_heterogeneous_reduces_bitwise(rng):
    P = random_chain(rng, 5)
    a = chain.hitting_probs_heterogeneous(P, np.ones((5, 5), int), 20).F
    b = chain.hitting_probs_homogeneous(P, 20).F
    assert np.array_equal(a, b)


def test_hitting_mass_properties(rng):
    for _ in range(10):
        P = random_chain(rng, 4)
        F = chain.hitting_probs(P, np.ones((4, 4)), 200).F
        cum = np.cumsum(F, axis=0)
        assert np.all(F >= 0) and np.all(F <= 1)
        assert np.all(np.diff(cum, axis=0) >= 0)
        assert np.all(cum <= 1 + 1e-12)
        assert np.all(cum[-1] > 0.999)


def test_heterogeneous_mass_bounded(rng, sf):
    g, _ = sf
    P = random_chain(rng, 12)
    F = chain.hitting_probs(P, g.weights, 300).F
    assert np.all(F.sum(axis=0) <= 1 + 1e-12)
    assert np.all(F[:0] == 0)
    # nothing arrives before the shortest travel time
    assert np.all(F[0][g.weights > 1] == 0)


def test_heterogeneous_matches_simulation(rng, sf):
    g, _ = sf
    P = random_chain(rng, 12)
    F = chain.hitting_probs(P, g.weights, 30).F
    cfg = SimConfig(trials=40_000, horizon=30, seed=3)
    times = first_arrivals(P, g.weights, 2, cfg)
    for j in (0, 2, 7):
        freq = np.bincount(times[:, j], minlength=32)[1:31] / cfg.trials
        sigma = np.sqrt(np.maximum(F[:, 2, j] * (1 - F[:, 2, j]), 1e-12) / cfg.trials)
        assert np.all(np.abs(freq - F[:, 2, j]) <= 5 * sigma + 1e-12)


# -- mean hitting times -----------------------------------------------------------

def test_mean_hitting_examples():
    assert np.allclose(chain.mean_hitting_hops(CYCLE), [[2, 1], [1, 2]])
    assert np.allclose(chain.mean_hitting_hops(HALF), [[2, 2], [2, 2]])
    assert np.allclose(chain.mean_hitting_weighted(CYCLE, np.full((2, 2), 2)), [[4, 2], [2, 4]])
    P = np.array([[0.3, 0.7], [0.6, 0.4]])
    assert np.array_equal(chain.mean_hitting_weighted(P, np.ones((2, 2))), chain.mean_hitting_hops(P))


def test_mean_hitting_satisfies_definition(rng):
    P = random_chain(rng, 5)
    W = rng.integers(1, 5, size=(5, 5))
    N = chain.mean_hitting_weighted(P, W)
    off = 1 - np.eye(5)
    for j in range(5):
        rhs = (P * W).sum(axis=1) + P @ (off[:, j] * N[:, j])
        assert np.allclose(N[:, j], rhs)
    assert np.all(chain.mean_hitting_hops(P) >= 1)


def test_mean_hitting_return_time_is_inverse_pi(rng):
    P = random_chain(rng, 6)
    pi = chain.stationary_direct(P).pi
    assert np.allclose(np.diag(chain.mean_hitting_hops(P)), 1 / pi)


def test_mean_hitting_matches_truncated_series(rng):
    P = random_chain(rng, 4)
    F = chain.hitting_probs(P, np.ones((4, 4)), 400).F
    assert 1 - F.sum(axis=0).min() < 1e-6
    k = np.arange(1, 401)[:, None, None]
    assert np.allclose((k * F).sum(axis=0), chain.mean_hitting_hops(P), atol=1e-3)


def test_mean_hitting_reducible():
    with pytest.raises(chain.ReducibleChainError):
        chain.mean_hitting_hops(np.eye(3))


def test_mean_hitting_matches_simulation(rng):
    P = random_chain(rng, 4)
    W = rng.integers(1, 4, size=(4, 4))
    N = chain.mean_hitting_weighted(P, W)
    cfg = SimConfig(trials=50_000, horizon=400, seed=1)
    times = first_arrivals(P, W, 0, cfg).astype(float)
    assert np.all(times <= cfg.horizon)
    se = times.std(axis=0) / np.sqrt(cfg.trials)
    assert np.all(np.abs(times.mean(axis=0) - N[0]) < 4 * se)
