import numpy as np
import pytest

from conftest import complete_graph
from patrolchain import chain
from patrolchain.gradients import fd_check, grad, relative_error
from patrolchain.graph import PatrolGraph
from patrolchain.objectives import ObjectiveSpec
from patrolchain.optimizer import RunConfig, rmsprop_step


def small_graph(rng, n, heterogeneous=True):
    W = rng.integers(1, 4, size=(n, n)) if heterogeneous else np.ones((n, n), int)
    return PatrolGraph(np.ones((n, n), int), W)


def random_pi(rng, n):
    p = rng.random(n) + 0.2
    return p / p.sum()


def test_relative_error():
    assert relative_error(1.0, 1.0) == 0
    assert relative_error(0.0, 1e-9) == pytest.approx(0.1)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)


def test_quadratic_checker():
    Q = [np.random.default_rng(0).random((3, 3)) + 0.5]
    err = fd_check(None, Q, func=lambda q: float(np.sum(q[0] ** 2)),
                   grad_func=lambda q: [2 * q[0]])
    assert err <= 1e-10


def test_zero_penalty_constant_objective():
    g = complete_graph(3)
    spec = ObjectiveSpec("sg", g, tau=200, alpha=0.0)
    # with an enormous attack window every entry of Lambda is 1
    res = grad(spec, np.ones((3, 3)))
    assert res.value == pytest.approx(-1.0)
    assert np.allclose(res.grads[0], 0, atol=1e-12)


@pytest.mark.parametrize("metric", ["mht", "rte", "sg", "sgm"])
def test_fd_check_all_metrics(rng, metric):
    for trial in range(3):
        n = int(rng.integers(3, 6))
        g = small_graph(rng, n)
        pi = random_pi(rng, n)
        kwargs = {"mht": {}, "rte": {"horizon": 50}, "sg": {"tau": 4, "smoothing": 4},
                  "sgm": {"tau": 3}}[metric]
        graphs = (g, small_graph(rng, n)) if metric == "sgm" else g
        spec = ObjectiveSpec(metric, graphs, pi=pi, **kwargs)
        Qs = [rng.random((n, n)) + 0.1 for _ in range(spec.robots)]
        assert fd_check(spec, Qs) <= 1e-4


def test_fd_check_computed_pi_mht(rng):
    g = small_graph(rng, 4)
    spec = ObjectiveSpec("mht", g, pi=random_pi(rng, 4), pi_mode="computed")
    assert fd_check(spec, [rng.random((4, 4)) + 0.1]) <= 1e-4


def test_fd_check_subset(rng, sf):
    g, pi = sf
    spec = ObjectiveSpec("sg", g, pi=pi, tau=9, smoothing=4)
    assert fd_check(spec, [rng.random((12, 12)) + 0.1], max_coords=50, rng=rng) <= 1e-4


def test_penalty_gradient_closed_form(rng):
    n = 4
    g = small_graph(rng, n, heterogeneous=False)
    pi = random_pi(rng, n)
    alpha = 0.7
    spec = ObjectiveSpec("sg", g, pi=pi, tau=1, alpha=alpha)
    # s = n*n averages all of F_1 = P, whose mean is the constant 1/n
    spec = spec.replace(smoothing=n * n)
    Q = rng.random((n, n)) + 0.1
    P = chain.parametrize(Q, g.adjacency)
    gP = 2 * alpha * np.outer(pi, pi @ P - pi)
    s = np.abs(Q).sum(axis=1, keepdims=True)
    gQ = np.sign(Q) * (gP - (gP * P).sum(axis=1, keepdims=True)) / s
    assert np.allclose(grad(spec, Q).grads[0], gQ, atol=1e-10, rtol=0)


def test_masked_gradient_is_zero(rng):
    A = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]])
    g = PatrolGraph(A, np.ones((4, 4), int))
    spec = ObjectiveSpec("mht", g, pi=np.full(4, 0.25))
    res = grad(spec, rng.random((4, 4)) + 0.1)
    assert np.all(res.grads[0][A == 0] == 0)


def test_descent_sanity(sf):
    g, pi = sf
    spec = ObjectiveSpec("sg", g, pi=pi, tau=9, smoothing=4)
    cfg = RunConfig().for_metric("sg")
    rng = np.random.default_rng(7)
    ok = 0
    for _ in range(100):
        Q = rng.random((12, 12))
        res = grad(spec, Q)
        (Q2,), _ = rmsprop_step([Q], res.grads, None, cfg)
        ok += grad(spec, Q2).value <= res.value
    assert ok >= 90


def test_gradient_shapes_and_values(rng, sf):
    g, pi = sf
    spec = ObjectiveSpec("sgm", (g, g), pi=pi, tau=9)
    res = grad(spec, [rng.random((12, 12)), rng.random((12, 12))])
    assert len(res.grads) == 2
    assert all(G.shape == (12, 12) and np.all(np.isfinite(G)) for G in res.grads)
    assert res.value == pytest.approx(-res.metric + res.penalty)


def test_grad_dimension_mismatch(rng, sf):
    g, pi = sf
    with pytest.raises(ValueError):
        grad(ObjectiveSpec("sg", g, tau=9), rng.random((3, 3)))
