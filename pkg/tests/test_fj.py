import math

import numpy as np
import pytest

from disparity_lab.fj import (_laplacian_from_weights, build_min_disparity_instance, complete_bipartite,
                              disparity_fj, expected_gradient, expected_gradients, fj_consensus,
                              fj_disparity_gradient, fj_iterate, fj_max_balanced, fj_min_opinions_partition,
                              fj_optimize_weights, group_contributions, monte_carlo_gradient, project_weights,
                              sample_balanced_opinions, sparsify_disparity)
from disparity_lab.graph import Partition, WeightedGraph, laplacian
from disparity_lab.spectral import IPlusLSolver, largest_laplacian_pair

from conftest import complete_graph, path_graph, random_connected_graph, random_partition, random_unit_opinions


def _empty(n):
    return WeightedGraph.from_edges(n, [])


def _objective(g, w, y):
    u = IPlusLSolver(_laplacian_from_weights(g, w))(y)
    return u @ u


def _fd_gradient(g, y, h=1e-3):
    """Fourth-order central differences; h = 1e-3 keeps roundoff near 1e-13."""
    out = np.empty(g.num_edges)
    for e in range(g.num_edges):
        def f(shift):
            w = g.weight.copy()
            w[e] += shift
            return _objective(g, w, y)
        out[e] = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
    return out


def test_consensus_examples(rng):
    s = random_unit_opinions(rng, 5)
    np.testing.assert_allclose(fj_consensus(_empty(5), s), s)
    np.testing.assert_allclose(fj_consensus(WeightedGraph.from_edges(2, [(0, 1)]), np.array([1.0, 0.0])),
                               [2 / 3, 1 / 3], atol=1e-14)
    g = random_connected_graph(rng, 9)
    np.testing.assert_allclose(fj_consensus(g, np.full(9, 1 / 3)), 1 / 3, atol=1e-13)
    np.testing.assert_allclose(fj_consensus(g, s.repeat(2)[:9]), fj_iterate(g, s.repeat(2)[:9], 5000), atol=1e-10)


def test_disparity_examples(rng):
    for n in (2, 5, 9):
        g = random_connected_graph(rng, n)
        assert disparity_fj(g, np.full(n, 1 / math.sqrt(n)), Partition(np.ones(n, dtype=bool))) == pytest.approx(1.0, abs=1e-12)
    s = random_unit_opinions(rng, 6)
    assert disparity_fj(_empty(6), s, random_partition(rng, 6)) == pytest.approx(1.0, abs=1e-14)
    g = complete_bipartite(2, 2)
    v = largest_laplacian_pair(laplacian(g)).vector
    assert disparity_fj(g, np.abs(v), Partition(v >= 0)) == pytest.approx(1 / 25, abs=1e-12)


@pytest.mark.parametrize("n,expected", [(2, 1 / 9), (4, 1 / 25), (10, 1 / 121)])
def test_min_instance(n, expected):
    g, s, p = build_min_disparity_instance(n)
    assert disparity_fj(g, s, p) == pytest.approx(expected, abs=1e-12)


def test_min_instance_rejects_odd():
    with pytest.raises(ValueError):
        build_min_disparity_instance(5)


def test_min_opinions_partition():
    r = fj_min_opinions_partition(complete_bipartite(2, 2))
    assert r.value == pytest.approx(1 / 25)
    assert set(r.partition.members_a) in ({0, 1}, {2, 3})
    assert fj_min_opinions_partition(complete_graph(6)).value == pytest.approx(1 / 49)


def test_min_opinions_partition_dominates_random(rng):
    g = random_connected_graph(rng, 8)
    r = fj_min_opinions_partition(g)
    assert r.diagnostics["evaluated"] == pytest.approx(r.value, abs=1e-10)
    for _ in range(10_000):
        s = rng.random(8)
        s /= np.linalg.norm(s)
        assert disparity_fj(g, s, Partition(rng.random(8) < 0.5)) >= r.value - 1e-12


def test_max_balanced(karate):
    r = fj_max_balanced(WeightedGraph.from_edges(2, [(0, 1)]))
    assert r.diagnostics["lambda_2"] == pytest.approx(2.0)
    assert r.value == pytest.approx(1 / 9)
    k = fj_max_balanced(karate)
    # published values: lambda_2 = 1.187, disparity 0.209
    assert k.diagnostics["lambda_2"] == pytest.approx(1.187, abs=1e-3)
    assert k.value == pytest.approx(0.209, abs=1e-3)
    assert abs(k.diagnostics["sentiment_gap"]) < 1e-8
    assert k.diagnostics["evaluated"] == pytest.approx(k.value, abs=1e-10)


def test_group_contributions_match_quadratic_form(rng):
    for _ in range(100):
        g = random_connected_graph(rng, int(rng.integers(2, 15)))
        s = random_unit_opinions(rng, g.n)
        p = random_partition(rng, g.n)
        za, zb = group_contributions(g, s, p)
        assert np.sum((za - zb) ** 2) == pytest.approx(disparity_fj(g, s, p), abs=1e-10)


def test_rayleigh_sandwich(rng):
    for _ in range(100):
        g = random_connected_graph(rng, int(rng.integers(2, 15)))
        s = random_unit_opinions(rng, g.n)
        p = random_partition(rng, g.n)
        y = p.difference(s)
        # unit y keeps the quadratic form in its Rayleigh range
        lam = largest_laplacian_pair(laplacian(g)).value
        assert 1 / (1 + lam) ** 2 - 1e-10 <= disparity_fj(g, s, p) <= 1 + 1e-10
        assert np.linalg.norm(y) == pytest.approx(1.0)


def test_gradient_zero_and_single_edge():
    g = WeightedGraph.from_edges(2, [(0, 1)])
    s = np.full(2, 1 / math.sqrt(2))
    np.testing.assert_array_equal(fj_disparity_gradient(g, np.zeros(2), Partition.from_members(2, [0])), [0.0])
    p = Partition.from_members(2, [0])
    grad = fj_disparity_gradient(g, s, p)
    w = g.weight
    h = 1e-6
    fd = (_objective(g, w + h, p.difference(s)) - _objective(g, w - h, p.difference(s))) / (2 * h)
    assert grad[0] == pytest.approx(fd, rel=1e-6)
    # closed form: y is an eigenvector with lambda = 2w, f = 1/(1+2w)^2
    assert grad[0] == pytest.approx(-4 / 27, rel=1e-12)


def test_gradient_matches_finite_differences(rng):
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(2, 11)))
        s = random_unit_opinions(rng, g.n)
        p = random_partition(rng, g.n)
        grad = fj_disparity_gradient(g, s, p)
        fd = _fd_gradient(g, p.difference(s))
        np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-12)


def test_expected_gradient_examples(rng, karate):
    # tiny weight approximates the empty graph
    g = WeightedGraph.from_edges(5, [(0, 1, 1e-9)])
    assert expected_gradient(g, (0, 1)) == pytest.approx(-4 / 5, rel=1e-6)
    for h in (karate, random_connected_graph(rng, 10), path_graph(7)):
        eg = expected_gradients(h)
        assert np.all(eg <= 1e-14)
        e = (int(h.src[0]), int(h.dst[0]))
        assert expected_gradient(h, e) == pytest.approx(eg[0], rel=1e-10)


def test_sampled_gradient_mean_nonpositive(karate):
    mc = monte_carlo_gradient(karate, 4000, seed=42)
    # mean is within a few standard errors of a non-positive number
    assert np.all(mc.mean <= 4 * mc.stderr)
    eg = expected_gradients(karate)
    assert np.all(np.abs(mc.mean - eg) <= 4 * mc.stderr + 1e-12)


def test_monte_carlo_is_batch_independent(karate):
    a = monte_carlo_gradient(karate, 10, seed=5)
    s, p = sample_balanced_opinions(karate.n, np.random.default_rng(5))
    grads = [fj_disparity_gradient(karate, *sample_balanced_opinions(karate.n, np.random.default_rng(5 + t)))
             for t in range(10)]
    np.testing.assert_allclose(a.mean, np.mean(grads, axis=0), rtol=1e-12, atol=1e-18)
    assert p.n == karate.n and np.all(s >= 0)


def test_optimize_weights_zero_steps(karate):
    s, p = fj_max_balanced(karate).opinions, fj_max_balanced(karate).partition
    out = fj_optimize_weights(karate, s, p, steps=0)
    assert out.graph.edges() == karate.edges()
    assert len(out.trace) == 1


def test_optimize_weights_descends(karate):
    r = fj_max_balanced(karate)
    out = fj_optimize_weights(karate, r.opinions, r.partition, steps=200)
    trace = np.array(out.trace)
    assert np.all(np.diff(trace) <= 1e-15)
    assert trace[-1] < trace[0]
    assert out.weights.sum() == pytest.approx(karate.total_weight, abs=1e-9)
    assert out.graph.is_connected()


def test_optimize_weights_preserves_total(rng):
    g = random_connected_graph(rng, 10)
    s = random_unit_opinions(rng, 10)
    p = random_partition(rng, 10)
    w_seen = []

    from disparity_lab import fj as fj_mod
    original = fj_mod.project_weights

    def spy(w, total):
        out = original(w, total)
        if out is not None:
            w_seen.append(out.sum())
        return out

    monkey = pytest.MonkeyPatch()
    monkey.setattr(fj_mod, "project_weights", spy)
    try:
        fj_optimize_weights(g, s, p, steps=20)
    finally:
        monkey.undo()
    assert w_seen and np.allclose(w_seen, g.total_weight, rtol=0, atol=1e-9)


def test_project_weights():
    np.testing.assert_allclose(project_weights(np.array([-1.0, 1.0, 3.0]), 8.0), [0, 2, 6])
    assert project_weights(np.array([-1.0, -2.0]), 1.0) is None


def test_objective_convex_along_segments(rng):
    for _ in range(20):
        g = random_connected_graph(rng, 8)
        y = random_partition(rng, 8).difference(random_unit_opinions(rng, 8))
        w0 = g.weight
        w1 = rng.uniform(0.1, 3.0, g.num_edges)

        def f(w):
            return _objective(g, w, y)

        f0, f1 = f(w0), f(w1)
        for t in np.linspace(0, 1, 11):
            assert f((1 - t) * w0 + t * w1) <= (1 - t) * f0 + t * f1 + 1e-9


def test_sparsify_tree_unchanged(rng):
    g = path_graph(12)
    s = random_unit_opinions(rng, 12)
    r = sparsify_disparity(g, s, random_partition(rng, 12), 0.3)
    assert r.graph is g and r.ratio == 1.0 and "unchanged" in r.note


def test_sparsify_complete_graph(rng):
    g = complete_graph(40)
    s = random_unit_opinions(rng, 40)
    p = random_partition(rng, 40)
    r = sparsify_disparity(g, s, p, 0.3)
    assert r.graph.num_edges < 780
    assert r.lower_bound == pytest.approx(1 / 1.3**2) and r.upper_bound == pytest.approx(1 / 0.7**2)
    # soft bound only: sampling succeeds with high probability
    assert r.ratio < 1 + 3 * 0.3
    assert sparsify_disparity(g, s, p, 0.3).graph.edges() == r.graph.edges()
    with pytest.raises(ValueError):
        sparsify_disparity(g, s, p, 0.6)
