import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadgap.sphere import (DimensionError, SeparatedSet, as_unit_vector, conflict_graph,
                           covering_check, decompose_separated, greedy_coloring,
                           maximal_separated_set, min_pairwise_distance, pseudo_distance,
                           random_sphere)


def brute_min_distance(pts):
    best = math.inf
    for a, b in itertools.combinations(range(len(pts)), 2):
        ip = sum(pts[a][i] * pts[b][i].conjugate() for i in range(len(pts[a])))
        best = min(best, math.sqrt(max(0.0, 1 - abs(ip) ** 2)))
    return best


unit = st.integers(0, 2**32 - 1).map(lambda s: random_sphere(np.random.default_rng(s), 2, 3))


@settings(max_examples=50, deadline=None)
@given(unit)
def test_distance_is_projector_distance(pair):
    x, y = pair
    proj = np.outer(x, x.conj()) - np.outer(y, y.conj())
    assert math.isclose(pseudo_distance(x, y), np.linalg.norm(proj) / math.sqrt(2), abs_tol=1e-12)


def test_distance_ignores_phase():
    x = random_sphere(np.random.default_rng(1), 1, 2)[0]
    assert pseudo_distance(x, np.exp(0.7j) * x) < 1e-7
    assert math.isclose(pseudo_distance(np.array([1, 0j]), np.array([0, 1 + 0j])), 1.0)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        pseudo_distance(np.ones(2) / math.sqrt(2), np.ones(3) / math.sqrt(3))


def test_real_encoding():
    z = as_unit_vector([0.6, 0.0, 0.0, 0.8])
    assert np.allclose(z, [0.6, 0.8j])
    with pytest.raises(ValueError):
        as_unit_vector([1.0, 1.0, 0.0, 0.0])


@pytest.mark.parametrize("sep,budget", [(0.5, 5000), (0.3, 5000), (0.1, 3000)])
def test_packing_separated_and_covering(sep, budget):
    g = maximal_separated_set(2, sep, 7, budget)
    assert g.min_pairwise_distance() >= sep
    if len(g) < 60:
        assert brute_min_distance(g.points) >= sep
    # maximality: the set covers the sphere at radius sep, up to missed pockets
    rep = covering_check(g, sep, 4000, seed=3)
    assert rep.fraction > 0.99


def test_packing_deterministic_and_batch_independent():
    a = maximal_separated_set(2, 0.3, 11, 1500)
    b = maximal_separated_set(2, 0.3, 11, 1500)
    c = maximal_separated_set(2, 0.3, 11, 1500, batch=1)
    d = maximal_separated_set(2, 0.3, 11, 1500, batch=97)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.points, c.points)
    assert np.array_equal(a.points, d.points)
    assert a.meta["draws"] == c.meta["draws"] == d.meta["draws"]


def test_orthogonal_limit_and_disk():
    g = maximal_separated_set(3, 1.0, 0, 100)
    assert len(g) == 3
    assert np.allclose(g.points @ g.points.conj().T, np.eye(3), atol=1e-12)
    d = maximal_separated_set(1, 0.5, 0, 100)
    assert len(d) == 1 and d.degenerate


def test_abort_on_cap():
    g = maximal_separated_set(2, 0.05, 0, 10**4, max_points=50)
    assert g.meta["aborted"] and not g.maximal


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.floats(0.05, 0.6), st.integers(0, 1000))
def test_greedy_coloring_is_proper(m, p, seed):
    rng = np.random.default_rng(seed)
    adj = [[] for _ in range(m)]
    for a, b in itertools.combinations(range(m), 2):
        if rng.random() < p:
            adj[a].append(b)
            adj[b].append(a)
    col = greedy_coloring(adj)
    assert all(col[a] != col[b] for a in range(m) for b in adj[a])
    assert col.max() <= max(len(x) for x in adj)


def test_decomposition_classes_separated():
    g = maximal_separated_set(2, 0.15, 5, 3000)
    parts = decompose_separated(g, 0.45)
    assert sum(len(p) for p in parts) == len(g)
    for p in parts:
        assert min_pairwise_distance(p.points) >= 0.45
    # every class pair conflicts somewhere, else greedy would have merged them
    stacked = np.vstack([p.points for p in parts])
    assert {tuple(x) for x in np.round(stacked, 14)} == {tuple(x) for x in np.round(g.points, 14)}


def test_decomposition_identity_and_errors():
    g = maximal_separated_set(2, 0.3, 1, 2000)
    assert len(decompose_separated(g, g.separation)) == 1
    with pytest.raises(ValueError):
        decompose_separated(g, 0.1)


def test_conflict_graph_matches_bruteforce():
    pts = random_sphere(np.random.default_rng(2), 60, 2)
    adj = conflict_graph(pts, 0.3)
    for a, b in itertools.combinations(range(60), 2):
        close = pseudo_distance(pts[a], pts[b]) < 0.3
        assert close == (b in adj[a])


def test_separated_set_readonly():
    g = SeparatedSet(np.eye(2), 1.0, 2)
    with pytest.raises(ValueError):
        g.points[0, 0] = 0
