import math

import numpy as np
import pytest

from campus_ties.errors import ArgumentError, DisconnectedGraphError, InsufficientDataError
from campus_ties.graph import (
    EVOLUTION_COLUMNS,
    FriendshipNetwork,
    avg_clustering,
    avg_degree,
    avg_shortest_path,
    connected_components,
    densification_fit,
    density,
    evolution_report,
    evolution_row,
    fit_power_law,
    giant_component,
    local_clustering,
)

from oracles import floyd_warshall_mean, gnp_edges, sample_discrete_power_law, triangle_clustering

K4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
PATH3 = [("a", "b"), ("b", "c")]
STAR5 = [(0, i) for i in range(1, 6)]


def test_components():
    assert connected_components(FriendshipNetwork()).N == 0
    two = FriendshipNetwork([(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)])
    rep = connected_components(two)
    assert (rep.N, rep.S_G1, rep.S_G2) == (2, 3, 3)
    six = FriendshipNetwork([(1, 2), (2, 3), (3, 4), (5, 6)])
    rep = connected_components(six)
    assert rep.sizes == [4, 2] and rep.N == 2
    assert rep.giant == frozenset({1, 2, 3, 4})


def test_isolated_nodes_are_components():
    g = FriendshipNetwork([(1, 2)], nodes=[3, 4])
    assert connected_components(g).sizes == [2, 1, 1]


def test_self_loop_rejected():
    with pytest.raises(ArgumentError):
        FriendshipNetwork([(1, 1)])


def test_density_and_degree():
    k4 = FriendshipNetwork(K4)
    assert density(k4) == 1 and avg_degree(k4) == 3
    p3 = FriendshipNetwork(PATH3)
    assert density(p3) == pytest.approx(2 / 3) and avg_degree(p3) == pytest.approx(4 / 3)
    assert avg_degree(FriendshipNetwork(STAR5)) == pytest.approx(10 / 6)


def test_clustering_examples():
    assert avg_clustering(FriendshipNetwork([(1, 2), (2, 3), (1, 3)])) == 1.0
    assert avg_clustering(FriendshipNetwork(STAR5)) == 0.0
    pendant = FriendshipNetwork([(1, 2), (2, 3), (1, 3), (3, 4)])
    assert avg_clustering(pendant) == pytest.approx((1 + 1 + 1 / 3 + 0) / 4, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_clustering_matches_triangle_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    edges = gnp_edges(n, float(rng.uniform(0.05, 0.5)), rng)
    g = FriendshipNetwork(edges, nodes=range(n))
    oracle = triangle_clustering(edges, range(n))
    local = dict(zip(g.order, local_clustering(g)))
    for v in range(n):
        assert local[v] == pytest.approx(oracle[v], abs=1e-12)


def test_path_length_examples():
    assert avg_shortest_path(FriendshipNetwork(PATH3)) == pytest.approx(4 / 3)
    assert avg_shortest_path(FriendshipNetwork(K4)) == 1.0
    with pytest.raises(DisconnectedGraphError):
        avg_shortest_path(FriendshipNetwork([(1, 2), (3, 4)]))


@pytest.mark.parametrize("seed", range(6))
def test_path_length_matches_floyd_warshall(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(10, 70))
    g = giant_component(FriendshipNetwork(gnp_edges(n, 0.12, rng), nodes=range(n)))
    edges, nodes = g.edges(), g.order
    exact = avg_shortest_path(g, "exact")
    assert exact == pytest.approx(floyd_warshall_mean(edges, nodes), abs=1e-12)
    full = avg_shortest_path(g, "sampled", k_sources=g.number_of_nodes(), seed=seed)
    assert abs(full - exact) < 1e-12


@pytest.mark.parametrize("alpha, tol", [(2.35, 0.05), (3.25, 0.07)])
def test_power_law_recovery(alpha, tol):
    rng = np.random.default_rng(int(alpha * 100))
    x = sample_discrete_power_law(alpha, 2, 100_000, rng)
    fit = fit_power_law(x, x_min=2)
    assert abs(fit.alpha - alpha) < tol
    assert fit.n_tail == 100_000


def test_power_law_sampler_is_sane():
    rng = np.random.default_rng(0)
    x = sample_discrete_power_law(2.5, 1, 200_000, rng)
    # P(X = 1) = 1 / zeta(2.5)
    assert (x == 1).mean() == pytest.approx(1 / 1.341487257250917, abs=0.005)


def test_power_law_degenerate():
    with pytest.raises(InsufficientDataError):
        fit_power_law([3] * 50)
    with pytest.raises(InsufficientDataError):
        fit_power_law([2, 3, 4])
    with pytest.raises(ArgumentError):
        fit_power_law([0, 1, 2] * 10)


def test_densification_exact():
    pts = [(n, n ** 1.5) for n in (100, 300, 1000, 5000)]
    assert densification_fit(pts) == pytest.approx(1.5, abs=1e-9)
    assert densification_fit([(n, n) for n in (10, 20, 40)]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InsufficientDataError):
        densification_fit(pts[:2])


def test_densification_noisy():
    ns = np.array([800, 1200, 2000, 3500, 6000, 9000])
    gammas = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        e = ns ** 1.5 * rng.uniform(0.95, 1.05, len(ns))
        gammas.append(densification_fit(zip(ns, e)))
    assert all(abs(g - 1.5) < 0.05 for g in gammas)


def test_evolution_row_matches_individual_ops():
    rng = np.random.default_rng(3)
    g = FriendshipNetwork(gnp_edges(80, 0.04, rng), nodes=range(80), label="m1")
    row = evolution_row(g)
    comps = connected_components(g)
    gcc = giant_component(g)
    assert row["S_G"] == 80 and row["N"] == comps.N and row["S_G1"] == comps.S_G1
    assert row["rho"] == density(gcc)
    assert row["c_avg"] == avg_clustering(gcc)
    assert row["L_avg"] == avg_shortest_path(gcc)
    assert set(EVOLUTION_COLUMNS) <= set(row)


def test_evolution_deterministic():
    rng = np.random.default_rng(4)
    edges = gnp_edges(60, 0.05, rng)
    a = FriendshipNetwork(edges, label="x")
    b = FriendshipNetwork(list(reversed(edges)), label="x")
    ra, rb = evolution_report([a, b])
    assert ra == rb


def test_subgraph_and_attributes():
    g = FriendshipNetwork(K4).with_attribute("gpa", {0: 3.0, 1: 2.0})
    sub = g.subgraph([0, 1, 2])
    assert sub.number_of_edges() == 3
    assert sub.attribute("gpa") == {0: 3.0, 1: 2.0}
    assert sub.attribute("degree") == {0: 2, 1: 2, 2: 2}
    assert math.isclose(avg_degree(sub), 2.0)
