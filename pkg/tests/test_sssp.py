"""Shortest paths: the bucket-heap Dijkstra against independent solvers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parbucket.engine import EngineConfig
from parbucket.errors import DataError, PreconditionError
from parbucket.graphs import from_edges, gen_complete, gen_dag, gen_high_diameter, gen_random
from parbucket.sssp import (
    UNREACHABLE, bellman_ford, distance_checksum, floyd_warshall, format_distances, par_dijkstra,
    parse_distances, path_to, reference_dijkstra,
)

SOLVERS = [par_dijkstra, reference_dijkstra, bellman_ford]


@pytest.mark.parametrize("solve", SOLVERS)
def test_path_graph(solve):
    g = from_edges(3, [0, 1], [1, 2], [1, 2])
    assert solve(g, 0).dist.tolist() == [0, 1, 3]


@pytest.mark.parametrize("solve", SOLVERS)
def test_triangle_prefers_two_hops(solve):
    g = from_edges(3, [0, 0, 2], [1, 2, 1], [5, 1, 1])
    assert solve(g, 0).dist[1] == 2


@pytest.mark.parametrize("solve", SOLVERS)
def test_unreachable(solve):
    g = from_edges(4, [0, 2], [1, 3], [7, 1])
    assert solve(g, 0).dist.tolist() == [0, 7, UNREACHABLE, UNREACHABLE]


@pytest.mark.parametrize("solve", SOLVERS)
def test_single_vertex(solve):
    r = solve(from_edges(1, [], [], []), 0)
    assert r.dist.tolist() == [0] and r.rounds == 1


@pytest.mark.parametrize("solve", SOLVERS)
def test_bad_source(solve):
    with pytest.raises(PreconditionError):
        solve(from_edges(2, [0], [1], [1]), 2)


def test_bellman_ford_rounds_on_chain():
    g = gen_high_diameter(50, 49)
    assert bellman_ford(g, 0).rounds == 49
    assert bellman_ford(g, 49).rounds == 1


def test_floyd_warshall_cycle():
    g = from_edges(3, [0, 1, 2], [1, 2, 0], [1, 2, 3])
    assert floyd_warshall(g).tolist() == [[0, 1, 3], [5, 0, 2], [3, 4, 0]]


def test_floyd_warshall_no_edges():
    D = floyd_warshall(from_edges(3, [], [], []))
    assert np.array_equal(np.diag(D), [0, 0, 0])
    assert np.all(D[~np.eye(3, dtype=bool)] == UNREACHABLE)


def test_floyd_warshall_size_limit():
    with pytest.raises(PreconditionError):
        floyd_warshall(from_edges(4097, [], [], []))


def test_floyd_warshall_rows_match_dijkstra():
    g = gen_random(200, 3000, seed=2)
    D = floyd_warshall(g, block=32)
    for s in (0, 17, 199):
        assert np.array_equal(D[s], reference_dijkstra(g, s).dist)


def test_high_diameter_par_dijkstra():
    g = gen_high_diameter(1024, 10 * 1024, seed=1)
    r = par_dijkstra(g, 0)
    assert np.array_equal(r.dist, np.arange(1024))
    assert r.rounds == 1024


@pytest.mark.parametrize("V,E,seed", [(300, 1200, 1), (300, 9000, 2), (1000, 4000, 3)])
def test_random_graphs_three_way(V, E, seed):
    g = gen_random(V, E, max_weight=1000, seed=seed)
    a = par_dijkstra(g, 0)
    b = reference_dijkstra(g, 0)
    c = bellman_ford(g, 0)
    assert np.array_equal(a.dist, b.dist) and np.array_equal(a.dist, c.dist)
    assert a.checksum() == distance_checksum(b.dist)


def test_settled_order_is_monotone_and_complete():
    g = gen_random(500, 5000, max_weight=20, seed=4)
    r = par_dijkstra(g, 3)
    d = r.dist[r.settled_order]
    assert np.all(np.diff(d) >= 0)
    assert r.rounds == r.reachable == np.unique(r.settled_order).size


def test_bulk_elements_bounded_by_edges():
    g = gen_random(400, 6000, seed=5)
    r = par_dijkstra(g, 0)
    assert r.bulk_elements <= g.E
    assert r.extracts == r.rounds + r.stale_pops


@pytest.mark.parametrize("d", [1, 3, 64])
def test_batch_size_does_not_change_distances(d):
    g = gen_random(300, 3000, seed=6)
    ref = reference_dijkstra(g, 0).dist
    assert np.array_equal(par_dijkstra(g, 0, EngineConfig(d, workers=2)).dist, ref)


def test_dag_mode_matches():
    g = gen_dag(1000, 8, seed=7)
    a = par_dijkstra(g, 0, dag=True)
    assert np.array_equal(a.dist, par_dijkstra(g, 0).dist)
    assert np.array_equal(a.dist, reference_dijkstra(g, 0).dist)


def test_complete_graph():
    g = gen_complete(128, seed=8)
    assert np.array_equal(par_dijkstra(g, 5).dist, floyd_warshall(g)[5])


def test_zero_weights():
    g = from_edges(4, [0, 1, 2, 0], [1, 2, 3, 3], [0, 0, 0, 1])
    assert par_dijkstra(g, 0).dist.tolist() == [0, 0, 0, 0]


def test_overflow_is_reported():
    big = 2 ** 62
    g = from_edges(3, [0, 1], [1, 2], [big, big])
    with pytest.raises(DataError):
        par_dijkstra(g, 0)


def test_path_to_follows_predecessors():
    g = from_edges(4, [0, 1, 0, 2], [1, 2, 2, 3], [1, 1, 5, 1])
    r = reference_dijkstra(g, 0)
    assert path_to(r.pred, 3) == [0, 1, 2, 3]


def test_distance_csv_round_trip():
    dist = np.array([0, 4, UNREACHABLE, 9], np.int64)
    text = format_distances(dist)
    assert "2,inf" in text
    assert np.array_equal(parse_distances(text), dist)


def test_distance_csv_bad_row():
    with pytest.raises(DataError) as exc:
        parse_distances("vertex,dist\n0,0\n1,x\n")
    assert exc.value.line == 3


@settings(max_examples=40)
@given(st.integers(1, 25), st.data())
def test_par_dijkstra_matches_reference_on_small_graphs(V, data):
    pairs = sorted(data.draw(st.sets(st.tuples(st.integers(0, V - 1), st.integers(0, V - 1))
                                     .filter(lambda e: e[0] != e[1]), max_size=80)))
    w = data.draw(st.lists(st.integers(0, 30), min_size=len(pairs), max_size=len(pairs)))
    g = from_edges(V, [a for a, _ in pairs], [b for _, b in pairs], w)
    s = data.draw(st.integers(0, V - 1))
    d = data.draw(st.integers(1, 6))
    ref = reference_dijkstra(g, s).dist
    assert np.array_equal(par_dijkstra(g, s, EngineConfig(d)).dist, ref)
    assert np.array_equal(bellman_ford(g, s).dist, ref)
