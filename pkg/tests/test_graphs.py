"""Graph generators, CSR checks and the edge-list format."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parbucket.errors import DataError, PreconditionError
from parbucket.graphs import (
    from_edges, format_edge_list, gen_complete, gen_dag, gen_high_diameter, gen_random,
    load_edge_list, parse_edge_list, save_edge_list,
)
from parbucket.sssp import UNREACHABLE, path_to, reference_dijkstra


def _simple(g):
    src = g.sources()
    keys = src * g.V + g.targets
    return np.all(src != g.targets) and np.unique(keys).size == g.E


def test_complete_shape():
    g = gen_complete(4, seed=1)
    assert (g.V, g.E) == (4, 12)
    assert np.all(g.out_degrees() == 3)
    assert g.validate() == [] and _simple(g)


def test_complete_is_symmetric():
    g = gen_complete(30, max_weight=50, seed=2)
    W = np.zeros((30, 30), np.int64)
    W[g.sources(), g.targets] = g.weights
    assert np.array_equal(W, W.T)


@pytest.mark.parametrize("gen,args", [
    (gen_random, (100, 500)), (gen_high_diameter, (100, 500)), (gen_dag, (100, 8)), (gen_complete, (20,)),
])
def test_generators_are_seeded(gen, args):
    assert gen(*args, seed=5) == gen(*args, seed=5)
    assert gen(*args, seed=5) != gen(*args, seed=6)


@pytest.mark.parametrize("V,E", [(64, 4032), (500, 8000), (1000, 1)])
def test_random_graph_is_simple(V, E):
    g = gen_random(V, E, seed=3)
    assert g.E == E and g.validate() == [] and _simple(g)
    assert g.weights.min() >= 1


def test_random_in_degree_is_uniform():
    V, E = 1000, 32000
    g = gen_random(V, E, seed=11)
    obs = np.bincount(g.targets, minlength=V)
    exp = E / V
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    df = V - 1
    assert chi2 < df + 5 * np.sqrt(2 * df)


def test_random_rejects_too_many_edges():
    with pytest.raises(PreconditionError):
        gen_random(4, 13)


@pytest.mark.parametrize("V,E", [(50, 49), (200, 2000), (40, 1560)])
def test_high_diameter_distances(V, E):
    g = gen_high_diameter(V, E, seed=4)
    assert g.E == E and _simple(g)
    r = reference_dijkstra(g, 0)
    assert np.array_equal(r.dist, np.arange(V))
    assert path_to(r.pred, V - 1) == list(range(V))


def test_dag_edges_point_forward():
    g = gen_dag(300, 8, seed=9)
    assert np.all(g.sources() < g.targets) and _simple(g)
    assert np.all(g.out_degrees()[:-8] == 8)


def test_dag_against_topological_relaxation():
    g = gen_dag(500, 6, max_weight=100, seed=8)
    dist = np.full(g.V, UNREACHABLE, np.int64)
    dist[0] = 0
    for u in range(g.V):  # vertex order is a topological order
        if dist[u] == UNREACHABLE:
            continue
        t, w = g.neighbors(u)
        dist[t] = np.minimum(dist[t], dist[u] + w)
    assert np.array_equal(reference_dijkstra(g, 0).dist, dist)


def test_edge_list_round_trip(tmp_path):
    g = gen_random(60, 300, seed=1)
    save_edge_list(g, tmp_path / "g.txt")
    assert load_edge_list(tmp_path / "g.txt") == g


def test_edge_list_empty_graph():
    g = parse_edge_list("3 0\n")
    assert (g.V, g.E) == (3, 0)
    assert format_edge_list(g) == "3 0\n"


@pytest.mark.parametrize("text,line", [
    ("3 2\n0 1 4\n1 2 -1\n", 3),
    ("3 2\n0 1 4\n1 5 1\n", 3),
    ("3 2\n0 0 4\n1 2 1\n", 2),
    ("3 2\n0 1 4\n0 1 2\n", 3),
    ("3 x\n", 1),
    ("3 2\n0 1 4 9\n1 2 1\n", 2),
])
def test_edge_list_errors_name_the_line(text, line):
    with pytest.raises(DataError) as exc:
        parse_edge_list(text)
    assert exc.value.line == line


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_edge_list(tmp_path / "nope.txt")


@settings(max_examples=40)
@given(st.integers(2, 30), st.data())
def test_from_edges_round_trip(V, data):
    pairs = data.draw(st.sets(st.tuples(st.integers(0, V - 1), st.integers(0, V - 1))
                              .filter(lambda e: e[0] != e[1]), max_size=60))
    pairs = sorted(pairs)
    w = data.draw(st.lists(st.integers(0, 1000), min_size=len(pairs), max_size=len(pairs)))
    g = from_edges(V, [a for a, _ in pairs], [b for _, b in pairs], w)
    assert g.validate() == []
    assert parse_edge_list(format_edge_list(g)) == g
