import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxent_donut.errors import InvalidInstance
from maxent_donut.graph import (KDonut, VertexId, bfs_distances, brute_force_tour_cost,
                                build_kdonut, hamiltonian_cycle, shortest_path_metric, tour_cost)

ks = st.integers(min_value=3, max_value=12)


@pytest.mark.parametrize("k", [3, 4, 7, 20])
def test_sizes(k):
    g = build_kdonut(k)
    assert g.n == 4 * k + 2
    assert len(g.edges) == 6 * k + 5
    assert len(set(g.edges)) == len(g.edges)


def test_degrees_k3():
    g = build_kdonut(3)
    deg4 = {g.label(x) for x in range(g.n) if g.degree(x) == 4}
    assert deg4 == {"u0", "u1", "v0", "v1"}
    assert all(g.degree(x) == 3 for x in range(g.n) if g.label(x) not in deg4 | {"w0", "w1"})
    assert g.degree(g.w0) == g.degree(g.w1) == 3


def test_gadget_edges():
    g = build_kdonut(4)
    assert g.has_edge(g.u(0), g.u(1)) and g.has_edge(g.v(0), g.v(1))
    assert g.has_edge(g.u(7), g.u(0))
    assert not g.has_edge(g.w0, g.u(1)) and not g.has_edge(g.w1, g.v(0))
    for a, b in (("w0", "w1"), ("w0", "u0"), ("w0", "v0"), ("w1", "u1"), ("w1", "v1")):
        assert g.has_edge(g.id_of(a), g.id_of(b))


@pytest.mark.parametrize("bad", [2, 0, -1, 3.0, "3", True])
def test_rejects_bad_k(bad):
    with pytest.raises(InvalidInstance):
        KDonut(bad)


def test_labels_roundtrip():
    g = build_kdonut(5)
    for x in range(g.n):
        assert g.id_of(g.label(x)) == x
        assert g.id_of(VertexId.parse(g.label(x))) == x
    with pytest.raises(InvalidInstance):
        g.id_of("w2")
    with pytest.raises(InvalidInstance):
        VertexId.parse("x1")


def test_json_roundtrip():
    g = build_kdonut(4)
    doc = g.to_dict()
    assert KDonut.from_dict(doc) is g
    doc["edges"] = doc["edges"][:-1]
    with pytest.raises(InvalidInstance):
        KDonut.from_dict(doc)


@given(ks)
def test_metric_matches_bfs_and_networkx(k):
    g = build_kdonut(k)
    met = shortest_path_metric(g)
    G = nx.Graph(g.edges)
    ref = dict(nx.all_pairs_shortest_path_length(G))
    for s in range(g.n):
        row = bfs_distances(g, s)
        assert row == met.dist[s].tolist()
        assert all(ref[s][t] == row[t] for t in range(g.n))


@given(ks, st.data())
def test_metric_axioms(k, data):
    met = shortest_path_metric(build_kdonut(k))
    D = met.dist.astype(int)
    assert (D == D.T).all() and (np.diag(D) == 0).all()
    a, b, c = (data.draw(st.integers(0, D.shape[0] - 1)) for _ in range(3))
    assert D[a, c] <= D[a, b] + D[b, c]


def test_metric_is_read_only(k3):
    _, met = k3
    with pytest.raises(ValueError):
        met.dist[0, 1] = 5


def test_midpoint(k3):
    g, met = k3
    m = met.midpoint(g.u(2), g.v(3))
    assert met(g.u(2), m) == 1 and met(m, g.v(3)) == 1
    with pytest.raises(InvalidInstance):
        met.midpoint(g.u(2), g.u(3))


@pytest.mark.parametrize("k", [3, 4, 9])
def test_hamiltonian_cycle(k):
    g = build_kdonut(k)
    cyc = hamiltonian_cycle(g)
    assert sorted(cyc) == list(range(g.n))
    assert all(g.has_edge(a, b) for a, b in zip(cyc, cyc[1:] + cyc[:1]))
    assert tour_cost(shortest_path_metric(g), cyc) == 4 * k + 2


def test_held_karp_optimum_k3(k3):
    # OPT = 4k + 2 = n: no tour on n vertices can cost less than n unit steps
    _, met = k3
    assert brute_force_tour_cost(met) == 14


def test_held_karp_small_cycle():
    class M:
        dist = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])
    assert brute_force_tour_cost(M()) == 4
