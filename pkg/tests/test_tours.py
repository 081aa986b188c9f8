from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import load_data
from maxent_donut.errors import InvalidInstance, StructureViolation
from maxent_donut.graph import build_kdonut, hamiltonian_cycle, shortest_path_metric
from maxent_donut.matching import (M1, M2, PerfectMatching, odd_vertices, oracle_min_matching,
                                   structural_matchings)
from maxent_donut.sampler import ChoiceVector, iter_one_trees, one_tree_from_choice
from maxent_donut.tours import (MATCH, Multigraph, Tour, b_tour_m1, b_tour_m2, check_tour,
                                classify_circuits, eulerian_subgraph, hierholzer_tour, shortcut)


def build(k, bits, kind):
    g = build_kdonut(k)
    met = shortest_path_metric(g)
    t = one_tree_from_choice(g, ChoiceVector(k, tuple(bits)))
    m1, m2, _ = structural_matchings(odd_vertices(t), met)
    return g, met, eulerian_subgraph(t, m1 if kind == M1 else m2, met)


def instance_from_data(name):
    doc = load_data(name)
    g = build_kdonut(doc["k"])
    tree = {tuple(sorted((g.id_of(a), g.id_of(b)))) for a, b in doc["tree"]}
    from maxent_donut.sampler import _template
    _, pairs = _template(g)
    bits = []
    for cand in pairs:
        hit = [tuple(sorted(map(int, e))) in tree for e in cand]
        assert sum(hit) == 1
        bits.append(0 if hit[0] else 1)
    g, met, a = build(doc["k"], bits, doc["matching"])
    assert a.tree.edge_set == tree
    pairs = {frozenset((g.id_of(p), g.id_of(q))) for p, q in doc["pairs"]}
    assert {frozenset(p) for p in a.matching.pairs} == pairs
    return g, met, a, doc["order"]


def same_cycle(a, b):
    if len(a) != len(b) or a[0] not in b:
        return False
    i = b.index(a[0])
    rot = b[i:] + b[:i]
    rev = [rot[0]] + rot[:0:-1]
    return a == rot or a == rev


def visits(tour):
    return Counter(tour.vertices[:-1])


# -- Eulerian subgraph ---------------------------------------------------------


def test_all_zeros_subgraph_k3():
    g, met, a = build(3, [0] * 7, M1)
    assert a.cost == 14 + 6
    assert all(d in (2, 4) for d in a.degree)
    assert a.is_connected()
    assert sum(1 for d in a.degree if d == 4) == 3


def test_virtual_edges_record_paths():
    g, met, a = build(3, [0] * 7, M1)
    for eid, (p, mid, q) in a.paths.items():
        assert a.costs[eid] == 2 and a.kinds[eid] == MATCH
        assert met(p, mid) == 1 and met(mid, q) == 1
    assert len(a.paths) == sum(c == 2 for c in a.matching.pair_costs)


def test_parity_violation():
    g = build_kdonut(3)
    met = shortest_path_metric(g)
    t = one_tree_from_choice(g, ChoiceVector.zeros(3))
    odds = odd_vertices(t)
    wrong = PerfectMatching(((odds[0], odds[1]), (odds[2], g.u(0)), (odds[4], odds[5])), (1, 1, 1), M1)
    with pytest.raises(StructureViolation) as err:
        eulerian_subgraph(t, wrong, met)
    assert err.value.claim == "parity"


@given(st.integers(3, 12), st.data())
def test_oracle_matching_gives_even_degrees(k, data):
    g = build_kdonut(k)
    met = shortest_path_metric(g)
    bits = data.draw(st.lists(st.integers(0, 1), min_size=2 * k + 1, max_size=2 * k + 1))
    t = one_tree_from_choice(g, ChoiceVector(k, tuple(bits)))
    a = eulerian_subgraph(t, oracle_min_matching(odd_vertices(t), met), met)
    assert all(d % 2 == 0 for d in a.degree)
    assert a.cost == 4 * k + 2 + a.matching.cost


# -- circuit structure ----------------------------------------------------------


def test_all_zeros_circuits_k3():
    g, met, a = build(3, [0] * 7, M1)
    dec = classify_circuits(a)
    assert dec.lengths == [7, 5, 5]
    assert [g.label(j) for j in dec.junctions] == ["u5", "u1", "u3"]
    assert dec.circuits[0].special and not any(c.special for c in dec.circuits[1:])


def test_doubled_edge_circuit_k3():
    # blocks at i = 3 and i = 5 differ in type, so a matching pair coincides with a tree edge
    g, met, a = build(3, [0, 1, 0, 0, 0, 0, 0], M1)
    assert classify_circuits(a).lengths == [7, 8, 2]


def test_m2_shape_all_zeros_k3():
    g, met, a = build(3, [0] * 7, M2)
    dec = classify_circuits(a)
    assert dec.lengths == [3, 3, 3]
    assert [g.label(x) for x in dec.large_cycle] == ["u1", "u2", "u3", "u4", "u5", "u0", "w0", "w1"]


@pytest.mark.parametrize("k", [3, 4])
def test_circuit_shapes_exhaustive(k):
    g = build_kdonut(k)
    met = shortest_path_metric(g)
    for t in iter_one_trees(g):
        m1, m2, _ = structural_matchings(odd_vertices(t), met)
        d1 = classify_circuits(eulerian_subgraph(t, m1, met))
        assert len(d1.circuits) == k
        assert d1.lengths[0] in (4, 7, 10) and set(d1.lengths[1:]) <= {2, 5, 8}
        assert all(not (x == 2 and y == 2) for x, y in zip(d1.lengths, d1.lengths[1:] + d1.lengths[:1]))
        d2 = classify_circuits(eulerian_subgraph(t, m2, met))
        assert set(d2.lengths) <= {2, 3}
        assert len(d2.large_cycle) + sum(c.length - 1 for c in d2.circuits) == g.n


def test_classify_needs_structural_matching():
    g = build_kdonut(3)
    met = shortest_path_metric(g)
    t = one_tree_from_choice(g, ChoiceVector.zeros(3))
    a = eulerian_subgraph(t, oracle_min_matching(odd_vertices(t), met), met)
    with pytest.raises(InvalidInstance):
        classify_circuits(a)


# -- B-tours -------------------------------------------------------------------------


def test_b_tour_m1_all_zeros_k3():
    g, met, a = build(3, [0] * 7, M1)
    r = b_tour_m1(a)
    check_tour(r, a)
    assert r.labels(g) == ["u5", "u0", "w0", "w1", "u1", "v1", "v2", "u3", "u4", "u5",
                           "v5", "v0", "u1", "u2", "u3", "v3", "v4", "u5"]
    h = shortcut(r, met)
    assert h.cost == r.cost == 20


def test_b_tour_m2_all_zeros_k3():
    g, met, a = build(3, [0] * 7, M2)
    r = b_tour_m2(a)
    check_tour(r, a)
    assert r.labels(g)[:4] == ["u0", "w0", "w1", "u1"]
    assert r.labels(g)[4] in ("v2", "v1")  # the matching edge at u1


def test_b_tour_kind_checks():
    _, _, a1 = build(3, [0] * 7, M1)
    _, _, a2 = build(3, [0] * 7, M2)
    with pytest.raises(InvalidInstance):
        b_tour_m1(a2)
    with pytest.raises(InvalidInstance):
        b_tour_m2(a1)


@pytest.mark.parametrize("k", [3, 4])
def test_b_tour_visit_counts_exhaustive(k):
    g = build_kdonut(k)
    met = shortest_path_metric(g)
    for t in iter_one_trees(g):
        m1, m2, _ = structural_matchings(odd_vertices(t), met)
        a = eulerian_subgraph(t, m1, met)
        dec = classify_circuits(a)
        r = b_tour_m1(a, dec)
        check_tour(r, a)
        seen = Counter(r.vertices)
        assert seen[dec.t0] == 3
        assert all(seen[x] == 2 for x in range(g.n) if a.degree[x] == 4 and x != dec.t0)
        a2 = eulerian_subgraph(t, m2, met)
        r2 = b_tour_m2(a2)
        check_tour(r2, a2)
        # a degree-4 vertex is revisited before any other degree-4 vertex is reached
        junction_walk = [x for x in r2.vertices if a2.degree[x] == 4]
        assert all(junction_walk[i] == junction_walk[i + 1] for i in range(0, len(junction_walk), 2))


@st.composite
def instances(draw, kmax=30):
    k = draw(st.integers(3, kmax))
    bits = draw(st.lists(st.integers(0, 1), min_size=2 * k + 1, max_size=2 * k + 1))
    return k, bits


@given(instances())
def test_shortcut_lemmas_random(inst):
    k, bits = inst
    for kind, fn, bound in ((M1, b_tour_m1, 9), (M2, b_tour_m2, 2)):
        g, met, a = build(k, bits, kind)
        r = fn(a)
        check_tour(r, a)
        h = shortcut(r, met)
        assert sorted(h.vertices) == list(range(g.n))
        assert h.cost <= r.cost
        assert r.cost - h.cost <= bound
        assert max(h.skipped_runs, default=0) <= 2


@given(instances(kmax=15), st.integers(0, 2 ** 32 - 1))
def test_hierholzer_valid(inst, seed):
    k, bits = inst
    g, met, a = build(k, bits, M1)
    r = hierholzer_tour(a, seed)
    check_tour(r, a)
    assert shortcut(r, met).cost <= r.cost


# -- decoded k = 8 instances --------------------------------------------------------------


def test_k8_ring_instance_order():
    g, met, a, order = instance_from_data("k8_ring_instance.json")
    dec = classify_circuits(a)
    assert dec.lengths[0] in (4, 7, 10) and 2 in dec.lengths
    assert set(dec.lengths[1:]) <= {2, 5, 8}
    r = b_tour_m1(a, dec)
    h = shortcut(r, met)
    assert same_cycle(h.labels(g), order)
    assert h.cost >= r.cost - 9


def test_k8_pendant_instance_order():
    g, met, a, order = instance_from_data("k8_pendant_instance.json")
    r = b_tour_m2(a)
    h = shortcut(r, met)
    assert same_cycle(h.labels(g), order)
    assert h.cost == r.cost


# -- generic tours and shortcutting -----------------------------------------------------


def test_hierholzer_c4():
    c4 = Multigraph.cycle(4)
    for seed in range(5):
        r = hierholzer_tour(c4, seed)
        check_tour(r, c4)
        assert same_cycle(r.vertices[:-1], [0, 1, 2, 3])


def test_hierholzer_regression_k3():
    # [DERIVED] frozen output of the seeded construction
    g, met, a = build(3, [0] * 7, M1)
    r = hierholzer_tour(a, 0)
    assert r.labels(g) == ["v3", "v4", "u5", "v5", "v0", "u1", "v1", "v2", "u3", "u4", "u5",
                           "u0", "w0", "w1", "u1", "u2", "u3", "v3"]
    assert r.cost == 20


def test_hierholzer_rejects_odd_degrees():
    with pytest.raises(ValueError):
        hierholzer_tour(Multigraph(2, [(0, 1)], [1]))


def test_shortcut_of_hamiltonian_tour_is_identity():
    g = build_kdonut(4)
    met = shortest_path_metric(g)
    cyc = hamiltonian_cycle(g)
    r = Tour(cyc + cyc[:1], [], 4 * 4 + 2)
    h = shortcut(r, met)
    assert h.vertices == cyc and h.cost == 18 and h.skipped_runs == [] and h.loss == 0


def test_shortcut_skips_revisit():
    g = build_kdonut(3)
    met = shortest_path_metric(g)
    cyc = [x for x in hamiltonian_cycle(g) if x != g.v(0)]
    i = cyc.index(g.u(0))
    walk = cyc[:i + 1] + [g.v(0), g.u(0)] + cyc[i + 1:] + cyc[:1]
    cost = met.path_cost(walk)
    h = shortcut(Tour(walk, [], cost), met)
    assert h.skipped_runs == [1]
    assert h.vertices == cyc[:i + 1] + [g.v(0)] + cyc[i + 1:]
    # the detour u0 -> v0 -> u0 -> next becomes u0 -> v0 -> next
    assert cost - h.cost == 2 - met(g.v(0), cyc[i + 1])
    assert h.cost <= cost


def test_check_tour_detects_errors():
    c4 = Multigraph.cycle(4)
    good = hierholzer_tour(c4, 1)
    with pytest.raises(ValueError):
        check_tour(Tour(good.vertices[:-1], good.edges[:-1], 3), c4)
    with pytest.raises(ValueError):
        check_tour(Tour(good.vertices, good.edges, 5), c4)
