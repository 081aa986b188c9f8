"""Eulerian subgraphs T + M, their circuit structure, adversarial tours and shortcutting.

Orientation: "clockwise" is the direction of increasing vertex index mod 2k,
with w0 and w1 sitting between index 0 and index 1 (w0 nearer to 0).

Matching pairs at distance 2 become a single multigraph edge of cost 2; the
realizing 2-path is kept in ``EulerianSubgraph.paths`` for accounting only.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidInstance, StructureViolation
from .graph import INNER, OUTER, KDonut, Metric
from .matching import M1, M2, PerfectMatching
from .sampler import OneTree

TREE, MATCH = "tree", "matching"
SPECIAL_LENGTHS = (4, 7, 10)
RING_LENGTHS = (2, 5, 8)
PENDANT_LENGTHS = (2, 3)


@dataclass
class Multigraph:
    """Undirected multigraph on vertices 0..n-1; edge ids index ``ends``/``costs``."""

    n: int
    ends: list[tuple[int, int]]
    costs: list[int]
    incident: list[list[int]] = field(init=False)
    degree: list[int] = field(init=False)

    def __post_init__(self):
        self.incident = [[] for _ in range(self.n)]
        for eid, (a, b) in enumerate(self.ends):
            self.incident[a].append(eid)
            self.incident[b].append(eid)
        self.degree = [len(x) for x in self.incident]

    @property
    def cost(self) -> int:
        return int(sum(self.costs))

    def other(self, eid: int, x: int) -> int:
        a, b = self.ends[eid]
        return b if x == a else a

    def is_connected(self) -> bool:
        ends, incident = self.ends, self.incident
        seen = [False] * self.n
        seen[0] = True
        stack = [0]
        count = 1
        while stack:
            a = stack.pop()
            for eid in incident[a]:
                p, q = ends[eid]
                b = q if p == a else p
                if not seen[b]:
                    seen[b] = True
                    count += 1
                    stack.append(b)
        return count == self.n

    @classmethod
    def cycle(cls, n: int) -> "Multigraph":
        return cls(n, [(i, (i + 1) % n) for i in range(n)], [1] * n)


@dataclass
class EulerianSubgraph(Multigraph):
    """The multigraph T + M on the k-donut vertex set."""

    graph: KDonut | None = None
    tree: OneTree | None = None
    matching: PerfectMatching | None = None
    kinds: list[str] = field(default_factory=list)
    paths: dict[int, tuple[int, int, int]] = field(default_factory=dict)

    @property
    def matching_kind(self) -> str:
        return self.matching.kind

    @property
    def e_plus_id(self) -> int:
        g = self.graph
        for eid, (a, b) in enumerate(self.ends):
            if {a, b} == {g.w0, g.w1}:
                return eid
        raise StructureViolation("e+ missing", claim="eulerian-subgraph")

    def violation(self, msg: str, claim: str) -> StructureViolation:
        choice = self.tree.choice.bits if self.tree is not None else None
        k = self.graph.k if self.graph is not None else None
        return StructureViolation(msg, claim=claim, k=k, choice=choice)


def eulerian_subgraph(t: OneTree, m: PerfectMatching, metric: Metric) -> EulerianSubgraph:
    """Join the 1-tree and the matching into one even-degree multigraph."""
    g = t.graph
    ends = list(map(tuple, t.edges.tolist()))
    costs = [1] * len(ends)
    kinds = [TREE] * len(ends)
    paths = {}
    odd = np.flatnonzero(t.degree % 2).tolist()
    covered = [x for pair in m.pairs for x in pair]
    if sorted(covered) != odd:
        raise StructureViolation("matching does not cover exactly the odd vertices",
                                 claim="parity", k=g.k, choice=t.choice.bits)
    for a, b in m.pairs:
        c = metric(a, b)
        if c == 2:
            paths[len(ends)] = (a, metric.midpoint(a, b), b)
        ends.append((a, b))
        costs.append(c)
        kinds.append(MATCH)
    a = EulerianSubgraph(g.n, ends, costs, graph=g, tree=t, matching=m, kinds=kinds, paths=paths)
    if any(d % 2 for d in a.degree):
        raise a.violation("T + M has an odd-degree vertex", "parity")
    if not a.is_connected():
        raise a.violation("T + M is disconnected", "parity")
    return a


# ---------------------------------------------------------------------------
# circuit structure


class Chain(NamedTuple):
    """Maximal path whose interior vertices all have degree 2."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    start: int
    end: int

    @classmethod
    def of(cls, vertices, edges) -> "Chain":
        return cls(tuple(vertices), tuple(edges), vertices[0], vertices[-1])

    def reversed(self) -> "Chain":
        return Chain(self.vertices[::-1], self.edges[::-1], self.end, self.start)


class Circuit(NamedTuple):
    edges: tuple[int, ...]
    vertices: tuple[int, ...]
    special: bool
    junctions: tuple[int, ...]
    sides: tuple[Chain, ...]
    length: int


@dataclass
class CircuitDecomposition:
    """Circuit structure of T + M1 (a ring) or T + M2 (a cycle with pendants).

    For M1, ``circuits`` runs clockwise starting with the special circuit and
    ``junctions[i]`` is the counterclockwise junction of ``circuits[i]``, so
    ``junctions[0]`` is the tour start t0. For M2, ``circuits`` are the
    pendant circuits in clockwise order along ``large_cycle`` (a clockwise
    vertex sequence without repetition) and ``junctions[i]`` is where
    ``circuits[i]`` hangs.
    """

    matching_kind: str
    circuits: list[Circuit]
    junctions: list[int]
    circuit_of: list[int]
    large_cycle: tuple[int, ...] | None = None
    large_cycle_edges: tuple[int, ...] | None = None

    @property
    def lengths(self) -> list[int]:
        return [c.length for c in self.circuits]

    @property
    def t0(self) -> int:
        return self.junctions[0]


def _chains(a: EulerianSubgraph) -> list[Chain]:
    deg = a.degree
    if any(d not in (2, 4) for d in deg):
        raise a.violation("T + M has a vertex of degree other than 2 or 4", "circuit-structure")
    junctions = [x for x in range(a.n) if deg[x] == 4]
    if not junctions:
        raise a.violation("T + M has no degree-4 vertex", "circuit-structure")
    ends, incident = a.ends, a.incident
    used = [False] * len(ends)
    chains = []
    for j in junctions:
        for eid in incident[j]:
            if used[eid]:
                continue
            verts, eids = [j], []
            cur, e = j, eid
            while True:
                used[e] = True
                eids.append(e)
                p, q = ends[e]
                nxt = q if p == cur else p
                verts.append(nxt)
                if deg[nxt] == 4:
                    break
                pair = incident[nxt]
                e = pair[0] if pair[1] == e else pair[1]
                cur = nxt
            chains.append(Chain.of(verts, eids))
    return chains


def _winding(g: KDonut, cycle) -> int:
    """Net number of clockwise turns of a closed vertex sequence (no repeat)."""
    m = 2 * g.k
    total = 0.0
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        d = (g.position(b) - g.position(a)) % m
        if d > m / 2:
            d -= m
        total += d
    return int(round(total / m))


def classify_circuits(a: EulerianSubgraph) -> CircuitDecomposition:
    """Decompose T + M1 or T + M2 and check the expected shape.

    Raises StructureViolation if the shape is not the claimed one.
    """
    if a.matching_kind == M1:
        return _classify_m1(a)
    if a.matching_kind == M2:
        return _classify_m2(a)
    raise InvalidInstance(f"circuit classification needs M1 or M2, got {a.matching_kind}")


def _classify_m1(a: EulerianSubgraph) -> CircuitDecomposition:
    g = a.graph
    chains = _chains(a)
    if any(c.start == c.end for c in chains):
        raise a.violation("T + M1 has a pendant circuit", "m1-circuits")
    groups: dict[frozenset, list[Chain]] = defaultdict(list)
    for c in chains:
        groups[frozenset((c.start, c.end))].append(c)
    if any(len(v) != 2 for v in groups.values()):
        raise a.violation("junction pair not joined by exactly two sides", "m1-circuits")
    at: dict[int, list[frozenset]] = defaultdict(list)
    for key in groups:
        for x in key:
            at[x].append(key)
    if any(len(v) != 2 for v in at.values()):
        raise a.violation("junction not shared by exactly two circuits", "m1-circuits")

    e_plus = a.e_plus_id
    # the side carrying e+: walk from w0 away from w1 to find t0
    side = next(c for c in chains if e_plus in c.edges)
    special_key = frozenset((side.start, side.end))
    pos = side.edges.index(e_plus)
    w0_first = side.vertices[pos] == g.w0
    t0 = side.start if w0_first else side.end

    circuits, junctions, circuit_of = [], [], [-1] * len(a.ends)
    key, j = special_key, t0
    while True:
        (nxt_j,) = [x for x in key if x != j]
        sides = tuple(s if s.start == j else s.reversed() for s in groups[key])
        edges = tuple(e for s in sides for e in s.edges)
        verts = sides[0].vertices + sides[1].reversed().vertices[1:-1]
        idx = len(circuits)
        for e in edges:
            circuit_of[e] = idx
        circuits.append(Circuit(edges, verts, key == special_key, (j, nxt_j), sides, len(edges)))
        junctions.append(j)
        key = next(kk for kk in at[nxt_j] if kk != key)
        j = nxt_j
        if key == special_key:
            break
        if len(circuits) > len(groups):
            raise a.violation("circuits do not close up into a ring", "m1-circuits")
    if len(circuits) != len(groups) or j != t0:
        raise a.violation("circuits do not form a single ring", "m1-circuits")

    if circuits[0].length not in SPECIAL_LENGTHS:
        raise a.violation(f"special circuit has length {circuits[0].length}", "m1-circuit-lengths")
    for c in circuits[1:]:
        if c.length not in RING_LENGTHS:
            raise a.violation(f"circuit of length {c.length}", "m1-circuit-lengths")
    r = len(circuits)
    for i in range(r):
        if circuits[i].length == 2 and circuits[(i + 1) % r].length == 2:
            raise a.violation("two doubled edges are adjacent", "m1-no-adjacent-doubles")
    return CircuitDecomposition(M1, circuits, junctions, circuit_of)


def _classify_m2(a: EulerianSubgraph) -> CircuitDecomposition:
    g = a.graph
    chains = _chains(a)
    loops = [c for c in chains if c.start == c.end]
    links = [c for c in chains if c.start != c.end]
    loop_at: dict[int, list[Chain]] = defaultdict(list)
    for c in loops:
        loop_at[c.start].append(c)
    junctions = {x for x in range(a.n) if a.degree[x] == 4}
    if set(loop_at) != junctions or any(len(v) != 1 for v in loop_at.values()):
        raise a.violation("each degree-4 vertex needs exactly one hanging circuit", "m2-structure")
    for c in loops:
        if len(c.edges) not in PENDANT_LENGTHS:
            raise a.violation(f"hanging circuit of length {len(c.edges)}", "m2-structure")
        if not any(a.kinds[e] == MATCH for e in c.edges):
            raise a.violation("hanging circuit without a matching edge", "m2-structure")

    # stitch the links into one cycle
    by_end: dict[int, list[Chain]] = defaultdict(list)
    for c in links:
        by_end[c.start].append(c)
        by_end[c.end].append(c)
    if any(len(by_end[x]) != 2 for x in junctions):
        raise a.violation("large cycle is not a simple cycle", "m2-structure")
    start = min(junctions)
    cur_chain = by_end[start][0]
    verts, eids = [], []
    j = start
    for _ in range(len(links)):
        c = cur_chain if cur_chain.start == j else cur_chain.reversed()
        verts.extend(c.vertices[:-1])
        eids.extend(c.edges)
        j = c.end
        nxt = [cc for cc in by_end[j] if cc is not cur_chain]
        cur_chain = nxt[0]
        if j == start:
            break
    if j != start or len(eids) != sum(len(c.edges) for c in links):
        raise a.violation("links do not form a single large cycle", "m2-structure")
    if len(set(verts)) != len(verts):
        raise a.violation("large cycle repeats a vertex", "m2-structure")
    turns = _winding(g, verts)
    if turns == -1:
        verts = [verts[0]] + verts[:0:-1]
        eids = eids[::-1]
    elif turns != 1:
        raise a.violation("large cycle does not wind once around the donut", "m2-structure")

    order = [x for x in verts if x in junctions]
    circuits, circuit_of = [], [-1] * len(a.ends)
    for idx, x in enumerate(order):
        c = loop_at[x][0]
        for e in c.edges:
            circuit_of[e] = idx
        circuits.append(Circuit(c.edges, c.vertices[:-1], False, (x,), (c,), len(c.edges)))
    return CircuitDecomposition(M2, circuits, order, circuit_of,
                                large_cycle=tuple(verts), large_cycle_edges=tuple(eids))


# ---------------------------------------------------------------------------
# tours


@dataclass
class Tour:
    """Closed walk ``vertices[0] .. vertices[-1] == vertices[0]`` using each edge once."""

    vertices: list[int]
    edges: list[int]
    cost: int

    def labels(self, g: KDonut) -> list[str]:
        return [g.label(x) for x in self.vertices]


@dataclass
class HamiltonianCycle:
    vertices: list[int]
    cost: int
    source_cost: int
    skipped_runs: list[int]

    @property
    def loss(self) -> int:
        return self.source_cost - self.cost

    def labels(self, g: KDonut) -> list[str]:
        return [g.label(x) for x in self.vertices]


def check_tour(tour: Tour, a: Multigraph) -> None:
    """Raise ValueError unless ``tour`` is an Eulerian circuit of ``a``."""
    if tour.vertices[0] != tour.vertices[-1]:
        raise ValueError("tour is not closed")
    if len(tour.edges) != len(a.ends) or sorted(tour.edges) != list(range(len(a.ends))):
        raise ValueError("tour does not use every edge exactly once")
    for x, y, e in zip(tour.vertices, tour.vertices[1:], tour.edges):
        if {x, y} != set(a.ends[e]) and not (x == y == a.ends[e][0] == a.ends[e][1]):
            raise ValueError("consecutive tour vertices are not joined by the recorded edge")
    if tour.cost != sum(a.costs[e] for e in tour.edges):
        raise ValueError("tour cost does not match its edges")


def _tour(a: Multigraph, verts, eids) -> Tour:
    return Tour(list(verts), list(eids), int(sum(a.costs[e] for e in eids)))


def b_tour_m1(a: EulerianSubgraph, dec: CircuitDecomposition | None = None) -> Tour:
    """Adversarial Eulerian tour of T + M1.

    Starts at t0 and, at each degree-4 vertex, applies in priority order:
    (1) at t0 take an untraversed edge of the clockwise circuit; (2) never
    move into the counterclockwise circuit; (3) on entering a circuit of
    length 5 or 8, take the side on the ring opposite to the tail of the
    last traversed edge of such a circuit (initially the ring of t0).
    """
    g = a.graph
    dec = dec or classify_circuits(a)
    if dec.matching_kind != M1:
        raise InvalidInstance("b_tour_m1 needs a T + M1 decomposition")
    circuits, circuit_of = dec.circuits, dec.circuit_of
    cw_circuit = {j: i for i, j in enumerate(dec.junctions)}
    long_circuit = [not c.special and c.length in (5, 8) for c in circuits]
    deg = a.degree
    t0 = dec.t0

    used = [False] * len(a.ends)
    visits = [0] * a.n
    visits[t0] = 1
    last_ring = g.ring(t0)
    verts, eids = [t0], []
    cur = t0
    ends, incident = a.ends, a.incident
    for _ in range(len(ends)):
        inc = incident[cur]
        if deg[cur] == 2:
            e = inc[1] if used[inc[0]] else inc[0]
            if used[e]:
                raise a.violation(f"B-tour stuck at {g.label(cur)}", "b-tour-deadlock")
            used[e] = True
            if long_circuit[circuit_of[e]]:
                last_ring = g.ring(cur)
            p, q = ends[e]
            cur = q if p == cur else p
            visits[cur] += 1
            verts.append(cur)
            eids.append(e)
            continue
        avail = [e for e in inc if not used[e]]
        if not avail:
            raise a.violation(f"B-tour stuck at {g.label(cur)}", "b-tour-deadlock")
        if cur != t0 and visits[cur] >= 2:
            if len(avail) != 1:
                raise a.violation(f"ambiguous forced move at {g.label(cur)}", "b-tour-deadlock")
            e = avail[0]
        else:
            home = cw_circuit[cur]
            cand = [e for e in avail if circuit_of[e] == home]
            if not cand:
                raise a.violation(f"no clockwise edge at {g.label(cur)}", "b-tour-deadlock")
            if cur == t0 or circuits[home].length == 2:
                e = min(cand, key=lambda f: (g.order_key(a.other(f, cur)), f))
            else:
                want = INNER if last_ring == OUTER else OUTER
                hit = [f for f in cand if g.ring(a.other(f, cur)) == want]
                if len(hit) != 1:
                    raise a.violation(f"cannot alternate sides at {g.label(cur)}", "b-tour-alternation")
                e = hit[0]
        used[e] = True
        if long_circuit[circuit_of[e]]:
            last_ring = g.ring(cur)
        cur = a.other(e, cur)
        visits[cur] += 1
        verts.append(cur)
        eids.append(e)
    if cur != t0:
        raise a.violation("B-tour did not return to t0", "b-tour-deadlock")
    return _tour(a, verts, eids)


def b_tour_m2(a: EulerianSubgraph, dec: CircuitDecomposition | None = None) -> Tour:
    """Adversarial Eulerian tour of T + M2.

    Starts at the lowest-index outer degree-2 vertex of the large cycle,
    steps clockwise, and on first reaching a degree-4 vertex immediately
    takes its matching edge.
    """
    g = a.graph
    dec = dec or classify_circuits(a)
    if dec.matching_kind != M2:
        raise InvalidInstance("b_tour_m2 needs a T + M2 decomposition")
    cyc = dec.large_cycle
    deg = a.degree
    cands = [x for x in cyc if deg[x] == 2 and g.ring(x) == OUTER]
    if not cands:
        cands = [x for x in cyc if deg[x] == 2]
    t0 = min(cands, key=g.order_key)
    at = cyc.index(t0)
    first = dec.large_cycle_edges[at]

    used = [False] * len(a.ends)
    visits = [0] * a.n
    visits[t0] = 1
    verts, eids = [t0], []
    cur = t0
    ends, incident, kinds = a.ends, a.incident, a.kinds
    for step in range(len(ends)):
        inc = incident[cur]
        if deg[cur] == 2 and step:
            e = inc[1] if used[inc[0]] else inc[0]
            if used[e]:
                raise a.violation(f"B-tour stuck at {g.label(cur)}", "b-tour-deadlock")
            used[e] = True
            p, q = ends[e]
            cur = q if p == cur else p
            visits[cur] += 1
            verts.append(cur)
            eids.append(e)
            continue
        avail = [e for e in inc if not used[e]]
        if not avail:
            raise a.violation(f"B-tour stuck at {g.label(cur)}", "b-tour-deadlock")
        if step == 0:
            e = first
        elif deg[cur] == 4 and visits[cur] == 1:
            hit = [f for f in avail if kinds[f] == MATCH]
            if len(hit) != 1:
                raise a.violation(f"no matching edge to take at {g.label(cur)}", "b-tour-deadlock")
            e = hit[0]
        else:
            if len(avail) != 1:
                raise a.violation(f"ambiguous forced move at {g.label(cur)}", "b-tour-deadlock")
            e = avail[0]
        used[e] = True
        cur = a.other(e, cur)
        visits[cur] += 1
        verts.append(cur)
        eids.append(e)
    if cur != t0:
        raise a.violation("B-tour did not return to its start", "b-tour-deadlock")
    return _tour(a, verts, eids)


def hierholzer_tour(a: Multigraph, rng=None, start: int | None = None) -> Tour:
    """Eulerian circuit by Hierholzer's splice construction.

    ``rng`` (seed or numpy Generator) shuffles the edge order at every
    vertex; None keeps incidence order.
    """
    if any(d % 2 for d in a.degree):
        raise ValueError("graph has odd-degree vertices")
    if rng is not None and not isinstance(rng, np.random.Generator):
        from .sampler import make_rng
        rng = make_rng(rng, stream=1)
    order = [list(x) for x in a.incident]
    if rng is not None:
        for lst in order:
            rng.shuffle(lst)
    if start is None:
        start = int(rng.integers(a.n)) if rng is not None else 0
    used = [False] * len(a.ends)
    ptr = [0] * a.n
    stack = [(start, -1)]
    out = []
    while stack:
        x, e_in = stack[-1]
        lst = order[x]
        while ptr[x] < len(lst) and used[lst[ptr[x]]]:
            ptr[x] += 1
        if ptr[x] == len(lst):
            stack.pop()
            out.append((x, e_in))
        else:
            e = lst[ptr[x]]
            used[e] = True
            stack.append((a.other(e, x), e))
    out.reverse()
    if len(out) != len(a.ends) + 1:
        raise ValueError("graph is not connected")
    verts = [x for x, _ in out]
    eids = [e for _, e in out[1:]]
    return _tour(a, verts, eids)


def shortcut(r: Tour, metric: Metric) -> HamiltonianCycle:
    """Keep the first occurrence of every vertex, then close the cycle.

    ``skipped_runs`` lists the lengths of maximal runs of consecutive tour
    positions dropped as repeats (the closing return to the start is not a
    skip).
    """
    walk = r.vertices
    seen = set()
    cycle, runs, run = [], [], 0
    for x in walk[:-1]:
        if x in seen:
            run += 1
            continue
        if run:
            runs.append(run)
            run = 0
        seen.add(x)
        cycle.append(x)
    if run:
        runs.append(run)
    closed = cycle + cycle[:1]
    cost = metric.path_cost(closed)
    return HamiltonianCycle(cycle, cost, r.cost, runs)
