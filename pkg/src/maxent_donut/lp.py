"""Half-integral Subtour LP point on the k-donut, with exact certificates.

Values are kept in half units (``2 * x_e`` as an int), so every check here
is integer arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import BudgetExceeded, InvalidInstance
from .graph import KDonut, build_kdonut

MAX_EXTREME_K = 5


@dataclass(frozen=True)
class SubtourSolution:
    """Edge values of an LP point, aligned with ``graph.edges``.

    ``halves[j]`` is ``2 * x_e`` for ``e = graph.edges[j]``.
    """

    graph: KDonut
    halves: tuple[int, ...]

    def __post_init__(self):
        if len(self.halves) != len(self.graph.edges):
            raise InvalidInstance("one value per graph edge is required")

    def x(self, a: int, b: int) -> Fraction:
        j = self.graph.edge_index[(min(a, b), max(a, b))]
        return Fraction(self.halves[j], 2)

    @property
    def objective_halves(self) -> int:
        # unit edge costs on the graph, so c(x) = sum of x_e
        return sum(self.halves)

    @property
    def objective(self) -> Fraction:
        return Fraction(self.objective_halves, 2)

    def replace(self, changes: dict[tuple[int, int], int]) -> "SubtourSolution":
        """Copy with some edges' half-unit values overwritten."""
        h = list(self.halves)
        for (a, b), val in changes.items():
            h[self.graph.edge_index[(min(a, b), max(a, b))]] = int(val)
        return SubtourSolution(self.graph, tuple(h))

    def fractional_edges(self) -> list[int]:
        return [j for j, h in enumerate(self.halves) if h == 1]

    def to_dict(self) -> dict[str, int]:
        g = self.graph
        return {f"{g.label(a)}-{g.label(b)}": h for (a, b), h in zip(g.edges, self.halves)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, graph: KDonut, doc: dict[str, int]) -> "SubtourSolution":
        h = [0] * len(graph.edges)
        for key, val in doc.items():
            a, b = key.split("-")
            e = tuple(sorted((graph.id_of(a), graph.id_of(b))))
            if e not in graph.edge_index:
                raise InvalidInstance(f"{key} is not an edge")
            h[graph.edge_index[e]] = int(val)
        return cls(graph, tuple(h))


def extreme_point(g: KDonut) -> SubtourSolution:
    """The half-integral extreme point with objective 4k + 2.

    Spokes get 1/2; ring edges {i, i+1} get 1 for odd i, 1/2 for even
    i != 0 and 0 for i = 0; {w0, w1} gets 1 and the four gadget edges 1/2.
    """
    vals: dict[tuple[int, int], int] = {}

    def put(a, b, h):
        vals[(min(a, b), max(a, b))] = h

    for i in range(2 * g.k):
        put(g.u(i), g.v(i), 1)
        ring = 2 if i % 2 == 1 else (1 if i != 0 else 0)
        put(g.u(i), g.u(i + 1), ring)
        put(g.v(i), g.v(i + 1), ring)
    put(g.w0, g.w1, 2)
    for a, b in ((g.w0, g.u(0)), (g.w0, g.v(0)), (g.w1, g.u(1)), (g.w1, g.v(1))):
        put(a, b, 1)
    return SubtourSolution(g, tuple(vals[e] for e in g.edges))


def solution_from_cycle(g: KDonut, cycle) -> SubtourSolution:
    """Integral LP point of a Hamiltonian cycle made of graph edges."""
    cycle = list(cycle)
    h = [0] * len(g.edges)
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        e = (min(a, b), max(a, b))
        if e not in g.edge_index:
            raise InvalidInstance(f"{g.label(a)}-{g.label(b)} is not a graph edge")
        h[g.edge_index[e]] += 2
    return SubtourSolution(g, tuple(h))


def midpoint(x: SubtourSolution, y: SubtourSolution) -> SubtourSolution:
    """(x + y) / 2, which must stay half-integral."""
    if x.graph is not y.graph:
        raise InvalidInstance("points live on different graphs")
    h = []
    for a, b in zip(x.halves, y.halves):
        if (a + b) % 2:
            raise InvalidInstance("midpoint is not half-integral")
        h.append((a + b) // 2)
    return SubtourSolution(x.graph, tuple(h))


def stoer_wagner(weights: np.ndarray) -> tuple[int, list[int]]:
    """Global minimum cut of an undirected graph given a symmetric weight matrix.

    Returns the cut value and one side of a minimum cut. Integer weights
    give an exact result.
    """
    W = np.array(weights, dtype=np.int64)
    n = W.shape[0]
    if n < 2:
        raise InvalidInstance("need at least two vertices")
    groups = {i: [i] for i in range(n)}
    alive = list(range(n))
    best_value, best_side = None, None
    while len(alive) > 1:
        idx = np.array(alive)
        sub = W[np.ix_(idx, idx)]
        added = np.zeros(len(idx), dtype=bool)
        conn = np.zeros(len(idx), dtype=np.int64)
        order = []
        last_conn = 0
        for _ in range(len(idx)):
            cand = np.where(added, -1, conn)
            j = int(np.argmax(cand))
            last_conn = int(conn[j])
            added[j] = True
            order.append(j)
            conn += sub[j]
        s, t = int(idx[order[-2]]), int(idx[order[-1]])
        if best_value is None or last_conn < best_value:
            best_value, best_side = last_conn, list(groups[t])
        W[s, :] += W[t, :]
        W[:, s] += W[:, t]
        W[s, s] = 0
        W[t, :] = 0
        W[:, t] = 0
        groups[s].extend(groups.pop(t))
        alive.remove(t)
    return best_value, sorted(best_side)


def _weight_matrix(x: SubtourSolution) -> np.ndarray:
    g = x.graph
    W = np.zeros((g.n, g.n), dtype=np.int64)
    for (a, b), h in zip(g.edges, x.halves):
        W[a, b] += h
        W[b, a] += h
    return W


def min_cut_halves(x: SubtourSolution) -> tuple[int, list[int]]:
    """Minimum of 2 * x(delta(S)) over proper nonempty S, with a minimizing S."""
    return stoer_wagner(_weight_matrix(x))


def check_feasible(x: SubtourSolution, g: KDonut | None = None) -> bool:
    """Exact Subtour LP feasibility: bounds, degree equations and all cut constraints.

    The exponentially many cut constraints are checked at once through a
    global minimum cut of the support weighted by ``2 x``.
    """
    g = g or x.graph
    if x.graph.k != g.k or len(x.halves) != len(g.edges):
        return False
    if any(h not in (0, 1, 2) for h in x.halves):
        return False
    deg = [0] * g.n
    for (a, b), h in zip(g.edges, x.halves):
        deg[a] += h
        deg[b] += h
    if any(d != 4 for d in deg):
        return False
    value, _ = min_cut_halves(x)
    return value >= 4


def cut_table(x: SubtourSolution) -> tuple[np.ndarray, np.ndarray]:
    """2 * x(delta(S)) for every S containing vertex 0, plus |S|.

    Vertex ``j >= 1`` is in S iff bit ``j - 1`` of the mask is set; the
    table is indexed by mask.
    """
    g = x.graph
    if g.k > MAX_EXTREME_K:
        raise BudgetExceeded(
            f"tight-set enumeration is limited to k <= {MAX_EXTREME_K} (2^{g.n - 1} subsets)")
    masks = np.arange(1 << (g.n - 1), dtype=np.int64)
    cut = np.zeros(masks.shape, dtype=np.int16)
    for (a, b), h in zip(g.edges, x.halves):
        if h == 0:
            continue
        cut += h * (_member(masks, a) ^ _member(masks, b)).astype(np.int16)
    size = 1 + np.bitwise_count(masks).astype(np.int64)
    return cut, size


def _member(masks: np.ndarray, vertex) -> np.ndarray:
    vertex = np.asarray(vertex, dtype=np.int64)
    bit = (masks >> np.maximum(vertex - 1, 0)) & 1
    return np.where(vertex == 0, 1, bit)


def tight_sets(x: SubtourSolution) -> np.ndarray:
    """Masks (vertex 0 inside) of proper sets S with x(delta(S)) = 2."""
    g = x.graph
    cut, size = cut_table(x)
    keep = (cut == 4) & (size >= 2) & (size <= g.n - 2)
    return np.flatnonzero(keep).astype(np.int64)


def integer_rank(rows, ncols: int) -> int:
    """Rank over the rationals of integer row vectors, by fraction-free elimination."""
    basis: dict[int, list[int]] = {}
    for row in rows:
        r = [int(v) for v in row]
        for c in range(ncols):
            if r[c] == 0:
                continue
            b = basis.get(c)
            if b is None:
                basis[c] = r
                break
            p, q = b[c], r[c]
            r = [p * ri - q * bi for ri, bi in zip(r, b)]
            div = 0
            for v in r:
                div = gcd(div, v)
            if div > 1:
                r = [v // div for v in r]
        if len(basis) == ncols:
            break
    return len(basis)


def check_extreme(x: SubtourSolution, g: KDonut | None = None) -> bool:
    """Vertex test: tight constraints must pin down every fractional edge.

    Builds the rows of all degree constraints and every tight proper cut,
    restricted to the columns with ``0 < x_e < 1``, and compares the exact
    rank to the number of such columns. Tight sets are discovered by
    enumerating every subset, so only ``k <= 5`` is accepted.
    """
    g = g or x.graph
    if g.k > MAX_EXTREME_K:
        raise BudgetExceeded(f"check_extreme is limited to k <= {MAX_EXTREME_K}")
    frac = x.fractional_edges()
    if not frac:
        return True
    ends = np.array([g.edges[j] for j in frac], dtype=np.int64)

    rows = []
    for vtx in range(g.n):
        rows.append(((ends[:, 0] == vtx) | (ends[:, 1] == vtx)).astype(np.int8))
    masks = tight_sets(x)
    if masks.size:
        crossing = (_member(masks[:, None], ends[None, :, 0])
                    ^ _member(masks[:, None], ends[None, :, 1])).astype(np.int8)
        rows.extend(np.unique(crossing, axis=0))
    rows = np.unique(np.array(rows, dtype=np.int8), axis=0)
    return integer_rank(rows.tolist(), len(frac)) == len(frac)


def verify_lp(k: int) -> dict:
    """Feasibility (any k) and extremality (k <= 5) verdicts for the extreme point."""
    g = build_kdonut(k)
    x = extreme_point(g)
    return {
        "objective": int(x.objective) if x.objective.denominator == 1 else str(x.objective),
        "feasible": check_feasible(x, g),
        "extreme": check_extreme(x, g) if k <= MAX_EXTREME_K else None,
    }
