"""The graphic k-donut instance and its shortest-path metric.

Vertices are stored as small integers so that numpy tables can be indexed
directly. The layout is ``u_i -> i``, ``v_i -> 2k + i``, ``w0 -> 4k`` and
``w1 -> 4k + 1``; callers should go through :meth:`KDonut.u`,
:meth:`KDonut.v` and friends (which reduce indices mod 2k) rather than
relying on the numbering.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import InvalidInstance

OUTER = "outer"
INNER = "inner"


@dataclass(frozen=True, order=True)
class VertexId:
    """Structural vertex identity: ``kind`` is ``"u"``, ``"v"`` or ``"w"``."""

    kind: str
    index: int

    @property
    def label(self) -> str:
        return f"{self.kind}{self.index}"

    @classmethod
    def parse(cls, label: str) -> "VertexId":
        kind, rest = label[:1], label[1:]
        if kind not in ("u", "v", "w") or not rest.isdigit():
            raise InvalidInstance(f"bad vertex label {label!r}")
        return cls(kind, int(rest))


class KDonut:
    """The k-donut graph: two 2k-cycles joined by spokes plus the envelope gadget.

    Instances are treated as immutable once built; use :func:`build_kdonut`.
    """

    def __init__(self, k: int):
        if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
            raise InvalidInstance(f"k must be an integer, got {k!r}")
        k = int(k)
        if k < 3:
            raise InvalidInstance(f"the k-donut needs k >= 3, got k={k}")
        self.k = k
        self.n = 4 * k + 2
        self.w0 = 4 * k
        self.w1 = 4 * k + 1

        m = 2 * k
        pairs = []
        for i in range(m):
            pairs.append((self.u(i), self.u(i + 1)))
            pairs.append((self.v(i), self.v(i + 1)))
            pairs.append((self.u(i), self.v(i)))
        pairs += [
            (self.w0, self.w1),
            (self.w0, self.u(0)),
            (self.w0, self.v(0)),
            (self.w1, self.u(1)),
            (self.w1, self.v(1)),
        ]
        self.edges: tuple[tuple[int, int], ...] = tuple(
            sorted((min(a, b), max(a, b)) for a, b in pairs))
        self.edge_index = {e: j for j, e in enumerate(self.edges)}

        adj: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(x)) for x in adj)

    # -- vertex naming -------------------------------------------------
    def u(self, i: int) -> int:
        return i % (2 * self.k)

    def v(self, i: int) -> int:
        return 2 * self.k + i % (2 * self.k)

    @property
    def e_plus(self) -> tuple[int, int]:
        return (self.w0, self.w1)

    def vertex(self, x: int) -> VertexId:
        m = 2 * self.k
        if x < 0 or x >= self.n:
            raise InvalidInstance(f"vertex {x} out of range for k={self.k}")
        if x < m:
            return VertexId("u", x)
        if x < 2 * m:
            return VertexId("v", x - m)
        return VertexId("w", x - 2 * m)

    def label(self, x: int) -> str:
        return self.vertex(x).label

    def id_of(self, vertex: VertexId | str) -> int:
        if isinstance(vertex, str):
            vertex = VertexId.parse(vertex)
        if vertex.kind == "u":
            return self.u(vertex.index)
        if vertex.kind == "v":
            return self.v(vertex.index)
        if vertex.index in (0, 1):
            return self.w0 + vertex.index
        raise InvalidInstance(f"no vertex {vertex.label}")

    def ring(self, x: int) -> str | None:
        """``"outer"`` for u-vertices, ``"inner"`` for v-vertices, None for w0/w1."""
        if x < 2 * self.k:
            return OUTER
        if x < 4 * self.k:
            return INNER
        return None

    def index(self, x: int) -> int | None:
        """Position i of u_i / v_i around the donut; None for w0 and w1."""
        if x < 4 * self.k:
            return x % (2 * self.k)
        return None

    def position(self, x: int) -> float:
        """Angular coordinate, increasing clockwise; w0 and w1 sit between index 0 and 1."""
        if x == self.w0:
            return 1.0 / 3.0
        if x == self.w1:
            return 2.0 / 3.0
        return float(x % (2 * self.k))

    def order_key(self, x: int) -> tuple[int, int]:
        """Deterministic tie-break order: by index, then u < v < w."""
        if x == self.w0:
            return (0, 2)
        if x == self.w1:
            return (1, 2)
        return (x % (2 * self.k), 0 if x < 2 * self.k else 1)

    # -- edges ---------------------------------------------------------
    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edge_index

    def degree(self, x: int) -> int:
        return len(self.adjacency[x])

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "vertices": [self.label(x) for x in range(self.n)],
            "edges": [[self.label(a), self.label(b)] for a, b in self.edges],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "KDonut":
        g = build_kdonut(int(doc["k"]))
        edges = {tuple(sorted((g.id_of(a), g.id_of(b)))) for a, b in doc["edges"]}
        if edges != set(g.edges):
            raise InvalidInstance("edge list does not match the k-donut")
        return g

    def __repr__(self) -> str:
        return f"KDonut(k={self.k})"


@lru_cache(maxsize=32)
def build_kdonut(k: int) -> KDonut:
    """Build (and cache) the k-donut for ``k >= 3``."""
    return KDonut(k)


class Metric:
    """All-pairs shortest-path distances of a k-donut, as a read-only int table."""

    def __init__(self, graph: KDonut, dist: np.ndarray):
        dist = np.asarray(dist, dtype=np.int16)
        dist.setflags(write=False)
        self.graph = graph
        self.dist = dist

    def __call__(self, a: int, b: int) -> int:
        return int(self.dist[a, b])

    def path_cost(self, walk) -> int:
        walk = np.asarray(walk, dtype=np.intp)
        return int(self.dist[walk[:-1], walk[1:]].sum())

    def midpoint(self, a: int, b: int) -> int:
        """A vertex on a shortest a-b path when dist(a, b) == 2."""
        g = self.graph
        for c in g.adjacency[a]:
            if self.dist[c, b] == 1:
                return c
        raise InvalidInstance(f"{g.label(a)} and {g.label(b)} are not at distance 2")


def bfs_distances(g: KDonut, source: int) -> list[int]:
    """Unweighted single-source distances by breadth-first search."""
    dist = [-1] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        a = queue.popleft()
        for b in g.adjacency[a]:
            if dist[b] < 0:
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


@lru_cache(maxsize=8)
def shortest_path_metric(g: KDonut) -> Metric:
    """Graphic metric of ``g``.

    Runs the breadth-first search of every source through scipy's compiled
    csgraph routine; :func:`bfs_distances` is the pure-Python equivalent.
    """
    rows = [a for a, b in g.edges] + [b for a, b in g.edges]
    cols = [b for a, b in g.edges] + [a for a, b in g.edges]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))
    dist = shortest_path(adj, method="D", directed=False, unweighted=True)
    if not np.isfinite(dist).all():
        raise InvalidInstance("graph is disconnected")
    return Metric(g, dist.astype(np.int16))


def hamiltonian_cycle(g: KDonut) -> list[int]:
    """An explicit Hamiltonian cycle of the k-donut using only graph edges.

    Order: w0, u0, u_{2k-1}, ..., u_2, v_2, ..., v_{2k-1}, v_0, v_1, u_1, w1.
    The returned list does not repeat the start vertex.
    """
    m = 2 * g.k
    cyc = [g.w0, g.u(0)]
    cyc += [g.u(i) for i in range(m - 1, 1, -1)]
    cyc += [g.v(i) for i in range(2, m)]
    cyc += [g.v(0), g.v(1), g.u(1), g.w1]
    return cyc


def tour_cost(metric: Metric, cycle) -> int:
    """Cost of a closed tour given as a vertex sequence without the repeat."""
    cycle = list(cycle)
    return metric.path_cost(cycle + cycle[:1])


def brute_force_tour_cost(metric: Metric, max_n: int = 16) -> int:
    """Optimal TSP tour cost by subset dynamic programming (Held-Karp)."""
    d = np.asarray(metric.dist, dtype=np.int64)
    n = d.shape[0]
    if n > max_n:
        raise InvalidInstance(f"brute-force tour search limited to {max_n} vertices")
    m = n - 1  # vertex 0 is the fixed start; others are bits 0..m-1
    inf = np.iinfo(np.int64).max // 4
    dp = np.full((1 << m, m), inf, dtype=np.int64)
    for j in range(m):
        dp[1 << j, j] = d[0, j + 1]
    sub = d[1:, 1:]
    for mask in range(1, 1 << m):
        row = dp[mask]
        if (row >= inf).all():
            continue
        # extend every end-point j in mask to each unvisited vertex t
        cand = row[:, None] + sub  # cand[j, t]
        best = cand.min(axis=0)
        for t in range(m):
            if mask >> t & 1:
                continue
            nxt = mask | (1 << t)
            if best[t] < dp[nxt, t]:
                # only endpoints inside mask are finite in row, so min is valid
                dp[nxt, t] = best[t]
    full = (1 << m) - 1
    return int((dp[full] + d[1:, 0]).min())
