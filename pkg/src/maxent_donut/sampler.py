"""Max-entropy 1-tree sampler specialized to the k-donut.

A 1-tree is fixed by 2k + 1 independent fair choices, consumed in this
order (bit 0 always selects the first-listed edge):

* one bit per odd i (ascending): ``{u_i, v_i}`` vs ``{u_{i+1}, v_{i+1}}``
* one bit per even i != 0 (ascending): ``{u_i, u_{i+1}}`` vs ``{v_i, v_{i+1}}``
* w0's attachment: ``{w0, u_0}`` vs ``{w0, v_0}``
* w1's attachment: ``{w1, u_1}`` vs ``{w1, v_1}``

The even index i = 0 gets no choice: both ring edges there carry LP value 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .errors import BudgetExceeded, InvalidInstance, StructureViolation
from .graph import KDonut

MAX_ENUM_K = 10


@dataclass(frozen=True)
class ChoiceVector:
    k: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != 2 * self.k + 1:
            raise InvalidInstance(f"choice vector for k={self.k} needs {2 * self.k + 1} bits")
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidInstance("choice bits must be 0 or 1")

    def block(self, i: int) -> int:
        """Choice for the odd block i: 0 means spoke {u_i, v_i} was taken (a 0-block)."""
        return self.bits[(i - 1) // 2]

    def ring(self, i: int) -> int:
        """Choice for even i != 0: 0 means the outer edge {u_i, u_{i+1}}."""
        return self.bits[self.k + i // 2 - 1]

    @property
    def w0(self) -> int:
        return self.bits[2 * self.k - 1]

    @property
    def w1(self) -> int:
        return self.bits[2 * self.k]

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    @classmethod
    def parse(cls, k: int, text: str) -> "ChoiceVector":
        return cls(k, tuple(int(c) for c in text.strip()))

    @classmethod
    def zeros(cls, k: int) -> "ChoiceVector":
        return cls(k, (0,) * (2 * k + 1))


@lru_cache(maxsize=64)
def _template(g: KDonut) -> tuple[np.ndarray, np.ndarray]:
    """Fixed edges and the (first, second) candidate pair for each choice bit."""
    k = g.k
    fixed = [g.e_plus]
    for i in range(1, 2 * k, 2):
        fixed.append((g.u(i), g.u(i + 1)))
        fixed.append((g.v(i), g.v(i + 1)))
    pairs = []
    for i in range(1, 2 * k, 2):
        pairs.append([(g.u(i), g.v(i)), (g.u(i + 1), g.v(i + 1))])
    for i in range(2, 2 * k, 2):
        pairs.append([(g.u(i), g.u(i + 1)), (g.v(i), g.v(i + 1))])
    pairs.append([(g.w0, g.u(0)), (g.w0, g.v(0))])
    pairs.append([(g.w1, g.u(1)), (g.w1, g.v(1))])
    fixed_arr = np.array(fixed, dtype=np.intp)
    pairs_arr = np.array(pairs, dtype=np.intp)
    fixed_arr.setflags(write=False)
    pairs_arr.setflags(write=False)
    return fixed_arr, pairs_arr


class OneTree:
    """A spanning tree of the LP support (minus e+) together with e+ = {w0, w1}."""

    def __init__(self, graph: KDonut, choice: ChoiceVector, edges: np.ndarray):
        self.graph = graph
        self.choice = choice
        self.edges = edges
        self.degree = np.bincount(edges.ravel(), minlength=graph.n)

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def cost(self) -> int:
        # every tree edge is a graph edge of cost 1
        return int(len(self.edges))

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(min(a, b)), int(max(a, b))) for a, b in self.edges)

    def spanning_tree(self) -> frozenset[tuple[int, int]]:
        """The tree part, i.e. the edge set without e+."""
        return self.edge_set - {self.graph.e_plus}

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "k": g.k,
            "choice": str(self.choice),
            "cost": self.cost,
            "edges": [[g.label(int(a)), g.label(int(b))] for a, b in self.edges],
        }

    def __repr__(self) -> str:
        return f"OneTree(k={self.k}, choice={self.choice})"


def one_tree_from_choice(g: KDonut, choice: ChoiceVector) -> OneTree:
    if choice.k != g.k:
        raise InvalidInstance("choice vector and graph disagree on k")
    fixed, pairs = _template(g)
    bits = np.asarray(choice.bits, dtype=np.intp)
    chosen = pairs[np.arange(len(bits)), bits]
    return OneTree(g, choice, np.concatenate([fixed, chosen]))


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def draw_choice(g: KDonut, rng) -> ChoiceVector:
    """2k + 1 fair bits from ``rng`` (an int seed or a numpy Generator)."""
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    bits = rng.integers(0, 2, size=2 * g.k + 1)
    return ChoiceVector(g.k, tuple(int(b) for b in bits))


def sample_one_tree(g: KDonut, rng) -> OneTree:
    """Draw one 1-tree with each pairwise choice resolved by a fair bit."""
    return one_tree_from_choice(g, draw_choice(g, rng))


def iter_choice_vectors(k: int) -> Iterator[ChoiceVector]:
    for bits in itertools.product((0, 1), repeat=2 * k + 1):
        yield ChoiceVector(k, bits)


def iter_one_trees(g: KDonut) -> Iterator[OneTree]:
    """Every 1-tree the sampler can produce, one per choice vector."""
    if g.k > MAX_ENUM_K:
        raise BudgetExceeded(f"enumeration is limited to k <= {MAX_ENUM_K}")
    for choice in iter_choice_vectors(g.k):
        yield one_tree_from_choice(g, choice)


def enumerate_one_trees(g: KDonut) -> list[OneTree]:
    return list(iter_one_trees(g))


def check_one_tree(t: OneTree) -> None:
    """Raise StructureViolation unless ``t`` has every required 1-tree property."""
    g = t.graph
    fail = lambda msg: StructureViolation(msg, claim="one-tree", k=g.k, choice=t.choice.bits)  # noqa: E731
    if len(t.edges) != 4 * g.k + 2 or len(t.edge_set) != len(t.edges):
        raise fail("1-tree must have 4k+2 distinct edges")
    if not t.edge_set <= set(g.edges):
        raise fail("1-tree uses a non-edge")
    if g.e_plus not in t.edge_set:
        raise fail("1-tree is missing e+")
    for i in range(1, 2 * g.k, 2):
        for e in ((g.u(i), g.u(i + 1)), (g.v(i), g.v(i + 1))):
            if (min(e), max(e)) not in t.edge_set:
                raise fail(f"1-tree is missing the LP-1 edge {g.label(e[0])}-{g.label(e[1])}")
    if t.degree[g.w0] != 2 or t.degree[g.w1] != 2:
        raise fail("w0 and w1 must have degree 2")
    if not _is_spanning_tree(g.n, t.spanning_tree()):
        raise fail("removing e+ does not leave a spanning tree")
    for i in range(2 * g.k):
        if (t.degree[g.u(i)] + t.degree[g.v(i)]) % 2 != 1:
            raise fail(f"pair {i} does not have exactly one odd vertex")


def _is_spanning_tree(n: int, edges) -> bool:
    if len(edges) != n - 1:
        return False
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


@dataclass(frozen=True)
class ParityVector:
    """O_i = 1 iff u_i has odd degree; the odd vertex of pair i is u_i or v_i accordingly."""

    bits: tuple[int, ...]

    def odd_vertex(self, g: KDonut, i: int) -> int:
        return g.u(i) if self.bits[i] else g.v(i)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def parity_vector(t: OneTree) -> ParityVector:
    g = t.graph
    m = 2 * g.k
    du = t.degree[:m] % 2
    dv = t.degree[m:2 * m] % 2
    bad = np.flatnonzero(du + dv != 1)
    if bad.size:
        raise StructureViolation(
            f"pair {int(bad[0])} has {'both' if du[bad[0]] else 'neither'} vertices odd",
            claim="claim1-one-odd-per-pair", k=g.k, choice=t.choice.bits)
    return ParityVector(tuple(int(b) for b in du))
