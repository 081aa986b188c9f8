"""Perfect matchings on the odd vertices of a sampled 1-tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, StructureViolation
from .graph import Metric
from .sampler import OneTree, parity_vector

M1, M2, ORACLE = "M1", "M2", "Oracle"
MAX_ORACLE_VERTICES = 24


@dataclass(frozen=True)
class PerfectMatching:
    pairs: tuple[tuple[int, int], ...]
    pair_costs: tuple[int, ...]
    kind: str

    @property
    def cost(self) -> int:
        return sum(self.pair_costs)

    def to_dict(self, graph) -> dict:
        return {
            "kind": self.kind,
            "cost": self.cost,
            "pairs": [[graph.label(a), graph.label(b)] for a, b in self.pairs],
        }


def _matching(pairs, metric: Metric, kind: str) -> PerfectMatching:
    pairs = tuple((int(a), int(b)) for a, b in pairs)
    return PerfectMatching(pairs, tuple(metric(a, b) for a, b in pairs), kind)


def odd_vertices(t: OneTree) -> list[int]:
    """o_0, ..., o_{2k-1}: the odd-degree vertex of each pair (u_i, v_i)."""
    g = t.graph
    par = parity_vector(t)
    odds = [par.odd_vertex(g, i) for i in range(2 * g.k)]
    if t.degree[g.w0] % 2 or t.degree[g.w1] % 2:
        raise StructureViolation("w0 or w1 has odd degree", claim="odd-vertices",
                                 k=g.k, choice=t.choice.bits)
    actual = set(np.flatnonzero(t.degree % 2).tolist())
    if actual != set(odds):
        raise StructureViolation("odd vertices are not one per pair", claim="odd-vertices",
                                 k=g.k, choice=t.choice.bits)
    return odds


def structural_matchings(odds, metric: Metric):
    """Return ``(M1, M2, best)``.

    M1 pairs (o_{2j}, o_{2j+1}); M2 pairs (o_{2j-1}, o_{2j}) including the
    wrap-around pair (o_{2k-1}, o_0). ``best`` is the cheaper one, M1 on ties.
    """
    m = len(odds)
    m1 = _matching([(odds[j], odds[j + 1]) for j in range(0, m, 2)], metric, M1)
    m2 = _matching([(odds[j - 1], odds[j]) for j in range(0, m, 2)], metric, M2)
    return m1, m2, (m1 if m1.cost <= m2.cost else m2)


def oracle_min_matching(odds, metric: Metric) -> PerfectMatching:
    """Minimum-cost perfect matching over all pairs, by DP over subsets.

    The state is the set of still-unmatched vertices; its lowest member is
    matched to every other member in turn.
    """
    odds = [int(o) for o in odds]
    n = len(odds)
    if n % 2:
        raise ValueError("perfect matching needs an even number of vertices")
    if n > MAX_ORACLE_VERTICES:
        raise BudgetExceeded(f"matching oracle is limited to {MAX_ORACLE_VERTICES} vertices")
    D = metric.dist[np.ix_(odds, odds)].tolist()
    memo: dict[int, int] = {0: 0}
    pick: dict[int, int] = {}

    def solve(mask: int) -> int:
        hit = memo.get(mask)
        if hit is not None:
            return hit
        low = mask & -mask
        i = low.bit_length() - 1
        rest = mask ^ low
        row = D[i]
        best, best_j = None, -1
        m = rest
        while m:
            jbit = m & -m
            j = jbit.bit_length() - 1
            c = row[j] + solve(rest ^ jbit)
            if best is None or c < best:
                best, best_j = c, j
            m ^= jbit
        memo[mask] = best
        pick[mask] = best_j
        return best

    full = (1 << n) - 1
    solve(full)
    pairs = []
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        j = pick[mask]
        pairs.append((odds[i], odds[j]))
        mask ^= (1 << i) | (1 << j)
    return _matching(pairs, metric, ORACLE)
