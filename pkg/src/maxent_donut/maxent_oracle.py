"""Independent certificate that the donut sampler is the maximum-entropy sampler.

The k = 3 support graph (LP support minus e+) is small enough to list every
spanning tree. We then solve the entropy program directly:

1. facial reduction: one homogenized LP finds the largest set of trees that
   can carry positive mass in some distribution with the prescribed
   marginals (every other tree has probability 0 in every feasible
   distribution, the max-entropy one included);
2. dual Newton: on that face the optimum is an exponential family
   ``p_T ~ exp(sum_{e in T} lam_e)``, and the dual is smooth and strictly
   convex modulo directions that are constant on the face.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import hstack, identity, csr_matrix, vstack

from .errors import BudgetExceeded, ConvergenceError, InvalidInstance
from .graph import KDonut, build_kdonut
from .lp import SubtourSolution, extreme_point
from .sampler import iter_one_trees

MAX_ORACLE_K = 3
Edge = tuple[int, int]
Tree = frozenset


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class SupportGraph:
    """Edges with x_e > 0, minus e+, with their LP values."""

    k: int
    n: int
    edges: tuple[Edge, ...]
    values: tuple[Fraction, ...]

    def value_map(self) -> dict[Edge, float]:
        return {e: float(v) for e, v in zip(self.edges, self.values)}


def support_graph(x: SubtourSolution) -> SupportGraph:
    g = x.graph
    pairs = [(e, Fraction(h, 2)) for e, h in zip(g.edges, x.halves) if h > 0 and e != g.e_plus]
    return SupportGraph(g.k, g.n, tuple(e for e, _ in pairs), tuple(v for _, v in pairs))


# ---------------------------------------------------------------------------
# spanning trees


def _components(n: int, edges: Iterable[Edge]) -> int:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    count = n
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            count -= 1
    return count


def spanning_trees(n: int, edges) -> list[Tree]:
    """Every spanning tree of a simple graph, by include/exclude branching.

    An edge is included only if it joins two current components; it is
    excluded only if the remaining edges can still connect the graph.
    """
    edges = [_edge(*e) for e in edges]
    out: list[Tree] = []

    def rec(i: int, label: list[int], chosen: list[Edge]):
        if len(chosen) == n - 1:
            out.append(frozenset(chosen))
            return
        if i == len(edges) or len(chosen) + len(edges) - i < n - 1:
            return
        a, b = edges[i]
        la, lb = label[a], label[b]
        if la != lb:
            merged = [la if c == lb else c for c in label]
            chosen.append(edges[i])
            rec(i + 1, merged, chosen)
            chosen.pop()
        # excluding edge i must leave the graph connectable
        rest = [(label[p], label[q]) for p, q in edges[i + 1:]]
        if _connectable(label, rest):
            rec(i + 1, label, chosen)

    def _connectable(label, rest):
        ids = sorted(set(label))
        pos = {c: j for j, c in enumerate(ids)}
        return _components(len(ids), [(pos[p], pos[q]) for p, q in rest]) == 1

    if n == 1:
        return [frozenset()]
    if _components(n, edges) != 1:
        return []
    rec(0, list(range(n)), [])
    return out


def matrix_tree_count(n: int, edges) -> int:
    """Number of spanning trees: an exact Bareiss determinant of a Laplacian minor."""
    L = [[0] * n for _ in range(n)]
    for a, b in edges:
        L[a][a] += 1
        L[b][b] += 1
        L[a][b] -= 1
        L[b][a] -= 1
    M = [row[1:] for row in L[1:]]
    m = n - 1
    if m == 0:
        return 1
    sign, prev = 1, 1
    for c in range(m - 1):
        if M[c][c] == 0:
            swap = next((r for r in range(c + 1, m) if M[r][c] != 0), None)
            if swap is None:
                return 0
            M[c], M[swap] = M[swap], M[c]
            sign = -sign
        for r in range(c + 1, m):
            for j in range(c + 1, m):
                M[r][j] = (M[r][j] * M[c][c] - M[r][c] * M[c][j]) // prev
        prev = M[c][c]
    return sign * M[m - 1][m - 1]


def enumerate_spanning_trees(sg: SupportGraph) -> list[Tree]:
    """All spanning trees of the support graph; k = 3 only."""
    if sg.k > MAX_ORACLE_K:
        raise BudgetExceeded(f"spanning-tree enumeration is limited to k <= {MAX_ORACLE_K}")
    trees = spanning_trees(sg.n, sg.edges)
    if len(trees) != matrix_tree_count(sg.n, sg.edges):
        raise InvalidInstance("spanning-tree enumeration disagrees with the matrix-tree count")
    return trees


# ---------------------------------------------------------------------------
# distributions


@dataclass
class TreeDistribution:
    trees: list[Tree]
    probs: np.ndarray
    edges: tuple[Edge, ...]
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if len(self.trees) != len(self.probs):
            raise InvalidInstance("one probability per tree is required")

    def incidence(self) -> np.ndarray:
        col = {e: j for j, e in enumerate(self.edges)}
        A = np.zeros((len(self.trees), len(self.edges)))
        for i, t in enumerate(self.trees):
            A[i, [col[e] for e in t]] = 1.0
        return A

    @property
    def marginals(self) -> dict[Edge, float]:
        return dict(zip(self.edges, self.probs @ self.incidence()))

    @property
    def entropy(self) -> float:
        p = self.probs[self.probs > 0]
        return float(-(p * np.log(p)).sum())

    def as_dict(self) -> dict[Tree, float]:
        return dict(zip(self.trees, self.probs.tolist()))

    def residual(self, x: Mapping[Edge, float]) -> float:
        m = self.marginals
        return max(abs(m.get(e, 0.0) - float(x.get(e, 0.0))) for e in set(m) | set(x))


def _as_targets(x, edges) -> np.ndarray:
    if isinstance(x, SubtourSolution):
        x = support_graph(x).value_map()
    return np.array([float(x.get(e, 0.0)) for e in edges])


def feasible_face(trees: list[Tree], x, edges=None) -> np.ndarray:
    """Boolean mask of trees that carry positive mass in some feasible distribution.

    Solves max sum(y) s.t. 0 <= y_T <= min(1, q_T), A^T q = s x, sum(q) = s,
    q, s >= 0. The optimum sets y_T = 1 exactly on the trees in the relative
    interior's support (scale s freely, then average feasible witnesses).
    """
    edges = tuple(edges) if edges is not None else tuple(sorted(set().union(*trees)))
    col = {e: j for j, e in enumerate(edges)}
    N, m = len(trees), len(edges)
    target = _as_targets(x, edges)
    rows, cols = [], []
    for i, t in enumerate(trees):
        for e in t:
            rows.append(col[e])
            cols.append(i)
    At = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, N))
    zN = csr_matrix((m, N))
    # variables: q (N), y (N), s (1)
    eq = vstack([
        hstack([At, zN, csr_matrix(-target.reshape(-1, 1))]),
        hstack([csr_matrix(np.ones((1, N))), csr_matrix((1, N)), csr_matrix([[-1.0]])]),
    ]).tocsr()
    ub = hstack([-identity(N), identity(N), csr_matrix((N, 1))]).tocsr()
    cost = np.concatenate([np.zeros(N), -np.ones(N), [0.0]])
    bounds = [(0, None)] * N + [(0, 1)] * N + [(0, None)]
    res = linprog(cost, A_ub=ub, b_ub=np.zeros(N), A_eq=eq, b_eq=np.zeros(m + 1),
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise ConvergenceError(f"facial-reduction LP failed: {res.message}", residual=float("nan"))
    return res.x[N:2 * N] > 0.5


def solve_max_entropy(trees: list[Tree], x, *, edges=None, init=None, tol: float = 1e-8,
                      obj_tol: float = 1e-12, max_iter: int = 1_000_000) -> TreeDistribution:
    """Maximum-entropy distribution over ``trees`` with edge marginals ``x``.

    ``x`` is a SubtourSolution (its support minus e+ is used) or a mapping
    edge -> value. ``init`` optionally seeds the edge multipliers.
    """
    edges = tuple(edges) if edges is not None else tuple(sorted(set().union(*trees)))
    target = _as_targets(x, edges)
    face = feasible_face(trees, x, edges)
    if not face.any():
        raise ConvergenceError("no distribution over these trees has the given marginals",
                               residual=float("inf"))
    full = TreeDistribution(list(trees), np.zeros(len(trees)), edges)
    A = full.incidence()[face]
    lam = np.zeros(len(edges)) if init is None else np.asarray(init, dtype=float).copy()

    def dual(lam):
        z = A @ lam
        zmax = z.max()
        w = np.exp(z - zmax)
        total = w.sum()
        return zmax + np.log(total) - lam @ target, w / total

    f, p = dual(lam)
    it, resid = 0, np.inf
    for it in range(1, max_iter + 1):
        marg = p @ A
        grad = marg - target
        resid = float(np.abs(grad).max())
        H = (A * p[:, None]).T @ A - np.outer(marg, marg)
        step = -np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while True:
            f_new, p_new = dual(lam + t * step)
            if f_new <= f + 1e-4 * t * (grad @ step) or t < 1e-12:
                break
            t *= 0.5
        lam = lam + t * step
        change = abs(f - f_new)
        f, p = f_new, p_new
        resid = float(np.abs(p @ A - target).max())
        if resid <= tol and change <= obj_tol:
            break
    else:
        raise ConvergenceError(f"entropy solve did not converge in {max_iter} steps", residual=resid)

    probs = np.zeros(len(trees))
    probs[face] = p
    return TreeDistribution(list(trees), probs, edges,
                            info={"iterations": it, "residual": resid, "face_size": int(face.sum()),
                                  "multipliers": lam})


def algorithm1_distribution(g: KDonut, edges=None) -> TreeDistribution:
    """Exact law of the donut sampler's tree part, one atom per choice vector."""
    counts: dict[Tree, int] = {}
    for t in iter_one_trees(g):
        key = frozenset(t.spanning_tree())
        counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    trees = sorted(counts, key=sorted)
    if edges is None:
        edges = tuple(sorted(set().union(*trees)))
    return TreeDistribution(trees, np.array([counts[t] / total for t in trees]), tuple(edges))


def compare_distributions(p: TreeDistribution, q: TreeDistribution) -> float:
    """Total-variation distance."""
    a, b = p.as_dict(), q.as_dict()
    return 0.5 * sum(abs(a.get(t, 0.0) - b.get(t, 0.0)) for t in set(a) | set(b))


def tight_set_value(x, S) -> float:
    """x(E(S)) - (|S| - 1) for the non-e+ support values ``x`` (a mapping)."""
    S = set(S)
    return sum(v for (a, b), v in x.items() if a in S and b in S) - (len(S) - 1)


def check_tight_set_factorization(p: TreeDistribution, S, x=None, *, atol: float = 1e-6,
                                  mass_tol: float = 1e-12) -> bool:
    """True iff ``p`` is the product of its law inside S and its law on G/S.

    The set must be tight for ``x`` (default: ``p``'s own marginals), and
    every tree with mass above ``mass_tol`` must have |S| - 1 edges inside S.
    """
    S = frozenset(S)
    marg = p.marginals if x is None else x
    if isinstance(marg, SubtourSolution):
        marg = support_graph(marg).value_map()
    if abs(tight_set_value(marg, S)) > 1e-9:
        raise InvalidInstance("S is not a tight set")
    inside = {t: frozenset(e for e in t if e[0] in S and e[1] in S) for t in p.trees}
    for t, pt in zip(p.trees, p.probs):
        if pt > mass_tol and len(inside[t]) != len(S) - 1:
            return False
    law_in: dict[frozenset, float] = {}
    law_out: dict[frozenset, float] = {}
    atoms: dict[tuple, float] = {}
    for t, pt in zip(p.trees, p.probs):
        a, b = inside[t], t - inside[t]
        law_in[a] = law_in.get(a, 0.0) + pt
        law_out[b] = law_out.get(b, 0.0) + pt
        atoms[(a, b)] = atoms.get((a, b), 0.0) + pt
    for (a, pa), (b, pb) in itertools.product(law_in.items(), law_out.items()):
        if abs(atoms.get((a, b), 0.0) - pa * pb) > atol:
            return False
    return True


def block_tight_sets(g: KDonut) -> list[frozenset]:
    """S_i = {u_i, v_i, u_{i+1}, v_{i+1}} for every odd i."""
    return [frozenset((g.u(i), g.v(i), g.u(i + 1), g.v(i + 1))) for i in range(1, 2 * g.k, 2)]


def run_oracle(k: int = 3) -> dict:
    """Full certificate at ``k``: solver vs the sampler's law."""
    g = build_kdonut(k)
    x = extreme_point(g)
    sg = support_graph(x)
    if sg.k > MAX_ORACLE_K:
        raise BudgetExceeded(f"the max-entropy oracle is limited to k <= {MAX_ORACLE_K}")
    trees = enumerate_spanning_trees(sg)
    solved = solve_max_entropy(trees, x, edges=sg.edges)
    alg1 = algorithm1_distribution(g, sg.edges)
    targets = sg.value_map()
    checks = {"-".join(g.label(v) for v in sorted(S, key=g.order_key)):
              check_tight_set_factorization(solved, S, targets) for S in block_tight_sets(g)}
    return {
        "k": k,
        "tree_count": len(trees),
        "support_size": int(solved.info["face_size"]),
        "tv_distance": compare_distributions(solved, alg1),
        "marginal_residual": solved.residual(targets),
        "entropy_solver": solved.entropy,
        "entropy_algorithm1": alg1.entropy,
        "entropy_gap": abs(solved.entropy - alg1.entropy),
        "factorization_checks": checks,
    }
