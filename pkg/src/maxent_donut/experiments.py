"""Monte Carlo and exhaustive harness for the ratio, concentration and shortcut checks.

Trial ``i`` draws everything from ``make_rng(seed, i)``, so results do not
depend on how trials are split across worker processes; aggregation is an
integer fold in trial-index order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidInstance, StructureViolation
from .graph import build_kdonut, shortest_path_metric
from .matching import M1, M2, MAX_ORACLE_VERTICES, odd_vertices, oracle_min_matching, structural_matchings
from .sampler import MAX_ENUM_K, iter_one_trees, make_rng, sample_one_tree
from .tours import b_tour_m1, b_tour_m2, classify_circuits, eulerian_subgraph, hierholzer_tour, shortcut

STRUCTURAL, ORACLE = "structural", "oracle"
B_TOUR, HIERHOLZER, NO_TOUR = "b-tour", "hierholzer", "none"
MATCHING_MODES = (STRUCTURAL, ORACLE)
TOUR_POLICIES = (B_TOUR, HIERHOLZER, NO_TOUR)
LOSS_BOUND = {M1: 9, M2: 2}
THREADS_ENV = "MAXENT_DONUT_THREADS"


@dataclass
class ExperimentReport:
    k: int
    trials: int
    seed: int | None
    matching_mode: str
    tour_policy: str
    exhaustive: bool
    opt: int
    mean_m1: float
    mean_m2: float
    mean_euler_cost: float
    mean_shortcut_cost: float | None
    ratio_euler: float
    ratio_shortcut: float | None
    std_error: float
    std_error_shortcut: float | None
    epsilon: float
    concentration: float
    concentration_std_error: float
    concentration_bound: float
    max_loss: dict = field(default_factory=dict)
    exact: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _check_modes(k: int, matching_mode: str, tour_policy: str) -> None:
    if matching_mode not in MATCHING_MODES:
        raise InvalidInstance(f"unknown matching mode {matching_mode!r}")
    if tour_policy not in TOUR_POLICIES:
        raise InvalidInstance(f"unknown tour policy {tour_policy!r}")
    if matching_mode == ORACLE and 2 * k > MAX_ORACLE_VERTICES:
        raise InvalidInstance(f"oracle matching needs 2k <= {MAX_ORACLE_VERTICES}")


def run_trial(t, metric, matching_mode: str, tour_policy: str, rng=None) -> tuple:
    """Evaluate one 1-tree.

    Returns ``(c_m1, c_m2, c_matching, euler_cost, shortcut_cost, kind, loss)``
    with ``shortcut_cost = loss = -1`` when no tour is built. With the
    b-tour policy in oracle mode the tour is built on the structural
    matching whose cost equals the oracle's.
    """
    odds = odd_vertices(t)
    m1, m2, best = structural_matchings(odds, metric)
    if matching_mode == ORACLE:
        chosen = oracle_min_matching(odds, metric)
        if chosen.cost != best.cost:
            raise StructureViolation("oracle matching beats both structural matchings",
                                     claim="claim2-min-matching", k=t.k, choice=t.choice.bits)
    else:
        chosen = best
    euler = t.cost + chosen.cost
    if tour_policy == NO_TOUR:
        return m1.cost, m2.cost, chosen.cost, euler, -1, best.kind, -1
    if tour_policy == B_TOUR:
        a = eulerian_subgraph(t, best, metric)
        dec = classify_circuits(a)
        tour = b_tour_m1(a, dec) if best.kind == M1 else b_tour_m2(a, dec)
    else:
        a = eulerian_subgraph(t, chosen, metric)
        tour = hierholzer_tour(a, rng if rng is not None else 0)
    h = shortcut(tour, metric)
    if h.cost > tour.cost:
        raise StructureViolation("shortcutting increased the cost", claim="triangle-inequality",
                                 k=t.k, choice=t.choice.bits)
    if tour_policy == B_TOUR:
        if h.loss > LOSS_BOUND[best.kind]:
            raise StructureViolation(f"shortcut loss {h.loss} exceeds {LOSS_BOUND[best.kind]}",
                                     claim=f"shortcut-lemma-{best.kind.lower()}",
                                     k=t.k, choice=t.choice.bits)
        if any(r > 2 for r in h.skipped_runs):
            raise StructureViolation("skipped run longer than 2", claim="skipped-run-length",
                                     k=t.k, choice=t.choice.bits)
    return m1.cost, m2.cost, chosen.cost, euler, h.cost, best.kind, h.loss


def _chunk(args) -> list[tuple]:
    k, seed, start, stop, matching_mode, tour_policy = args
    g = build_kdonut(k)
    metric = shortest_path_metric(g)
    out = []
    for i in range(start, stop):
        rng = make_rng(seed, i)
        t = sample_one_tree(g, rng)
        out.append(run_trial(t, metric, matching_mode, tour_policy, rng))
    return out


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads < 1:
        raise InvalidInstance("threads must be at least 1")
    return threads


def sampled_trials(k: int, trials: int, seed: int, matching_mode: str = STRUCTURAL,
                   tour_policy: str = NO_TOUR, threads: int | None = None) -> list[tuple]:
    """Per-trial records in trial-index order."""
    threads = resolve_threads(threads)
    if threads == 1 or trials < 2 * threads:
        return _chunk((k, seed, 0, trials, matching_mode, tour_policy))
    bounds = np.linspace(0, trials, threads + 1).astype(int)
    jobs = [(k, seed, int(a), int(b), matching_mode, tour_policy) for a, b in zip(bounds, bounds[1:])]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_chunk, jobs))
    return [r for part in parts for r in part]


def exhaustive_trials(k: int, matching_mode: str = STRUCTURAL,
                      tour_policy: str = NO_TOUR) -> list[tuple]:
    """One record per choice vector (hierholzer tours seeded by vector index)."""
    g = build_kdonut(k)
    metric = shortest_path_metric(g)
    return [run_trial(t, metric, matching_mode, tour_policy, make_rng(0, i))
            for i, t in enumerate(iter_one_trees(g))]


def default_epsilon(k: int) -> float:
    return math.sqrt(math.log(k) / k)


def chernoff_bound(k: int, eps) -> float:
    """1 - 2 exp(-2 eps^2 k / 3), floored at 0."""
    return max(0.0, 1.0 - 2.0 * math.exp(-2.0 * float(eps) ** 2 * k / 3.0))


def _both_large(records, k: int, eps) -> list[bool]:
    threshold = (Fraction(3, 2) - Fraction(eps)) * k
    return [r[0] >= threshold and r[1] >= threshold for r in records]


def _stderr(values, n: int) -> float:
    if n < 2:
        return 0.0
    return float(np.std(np.asarray(values, dtype=float), ddof=1) / math.sqrt(n))


def summarize(k: int, records: list[tuple], *, seed, matching_mode: str, tour_policy: str,
              exhaustive: bool, epsilon=None) -> ExperimentReport:
    n = len(records)
    if n == 0:
        raise InvalidInstance("trials must be at least 1")
    opt = 4 * k + 2
    eps = default_epsilon(k) if epsilon is None else epsilon
    euler = [r[3] for r in records]
    mean_euler = Fraction(sum(euler), n)
    mean_m1 = Fraction(sum(r[0] for r in records), n)
    mean_m2 = Fraction(sum(r[1] for r in records), n)
    large = _both_large(records, k, eps)
    frac = Fraction(sum(large), n)
    has_tour = tour_policy != NO_TOUR
    if has_tour:
        sc = [r[4] for r in records]
        mean_sc = Fraction(sum(sc), n)
        losses: dict[str, int] = {}
        for r in records:
            if tour_policy == B_TOUR:
                losses[r[5]] = max(losses.get(r[5], 0), r[6])
            else:
                losses["all"] = max(losses.get("all", 0), r[6])
    exact = None
    if exhaustive:
        exact = {
            "mean_m1": str(mean_m1),
            "mean_m2": str(mean_m2),
            "mean_euler_cost": str(mean_euler),
            "ratio_euler": str(mean_euler / opt),
            "concentration": str(frac),
        }
        if has_tour:
            exact["ratio_shortcut"] = str(mean_sc / opt)
    ratio = mean_euler / opt
    if not 1 <= ratio <= Fraction(3, 2):
        raise StructureViolation(f"ratio {float(ratio)} outside [1, 1.5]", claim="ratio-range", k=k)
    std = 0.0 if exhaustive else _stderr(euler, n) / opt
    return ExperimentReport(
        k=k, trials=n, seed=None if exhaustive else seed,
        matching_mode=matching_mode, tour_policy=tour_policy, exhaustive=exhaustive, opt=opt,
        mean_m1=float(mean_m1), mean_m2=float(mean_m2),
        mean_euler_cost=float(mean_euler),
        mean_shortcut_cost=float(mean_sc) if has_tour else None,
        ratio_euler=float(ratio),
        ratio_shortcut=float(mean_sc / opt) if has_tour else None,
        std_error=std,
        std_error_shortcut=(0.0 if exhaustive else _stderr(sc, n) / opt) if has_tour else None,
        epsilon=float(eps),
        concentration=float(frac),
        concentration_std_error=0.0 if exhaustive else math.sqrt(float(frac * (1 - frac)) / n),
        concentration_bound=chernoff_bound(k, eps),
        max_loss=losses if has_tour else {},
        exact=exact,
    )


def estimate_ratio(k: int, trials: int | None = None, matching_mode: str = STRUCTURAL,
                   tour_policy: str = NO_TOUR, seed: int = 0, *, exhaustive: bool = False,
                   epsilon=None, threads: int | None = None) -> ExperimentReport:
    """Average Eulerian and shortcut cost over sampled (or all) 1-trees, relative to 4k + 2."""
    build_kdonut(k)
    _check_modes(k, matching_mode, tour_policy)
    if exhaustive:
        if k > MAX_ENUM_K:
            raise InvalidInstance(f"exhaustive mode is limited to k <= {MAX_ENUM_K}")
        records = exhaustive_trials(k, matching_mode, tour_policy)
    else:
        if trials is None or trials < 1:
            raise InvalidInstance("trials must be at least 1")
        records = sampled_trials(k, trials, seed, matching_mode, tour_policy, threads)
    return summarize(k, records, seed=seed, matching_mode=matching_mode, tour_policy=tour_policy,
                     exhaustive=exhaustive, epsilon=epsilon)


def concentration_check(k: int, trials: int | None, eps, seed: int = 0, *,
                        exhaustive: bool = False, threads: int | None = None):
    """Fraction of trials with both c(M1) and c(M2) at least (3/2 - eps) k.

    Exhaustive mode returns an exact Fraction.
    """
    if not 0 < eps < 0.5:
        raise InvalidInstance("eps must lie in (0, 1/2)")
    build_kdonut(k)
    if exhaustive:
        records = exhaustive_trials(k)
        large = _both_large(records, k, eps)
        return Fraction(sum(large), len(large))
    if trials is None or trials < 1:
        raise InvalidInstance("trials must be at least 1")
    large = _both_large(sampled_trials(k, trials, seed, threads=threads), k, eps)
    return sum(large) / len(large)


def ratio_sweep(ks, trials: int | None, seed: int = 0, *, matching_mode: str = STRUCTURAL,
                tour_policy: str = NO_TOUR, exhaustive: bool = False,
                threads: int | None = None) -> list[ExperimentReport]:
    ks = list(ks)
    if not ks:
        raise InvalidInstance("ks must be nonempty")
    return [estimate_ratio(k, trials, matching_mode, tour_policy, seed,
                           exhaustive=exhaustive, threads=threads) for k in ks]


CSV_COLUMNS = ("k", "trials", "ratio_euler", "ratio_shortcut", "stderr")


def sweep_csv(reports: list[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.k, r.trials, repr(r.ratio_euler),
                    "" if r.ratio_shortcut is None else repr(r.ratio_shortcut), repr(r.std_error)])
    return buf.getvalue()
