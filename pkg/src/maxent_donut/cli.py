"""Command-line entry point: ``maxent-donut <subcommand> [options]``.

Exit status is 0 on success, 2 on usage or precondition errors and 1 when a
structural claim is found false (the JSON on stdout then names the claim
and the reproducing choice vector).
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter

from . import __version__
from .errors import ConvergenceError, DonutError, InvalidInstance, StructureViolation
from .experiments import (B_TOUR, HIERHOLZER, MATCHING_MODES, STRUCTURAL, TOUR_POLICIES,
                          estimate_ratio, ratio_sweep, resolve_threads, sweep_csv)
from .graph import build_kdonut, shortest_path_metric
from .lp import check_extreme, check_feasible, extreme_point, MAX_EXTREME_K
from .matching import M1, M2, MAX_ORACLE_VERTICES, odd_vertices, oracle_min_matching, structural_matchings
from .maxent_oracle import run_oracle
from .sampler import (ChoiceVector, check_one_tree, iter_one_trees, make_rng, one_tree_from_choice,
                      parity_vector, sample_one_tree)
from .tours import (b_tour_m1, b_tour_m2, check_tour, classify_circuits, eulerian_subgraph,
                    hierholzer_tour, shortcut)

MAX_VERIFY_K = 5


def _k(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer, got {text!r}")
    if k < 3:
        raise argparse.ArgumentTypeError(f"k must be at least 3, got {k}")
    return k


def _seed(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return seed


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _ks(text: str) -> list[int]:
    return [_k(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxent-donut",
                                description="Max-entropy TSP sampling on graphic k-donuts.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=_positive, default=None,
                   help="worker processes for trials (default: $MAXENT_DONUT_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", default=None, help="write output here instead of stdout")
        return sp

    sp = add("generate", "emit the k-donut and its half-integral LP point")
    sp.add_argument("--k", type=_k, required=True)

    sp = add("sample", "draw one 1-tree")
    sp.add_argument("--k", type=_k, required=True)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--trial", type=int, default=0, help="trial index (RNG stream)")
    sp.add_argument("--choice", default=None, help="explicit choice bitstring instead of sampling")

    sp = add("verify", "certify the LP point and the parity/matching claims")
    sp.add_argument("--k", type=_k, required=True)

    sp = add("tour", "build a tour on one sampled 1-tree and shortcut it")
    sp.add_argument("--k", type=_k, required=True)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--trial", type=int, default=0)
    sp.add_argument("--choice", default=None)
    sp.add_argument("--matching", choices=("m1", "m2", "oracle"), default="m1")
    sp.add_argument("--policy", choices=(B_TOUR, HIERHOLZER), default=B_TOUR)

    sp = add("oracle", "compare the sampler with a direct entropy solve")
    sp.add_argument("--k", type=_k, default=3)

    sp = add("experiment", "Monte Carlo or exhaustive ratio estimate")
    sp.add_argument("--k", type=_k, required=True)
    sp.add_argument("--trials", type=_positive, default=1000)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--matching", choices=MATCHING_MODES, default=STRUCTURAL)
    sp.add_argument("--policy", choices=TOUR_POLICIES, default="none")
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--exhaustive", action="store_true")

    sp = add("sweep", "ratio estimates for several k, as CSV")
    sp.add_argument("--ks", type=_ks, required=True)
    sp.add_argument("--trials", type=_positive, default=1000)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--matching", choices=MATCHING_MODES, default=STRUCTURAL)
    sp.add_argument("--policy", choices=TOUR_POLICIES, default="none")
    sp.add_argument("--csv", dest="csv_out", default=None, help="CSV output path")
    return p


def _tree(args, g):
    if args.choice is not None:
        return one_tree_from_choice(g, ChoiceVector.parse(g.k, args.choice))
    return sample_one_tree(g, make_rng(args.seed, args.trial))


def cmd_generate(args) -> dict:
    g = build_kdonut(args.k)
    x = extreme_point(g)
    return {"k": g.k, "n": g.n, "graph": g.to_dict(), "x_halves": x.to_dict(),
            "objective": str(x.objective)}


def cmd_sample(args) -> dict:
    g = build_kdonut(args.k)
    t = _tree(args, g)
    check_one_tree(t)
    metric = shortest_path_metric(g)
    odds = odd_vertices(t)
    m1, m2, best = structural_matchings(odds, metric)
    doc = t.to_dict()
    doc.update(seed=args.seed, trial=args.trial, parity=str(parity_vector(t)),
               odd_vertices=[g.label(o) for o in odds], m1_cost=m1.cost, m2_cost=m2.cost,
               best=best.kind)
    return doc


def verify_claims(k: int) -> dict:
    """Exhaustive parity-uniformity and minimum-matching checks; raises StructureViolation on failure."""
    g = build_kdonut(k)
    metric = shortest_path_metric(g)
    seen = Counter()
    for t in iter_one_trees(g):
        check_one_tree(t)
        par = parity_vector(t)
        seen[par.bits] += 1
        odds = odd_vertices(t)
        _, _, best = structural_matchings(odds, metric)
        if oracle_min_matching(odds, metric).cost != best.cost:
            raise StructureViolation("a matching cheaper than min(M1, M2) exists",
                                     claim="claim2-min-matching", k=k, choice=t.choice.bits)
    if len(seen) != 2 ** (2 * k) or set(seen.values()) != {2}:
        raise StructureViolation("parity vectors are not uniform", claim="claim1-independence", k=k)
    return {"claim1": "pass", "claim2": "pass", "trees": sum(seen.values())}


def cmd_verify(args) -> dict:
    k = args.k
    g = build_kdonut(k)
    x = extreme_point(g)
    doc = {"k": k, "objective": str(x.objective), "feasible": check_feasible(x, g)}
    doc["extreme"] = check_extreme(x, g) if k <= MAX_EXTREME_K else None
    if k <= MAX_VERIFY_K and 2 * k <= MAX_ORACLE_VERTICES:
        doc.update(verify_claims(k))
    else:
        doc.update(claim1="skipped", claim2="skipped")
    if not doc["feasible"] or doc["extreme"] is False:
        raise StructureViolation("the LP point is not a feasible extreme point", claim="lp-extreme", k=k)
    return doc


def cmd_tour(args) -> dict:
    g = build_kdonut(args.k)
    metric = shortest_path_metric(g)
    t = _tree(args, g)
    odds = odd_vertices(t)
    m1, m2, best = structural_matchings(odds, metric)
    if args.matching == "oracle":
        if 2 * g.k > MAX_ORACLE_VERTICES:
            raise InvalidInstance(f"oracle matching needs 2k <= {MAX_ORACLE_VERTICES}")
        m = oracle_min_matching(odds, metric)
        if m.cost != best.cost:
            raise StructureViolation("a matching cheaper than min(M1, M2) exists",
                                     claim="claim2-min-matching", k=g.k, choice=t.choice.bits)
        if args.policy == B_TOUR:
            m = best
    else:
        m = m1 if args.matching == "m1" else m2
    a = eulerian_subgraph(t, m, metric)
    if args.policy == B_TOUR:
        dec = classify_circuits(a)
        tour = b_tour_m1(a, dec) if m.kind == M1 else b_tour_m2(a, dec)
    else:
        tour = hierholzer_tour(a, make_rng(args.seed, args.trial))
    check_tour(tour, a)
    h = shortcut(tour, metric)
    return {
        "k": g.k, "seed": args.seed, "trial": args.trial, "choice": str(t.choice),
        "matching": m.kind, "policy": args.policy,
        "euler_cost": tour.cost, "shortcut_cost": h.cost, "loss": h.loss,
        "skipped_runs": h.skipped_runs,
        "tour": tour.labels(g), "cycle": h.labels(g),
    }


def cmd_oracle(args) -> dict:
    return run_oracle(args.k)


def cmd_experiment(args) -> dict:
    r = estimate_ratio(args.k, args.trials, args.matching, args.policy, args.seed,
                       exhaustive=args.exhaustive, epsilon=args.epsilon, threads=args.threads)
    return r.to_dict()


def cmd_sweep(args) -> str:
    reports = ratio_sweep(args.ks, args.trials, args.seed, matching_mode=args.matching,
                          tour_policy=args.policy, threads=args.threads)
    return sweep_csv(reports)


COMMANDS = {
    "generate": cmd_generate, "sample": cmd_sample, "verify": cmd_verify, "tour": cmd_tour,
    "oracle": cmd_oracle, "experiment": cmd_experiment, "sweep": cmd_sweep,
}


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.threads = resolve_threads(args.threads)
        result = COMMANDS[args.command](args)
    except StructureViolation as err:
        sys.stdout.write(json.dumps(err.to_dict(), indent=2, sort_keys=True) + "\n")
        return 1
    except ConvergenceError as err:
        sys.stderr.write(f"maxent-donut: {err} (residual {err.residual})\n")
        return 1
    except (DonutError, ValueError) as err:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"maxent-donut {args.command}: error: {err}\n")
        return 2
    if args.command == "sweep":
        _emit(result, args.csv_out or args.out)
    else:
        _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
