"""Max-entropy TSP sampling on graphic k-donuts: instance, LP certificate,
sampler, matchings, adversarial tours, entropy oracle and experiments."""

from .errors import (BudgetExceeded, ConvergenceError, DonutError, InvalidInstance,
                     StructureViolation)
from .graph import KDonut, Metric, build_kdonut, shortest_path_metric
from .lp import SubtourSolution, check_extreme, check_feasible, extreme_point
from .matching import PerfectMatching, oracle_min_matching, structural_matchings
from .sampler import ChoiceVector, OneTree, one_tree_from_choice, sample_one_tree
from .tours import (EulerianSubgraph, b_tour_m1, b_tour_m2, classify_circuits,
                    eulerian_subgraph, hierholzer_tour, shortcut)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "ChoiceVector", "ConvergenceError", "DonutError", "EulerianSubgraph",
    "InvalidInstance", "KDonut", "Metric", "OneTree", "PerfectMatching", "StructureViolation",
    "SubtourSolution", "b_tour_m1", "b_tour_m2", "build_kdonut", "check_extreme",
    "check_feasible", "classify_circuits", "eulerian_subgraph", "extreme_point",
    "hierholzer_tour", "one_tree_from_choice", "oracle_min_matching", "sample_one_tree",
    "shortcut", "shortest_path_metric", "structural_matchings",
]
