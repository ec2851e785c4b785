from .baselines import (
    DEFAULT_EXHAUSTIVE_CAP,
    ExhaustiveResult,
    GreedyResult,
    TabuParams,
    TabuResult,
    exhaustive_non_iab,
    greedy_evaluations,
    greedy_non_iab,
    random_non_iab,
    search_space_size,
    tabu_non_iab,
)
from .fitness import FitnessEvaluator, JointGenome, eligible_for_non_iab
from .ga import Candidate, GaParams, GaTrace, ga_joint, ga_locations, ga_non_iab, queen_search

__all__ = [
    "DEFAULT_EXHAUSTIVE_CAP",
    "Candidate",
    "ExhaustiveResult",
    "FitnessEvaluator",
    "GaParams",
    "GaTrace",
    "GreedyResult",
    "JointGenome",
    "TabuParams",
    "TabuResult",
    "eligible_for_non_iab",
    "exhaustive_non_iab",
    "ga_joint",
    "ga_locations",
    "ga_non_iab",
    "greedy_evaluations",
    "greedy_non_iab",
    "queen_search",
    "random_non_iab",
    "search_space_size",
    "tabu_non_iab",
]
