"""
Reference optimizers for non-IAB link placement: exhaustive enumeration,
greedy one-by-one selection, tabu search and a uniform random pick.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import ParameterError, SearchRefusedError
from ..geometry import ForbiddenZones
from .fitness import FitnessEvaluator, check_subset_size, eligible_for_non_iab
from .ga import Candidate

logger = logging.getLogger(__name__)

DEFAULT_EXHAUSTIVE_CAP = 1_000_000


def search_space_size(n_s: int, n_f: int) -> int:
    """Number of distinct non-IAB placements, C(N_s, N_f)."""
    if n_f < 0 or n_s < 0 or n_f > n_s:
        raise ParameterError(f"invalid placement size: N_s={n_s}, N_f={n_f}")
    return math.comb(n_s, n_f)


def _eligible(fitness: FitnessEvaluator, n_f: int, zones: Optional[ForbiddenZones]) -> List[int]:
    eligible = [int(i) for i in eligible_for_non_iab(fitness.base.sbs_positions, zones)]
    check_subset_size(n_f, eligible)
    return eligible


@dataclass
class ExhaustiveResult:
    best: Candidate
    search_space: int


def exhaustive_non_iab(
    fitness: FitnessEvaluator,
    n_f: int,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    forbidden_zones: Optional[ForbiddenZones] = None,
) -> ExhaustiveResult:
    eligible = _eligible(fitness, n_f, forbidden_zones)
    s_c = search_space_size(len(eligible), n_f)
    if s_c > cap:
        raise SearchRefusedError(
            f"exhaustive search over {s_c} placements exceeds the cap of {cap}",
            detail={"search_space": s_c, "cap": cap, "n_s": len(eligible), "n_f": n_f},
        )
    best: Optional[Candidate] = None
    for subset in itertools.combinations(eligible, n_f):
        rho = fitness(subset)
        if best is None or rho > best.fitness:
            best = Candidate(tuple(subset), rho)
    assert best is not None
    return ExhaustiveResult(best=best, search_space=s_c)


def greedy_evaluations(n_s: int, n_f: int) -> int:
    return n_f * n_s - n_f * (n_f - 1) // 2


@dataclass
class GreedyResult:
    best: Candidate
    evaluations: int
    steps: List[float] = field(default_factory=list)


def greedy_non_iab(
    fitness: FitnessEvaluator,
    n_f: int,
    forbidden_zones: Optional[ForbiddenZones] = None,
) -> GreedyResult:
    """Add one SBS at a time, each time the one that maximizes coverage."""
    eligible = _eligible(fitness, n_f, forbidden_zones)
    chosen: List[int] = []
    calls = 0
    steps: List[float] = []
    rho = fitness(())
    for _ in range(n_f):
        best_s, best_rho = -1, -1.0
        for s in eligible:
            if s in chosen:
                continue
            value = fitness(tuple(sorted(chosen + [s])))
            calls += 1
            if value > best_rho:
                best_s, best_rho = s, value
        chosen.append(best_s)
        rho = best_rho
        steps.append(rho)
    return GreedyResult(best=Candidate(tuple(sorted(chosen)), rho), evaluations=calls, steps=steps)


@dataclass(frozen=True)
class TabuParams:
    tenure: int = 7
    iterations: int = 100
    restart_after: int = 20

    def __post_init__(self) -> None:
        if self.tenure < 0:
            raise ParameterError("tabu tenure must be >= 0", detail={"field": "tenure"})
        if self.iterations < 1:
            raise ParameterError("tabu iteration budget must be >= 1", detail={"field": "iterations"})
        if self.restart_after < 1:
            raise ParameterError("restart_after must be >= 1", detail={"field": "restart_after"})


@dataclass
class TabuStep:
    iteration: int
    current_rho: float
    best_rho: float
    dropped: Optional[int] = None
    added: Optional[int] = None
    restart: bool = False
    evals_so_far: int = 0

    def as_row(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "current_rho": self.current_rho,
            "best_rho": self.best_rho,
            "dropped": self.dropped,
            "added": self.added,
            "restart": self.restart,
            "evals_so_far": self.evals_so_far,
        }


@dataclass
class TabuResult:
    best: Candidate
    trace: List[TabuStep]
    evaluations: int

    @property
    def best_rho(self) -> List[float]:
        return [step.best_rho for step in self.trace]


def tabu_non_iab(
    fitness: FitnessEvaluator,
    n_f: int,
    tabu: TabuParams,
    rng: np.random.Generator,
    forbidden_zones: Optional[ForbiddenZones] = None,
) -> TabuResult:
    """
    Single-swap local search. A swap drops one member and adds one outsider;
    an index dropped at iteration t may not be added back before t + tenure + 1.
    The search moves to the best admissible neighbour even when it is worse
    and restarts from a random set after ``restart_after`` iterations without
    improving the best. With tenure 0 it is hill climbing and restarts at a
    local optimum.
    """
    eligible = _eligible(fitness, n_f, forbidden_zones)
    seen: set = set()

    def score(subset) -> float:
        seen.add(subset)
        return fitness(subset)

    def fresh() -> tuple:
        pick = rng.choice(eligible, size=n_f, replace=False) if n_f else []
        return tuple(sorted(int(i) for i in pick))

    current = fresh()
    current_rho = score(current)
    best = Candidate(current, current_rho)
    trace = [TabuStep(0, current_rho, best.fitness, restart=True, evals_so_far=len(seen))]
    dropped_at: Dict[int, int] = {}
    stale = 0

    for it in range(1, tabu.iterations + 1):
        moves = []
        for out in current:
            for inn in eligible:
                if inn in current:
                    continue
                if inn in dropped_at and it - dropped_at[inn] <= tabu.tenure:
                    continue
                moves.append((out, inn))

        restart = not moves
        if moves:
            scored = []
            for out, inn in moves:
                subset = tuple(sorted([i for i in current if i != out] + [inn]))
                scored.append((score(subset), out, inn, subset))
            value, out, inn, subset = max(scored, key=lambda m: m[0])
            if tabu.tenure == 0 and value <= current_rho:
                restart = True
            else:
                dropped_at[out] = it
                current, current_rho = subset, value
                if value > best.fitness:
                    best = Candidate(subset, value)
                    stale = 0
                else:
                    stale += 1
                step = TabuStep(it, current_rho, best.fitness, dropped=out, added=inn)
                step.evals_so_far = len(seen)
                trace.append(step)
        if restart or stale >= tabu.restart_after:
            current = fresh()
            current_rho = score(current)
            if current_rho > best.fitness:
                best = Candidate(current, current_rho)
            dropped_at.clear()
            stale = 0
            trace.append(TabuStep(it, current_rho, best.fitness, restart=True, evals_so_far=len(seen)))

    return TabuResult(best=best, trace=trace, evaluations=len(seen))


def random_non_iab(
    fitness: FitnessEvaluator,
    n_f: int,
    rng: np.random.Generator,
    forbidden_zones: Optional[ForbiddenZones] = None,
) -> Candidate:
    eligible = _eligible(fitness, n_f, forbidden_zones)
    pick = rng.choice(eligible, size=n_f, replace=False) if n_f else []
    subset = tuple(sorted(int(i) for i in pick))
    return Candidate(subset, fitness(subset))
