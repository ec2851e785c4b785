"""
Queen-based genetic search for non-IAB link placement, SBS locations and both jointly.

Each generation keeps the Queen (best genome so far), adds J mutants of the
Queen and K - J - 1 fresh random genomes. There is no crossover. The first
iteration evaluates the K initial genomes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..errors import ParameterError
from ..geometry import ForbiddenZones, Region, sample_feasible_points
from .fitness import FitnessEvaluator, JointGenome, check_subset_size, eligible_for_non_iab, genome_key

logger = logging.getLogger(__name__)

LOCATION_RETRIES = 32


@dataclass(frozen=True)
class GaParams:
    population: int = 6
    neighbors: int = 3
    iterations: int = 20
    mutation_strength: int = 1
    location_step: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 < self.neighbors < self.population - 1:
            raise ParameterError(
                f"need 0 < J < K - 1, got K={self.population}, J={self.neighbors}",
                detail={"field": "neighbors"},
            )
        if self.iterations < 1:
            raise ParameterError(f"iterations must be >= 1, got {self.iterations}", detail={"field": "iterations"})
        if self.mutation_strength < 1:
            raise ParameterError("mutation_strength must be >= 1", detail={"field": "mutation_strength"})
        if self.location_step is not None and not self.location_step > 0:
            raise ParameterError("location_step must be > 0", detail={"field": "location_step"})

    @property
    def budget(self) -> int:
        """Upper bound on fitness evaluations for one run."""
        return self.population * self.iterations

    def step_for(self, region: Region) -> float:
        return self.location_step if self.location_step is not None else region.radius / 10.0


@dataclass
class Candidate:
    genome: Any
    fitness: Optional[float] = None

    @property
    def subset(self) -> Optional[tuple]:
        if isinstance(self.genome, JointGenome):
            return tuple(self.genome.subset)
        if isinstance(self.genome, tuple):
            return self.genome
        return None

    @property
    def positions(self) -> Optional[np.ndarray]:
        if isinstance(self.genome, JointGenome):
            return self.genome.positions
        if isinstance(self.genome, np.ndarray):
            return self.genome
        return None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"fitness": self.fitness}
        if self.subset is not None:
            out["non_iab"] = [int(i) for i in self.subset]
        if self.positions is not None:
            out["sbs_positions"] = np.asarray(self.positions).round(3).tolist()
        return out


@dataclass
class GaTrace:
    queen_rho: List[float] = field(default_factory=list)
    evals_so_far: List[int] = field(default_factory=list)

    @property
    def evaluations(self) -> int:
        return self.evals_so_far[-1] if self.evals_so_far else 0

    def record(self, rho: float, evals: int) -> None:
        self.queen_rho.append(float(rho))
        self.evals_so_far.append(int(evals))

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"iteration": i + 1, "queen_rho": rho, "evals_so_far": n}
            for i, (rho, n) in enumerate(zip(self.queen_rho, self.evals_so_far))
        ]

    def is_monotone(self) -> bool:
        return all(b >= a for a, b in zip(self.queen_rho, self.queen_rho[1:]))


# --- genome spaces ----------------------------------------------------------------


class SubsetSpace:
    """Sorted tuples of N_f distinct SBS indices drawn from the eligible set."""

    def __init__(self, eligible: Sequence[int], n_f: int, strength: int = 1):
        self.eligible = np.asarray(sorted(int(i) for i in eligible), dtype=int)
        check_subset_size(n_f, self.eligible)
        self.n_f = n_f
        self.strength = strength

    def random(self, rng: np.random.Generator) -> tuple:
        pick = rng.choice(self.eligible, size=self.n_f, replace=False) if self.n_f else []
        return tuple(sorted(int(i) for i in pick))

    def mutate(self, genome: tuple, rng: np.random.Generator) -> tuple:
        members = list(genome)
        outside = [int(i) for i in self.eligible if int(i) not in genome]
        k = min(self.strength, len(members), len(outside))
        if k == 0:
            return tuple(members)
        drop = rng.choice(len(members), size=k, replace=False)
        add = rng.choice(outside, size=k, replace=False)
        for slot, new in zip(drop, add):
            members[slot] = int(new)
        return tuple(sorted(members))


class LocationSpace:
    """N_s coordinates on the disk, outside the forbidden zones."""

    def __init__(
        self,
        region: Region,
        n_s: int,
        step: float,
        zones: Optional[ForbiddenZones] = None,
        strength: int = 1,
    ):
        if n_s < 0:
            raise ParameterError(f"N_s must be >= 0, got {n_s}")
        self.region = region
        self.n_s = n_s
        self.step = step
        self.zones = zones or ForbiddenZones()
        self.strength = strength
        # fail fast on an empty feasible region
        sample_feasible_points(region, self.zones, 1, np.random.default_rng(0))

    def feasible(self, points: np.ndarray) -> np.ndarray:
        return self.region.contains(points) & ~self.zones.contains(points)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return sample_feasible_points(self.region, self.zones, self.n_s, rng)

    def mutate(self, genome: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = np.array(genome, dtype=float)
        if self.n_s == 0:
            return out
        k = min(self.strength, self.n_s)
        for idx in rng.choice(self.n_s, size=k, replace=False):
            for _ in range(LOCATION_RETRIES):
                r = self.step * np.sqrt(rng.random())
                theta = rng.uniform(0.0, 2 * np.pi)
                proposal = out[idx] + r * np.array([np.cos(theta), np.sin(theta)])
                if self.feasible(proposal[None, :])[0]:
                    out[idx] = proposal
                    break
        return out


class JointSpace:
    """Coordinates plus non-IAB subset; mutation perturbs one of the two, chosen uniformly."""

    def __init__(self, locations: LocationSpace, n_f: int, strength: int = 1):
        self.locations = locations
        self.subsets = SubsetSpace(range(locations.n_s), n_f, strength)

    def random(self, rng: np.random.Generator) -> JointGenome:
        return JointGenome(self.locations.random(rng), self.subsets.random(rng))

    def mutate(self, genome: JointGenome, rng: np.random.Generator) -> JointGenome:
        if self.subsets.n_f == 0 or rng.random() < 0.5:
            return JointGenome(self.locations.mutate(genome.positions, rng), genome.subset)
        return JointGenome(genome.positions, self.subsets.mutate(genome.subset, rng))


# --- the Queen loop -------------------------------------------------------------------

QueenCallback = Callable[[int, Candidate], None]


def queen_search(
    space,
    fitness: FitnessEvaluator,
    ga: GaParams,
    rng: np.random.Generator,
    initial: Sequence = (),
    on_queen: Optional[QueenCallback] = None,
) -> tuple:
    """Run the Queen loop over any genome space exposing random() and mutate()."""
    seen: set = set()

    def evaluate(genomes: List) -> List[Candidate]:
        values = fitness.evaluate_many(genomes)
        for g in genomes:
            seen.add(genome_key(g))
        return [Candidate(g, v) for g, v in zip(genomes, values)]

    population = list(initial)[: ga.population]
    population += [space.random(rng) for _ in range(ga.population - len(population))]
    scored = evaluate(population)
    queen = max(scored, key=lambda c: c.fitness)
    trace = GaTrace()
    trace.record(queen.fitness, len(seen))
    if on_queen:
        on_queen(1, queen)

    for iteration in range(2, ga.iterations + 1):
        genomes = [space.mutate(queen.genome, rng) for _ in range(ga.neighbors)]
        genomes += [space.random(rng) for _ in range(ga.population - ga.neighbors - 1)]
        challenger = max(evaluate(genomes), key=lambda c: c.fitness)
        if challenger.fitness > queen.fitness:
            queen = challenger
            if on_queen:
                on_queen(iteration, queen)
        trace.record(queen.fitness, len(seen))

    logger.debug("queen search done: rho=%.4f after %d evaluations", queen.fitness, trace.evaluations)
    return queen, trace


def ga_non_iab(
    fitness: FitnessEvaluator,
    n_f: int,
    ga: GaParams,
    rng: np.random.Generator,
    forbidden_zones: Optional[ForbiddenZones] = None,
    initial: Sequence = (),
    on_queen: Optional[QueenCallback] = None,
):
    """Choose which N_f SBSs get a non-IAB link."""
    eligible = eligible_for_non_iab(fitness.base.sbs_positions, forbidden_zones)
    space = SubsetSpace(eligible, n_f, ga.mutation_strength)
    initial = [tuple(sorted(int(i) for i in g)) for g in initial]
    return queen_search(space, fitness, ga, rng, initial, on_queen)


def ga_locations(
    fitness: FitnessEvaluator,
    n_s: int,
    ga: GaParams,
    rng: np.random.Generator,
    forbidden_zones: Optional[ForbiddenZones] = None,
    initial: Sequence = (),
    on_queen: Optional[QueenCallback] = None,
):
    """Choose N_s SBS coordinates; the non-IAB set of the base deployment is kept."""
    region = fitness.instance.region
    space = LocationSpace(region, n_s, ga.step_for(region), forbidden_zones, ga.mutation_strength)
    initial = [np.asarray(g, dtype=float).reshape(-1, 2) for g in initial]
    return queen_search(space, fitness, ga, rng, initial, on_queen)


def ga_joint(
    fitness: FitnessEvaluator,
    n_s: int,
    n_f: int,
    ga: GaParams,
    rng: np.random.Generator,
    forbidden_zones: Optional[ForbiddenZones] = None,
    initial: Sequence[JointGenome] = (),
    on_queen: Optional[QueenCallback] = None,
):
    """Choose SBS coordinates and the non-IAB subset together."""
    region = fitness.instance.region
    locations = LocationSpace(region, n_s, ga.step_for(region), forbidden_zones, ga.mutation_strength)
    space = JointSpace(locations, n_f, ga.mutation_strength)
    return queen_search(space, fitness, ga, rng, list(initial), on_queen)
