"""
Fitness of a candidate deployment: coverage probability under common random numbers.

Every evaluation of a run starts from the same fitness seed, so two candidates
are compared on identical fading and beam draws and a genome always gets the
same fitness. Results are cached by genome key.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ParameterError
from ..geometry import ForbiddenZones, NetworkInstance
from ..network import Deployment, NetworkLinks, NetworkParams, build_links, coverage

logger = logging.getLogger(__name__)

SubsetGenome = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class JointGenome:
    positions: np.ndarray
    subset: SubsetGenome

    def key(self) -> Hashable:
        return (np.asarray(self.positions, dtype=float).tobytes(), tuple(self.subset))


def genome_key(genome) -> Hashable:
    if isinstance(genome, JointGenome):
        return ("joint",) + genome.key()
    if isinstance(genome, np.ndarray):
        return ("locations", np.asarray(genome, dtype=float).tobytes())
    return ("subset", tuple(sorted(int(i) for i in genome)))


class FitnessEvaluator:
    """
    Evaluates subset, location and joint genomes against one instance.

    ``base`` fixes psi, bandwidth, powers, the default SBS positions and the
    non-IAB set used when a genome only carries positions.
    """

    def __init__(
        self,
        instance: NetworkInstance,
        base: Deployment,
        params: NetworkParams,
        eta_bps: float,
        n_fading_draws: int,
        seed: int,
        jobs: int = 1,
    ):
        if n_fading_draws < 1:
            raise ParameterError(f"n_fading_draws must be >= 1, got {n_fading_draws}")
        self.instance = instance
        self.base = base
        self.params = params
        self.eta_bps = float(eta_bps)
        self.n_fading_draws = int(n_fading_draws)
        self.seed = int(seed)
        self.jobs = max(1, int(jobs))
        self.evaluations = 0
        self._cache: Dict[Hashable, float] = {}
        self._base_links: Optional[NetworkLinks] = None

    @property
    def n_sbs(self) -> int:
        return self.base.n_sbs

    def _links_for(self, deployment: Deployment) -> NetworkLinks:
        if deployment.sbs_positions is self.base.sbs_positions:
            if self._base_links is None:
                self._base_links = build_links(self.instance, self.base, self.params)
            return self._base_links
        return build_links(self.instance, deployment, self.params)

    def deployment_for(self, genome) -> Deployment:
        if isinstance(genome, JointGenome):
            return self.base.with_positions(genome.positions).with_non_iab(genome.subset)
        if isinstance(genome, np.ndarray):
            return self.base.with_positions(genome)
        return self.base.with_non_iab(genome)

    def rho_of(self, deployment: Deployment) -> float:
        """Uncached coverage of an arbitrary deployment with the common fitness seed."""
        rng = np.random.default_rng(self.seed)
        links = self._links_for(deployment)
        report = coverage(
            self.instance, deployment, self.params, self.eta_bps, self.n_fading_draws, rng, links=links
        )
        return report.rho

    def __call__(self, genome) -> float:
        key = genome_key(genome)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        rho = self.rho_of(self.deployment_for(genome))
        self._cache[key] = rho
        self.evaluations += 1
        return rho

    def evaluate_many(self, genomes: Sequence) -> List[float]:
        """Evaluate a generation; order of results follows the input order."""
        pending = {}
        for g in genomes:
            key = genome_key(g)
            if key not in self._cache and key not in pending:
                pending[key] = g
        if self.jobs > 1 and len(pending) > 1:
            items = list(pending.items())
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                values = list(pool.map(lambda kv: self.rho_of(self.deployment_for(kv[1])), items))
            for (key, _), rho in zip(items, values):
                self._cache[key] = rho
                self.evaluations += 1
        return [self(g) for g in genomes]

    def macro_only(self) -> float:
        return self.rho_of(self.base.macro_only())


def eligible_for_non_iab(positions: np.ndarray, zones: Optional[ForbiddenZones]) -> np.ndarray:
    """SBS indices allowed to carry a non-IAB link (outside every forbidden zone)."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    if zones is None or zones.empty:
        return np.arange(len(positions))
    return np.flatnonzero(~zones.contains(positions))


def check_subset_size(n_f: int, eligible: Iterable[int]) -> None:
    n_eligible = len(list(eligible))
    if n_f < 0 or n_f > n_eligible:
        raise ParameterError(
            f"cannot place {n_f} non-IAB links on {n_eligible} eligible SBSs",
            detail={"n_f": n_f, "eligible": n_eligible},
        )
