"""
Temporal blockage after deployment, and re-association ("routing") in response.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from ..errors import ParameterError
from ..geometry import NetworkInstance, Wall, sample_blockers
from ..network import (
    AssociationState,
    Deployment,
    NetworkParams,
    allocate_bandwidth,
    associate,
    build_links,
    coverage,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TemporalScenario:
    base: NetworkInstance
    lambda_temp: float
    walls: Tuple[Wall, ...] = ()

    @property
    def instance(self) -> NetworkInstance:
        """The base instance with the temporal walls added."""
        if not self.walls:
            return self.base
        return self.base.with_temporal_walls(self.walls)

    def removed(self) -> NetworkInstance:
        return self.base


def inject_temporal(
    instance: NetworkInstance, lambda_temp: float, wall_length: float, rng: np.random.Generator
) -> TemporalScenario:
    """Add FHPPP walls on top of the instance; its static walls are left alone."""
    if lambda_temp < 0:
        raise ParameterError(f"lambda_temp must be >= 0, got {lambda_temp}", detail={"field": "lambda_temp"})
    walls = sample_blockers(instance.region, lambda_temp, wall_length, rng)
    return TemporalScenario(base=instance, lambda_temp=float(lambda_temp), walls=walls)


@dataclass(frozen=True)
class RoutingDiff:
    access_changed: int
    access_fraction: float
    backhaul_changed: int
    backhaul_fraction: float
    rho_before: float
    rho_after: float
    rho_frozen: float

    def to_record(self, lambda_temp: float, p_s_dbm: float, deployment_kind: str) -> Dict[str, Any]:
        return {
            "lambda_temp": float(lambda_temp),
            "p_s_dbm": float(p_s_dbm),
            "deployment_kind": deployment_kind,
            "access_update_pct": 100.0 * self.access_fraction,
            "backhaul_update_pct": 100.0 * self.backhaul_fraction,
            "rho_before": self.rho_before,
            "rho_after": self.rho_after,
            "rho_frozen": self.rho_frozen,
        }


def association_changes(before: AssociationState, after: AssociationState) -> Tuple[int, float, int, float]:
    n_ues = len(before.ue_assoc)
    access = int(np.sum(before.ue_assoc != after.ue_assoc))
    iab = before.sbs_assoc >= 0
    n_iab = int(np.sum(iab))
    backhaul = int(np.sum(before.sbs_assoc[iab] != after.sbs_assoc[iab]))
    return (
        access,
        access / n_ues if n_ues else 0.0,
        backhaul,
        backhaul / n_iab if n_iab else 0.0,
    )


def reroute(
    scenario: TemporalScenario,
    deployment: Deployment,
    params: NetworkParams,
    eta_bps: float,
    n_fading_draws: int,
    rng: np.random.Generator,
) -> RoutingDiff:
    """
    Recompute received powers under the temporal walls, re-associate and
    re-allocate. The three coverage figures share one fading seed.
    """
    seed = int(rng.integers(0, 2**63 - 1))
    base = scenario.base
    blocked = scenario.instance

    links_before = build_links(base, deployment, params)
    assoc_before = allocate_bandwidth(associate(base, deployment, params, links_before), deployment)
    links_after = build_links(blocked, deployment, params) if scenario.walls else links_before
    assoc_after = allocate_bandwidth(associate(blocked, deployment, params, links_after), deployment)

    def rho(instance, links, assoc) -> float:
        report = coverage(
            instance, deployment, params, eta_bps, n_fading_draws,
            np.random.default_rng(seed), links=links, assoc=assoc,
        )
        return report.rho

    rho_before = rho(base, links_before, assoc_before)
    rho_after = rho(blocked, links_after, assoc_after)
    rho_frozen = rho(blocked, links_after, assoc_before)
    access, access_frac, backhaul, backhaul_frac = association_changes(assoc_before, assoc_after)
    logger.debug(
        "reroute lambda_temp=%s walls=%d access=%d backhaul=%d",
        scenario.lambda_temp, len(scenario.walls), access, backhaul,
    )
    return RoutingDiff(
        access_changed=access,
        access_fraction=access_frac,
        backhaul_changed=backhaul,
        backhaul_fraction=backhaul_frac,
        rho_before=rho_before,
        rho_after=rho_after,
        rho_frozen=rho_frozen,
    )
