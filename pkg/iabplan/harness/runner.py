"""
Monte Carlo orchestration: one task per (sweep value, instance), run serially
or on a process pool, gathered back in (sweep value, instance) order.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import uuid
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.config import settings
from src.schemas import CoverageRecord, ExperimentConfig, RoutingRecord, TraceRecord

from ..channel import ChannelParams
from ..errors import ConfigurationError, IabError, SearchRefusedError
from ..geometry import (
    BlockerGeometry,
    NetworkInstance,
    PointProcessParams,
    Region,
    sample_forbidden_zones,
    sample_instance,
)
from ..network import Deployment, NetworkParams, TxPowers, coverage
from ..optimize import (
    FitnessEvaluator,
    GaParams,
    TabuParams,
    exhaustive_non_iab,
    ga_joint,
    ga_locations,
    ga_non_iab,
    greedy_non_iab,
    random_non_iab,
    tabu_non_iab,
)
from ..routing import inject_temporal, reroute
from . import events as ev
from .seeding import InstanceStreams

logger = logging.getLogger(__name__)

COVERAGE_COLUMNS = list(CoverageRecord.model_fields)
TRACE_COLUMNS = list(TraceRecord.model_fields)
ROUTING_COLUMNS = list(RoutingRecord.model_fields)
RATE_COLUMNS = ["scenario", "instance", "sweep_value", "quantile", "rate_bps"]
RATE_QUANTILES = np.linspace(0.0, 1.0, 21)


# --- config -> engine parameters ------------------------------------------------------


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(raw: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors(include_url=False)[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(
            f"invalid config field {loc!r}: {first['msg']}",
            detail=exc.errors(include_url=False, include_context=False),
        ) from exc


def with_override(config: ExperimentConfig, dotted: str, value: Any) -> ExperimentConfig:
    """Return a copy with one dotted field replaced, validated like the original."""
    raw = config.model_dump(mode="json")
    parts = dotted.split(".")
    target = raw
    for part in parts[:-1]:
        if not isinstance(target.get(part), dict):
            raise ConfigurationError(f"unknown sweep parameter {dotted!r}", detail={"field": dotted})
        target = target[part]
    if parts[-1] not in target:
        raise ConfigurationError(f"unknown sweep parameter {dotted!r}", detail={"field": dotted})
    current = target[parts[-1]]
    if isinstance(current, bool):
        value = bool(value)
    elif isinstance(current, int) and float(value).is_integer():
        value = int(value)
    target[parts[-1]] = value
    raw["sweep"] = None
    return load_config(raw)


def channel_params(config: ExperimentConfig) -> ChannelParams:
    c = config.channel
    return ChannelParams(
        carrier_ghz=c.carrier_ghz,
        alpha_los=c.alpha_los,
        alpha_nlos=c.alpha_nlos,
        main_lobe_dbi=c.mbs_main_dbi,
        side_lobe_dbi=c.mbs_side_dbi,
        hpbw_deg=c.hpbw_deg,
        noise_figure_db=c.noise_figure_db,
        ue_gain_dbi=c.ue_gain_dbi,
        sbs_main_lobe_dbi=c.sbs_main_dbi,
        sbs_side_lobe_dbi=c.sbs_side_dbi,
        noise_power_dbm=c.noise_power_dbm,
    )


def network_params(config: ExperimentConfig) -> NetworkParams:
    return NetworkParams(
        channel=channel_params(config),
        backhaul_interference=config.backhaul_interference,
        backhaul_fading=config.backhaul_fading,
    )


def sample_for(config: ExperimentConfig, streams: InstanceStreams) -> NetworkInstance:
    p = config.points
    region = Region.from_area_km2(p.area_km2)
    densities = PointProcessParams(
        lambda_m=p.lambda_m, lambda_s=p.lambda_s, lambda_u=p.lambda_u, lambda_bl=p.lambda_bl, lambda_t=p.lambda_t
    )
    shapes = BlockerGeometry(
        wall_length=p.wall_length_m,
        tree_length=p.tree_length_m,
        tree_depth=p.tree_depth_m,
        in_leaf_fraction=p.in_leaf_fraction,
    )
    return sample_instance(region, densities, shapes, streams.rng("geometry"), min_mbs=1)


def base_deployment(config: ExperimentConfig, instance: NetworkInstance) -> Deployment:
    d = config.deployment
    return Deployment.from_instance(
        instance,
        psi=d.psi,
        bandwidth_hz=d.bandwidth_hz,
        powers=TxPowers(mbs_dbm=d.mbs_power_dbm, sbs_dbm=d.sbs_power_dbm, ue_dbm=d.ue_power_dbm),
    )


def ga_params(config: ExperimentConfig) -> GaParams:
    g = config.ga
    return GaParams(
        population=g.population,
        neighbors=g.neighbors,
        iterations=g.iterations,
        mutation_strength=g.mutation_strength,
        location_step=g.location_step_m,
    )


# --- one instance ---------------------------------------------------------------------


@dataclass
class InstanceResult:
    index: int
    sweep_value: Optional[float]
    coverage: List[Dict[str, Any]] = field(default_factory=list)
    traces: List[Dict[str, Any]] = field(default_factory=list)
    routing: List[Dict[str, Any]] = field(default_factory=list)
    rates: List[Dict[str, Any]] = field(default_factory=list)
    events: List[Tuple[str, Dict[str, Any]]] = field(default_factory=list)


@dataclass
class _Built:
    deployment: Deployment
    trace: List[Tuple[int, float, int]] = field(default_factory=list)
    evaluations: int = 0
    queens: List[Tuple[int, float]] = field(default_factory=list)


def _zones_for(config: ExperimentConfig, instance: NetworkInstance, streams: InstanceStreams):
    fz = config.forbidden_zones
    if fz.fraction <= 0:
        return None, None
    zones = sample_forbidden_zones(instance.region, fz.fraction, fz.cell_size_m, streams.rng("placement"))
    non_iab = zones if fz.applies_to in ("non_iab", "both") else None
    locations = zones if fz.applies_to in ("locations", "both") else None
    return non_iab, locations


def build_deployment(
    config: ExperimentConfig,
    instance: NetworkInstance,
    streams: InstanceStreams,
    params: NetworkParams,
    exhaustive_cap: int,
    eval_jobs: int = 1,
) -> _Built:
    """
    Produce the scenario's deployment; optimizers score with the common fitness seed.
    ``eval_jobs`` threads score each GA generation.
    """
    base = base_deployment(config, instance)
    n_s = base.n_sbs
    n_f = int(round(config.deployment.non_iab_fraction * n_s))
    zones_non_iab, zones_locations = _zones_for(config, instance, streams)
    placement_rng = streams.child("placement", 0)
    optimizer_rng = streams.rng("optimizer")
    fitness = FitnessEvaluator(
        instance,
        base,
        params,
        eta_bps=config.eta_bps[0],
        n_fading_draws=config.n_fading_draws,
        seed=streams.int_seed("fitness"),
        jobs=eval_jobs,
    )
    kind = config.scenario
    built = _Built(deployment=base)
    queens: List[Tuple[int, float]] = []

    def on_queen(iteration, candidate) -> None:
        queens.append((iteration, float(candidate.fitness)))

    def from_trace(trace) -> List[Tuple[int, float, int]]:
        return [(r["iteration"], r["queen_rho"], r["evals_so_far"]) for r in trace.rows()]

    if kind == "macro_only":
        built.deployment = base.macro_only()
    elif kind == "random":
        chosen = random_non_iab(fitness, n_f, placement_rng, zones_non_iab)
        built.deployment = base.with_non_iab(chosen.subset)
    elif kind == "ga_non_iab":
        queen, trace = ga_non_iab(fitness, n_f, ga_params(config), optimizer_rng, zones_non_iab, on_queen=on_queen)
        built = _Built(base.with_non_iab(queen.subset), from_trace(trace), trace.evaluations)
    elif kind == "ga_locations":
        subset = random_non_iab(fitness, n_f, placement_rng).subset
        located = FitnessEvaluator(
            instance, base.with_non_iab(subset), params, config.eta_bps[0],
            config.n_fading_draws, streams.int_seed("fitness"), jobs=eval_jobs,
        )
        queen, trace = ga_locations(located, n_s, ga_params(config), optimizer_rng, zones_locations, on_queen=on_queen)
        built = _Built(
            base.with_positions(queen.positions).with_non_iab(subset), from_trace(trace), trace.evaluations
        )
    elif kind == "ga_joint":
        queen, trace = ga_joint(fitness, n_s, n_f, ga_params(config), optimizer_rng, zones_locations, on_queen=on_queen)
        built = _Built(
            base.with_positions(queen.positions).with_non_iab(queen.subset), from_trace(trace), trace.evaluations
        )
    elif kind == "exhaustive":
        result = exhaustive_non_iab(fitness, n_f, exhaustive_cap, zones_non_iab)
        built = _Built(
            base.with_non_iab(result.best.subset),
            [(1, result.best.fitness, result.search_space)],
            result.search_space,
        )
    elif kind == "greedy":
        result = greedy_non_iab(fitness, n_f, zones_non_iab)
        trace, evals, n_eligible = [], 0, len(fitness.base.sbs_positions)
        if zones_non_iab is not None:
            n_eligible = int(np.sum(~zones_non_iab.contains(fitness.base.sbs_positions)))
        for step, rho in enumerate(result.steps):
            evals += n_eligible - step
            trace.append((step + 1, rho, evals))
        built = _Built(base.with_non_iab(result.best.subset), trace, result.evaluations)
    elif kind == "tabu":
        t = config.tabu
        result = tabu_non_iab(
            fitness, n_f, TabuParams(t.tenure, t.iterations, t.restart_after), optimizer_rng, zones_non_iab
        )
        trace = [(s.iteration, s.best_rho, s.evals_so_far) for s in result.trace]
        built = _Built(base.with_non_iab(result.best.subset), trace, result.evaluations)
    else:  # pragma: no cover - guarded by the schema
        raise ConfigurationError(f"unknown scenario kind {kind!r}")
    built.queens = queens
    return built


def run_instance(
    config: ExperimentConfig,
    index: int,
    sweep_value: Optional[float] = None,
    exhaustive_cap: Optional[int] = None,
    eval_jobs: int = 1,
) -> InstanceResult:
    cap = settings.EXHAUSTIVE_CAP if exhaustive_cap is None else exhaustive_cap
    streams = InstanceStreams.from_master(config.master_seed, index)
    instance = sample_for(config, streams)
    params = network_params(config)
    out = InstanceResult(index=index, sweep_value=sweep_value)
    out.events.append(
        (
            ev.INSTANCE_SAMPLED,
            {
                "instance": index,
                "seed": streams.seed,
                "n_mbs": instance.n_mbs,
                "n_sbs": instance.n_sbs,
                "n_ues": instance.n_ues,
                "n_walls": len(instance.walls),
                "n_trees": len(instance.trees),
            },
        )
    )

    built = build_deployment(config, instance, streams, params, cap, eval_jobs)
    for iteration, rho in built.queens:
        out.events.append((ev.QUEEN_UPDATED, {"instance": index, "iteration": iteration, "rho": rho}))
    deployment = built.deployment

    report = coverage(
        instance, deployment, params, config.eta_bps[0], config.n_fading_draws,
        streams.rng("coverage"), seed=streams.seed,
    )
    p = config.points
    sweep_param = config.sweep.param if config.sweep else None
    for eta in config.eta_bps:
        s = report.summary(eta)
        out.coverage.append(
            CoverageRecord(
                scenario=config.scenario,
                instance=index,
                seed=streams.seed,
                sweep_param=sweep_param,
                sweep_value=sweep_value,
                lambda_m=p.lambda_m,
                lambda_s=p.lambda_s,
                lambda_u=p.lambda_u,
                lambda_bl=p.lambda_bl,
                lambda_t=p.lambda_t,
                psi=deployment.psi,
                p_s_dbm=deployment.powers.sbs_dbm,
                n_sbs=deployment.n_sbs,
                n_non_iab=deployment.n_non_iab,
                evaluations=built.evaluations,
                **s,
            ).model_dump()
        )
    if report.rates.size:
        levels = np.quantile(report.rates.ravel(), RATE_QUANTILES)
        out.rates = [
            {
                "scenario": config.scenario,
                "instance": index,
                "sweep_value": sweep_value,
                "quantile": float(q),
                "rate_bps": float(r),
            }
            for q, r in zip(RATE_QUANTILES, levels)
        ]
    for iteration, rho, evals in built.trace:
        out.traces.append(
            TraceRecord(
                scenario=config.scenario,
                instance=index,
                sweep_value=sweep_value,
                iteration=iteration,
                queen_rho=rho,
                evals_so_far=evals,
            ).model_dump()
        )

    if config.temporal is not None:
        for k, lambda_temp in enumerate(config.temporal.lambda_temp):
            rng = streams.child("temporal", k)
            scenario = inject_temporal(instance, lambda_temp, p.wall_length_m, rng)
            diff = reroute(scenario, deployment, params, config.eta_bps[0], config.n_fading_draws, rng)
            out.routing.append(
                RoutingRecord(
                    scenario=config.scenario,
                    instance=index,
                    sweep_value=sweep_value,
                    **diff.to_record(lambda_temp, deployment.powers.sbs_dbm, config.scenario),
                ).model_dump()
            )

    out.events.append((ev.INSTANCE_FINISHED, {"instance": index, "rho": report.rho, "eta_bps": config.eta_bps[0]}))
    return out


def _run_task(task: Tuple[ExperimentConfig, int, Optional[float], int, int]) -> InstanceResult:
    config, index, sweep_value, cap, eval_jobs = task
    return run_instance(config, index, sweep_value, cap, eval_jobs)


# --- whole experiment -------------------------------------------------------------------


@dataclass
class ResultSet:
    run_id: str
    name: str
    scenario: str
    config: Dict[str, Any]
    config_hash: str
    code_version: str
    created_at: str
    coverage: pd.DataFrame
    traces: pd.DataFrame
    routing: pd.DataFrame
    rates: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=RATE_COLUMNS))

    def summary(self) -> pd.DataFrame:
        """Instance-averaged coverage per (scenario, sweep value, eta)."""
        if self.coverage.empty:
            return pd.DataFrame(columns=["scenario", "sweep_value", "eta_bps", "rho", "mean_rate_bps", "n"])
        grouped = self.coverage.groupby(["scenario", "sweep_value", "eta_bps"], dropna=False, sort=True)
        out = grouped.agg(rho=("rho", "mean"), mean_rate_bps=("mean_rate_bps", "mean"), n=("rho", "size"))
        return out.reset_index()

    def mean_trace(self) -> pd.DataFrame:
        """Queen fitness averaged over instances, per iteration."""
        if self.traces.empty:
            return pd.DataFrame(columns=["scenario", "sweep_value", "iteration", "queen_rho", "evals_so_far"])
        grouped = self.traces.groupby(["scenario", "sweep_value", "iteration"], dropna=False, sort=True)
        return grouped.agg(queen_rho=("queen_rho", "mean"), evals_so_far=("evals_so_far", "max")).reset_index()

    def metadata(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "name": self.name,
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "code_version": self.code_version,
            "created_at": self.created_at,
            "n_records": int(len(self.coverage)),
            "config": self.config,
        }


def _frame(rows: Sequence[Dict[str, Any]], columns: List[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=columns)


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    bus: Optional[ev.EventBus] = None,
    run_id: Optional[str] = None,
    exhaustive_cap: Optional[int] = None,
) -> ResultSet:
    """Run every (sweep value, instance) task and collect the records in a ResultSet."""
    run_id = run_id or uuid.uuid4().hex[:12]
    bus = bus or ev.EventBus()
    cap = settings.EXHAUSTIVE_CAP if exhaustive_cap is None else exhaustive_cap
    digest = config_hash(config)

    if config.sweep is not None:
        variants = [(v, with_override(config, config.sweep.param, v)) for v in config.sweep.values]
        # keep the sweep description on each variant so records name the parameter
        variants = [(v, c.model_copy(update={"sweep": config.sweep})) for v, c in variants]
    else:
        variants = [(None, config)]
    n_tasks = len(variants) * config.n_instances
    pooled = jobs > 1 and n_tasks > 1
    # a single task spends the workers on its GA generations instead
    eval_jobs = 1 if pooled else max(1, jobs)
    tasks = [(cfg, i, value, cap, eval_jobs) for value, cfg in variants for i in range(config.n_instances)]

    bus.publish(
        run_id,
        ev.RUN_STARTED,
        {
            "name": config.name,
            "scenario": config.scenario,
            "config_hash": digest,
            "tasks": len(tasks),
            "jobs": jobs,
            "eval_jobs": eval_jobs,
        },
    )
    try:
        if pooled:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_task, tasks))
        else:
            results = [_run_task(t) for t in tasks]
    except SearchRefusedError as exc:
        bus.publish(run_id, ev.RUN_REFUSED, exc.envelope()["error"])
        raise
    except IabError as exc:
        bus.publish(run_id, ev.RUN_FAILED, exc.envelope()["error"])
        raise
    except Exception as exc:
        bus.publish(run_id, ev.RUN_FAILED, {"code": "INTERNAL", "message": str(exc)})
        raise

    coverage_rows, trace_rows, routing_rows, rate_rows = [], [], [], []
    for result in results:
        for event_type, payload in result.events:
            bus.publish(run_id, event_type, dict(payload, sweep_value=result.sweep_value))
        coverage_rows += result.coverage
        trace_rows += result.traces
        routing_rows += result.routing
        rate_rows += result.rates

    result_set = ResultSet(
        run_id=run_id,
        name=config.name,
        scenario=config.scenario,
        config=config.model_dump(mode="json"),
        config_hash=digest,
        code_version=settings.BUILD_SHA,
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat().replace("+00:00", "Z"),
        coverage=_frame(coverage_rows, COVERAGE_COLUMNS),
        traces=_frame(trace_rows, TRACE_COLUMNS),
        routing=_frame(routing_rows, ROUTING_COLUMNS),
        rates=_frame(rate_rows, RATE_COLUMNS),
    )
    bus.publish(run_id, ev.RUN_SUCCEEDED, {"n_records": len(coverage_rows), "n_trace_rows": len(trace_rows)})
    return result_set
