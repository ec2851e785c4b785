"""
Figure recipes: the experiment set and table shape behind each reference figure.

Every recipe starts from the reference simulation parameters (REFERENCE_DEFAULTS) and
changes only what the figure varies.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd

from src.schemas import ExperimentConfig, SweepSpec, TemporalConfig

from ..errors import ConfigurationError
from .events import EventBus
from .runner import ResultSet, run_experiment, with_override

logger = logging.getLogger(__name__)

# Reference simulation parameters, keyed by config path.
REFERENCE_DEFAULTS: Dict[str, Any] = {
    "channel.carrier_ghz": 28.0,
    "deployment.bandwidth_hz": 1e9,
    "points.lambda_m": 2.0,
    "points.lambda_s": 50.0,
    "points.lambda_u": 500.0,
    "points.lambda_bl": 500.0,
    "channel.alpha_los": 3.0,
    "channel.alpha_nlos": 4.0,
    "channel.mbs_main_dbi": 18.0,
    "channel.sbs_main_dbi": 18.0,
    "channel.ue_gain_dbi": 0.0,
    "channel.mbs_side_dbi": -2.0,
    "channel.sbs_side_dbi": -2.0,
    "channel.hpbw_deg": 30.0,
    "channel.noise_figure_db": 5.0,
    "deployment.non_iab_fraction": 0.1,
    "points.in_leaf_fraction": 0.15,
    "points.tree_depth_m": 7.5,
    "deployment.mbs_power_dbm": 40.0,
    "deployment.sbs_power_dbm": 24.0,
    "deployment.ue_power_dbm": 0.0,
    "ga.population": 6,
    "ga.iterations": 20,
}

MBPS = 1e6


def lookup(config: ExperimentConfig, dotted: str) -> Any:
    value: Any = config
    for part in dotted.split("."):
        value = getattr(value, part)
    return value


@dataclass
class Part:
    label: str
    config: ExperimentConfig
    tags: Dict[str, Any]


@dataclass
class FigureResult:
    name: str
    table: pd.DataFrame
    runs: List[ResultSet]


@dataclass
class Scale:
    n_instances: int = 20
    master_seed: int = 0
    n_fading_draws: Optional[int] = None
    ga_iterations: Optional[int] = None

    def apply(self, config: ExperimentConfig) -> ExperimentConfig:
        update: Dict[str, Any] = {"n_instances": self.n_instances, "master_seed": self.master_seed}
        if self.n_fading_draws is not None:
            update["n_fading_draws"] = self.n_fading_draws
        if self.ga_iterations is not None:
            update["ga"] = config.ga.model_copy(update={"iterations": self.ga_iterations})
        return config.model_copy(update=update)


def _with(config: ExperimentConfig, **fields: Any) -> ExperimentConfig:
    for key, value in fields.items():
        config = with_override(config, key.replace("__", "."), value)
    return config


def _scenario(base: ExperimentConfig, scenario: str, **extra: Any) -> ExperimentConfig:
    return base.model_copy(update=dict(scenario=scenario, name=scenario, **extra))


# --- part builders ---------------------------------------------------------------------


def _fig8(base: ExperimentConfig) -> List[Part]:
    constrained = base.forbidden_zones.model_copy(update={"fraction": 0.4, "applies_to": "non_iab"})
    parts = []
    for label, kind, zones in [
        ("ga_non_iab", "ga_non_iab", None),
        ("ga_non_iab_constrained", "ga_non_iab", constrained),
        ("random", "random", None),
        ("random_constrained", "random", constrained),
        ("macro_only", "macro_only", None),
    ]:
        cfg = _scenario(base, kind)
        if zones is not None:
            cfg = cfg.model_copy(update={"forbidden_zones": zones, "name": label})
        parts.append(Part(label, cfg, {}))
    return parts


def _fig9(base: ExperimentConfig) -> List[Part]:
    return [Part(kind, _scenario(base, kind), {}) for kind in ("ga_locations", "ga_joint", "random", "macro_only")]


def _sweep(base: ExperimentConfig, kinds, param: str, values, eta_mbps, **tags) -> List[Part]:
    swept = base.model_copy(
        update={
            "sweep": SweepSpec(param=param, values=[float(v) for v in values]),
            "eta_bps": [e * MBPS for e in eta_mbps],
        }
    )
    return [Part(kind, _scenario(swept, kind), dict(tags)) for kind in kinds]


def _fig10(base: ExperimentConfig) -> List[Part]:
    return _sweep(
        base, ("random", "ga_non_iab", "macro_only"), "points.lambda_bl", (500, 1000, 1500, 2000), (50, 100, 150)
    )


def _fig11(base: ExperimentConfig) -> List[Part]:
    # average hop distance of 450 m corresponds to roughly 8 SBSs per km^2
    suburban = _with(base, points__lambda_s=8.0, deployment__sbs_power_dbm=33.0)
    parts = []
    for tree_length in (5.0, 15.0):
        cfg = _with(suburban, points__tree_length_m=tree_length)
        parts += _sweep(
            cfg, ("random", "ga_non_iab"), "points.lambda_t", (250, 500, 750, 1000, 1250), (50,),
            tree_length_m=tree_length,
        )
    return parts


def _fig12(base: ExperimentConfig) -> List[Part]:
    return _sweep(
        base, ("random", "ga_non_iab", "ga_locations"), "deployment.sbs_power_dbm", (16, 20, 24, 28, 32), (150,)
    )


def _fig13(base: ExperimentConfig) -> List[Part]:
    parts = []
    for interference in (False, True):
        cfg = base.model_copy(update={"backhaul_interference": interference})
        parts += _sweep(
            cfg, ("random", "macro_only", "ga_non_iab"), "channel.sbs_main_dbi", (10, 14, 18, 22, 26), (150,),
            backhaul_interference=interference,
        )
    return parts


def _fig14(base: ExperimentConfig) -> List[Part]:
    single = _with(base, points__lambda_s=20.0).model_copy(update={"n_instances": 1})
    return [Part(kind, _scenario(single, kind), {}) for kind in ("ga_non_iab", "tabu", "greedy", "exhaustive")]


def _fig15(base: ExperimentConfig) -> List[Part]:
    blocked = _with(base, points__lambda_bl=700.0).model_copy(
        update={"temporal": TemporalConfig(lambda_temp=[0.0, 50.0, 100.0, 150.0, 200.0])}
    )
    parts = []
    for p_s in (24.0, 28.0):
        cfg = _with(blocked, deployment__sbs_power_dbm=p_s)
        parts += [
            Part(kind, _scenario(cfg, kind), {"p_s_dbm": p_s}) for kind in ("random", "ga_non_iab", "ga_locations")
        ]
    return parts


def _rate_cdf(base: ExperimentConfig) -> List[Part]:
    sparse = _with(base, points__lambda_s=20.0)
    parts = []
    for side in (-2.0, -10.0):
        for p_s in (24.0, 33.0):
            cfg = _with(sparse, channel__sbs_side_dbi=side, channel__mbs_side_dbi=side, deployment__sbs_power_dbm=p_s)
            parts += [
                Part(kind, _scenario(cfg, kind), {"side_lobe_dbi": side, "p_s_dbm": p_s})
                for kind in ("random", "ga_locations", "ga_joint")
            ]
    return parts


# --- table shapes ------------------------------------------------------------------------


def _trace_table(parts: List[Part], runs: List[ResultSet]) -> pd.DataFrame:
    """Queen traces plus flat levels for the non-iterative scenarios."""
    n_it = max(p.config.ga.iterations for p in parts)
    frames = []
    for part, run in zip(parts, runs):
        trace = run.mean_trace()
        if not trace.empty:
            frame = trace[["iteration", "queen_rho"]].copy()
        else:
            level = float(run.coverage["rho"].mean())
            frame = pd.DataFrame({"iteration": range(1, n_it + 1), "queen_rho": [level] * n_it})
        frame["scenario"] = part.label
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)[["iteration", "queen_rho", "scenario"]]


def _sweep_table(parts: List[Part], runs: List[ResultSet], param: str) -> pd.DataFrame:
    frames = []
    for part, run in zip(parts, runs):
        summary = run.summary().rename(columns={"sweep_value": param.split(".")[-1]})
        summary["scenario"] = part.label
        for key, value in part.tags.items():
            summary[key] = value
        frames.append(summary)
    return pd.concat(frames, ignore_index=True)


def _fig14_table(parts: List[Part], runs: List[ResultSet]) -> pd.DataFrame:
    frames = []
    for part, run in zip(parts, runs):
        frame = run.traces[["iteration", "queen_rho", "evals_so_far"]].rename(columns={"queen_rho": "best_rho"})
        frame = frame.assign(scenario=part.label)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def _routing_table(parts: List[Part], runs: List[ResultSet], columns: List[str]) -> pd.DataFrame:
    frames = []
    for part, run in zip(parts, runs):
        grouped = run.routing.groupby(["lambda_temp"], sort=True)[columns].mean().reset_index()
        grouped["scenario"] = part.label
        grouped["p_s_dbm"] = part.tags["p_s_dbm"]
        frames.append(grouped)
    return pd.concat(frames, ignore_index=True)


def _cdf_table(parts: List[Part], runs: List[ResultSet]) -> pd.DataFrame:
    frames = []
    for part, run in zip(parts, runs):
        grouped = run.rates.groupby(["quantile"], sort=True)["rate_bps"].mean().reset_index()
        grouped["scenario"] = part.label
        for key, value in part.tags.items():
            grouped[key] = value
        frames.append(grouped)
    return pd.concat(frames, ignore_index=True)


@dataclass(frozen=True)
class Recipe:
    build: Callable[[ExperimentConfig], List[Part]]
    table: Callable[[List[Part], List[ResultSet]], pd.DataFrame]
    description: str


RECIPES: Dict[str, Recipe] = {
    "fig8": Recipe(_fig8, _trace_table, "Non-IAB placement GA trace, free and 40% constrained"),
    "fig9": Recipe(_fig9, _trace_table, "SBS location and joint GA traces"),
    "fig10": Recipe(_fig10, lambda p, r: _sweep_table(p, r, "points.lambda_bl"), "Coverage vs blocker density"),
    "fig11": Recipe(_fig11, lambda p, r: _sweep_table(p, r, "points.lambda_t"), "Coverage vs tree density"),
    "fig12": Recipe(
        _fig12, lambda p, r: _sweep_table(p, r, "deployment.sbs_power_dbm"), "Coverage vs SBS transmit power"
    ),
    "fig13": Recipe(
        _fig13, lambda p, r: _sweep_table(p, r, "channel.sbs_main_dbi"), "Coverage vs SBS antenna gain"
    ),
    "fig14": Recipe(_fig14, _fig14_table, "GA vs tabu vs greedy vs exhaustive on one realization"),
    "fig15": Recipe(
        _fig15,
        lambda p, r: _routing_table(p, r, ["rho_before", "rho_after", "rho_frozen"]),
        "Coverage vs temporal blocker density",
    ),
    "fig16": Recipe(
        _fig15,
        lambda p, r: _routing_table(p, r, ["access_update_pct", "backhaul_update_pct"]),
        "Routing update percentage vs temporal blocker density",
    ),
    "rate_cdf": Recipe(_rate_cdf, _cdf_table, "UE rate CDF for random, location and joint deployments"),
}


def figure_parts(name: str, scale: Optional[Scale] = None) -> List[Part]:
    if name not in RECIPES:
        raise ConfigurationError(f"unknown figure {name!r}", detail={"available": sorted(RECIPES)})
    scale = scale or Scale()
    parts = RECIPES[name].build(ExperimentConfig())
    out = []
    for part in parts:
        cfg = scale.apply(part.config)
        if name == "fig14":
            cfg = cfg.model_copy(update={"n_instances": 1})
        out.append(Part(part.label, cfg, part.tags))
    return out


def run_figure(
    name: str,
    scale: Optional[Scale] = None,
    jobs: int = 1,
    bus: Optional[EventBus] = None,
) -> FigureResult:
    parts = figure_parts(name, scale)
    runs: List[ResultSet] = []
    for part in parts:
        logger.info("figure %s: running %s (%d instances)", name, part.label, part.config.n_instances)
        runs.append(run_experiment(part.config, jobs=jobs, bus=bus))
    return FigureResult(name=name, table=RECIPES[name].table(parts, runs), runs=runs)


def list_figures() -> List[Tuple[str, str]]:
    return [(name, recipe.description) for name, recipe in RECIPES.items()]
