"""
Pydantic schemas for experiment configuration and result records.

Every configuration section rejects unknown keys. Defaults are the reference
simulation parameters (dense urban scenario, 28 GHz, 1 km^2 disk).
"""

from datetime import datetime
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import settings

ScenarioKind = Literal[
    "random",
    "ga_non_iab",
    "ga_locations",
    "ga_joint",
    "macro_only",
    "exhaustive",
    "greedy",
    "tabu",
]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PointsConfig(_Section):
    """Densities (per km^2) and blocker geometry."""

    area_km2: float = Field(1.0, gt=0, description="Disk area")
    lambda_m: float = Field(2.0, ge=0, description="MBS density")
    lambda_s: float = Field(50.0, ge=0, description="SBS density")
    lambda_u: float = Field(500.0, ge=0, description="UE density")
    lambda_bl: float = Field(500.0, ge=0, description="Wall (blocker) density")
    lambda_t: float = Field(0.0, ge=0, description="Tree line density")
    wall_length_m: float = Field(5.0, gt=0, description="Wall length l_bl")
    tree_length_m: float = Field(15.0, gt=0, description="Tree line length l_T")
    tree_depth_m: float = Field(7.5, gt=0, description="Vegetation depth d")
    in_leaf_fraction: float = Field(0.15, ge=0, le=1, description="Share of in-leaf tree lines")


class ChannelConfig(_Section):
    carrier_ghz: float = Field(28.0, gt=0)
    alpha_los: float = Field(3.0, gt=0)
    alpha_nlos: float = Field(4.0, gt=0)
    mbs_main_dbi: float = 18.0
    sbs_main_dbi: float = 18.0
    ue_gain_dbi: float = 0.0
    mbs_side_dbi: float = -2.0
    sbs_side_dbi: float = -2.0
    hpbw_deg: float = Field(30.0, gt=0, lt=360)
    noise_figure_db: float = 5.0
    noise_power_dbm: Optional[float] = Field(None, description="Overrides the thermal noise model")

    @model_validator(mode="after")
    def _exponents_ordered(self) -> "ChannelConfig":
        if self.alpha_nlos < self.alpha_los:
            raise ValueError("alpha_nlos must be >= alpha_los")
        return self


class DeploymentConfig(_Section):
    psi: float = Field(0.5, ge=0, le=1, description="Backhaul share of the bandwidth")
    bandwidth_hz: float = Field(1e9, gt=0)
    mbs_power_dbm: float = 40.0
    sbs_power_dbm: float = 24.0
    ue_power_dbm: float = 0.0
    non_iab_fraction: float = Field(0.1, ge=0, le=1, description="Share of SBSs with non-IAB backhaul")


class GaConfig(_Section):
    population: int = Field(6, ge=3, description="K")
    neighbors: int = Field(3, ge=1, description="J")
    iterations: int = Field(20, ge=1, description="N_it")
    mutation_strength: int = Field(1, ge=1)
    location_step_m: Optional[float] = Field(None, gt=0, description="Defaults to R/10")

    @model_validator(mode="after")
    def _neighbors_fit(self) -> "GaConfig":
        if not self.neighbors < self.population - 1:
            raise ValueError("neighbors must be < population - 1")
        return self


class TabuConfig(_Section):
    tenure: int = Field(7, ge=0)
    iterations: int = Field(100, ge=1)
    restart_after: int = Field(20, ge=1)


class ForbiddenZoneSpec(_Section):
    fraction: float = Field(0.0, ge=0, le=1, description="Share of the disk that is forbidden")
    cell_size_m: float = Field(50.0, gt=0)
    applies_to: Literal["non_iab", "locations", "both"] = "non_iab"


class SweepSpec(_Section):
    param: str = Field(..., description="Dotted path, e.g. points.lambda_bl")
    values: List[float] = Field(..., min_length=1)


class TemporalConfig(_Section):
    lambda_temp: List[float] = Field(..., min_length=1, description="Temporal blocker densities")

    @field_validator("lambda_temp")
    @classmethod
    def _non_negative(cls, v: List[float]) -> List[float]:
        if any(x < 0 for x in v):
            raise ValueError("lambda_temp values must be >= 0")
        return v


class ExperimentConfig(_Section):
    """One experiment: a scenario kind evaluated over n_instances sampled networks."""

    name: str = "experiment"
    scenario: ScenarioKind = "random"
    points: PointsConfig = Field(default_factory=PointsConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    deployment: DeploymentConfig = Field(default_factory=DeploymentConfig)
    ga: GaConfig = Field(default_factory=GaConfig)
    tabu: TabuConfig = Field(default_factory=TabuConfig)
    forbidden_zones: ForbiddenZoneSpec = Field(default_factory=ForbiddenZoneSpec)
    eta_bps: List[float] = Field(default_factory=lambda: [100e6], min_length=1)
    n_instances: int = Field(20, ge=1)
    n_fading_draws: int = Field(default_factory=lambda: settings.DEFAULT_FADING_DRAWS, ge=1)
    master_seed: int = Field(0, ge=0)
    backhaul_interference: bool = False
    backhaul_fading: bool = False
    sweep: Optional[SweepSpec] = None
    temporal: Optional[TemporalConfig] = None
    output: Optional[str] = None

    @field_validator("eta_bps")
    @classmethod
    def _eta_non_negative(cls, v: List[float]) -> List[float]:
        if any(x < 0 for x in v):
            raise ValueError("eta_bps values must be >= 0")
        return v


# --- result records --------------------------------------------------------------


class CoverageRecord(BaseModel):
    """One (instance, sweep value, eta) coverage row."""

    scenario: str
    instance: int
    seed: int
    sweep_param: Optional[str] = None
    sweep_value: Optional[float] = None
    lambda_m: float
    lambda_s: float
    lambda_u: float
    lambda_bl: float
    lambda_t: float
    lambda_temp: float = 0.0
    psi: float
    p_s_dbm: float
    n_sbs: int
    n_non_iab: int
    eta_bps: float
    rho: float
    mean_rate_bps: float
    p5_rate_bps: float
    p95_rate_bps: float
    evaluations: int = 0


class TraceRecord(BaseModel):
    scenario: str
    instance: int
    sweep_value: Optional[float] = None
    iteration: int
    queen_rho: float
    evals_so_far: int


class RoutingRecord(BaseModel):
    scenario: str
    instance: int
    sweep_value: Optional[float] = None
    lambda_temp: float
    p_s_dbm: float
    deployment_kind: str
    access_update_pct: float
    backhaul_update_pct: float
    rho_before: float
    rho_after: float
    rho_frozen: float


# --- HTTP surface ----------------------------------------------------------------


class ValidateResponse(BaseModel):
    ok: bool = True
    config_hash: str


class RunSummary(BaseModel):
    run_id: str
    name: str
    scenario: str
    config_hash: str
    code_version: str
    created_at: datetime
    n_records: int
    summary: List[Dict[str, Any]] = Field(default_factory=list)


class RunResponse(RunSummary):
    records: List[Dict[str, Any]] = Field(default_factory=list)
    traces: List[Dict[str, Any]] = Field(default_factory=list)
    routing: List[Dict[str, Any]] = Field(default_factory=list)


class ForwardRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bap_address: int = Field(..., ge=0, le=1023)
    path_id: int = Field(..., ge=0, le=1023)
    ingress: str = Field("donor-DU", description="Node the packet enters at")
    topology: Optional[Dict[str, Any]] = Field(None, description="Topology document; default is the two-path example")


class ForwardResponse(BaseModel):
    path: List[str]
    delivered: bool
    reason: Optional[str] = None
    header_hex: str


class HealthCheck(BaseModel):
    """Schema for health check response."""

    status: str = Field(..., description="Service status")
    service: str = Field(..., description="Service name")
    version: str = Field(..., description="API version")
    build_sha: str = Field("unknown", description="Code version")


class ErrorBody(BaseModel):
    code: str
    message: str
    detail: Optional[Any] = None


class ErrorResponse(BaseModel):
    """Schema for error responses."""

    error: ErrorBody
