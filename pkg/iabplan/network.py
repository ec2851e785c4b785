"""
Two-hop IAB network evaluation: association, bandwidth allocation, rates and
service coverage probability for one deployment on one instance.

Base stations are indexed MBS first, then SBS: index b < n_mbs is an MBS and
index n_mbs + s is SBS s. Ties in every argmax/argmin go to the lowest index.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, FrozenSet, Iterable, Optional

import numpy as np

from .channel import ChannelParams, LinkTable, build_link_table, dbm_to_mw, noise_power_mw, wrap_angle
from .errors import ConfigurationError, ConsistencyError, ParameterError, UndefinedCoverageError
from .geometry import NetworkInstance

logger = logging.getLogger(__name__)

KIND_MBS = 0
KIND_IAB_SBS = 1
KIND_NON_IAB_SBS = 2


@dataclass(frozen=True)
class TxPowers:
    mbs_dbm: float = 40.0
    sbs_dbm: float = 24.0
    ue_dbm: float = 0.0


@dataclass(frozen=True, eq=False)
class Deployment:
    """Decision variables: SBS coordinates and the SBSs with non-IAB backhaul."""

    sbs_positions: np.ndarray
    non_iab: FrozenSet[int] = frozenset()
    psi: float = 0.5
    bandwidth_hz: float = 1e9
    powers: TxPowers = field(default_factory=TxPowers)

    def __post_init__(self) -> None:
        positions = self.sbs_positions
        frozen = (
            isinstance(positions, np.ndarray)
            and positions.dtype == float
            and positions.ndim == 2
            and not positions.flags.writeable
        )
        if not frozen:
            positions = np.array(positions, dtype=float).reshape(-1, 2)
            positions.setflags(write=False)
        object.__setattr__(self, "sbs_positions", positions)
        object.__setattr__(self, "non_iab", frozenset(int(i) for i in self.non_iab))
        if not 0.0 <= self.psi <= 1.0:
            raise ParameterError(f"psi must lie in [0, 1], got {self.psi}", detail={"field": "psi"})
        if not self.bandwidth_hz > 0:
            raise ParameterError(f"bandwidth must be > 0, got {self.bandwidth_hz}")
        bad = [i for i in self.non_iab if not 0 <= i < len(positions)]
        if bad:
            raise ParameterError(f"non-IAB indices out of range: {sorted(bad)}")

    @classmethod
    def from_instance(cls, instance: NetworkInstance, non_iab: Iterable[int] = (), **kwargs: Any) -> "Deployment":
        return cls(sbs_positions=instance.sbs, non_iab=frozenset(non_iab), **kwargs)

    @property
    def n_sbs(self) -> int:
        return len(self.sbs_positions)

    @property
    def n_non_iab(self) -> int:
        return len(self.non_iab)

    def with_non_iab(self, non_iab: Iterable[int]) -> "Deployment":
        return replace(self, non_iab=frozenset(non_iab))

    def with_positions(self, positions: np.ndarray) -> "Deployment":
        return replace(self, sbs_positions=np.asarray(positions, dtype=float))

    def macro_only(self) -> "Deployment":
        return replace(self, sbs_positions=np.zeros((0, 2)), non_iab=frozenset())


@dataclass(frozen=True)
class NetworkParams:
    """
    Channel parameters plus the backhaul evaluation mode. Backhaul links are
    noise-limited and fading-averaged unless the flags say otherwise.
    """

    channel: ChannelParams = field(default_factory=ChannelParams)
    backhaul_interference: bool = False
    backhaul_fading: bool = False

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- link geometry ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NetworkLinks:
    """BS->UE and MBS->SBS link tables plus per-BS transmit parameters."""

    n_mbs: int
    n_sbs: int
    access: LinkTable
    backhaul: LinkTable
    bs_positions: np.ndarray
    bs_power_dbm: np.ndarray
    bs_main_dbi: np.ndarray
    bs_side_dbi: np.ndarray

    @property
    def n_bs(self) -> int:
        return self.n_mbs + self.n_sbs

    def avg_access_power_dbm(self, ue_gain_dbi: float) -> np.ndarray:
        """(B, U) fading-averaged power with the serving beam on the UE."""
        return (
            self.bs_power_dbm[:, None]
            + self.bs_main_dbi[:, None]
            + ue_gain_dbi
            - self.access.loss_db
        )


def build_links(instance: NetworkInstance, deployment: Deployment, params: NetworkParams) -> NetworkLinks:
    ch = params.channel
    bs = np.vstack([instance.mbs, deployment.sbs_positions]) if deployment.n_sbs else np.array(instance.mbs)
    m, s = instance.n_mbs, deployment.n_sbs
    mbs_main, mbs_side = ch.mbs_gains
    sbs_main, sbs_side = ch.sbs_gains
    p = deployment.powers
    return NetworkLinks(
        n_mbs=m,
        n_sbs=s,
        access=build_link_table(bs, instance.ues, instance, ch),
        backhaul=build_link_table(instance.mbs, deployment.sbs_positions, instance, ch),
        bs_positions=bs,
        bs_power_dbm=np.concatenate([np.full(m, p.mbs_dbm), np.full(s, p.sbs_dbm)]),
        bs_main_dbi=np.concatenate([np.full(m, mbs_main), np.full(s, sbs_main)]),
        bs_side_dbi=np.concatenate([np.full(m, mbs_side), np.full(s, sbs_side)]),
    )


# --- association ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AssociationState:
    """
    ue_assoc[u] is the serving BS index. sbs_assoc[s] is the donor MBS of SBS s,
    or -1 for a non-IAB SBS. Bandwidth arrays are filled by allocate_bandwidth.
    """

    n_mbs: int
    n_sbs: int
    ue_assoc: np.ndarray
    sbs_assoc: np.ndarray
    bs_kind: np.ndarray
    loads: np.ndarray
    node_access_bw: Optional[np.ndarray] = None
    access_bw: Optional[np.ndarray] = None
    backhaul_bw: Optional[np.ndarray] = None

    @property
    def allocated(self) -> bool:
        return self.access_bw is not None

    @property
    def backhaul_map(self) -> Dict[int, int]:
        return {int(s): int(m) for s, m in enumerate(self.sbs_assoc) if m >= 0}

    @property
    def ue_map(self) -> Dict[int, int]:
        return {int(u): int(b) for u, b in enumerate(self.ue_assoc)}

    def sbs_load(self, s: int) -> int:
        return int(self.loads[self.n_mbs + s])


def _bs_kinds(n_mbs: int, deployment: Deployment) -> np.ndarray:
    kinds = np.full(n_mbs + deployment.n_sbs, KIND_IAB_SBS, dtype=int)
    kinds[:n_mbs] = KIND_MBS
    for s in deployment.non_iab:
        kinds[n_mbs + s] = KIND_NON_IAB_SBS
    return kinds


def associate_ues(
    instance: NetworkInstance,
    deployment: Deployment,
    params: NetworkParams,
    links: Optional[NetworkLinks] = None,
) -> AssociationState:
    """Max fading-averaged received power over every MBS and SBS."""
    links = links or build_links(instance, deployment, params)
    if links.n_bs == 0:
        raise ConfigurationError("no base station in the network: cannot associate UEs")
    if instance.n_ues:
        ue_assoc = np.argmax(links.avg_access_power_dbm(params.channel.ue_gain_dbi), axis=0)
    else:
        ue_assoc = np.zeros(0, dtype=int)
    loads = np.bincount(ue_assoc, minlength=links.n_bs)
    return AssociationState(
        n_mbs=links.n_mbs,
        n_sbs=links.n_sbs,
        ue_assoc=ue_assoc,
        sbs_assoc=np.full(links.n_sbs, -1, dtype=int),
        bs_kind=_bs_kinds(links.n_mbs, deployment),
        loads=loads,
    )


def associate_backhaul(
    instance: NetworkInstance,
    deployment: Deployment,
    params: NetworkParams,
    links: Optional[NetworkLinks] = None,
) -> np.ndarray:
    """Minimum total path loss (LoS/NLoS plus foliage) donor for each IAB SBS."""
    links = links or build_links(instance, deployment, params)
    sbs_assoc = np.full(links.n_sbs, -1, dtype=int)
    iab = np.array([s for s in range(links.n_sbs) if s not in deployment.non_iab], dtype=int)
    if len(iab) == 0:
        return sbs_assoc
    if links.n_mbs == 0:
        raise ConfigurationError("IAB-backhauled SBSs need at least one MBS donor")
    sbs_assoc[iab] = np.argmin(links.backhaul.loss_db[:, iab], axis=0)
    return sbs_assoc


def associate(
    instance: NetworkInstance,
    deployment: Deployment,
    params: NetworkParams,
    links: Optional[NetworkLinks] = None,
) -> AssociationState:
    links = links or build_links(instance, deployment, params)
    state = associate_ues(instance, deployment, params, links)
    return replace(state, sbs_assoc=associate_backhaul(instance, deployment, params, links))


def allocate_bandwidth(assoc: AssociationState, deployment: Deployment) -> AssociationState:
    """
    Per-donor load-proportional backhaul shares and equal per-UE access shares.
    MBSs and IAB SBSs keep (1 - psi) B for access, non-IAB SBSs keep all of B.
    """
    b_total, psi = deployment.bandwidth_hz, deployment.psi
    m = assoc.n_mbs
    child_loads = assoc.loads[m:].astype(float)
    backhaul_bw = np.zeros(assoc.n_sbs)
    for donor in range(m):
        children = np.flatnonzero(assoc.sbs_assoc == donor)
        total = child_loads[children].sum()
        if total > 0:
            backhaul_bw[children] = psi * b_total * child_loads[children] / total

    node_access_bw = np.where(assoc.bs_kind == KIND_NON_IAB_SBS, b_total, (1.0 - psi) * b_total)
    loads = assoc.loads.astype(float)
    per_ue_node = np.divide(node_access_bw, loads, out=np.zeros_like(node_access_bw), where=loads > 0)
    access_bw = per_ue_node[assoc.ue_assoc] if len(assoc.ue_assoc) else np.zeros(0)
    return replace(assoc, node_access_bw=node_access_bw, access_bw=access_bw, backhaul_bw=backhaul_bw)


# --- beams, interference, SINR ------------------------------------------------------------


def served_directions(links: NetworkLinks, assoc: AssociationState):
    """
    Directions from each BS towards the nodes it serves (its UEs, plus child
    SBSs for an MBS), flattened CSR-style: (angles, offsets, counts).
    """
    per_bs = [[] for _ in range(links.n_bs)]
    for u, b in enumerate(assoc.ue_assoc):
        per_bs[b].append(links.access.angle[b, u])
    for s, donor in enumerate(assoc.sbs_assoc):
        if donor >= 0:
            per_bs[donor].append(links.backhaul.angle[donor, s])
    counts = np.array([len(a) for a in per_bs], dtype=int)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(int) if len(counts) else np.zeros(0, int)
    flat = np.array([a for angles in per_bs for a in angles], dtype=float)
    return flat, offsets, counts


def draw_boresights(directions, rng: np.random.Generator) -> np.ndarray:
    """Each active BS points at one of its served nodes, chosen uniformly; idle BSs get NaN."""
    flat, offsets, counts = directions
    pick = np.floor(rng.random(len(counts)) * np.maximum(counts, 1)).astype(int)
    out = np.full(len(counts), np.nan)
    active = counts > 0
    out[active] = flat[offsets[active] + pick[active]]
    return out


def access_interference_mw(
    links: NetworkLinks,
    assoc: AssociationState,
    boresights: np.ndarray,
    params: NetworkParams,
    fading: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Per-UE interference from every active, non-serving BS. Without fading the mean is returned."""
    ch = params.channel
    if links.n_bs == 0 or len(assoc.ue_assoc) == 0:
        return np.zeros(len(assoc.ue_assoc))
    active = ~np.isnan(boresights)
    offset = np.abs(wrap_angle(links.access.angle - np.nan_to_num(boresights)[:, None]))
    gain = np.where(offset <= ch.half_beamwidth_rad + 1e-12, links.bs_main_dbi[:, None], links.bs_side_dbi[:, None])
    power = dbm_to_mw(links.bs_power_dbm[:, None] + gain + ch.ue_gain_dbi - links.access.loss_db)
    if fading is not None:
        power = power * fading
    mask = active[:, None] & (np.arange(links.n_bs)[:, None] != assoc.ue_assoc[None, :])
    return np.sum(np.where(mask, power, 0.0), axis=0)


def backhaul_interference_mw(
    links: NetworkLinks,
    assoc: AssociationState,
    boresights: np.ndarray,
    params: NetworkParams,
    fading: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Per-SBS interference from the active non-donor MBSs; SBS receive beam on its donor."""
    ch = params.channel
    m = links.n_mbs
    out = np.zeros(links.n_sbs)
    if m == 0 or links.n_sbs == 0:
        return out
    mbs_bore = boresights[:m]
    active = ~np.isnan(mbs_bore)
    angle = links.backhaul.angle
    tx_off = np.abs(wrap_angle(angle - np.nan_to_num(mbs_bore)[:, None]))
    g_tx = np.where(tx_off <= ch.half_beamwidth_rad + 1e-12, links.bs_main_dbi[:m, None], links.bs_side_dbi[:m, None])
    sbs_main, sbs_side = ch.sbs_gains
    donors = assoc.sbs_assoc
    iab = donors >= 0
    rx_bore = np.zeros(links.n_sbs)
    rx_bore[iab] = angle[donors[iab], np.flatnonzero(iab)] + np.pi
    rx_off = np.abs(wrap_angle((angle + np.pi) - rx_bore[None, :]))
    g_rx = np.where(rx_off <= ch.half_beamwidth_rad + 1e-12, sbs_main, sbs_side)
    power = dbm_to_mw(links.bs_power_dbm[:m, None] + g_tx + g_rx - links.backhaul.loss_db)
    if fading is not None:
        power = power * fading
    mask = active[:, None] & (np.arange(m)[:, None] != donors[None, :]) & iab[None, :]
    return np.sum(np.where(mask, power, 0.0), axis=0)


def _safe_noise(bandwidth: np.ndarray, ch: ChannelParams) -> np.ndarray:
    noise = np.full(len(bandwidth), np.inf)
    ok = bandwidth > 0
    if np.any(ok):
        noise[ok] = noise_power_mw(bandwidth[ok], ch)
    return noise


def backhaul_signal_mw(links: NetworkLinks, assoc: AssociationState, params: NetworkParams) -> np.ndarray:
    """Fading-averaged donor -> SBS power with both beams aligned; 0 for non-IAB SBSs."""
    sbs_main, _ = params.channel.sbs_gains
    out = np.zeros(links.n_sbs)
    donors = assoc.sbs_assoc
    iab = np.flatnonzero(donors >= 0)
    if len(iab):
        d = donors[iab]
        out[iab] = dbm_to_mw(
            links.bs_power_dbm[d] + links.bs_main_dbi[d] + sbs_main - links.backhaul.loss_db[d, iab]
        )
    return out


def rate_from_sinr(kind, access_bw, sinr_access, backhaul_bw, sinr_backhaul, n_children_ues):
    """
    Per-UE rate (bps). MBS and non-IAB SBS UEs get their access rate; UEs of an
    IAB SBS get the minimum of the access rate and the SBS backhaul rate split
    equally over its UEs.
    """
    kind = np.asarray(kind)
    access = np.asarray(access_bw, dtype=float) * np.log2(1.0 + np.asarray(sinr_access, dtype=float))
    n = np.maximum(np.asarray(n_children_ues, dtype=float), 1.0)
    with np.errstate(invalid="ignore"):
        backhaul = np.asarray(backhaul_bw, dtype=float) * np.log2(1.0 + np.asarray(sinr_backhaul, dtype=float)) / n
    backhaul = np.nan_to_num(backhaul, nan=0.0)
    rate = np.where(kind == KIND_IAB_SBS, np.minimum(access, backhaul), access)
    return float(rate) if np.ndim(rate) == 0 else rate


@dataclass(frozen=True, eq=False)
class RateDraws:
    rates: np.ndarray
    access_sinr: np.ndarray
    backhaul_sinr: np.ndarray
    assoc: AssociationState


def simulate_rates(
    instance: NetworkInstance,
    deployment: Deployment,
    params: NetworkParams,
    n_draws: int,
    rng: np.random.Generator,
    links: Optional[NetworkLinks] = None,
    assoc: Optional[AssociationState] = None,
) -> RateDraws:
    """(draws, UEs) rate matrix. Access links see Rayleigh draws; backhaul per the params flags."""
    if n_draws < 1:
        raise ParameterError(f"n_fading_draws must be >= 1, got {n_draws}")
    links = links or build_links(instance, deployment, params)
    if assoc is None:
        assoc = associate(instance, deployment, params, links)
    if not assoc.allocated:
        assoc = allocate_bandwidth(assoc, deployment)
    if len(assoc.ue_assoc) != instance.n_ues:
        raise ConsistencyError("association does not cover every UE of the instance")
    ch = params.channel
    n_ues = instance.n_ues
    serving = assoc.ue_assoc
    kind = assoc.bs_kind[serving]
    avg_signal = dbm_to_mw(links.avg_access_power_dbm(ch.ue_gain_dbi)[serving, np.arange(n_ues)])
    access_noise = _safe_noise(assoc.access_bw, ch)
    bh_noise = _safe_noise(assoc.backhaul_bw, ch)
    bh_signal = backhaul_signal_mw(links, assoc, params)
    directions = served_directions(links, assoc)

    sbs_of_ue = np.where(serving >= links.n_mbs, serving - links.n_mbs, 0)
    n_j = assoc.loads[serving]

    rates = np.zeros((n_draws, n_ues))
    access_sinr = np.zeros((n_draws, n_ues))
    backhaul_sinr = np.zeros((n_draws, links.n_sbs))
    for d in range(n_draws):
        bore = draw_boresights(directions, rng)
        fading = rng.exponential(1.0, size=(links.n_bs, n_ues))
        interference = access_interference_mw(links, assoc, bore, params, fading)
        signal = avg_signal * fading[serving, np.arange(n_ues)]
        access_sinr[d] = signal / (interference + access_noise)

        bh_fading = rng.exponential(1.0, size=(links.n_mbs, links.n_sbs)) if params.backhaul_fading else None
        bh_sig = bh_signal
        if bh_fading is not None and links.n_sbs:
            donors = assoc.sbs_assoc
            iab = np.flatnonzero(donors >= 0)
            bh_sig = bh_signal.copy()
            bh_sig[iab] *= bh_fading[donors[iab], iab]
        bh_int = (
            backhaul_interference_mw(links, assoc, bore, params, bh_fading)
            if params.backhaul_interference
            else 0.0
        )
        backhaul_sinr[d] = bh_sig / (bh_int + bh_noise)

        bh_bw_ue = np.where(kind == KIND_IAB_SBS, assoc.backhaul_bw[sbs_of_ue] if links.n_sbs else 0.0, 0.0)
        bh_sinr_ue = np.where(kind == KIND_IAB_SBS, backhaul_sinr[d][sbs_of_ue] if links.n_sbs else 0.0, 0.0)
        rates[d] = rate_from_sinr(kind, assoc.access_bw, access_sinr[d], bh_bw_ue, bh_sinr_ue, n_j)
    return RateDraws(rates=rates, access_sinr=access_sinr, backhaul_sinr=backhaul_sinr, assoc=assoc)


def ue_rate(
    ue: int,
    assoc: AssociationState,
    instance: NetworkInstance,
    deployment: Deployment,
    params: NetworkParams,
    rng: np.random.Generator,
) -> float:
    """Rate of one UE under one fading draw."""
    if not 0 <= ue < instance.n_ues:
        raise ParameterError(f"UE index {ue} out of range")
    draws = simulate_rates(instance, deployment, params, 1, rng, assoc=assoc)
    return float(draws.rates[0, ue])


# --- coverage ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoverageReport:
    rates: np.ndarray
    eta_bps: float
    rho: float
    access_sinr: np.ndarray
    backhaul_sinr: np.ndarray
    assoc: AssociationState
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def per_ue_rate(self) -> np.ndarray:
        """Mean over fading draws, per UE."""
        return self.rates.mean(axis=0)

    def rho_at(self, eta_bps: float) -> float:
        return float(np.mean(self.rates >= eta_bps))

    def summary(self, eta_bps: Optional[float] = None) -> Dict[str, float]:
        eta = self.eta_bps if eta_bps is None else eta_bps
        flat = self.rates.ravel()
        return {
            "eta_bps": float(eta),
            "rho": self.rho_at(eta),
            "mean_rate_bps": float(flat.mean()),
            "p5_rate_bps": float(np.percentile(flat, 5)),
            "p95_rate_bps": float(np.percentile(flat, 95)),
        }


def coverage(
    instance: NetworkInstance,
    deployment: Deployment,
    params: NetworkParams,
    eta_bps: float,
    n_fading_draws: int,
    rng: np.random.Generator,
    links: Optional[NetworkLinks] = None,
    assoc: Optional[AssociationState] = None,
    seed: Optional[int] = None,
) -> CoverageReport:
    """Fraction of (UE, fading draw) pairs whose rate reaches eta."""
    if instance.n_ues == 0:
        raise UndefinedCoverageError("coverage is undefined for an instance without UEs")
    draws = simulate_rates(instance, deployment, params, n_fading_draws, rng, links=links, assoc=assoc)
    rho = float(np.mean(draws.rates >= eta_bps))
    return CoverageReport(
        rates=draws.rates,
        eta_bps=float(eta_bps),
        rho=rho,
        access_sinr=draws.access_sinr,
        backhaul_sinr=draws.backhaul_sinr,
        assoc=draws.assoc,
        metadata={"seed": seed, "params_hash": params.fingerprint(), "n_fading_draws": n_fading_draws},
    )
