"""
Link budgets for the mmWave channel.

All losses are computed in dB (close-in path loss plus FITU-R foliage loss)
and converted to linear power once. Rayleigh small-scale fading enters only
through `instantaneous_rx_power`, as an exponential(1) power factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConsistencyError, ParameterError
from .geometry import NetworkInstance, TreeLine, crossing_matrix, link_array

THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class ChannelParams:
    """
    Carrier, propagation and antenna parameters.

    main_lobe_dbi / side_lobe_dbi apply to every base station unless the
    SBS-specific overrides are set. UEs are omni-directional.
    """

    carrier_ghz: float = 28.0
    alpha_los: float = 3.0
    alpha_nlos: float = 4.0
    main_lobe_dbi: float = 18.0
    side_lobe_dbi: float = -2.0
    hpbw_deg: float = 30.0
    noise_figure_db: float = 5.0
    ue_gain_dbi: float = 0.0
    sbs_main_lobe_dbi: Optional[float] = None
    sbs_side_lobe_dbi: Optional[float] = None
    reference_loss_db: Optional[float] = None
    noise_power_dbm: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.carrier_ghz > 0:
            raise ParameterError(f"carrier_ghz must be > 0, got {self.carrier_ghz}")
        if not self.alpha_los > 0:
            raise ParameterError(f"alpha_los must be > 0, got {self.alpha_los}")
        if self.alpha_nlos < self.alpha_los:
            raise ParameterError(
                f"alpha_nlos ({self.alpha_nlos}) must be >= alpha_los ({self.alpha_los})"
            )
        if not 0.0 < self.hpbw_deg < 360.0:
            raise ParameterError(f"hpbw_deg must lie in (0, 360), got {self.hpbw_deg}")

    @property
    def gamma_1m_db(self) -> float:
        """Reference path loss at one meter."""
        if self.reference_loss_db is not None:
            return self.reference_loss_db
        return 32.4 + 20.0 * math.log10(self.carrier_ghz)

    @property
    def half_beamwidth_rad(self) -> float:
        return math.radians(self.hpbw_deg) / 2.0

    @property
    def mbs_gains(self) -> Tuple[float, float]:
        return self.main_lobe_dbi, self.side_lobe_dbi

    @property
    def sbs_gains(self) -> Tuple[float, float]:
        main = self.main_lobe_dbi if self.sbs_main_lobe_dbi is None else self.sbs_main_lobe_dbi
        side = self.side_lobe_dbi if self.sbs_side_lobe_dbi is None else self.sbs_side_lobe_dbi
        return main, side


@dataclass(frozen=True)
class LinkBudget:
    tx: str
    rx: str
    distance: float
    los: bool
    path_loss: float
    foliage_loss: float
    tx_gain: float
    rx_gain: float
    avg_rx_power: float


# --- unit conversion ----------------------------------------------------------


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(mw, dtype=float))


# --- propagation ----------------------------------------------------------------


def path_loss_db(r, los, params: ChannelParams):
    """
    Close-in model: gamma_1m + 10 * alpha * log10(r), alpha picked by LoS state.
    Distances below one meter are clamped to one meter.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise ParameterError("link distance must be > 0")
    alpha = np.where(np.asarray(los, dtype=bool), params.alpha_los, params.alpha_nlos)
    pl = params.gamma_1m_db + 10.0 * alpha * np.log10(np.maximum(r_arr, 1.0))
    return float(pl) if np.ndim(pl) == 0 else pl


def wrap_angle(theta):
    """Wrap to [-pi, pi)."""
    return (np.asarray(theta, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


def antenna_gain(
    boresight_dir,
    target_dir,
    params: ChannelParams,
    main_lobe_dbi: Optional[float] = None,
    side_lobe_dbi: Optional[float] = None,
):
    """Sectored pattern: main lobe within +/- HPBW/2 of boresight (boundary included)."""
    main = params.main_lobe_dbi if main_lobe_dbi is None else main_lobe_dbi
    side = params.side_lobe_dbi if side_lobe_dbi is None else side_lobe_dbi
    phi = np.abs(wrap_angle(np.asarray(target_dir, dtype=float) - np.asarray(boresight_dir, dtype=float)))
    gain = np.where(phi <= params.half_beamwidth_rad + 1e-12, main, side)
    return float(gain) if np.ndim(gain) == 0 else gain


def tree_loss_db(in_leaf, depth, carrier_ghz: float):
    """FITU-R foliage loss of one crossing, frequency in MHz."""
    f_mhz = carrier_ghz * 1000.0
    depth = np.asarray(depth, dtype=float)
    leaf = 0.39 * f_mhz**0.39 * depth**0.25
    bare = 0.37 * f_mhz**0.18 * depth**0.59
    return np.where(np.asarray(in_leaf, dtype=bool), leaf, bare)


def foliage_loss_db(crossings: Iterable[TreeLine], carrier_ghz: float) -> float:
    if not carrier_ghz > 0:
        raise ParameterError(f"carrier frequency must be > 0, got {carrier_ghz}")
    trees = list(crossings)
    if not trees:
        return 0.0
    losses = tree_loss_db([t.in_leaf for t in trees], [t.depth for t in trees], carrier_ghz)
    return float(np.sum(losses))


def avg_rx_power_dbm(
    tx_power_dbm,
    distance,
    los,
    params: ChannelParams,
    tx_gain_dbi=0.0,
    rx_gain_dbi=0.0,
    foliage_db=0.0,
):
    """Fading-averaged received power: P_t + G_tx + G_rx - PL - kappa."""
    p = (
        np.asarray(tx_power_dbm, dtype=float)
        + tx_gain_dbi
        + rx_gain_dbi
        - path_loss_db(distance, los, params)
        - foliage_db
    )
    return float(p) if np.ndim(p) == 0 else p


def instantaneous_rx_power(avg_rx_power_dbm_value, rng: np.random.Generator, size=None):
    """Linear received power (mW) under Rayleigh fading: exponential(1) power factor."""
    avg = dbm_to_mw(avg_rx_power_dbm_value)
    shape = np.shape(avg) if size is None else size
    draw = rng.exponential(1.0, size=shape)
    out = avg * draw
    return float(out) if np.ndim(out) == 0 else out


def noise_power_mw(bandwidth_hz, params: ChannelParams):
    bw = np.asarray(bandwidth_hz, dtype=float)
    if np.any(~(bw > 0)):
        raise ParameterError("bandwidth must be > 0")
    if params.noise_power_dbm is not None:
        return dbm_to_mw(np.full_like(bw, params.noise_power_dbm))
    return dbm_to_mw(THERMAL_NOISE_DBM_HZ + 10.0 * np.log10(bw) + params.noise_figure_db)


def sinr(signal_mw, interference_mw, bandwidth_hz, params: ChannelParams):
    signal = np.asarray(signal_mw, dtype=float)
    interference = np.asarray(interference_mw, dtype=float)
    if np.any(signal < 0) or np.any(interference < 0):
        raise ParameterError("signal and interference must be >= 0")
    out = signal / (interference + noise_power_mw(bandwidth_hz, params))
    return float(out) if np.ndim(out) == 0 else out


# --- link tables ------------------------------------------------------------------


@dataclass(frozen=True)
class LinkTable:
    """Geometry-dependent quantities for every tx -> rx pair, each shaped (T, R)."""

    distance: np.ndarray
    los: np.ndarray
    path_loss: np.ndarray
    foliage: np.ndarray
    angle: np.ndarray

    @property
    def loss_db(self) -> np.ndarray:
        return self.path_loss + self.foliage


def build_link_table(
    tx: np.ndarray, rx: np.ndarray, instance: NetworkInstance, params: ChannelParams
) -> LinkTable:
    tx = np.asarray(tx, dtype=float).reshape(-1, 2)
    rx = np.asarray(rx, dtype=float).reshape(-1, 2)
    shape = (len(tx), len(rx))
    dx = rx[None, :, 0] - tx[:, None, 0]
    dy = rx[None, :, 1] - tx[:, None, 1]
    distance = np.maximum(np.hypot(dx, dy), 1.0)
    angle = np.arctan2(dy, dx)
    links = link_array(tx, rx)
    los = ~crossing_matrix(links, instance.blocker_segments).any(axis=1).reshape(shape)
    if len(instance.trees):
        hits = crossing_matrix(links, instance.tree_segments)
        per_tree = tree_loss_db(
            [t.in_leaf for t in instance.trees], [t.depth for t in instance.trees], params.carrier_ghz
        )
        foliage = (hits @ per_tree).reshape(shape)
    else:
        foliage = np.zeros(shape)
    return LinkTable(
        distance=distance,
        los=los,
        path_loss=path_loss_db(distance, los, params),
        foliage=foliage,
        angle=angle,
    )


def link_budget(
    tx_id: str,
    rx_id: str,
    tx_pos,
    rx_pos,
    instance: NetworkInstance,
    params: ChannelParams,
    tx_power_dbm: float,
    tx_gain_dbi: float,
    rx_gain_dbi: float,
) -> LinkBudget:
    table = build_link_table(np.asarray(tx_pos), np.asarray(rx_pos), instance, params)
    pl = float(table.path_loss[0, 0])
    kappa = float(table.foliage[0, 0])
    return LinkBudget(
        tx=tx_id,
        rx=rx_id,
        distance=float(table.distance[0, 0]),
        los=bool(table.los[0, 0]),
        path_loss=pl,
        foliage_loss=kappa,
        tx_gain=tx_gain_dbi,
        rx_gain=rx_gain_dbi,
        avg_rx_power=tx_power_dbm + tx_gain_dbi + rx_gain_dbi - pl - kappa,
    )


# --- aggregate interference ---------------------------------------------------------


@dataclass(frozen=True)
class Transmitter:
    """A base station as seen by an interference sum: where it is and where it points."""

    node_id: str
    position: Tuple[float, float]
    power_dbm: float
    main_lobe_dbi: float
    side_lobe_dbi: float
    boresight: float


def _direction(a, b) -> float:
    return math.atan2(float(b[1]) - float(a[1]), float(b[0]) - float(a[0]))


def _interference_terms(
    rx_pos,
    serving_id: str,
    transmitters: Sequence[Transmitter],
    instance: NetworkInstance,
    params: ChannelParams,
    rx_gain,
) -> np.ndarray:
    ids = [t.node_id for t in transmitters]
    if serving_id not in ids:
        raise ConsistencyError(f"serving node {serving_id!r} is not among the transmitters")
    others = [t for t in transmitters if t.node_id != serving_id]
    if not others:
        return np.zeros(0)
    avg = []
    for t in others:
        table = build_link_table(np.asarray(t.position), np.asarray(rx_pos), instance, params)
        direction = _direction(t.position, rx_pos)
        g_tx = antenna_gain(t.boresight, direction, params, t.main_lobe_dbi, t.side_lobe_dbi)
        avg.append(
            t.power_dbm
            + g_tx
            + rx_gain(t)
            - float(table.path_loss[0, 0])
            - float(table.foliage[0, 0])
        )
    return np.asarray(avg)


def interference_access(
    ue_pos,
    serving_id: str,
    transmitters: Sequence[Transmitter],
    instance: NetworkInstance,
    params: ChannelParams,
    rng: np.random.Generator,
) -> float:
    """Sum of faded powers from every BS except the serving one, UE gain fixed."""
    terms = _interference_terms(
        ue_pos, serving_id, transmitters, instance, params, lambda _t: params.ue_gain_dbi
    )
    if len(terms) == 0:
        return 0.0
    return float(np.sum(instantaneous_rx_power(terms, rng)))


def interference_backhaul(
    sbs_pos,
    sbs_boresight: float,
    serving_id: str,
    donors: Sequence[Transmitter],
    instance: NetworkInstance,
    params: ChannelParams,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Backhaul interference at an IAB node from the non-serving donors; the SBS
    receive beam points at its own donor. Without an rng the fading-averaged
    sum is returned.
    """
    main, side = params.sbs_gains

    def rx_gain(t: Transmitter) -> float:
        return antenna_gain(sbs_boresight, _direction(sbs_pos, t.position), params, main, side)

    terms = _interference_terms(sbs_pos, serving_id, donors, instance, params, rx_gain)
    if len(terms) == 0:
        return 0.0
    if rng is None:
        return float(np.sum(dbm_to_mw(terms)))
    return float(np.sum(instantaneous_rx_power(terms, rng)))
