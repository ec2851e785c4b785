"""
Network evaluation: association, bandwidth split, rates and coverage.
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from iabplan.channel import Transmitter, avg_rx_power_dbm, interference_access, interference_backhaul
from iabplan.errors import ConfigurationError, ParameterError, UndefinedCoverageError
from iabplan.geometry import NetworkInstance, Region, is_los
from iabplan.network import (
    KIND_IAB_SBS,
    KIND_MBS,
    KIND_NON_IAB_SBS,
    Deployment,
    NetworkParams,
    TxPowers,
    access_interference_mw,
    allocate_bandwidth,
    associate,
    backhaul_interference_mw,
    build_links,
    coverage,
    rate_from_sinr,
    simulate_rates,
    ue_rate,
)

from .conftest import make_instance


def _allocated(instance, deployment, params):
    links = build_links(instance, deployment, params)
    return links, allocate_bandwidth(associate(instance, deployment, params, links), deployment)


class TestDeployment:
    def test_psi_out_of_range(self, instance):
        with pytest.raises(ParameterError):
            Deployment.from_instance(instance, psi=1.5)

    def test_bandwidth_must_be_positive(self, instance):
        with pytest.raises(ParameterError):
            Deployment.from_instance(instance, bandwidth_hz=0.0)

    def test_non_iab_index_range(self, instance):
        with pytest.raises(ParameterError):
            Deployment.from_instance(instance, non_iab=[instance.n_sbs])

    def test_positions_kept_by_identity(self, deployment):
        assert deployment.with_non_iab([1]).sbs_positions is deployment.sbs_positions

    def test_macro_only(self, deployment):
        macro = deployment.macro_only()
        assert macro.n_sbs == 0 and macro.n_non_iab == 0


class TestAssociation:
    def test_ues_pick_strongest_average_power(self, instance, deployment, params):
        ch = params.channel
        powers = deployment.powers
        bs = [(tuple(p), powers.mbs_dbm, ch.mbs_gains[0]) for p in instance.mbs]
        bs += [(tuple(p), powers.sbs_dbm, ch.sbs_gains[0]) for p in instance.sbs]
        table = np.empty((len(bs), instance.n_ues))
        for b, (position, p_tx, g_tx) in enumerate(bs):
            for u, ue in enumerate(instance.ues):
                los = is_los(position, tuple(ue), instance.walls)
                r = max(math.dist(position, ue), 1.0)
                table[b, u] = avg_rx_power_dbm(p_tx, r, los, ch, g_tx, ch.ue_gain_dbi)
        assoc = associate(instance, deployment, params)
        assert_array_equal(assoc.ue_assoc, np.argmax(table, axis=0))
        assert assoc.loads.sum() == instance.n_ues

    def test_equal_power_tie_goes_to_lowest_index(self, params):
        inst = NetworkInstance(
            region=Region(radius=200.0),
            mbs=np.array([[100.0, 0.0], [-100.0, 0.0]]),
            sbs=np.array([[0.0, 50.0]]),
            ues=np.array([[0.0, 0.0]]),
        )
        assoc = associate(inst, Deployment.from_instance(inst), params)
        assert assoc.ue_assoc.tolist() == [0]
        assert assoc.sbs_assoc.tolist() == [0]

    def test_scaling_all_powers_keeps_associations(self, instance, params):
        base = Deployment.from_instance(instance, non_iab=[1])
        louder = Deployment.from_instance(instance, non_iab=[1], powers=TxPowers(47.0, 31.0, 7.0))
        a = associate(instance, base, params)
        b = associate(instance, louder, params)
        assert_array_equal(a.ue_assoc, b.ue_assoc)
        assert_array_equal(a.sbs_assoc, b.sbs_assoc)

    def test_backhaul_picks_minimum_loss_donor(self, instance, deployment, params):
        links = build_links(instance, deployment, params)
        assoc = associate(instance, deployment, params, links)
        for s in range(deployment.n_sbs):
            if s in deployment.non_iab:
                assert assoc.sbs_assoc[s] == -1
            else:
                assert assoc.sbs_assoc[s] == np.argmin(links.backhaul.loss_db[:, s])

    def test_bs_kinds(self, instance, deployment, params):
        assoc = associate(instance, deployment, params)
        m = instance.n_mbs
        assert (assoc.bs_kind[:m] == KIND_MBS).all()
        assert assoc.bs_kind[m + 0] == KIND_NON_IAB_SBS
        assert assoc.bs_kind[m + 1] == KIND_IAB_SBS

    def test_no_base_station(self, params):
        inst = NetworkInstance(region=Region(radius=100.0), mbs=None, sbs=None, ues=np.array([[1.0, 2.0]]))
        with pytest.raises(ConfigurationError):
            associate(inst, Deployment.from_instance(inst), params)

    def test_iab_sbs_without_donor(self, params):
        inst = NetworkInstance(
            region=Region(radius=100.0), mbs=None, sbs=np.array([[0.0, 0.0]]), ues=np.array([[10.0, 0.0]])
        )
        with pytest.raises(ConfigurationError):
            associate(inst, Deployment.from_instance(inst), params)

    def test_non_iab_only_network_needs_no_mbs(self, params):
        inst = NetworkInstance(
            region=Region(radius=100.0), mbs=None, sbs=np.array([[0.0, 0.0]]), ues=np.array([[10.0, 0.0]])
        )
        assoc = associate(inst, Deployment.from_instance(inst, non_iab=[0]), params)
        assert assoc.ue_assoc.tolist() == [0]


class TestBandwidth:
    @pytest.mark.acceptance
    def test_conservation_on_random_instances(self, params):
        for seed in range(100):
            inst = make_instance(seed, n_mbs=3, n_sbs=8, n_ues=40, n_walls=30)
            dep = Deployment.from_instance(inst, non_iab=[seed % 8], psi=0.3 + 0.004 * seed)
            _, assoc = _allocated(inst, dep, params)
            b, psi, m = dep.bandwidth_hz, dep.psi, inst.n_mbs
            for donor in range(m):
                children = np.flatnonzero(assoc.sbs_assoc == donor)
                if assoc.loads[m + children].sum() > 0:
                    assert assoc.backhaul_bw[children].sum() == pytest.approx(psi * b)
            for node in np.flatnonzero(assoc.loads):
                served = assoc.access_bw[assoc.ue_assoc == node]
                assert served.sum() == pytest.approx(assoc.node_access_bw[node])
            assert assoc.backhaul_bw[sorted(dep.non_iab)].sum() == 0.0

    def test_node_access_shares(self, instance, deployment, params):
        _, assoc = _allocated(instance, deployment, params)
        b, psi, m = deployment.bandwidth_hz, deployment.psi, instance.n_mbs
        assert assoc.node_access_bw[0] == pytest.approx((1 - psi) * b)
        assert assoc.node_access_bw[m + 0] == pytest.approx(b)
        assert assoc.node_access_bw[m + 1] == pytest.approx((1 - psi) * b)

    def test_idle_sbs_gets_no_backhaul(self, params):
        inst = make_instance(3, n_mbs=1, n_sbs=2, n_ues=1, n_walls=0)
        dep = Deployment.from_instance(inst)
        _, assoc = _allocated(inst, dep, params)
        idle = [s for s in range(2) if assoc.loads[1 + s] == 0]
        for s in idle:
            assert assoc.backhaul_bw[s] == 0.0


class TestInterference:
    """Vectorized sums against the one-transmitter-at-a-time sums of the channel module."""

    @staticmethod
    def _network(seed):
        inst = make_instance(seed, n_mbs=3, n_sbs=2, n_ues=8, n_walls=20)
        dep = Deployment.from_instance(inst)
        params = NetworkParams()
        links = build_links(inst, dep, params)
        assoc = associate(inst, dep, params, links)
        bore = np.random.default_rng(seed).uniform(-np.pi, np.pi, links.n_bs)
        tx = [
            Transmitter(
                node_id=str(b),
                position=tuple(links.bs_positions[b]),
                power_dbm=float(links.bs_power_dbm[b]),
                main_lobe_dbi=float(links.bs_main_dbi[b]),
                side_lobe_dbi=float(links.bs_side_dbi[b]),
                boresight=float(bore[b]),
            )
            for b in range(links.n_bs)
        ]
        return inst, params, links, assoc, bore, tx

    @pytest.mark.parametrize("seed", range(5))
    def test_access_sum(self, seed):
        inst, params, links, assoc, bore, tx = self._network(seed)
        fading = np.ones((links.n_bs, inst.n_ues))
        expected = []
        for u in range(inst.n_ues):
            serving = int(assoc.ue_assoc[u])
            others = [b for b in range(links.n_bs) if b != serving]
            fading[others, u] = np.random.default_rng(100 + u).exponential(1.0, size=len(others))
            expected.append(
                interference_access(inst.ues[u], str(serving), tx, inst, params.channel, np.random.default_rng(100 + u))
            )
        assert_allclose(access_interference_mw(links, assoc, bore, params, fading), expected, rtol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_backhaul_sum(self, seed):
        inst, params, links, assoc, bore, tx = self._network(seed)
        got = backhaul_interference_mw(links, assoc, bore, params)
        for s in range(links.n_sbs):
            donor = int(assoc.sbs_assoc[s])
            sbs, mbs = inst.sbs[s], inst.mbs[donor]
            facing = math.atan2(mbs[1] - sbs[1], mbs[0] - sbs[0])
            expected = interference_backhaul(sbs, facing, str(donor), tx[: links.n_mbs], inst, params.channel)
            assert expected > 0.0
            assert got[s] == pytest.approx(expected, rel=1e-9)


class TestRates:
    def test_mbs_ue_ignores_backhaul(self):
        rate = rate_from_sinr(KIND_MBS, 1e8, 3.0, 0.0, 0.0, 1)
        assert rate == pytest.approx(2e8)

    def test_iab_ue_limited_by_backhaul_share(self):
        # access 1e8 * log2(4) = 2e8, backhaul 4e8 * log2(2) / 4 = 1e8
        assert rate_from_sinr(KIND_IAB_SBS, 1e8, 3.0, 4e8, 1.0, 4) == pytest.approx(1e8)

    def test_iab_ue_limited_by_access(self):
        assert rate_from_sinr(KIND_IAB_SBS, 1e8, 1.0, 4e8, 15.0, 1) == pytest.approx(1e8)

    def test_non_iab_ue_gets_access_rate(self):
        assert rate_from_sinr(KIND_NON_IAB_SBS, 1e8, 3.0, 0.0, 0.0, 5) == pytest.approx(2e8)

    def test_vectorized(self):
        out = rate_from_sinr(
            np.array([KIND_MBS, KIND_IAB_SBS]), np.array([1e8, 1e8]), np.array([1.0, 1.0]),
            np.array([0.0, 1e8]), np.array([0.0, 0.0]), np.array([1, 1]),
        )
        assert_allclose(out, [1e8, 0.0])

    def test_draw_shape_and_determinism(self, instance, deployment, params):
        a = simulate_rates(instance, deployment, params, 5, np.random.default_rng(4))
        b = simulate_rates(instance, deployment, params, 5, np.random.default_rng(4))
        assert a.rates.shape == (5, instance.n_ues)
        assert a.backhaul_sinr.shape == (5, deployment.n_sbs)
        assert_array_equal(a.rates, b.rates)
        assert (a.rates >= 0).all()

    def test_backhaul_interference_never_helps(self, instance, deployment):
        quiet = simulate_rates(instance, deployment, NetworkParams(), 6, np.random.default_rng(5))
        loud = simulate_rates(
            instance, deployment, NetworkParams(backhaul_interference=True), 6, np.random.default_rng(5)
        )
        assert (loud.rates <= quiet.rates + 1e-6).all()

    def test_single_ue_rate(self, instance, deployment, params):
        _, assoc = _allocated(instance, deployment, params)
        rate = ue_rate(0, assoc, instance, deployment, params, np.random.default_rng(6))
        assert rate >= 0.0
        with pytest.raises(ParameterError):
            ue_rate(instance.n_ues, assoc, instance, deployment, params, np.random.default_rng(6))

    def test_draw_count_validated(self, instance, deployment, params):
        with pytest.raises(ParameterError):
            simulate_rates(instance, deployment, params, 0, np.random.default_rng(0))


class TestCoverage:
    def test_rho_is_fraction_meeting_eta(self, instance, deployment, params):
        report = coverage(instance, deployment, params, 100e6, 8, np.random.default_rng(1))
        assert report.rho == pytest.approx(np.mean(report.rates >= 100e6))
        assert 0.0 <= report.rho <= 1.0
        assert report.metadata["n_fading_draws"] == 8

    @pytest.mark.acceptance
    def test_rho_non_increasing_in_eta(self, params):
        etas = [0.0, 25e6, 50e6, 100e6, 150e6, 300e6, 1e9]
        for seed in range(100):
            inst = make_instance(seed, n_mbs=2, n_sbs=6, n_ues=30, n_walls=20)
            dep = Deployment.from_instance(inst, non_iab=[seed % 6])
            report = coverage(inst, dep, params, 100e6, 3, np.random.default_rng(seed))
            values = [report.rho_at(eta) for eta in etas]
            assert values[0] == 1.0
            assert all(b <= a for a, b in zip(values, values[1:]))

    def test_summary_keys(self, instance, deployment, params):
        summary = coverage(instance, deployment, params, 100e6, 4, np.random.default_rng(2)).summary(50e6)
        assert set(summary) == {"eta_bps", "rho", "mean_rate_bps", "p5_rate_bps", "p95_rate_bps"}
        assert summary["eta_bps"] == 50e6
        assert summary["p5_rate_bps"] <= summary["p95_rate_bps"]

    def test_zero_ues_is_undefined(self, params):
        inst = NetworkInstance(region=Region(radius=100.0), mbs=np.array([[0.0, 0.0]]), sbs=None, ues=None)
        with pytest.raises(UndefinedCoverageError):
            coverage(inst, Deployment.from_instance(inst), params, 1e8, 2, np.random.default_rng(0))

    def test_same_seed_same_rho(self, instance, deployment, params):
        a = coverage(instance, deployment, params, 1e8, 4, np.random.default_rng(9)).rho
        b = coverage(instance, deployment, params, 1e8, 4, np.random.default_rng(9)).rho
        assert a == b
