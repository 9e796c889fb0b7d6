"""Link-model formulas: LOS probability, path loss, gains, interference, rate."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrstream.channel import (
    ChannelConfig,
    LinkState,
    achievable_rate,
    antenna_gain,
    db_to_linear,
    dbm_to_watts,
    effective_path_loss,
    instantaneous_interference,
    linear_to_db,
    link_sinr,
    los_probability,
    mainlobe_gain,
    path_loss_db,
    sampled_path_loss,
    sinr,
    thermal_noise_w,
    update_interference_ema,
    watts_to_dbm,
)

CFG = ChannelConfig()


class TestLosProbability:
    def test_close_range_is_certain(self):
        assert los_probability(5.0) == 1.0
        assert los_probability(0.0) == 1.0

    def test_middle_branch(self):
        assert los_probability(49.0) == pytest.approx(math.exp(-44.0 / 70.8), abs=1e-12)
        assert los_probability(49.0) == pytest.approx(0.5372, abs=1e-3)

    def test_far_branch(self):
        assert los_probability(100.0) == pytest.approx(
            0.54 * math.exp(-51.0 / 211.7), abs=1e-12
        )
        assert los_probability(100.0) == pytest.approx(0.4244, abs=1e-3)

    def test_continuous_at_5(self):
        assert los_probability(5.0 + 1e-9) == pytest.approx(1.0, abs=1e-9)

    def test_jump_at_49_is_small_and_upward(self):
        left = los_probability(49.0)
        right = los_probability(49.0 + 1e-12)
        assert right == pytest.approx(0.54, abs=1e-9)
        assert 0.0 < right - left < 0.47

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            los_probability(-1.0)

    def test_vectorized(self):
        d = np.array([0.0, 5.0, 20.0, 49.0, 80.0])
        p = los_probability(d)
        assert p.shape == (5,)
        assert p[0] == p[1] == 1.0
        assert np.all(np.diff(p[1:4]) < 0)


class TestPathLoss:
    def test_los_at_1m(self):
        expected = 32.4 + 20.0 * math.log10(28.0)
        assert path_loss_db(1.0, True, CFG) == pytest.approx(expected, abs=1e-9)
        assert path_loss_db(1.0, True, CFG) == pytest.approx(61.34, abs=0.01)

    def test_los_at_10m(self):
        expected = 32.4 + 17.3 + 20.0 * math.log10(28.0)
        assert path_loss_db(10.0, True, CFG) == pytest.approx(expected, abs=1e-9)
        assert path_loss_db(10.0, True, CFG) == pytest.approx(78.64, abs=0.01)

    def test_nlos_never_below_los(self):
        d = np.linspace(1.0, 140.0, 300)
        assert np.all(path_loss_db(d, False, CFG) >= path_loss_db(d, True, CFG))

    def test_clamped_below_1m(self):
        assert path_loss_db(0.2, True, CFG) == path_loss_db(1.0, True, CFG)

    def test_effective_equals_los_in_close_range(self):
        for d in (0.0, 2.5, 5.0):
            assert effective_path_loss(d, CFG) == pytest.approx(
                db_to_linear(path_loss_db(d, True, CFG)), rel=1e-12
            )

    def test_effective_is_probability_mixture(self):
        d = 30.0
        p = los_probability(d)
        expected = p * db_to_linear(path_loss_db(d, True, CFG)) + (1 - p) * db_to_linear(
            path_loss_db(d, False, CFG)
        )
        assert effective_path_loss(d, CFG) == pytest.approx(expected, rel=1e-12)

    def test_effective_monotone_1m_steps(self):
        d = np.arange(1.0, 141.0)
        losses = effective_path_loss(d, CFG)
        assert np.all(np.diff(losses) >= 0.0)

    def test_sampled_path_loss_is_one_of_the_branches(self):
        rng = np.random.default_rng(0)
        d = np.full(200, 30.0)
        lin = sampled_path_loss(d, rng, CFG)
        los_lin = db_to_linear(path_loss_db(30.0, True, CFG))
        nlos_lin = db_to_linear(path_loss_db(30.0, False, CFG))
        assert set(np.round(lin, 6)) <= {round(los_lin, 6), round(nlos_lin, 6)}
        # Both branches show up at 30 m (p ~ 0.70).
        assert len(set(np.round(lin, 6))) == 2


class TestAntennas:
    def test_aligned_90deg_beam(self):
        assert antenna_gain(0.0, 90.0, 0.1) == pytest.approx(4.0, rel=1e-12)

    def test_aligned_45deg_beam(self):
        assert antenna_gain(0.0, 45.0, 0.1) == pytest.approx(8.0, rel=1e-12)

    def test_misaligned_gets_sidelobe(self):
        assert antenna_gain(46.0, 90.0, 0.07) == 0.07
        assert antenna_gain(-46.0, 90.0, 0.07) == 0.07

    def test_edge_of_beam_is_mainlobe(self):
        assert antenna_gain(45.0, 90.0, 0.1) == pytest.approx(mainlobe_gain(90.0))

    def test_wraps_angles(self):
        assert antenna_gain(360.0, 90.0, 0.1) == pytest.approx(4.0)

    def test_bad_beamwidth_rejected(self):
        with pytest.raises(ValueError):
            antenna_gain(0.0, 0.0, 0.1)


class TestInterference:
    def test_empty_sum_is_zero(self):
        assert instantaneous_interference(0.25, [], [], []) == 0.0

    def test_single_term(self):
        got = instantaneous_interference(2.0, [0.1], [0.1], [1e9])
        assert got == pytest.approx(2.0 * 0.1 * 0.1 / 1e9, rel=1e-12)

    @given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6),
           st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6))
    @settings(max_examples=40, deadline=None)
    def test_additive_over_interferers(self, a, b):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        losses = [1e9] * n
        total = instantaneous_interference(0.25, a, b, losses)
        parts = sum(instantaneous_interference(0.25, [x], [y], [1e9])
                    for x, y in zip(a, b))
        assert total == pytest.approx(parts, rel=1e-9)

    def test_ema_endpoints(self):
        assert update_interference_ema(2.0, 4.0, 1.0) == 2.0
        assert update_interference_ema(2.0, 4.0, 0.0) == 4.0
        assert update_interference_ema(2.0, 4.0, 0.5) == 3.0

    @given(st.floats(0, 1), st.floats(0, 1e3), st.floats(0, 1e3))
    @settings(max_examples=60, deadline=None)
    def test_ema_stays_between_inputs(self, beta, inst, ema):
        out = update_interference_ema(inst, ema, beta)
        assert min(inst, ema) - 1e-9 <= out <= max(inst, ema) + 1e-9

    def test_bad_beta_rejected(self):
        with pytest.raises(ValueError):
            update_interference_ema(1.0, 1.0, 1.5)


class TestSinrAndRate:
    def test_unity_sinr_when_signal_equals_noise(self):
        noise = thermal_noise_w(CFG)
        assert sinr(noise, 0.0, noise) == pytest.approx(1.0, rel=1e-12)

    def test_thermal_noise_dbm(self):
        assert float(watts_to_dbm(thermal_noise_w(CFG))) == pytest.approx(-84.71, abs=0.01)

    def test_doubling_interference_halves_sinr_without_noise(self):
        assert sinr(1.0, 2.0, 0.0) == sinr(1.0, 1.0, 0.0) / 2

    def test_rate_at_unity_sinr(self):
        assert achievable_rate(1.0, 0.85e9) == pytest.approx(0.85e9, rel=1e-12)

    def test_rate_at_zero_sinr(self):
        assert achievable_rate(0.0, 0.85e9) == 0.0

    def test_rate_at_three(self):
        assert achievable_rate(3.0, 0.85e9) == pytest.approx(1.7e9, rel=1e-12)

    def test_rate_decreasing_in_interference(self):
        noise = thermal_noise_w(CFG)
        rates = [achievable_rate(sinr(1e-11, i, noise), CFG.bandwidth_hz)
                 for i in (0.0, 1e-12, 1e-11, 1e-10)]
        assert all(a > b for a, b in zip(rates, rates[1:]))

    def test_link_sinr_uses_all_gains(self):
        link = LinkState(pathloss=1e10, los=True, g_tx=4.0, g_rx=8.0,
                         channel_gain=1e-10)
        expected = dbm_to_watts(24.0) * 1e-10 * 4 * 8 / thermal_noise_w(CFG)
        assert link_sinr(link, 0.0, CFG) == pytest.approx(float(expected), rel=1e-12)

    def test_link_sinr_rejects_negative_interference(self):
        link = LinkState(1e10, True, 4.0, 8.0, 1e-10)
        with pytest.raises(ValueError):
            link_sinr(link, -1.0, CFG)

    @given(st.floats(-120, 60))
    @settings(max_examples=60, deadline=None)
    def test_db_roundtrip(self, db):
        assert float(linear_to_db(db_to_linear(db))) == pytest.approx(db, abs=1e-9)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChannelConfig(ema_beta=1.5)
        with pytest.raises(ValueError):
            ChannelConfig(tx_beamwidth_deg=0.0)
        with pytest.raises(ValueError):
            ChannelConfig(bandwidth_hz=0.0)
