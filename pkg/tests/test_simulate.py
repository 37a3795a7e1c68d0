import math

import numpy as np
import pytest

from wlprecoding.channel import ChannelSet
from wlprecoding.errors import DimensionMismatch
from wlprecoding.modulation import Constellation
from wlprecoding.precoding import mrt, normalize_power, wl_zf, zf
from wlprecoding.simulate import (ScenarioConfig, measure_sinr, run_rate_sweep,
                                  run_selection_census, run_ser_sweep, run_sweep,
                                  transmit_block)


def small(**kw):
    base = dict(M=2, K=2, n_channels=20, n_symbols=50, snr_grid_db=(0.0, 20.0), seed=3)
    base.update(kw)
    return ScenarioConfig(**base)


class TestTransmit:
    def test_wl_zf_noiseless_real_part(self, channel_factory):
        cs = channel_factory(2, 4)
        p = normalize_power(wl_zf(cs), 1.0)
        s = Constellation.pam(4).symbols(np.tile([1, 2, 3, 4], (4, 1)))
        y = transmit_block(cs, p, s, np.zeros((4, 4)))
        np.testing.assert_allclose(y, p.diagnostics['scaling'] * s, atol=1e-12)

    def test_single_user_mrt(self):
        cs = ChannelSet(np.array([[3, 4j]]))
        y = transmit_block(cs, mrt(cs, 4.0), np.array([[1.0, -1.0]]), np.zeros((1, 2)))
        np.testing.assert_allclose(y, [[10.0, -10.0]])

    def test_noise_passes_through_filter(self):
        cs = ChannelSet(np.array([[1.0]]), rx_filters=2j)
        p = mrt(cs, 1.0)
        y = transmit_block(cs, p, np.zeros((1, 1)), np.array([[1.0 + 0j]]), real_part=False)
        assert y[0, 0] == 2j

    def test_dimension_mismatch(self, channel_factory):
        cs = channel_factory(2, 2)
        p = mrt(cs, 1.0)
        with pytest.raises(DimensionMismatch):
            transmit_block(cs, p, np.zeros((3, 4)), np.zeros((3, 4)))
        with pytest.raises(DimensionMismatch):
            transmit_block(channel_factory(2, 3), p, np.zeros((2, 4)), np.zeros((2, 4)))


class TestSinr:
    def test_wl_zf_interference_free(self, channel_factory):
        cs = channel_factory(4, 8, noise_var=0.01)
        p = normalize_power(wl_zf(cs), 1.0)
        g = p.diagnostics['scaling']
        A = np.real(cs.effective @ p.U)
        assert np.max(np.abs(A - np.diag(np.diag(A)))) < 1e-12
        np.testing.assert_allclose(measure_sinr(cs, p), 2 * g ** 2 / 0.01, rtol=1e-9)

    def test_symmetric_users_equal(self):
        cs = ChannelSet(np.array([[1.0], [1j]]), noise_vars=0.1)
        s = measure_sinr(cs, normalize_power(wl_zf(cs), 1.0))
        assert s[0] == pytest.approx(s[1], rel=1e-12)

    def test_complex_mode(self, channel_factory):
        cs = channel_factory(3, 3, noise_var=0.5)
        p = zf(cs)
        np.testing.assert_allclose(measure_sinr(cs, p, 'complex'), 2.0, rtol=1e-9)

    def test_bad_mode(self, channel_factory):
        cs = channel_factory(2, 2)
        with pytest.raises(ValueError):
            measure_sinr(cs, mrt(cs, 1.0), 'both')


class TestSweep:
    def test_saturation_at_very_low_snr(self):
        r = run_ser_sweep(small(method='wl_zf', snr_grid_db=(-60.0,), n_channels=50))
        assert abs(r.avg_ser[0] - 0.75) < 4 * math.sqrt(0.75 * 0.25 / r.points[0].n_detected)

    def test_noiseless_wl_zf_is_error_free(self):
        r = run_ser_sweep(small(M=2, K=4, method='wl_zf', snr_grid_db=(200.0,)))
        assert r.points[0].n_errors == 0

    def test_deterministic(self):
        a = run_sweep(small(method='wl_mmse_iter'))
        b = run_sweep(small(method='wl_mmse_iter'))
        np.testing.assert_array_equal(a.avg_ser, b.avg_ser)
        np.testing.assert_array_equal(a.avg_sum_rate, b.avg_sum_rate)

    def test_seed_changes_result(self):
        a = run_ser_sweep(small(method='mrt'))
        b = run_ser_sweep(small(method='mrt', seed=4))
        assert not np.array_equal(a.avg_ser, b.avg_ser)

    def test_common_channels_across_snr(self):
        # ZF SINR scales exactly with 1/sigma^2 when channels are shared
        r = run_sweep(small(method='wl_zf', snr_grid_db=(10.0, 20.0)), ser=False)
        hi = run_sweep(small(method='wl_zf', snr_grid_db=(20.0,)), ser=False)
        assert r.points[1].avg_sum_rate == hi.points[0].avg_sum_rate

    @pytest.mark.parametrize('M,K', [(1, 2), (2, 3), (2, 4)])
    def test_wl_serves_up_to_2M_where_linear_cannot(self, M, K):
        wl = run_sweep(small(M=M, K=K, method='wl_zf', snr_grid_db=(40.0,)))
        lin = run_sweep(small(M=M, K=K, method='zf', snr_grid_db=(40.0,)))
        assert wl.failure_rate == 0.0 and wl.points[0].n_trials == 20
        assert lin.failure_rate == 1.0 and math.isnan(lin.avg_ser[0])

    def test_rate_bounded(self):
        r = run_rate_sweep(small(M=2, K=4, method='wl_mmse', snr_grid_db=(0.0, 60.0)))
        assert np.all(r.avg_sum_rate <= 4 * 2.0 + 1e-12)
        assert r.avg_sum_rate[1] > r.avg_sum_rate[0]
        assert np.all(np.isnan(r.avg_ser))

    def test_qam_linear_link(self):
        r = run_sweep(small(modulation='qam', order=16, method='mmse', snr_grid_db=(40.0,)))
        assert r.avg_ser[0] < 0.05
        assert r.avg_sum_rate[0] <= 2 * 4.0

    def test_qam_rejects_wl_method(self):
        with pytest.raises(ValueError):
            run_sweep(small(modulation='qam', order=16, method='wl_mmse'))

    def test_selection_counts(self):
        r = run_sweep(small(M=2, K=30, selection='susom', method='wl_mmse'))
        assert np.all(r.avg_selected_users <= 4)
        assert r.points[0].user_errors is None

    def test_per_user_bookkeeping(self):
        r = run_ser_sweep(small(K=3, method='wl_zf'))
        pt = r.points[0]
        assert pt.user_errors.sum() == pt.n_errors
        assert pt.user_expected_errors.shape == (3,)

    def test_config_round_trip(self):
        cfg = small(selection='sus', label=None)
        assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
        assert cfg.name == 'sus+wl_mmse'
        with pytest.raises(KeyError):
            ScenarioConfig.from_dict({'antennas': 4})


def test_census_shape_and_bounds():
    out = run_selection_census(2, [2, 10], n_trials=30)
    assert set(out) == {'sus', 'susom'}
    assert np.all(out['sus'] <= 2) and np.all(out['susom'] <= 4)
    assert np.all(out['susom'] >= out['sus'])
