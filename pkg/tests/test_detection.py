import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opolab import detection as det
from opolab.errors import UnphysicalMeasurementError

RIG = dict(quantum_efficiency=0.93, fringe_visibility=0.965)


def chain(eta=1.0, elec=0.0):
    return det.DetectionChain(quantum_efficiency=eta, electronic_noise_rel=elec)


class TestHomodyne:
    def test_quadratures(self):
        assert det.homodyne_variance(4.0, 0.25, 0.0) == pytest.approx(4.0)
        assert det.homodyne_variance(4.0, 0.25, math.pi / 2) == pytest.approx(0.25)

    def test_forty_five_degrees(self):
        assert det.homodyne_variance(4.0, 0.25, math.pi / 4) == pytest.approx(2.125)

    def test_extrema_over_phase(self):
        theta = np.linspace(0, 2 * np.pi, 3601)
        v = det.homodyne_variance(4.0, 0.25, theta)
        assert v.min() == pytest.approx(0.25) and v.max() == pytest.approx(4.0)


class TestEfficiency:
    def test_ideal(self):
        assert det.total_efficiency(det.DetectionChain()) == 1.0

    def test_rig_components(self):
        eta = det.total_efficiency(det.DetectionChain(**RIG, propagation_losses=(0.09,)))
        assert eta == pytest.approx(0.93 * 0.965**2 * 0.91, rel=1e-15)
        assert eta == pytest.approx(0.788, abs=5e-4)

    def test_without_isolator(self):
        assert det.total_efficiency(det.DetectionChain(**RIG)) == pytest.approx(0.866, abs=5e-4)

    @pytest.mark.parametrize("kw", [dict(quantum_efficiency=0.0), dict(quantum_efficiency=1.2),
                                    dict(fringe_visibility=0.0), dict(propagation_losses=(1.0,)),
                                    dict(propagation_losses=(-0.1,)), dict(electronic_noise_rel=-1.0)])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            det.DetectionChain(**kw)

    def test_from_db(self):
        c = det.DetectionChain.from_db(-12.0, **RIG)
        assert c.electronic_noise_rel == pytest.approx(10 ** -1.2)


class TestChain:
    def test_identity(self):
        assert det.apply_chain(0.3, chain()) == pytest.approx(0.3)
        assert det.infer_source(0.3, chain()) == pytest.approx(0.3)

    def test_vacuum_fixed_point(self):
        for eta in (0.1, 0.5, 0.788):
            assert det.apply_chain(1.0, chain(eta)) == pytest.approx(1.0, abs=1e-15)
            assert det.apply_chain(1.0, chain(eta, 0.063)) == pytest.approx(1.063)
            assert det.infer_source(1.0, chain(eta)) == pytest.approx(1.0, abs=1e-15)
            assert det.vacuum_floor(chain(eta, 0.063)) == pytest.approx(1 - eta + 0.063)

    def test_forward_rig_value(self):
        c = det.DetectionChain(**RIG, propagation_losses=(0.09,))
        v = det.apply_chain(0.282, c)
        assert v == pytest.approx(0.434, abs=1e-3)
        assert det.to_db(v) == pytest.approx(-3.6, abs=0.05)

    def test_round_trip_with_electronics(self):
        c = chain(0.788, 0.063)
        assert det.infer_source(det.apply_chain(0.282, c), c) == pytest.approx(0.282, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 100), st.floats(0.05, 1.0), st.floats(0.0, 0.5))
    def test_round_trip_property(self, v, eta, elec):
        c = chain(eta, elec)
        assert det.infer_source(det.apply_chain(v, c), c) == pytest.approx(v, rel=1e-12, abs=1e-12)

    def test_loss_degrades_squeezing_monotonically(self):
        etas = np.linspace(1.0, 0.05, 40)
        out = [det.apply_chain(0.3, chain(e)) for e in etas]
        assert np.all(np.diff(out) > 0)

    def test_unphysical_measurement(self):
        c = chain(0.788, 0.0)
        with pytest.raises(UnphysicalMeasurementError) as info:
            det.infer_source(0.2, c)
        assert "0.2" in str(info.value)
        with pytest.raises(UnphysicalMeasurementError):
            det.infer_source(det.vacuum_floor(c), c)

    def test_uncertainty_scales_with_efficiency(self):
        assert det.infer_source_uncertainty(0.03, chain(0.5)) == pytest.approx(0.06)

    def test_vectorized(self):
        c = chain(0.8)
        v = np.array([0.3, 1.0, 3.0])
        np.testing.assert_allclose(det.infer_source(det.apply_chain(v, c), c), v, rtol=1e-12)


class TestPurity:
    def test_vacuum(self):
        assert det.purity(1.0, 1.0) == 1.0

    def test_measured_pair(self):
        assert det.purity(3.687, 0.4339) == pytest.approx(1.6, abs=1e-3)
        assert det.purity_uncertainty(3.687, 0.4339, 0.38, 0.030) == pytest.approx(0.2, abs=0.02)

    def test_physical_flag(self):
        assert det.is_physical(2.0, 0.5)
        assert not det.is_physical(2.0, 0.4)
        assert det.is_physical(2.0, 0.49, tol=0.05)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1.0, 50.0), st.floats(0.05, 1.0))
    def test_purity_grows_under_loss_from_pure_state(self, vp, eta):
        c = chain(eta)
        after = det.purity(det.apply_chain(vp, c), det.apply_chain(1.0 / vp, c))
        assert after >= 1.0 - 1e-12

    def test_loss_pulls_mixed_state_toward_vacuum(self):
        # A mixed state's excess purity shrinks under loss; vacuum has purity 1.
        c = chain(0.5)
        assert det.purity(det.apply_chain(2.0, c), det.apply_chain(1.0, c)) == pytest.approx(1.5)

    def test_infer_pair(self):
        c = det.DetectionChain(**RIG, propagation_losses=(0.09,))
        r = det.infer_pair(3.687, 0.4339, c, 0.38, 0.030)
        assert r.purity == pytest.approx(1.3, abs=0.1)
        assert r.squeezing_db == pytest.approx(-5.5, abs=0.6)
        assert r.sigma_minus == pytest.approx(0.030 / c.efficiency)
        assert r.purity_sigma > 0
        bare = det.infer_pair(3.687, 0.4339, c)
        assert bare.sigma_plus is None and bare.purity_sigma is None


class TestDb:
    def test_values(self):
        assert det.to_db(1.0) == 0.0
        assert det.from_db(-5.5) == pytest.approx(0.2818, abs=1e-4)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-6, 1e6))
    def test_round_trip(self, v):
        assert det.from_db(det.to_db(v)) == pytest.approx(v, rel=1e-12)


class TestPhaseScan:
    def test_flat_for_equal_quadratures(self):
        trace = det.phase_scan((1.7, 1.7), chain(0.8), np.linspace(0, np.pi, 50))
        np.testing.assert_allclose(trace, trace[0], rtol=1e-14)

    def test_vacuum_flat_zero_db(self):
        trace = det.phase_scan((1.0, 1.0), chain(0.8), np.linspace(0, np.pi, 50))
        np.testing.assert_allclose(det.to_db(trace), 0.0, atol=1e-12)

    def test_extrema_at_quadratures(self):
        theta = np.linspace(0, 2 * np.pi, 721)
        trace = det.phase_scan((4.6, 0.28), det.DetectionChain(**RIG, propagation_losses=(0.09,)), theta)
        step = theta[1] - theta[0]
        t_min = theta[np.argmin(trace)]
        assert abs((t_min - np.pi / 2 + np.pi / 2) % np.pi - np.pi / 2) <= step
        assert trace.min() < 1 < trace.max()
        assert det.to_db(trace.min()) == pytest.approx(-3.6, abs=0.1)

    def test_single_point(self):
        assert det.phase_scan((2.0, 0.5), chain(), [0.3]).shape == (1,)
