import numpy as np
import pytest

from opolab.noise import ExcessNoise, Peak, acoustic_detuning, build_noise_inputs, seed_noise

TWO_PI = 2 * np.pi


def test_peak_half_height_at_half_width():
    p = Peak(1000.0, 8.0, 40.0)
    assert p(TWO_PI * 1000.0) == pytest.approx(8.0)
    assert p(TWO_PI * 1020.0) == pytest.approx(4.0)


def test_excess_shape():
    e = ExcessNoise(level=10.0, reference_hz=1e4, corner_hz=500.0, exponent=1.0)
    assert e(TWO_PI * 1e4) == pytest.approx(10.0)
    assert e(TWO_PI * 2e4) == pytest.approx(5.0)
    assert e(TWO_PI * 100.0) == pytest.approx(e(TWO_PI * 500.0))


def test_excess_silent():
    assert ExcessNoise().silent
    assert not ExcessNoise(peaks=(Peak(1.0, 1.0, 1.0),)).silent
    np.testing.assert_array_equal(ExcessNoise()(np.array([0.0, 1e3])), 0.0)


def test_acoustic_detuning():
    d = acoustic_detuning(100.0, 2500.0)
    assert d(0.0) == pytest.approx(100.0)
    assert d(TWO_PI * 2500.0) == pytest.approx(50.0)
    assert d(TWO_PI * 25000.0) == pytest.approx(100.0 / 101.0)


def test_seed_noise_scales_with_power():
    excess = lambda w: np.full_like(np.asarray(w, float), 1e12)
    assert seed_noise(excess, 0.0)(1.0) == 1.0
    assert seed_noise(excess, 2e-12)(1.0) == pytest.approx(3.0)


def test_build_noise_inputs_defaults():
    n = build_noise_inputs()
    w = np.array([1.0, 10.0])
    np.testing.assert_array_equal(n.v_pump_plus(w), 1.0)
    np.testing.assert_array_equal(n.v_detuning(w), 0.0)


def test_build_noise_inputs_components():
    e = ExcessNoise(level=3.0)
    n = build_noise_inputs(pump_minus=e, detuning=acoustic_detuning(7.0, 1.0),
                           seed_excess=lambda w: 1e6 + 0 * w, seed_power=1e-6)
    assert n.v_pump_minus(0.0) == pytest.approx(4.0)
    assert n.v_pump_plus(0.0) == 1.0
    assert n.v_detuning(0.0) == pytest.approx(7.0)
    assert n.v_seed_plus(0.0) == pytest.approx(2.0) and n.v_seed_minus(0.0) == pytest.approx(2.0)
