import dataclasses
import math

import numpy as np
import pytest

from opolab import _accel
from opolab import analyzer as an
from opolab.lockloop import (
    LOCK_CSV_HEADER,
    LockConfig,
    constant,
    error_signal_model,
    error_slope,
    format_lock_csv,
    inject_lock_artifact,
    lock_target,
    max_monotone_gain,
    noise_power_meter,
    resonance_drift,
    simulate_lock,
    wrap_pi,
)

SQZ = (4.0, 0.25)


def cfg(**kw):
    base = dict(analysis_variance_pair=SQZ, duration=0.5)
    base.update(kw)
    return LockConfig(**base)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(dt=1e-5), dict(dither_amp=0.0), dict(dither_amp=1.0),
                                    dict(duration=100.0), dict(lowpass_corner=0.0), dict(meter_bandwidth=0.0),
                                    dict(analysis_variance_pair=(1.0, 0.0))])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            cfg(**kw)

    def test_derived(self):
        c = cfg()
        assert c.n_steps == 125_000
        assert c.meter_sigma == pytest.approx(1 / math.sqrt(300e3 * 4e-6))
        assert c.lowpass_coefficient == pytest.approx(1 - math.exp(-2 * math.pi * 100 * 4e-6))


class TestMeter:
    def test_noiseless_limit(self):
        c = cfg(meter_bandwidth=math.inf)
        assert noise_power_meter(0.3, c, np.random.default_rng(0)) == pytest.approx(
            4 * math.cos(0.3) ** 2 + 0.25 * math.sin(0.3) ** 2)

    def test_calibrated_at_squeezed_quadrature(self):
        c = cfg()
        v = noise_power_meter(np.full(200_000, math.pi / 2), c, np.random.default_rng(1))
        assert v.mean() == pytest.approx(0.25, abs=4 * 0.25 * c.meter_sigma / math.sqrt(len(v)))
        assert v.std() / 0.25 == pytest.approx(c.meter_sigma, rel=0.02)

    def test_phase_independent_for_equal_pair(self):
        c = cfg(analysis_variance_pair=(2.0, 2.0), meter_bandwidth=math.inf)
        v = noise_power_meter(np.linspace(0, np.pi, 20), c, np.random.default_rng(0))
        np.testing.assert_allclose(v, 2.0)


class TestErrorModel:
    def test_zero_at_quadratures(self):
        c = cfg()
        assert error_signal_model(math.pi / 2, c) == pytest.approx(0.0, abs=1e-15)
        assert error_signal_model(0.0, c) == 0.0

    def test_sign_flips_across_minimum(self):
        c = cfg()
        assert error_signal_model(math.pi / 2 - 0.1, c) * error_signal_model(math.pi / 2 + 0.1, c) < 0

    def test_identically_zero_for_equal_pair(self):
        c = cfg(analysis_variance_pair=(1.5, 1.5))
        np.testing.assert_array_equal(error_signal_model(np.linspace(0, 3, 30), c), 0.0)

    def test_fixed_points_are_extrema(self):
        theta = np.linspace(-np.pi, np.pi, 4001)
        e = error_signal_model(theta, cfg())
        zeros = theta[np.abs(e) < 1e-12]
        np.testing.assert_allclose(np.sin(2 * zeros), 0.0, atol=1e-12)

    def test_matches_simulated_demodulation(self):
        # Frozen loop (zero gain, noiseless meter): the low-passed error settles to the model value.
        for offset in (0.05, 0.2, -0.3):
            c = cfg(loop_gain=0.0, meter_bandwidth=math.inf, initial_phase=math.pi / 2 + offset,
                    lowpass_corner=20.0, duration=0.4)
            tr = simulate_lock(c)
            tail = tr.error_signal[-25_000:].mean()
            model = error_signal_model(math.pi / 2 + offset, c)
            assert tail == pytest.approx(model, rel=0.02, abs=2e-4)


class TestSimulation:
    def test_backends_bitwise_equal(self):
        if not _accel.NUMBA_AVAILABLE:
            pytest.skip("numba not installed")
        # Long enough that an ulp-level trig mismatch would surface (it did before libm binding).
        c = cfg(initial_phase=math.pi / 2 + 0.3, duration=2.0)
        dist, con = resonance_drift(1.0, 0.1, 0.5)
        for seed in (0, 3):
            a = simulate_lock(c, dist, seed, con, backend="numba")
            b = simulate_lock(c, dist, seed, con, backend="numpy")
            for name in ("theta_total", "error_signal", "control_output", "theta_disturbance"):
                assert np.array_equal(getattr(a, name), getattr(b, name)), name

    def test_deterministic(self):
        c = cfg(initial_phase=1.9)
        a, b = simulate_lock(c, rng_seed=4), simulate_lock(c, rng_seed=4)
        assert np.array_equal(a.theta_total, b.theta_total) and a.summary == b.summary
        assert not np.array_equal(a.theta_total, simulate_lock(c, rng_seed=5).theta_total)

    def test_length(self):
        c = cfg()
        assert len(simulate_lock(c)) == c.n_steps

    def test_fixed_point_holds(self):
        tr = simulate_lock(cfg(initial_phase=math.pi / 2, duration=1.0))
        assert tr.summary.converged
        assert tr.summary.residual_rms < tr.config.dither_amp

    def test_acquires_from_offset(self):
        tr = simulate_lock(cfg(initial_phase=math.pi / 2 + 0.3, duration=2.0))
        s = tr.summary
        assert s.converged and abs(s.final_offset) < 0.02 and s.settle_time is not None

    def test_flipped_gain_goes_to_maximum(self):
        c = cfg(initial_phase=math.pi / 2 + 0.3, duration=2.0, loop_gain=-0.03)
        tr = simulate_lock(c)
        assert lock_target(c) == 0.0
        assert tr.summary.converged
        assert abs(wrap_pi(tr.control_output[-1])) < 0.1

    def test_zero_gain_follows_disturbance(self):
        c = cfg(loop_gain=0.0, initial_phase=0.4)
        dist = lambda t: 0.2 * np.sin(2 * np.pi * 3 * t)
        tr = simulate_lock(c, dist)
        dither = c.dither_amp * np.sin(2 * np.pi * c.dither_freq * tr.t)
        np.testing.assert_array_equal(tr.control_output, 0.4)
        np.testing.assert_allclose(tr.theta_total, 0.4 + dither + tr.theta_disturbance, atol=1e-15)

    def test_gain_bound_monotone_decay(self):
        c0 = cfg(meter_bandwidth=math.inf, initial_phase=math.pi / 2 + 0.05, duration=1.0)
        g = max_monotone_gain(c0)
        assert g == pytest.approx(1 / (4 * error_slope(c0)))
        tr = simulate_lock(dataclasses.replace(c0, loop_gain=0.9 * g))
        err = np.abs(tr.phase_error())
        # One dither period is 12.5 steps; sample every four periods to strip the ripple.
        slow = err[::50]
        assert np.all(np.diff(slow) <= 1e-6)
        assert slow[-1] < 0.01 * slow[0]

    def test_residual_grows_with_meter_noise(self):
        rms = []
        for bw in (3e6, 300e3, 30e3):
            c = cfg(initial_phase=math.pi / 2, duration=2.0, meter_bandwidth=bw)
            rms.append(simulate_lock(c, rng_seed=1).summary.residual_rms)
        assert rms[0] < rms[1] < rms[2]

    def test_divergence_reported(self):
        c = cfg(loop_gain=math.inf, initial_phase=math.pi / 2 + 0.3, duration=0.1)
        tr = simulate_lock(c)
        assert tr.summary.diverged and not tr.summary.converged
        assert len(tr) < c.n_steps

    def test_constant_disturbance_is_tracked(self):
        tr = simulate_lock(cfg(initial_phase=math.pi / 2, duration=2.0), constant(0.2))
        assert tr.summary.converged
        assert tr.control_output[-1] == pytest.approx(math.pi / 2 - 0.2, abs=0.03)

    def test_resonance_drift_loses_lock(self):
        # The loop tracks a slow ramp while squeezed; once contrast fades the ramp runs free.
        dist, con = resonance_drift(hold_time=0.5, ramp=0.3, fade_time=0.2)
        tr = simulate_lock(cfg(initial_phase=math.pi / 2, duration=1.5), dist, 2, con)
        held = np.abs(tr.phase_error()[int(0.2 / tr.config.dt): int(0.5 / tr.config.dt)])
        assert np.sqrt(np.mean(held**2)) < 0.05
        assert abs(tr.phase_error()[-1]) > 0.1
        assert not tr.summary.converged

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            simulate_lock(cfg(duration=0.01), backend="fortran")


class TestOutput:
    def test_csv(self):
        tr = simulate_lock(cfg(duration=0.01))
        text = format_lock_csv(tr, every=10, comments=["scenario=x"])
        lines = text.splitlines()
        assert "# scenario=x" in lines and any(line.startswith("# converged=") for line in lines)
        i = lines.index(LOCK_CSV_HEADER)
        rows = lines[i + 1:]
        assert len(rows) == math.ceil(len(tr) / 10)
        first = [float(x) for x in rows[0].split(",")]
        assert first[1] == pytest.approx(tr.theta_total[0])

    def test_artifact_wrapper(self):
        plan = an.WindowPlan(3.8e3, 100e3, 128.0, 2000)
        tr = an.analytic_trace(lambda f: np.ones_like(f), plan)
        out = inject_lock_artifact(tr, 20e3, 2.0)
        assert out.power.sum() == pytest.approx(tr.power.sum() + 2.0)
