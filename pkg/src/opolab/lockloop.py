"""Noise-locking of the homodyne phase.

The LO phase is dithered, the detected noise power (zero-span analyzer
output) is demodulated at the dither frequency, low-pass filtered and
integrated back onto the phase actuator. No optical carrier is needed.

Meter noise follows radiometer statistics: each sample of duration ``dt``
carries multiplicative Gaussian noise of relative standard deviation
``1/sqrt(meter_bandwidth * dt)``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _accel
from ._kernels import lock_loop_numba, lock_loop_python
from .analyzer import MeasuredTrace, inject_lock_artifact as _inject
from .detection import homodyne_variance

LOCK_CSV_HEADER = "t_s,theta_total_rad,theta_disturbance_rad,error_signal,control_output"
MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class LockConfig:
    """Loop settings.

    ``loop_gain`` is dimensionless: the integrator rate is
    ``loop_gain * 2*pi*lowpass_corner`` per unit error. A positive gain locks
    to the noise minimum, a negative one to the maximum.
    """

    dither_freq: float = 20e3
    dither_amp: float = 0.1
    demod_phase: float = 0.0
    lowpass_corner: float = 100.0
    loop_gain: float = 0.03
    dt: float = 4e-6
    duration: float = 1.0
    meter_bandwidth: float = 300e3
    analysis_variance_pair: tuple = (4.0, 0.25)
    initial_phase: float = math.pi / 2
    settle_band: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "analysis_variance_pair", tuple(float(v) for v in self.analysis_variance_pair))
        if self.dither_freq <= 0:
            raise ValueError("dither_freq must be > 0")
        if not self.dt < 1.0 / (10.0 * self.dither_freq):
            raise ValueError(f"dt={self.dt} s must be below 1/(10*dither_freq) = {0.1 / self.dither_freq} s")
        if not 0 < self.dither_amp < math.pi / 4:
            raise ValueError("dither_amp must lie in (0, pi/4)")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.n_steps > MAX_STEPS:
            raise ValueError(f"duration/dt = {self.n_steps} exceeds {MAX_STEPS} steps")
        if self.lowpass_corner <= 0:
            raise ValueError("lowpass_corner must be > 0")
        if self.meter_bandwidth <= 0:
            raise ValueError("meter_bandwidth must be > 0 (use inf for a noiseless meter)")
        v_plus, v_minus = self.analysis_variance_pair
        if v_plus <= 0 or v_minus <= 0:
            raise ValueError("analysis variances must be > 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def meter_sigma(self) -> float:
        """Relative standard deviation of one meter sample."""
        return 1.0 / math.sqrt(self.meter_bandwidth * self.dt)

    @property
    def lowpass_coefficient(self) -> float:
        return -math.expm1(-2 * math.pi * self.lowpass_corner * self.dt)

    @property
    def integrator_rate(self) -> float:
        return self.loop_gain * 2 * math.pi * self.lowpass_corner


def lock_target(config: LockConfig) -> float:
    """Phase (mod pi) the loop settles to: the noise minimum for positive gain."""
    v_plus, v_minus = config.analysis_variance_pair
    minimum = math.pi / 2 if v_plus > v_minus else 0.0
    if config.loop_gain * math.cos(config.demod_phase) >= 0:
        return minimum
    return (minimum + math.pi / 2) % math.pi


def error_slope(config: LockConfig) -> float:
    """d(error)/d(theta) at the lock point, first order in dither amplitude."""
    v_plus, v_minus = config.analysis_variance_pair
    return 2.0 * config.dither_amp * abs(v_plus - v_minus) * abs(math.cos(config.demod_phase))


def max_monotone_gain(config: LockConfig) -> float:
    """Largest |loop_gain| for which the linearized noiseless loop is not underdamped.

    The loop is an integrator behind a single-pole low-pass, with
    characteristic polynomial s^2 + wc s + g K wc^2; it is critically damped
    at g = 1/(4K) with K the error slope.
    """
    k = error_slope(config)
    return math.inf if k == 0 else 1.0 / (4.0 * k)


def noise_power_meter(theta, config: LockConfig, rng: np.random.Generator):
    """One zero-span noise-power reading at LO phase ``theta``."""
    v = homodyne_variance(*config.analysis_variance_pair, theta)
    if math.isinf(config.meter_bandwidth):
        return v
    z = rng.standard_normal(np.shape(theta))
    return v * (1.0 + config.meter_sigma * z)


def error_signal_model(theta, config: LockConfig):
    """Noiseless demodulated error, first order in the dither amplitude."""
    v_plus, v_minus = config.analysis_variance_pair
    dv = (v_minus - v_plus) * np.sin(2.0 * np.asarray(theta, dtype=float))
    return config.dither_amp * dv * math.cos(config.demod_phase)


@dataclass(frozen=True)
class LockSummary:
    converged: bool
    diverged: bool
    target: float
    final_offset: float
    residual_rms: float
    settle_time: float | None


@dataclass(frozen=True)
class LockTrace:
    t: np.ndarray
    theta_total: np.ndarray
    theta_disturbance: np.ndarray
    error_signal: np.ndarray
    control_output: np.ndarray
    summary: LockSummary
    config: LockConfig = field(repr=False)

    def __len__(self):
        return len(self.t)

    def phase_error(self) -> np.ndarray:
        """Slow phase (control + disturbance, no dither) relative to the target, wrapped mod pi."""
        return wrap_pi(self.control_output + self.theta_disturbance - self.summary.target)


def wrap_pi(x):
    """Wrap into [-pi/2, pi/2): the homodyne variance has period pi."""
    return (np.asarray(x) + np.pi / 2) % np.pi - np.pi / 2


def constant(value: float) -> Callable:
    def disturbance(t):
        return np.full_like(np.asarray(t, dtype=float), value)
    return disturbance


def resonance_drift(hold_time: float = 10.0, ramp: float = 0.0, fade_time: float = 0.5):
    """Contrast profile for an unlocked OPO that falls off resonance after ``hold_time``.

    Returns ``(disturbance, contrast)`` callables: a linear phase ramp
    (rad/s) and a squeezing contrast that fades from 1 to 0.
    """
    def disturbance(t):
        return ramp * np.asarray(t, dtype=float)

    def contrast(t):
        t = np.asarray(t, dtype=float)
        return np.clip(1.0 - (t - hold_time) / fade_time, 0.0, 1.0)

    return disturbance, contrast


def _backend(name):
    if name is None:
        name = "numba" if _accel.USE_NUMBA else "numpy"
    if name == "numba":
        if not _accel.NUMBA_AVAILABLE:
            raise RuntimeError("numba backend requested but numba is not installed")
        return lock_loop_numba
    if name == "numpy":
        return lock_loop_python
    raise ValueError(f"unknown backend {name!r}")


def _per_step(func, t):
    if func is None:
        return None
    values = np.asarray(func(t), dtype=float)
    if values.ndim == 0:
        values = np.full(t.shape, float(values))
    if np.all(values == values[0]):
        return values[:1].copy()
    return np.ascontiguousarray(values)


def simulate_lock(config: LockConfig, disturbance: Callable | None = None, rng_seed: int = 0,
                  contrast: Callable | None = None, backend: str | None = None) -> LockTrace:
    """Time-step the noise lock; deterministic for a given seed.

    ``disturbance(t)`` adds to the phase (rad). ``contrast(t)`` in [0, 1]
    scales the squeezing (1 = full analysis pair, 0 = vacuum). A loop that
    blows up is reported as diverged with the trace truncated.
    """
    n = config.n_steps
    t = np.arange(n) * config.dt
    wt = 2 * np.pi * config.dither_freq * t
    dither = config.dither_amp * np.sin(wt)
    reference = 2.0 * np.sin(wt + config.demod_phase)
    rng = np.random.default_rng(rng_seed)
    if math.isinf(config.meter_bandwidth):
        sigma, normals = 0.0, np.zeros(n)
    else:
        sigma, normals = config.meter_sigma, rng.standard_normal(n)
    dist = _per_step(disturbance, t)
    if dist is None:
        dist = np.zeros(1)
    con = _per_step(contrast, t)
    if con is None:
        con = np.ones(1)

    out_theta = np.empty(n)
    out_err = np.empty(n)
    out_ctrl = np.empty(n)
    kernel = _backend(backend)
    done = kernel(dither, reference, normals, dist, con, *config.analysis_variance_pair,
                  sigma, config.lowpass_coefficient, config.integrator_rate * config.dt,
                  float(config.initial_phase), out_theta, out_err, out_ctrl)

    dist_full = np.broadcast_to(dist, (n,))[:done].copy()
    trace = LockTrace(t[:done], out_theta[:done], dist_full, out_err[:done], out_ctrl[:done],
                      summary=None, config=config)
    summary = _summarize(trace, config, diverged=done < n)
    return LockTrace(trace.t, trace.theta_total, trace.theta_disturbance, trace.error_signal,
                     trace.control_output, summary, config)


def _summarize(trace: LockTrace, config: LockConfig, diverged: bool) -> LockSummary:
    target = lock_target(config)
    if diverged or len(trace) == 0:
        return LockSummary(False, True, target, math.nan, math.nan, None)
    err = wrap_pi(trace.control_output + trace.theta_disturbance - target)
    tail = err[len(err) // 2:]
    rms = float(np.sqrt(np.mean(tail**2)))
    inside = np.flatnonzero(np.abs(err) < config.settle_band)
    settle = float(trace.t[inside[0]]) if len(inside) else None
    offset = float(np.mean(tail))
    converged = rms < config.settle_band and abs(offset) < config.settle_band
    return LockSummary(converged, False, target, offset, rms, settle)


def format_lock_csv(trace: LockTrace, every: int = 1, comments=()) -> str:
    s = trace.summary
    buf = io.StringIO()
    buf.write(f"# converged={s.converged}\n# diverged={s.diverged}\n# target_rad={s.target:.9f}\n")
    buf.write(f"# final_offset_rad={s.final_offset:.9e}\n# residual_rms_rad={s.residual_rms:.9e}\n")
    buf.write(f"# settle_time_s={s.settle_time}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(LOCK_CSV_HEADER + "\n")
    sl = slice(None, None, max(1, int(every)))
    for row in zip(trace.t[sl], trace.theta_total[sl], trace.theta_disturbance[sl],
                   trace.error_signal[sl], trace.control_output[sl]):
        buf.write("{:.9e},{:.12e},{:.12e},{:.12e},{:.12e}\n".format(*row))
    return buf.getvalue()


def inject_lock_artifact(trace: MeasuredTrace, dither_freq: float, amplitude: float) -> MeasuredTrace:
    """Add the dither line to a measured spectrum as a one-bin peak."""
    return _inject(trace, dither_freq, amplitude)
