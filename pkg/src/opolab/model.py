"""Linearized quadrature-noise model of a singly resonant OPO/OPA on resonance.

All decay rates and sideband frequencies are angular (rad/s). Variances are
normalized so that vacuum (shot noise) equals 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy import constants

from .errors import ThresholdError

Spectrum = Callable[[np.ndarray], np.ndarray]


class Quadrature(enum.Enum):
    PLUS = "+"   # amplitude
    MINUS = "-"  # phase

    @property
    def sign(self) -> int:
        return 1 if self is Quadrature.PLUS else -1

    @property
    def bracket(self) -> int:
        """Multiplier of the pump-depletion-like alpha^2 term: 3 for amplitude, 1 for phase."""
        return 3 if self is Quadrature.PLUS else 1


@dataclass(frozen=True)
class CavityParams:
    """One OPO/OPA operating point.

    Decay rates in rad/s. ``alpha`` and ``beta`` are the intracavity
    fundamental and second-harmonic amplitudes (alpha**2 = photon number).
    Construction rejects parameter sets at or above threshold.
    """

    kappa_in_a: float
    kappa_out_a: float
    kappa_l_a: float
    kappa_b: float
    kappa_in_b: float
    epsilon: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("kappa_in_a", "kappa_out_a", "kappa_l_a", "kappa_in_b", "epsilon", "alpha", "beta"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if not np.isfinite(self.kappa_b) or self.kappa_b <= 0:
            raise ValueError(f"kappa_b must be finite and > 0, got {self.kappa_b!r}")
        if self.kappa_a <= 0:
            raise ValueError("total fundamental decay rate kappa_a must be > 0")
        if self.kappa_in_b > self.kappa_b:
            raise ValueError("kappa_in_b cannot exceed kappa_b")
        if self.epsilon * self.beta >= self.kappa_a:
            raise ThresholdError(
                f"epsilon*beta = {self.epsilon * self.beta:.6g} >= kappa_a = {self.kappa_a:.6g}: "
                "at or above oscillation threshold"
            )

    @property
    def kappa_a(self) -> float:
        return self.kappa_in_a + self.kappa_out_a + self.kappa_l_a

    @property
    def escape_efficiency(self) -> float:
        return self.kappa_out_a / self.kappa_a

    def with_fields(self, alpha: float, beta: float) -> "CavityParams":
        return replace(self, alpha=alpha, beta=beta)


def _vacuum(omega):
    return np.ones_like(np.asarray(omega, dtype=float))


def _silent(omega):
    return np.zeros_like(np.asarray(omega, dtype=float))


@dataclass(frozen=True)
class NoiseInputs:
    """Input noise spectra as functions of sideband frequency (rad/s).

    Every field maps an array of angular frequencies to an array of
    nonnegative spectral values, normalized so that vacuum = 1. The
    defaults are vacuum everywhere and no detuning noise.
    """

    v_seed_plus: Spectrum = _vacuum
    v_seed_minus: Spectrum = _vacuum
    v_pump_plus: Spectrum = _vacuum
    v_pump_minus: Spectrum = _vacuum
    v_loss: Spectrum = _vacuum
    v_vac: Spectrum = _vacuum
    v_detuning: Spectrum = _silent

    def seed(self, quad: Quadrature) -> Spectrum:
        return self.v_seed_plus if quad is Quadrature.PLUS else self.v_seed_minus

    def pump(self, quad: Quadrature) -> Spectrum:
        return self.v_pump_plus if quad is Quadrature.PLUS else self.v_pump_minus


@dataclass(frozen=True)
class QuadratureSpectrum:
    frequencies: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray

    def __post_init__(self):
        n = len(self.frequencies)
        if len(self.v_plus) != n or len(self.v_minus) != n:
            raise ValueError("frequencies, v_plus and v_minus must have equal length")
        if n > 1 and np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly ascending")
        if np.any(self.v_plus <= 0) or np.any(self.v_minus <= 0):
            raise ValueError("quadrature variances must be > 0")

    def get(self, quad: Quadrature) -> np.ndarray:
        return self.v_plus if quad is Quadrature.PLUS else self.v_minus


class Couplings(NamedTuple):
    c_s: float
    c_l: float
    c_v: np.ndarray
    c_p: float
    c_delta: float


def denominator(params: CavityParams, quad: Quadrature, omega):
    """D(omega) = i*omega + kappa_a + [3|1] eps^2 alpha^2 / (2 kappa_b) -/+ eps*beta."""
    omega = np.asarray(omega, dtype=float)
    eps = params.epsilon
    real = (
        params.kappa_a
        + quad.bracket * eps**2 * params.alpha**2 / (2.0 * params.kappa_b)
        - quad.sign * eps * params.beta
    )
    return real + 1j * omega


def coupling_coefficients(params: CavityParams, quad: Quadrature, omega) -> Couplings:
    k_out = params.kappa_out_a
    d = denominator(params, quad, omega)
    return Couplings(
        c_s=4.0 * params.kappa_in_a * k_out,
        c_l=4.0 * params.kappa_l_a * k_out,
        c_v=np.abs(2.0 * k_out - d) ** 2,
        c_p=4.0 * k_out * params.kappa_in_b * (params.epsilon / params.kappa_b) ** 2,
        c_delta=8.0 * k_out * (0.0 if quad is Quadrature.PLUS else 1.0),
    )


def quadrature_variance(params: CavityParams, noise: NoiseInputs, quad: Quadrature, omega) -> np.ndarray:
    """Output variance of one quadrature on an array of sideband frequencies."""
    omega = np.asarray(omega, dtype=float)
    c = coupling_coefficients(params, quad, omega)
    numerator = (
        c.c_s * noise.seed(quad)(omega)
        + c.c_l * noise.v_loss(omega)
        + c.c_v * noise.v_vac(omega)
        + params.alpha**2 * (c.c_p * noise.pump(quad)(omega) + c.c_delta * noise.v_detuning(omega))
    )
    return numerator / np.abs(denominator(params, quad, omega)) ** 2


def squeezing_spectrum(params: CavityParams, noise: NoiseInputs, grid) -> QuadratureSpectrum:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("frequency grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be strictly ascending")
    # CavityParams already enforces eps*beta < kappa_a, so |D| > 0 everywhere.
    return QuadratureSpectrum(
        frequencies=grid,
        v_plus=quadrature_variance(params, noise, Quadrature.PLUS, grid),
        v_minus=quadrature_variance(params, noise, Quadrature.MINUS, grid),
    )


def threshold_margin(params: CavityParams) -> float:
    return params.epsilon * params.beta / params.kappa_a


def classical_gain(params: CavityParams) -> float:
    """Intensity gain of the amplified quadrature at zero sideband frequency."""
    x = threshold_margin(params)
    return ((1.0 + x) / (1.0 - x)) ** 2


def pump_for_gain(kappa_a: float, gain: float) -> float:
    """Return eps*beta giving classical gain ``gain``; inverse of :func:`classical_gain`."""
    if gain < 1:
        raise ValueError(f"classical gain must be >= 1, got {gain}")
    if not np.isfinite(gain):
        raise ThresholdError("infinite gain corresponds to threshold")
    root = np.sqrt(gain)
    return kappa_a * (root - 1.0) / (root + 1.0)


def photon_flux(power: float, carrier_frequency: float) -> float:
    """Photons per second for optical power (W) at angular carrier frequency (rad/s)."""
    return power / (constants.hbar * carrier_frequency)


def intracavity_fields(seed_power: float, classical_gain: float, params: CavityParams,
                       carrier_frequency: float) -> tuple[float, float]:
    """Steady-state (alpha, beta) for a seed power (W) and classical gain.

    The ``alpha`` and ``beta`` already stored on ``params`` are ignored.
    """
    if seed_power < 0:
        raise ValueError("seed power must be >= 0")
    eps_beta = pump_for_gain(params.kappa_a, classical_gain)
    if eps_beta >= params.kappa_a:
        raise ThresholdError(f"gain {classical_gain} implies operation at threshold")
    if eps_beta > 0 and params.epsilon == 0:
        raise ValueError("classical gain > 1 needs a nonzero nonlinear coupling epsilon")
    beta = eps_beta / params.epsilon if eps_beta > 0 else 0.0
    if seed_power == 0:
        return 0.0, beta
    drive = np.sqrt(2.0 * params.kappa_in_a) * np.sqrt(photon_flux(seed_power, carrier_frequency))
    return float(drive / (params.kappa_a - eps_beta)), float(beta)


def operating_point(params: CavityParams, seed_power: float, gain: float,
                    carrier_frequency: float) -> CavityParams:
    """Copy of ``params`` with alpha and beta set from seed power and gain."""
    alpha, beta = intracavity_fields(seed_power, gain, params, carrier_frequency)
    return params.with_fields(alpha, beta)
