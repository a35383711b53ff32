"""Spectral shapes for technical noise inputs.

Shapes are callables of angular sideband frequency (rad/s). Magnitudes here
are relative to vacuum; none of the default magnitudes are measured values.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import NoiseInputs

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Peak:
    """Lorentzian feature: center and full width in Hz, height relative to vacuum."""

    center_hz: float
    height: float
    width_hz: float

    def __call__(self, omega):
        f = np.asarray(omega, dtype=float) / TWO_PI
        half = 0.5 * self.width_hz
        return self.height * half**2 / ((f - self.center_hz) ** 2 + half**2)


@dataclass(frozen=True)
class ExcessNoise:
    """Excess noise above vacuum.

    ``level`` is the excess at ``reference_hz``; below ``corner_hz`` the
    shape is flat, above it falls as ``f**-exponent``. Peaks are added on top.
    A zero level with no peaks is silent.
    """

    level: float = 0.0
    reference_hz: float = 1.0e3
    corner_hz: float = 0.0
    exponent: float = 0.0
    peaks: tuple = field(default_factory=tuple)

    def shape(self, f_hz):
        f = np.maximum(np.abs(f_hz), self.corner_hz)
        ref = max(self.reference_hz, self.corner_hz)
        if self.exponent == 0:
            return np.ones_like(f)
        # Guard f=0 when corner is 0; the shape is then unbounded, so use ref.
        f = np.where(f > 0, f, ref)
        return (ref / f) ** self.exponent

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        out = self.level * self.shape(omega / TWO_PI)
        for peak in self.peaks:
            out = out + peak(omega)
        return out

    @property
    def silent(self) -> bool:
        return self.level == 0 and not any(p.height for p in self.peaks)


def above_vacuum(excess):
    """Vacuum plus an excess-noise callable."""
    def spectrum(omega):
        return 1.0 + excess(omega)
    return spectrum


def acoustic_detuning(magnitude: float, corner_hz: float):
    """Detuning-fluctuation spectrum flat below ``corner_hz`` and falling as 1/f^2 above."""
    def spectrum(omega):
        f = np.asarray(omega, dtype=float) / TWO_PI
        return magnitude / (1.0 + (f / corner_hz) ** 2)
    return spectrum


def seed_noise(excess_per_watt, seed_power: float):
    """Technical seed noise growing linearly with seed power above the vacuum floor."""
    def spectrum(omega):
        return 1.0 + seed_power * excess_per_watt(omega)
    return spectrum


def build_noise_inputs(*, pump_plus=None, pump_minus=None, detuning=None,
                       seed_excess=None, seed_power: float = 0.0) -> NoiseInputs:
    """Assemble :class:`NoiseInputs` from optional technical-noise components.

    ``pump_*`` and ``seed_excess`` are excess callables added to vacuum;
    ``detuning`` is used directly (no vacuum floor). ``seed_excess`` is in
    units of vacuum per watt of seed power and is applied to both quadratures.
    """
    kwargs = {}
    if pump_plus is not None:
        kwargs["v_pump_plus"] = above_vacuum(pump_plus)
    if pump_minus is not None:
        kwargs["v_pump_minus"] = above_vacuum(pump_minus)
    if detuning is not None:
        kwargs["v_detuning"] = detuning
    if seed_excess is not None:
        seed = seed_noise(seed_excess, seed_power)
        kwargs["v_seed_plus"] = seed
        kwargs["v_seed_minus"] = seed
    return NoiseInputs(**kwargs)
