"""Homodyne detection chain: phase selection, efficiency, electronic noise.

The chain is modelled as a single beam splitter of total efficiency eta that
mixes in vacuum, followed by an additive, phase-independent electronic noise
floor (relative to shot noise).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import UnphysicalMeasurementError


@dataclass(frozen=True)
class DetectionChain:
    quantum_efficiency: float = 1.0
    fringe_visibility: float = 1.0
    propagation_losses: tuple = field(default_factory=tuple)
    electronic_noise_rel: float = 0.0
    homodyne_phase: float = math.pi / 2

    def __post_init__(self):
        object.__setattr__(self, "propagation_losses", tuple(float(x) for x in self.propagation_losses))
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError("quantum_efficiency must be in (0, 1]")
        if not 0 < self.fringe_visibility <= 1:
            raise ValueError("fringe_visibility must be in (0, 1]")
        for loss in self.propagation_losses:
            if not 0 <= loss < 1:
                raise ValueError(f"propagation loss {loss} not in [0, 1)")
        if self.electronic_noise_rel < 0:
            raise ValueError("electronic_noise_rel must be >= 0")

    @classmethod
    def from_db(cls, electronic_noise_db: float | None = None, **kwargs) -> "DetectionChain":
        """Build a chain with the electronic floor given in dB relative to shot noise."""
        elec = 0.0 if electronic_noise_db is None else from_db(electronic_noise_db)
        return cls(electronic_noise_rel=elec, **kwargs)

    @property
    def efficiency(self) -> float:
        return total_efficiency(self)


@dataclass(frozen=True)
class MeasuredVariancePair:
    v_plus_meas: float
    v_minus_meas: float
    uncertainty: float | None = None

    def __post_init__(self):
        if self.v_plus_meas <= 0 or self.v_minus_meas <= 0:
            raise ValueError("measured variances must be > 0")


def to_db(v):
    return 10.0 * np.log10(v)


def from_db(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def homodyne_variance(v_plus, v_minus, theta):
    """Variance seen by the homodyne at LO phase ``theta`` (0 selects amplitude)."""
    c = np.cos(theta)
    s = np.sin(theta)
    return v_plus * c * c + v_minus * s * s


def total_efficiency(chain: DetectionChain) -> float:
    """Detection efficiency; visibility enters squared (mode overlap)."""
    eta = chain.quantum_efficiency * chain.fringe_visibility**2
    for loss in chain.propagation_losses:
        eta *= 1.0 - loss
    return eta


def apply_chain(v_source, chain: DetectionChain):
    eta = total_efficiency(chain)
    return eta * v_source + (1.0 - eta) + chain.electronic_noise_rel


def vacuum_floor(chain: DetectionChain) -> float:
    """Lowest measurable variance: a perfectly squeezed source seen through the chain."""
    return (1.0 - total_efficiency(chain)) + chain.electronic_noise_rel


def infer_source(v_meas, chain: DetectionChain):
    """Invert :func:`apply_chain`.

    Raises UnphysicalMeasurementError when the measurement lies at or below
    the chain's floor, which means eta is overestimated or electronic noise
    was not accounted for.
    """
    eta = total_efficiency(chain)
    floor = vacuum_floor(chain)
    v_meas_arr = np.asarray(v_meas, dtype=float)
    if np.any(v_meas_arr <= floor):
        raise UnphysicalMeasurementError(
            f"measured variance {np.min(v_meas_arr):.6g} is not above the floor "
            f"{floor:.6g} implied by eta={eta:.6g} and electronic noise "
            f"{chain.electronic_noise_rel:.6g}"
        )
    return (v_meas - chain.electronic_noise_rel - (1.0 - eta)) / eta


def infer_source_uncertainty(sigma_meas, chain: DetectionChain):
    """First-order propagation of a one-sigma measurement error through :func:`infer_source`."""
    return sigma_meas / total_efficiency(chain)


def purity(v_plus, v_minus):
    return v_plus * v_minus


def purity_uncertainty(v_plus, v_minus, sigma_plus, sigma_minus):
    return math.hypot(v_minus * sigma_plus, v_plus * sigma_minus)


def is_physical(v_plus, v_minus, tol: float = 0.0) -> bool:
    """Heisenberg check: purity below 1 (beyond ``tol``) is unphysical."""
    return purity(v_plus, v_minus) >= 1.0 - tol


def phase_scan(spectrum_point, chain: DetectionChain, theta_grid):
    """Measured variance versus LO phase for one (V+, V-) pair."""
    v_plus, v_minus = spectrum_point
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta.size == 0:
        raise ValueError("theta grid is empty")
    return apply_chain(homodyne_variance(v_plus, v_minus, theta), chain)


@dataclass(frozen=True)
class Inference:
    v_plus: float
    v_minus: float
    sigma_plus: float | None
    sigma_minus: float | None
    purity: float
    purity_sigma: float | None

    @property
    def squeezing_db(self) -> float:
        return float(to_db(self.v_minus))

    @property
    def antisqueezing_db(self) -> float:
        return float(to_db(self.v_plus))


def infer_pair(v_plus_meas: float, v_minus_meas: float, chain: DetectionChain,
               sigma_plus: float | None = None, sigma_minus: float | None = None) -> Inference:
    """Infer source variances and purity from a measured pair, with optional errors."""
    vp = float(infer_source(v_plus_meas, chain))
    vm = float(infer_source(v_minus_meas, chain))
    sp = None if sigma_plus is None else infer_source_uncertainty(sigma_plus, chain)
    sm = None if sigma_minus is None else infer_source_uncertainty(sigma_minus, chain)
    ps = None
    if sp is not None and sm is not None:
        ps = purity_uncertainty(vp, vm, sp, sm)
    return Inference(vp, vm, sp, sm, purity(vp, vm), ps)
