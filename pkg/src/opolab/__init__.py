"""Quantum-noise simulation of squeezed light from a sub-threshold OPO/OPA.

Cavity model, detection chain, spectrum-analyzer synthesis and a noise-lock
loop, driven from YAML scenarios or named presets.
"""
from .detection import DetectionChain, apply_chain, homodyne_variance, infer_pair, infer_source, purity
from .errors import (
    CoverageError,
    GridMismatchError,
    OpolabError,
    ScenarioError,
    ThresholdError,
    UnphysicalMeasurementError,
)
from .lockloop import LockConfig, simulate_lock
from .model import CavityParams, NoiseInputs, Quadrature, QuadratureSpectrum, squeezing_spectrum
from .presets import PRESETS, get_preset
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "CavityParams", "CoverageError", "DetectionChain", "GridMismatchError", "LockConfig",
    "NoiseInputs", "OpolabError", "PRESETS", "Quadrature", "QuadratureSpectrum", "Scenario",
    "ScenarioError", "ThresholdError", "UnphysicalMeasurementError", "apply_chain", "get_preset",
    "homodyne_variance", "infer_pair", "infer_source", "load_scenario", "parse_scenario",
    "purity", "simulate_lock", "squeezing_spectrum",
]
