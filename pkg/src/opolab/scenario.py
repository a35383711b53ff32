"""Scenario files: one YAML document describing cavity, noise, detection,
analyzer windows and lock settings.

User-facing units: frequencies and decay rates in Hz (converted to rad/s for
the model), powers in W, efficiencies as fractions, noise levels in dB
relative to vacuum, phases in degrees unless the key says ``_rad``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml
from scipy import constants

from . import noise as noise_mod
from .analyzer import WindowPlan
from .detection import DetectionChain, apply_chain, from_db, homodyne_variance
from .errors import ScenarioError
from .lockloop import LockConfig
from .model import CavityParams, NoiseInputs, QuadratureSpectrum, operating_point, squeezing_spectrum

TWO_PI = 2.0 * math.pi


def _db(value):
    return None if value is None else float(from_db(value))


@dataclass(frozen=True)
class PeakSpec:
    center_hz: float
    height_db: float
    width_hz: float

    def build(self) -> noise_mod.Peak:
        return noise_mod.Peak(self.center_hz, _db(self.height_db), self.width_hz)


@dataclass(frozen=True)
class ExcessSpec:
    """Excess noise above vacuum; ``level_db`` is the excess at ``reference_hz``."""

    level_db: float | None = None
    reference_hz: float = 1e3
    corner_hz: float = 0.0
    exponent: float = 0.0
    peaks: tuple = ()

    def build(self, scale: float = 1.0) -> noise_mod.ExcessNoise:
        level = 0.0 if self.level_db is None else _db(self.level_db)
        peaks = tuple(
            noise_mod.Peak(p.center_hz, scale * _db(p.height_db), p.width_hz) for p in self.peaks
        )
        return noise_mod.ExcessNoise(scale * level, self.reference_hz, self.corner_hz, self.exponent, peaks)


@dataclass(frozen=True)
class CavitySpec:
    kappa_in_hz: float = 0.2e6
    kappa_out_hz: float = 18e6
    kappa_loss_hz: float = 1.8e6
    kappa_b_hz: float = 5e9
    kappa_in_b_hz: float = 4.5e9
    epsilon_hz: float = 2e3
    classical_gain: float = 5.0
    wavelength_m: float = 1064e-9
    seed_power_w: float = 0.0

    @property
    def carrier_frequency(self) -> float:
        return TWO_PI * constants.c / self.wavelength_m

    def base_params(self) -> CavityParams:
        return CavityParams(
            kappa_in_a=TWO_PI * self.kappa_in_hz,
            kappa_out_a=TWO_PI * self.kappa_out_hz,
            kappa_l_a=TWO_PI * self.kappa_loss_hz,
            kappa_b=TWO_PI * self.kappa_b_hz,
            kappa_in_b=TWO_PI * self.kappa_in_b_hz,
            epsilon=TWO_PI * self.epsilon_hz,
        )

    def params(self, seed_power: float | None = None) -> CavityParams:
        power = self.seed_power_w if seed_power is None else seed_power
        return operating_point(self.base_params(), power, self.classical_gain, self.carrier_frequency)


@dataclass(frozen=True)
class SeedNoiseSpec(ExcessSpec):
    """Technical seed noise: excess equals ``level_db`` at ``reference_power_w``, linear in power."""

    reference_power_w: float = 1e-6


@dataclass(frozen=True)
class DetuningSpec:
    magnitude_db: float | None = None
    corner_hz: float = 100.0
    peaks: tuple = ()

    def build(self):
        base = None
        if self.magnitude_db is not None:
            base = noise_mod.acoustic_detuning(_db(self.magnitude_db), self.corner_hz)
        peaks = [p.build() for p in self.peaks]
        if base is None and not peaks:
            return None

        def spectrum(omega):
            out = np.zeros_like(np.asarray(omega, dtype=float)) if base is None else base(omega)
            for p in peaks:
                out = out + p(omega)
            return out
        return spectrum


@dataclass(frozen=True)
class NoiseSpec:
    pump_plus: ExcessSpec | None = None
    pump_minus: ExcessSpec | None = None
    detuning: DetuningSpec | None = None
    seed: SeedNoiseSpec | None = None

    def build(self, seed_power: float) -> NoiseInputs:
        seed_excess = None
        if self.seed is not None:
            per_watt = 1.0 / self.seed.reference_power_w
            seed_excess = self.seed.build(scale=per_watt)
        return noise_mod.build_noise_inputs(
            pump_plus=None if self.pump_plus is None else self.pump_plus.build(),
            pump_minus=None if self.pump_minus is None else self.pump_minus.build(),
            detuning=None if self.detuning is None else self.detuning.build(),
            seed_excess=seed_excess,
            seed_power=seed_power,
        )


@dataclass(frozen=True)
class DetectionSpec:
    quantum_efficiency: float = 0.93
    fringe_visibility: float = 0.965
    losses: tuple = (0.09,)
    electronic_noise_db: float | None = -12.0
    homodyne_phase_deg: float = 90.0
    # Added identically to squeezed and shot-noise traces (imperfect common-mode rejection).
    common_mode_excess: ExcessSpec | None = None
    electronic_peaks: tuple = ()

    def chain(self) -> DetectionChain:
        return DetectionChain.from_db(
            self.electronic_noise_db,
            quantum_efficiency=self.quantum_efficiency,
            fringe_visibility=self.fringe_visibility,
            propagation_losses=tuple(self.losses),
            homodyne_phase=math.radians(self.homodyne_phase_deg),
        )

    def electronic_psd(self, f_hz):
        f = np.asarray(f_hz, dtype=float)
        floor = 0.0 if self.electronic_noise_db is None else _db(self.electronic_noise_db)
        out = np.full(f.shape, floor)
        for p in self.electronic_peaks:
            out = out + p.build()(TWO_PI * f)
        return out

    def common_mode_psd(self, f_hz):
        f = np.asarray(f_hz, dtype=float)
        if self.common_mode_excess is None:
            return np.zeros(f.shape)
        return self.common_mode_excess.build()(TWO_PI * f)


@dataclass(frozen=True)
class WindowSpec:
    f_start: float
    f_stop: float
    rbw: float
    n_avg: int
    vbw: float | None = None

    def plan(self) -> WindowPlan:
        return WindowPlan(self.f_start, self.f_stop, self.rbw, self.n_avg, self.vbw)


FIG2_WINDOW_SPECS = (
    WindowSpec(100.0, 3200.0, 8.0, 500),
    WindowSpec(1600.0, 12800.0, 32.0, 1000),
    WindowSpec(3800.0, 100000.0, 128.0, 2000),
)


@dataclass(frozen=True)
class MainsSpec:
    fundamental_hz: float = 50.0
    n_harmonics: int = 0
    half_width_hz: float | None = None


@dataclass(frozen=True)
class AnalyzerSpec:
    windows: tuple = FIG2_WINDOW_SPECS
    mains: MainsSpec = field(default_factory=MainsSpec)
    lock_artifact_power: float = 0.0

    def plans(self) -> list:
        return [w.plan() for w in self.windows]


@dataclass(frozen=True)
class SweepSpec:
    seed_powers_w: tuple = (1e-9, 700e-9, 6e-6)
    band_hz: tuple = (5e3, 6e3)
    window: WindowSpec = WindowSpec(2000.0, 100000.0, 128.0, 1000)


@dataclass(frozen=True)
class PhaseScanSpec:
    frequency_hz: float = 11.2e3
    theta_start_deg: float = 0.0
    theta_stop_deg: float = 360.0
    n_points: int = 361

    def grid(self) -> np.ndarray:
        return np.radians(np.linspace(self.theta_start_deg, self.theta_stop_deg, self.n_points))


@dataclass(frozen=True)
class LockSpec:
    dither_freq_hz: float = 20e3
    dither_amp_rad: float = 0.1
    demod_phase_rad: float = 0.0
    lowpass_corner_hz: float = 100.0
    loop_gain: float = 0.03
    dt_s: float = 4e-6
    duration_s: float = 1.0
    meter_bandwidth_hz: float = 300e3
    initial_offset_rad: float = 0.3
    # Analysis pair: either explicit (V+, V-) or taken from the model at this frequency.
    analysis_pair: tuple | None = None
    analysis_frequency_hz: float = 2e6
    drift_hold_s: float | None = None
    drift_ramp_rad_per_s: float = 0.0
    write_every: int = 1


@dataclass(frozen=True)
class InferSpec:
    v_plus: float | None = None
    v_minus: float | None = None
    sigma_plus: float | None = None
    sigma_minus: float | None = None


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    description: str = ""
    seed: int = 0
    cavity: CavitySpec = field(default_factory=CavitySpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    detection: DetectionSpec = field(default_factory=DetectionSpec)
    analyzer: AnalyzerSpec = field(default_factory=AnalyzerSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    phase_scan: PhaseScanSpec = field(default_factory=PhaseScanSpec)
    lock: LockSpec = field(default_factory=LockSpec)
    infer: InferSpec = field(default_factory=InferSpec)
    # Second configuration evaluated by the spectrum command (e.g. isolator inserted).
    isolator: bool | None = None
    isolator_loss: float = 0.09

    # --- physics glue -------------------------------------------------

    def with_isolator(self, inserted: bool) -> "Scenario":
        """Isolator in: no backscatter seed and one extra propagation loss."""
        if self.isolator is None:
            return self
        losses = tuple(self.detection.losses)
        cavity = self.cavity
        if inserted:
            cavity = dataclasses.replace(cavity, seed_power_w=0.0)
            losses = losses + (self.isolator_loss,)
        return dataclasses.replace(
            self, isolator=inserted, cavity=cavity,
            detection=dataclasses.replace(self.detection, losses=losses),
        )

    def params(self, seed_power: float | None = None) -> CavityParams:
        return self.cavity.params(seed_power)

    def noise_inputs(self, seed_power: float | None = None) -> NoiseInputs:
        power = self.cavity.seed_power_w if seed_power is None else seed_power
        return self.noise.build(power)

    def source_spectrum(self, f_hz, seed_power: float | None = None) -> QuadratureSpectrum:
        grid = TWO_PI * np.atleast_1d(np.asarray(f_hz, dtype=float))
        return squeezing_spectrum(self.params(seed_power), self.noise_inputs(seed_power), grid)

    def variance_pair(self, f_hz: float, seed_power: float | None = None) -> tuple:
        s = self.source_spectrum([f_hz], seed_power)
        return float(s.v_plus[0]), float(s.v_minus[0])

    def chain(self) -> DetectionChain:
        return self.detection.chain()

    def squeezed_psd(self, seed_power: float | None = None, subtract_electronic: bool = False):
        """Measured noise power (rel. shot noise) versus frequency in Hz, electronics included."""
        chain = dataclasses.replace(self.chain(), electronic_noise_rel=0.0)

        def psd(f_hz):
            f = np.asarray(f_hz, dtype=float)
            s = self.source_spectrum(f, seed_power)
            v = homodyne_variance(s.v_plus, s.v_minus, chain.homodyne_phase)
            out = apply_chain(v, chain) + self.detection.common_mode_psd(f)
            if not subtract_electronic:
                out = out + self.detection.electronic_psd(f)
            return out
        return psd

    def shot_noise_psd(self):
        def psd(f_hz):
            f = np.asarray(f_hz, dtype=float)
            return 1.0 + self.detection.common_mode_psd(f) + self.detection.electronic_psd(f)
        return psd

    def electronic_psd(self):
        return self.detection.electronic_psd

    def lock_config(self) -> LockConfig:
        spec = self.lock
        pair = spec.analysis_pair
        if pair is None:
            # The meter sees the measured variances, i.e. after detection losses.
            chain = self.chain()
            pair = tuple(float(apply_chain(v, chain)) for v in self.variance_pair(spec.analysis_frequency_hz))
        target = math.pi / 2 if pair[0] > pair[1] else 0.0
        return LockConfig(
            dither_freq=spec.dither_freq_hz,
            dither_amp=spec.dither_amp_rad,
            demod_phase=spec.demod_phase_rad,
            lowpass_corner=spec.lowpass_corner_hz,
            loop_gain=spec.loop_gain,
            dt=spec.dt_s,
            duration=spec.duration_s,
            meter_bandwidth=spec.meter_bandwidth_hz,
            analysis_variance_pair=tuple(pair),
            initial_phase=target + spec.initial_offset_rad,
        )

    def digest(self) -> str:
        text = yaml.safe_dump(to_dict(self), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# --- (de)serialization --------------------------------------------------

_NESTED = {
    (Scenario, "cavity"): CavitySpec,
    (Scenario, "noise"): NoiseSpec,
    (Scenario, "detection"): DetectionSpec,
    (Scenario, "analyzer"): AnalyzerSpec,
    (Scenario, "sweep"): SweepSpec,
    (Scenario, "phase_scan"): PhaseScanSpec,
    (Scenario, "lock"): LockSpec,
    (Scenario, "infer"): InferSpec,
    (NoiseSpec, "pump_plus"): ExcessSpec,
    (NoiseSpec, "pump_minus"): ExcessSpec,
    (NoiseSpec, "detuning"): DetuningSpec,
    (NoiseSpec, "seed"): SeedNoiseSpec,
    (DetectionSpec, "common_mode_excess"): ExcessSpec,
    (AnalyzerSpec, "mains"): MainsSpec,
    (SweepSpec, "window"): WindowSpec,
}
_LISTS = {
    (ExcessSpec, "peaks"): PeakSpec,
    (SeedNoiseSpec, "peaks"): PeakSpec,
    (DetuningSpec, "peaks"): PeakSpec,
    (DetectionSpec, "electronic_peaks"): PeakSpec,
    (AnalyzerSpec, "windows"): WindowSpec,
}
_INTS = {"n_avg", "n_harmonics", "n_points", "seed", "write_every"}


def to_dict(obj) -> Any:
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            # None is written only where it overrides a non-None default.
            if value is None and f.default is None:
                continue
            out[f.name] = to_dict(value)
        return out
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _coerce(cls, name, value, where):
    if value is None:
        return None
    if (cls, name) in _NESTED:
        return from_dict(_NESTED[(cls, name)], value, where)
    if (cls, name) in _LISTS:
        item_cls = _LISTS[(cls, name)]
        if not isinstance(value, list):
            raise ScenarioError("expected a list", where)
        items = []
        for i, item in enumerate(value):
            if isinstance(item, list) and item_cls is PeakSpec:
                item = dict(zip(("center_hz", "height_db", "width_hz"), item))
            items.append(from_dict(item_cls, item, f"{where}[{i}]"))
        return tuple(items)
    if isinstance(value, bool) or isinstance(value, str):
        return value
    if isinstance(value, list):
        try:
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ScenarioError("expected a list of numbers", where) from None
    if isinstance(value, (int, float)):
        if name in _INTS:
            if float(value) != int(value):
                raise ScenarioError("expected an integer", where)
            return int(value)
        return float(value)
    raise ScenarioError(f"unsupported value {value!r}", where)


def from_dict(cls, data, where: str = ""):
    if not isinstance(data, dict):
        raise ScenarioError(f"expected a mapping for {cls.__name__}", where or None)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else str(key)
        if key not in names:
            raise ScenarioError(f"unknown field (expected one of {sorted(names)})", path)
        kwargs[key] = _coerce(cls, key, value, path)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), where or None) from exc


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ScenarioError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", where) from None
    if data is None:
        data = {}
    scenario = from_dict(Scenario, data)
    validate(scenario)
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(to_dict(scenario), sort_keys=False)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), source=str(path))


def validate(scenario: Scenario) -> None:
    """Build every module-level object once so bad values fail at load time."""
    checks = (
        ("cavity", lambda: scenario.cavity.base_params()),
        ("detection", scenario.chain),
        ("analyzer.windows", scenario.analyzer.plans),
        ("sweep.window", scenario.sweep.window.plan),
    )
    for where, check in checks:
        try:
            check()
        except ValueError as exc:
            raise ScenarioError(str(exc), where) from exc
    if scenario.cavity.classical_gain < 1:
        raise ScenarioError("classical gain must be >= 1", "cavity.classical_gain")
