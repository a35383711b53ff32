"""Spectrum-analyzer emulation.

Traces are noise power per frequency bin, relative to shot noise. A synthetic
measurement draws each bin from the distribution of an RMS average of
``n_avg`` periodogram estimates of Gaussian noise: Gamma(shape=n_avg) with
mean equal to the true power. Bins are independent; window shapes and
leakage are not modelled.
"""
from __future__ import annotations

import hashlib
import io
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import CoverageError, GridMismatchError

log = logging.getLogger(__name__)

CSV_HEADER = "frequency_hz,power_rel_snl,power_db,masked,window_id"


@dataclass(frozen=True)
class WindowPlan:
    """One FFT window: bin centers start at ``f_start`` and are spaced by ``rbw`` (Hz)."""

    f_start: float
    f_stop: float
    rbw: float
    n_avg: int
    vbw: float | None = None  # metadata only

    def __post_init__(self):
        if not self.f_start < self.f_stop:
            raise ValueError(f"f_start ({self.f_start}) must be below f_stop ({self.f_stop})")
        if self.rbw <= 0:
            raise ValueError("rbw must be > 0")
        if int(self.n_avg) != self.n_avg or self.n_avg < 1:
            raise ValueError("n_avg must be an integer >= 1")
        object.__setattr__(self, "n_avg", int(self.n_avg))

    @property
    def n_bins(self) -> int:
        return int(np.floor((self.f_stop - self.f_start) / self.rbw + 1e-9)) + 1

    def centers(self) -> np.ndarray:
        return self.f_start + self.rbw * np.arange(self.n_bins)


# Fig. 2 windows: span, RBW and number of RMS averages per window.
FIG2_WINDOWS = (
    WindowPlan(100.0, 3.2e3, 8.0, 500),
    WindowPlan(1.6e3, 12.8e3, 32.0, 1000),
    WindowPlan(3.8e3, 100e3, 128.0, 2000),
)


@dataclass(frozen=True)
class MeasuredTrace:
    frequency: np.ndarray
    power: np.ndarray
    masked: np.ndarray
    window_id: np.ndarray
    plans: tuple
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.frequency)
        for name in ("power", "masked", "window_id"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length differs from frequency length")
        if np.any(self.power < 0):
            raise ValueError("trace powers must be >= 0")

    def __len__(self):
        return len(self.frequency)

    @property
    def rbw(self) -> np.ndarray:
        """Resolution bandwidth of each bin."""
        table = np.array([p.rbw for p in self.plans])
        return table[self.window_id]

    @property
    def n_avg(self) -> np.ndarray:
        table = np.array([p.n_avg for p in self.plans])
        return table[self.window_id]

    @property
    def n_masked(self) -> int:
        return int(np.count_nonzero(self.masked))

    @property
    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.power)

    def unmasked(self):
        keep = ~self.masked
        return self.frequency[keep], self.power[keep]

    def with_power(self, power, masked=None) -> "MeasuredTrace":
        return replace(self, power=np.asarray(power, dtype=float),
                       masked=self.masked if masked is None else np.asarray(masked, dtype=bool))

    def same_grid(self, other: "MeasuredTrace") -> bool:
        return len(self) == len(other) and np.array_equal(self.frequency, other.frequency)


def _check_psd(values, plan):
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise ValueError(f"true PSD must be finite and > 0 on {plan.f_start}-{plan.f_stop} Hz")


def analytic_trace(true_psd: Callable, plan: WindowPlan, window_id: int = 0) -> MeasuredTrace:
    """Noise-free trace: every bin holds the true PSD at its center."""
    f = plan.centers()
    p = np.asarray(true_psd(f), dtype=float) * np.ones_like(f)
    _check_psd(p, plan)
    return MeasuredTrace(f, p, np.zeros(len(f), bool), np.full(len(f), window_id), (plan,))


def synthesize_measurement(true_psd: Callable, plan: WindowPlan, rng_seed) -> MeasuredTrace:
    """Draw one averaged trace; identical for identical ``rng_seed``."""
    trace = analytic_trace(true_psd, plan)
    rng = np.random.default_rng(rng_seed)
    draws = rng.gamma(shape=plan.n_avg, scale=1.0 / plan.n_avg, size=len(trace))
    seed = rng_seed if isinstance(rng_seed, (int, np.integer)) else None
    return replace(trace, power=trace.power * draws, seed=seed)


def window_seeds(master_seed, n_windows: int) -> list:
    """Independent per-window seeds: ``SeedSequence(master_seed).spawn(n_windows)``.

    ``master_seed`` may itself be a SeedSequence, which is spawned directly.
    """
    if not isinstance(master_seed, np.random.SeedSequence):
        master_seed = np.random.SeedSequence(master_seed)
    return master_seed.spawn(n_windows)


def synthesize_windows(true_psd: Callable, plans: Sequence[WindowPlan], master_seed,
                       analytic: bool = False) -> list:
    """One trace per window; window ``i`` uses the ``i``-th seed from :func:`window_seeds`."""
    if analytic:
        return [analytic_trace(true_psd, p) for p in plans]
    label = master_seed if isinstance(master_seed, (int, np.integer)) else None
    traces = []
    for plan, seq in zip(plans, window_seeds(master_seed, len(plans))):
        traces.append(replace(synthesize_measurement(true_psd, plan, seq), seed=label))
    return traces


def _window_coverage(trace: MeasuredTrace):
    """(lo, hi, rbw) of each window's actual bins, bin edges included."""
    out = []
    for wid, plan in enumerate(trace.plans):
        f = trace.frequency[trace.window_id == wid]
        if len(f):
            out.append((f[0] - plan.rbw / 2, f[-1] + plan.rbw / 2, plan.rbw))
        else:
            out.append(None)
    return out


def stitch(traces: Sequence[MeasuredTrace]) -> MeasuredTrace:
    """Join windows into one trace, keeping the finer-RBW data where windows overlap.

    Powers are copied, never resampled. Raises CoverageError if the window
    spans leave a gap.
    """
    if not traces:
        raise ValueError("nothing to stitch")
    if len(traces) == 1:
        return traces[0]

    plans, freq, power, masked, wid, coverage = [], [], [], [], [], []
    for tr in traces:
        offset = len(plans)
        plans.extend(tr.plans)
        coverage.extend(_window_coverage(tr))
        freq.append(tr.frequency)
        power.append(tr.power)
        masked.append(tr.masked)
        wid.append(tr.window_id + offset)
    freq = np.concatenate(freq)
    power = np.concatenate(power)
    masked = np.concatenate(masked)
    wid = np.concatenate(wid)

    spans = sorted((p.f_start, p.f_stop) for p in plans)
    reach = spans[0][1]
    for lo, hi in spans[1:]:
        if lo > reach:
            raise CoverageError(f"gap between {reach} Hz and {lo} Hz")
        reach = max(reach, hi)

    keep = np.ones(len(freq), bool)
    rbw = np.array([p.rbw for p in plans])
    for w, cov in enumerate(coverage):
        if cov is None:
            continue
        lo, hi, r = cov
        # Ties in RBW go to the earlier window.
        coarser = (rbw[wid] > r) | ((rbw[wid] == r) & (wid > w))
        keep &= ~(coarser & (freq >= lo) & (freq < hi))

    order = np.argsort(freq[keep], kind="stable")
    f_out = freq[keep][order]
    if np.any(np.diff(f_out) <= 0):
        raise CoverageError("stitched bins are not strictly ascending; windows share bin centers")
    return MeasuredTrace(
        frequency=f_out,
        power=power[keep][order],
        masked=masked[keep][order],
        window_id=wid[keep][order],
        plans=tuple(plans),
        seed=traces[0].seed,
        meta=dict(traces[0].meta),
    )


def coverage_holes(trace: MeasuredTrace, f_lo: float, f_hi: float) -> list:
    """Frequencies in [f_lo, f_hi] farther than one RBW from every bin center.

    Returns the list of uncovered (start, stop) intervals; empty means the
    trace covers the band.
    """
    f = trace.frequency
    r = trace.rbw
    holes = []
    if f[0] - r[0] > f_lo:
        holes.append((f_lo, f[0] - r[0]))
    for i in range(len(f) - 1):
        reach = max(r[i], r[i + 1])
        if f[i + 1] - f[i] > 2 * reach:
            holes.append((f[i] + reach, f[i + 1] - reach))
    if f[-1] + r[-1] < f_hi:
        holes.append((f[-1] + r[-1], f_hi))
    return holes


def subtract_electronic(measured: MeasuredTrace, electronic: MeasuredTrace) -> MeasuredTrace:
    """Remove an electronic-noise trace bin by bin in linear power.

    Bins where the electronic noise is not below the measurement are masked
    and their power set to zero.
    """
    if not measured.same_grid(electronic):
        raise GridMismatchError("measured and electronic traces have different bins")
    diff = measured.power - electronic.power
    bad = diff <= 0
    return measured.with_power(np.where(bad, 0.0, diff), measured.masked | bad)


def add_electronic(trace: MeasuredTrace, electronic: MeasuredTrace) -> MeasuredTrace:
    if not trace.same_grid(electronic):
        raise GridMismatchError("traces have different bins")
    return trace.with_power(trace.power + electronic.power)


def mains_mask(frequency, fundamental: float = 50.0, n_harmonics: int = 0, half_width: float = 4.0):
    """Boolean array: True for bins within ``half_width`` of k*fundamental, k = 1..n_harmonics."""
    f = np.asarray(frequency, dtype=float)
    if n_harmonics <= 0:
        return np.zeros(f.shape, bool)
    k = np.arange(1, n_harmonics + 1) * fundamental
    return np.any(np.abs(f[:, None] - k[None, :]) <= half_width + 1e-9, axis=1)


def mask_mains(trace: MeasuredTrace, fundamental: float = 50.0, n_harmonics: int = 0,
               half_width: float | None = None) -> MeasuredTrace:
    """Flag bins near mains harmonics.

    ``half_width`` defaults to half the RBW at each harmonic and may not be
    smaller than that. The number of newly masked bins is added to
    ``meta['mains_masked']``.
    """
    if n_harmonics <= 0 or len(trace) == 0:
        return trace
    f = trace.frequency
    rbw = trace.rbw
    harmonics = np.arange(1, n_harmonics + 1) * fundamental
    inside = harmonics[(harmonics >= f[0]) & (harmonics <= f[-1])]
    nearest = np.abs(f[None, :] - inside[:, None]).argmin(axis=1) if len(inside) else []
    needed = float(np.max(rbw[nearest])) / 2 if len(inside) else 0.0
    if half_width is None:
        half_width = needed
    elif half_width + 1e-9 < needed:
        raise ValueError(f"half_width {half_width} Hz is below half the bin spacing ({needed} Hz)")
    hit = mains_mask(f, fundamental, n_harmonics, half_width)
    new = int(np.count_nonzero(hit & ~trace.masked))
    log.debug("masked %d bins near %g Hz harmonics", new, fundamental)
    meta = dict(trace.meta)
    meta["mains_masked"] = int(meta.get("mains_masked", 0)) + new
    return replace(trace, masked=trace.masked | hit, meta=meta)


def inject_lock_artifact(trace: MeasuredTrace, dither_freq: float, amplitude: float) -> MeasuredTrace:
    """Add a one-bin peak of linear power ``amplitude`` at the bin nearest ``dither_freq``."""
    f = trace.frequency
    r = trace.rbw
    if dither_freq < f[0] - r[0] / 2 or dither_freq > f[-1] + r[-1] / 2:
        raise ValueError(f"dither frequency {dither_freq} Hz outside trace span")
    if amplitude == 0:
        return trace
    idx = int(np.argmin(np.abs(f - dither_freq)))
    power = trace.power.copy()
    power[idx] += amplitude
    return trace.with_power(power)


def _band(trace, f_lo, f_hi):
    if not f_lo < f_hi:
        raise ValueError("band needs f_lo < f_hi")
    sel = (trace.frequency >= f_lo) & (trace.frequency <= f_hi) & ~trace.masked
    if not np.any(sel):
        raise ValueError(f"no unmasked bins in {f_lo}-{f_hi} Hz")
    return sel


def band_mean_power(trace: MeasuredTrace, f_lo: float, f_hi: float) -> float:
    return float(np.mean(trace.power[_band(trace, f_lo, f_hi)]))


def band_mean_sigma(trace: MeasuredTrace, f_lo: float, f_hi: float) -> float:
    """One-sigma averaging uncertainty of :func:`band_mean_power` (Gamma statistics)."""
    sel = _band(trace, f_lo, f_hi)
    p = trace.power[sel]
    return float(np.sqrt(np.sum(p**2 / trace.n_avg[sel])) / len(p))


FIG5_PLAN = WindowPlan(2e3, 100e3, 128.0, 1000)


@dataclass(frozen=True)
class SweepResult:
    seed_powers: np.ndarray
    band_means: np.ndarray
    band_sigmas: np.ndarray
    slope: float
    intercept: float
    residual_norm: float
    slope_sigma: float

    @property
    def relative_residual(self) -> float:
        return self.residual_norm / float(np.linalg.norm(self.band_means))

    def predict(self, power):
        return self.slope * np.asarray(power) + self.intercept


def affine_fit(x, y, sigma=None):
    """Least-squares line; returns (slope, intercept, residual norm, slope sigma)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if sigma is None or np.any(np.asarray(sigma) == 0):
        w = np.ones_like(y)
    else:
        w = 1.0 / np.asarray(sigma, dtype=float)
    design = np.column_stack([x, np.ones_like(x)]) * w[:, None]
    coef, *_ = np.linalg.lstsq(design, y * w, rcond=None)
    resid = y - (coef[0] * x + coef[1])
    cov = np.linalg.inv(design.T @ design)
    slope_sigma = float(np.sqrt(cov[0, 0])) if sigma is not None else float("nan")
    return float(coef[0]), float(coef[1]), float(np.linalg.norm(resid)), slope_sigma


def seed_sweep(psd_for_power: Callable, seed_powers, band=(5e3, 6e3), plan: WindowPlan = FIG5_PLAN,
               analytic: bool = True, rng_seed: int = 0) -> SweepResult:
    """Band-mean noise power versus seed power, with an affine fit.

    ``psd_for_power(P)`` must return the true PSD (callable of Hz) at seed
    power ``P``; threshold violations raised there propagate.
    """
    powers = np.asarray(seed_powers, dtype=float)
    if len(powers) < 3:
        raise ValueError("seed sweep needs at least 3 powers")
    seeds = window_seeds(rng_seed, len(powers))
    means, sigmas = [], []
    for power, seq in zip(powers, seeds):
        psd = psd_for_power(power)
        trace = analytic_trace(psd, plan) if analytic else synthesize_measurement(psd, plan, seq)
        means.append(band_mean_power(trace, *band))
        sigmas.append(0.0 if analytic else band_mean_sigma(trace, *band))
    means = np.array(means)
    sigmas = np.array(sigmas)
    slope, intercept, resid, slope_sigma = affine_fit(powers, means, None if analytic else sigmas)
    return SweepResult(powers, means, sigmas, slope, intercept, resid, slope_sigma)


def trace_hash(trace: MeasuredTrace) -> str:
    h = hashlib.sha256()
    for arr in (trace.frequency, trace.power, trace.masked, trace.window_id):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def format_trace_csv(trace: MeasuredTrace, comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for i, p in enumerate(trace.plans):
        vbw = "" if p.vbw is None else f" vbw={p.vbw:g}"
        buf.write(f"# window {i}: f_start={p.f_start:g} f_stop={p.f_stop:g} rbw={p.rbw:g} n_avg={p.n_avg}{vbw}\n")
    buf.write(f"# rng_seed={trace.seed}\n")
    for key, value in sorted(trace.meta.items()):
        buf.write(f"# {key}={value}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(CSV_HEADER + "\n")
    db = trace.power_db
    for f, p, d, m, w in zip(trace.frequency, trace.power, db, trace.masked, trace.window_id):
        buf.write(f"{f:.6f},{p:.12e},{d:.6f},{int(m)},{int(w)}\n")
    return buf.getvalue()


def read_trace_csv(text: str) -> MeasuredTrace:
    """Parse the CSV written by :func:`format_trace_csv` (window plans from the comments)."""
    plans, seed, meta, rows = [], None, {}, []
    header_seen = False
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("window "):
                fields = dict(kv.split("=") for kv in body.split(":", 1)[1].split())
                plans.append(WindowPlan(float(fields["f_start"]), float(fields["f_stop"]),
                                        float(fields["rbw"]), int(fields["n_avg"]),
                                        float(fields["vbw"]) if "vbw" in fields else None))
            elif body.startswith("rng_seed="):
                value = body.split("=", 1)[1]
                seed = None if value == "None" else int(value)
            elif "=" in body:
                key, value = body.split("=", 1)
                meta[key] = value
            continue
        if not header_seen:
            if line.strip() != CSV_HEADER:
                raise ValueError(f"unexpected trace header {line!r}")
            header_seen = True
            continue
        if line.strip():
            rows.append(line.split(","))
    data = np.array(rows, dtype=object)
    if len(rows) == 0:
        data = np.empty((0, 5), dtype=object)
    return MeasuredTrace(
        frequency=data[:, 0].astype(float),
        power=data[:, 1].astype(float),
        masked=data[:, 3].astype(int).astype(bool),
        window_id=data[:, 4].astype(int),
        plans=tuple(plans),
        seed=seed,
        meta=meta,
    )
