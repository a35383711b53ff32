"""Command-line front end.

    opolab spectrum    --preset opo-fig2 --out out/
    opolab phase-scan  --preset phase-fig3 --out out/
    opolab seed-sweep  --preset opa-fig5 --analytic --out out/
    opolab lock        --preset lock-default --out out/
    opolab infer       --preset phase-fig3
    opolab presets     [--dump NAME]

Exit codes: 0 success, 2 bad arguments or scenario, 3 physics-domain error
(threshold, unphysical measurement), 4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import analyzer as an
from . import detection as det
from .errors import OpolabError, ScenarioError, ThresholdError, UnphysicalMeasurementError
from .lockloop import format_lock_csv, inject_lock_artifact, resonance_drift, simulate_lock
from .presets import PRESETS, get_preset
from .scenario import dump_scenario, load_scenario

log = logging.getLogger("opolab")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PHYSICS = 3
EXIT_IO = 4


def _scenario(args):
    if args.scenario and args.preset:
        raise ScenarioError("give either --scenario or --preset, not both")
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        try:
            scenario = get_preset(args.preset or "opo-fig2")
        except KeyError as exc:
            raise ScenarioError(exc.args[0], "--preset") from None
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    return scenario


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _measure(psd, plans, seed, analytic, mains):
    traces = an.synthesize_windows(psd, plans, seed, analytic=analytic)
    trace = an.stitch(traces)
    if mains.n_harmonics:
        trace = an.mask_mains(trace, mains.fundamental_hz, mains.n_harmonics, mains.half_width_hz)
    return trace


def _composite_csv(squeezed, reference, comments):
    lines = [f"# {c}" for c in comments]
    lines.append("frequency_hz,squeezed_rel_qnl_db,masked,window_id")
    masked = squeezed.masked | reference.masked
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_db = 10 * np.log10(squeezed.power / reference.power)
    for f, r, m, w in zip(squeezed.frequency, ratio_db, masked, squeezed.window_id):
        lines.append(f"{f:.6f},{r:.6f},{int(m)},{int(w)}")
    return "\n".join(lines) + "\n"


def spectrum_traces(scenario, analytic: bool = False) -> dict:
    """Shot-noise, squeezed and electronic traces as the spectrum command builds them.

    The electronic trace is left out when the scenario has no electronic noise.
    """
    plans = scenario.analyzer.plans()
    mains = scenario.analyzer.mains
    # Independent streams for shot noise, squeezed and electronic traces.
    seq_a, seq_b, seq_c = an.window_seeds(scenario.seed, 3)
    meta = {"scenario": scenario.name, "scenario_hash": scenario.digest()}
    qnl = _measure(scenario.shot_noise_psd(), plans, seq_a, analytic, mains)
    sqz = _measure(scenario.squeezed_psd(), plans, seq_b, analytic, mains)
    has_elec = scenario.detection.electronic_noise_db is not None
    elec = _measure(scenario.electronic_psd(), plans, seq_c, analytic, mains) if has_elec else None
    artifact = scenario.analyzer.lock_artifact_power
    if artifact:
        sqz = inject_lock_artifact(sqz, scenario.lock.dither_freq_hz, artifact)
    traces = {}
    for label, trace in (("shot_noise", qnl), ("squeezed", sqz), ("electronic", elec)):
        if trace is None:
            continue
        traces[label] = dataclasses.replace(trace, seed=scenario.seed,
                                            meta={**trace.meta, **meta, "trace": label})
    return traces


def _spectrum_set(scenario, out, analytic, suffix=""):
    traces = spectrum_traces(scenario, analytic)
    for label, trace in traces.items():
        _write(out, f"{label}{suffix}.csv", an.format_trace_csv(trace))
    _write(out, f"composite{suffix}.csv",
           _composite_csv(traces["squeezed"], traces["shot_noise"],
                          [f"scenario={scenario.name}", f"rng_seed={scenario.seed}", f"analytic={analytic}"]))
    return traces


def _summary_band(trace, reference, lo, hi):
    return an.band_mean_power(trace, lo, hi) / an.band_mean_power(reference, lo, hi)


def cmd_spectrum(args) -> int:
    scenario = _scenario(args)
    out = Path(args.out)
    if scenario.isolator is None:
        traces = _spectrum_set(scenario, out, args.analytic)
        sqz, qnl = traces["squeezed"], traces["shot_noise"]
        lo, hi = float(sqz.frequency[0]), float(sqz.frequency[-1])
        print(f"{scenario.name}: squeezed/QNL band mean {det.to_db(_summary_band(sqz, qnl, lo, hi)):.2f} dB "
              f"over {lo:g}-{hi:g} Hz; {sqz.n_masked} masked bins")
        return EXIT_OK
    for inserted, suffix in ((False, "_no_isolator"), (True, "_isolator")):
        variant = scenario.with_isolator(inserted)
        traces = _spectrum_set(variant, out, args.analytic, suffix)
        band = an.band_mean_power(traces["squeezed"], 300.0, 700.0)
        print(f"{scenario.name}{suffix}: 300-700 Hz band mean {band:.4f} (rel. shot noise)")
    return EXIT_OK


def cmd_phase_scan(args) -> int:
    scenario = _scenario(args)
    spec = scenario.phase_scan
    freq = args.frequency if args.frequency is not None else spec.frequency_hz
    theta = spec.grid() if args.points is None else np.radians(np.linspace(0, 360, args.points))
    chain = scenario.chain()
    v_plus, v_minus = scenario.variance_pair(freq)
    trace = det.phase_scan((v_plus, v_minus), chain, theta)
    floor = chain.electronic_noise_rel
    v_max = float(np.max(trace)) - floor
    v_min = float(np.min(trace)) - floor
    lines = [
        f"# scenario={scenario.name}",
        f"# frequency_hz={freq:g}",
        f"# source_v_plus={v_plus:.9g}",
        f"# source_v_minus={v_minus:.9g}",
        f"# efficiency={chain.efficiency:.9g}",
        f"# measured_purity={v_max * v_min:.6g}",
        "theta_rad,theta_deg,variance,variance_db",
    ]
    for th, v in zip(theta, trace):
        lines.append(f"{th:.9f},{math.degrees(th):.6f},{v:.12e},{det.to_db(v):.6f}")
    _write(Path(args.out), "phase_scan.csv", "\n".join(lines) + "\n")
    print(f"{scenario.name}: {freq:g} Hz min {det.to_db(np.min(trace)):.2f} dB, "
          f"max {det.to_db(np.max(trace)):.2f} dB, measured purity {v_max * v_min:.3f}")
    return EXIT_OK


def cmd_seed_sweep(args) -> int:
    scenario = _scenario(args)
    spec = scenario.sweep
    powers = spec.seed_powers_w if args.powers is None else tuple(args.powers)
    result = an.seed_sweep(
        lambda p: scenario.squeezed_psd(p, subtract_electronic=True),
        powers, band=tuple(spec.band_hz), plan=spec.window.plan(),
        analytic=args.analytic, rng_seed=scenario.seed,
    )
    lines = [
        f"# scenario={scenario.name}",
        f"# band_hz={spec.band_hz[0]:g}-{spec.band_hz[1]:g}",
        f"# analytic={args.analytic}",
        f"# rng_seed={scenario.seed}",
        f"# slope_per_w={result.slope:.12e}",
        f"# slope_sigma_per_w={result.slope_sigma:.6e}",
        f"# intercept={result.intercept:.12e}",
        f"# residual_norm={result.residual_norm:.6e}",
        f"# relative_residual={result.relative_residual:.6e}",
        "seed_power_w,band_mean,band_mean_sigma,band_mean_db,fit",
    ]
    for p, m, s, fit in zip(result.seed_powers, result.band_means, result.band_sigmas, result.predict(result.seed_powers)):
        lines.append(f"{p:.6e},{m:.12e},{s:.6e},{det.to_db(m):.6f},{fit:.12e}")
    _write(Path(args.out), "seed_sweep.csv", "\n".join(lines) + "\n")
    print(f"{scenario.name}: slope {result.slope:.6g} /W, intercept {result.intercept:.6g}, "
          f"relative residual {result.relative_residual:.2e}")
    return EXIT_OK


def cmd_lock(args) -> int:
    scenario = _scenario(args)
    config = scenario.lock_config()
    if args.gain is not None:
        config = dataclasses.replace(config, loop_gain=args.gain)
    disturbance = contrast = None
    if scenario.lock.drift_hold_s is not None:
        disturbance, contrast = resonance_drift(scenario.lock.drift_hold_s, scenario.lock.drift_ramp_rad_per_s)
    trace = simulate_lock(config, disturbance, rng_seed=scenario.seed, contrast=contrast)
    every = args.every if args.every is not None else scenario.lock.write_every
    comments = [f"scenario={scenario.name}", f"rng_seed={scenario.seed}",
                f"analysis_pair={config.analysis_variance_pair[0]:.9g},{config.analysis_variance_pair[1]:.9g}",
                f"write_every={every}"]
    _write(Path(args.out), "lock_trace.csv", format_lock_csv(trace, every, comments))
    s = trace.summary
    print(f"{scenario.name}: converged={s.converged} target={s.target:.4f} rad "
          f"offset={s.final_offset:.4g} rad residual_rms={s.residual_rms:.4g} rad settle={s.settle_time}")
    return EXIT_OK


def cmd_infer(args) -> int:
    scenario = _scenario(args)
    spec = scenario.infer
    v_plus = args.v_plus if args.v_plus is not None else spec.v_plus
    v_minus = args.v_minus if args.v_minus is not None else spec.v_minus
    if v_plus is None or v_minus is None:
        raise ScenarioError("need measured v_plus and v_minus (scenario infer section or --v-plus/--v-minus)")
    sp = args.sigma_plus if args.sigma_plus is not None else spec.sigma_plus
    sm = args.sigma_minus if args.sigma_minus is not None else spec.sigma_minus
    chain = scenario.chain()
    res = det.infer_pair(v_plus, v_minus, chain, sp, sm)

    def pm(value, sigma, fmt=".4f"):
        return f"{value:{fmt}}" if sigma is None else f"{value:{fmt}} +/- {sigma:{fmt}}"

    sqz_db_sigma = None if res.sigma_minus is None else 10 / math.log(10) * res.sigma_minus / res.v_minus
    asq_db_sigma = None if res.sigma_plus is None else 10 / math.log(10) * res.sigma_plus / res.v_plus
    meas_purity_sigma = None if sp is None or sm is None else det.purity_uncertainty(v_plus, v_minus, sp, sm)
    report = [
        f"scenario: {scenario.name}",
        f"efficiency: {chain.efficiency:.6f}",
        f"electronic_noise_rel: {chain.electronic_noise_rel:.6g}",
        f"measured_purity: {pm(det.purity(v_plus, v_minus), meas_purity_sigma, '.3f')}",
        f"inferred_v_plus: {pm(res.v_plus, res.sigma_plus)}",
        f"inferred_v_minus: {pm(res.v_minus, res.sigma_minus)}",
        f"inferred_squeezing_db: {pm(res.squeezing_db, sqz_db_sigma, '.2f')}",
        f"inferred_antisqueezing_db: {pm(res.antisqueezing_db, asq_db_sigma, '.2f')}",
        f"inferred_purity: {pm(res.purity, res.purity_sigma, '.3f')}",
    ]
    if not det.is_physical(res.v_plus, res.v_minus, tol=res.purity_sigma or 0.0):
        report.append("warning: inferred purity below 1 (unphysical)")
    text = "\n".join(report) + "\n"
    print(text, end="")
    if args.out:
        _write(Path(args.out), "infer.txt", text)
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.dump:
        try:
            print(dump_scenario(get_preset(args.dump)), end="")
        except KeyError as exc:
            raise ScenarioError(exc.args[0], "--dump") from None
        return EXIT_OK
    for name, factory in PRESETS.items():
        print(f"{name:18s} {factory().description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario YAML file")
    common.add_argument("--preset", help="named preset (see `opolab presets`)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the scenario RNG seed")
    common.add_argument("--analytic", action="store_true", help="skip synthesis noise")
    common.add_argument("--format", choices=["csv"], default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="opolab", description="OPO/OPA squeezing simulation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="noise spectra (QNL, squeezed, electronic)").set_defaults(func=cmd_spectrum)
    p = sub.add_parser("phase-scan", parents=[common], help="variance versus homodyne phase")
    p.add_argument("--frequency", type=float, help="analysis frequency in Hz")
    p.add_argument("--points", type=int, help="number of phases over 0-360 deg")
    p.set_defaults(func=cmd_phase_scan)
    p = sub.add_parser("seed-sweep", parents=[common], help="band-mean noise versus seed power")
    p.add_argument("--powers", type=float, nargs="+", help="seed powers in W")
    p.set_defaults(func=cmd_seed_sweep)
    p = sub.add_parser("lock", parents=[common], help="noise-lock simulation")
    p.add_argument("--gain", type=float, help="override loop gain")
    p.add_argument("--every", type=int, help="write every n-th sample")
    p.set_defaults(func=cmd_lock)
    p = sub.add_parser("infer", parents=[common], help="infer source squeezing from measured variances")
    p.add_argument("--v-plus", type=float)
    p.add_argument("--v-minus", type=float)
    p.add_argument("--sigma-plus", type=float)
    p.add_argument("--sigma-minus", type=float)
    p.set_defaults(func=cmd_infer, out=None)
    p = sub.add_parser("presets", help="list presets or dump one as YAML")
    p.add_argument("--dump", metavar="NAME")
    p.set_defaults(func=cmd_presets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ThresholdError, UnphysicalMeasurementError) as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OpolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
