"""Command-line driver: single trials, Monte-Carlo sweeps, spectrum and map dumps."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import harness, tensorio
from .echo import synthesize_echo
from .music import delay_filter, doppler_filter, music_spectrum, sample_covariance
from .ofdm import generate_frame
from .rangedoppler import detect_peaks, matched_filter_frame, range_doppler_map
from .scenario import generate_scenario, system_from_dict


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="YAML config file (system/experiment sections)")
    parser.add_argument("--preset", choices=("desk", "paper"), default="desk")
    parser.add_argument("--outdir", type=Path, default=Path("out"))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--targets", type=int, nargs="+", default=None)
    parser.add_argument("--power-dbm", type=float, nargs="+", default=None)
    parser.add_argument("--methods", nargs="+", choices=harness.METHODS, default=None)
    parser.add_argument("--detector", choices=("sic", "topk"), default=None)
    parser.add_argument("--no-noise", action="store_true")


_EXPERIMENT_KEYS = {
    "n_targets": "n_targets",
    "tx_power_dbm": "tx_power_dbm",
    "n_trials": "n_trials",
    "seed": "seed",
    "methods": "methods",
    "region_radius_m": "region_radius",
    "v_max_mps": "v_max",
    "r_min_m": "r_min",
    "music_peaks": "music_peaks",
    "assumed_sources": "assumed_sources",
    "miss_penalty_deg": "miss_penalty_deg",
    "detector": "detector",
}


def build_config(args) -> harness.ExperimentConfig:
    overrides: dict = {}
    if args.config is not None:
        with open(args.config) as fh:
            doc = yaml.safe_load(fh) or {}
        if "system" in doc:
            overrides["params"] = system_from_dict(doc["system"])
        exp = doc.get("experiment", {})
        for key, attr in _EXPERIMENT_KEYS.items():
            if key in exp:
                value = exp[key]
                if attr == "methods":
                    value = tuple(value)
                elif isinstance(value, list):
                    value = tuple(value)
                overrides[attr] = value
        if "grid_step_deg" in exp:
            overrides["grid_step"] = math.radians(float(exp["grid_step_deg"]))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.targets is not None:
        overrides["n_targets"] = args.targets[0] if len(args.targets) == 1 else tuple(args.targets)
    if args.power_dbm is not None:
        overrides["tx_power_dbm"] = (args.power_dbm[0] if len(args.power_dbm) == 1
                                     else tuple(args.power_dbm))
    if args.methods is not None:
        overrides["methods"] = tuple(args.methods)
    if args.detector is not None:
        overrides["detector"] = args.detector
    if args.no_noise:
        overrides["noise_on"] = False
    return harness.make_config(args.preset, **overrides)


def _trial_frame(config: harness.ExperimentConfig, trial: int):
    config = harness.resolve_point(config)
    rng = harness.trial_rng(config.seed, trial)
    scenario = generate_scenario(rng, config.n_targets, config.region_radius,
                                 config.v_max, config.params, config.r_min)
    tx = generate_frame(rng, config.params)
    rx = synthesize_echo(tx, scenario, config.params, rng, noise_on=config.noise_on)
    return scenario, tx, rx, config.n_targets


def cmd_run(args) -> int:
    config = build_config(args)
    record = harness.run_trial(config, args.trial)
    print(f"trial {args.trial} seed {config.seed}: {record.n_targets} targets, "
          f"{record.tx_power_dbm:g} dBm")
    for i, t in enumerate(record.targets):
        print(f"  truth[{i}]  range {t.range:8.2f} m  v {t.radial_velocity:7.2f} m/s  "
              f"doa {math.degrees(t.doa):7.2f} deg")
    for method in config.methods:
        errs = ", ".join(f"{e:.3f}" for e in record.errors_deg[method])
        print(f"  {method}: DoA errors [deg] = {errs}"
              + ("  (short/failed)" if record.failed[method] else ""))
        for j, est in enumerate(record.estimates[method]):
            print(f"    est[{j}] tau {est.delay * 1e9:9.2f} ns  fd {est.doppler:10.1f} Hz  "
                  f"doa {math.degrees(est.doa):7.2f} deg")
    args.outdir.mkdir(parents=True, exist_ok=True)
    if "proposed" in config.methods:
        scenario, tx, rx, n_targets = _trial_frame(config, args.trial)
        dets = detect_peaks(range_doppler_map(matched_filter_frame(rx, tx)),
                            n_targets, config.params)
        tensorio.write_csv(args.outdir / "detections.csv", tensorio.DETECTION_COLUMNS,
                           [tensorio.detection_row(args.trial, d) for d in dets])
        fused = harness.proposed_pipeline(rx, tx, config.params, n_targets,
                                          config.grid_step, config.music_peaks,
                                          config.assumed_sources)
        tensorio.write_csv(args.outdir / "fused.csv", tensorio.FUSED_COLUMNS,
                           [tensorio.fused_row(args.trial, est) for est in fused])
        print(f"wrote {args.outdir / 'detections.csv'} and {args.outdir / 'fused.csv'}")
    return 0


def cmd_sweep(args) -> int:
    config = build_config(args)
    rows, _ = harness.rmse_sweep(config)
    out = args.outdir / "sweep.csv"
    tensorio.write_csv(out, harness.SWEEP_COLUMNS,
                       [[r[c] for c in harness.SWEEP_COLUMNS] for r in rows])
    for r in rows:
        print(f"{r['method']:>16s}  {r['sweep']}={r['value']:g}  "
              f"rmse {r['rmse_deg']:8.3f} deg  median {r['median_rmse_deg']:8.3f} deg  "
              f"failed {r['n_failed']}/{r['n_trials']}")
    print(f"wrote {out}")
    return 0


def cmd_spectrum(args) -> int:
    config = build_config(args)
    scenario, tx, rx, n_targets = _trial_frame(config, args.trial)
    vcd = matched_filter_frame(rx, tx)
    detections = detect_peaks(range_doppler_map(vcd), n_targets, config.params)
    args.outdir.mkdir(parents=True, exist_ok=True)
    for i, det in enumerate(detections):
        for domain, filt in (("delay", delay_filter(vcd, det.delay_est, config.params)),
                             ("doppler", doppler_filter(vcd, det.doppler_est, config.params))):
            spec = music_spectrum(sample_covariance(filt), config.assumed_sources,
                                  config.grid_step, config.music_peaks)
            path = args.outdir / f"spectrum_t{args.trial}_det{i}_{domain}.csv"
            tensorio.write_spectrum_csv(path, spec)
            peaks = ", ".join(f"{math.degrees(a):.2f}" for a in spec.peak_angles)
            print(f"det {i} {domain}: peaks [{peaks}] deg -> {path}")
    return 0


def cmd_rdmap(args) -> int:
    config = build_config(args)
    scenario, tx, rx, n_targets = _trial_frame(config, args.trial)
    rdmap = range_doppler_map(matched_filter_frame(rx, tx))
    args.outdir.mkdir(parents=True, exist_ok=True)
    bin_path = args.outdir / f"rdmap_t{args.trial}.bin"
    tensorio.save_complex_tensor(bin_path, rdmap.integrated.astype(np.complex128),
                                 seed=config.seed)
    if args.csv:
        rows = [[m, n, rdmap.integrated[m, n]]
                for m in range(rdmap.integrated.shape[0])
                for n in range(rdmap.integrated.shape[1])]
        tensorio.write_csv(args.outdir / f"rdmap_t{args.trial}.csv",
                           ["doppler_bin", "range_bin", "power"], rows)
    for det in detect_peaks(rdmap, n_targets, config.params):
        print(f"peak at (m*={det.doppler_bin}, n*={det.range_bin})  "
              f"tau {det.delay_est * 1e9:.2f} ns  fd {det.doppler_est:.1f} Hz  "
              f"power {det.peak_power:.4g}")
    print(f"wrote {bin_path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rdmusic",
        description="MIMO-OFDM radar sensing with range/Doppler-multiplexed MUSIC")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one trial and dump estimates")
    p_run.add_argument("--trial", type=int, default=0)
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo RMSE sweep to CSV")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_spec = sub.add_parser("spectrum", help="dump MUSIC spectra for one trial")
    p_spec.add_argument("--trial", type=int, default=0)
    _add_common(p_spec)
    p_spec.set_defaults(func=cmd_spectrum)

    p_map = sub.add_parser("rdmap", help="dump the integrated range-Doppler map")
    p_map.add_argument("--trial", type=int, default=0)
    p_map.add_argument("--csv", action="store_true", help="also write a CSV dump")
    _add_common(p_map)
    p_map.set_defaults(func=cmd_rdmap)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
