"""Monte-Carlo experiment driver: trials, target association, RMSE sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .baselines import BaselineResult, dft_data_aided, sequential_music
from .echo import FrameRx, synthesize_echo
from .fusion import CandidateSet, FusedEstimate, fuse
from .music import (DEFAULT_GRID_STEP, delay_filter, doppler_filter,
                    music_spectrum, sample_covariance)
from .ofdm import FrameTx, generate_frame
from .rangedoppler import (VirtualChannelData, component_antenna_model,
                           detect_peaks, detect_peaks_sic, matched_filter_frame,
                           range_doppler_map)
from .scenario import (DESK_R_MIN, DESK_V_MAX, PAPER_R_MIN, PAPER_V_MAX,
                       Scenario, SystemParams, Target, dbm_to_watt, desk_params,
                       generate_scenario, paper_params)

METHODS = ("proposed", "sequential_music", "dft_data_aided")


class Estimate(NamedTuple):
    """One target estimate as a (delay s, Doppler Hz, DoA rad) triple."""

    delay: float
    doppler: float
    doa: float


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams
    n_targets: int | tuple[int, ...] = 3
    tx_power_dbm: float | tuple[float, ...] = 30.0
    n_trials: int = 100
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    scale_preset: str = "desk"
    region_radius: float = 150.0
    v_max: float = DESK_V_MAX
    r_min: float = 10.0
    grid_step: float = DEFAULT_GRID_STEP
    music_peaks: int = 3
    assumed_sources: int | None = None   # None: use n_rx - 1
    miss_penalty_deg: float = 30.0
    noise_on: bool = True
    detector: str = "sic"

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.detector not in ("sic", "topk"):
            raise ValueError(f"unknown detector {self.detector!r}")
        for name in ("n_targets", "tx_power_dbm"):
            value = getattr(self, name)
            if isinstance(value, (list, tuple)):
                if len(value) == 0:
                    raise ValueError(f"{name} sweep is empty")
                object.__setattr__(self, name, tuple(value))
        if isinstance(self.n_targets, tuple) and isinstance(self.tx_power_dbm, tuple):
            raise ValueError("sweep either n_targets or tx_power_dbm, not both")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


def make_config(preset: str = "desk", **overrides) -> ExperimentConfig:
    """Build a config from a scale preset, with per-field overrides."""
    if preset not in ("desk", "paper"):
        raise ValueError(f"unknown preset {preset!r}")
    factory = desk_params if preset == "desk" else paper_params
    params = overrides.pop("params", None) or factory()
    defaults = {"v_max": DESK_V_MAX if preset == "desk" else PAPER_V_MAX,
                "r_min": DESK_R_MIN if preset == "desk" else PAPER_R_MIN}
    defaults.update(overrides)
    config = ExperimentConfig(params=params, scale_preset=preset, **defaults)
    if not isinstance(config.tx_power_dbm, tuple):
        config = replace(config, params=replace(
            config.params, tx_power=dbm_to_watt(config.tx_power_dbm)))
    return config


def resolve_point(config: ExperimentConfig) -> ExperimentConfig:
    """Collapse any sweep to its first point, syncing params.tx_power."""
    n_targets = config.n_targets
    power = config.tx_power_dbm
    if isinstance(n_targets, tuple):
        n_targets = n_targets[0]
    if isinstance(power, tuple):
        power = power[0]
    return _point_config(config, n_targets, power)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream: Philox keyed by seed XOR trial index."""
    key = np.uint64(seed) ^ np.uint64(trial_index)
    return np.random.Generator(np.random.Philox(key=key))


def proposed_pipeline(rx: FrameRx, tx: FrameTx, params: SystemParams, n_targets: int,
                      grid_step: float = DEFAULT_GRID_STEP, music_peaks: int = 3,
                      assumed_sources: int | None = None,
                      detector: str = "sic") -> list[FusedEstimate]:
    """Detection, dual-domain MUSIC, and power fusion for one frame.

    ``detector`` picks the range-Doppler detection rule: "sic" (successive
    cancellation, robust to large target dynamic range) or "topk" (plain
    strongest local maxima of the integrated map). ``assumed_sources`` of
    None uses the largest usable signal subspace (n_rx - 1): the filters
    suppress off-bin targets only partially, so a weak target's filtered
    covariance can hold several significant components.
    """
    if assumed_sources is None:
        assumed_sources = params.n_rx - 1
    vcd = matched_filter_frame(rx, tx)
    components = None
    if detector == "sic":
        detections, components = detect_peaks_sic(vcd, n_targets, params, tx,
                                                  return_components=True)
    else:
        detections = detect_peaks(range_doppler_map(vcd), n_targets, params)

    # with fitted scatterer models available, estimate each DoA on a frame
    # with the other detected returns cancelled, so strong targets cannot
    # leak through the filters and claim a weak detection's spectrum
    frames = [(rx, vcd)] * len(detections)
    if components and len(detections) > 1:
        zero = np.zeros_like(rx.echoes)
        models = [
            sum((component_antenna_model(c, tx.symbols, params.per_entry_power)
                 for c in group), start=zero)
            for group in components
        ]
        total = sum(models, start=zero)
        frames = []
        for model in models:
            cleaned = FrameRx(echoes=np.ascontiguousarray(rx.echoes - total + model))
            frames.append((cleaned, matched_filter_frame(cleaned, tx)))

    estimates = []
    for det, (rx_i, vcd_i) in zip(detections, frames):
        delay_spec = music_spectrum(
            sample_covariance(delay_filter(vcd_i, det.delay_est, params)),
            assumed_sources, grid_step, music_peaks)
        doppler_spec = music_spectrum(
            sample_covariance(doppler_filter(vcd_i, det.doppler_est, params)),
            assumed_sources, grid_step, music_peaks)
        candidates = CandidateSet(detection=det,
                                  delay_candidates=delay_spec.peak_angles,
                                  doppler_candidates=doppler_spec.peak_angles)
        if len(candidates) == 0:
            continue
        estimates.append(fuse(rx_i, tx, candidates, params))
    return estimates


def _estimates_of(result) -> list[Estimate]:
    if isinstance(result, BaselineResult):
        return [Estimate(d, f, a) for d, f, a in
                zip(result.delays, result.dopplers, result.angles)]
    return [Estimate(e.detection.delay_est, e.detection.doppler_est, e.doa_est)
            for e in result]


def association_cost(truth: Target, est: Estimate, params: SystemParams) -> float:
    """Bin-normalized delay/Doppler distance plus DoA distance in degrees."""
    return (abs(truth.delay - est.delay) / params.delay_bin
            + abs(truth.doppler(params) - est.doppler) / params.doppler_bin
            + abs(math.degrees(truth.doa - est.doa)))


def associate(truth: Sequence[Target], estimates: Sequence[Estimate],
              params: SystemParams, miss_penalty_deg: float = 30.0,
              ) -> tuple[list[int | None], list[float]]:
    """Minimum-total-cost pairing of truths to estimates with a miss option.

    Each truth may either take an estimate at the bin-normalized cost or stay
    unmatched at the miss penalty, so a truth is never forced onto a grossly
    wrong estimate. Returns (assignment, errors): assignment[i] is the matched
    estimate index or None, errors[i] the absolute DoA error in degrees with
    misses charged the penalty.
    """
    if len(truth) == 0 or len(estimates) == 0:
        raise ValueError("associate needs nonempty truth and estimate lists")
    n_truth, n_est = len(truth), len(estimates)
    cost = np.full((n_truth, n_est + n_truth), 1e12)
    for i, t in enumerate(truth):
        for j, e in enumerate(estimates):
            cost[i, j] = association_cost(t, e, params)
        cost[i, n_est + i] = miss_penalty_deg   # per-truth miss column
    rows, cols = linear_sum_assignment(cost)
    assignment: list[int | None] = [None] * n_truth
    for r, c in zip(rows, cols):
        if c < n_est:
            assignment[r] = int(c)
    errors = [
        abs(math.degrees(truth[i].doa - estimates[j].doa)) if j is not None
        else miss_penalty_deg
        for i, j in enumerate(assignment)
    ]
    return assignment, errors


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    n_targets: int
    tx_power_dbm: float
    targets: tuple[Target, ...]
    estimates: dict[str, tuple[Estimate, ...]]
    errors_deg: dict[str, tuple[float, ...]]
    failed: dict[str, bool]


def _point_config(config: ExperimentConfig, n_targets, tx_power_dbm) -> ExperimentConfig:
    params = replace(config.params, tx_power=dbm_to_watt(tx_power_dbm))
    return replace(config, params=params, n_targets=int(n_targets),
                   tx_power_dbm=float(tx_power_dbm))


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    """One seeded trial: draw a scenario and frame, run every method, score DoA."""
    if isinstance(config.n_targets, tuple) or isinstance(config.tx_power_dbm, tuple):
        raise ValueError("run_trial needs a resolved (non-sweep) config")
    config = _point_config(config, config.n_targets, config.tx_power_dbm)
    rng = trial_rng(config.seed, trial_index)
    scenario = generate_scenario(rng, config.n_targets, config.region_radius,
                                 config.v_max, config.params, config.r_min)
    tx = generate_frame(rng, config.params)
    rx = synthesize_echo(tx, scenario, config.params, rng, noise_on=config.noise_on)

    estimates: dict[str, tuple[Estimate, ...]] = {}
    errors: dict[str, tuple[float, ...]] = {}
    failed: dict[str, bool] = {}
    for method in config.methods:
        try:
            if method == "proposed":
                result = proposed_pipeline(rx, tx, config.params, config.n_targets,
                                           config.grid_step, config.music_peaks,
                                           config.assumed_sources, config.detector)
            elif method == "sequential_music":
                result = sequential_music(rx, tx, config.params, config.n_targets,
                                          config.grid_step)
            else:
                result = dft_data_aided(rx, tx, config.params, config.n_targets)
            ests = _estimates_of(result)
        except Exception:
            ests = []
        if ests:
            _, errs = associate(scenario.targets, ests, config.params,
                                config.miss_penalty_deg)
        else:
            errs = [config.miss_penalty_deg] * config.n_targets
        estimates[method] = tuple(ests)
        errors[method] = tuple(errs)
        failed[method] = len(ests) < config.n_targets
    return TrialRecord(trial_index=trial_index, seed=config.seed,
                       n_targets=config.n_targets, tx_power_dbm=config.tx_power_dbm,
                       targets=scenario.targets, estimates=estimates,
                       errors_deg=errors, failed=failed)


def sweep_points(config: ExperimentConfig) -> list[tuple[str, float, ExperimentConfig]]:
    if isinstance(config.tx_power_dbm, tuple):
        return [("tx_power_dbm", float(p), _point_config(config, config.n_targets, p))
                for p in config.tx_power_dbm]
    if isinstance(config.n_targets, tuple):
        return [("n_targets", float(n), _point_config(config, n, config.tx_power_dbm))
                for n in config.n_targets]
    return [("tx_power_dbm", float(config.tx_power_dbm),
             _point_config(config, config.n_targets, config.tx_power_dbm))]


def _rms(errors: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(errors))))


def rmse_sweep(config: ExperimentConfig,
               keep_records: bool = False) -> tuple[list[dict], list[TrialRecord]]:
    """Run every sweep point and aggregate per-method DoA RMSE in degrees.

    ``rmse_deg`` pools all (trial, target) errors; ``mean_rmse_deg`` and
    ``median_rmse_deg`` are the mean and median across trials of the per-trial
    RMS error; ``n_failed`` counts trials that raised or returned fewer
    estimates than targets.
    """
    rows: list[dict] = []
    records: list[TrialRecord] = []
    for sweep_name, sweep_value, point in sweep_points(config):
        trials = [run_trial(point, i) for i in range(config.n_trials)]
        if keep_records:
            records.extend(trials)
        for method in config.methods:
            per_trial = np.array([t.errors_deg[method] for t in trials])
            trial_rms = np.array([_rms(errs) for errs in per_trial])
            rows.append({
                "method": method,
                "sweep": sweep_name,
                "value": sweep_value,
                "n_targets": point.n_targets,
                "tx_power_dbm": point.tx_power_dbm,
                "n_trials": config.n_trials,
                "n_failed": int(sum(t.failed[method] for t in trials)),
                "rmse_deg": _rms(per_trial.ravel()),
                "mean_rmse_deg": float(np.mean(trial_rms)),
                "median_rmse_deg": float(np.median(trial_rms)),
            })
    return rows, records


SWEEP_COLUMNS = ["method", "sweep", "value", "n_targets", "tx_power_dbm",
                 "n_trials", "n_failed", "rmse_deg", "mean_rmse_deg",
                 "median_rmse_deg"]
