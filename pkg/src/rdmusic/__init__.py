"""MIMO-OFDM radar sensing: range/Doppler multiplexed MUSIC DoA estimation."""

from ._kernels import HAS_NUMBA, USE_NUMBA
from .baselines import BaselineResult, dft_data_aided, sequential_music
from .echo import FrameRx, synthesize_echo
from .fusion import CandidateSet, FusedEstimate, candidate_power, fuse
from .harness import (Estimate, ExperimentConfig, TrialRecord, associate,
                      make_config, proposed_pipeline, rmse_sweep, run_trial,
                      trial_rng)
from .music import (FilteredSnapshots, MusicSpectrum, SampleCovariance,
                    angle_grid, delay_filter, doppler_filter, music_spectrum,
                    sample_covariance)
from .ofdm import FrameTx, generate_frame, qam64_map
from .rangedoppler import (Detection, RDMap, VirtualChannelData, cfar_mask,
                           cfar_peaks, detect_peaks, detect_peaks_sic,
                           matched_filter_frame, range_doppler_map)
from .scenario import (Scenario, SystemParams, Target, desk_params,
                       generate_scenario, paper_params, path_loss_power,
                       steering_vector)

__version__ = "0.1.0"

__all__ = [
    "BaselineResult", "CandidateSet", "Detection", "Estimate",
    "ExperimentConfig", "FilteredSnapshots", "FrameRx", "FrameTx",
    "FusedEstimate", "HAS_NUMBA", "MusicSpectrum", "RDMap",
    "SampleCovariance", "Scenario", "SystemParams", "Target", "TrialRecord",
    "USE_NUMBA", "VirtualChannelData", "angle_grid", "associate",
    "candidate_power", "cfar_mask", "cfar_peaks", "delay_filter",
    "desk_params", "detect_peaks", "detect_peaks_sic", "dft_data_aided",
    "doppler_filter",
    "fuse", "generate_frame", "generate_scenario", "make_config",
    "matched_filter_frame", "music_spectrum", "paper_params",
    "path_loss_power", "proposed_pipeline", "qam64_map", "range_doppler_map",
    "rmse_sweep", "run_trial", "sample_covariance", "sequential_music",
    "steering_vector", "synthesize_echo", "trial_rng",
]
