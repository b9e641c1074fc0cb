"""Candidate DoA fusion by beamformed power at the detected range-Doppler bin."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .echo import FrameRx
from .ofdm import FrameTx
from .rangedoppler import Detection
from .scenario import SystemParams, steering_vector


@dataclass(frozen=True)
class CandidateSet:
    """Per-detection candidate angles from the delay and Doppler MUSIC spectra."""

    detection: Detection
    delay_candidates: tuple[float, ...]
    doppler_candidates: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.delay_candidates) + len(self.doppler_candidates)


@dataclass(frozen=True)
class FusedEstimate:
    detection: Detection
    doa_est: float
    winning_domain: str      # "delay" or "doppler"
    winning_power: float


def candidate_power(rx: FrameRx, tx: FrameTx, angle: float,
                    detection: Detection, params: SystemParams) -> float:
    """Squared magnitude of the beamformed map value at the detection's bin.

    Beamforming with the candidate angle at both arrays reduces the frame to
    one scalar per (symbol, subcarrier); the 2D-DFT evaluated at the detected
    Doppler/range bin then measures how much energy that angle explains.
    """
    n_sym, n_sc = params.n_symbols, params.n_subcarriers
    if not (0 <= detection.doppler_bin < n_sym and 0 <= detection.range_bin < n_sc):
        raise ValueError(f"detection bins {detection.doppler_bin, detection.range_bin} "
                         f"outside the {n_sym}x{n_sc} map")
    ar = steering_vector(angle, params.n_rx)
    at = steering_vector(angle, params.n_tx)
    fm = np.exp(2j * np.pi * detection.doppler_bin * np.arange(n_sym) / n_sym)
    fn = np.exp(2j * np.pi * detection.range_bin * np.arange(n_sc) / n_sc)
    value = _kernels.bin_power(rx.echoes, tx.symbols, ar, at, fm, fn)
    return abs(value) ** 2


def fuse(rx: FrameRx, tx: FrameTx, candidates: CandidateSet,
         params: SystemParams) -> FusedEstimate:
    """Pick the candidate angle whose beamformed bin power is largest.

    Ties go to the delay domain, then to the lower-index peak, which the
    iteration order below realizes with strict comparisons.
    """
    if len(candidates) == 0:
        raise ValueError("candidate set is empty")
    best = None
    for domain, angles in (("delay", candidates.delay_candidates),
                           ("doppler", candidates.doppler_candidates)):
        for angle in angles:
            power = candidate_power(rx, tx, angle, candidates.detection, params)
            if best is None or power > best[0]:
                best = (power, angle, domain)
    power, angle, domain = best
    return FusedEstimate(detection=candidates.detection, doa_est=angle,
                         winning_domain=domain, winning_power=power)
