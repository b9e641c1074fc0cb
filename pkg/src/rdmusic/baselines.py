"""Simplified canonical benchmark estimators for trend comparison.

These are deliberately reduced stand-ins for the published methods they are
named after: a whole-frame MUSIC stage followed by per-angle range/Doppler
readout, and a coarse antenna-DFT angle codebook. They exist to order RMSE
curves against the multiplexed pipeline, not to replicate numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .echo import FrameRx
from .music import DEFAULT_GRID_STEP, SampleCovariance, music_spectrum
from .ofdm import FrameTx
from .rangedoppler import (delay_of_bin, detect_peaks, doppler_of_bin,
                           matched_filter_frame, range_doppler_map)
from .scenario import SystemParams, steering_vector


@dataclass(frozen=True)
class BaselineResult:
    angles: tuple[float, ...]      # rad
    delays: tuple[float, ...]      # s
    dopplers: tuple[float, ...]    # Hz
    method_tag: str
    degraded: bool = False         # subspace exhausted or fewer estimates than asked


def _global_covariance(rx: FrameRx, tx: FrameTx) -> SampleCovariance:
    # sum over (m, n, l) of y_mn x*_mn[l] outer products collapses to a
    # ||x_mn||^2-weighted sum of received outer products
    weights = np.sum(np.abs(tx.symbols) ** 2, axis=2)
    cov = np.einsum("mnk,mnj,mn->kj", rx.echoes, rx.echoes.conj(), weights, optimize=True)
    cov = 0.5 * (cov + cov.conj().T)
    return SampleCovariance(matrix=cov, snapshot_count=weights.size * tx.symbols.shape[2])


def _beamformed_map_peak(rx: FrameRx, tx: FrameTx, angle: float,
                         params: SystemParams) -> tuple[float, float]:
    """Range/Doppler bin of the strongest cell after beamforming at one angle."""
    ar = steering_vector(angle, params.n_rx)
    at = steering_vector(angle, params.n_tx)
    bf = np.einsum("k,mnk->mn", ar.conj(), rx.echoes) * \
        np.conj(np.einsum("t,mnt->mn", at, tx.symbols))
    chi = np.fft.ifft2(bf) * bf.size
    m_bin, n_bin = np.unravel_index(int(np.argmax(np.abs(chi) ** 2)), chi.shape)
    return delay_of_bin(int(n_bin), params), doppler_of_bin(int(m_bin), params)


def sequential_music(rx: FrameRx, tx: FrameTx, params: SystemParams, n_targets: int,
                     grid_step: float = DEFAULT_GRID_STEP) -> BaselineResult:
    """Angle-first pipeline: whole-frame MUSIC, then per-angle 2D-DFT readout.

    The spatial covariance pools every (symbol, subcarrier, tx-channel)
    snapshot without delay/Doppler filtering, so all targets interfere in one
    spectrum and the usable source count is capped by the array size.
    """
    if n_targets < 1:
        raise ValueError("n_targets must be >= 1")
    assumed = min(n_targets, params.n_rx - 1)
    cov = _global_covariance(rx, tx)
    spectrum = music_spectrum(cov, assumed, grid_step, n_peaks=n_targets)
    angles = spectrum.peak_angles
    delays, dopplers = [], []
    for angle in angles:
        tau, doppler = _beamformed_map_peak(rx, tx, angle, params)
        delays.append(tau)
        dopplers.append(doppler)
    degraded = assumed < n_targets or len(angles) < n_targets
    return BaselineResult(angles=tuple(angles), delays=tuple(delays),
                          dopplers=tuple(dopplers), method_tag="sequential_music",
                          degraded=degraded)


def dft_beam_angles(n_rx: int) -> np.ndarray:
    """Angles of the n_rx-point DFT beams for a half-wavelength ULA."""
    u = 2.0 * np.arange(n_rx) / n_rx
    u = np.where(u >= 1.0, u - 2.0, u)
    return np.arcsin(u)


def dft_data_aided(rx: FrameRx, tx: FrameTx, params: SystemParams,
                   n_targets: int) -> BaselineResult:
    """Coarse DFT-codebook angles plus range/Doppler map detections.

    Angular resolution is limited to the n_rx-point beam grid; beams and map
    detections are paired by descending power.
    """
    if n_targets < 1:
        raise ValueError("n_targets must be >= 1")
    beams = np.fft.fft(rx.echoes, axis=2)          # a^H(theta_q) y_mn per beam q
    weights = np.sum(np.abs(tx.symbols) ** 2, axis=2)
    beam_power = np.einsum("mnq,mn->q", np.abs(beams) ** 2, weights)
    order = np.argsort(-beam_power, kind="stable")[:n_targets]
    angles = dft_beam_angles(params.n_rx)[order]

    rdmap = range_doppler_map(matched_filter_frame(rx, tx))
    detections = detect_peaks(rdmap, n_targets, params)
    count = min(len(angles), len(detections))
    return BaselineResult(
        angles=tuple(float(a) for a in angles[:count]),
        delays=tuple(d.delay_est for d in detections[:count]),
        dopplers=tuple(d.doppler_est for d in detections[:count]),
        method_tag="dft_data_aided",
        degraded=count < n_targets,
    )
