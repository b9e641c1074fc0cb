"""Delay/Doppler-multiplexed filtering, sample covariances, and MUSIC spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .rangedoppler import VirtualChannelData
from .scenario import SystemParams

DEFAULT_GRID_STEP = math.radians(0.1)


@dataclass(frozen=True)
class FilteredSnapshots:
    """Array snapshots after filtering at one delay or Doppler estimate.

    ``snapshots`` has one length-n_rx column per (tx channel, symbol) pair in
    the delay domain or per (tx channel, subcarrier) pair in the Doppler
    domain.
    """

    snapshots: np.ndarray     # (n_rx, S)
    domain_tag: str           # "delay" or "doppler"
    filter_value: float       # s or Hz


@dataclass(frozen=True)
class SampleCovariance:
    matrix: np.ndarray        # (n_rx, n_rx) Hermitian
    snapshot_count: int


@dataclass(frozen=True)
class MusicSpectrum:
    grid: np.ndarray          # angles, rad
    values: np.ndarray
    peak_angles: tuple[float, ...]


def delay_filter(data: VirtualChannelData, delay_est: float,
                 params: SystemParams) -> FilteredSnapshots:
    """Coherently sum each tx-channel signal over subcarriers at one delay.

    Targets at the filtered delay add in phase; others collapse into sidelobe
    leakage, leaving snapshots dominated by the receive steering vectors of
    the co-delay targets.
    """
    if not 0.0 <= delay_est < params.max_unambiguous_delay:
        raise ValueError(f"delay {delay_est!r} outside [0, {params.max_unambiguous_delay})")
    n_sc = params.n_subcarriers
    phase = np.exp(2j * np.pi * params.subcarrier_spacing * delay_est * np.arange(n_sc))
    snaps = np.tensordot(data.matrices, phase, axes=(3, 0)) / math.sqrt(n_sc)
    return FilteredSnapshots(snapshots=snaps.reshape(snaps.shape[0], -1),
                             domain_tag="delay", filter_value=delay_est)


def doppler_filter(data: VirtualChannelData, doppler_est: float,
                   params: SystemParams) -> FilteredSnapshots:
    """Coherently sum each tx-channel signal over symbols at one Doppler shift."""
    if abs(doppler_est) > params.max_unambiguous_doppler:
        raise ValueError(
            f"Doppler {doppler_est!r} outside +-{params.max_unambiguous_doppler}")
    n_sym = params.n_symbols
    phase = np.exp(-2j * np.pi * params.symbol_duration * doppler_est * np.arange(n_sym))
    snaps = np.tensordot(data.matrices, phase, axes=(2, 0)) / math.sqrt(params.n_subcarriers)
    return FilteredSnapshots(snapshots=snaps.reshape(snaps.shape[0], -1),
                             domain_tag="doppler", filter_value=doppler_est)


def sample_covariance(snapshots: FilteredSnapshots) -> SampleCovariance:
    """Unnormalized sum of snapshot outer products, Hermitian-symmetrized."""
    snaps = snapshots.snapshots
    if snaps.ndim != 2 or snaps.shape[1] < 1:
        raise ValueError("need at least one snapshot")
    cov = snaps @ snaps.conj().T
    cov = 0.5 * (cov + cov.conj().T)
    return SampleCovariance(matrix=cov, snapshot_count=snaps.shape[1])


def angle_grid(grid_step: float = DEFAULT_GRID_STEP) -> np.ndarray:
    """Uniform angle grid covering [-pi/2, pi/2] inclusive."""
    n = int(round(math.pi / grid_step)) + 1
    return -0.5 * math.pi + grid_step * np.arange(n)


def spectrum_peaks(values: np.ndarray, grid: np.ndarray, n_peaks: int) -> tuple[float, ...]:
    """Angles of the ``n_peaks`` largest strict interior local maxima."""
    interior = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    idx = np.nonzero(interior)[0] + 1
    order = np.lexsort((idx, -values[idx]))
    return tuple(float(grid[idx[i]]) for i in order[:n_peaks])


def music_spectrum(cov: SampleCovariance, assumed_sources: int,
                   grid_step: float = DEFAULT_GRID_STEP,
                   n_peaks: int = 2) -> MusicSpectrum:
    """Pseudo-spectrum 1 / ||E_n^H a(theta)||^2 from the covariance eigenbasis.

    The noise subspace spans the eigenvectors of the n_rx - assumed_sources
    smallest eigenvalues.
    """
    n_rx = cov.matrix.shape[0]
    if not 1 <= assumed_sources < n_rx:
        raise ValueError(f"assumed_sources must be in [1, {n_rx - 1}]")
    eigvals, eigvecs = np.linalg.eigh(cov.matrix)
    noise_basis = eigvecs[:, : n_rx - assumed_sources]
    noise_proj = noise_basis @ noise_basis.conj().T
    grid = angle_grid(grid_step)
    denom = _kernels.music_denominator(np.ascontiguousarray(noise_proj), np.sin(grid))
    values = 1.0 / np.maximum(denom, np.finfo(float).tiny)
    return MusicSpectrum(grid=grid, values=values,
                         peak_angles=spectrum_peaks(values, grid, n_peaks))


def eigenvalue_gap_order(cov: SampleCovariance, max_sources: int | None = None) -> int:
    """Model-order heuristic: largest ratio between consecutive sorted eigenvalues."""
    eigvals = np.maximum(np.linalg.eigvalsh(cov.matrix), np.finfo(float).tiny)
    n = len(eigvals)
    limit = min(max_sources or n - 1, n - 1)
    best_p, best_ratio = 1, -np.inf
    for p in range(1, limit + 1):
        ratio = eigvals[n - p] / eigvals[n - p - 1]
        if ratio > best_ratio:
            best_p, best_ratio = p, float(ratio)
    return best_p
