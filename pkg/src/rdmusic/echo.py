"""DFT-domain radar echo synthesis (simulation ground truth)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ofdm import FrameTx
from .scenario import Scenario, SystemParams, steering_vector, validate_scenario


@dataclass(frozen=True)
class FrameRx:
    """Received tensor y_mn[k], dims (n_symbols, n_subcarriers, n_rx)."""

    echoes: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.echoes.shape


def synthesize_echo(tx: FrameTx, scenario: Scenario, params: SystemParams,
                    rng: np.random.Generator | None = None,
                    noise_on: bool = True) -> FrameRx:
    """Superpose per-target echoes in the symbol/subcarrier domain.

    Each target contributes alpha * a_R(theta) a_T^T(theta) x_mn with a linear
    delay phase across subcarriers and a linear Doppler phase across symbols.
    Noise is i.i.d. circular complex Gaussian with per-antenna variance equal
    to the configured total noise power.
    """
    n_sym, n_sc, n_tx = params.n_symbols, params.n_subcarriers, params.n_tx
    if tx.symbols.shape != (n_sym, n_sc, n_tx):
        raise ValueError(f"tx shape {tx.symbols.shape} does not match params")
    validate_scenario(scenario, params)
    if noise_on and rng is None:
        raise ValueError("noise_on requires an rng")

    targets = scenario.targets
    out = np.zeros((n_sym, n_sc, params.n_rx), np.complex128)
    if targets:
        alpha = np.array([t.reflection for t in targets], np.complex128)
        at = np.array([steering_vector(t.doa, n_tx) for t in targets])
        ar = np.array([steering_vector(t.doa, params.n_rx) for t in targets])
        delays = np.array([t.delay for t in targets])
        dopplers = np.array([t.doppler(params) for t in targets])
        wn = np.exp(-2j * np.pi * params.subcarrier_spacing * np.outer(delays, np.arange(n_sc)))
        om = np.exp(2j * np.pi * params.symbol_duration * np.outer(dopplers, np.arange(n_sym)))
        out += _kernels.echo_accumulate(tx.symbols, at, ar, alpha, wn, om)
    if noise_on:
        sigma = math.sqrt(params.noise_psd_power / 2.0)
        shape = out.shape
        out += sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return FrameRx(echoes=out)
