import math

import numpy as np
import pytest

import rdmusic as rm
from rdmusic import _kernels
from rdmusic.scenario import SPEED_OF_LIGHT, SystemParams


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()


@pytest.fixture
def small_params() -> SystemParams:
    """Tiny grid (M=8, Nc=16, 2x2 antennas) for oracle comparisons."""
    return SystemParams(
        carrier_freq=28e9, n_subcarriers=16, subcarrier_spacing=240e3,
        cp_length=2, n_symbols=8, n_tx=2, n_rx=2,
        noise_psd_power=1e-12, tx_power=1.0)


@pytest.fixture
def desk_params() -> SystemParams:
    return rm.desk_params(tx_power_dbm=40.0)


def on_grid_target(params: SystemParams, range_bin: int, doppler_bin: int,
                   doa_deg: float, reflection: complex | None = None) -> rm.Target:
    """Target whose delay/Doppler land exactly on DFT bins."""
    tau = range_bin / params.bandwidth
    rng_m = tau * SPEED_OF_LIGHT / 2.0
    fd = doppler_bin * params.doppler_bin
    v = params.velocity_of_doppler(fd)
    if reflection is None:
        reflection = complex(math.sqrt(rm.path_loss_power(max(rng_m, 1.0), params)))
    return rm.Target(range=rng_m, radial_velocity=v, doa=math.radians(doa_deg),
                     reflection=reflection)


def frame_pair(params: SystemParams, targets, seed: int = 0, noise_on: bool = False):
    """Deterministic (tx, rx) pair for a fixed target list."""
    rng = np.random.default_rng(seed)
    tx = rm.generate_frame(rng, params)
    rx = rm.synthesize_echo(tx, rm.Scenario(targets=tuple(targets), seed=seed),
                            params, rng, noise_on=noise_on)
    return tx, rx
