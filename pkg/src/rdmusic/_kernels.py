"""Hot numeric kernels with numba and pure-numpy implementations.

The compiled path is used when numba imports cleanly and the environment
variable ``RDMUSIC_NO_NUMBA`` is unset (values 1/true/yes/on disable it).
The flag is read once at import time. Both implementations are exported so
tests and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "RDMUSIC_NO_NUMBA"

# prefer the OpenMP layer; probing TBB first warns on older TBB builds
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    from numba import njit, prange
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time choice
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get(_ENV_FLAG, "").strip().lower() not in (
    "1", "true", "yes", "on")


# -- echo synthesis ----------------------------------------------------------
# out[m,n,k] = sum_i alpha_i * ar[i,k] * (sum_t at[i,t] tx[m,n,t]) * om[i,m] * wn[i,n]

def echo_accumulate_numpy(tx, at, ar, alpha, wn, om):
    proj = np.einsum("mnt,it->imn", tx, at)
    weights = proj * (alpha[:, None, None] * om[:, :, None] * wn[:, None, :])
    return np.einsum("imn,ik->mnk", weights, ar)


def _echo_accumulate_impl(tx, at, ar, alpha, wn, om):
    n_sym, n_sc, n_tx = tx.shape
    n_tgt = alpha.shape[0]
    n_rx = ar.shape[1]
    out = np.zeros((n_sym, n_sc, n_rx), np.complex128)
    for m in prange(n_sym):
        for n in range(n_sc):
            for i in range(n_tgt):
                s = 0j
                for t in range(n_tx):
                    s += at[i, t] * tx[m, n, t]
                w = alpha[i] * om[i, m] * wn[i, n] * s
                for k in range(n_rx):
                    out[m, n, k] += w * ar[i, k]
    return out


# -- matched filter: virtual channel tensor ---------------------------------
# out[k,l,m,n] = rx[m,n,k] * conj(tx[m,n,l])

def virtual_channels_numpy(rx, tx):
    return np.ascontiguousarray(np.einsum("mnk,mnl->klmn", rx, np.conj(tx)))


def _virtual_channels_impl(rx, tx):
    n_sym, n_sc, n_rx = rx.shape
    n_tx = tx.shape[2]
    out = np.empty((n_rx, n_tx, n_sym, n_sc), np.complex128)
    for m in prange(n_sym):
        for n in range(n_sc):
            for k in range(n_rx):
                v = rx[m, n, k]
                for l in range(n_tx):
                    out[k, l, m, n] = v * tx[m, n, l].conjugate()
    return out


# -- MUSIC spectrum denominator ----------------------------------------------
# out[g] = a^H(theta_g) P a(theta_g) for the ULA response a_k = exp(j pi k sin)

def music_denominator_numpy(noise_proj, sin_grid):
    n_elems = noise_proj.shape[0]
    a = np.exp(1j * np.pi * np.outer(np.arange(n_elems), sin_grid))
    return np.einsum("kg,kj,jg->g", a.conj(), noise_proj, a, optimize=True).real


def _music_denominator_impl(noise_proj, sin_grid):
    n_elems = noise_proj.shape[0]
    n_grid = sin_grid.shape[0]
    out = np.empty(n_grid, np.float64)
    for g in prange(n_grid):
        # steering phases via phasor recurrence: a_k = step^k, one exp per angle
        step = np.exp(1j * np.pi * sin_grid[g])
        acc = 0.0
        ak = 1.0 + 0j
        for k in range(n_elems):
            row = 0j
            aj = 1.0 + 0j
            for j in range(n_elems):
                row += noise_proj[k, j] * aj
                aj *= step
            acc += (ak.conjugate() * row).real
            ak *= step
        out[g] = acc
    return out


# -- beamformed power at one delay/Doppler bin --------------------------------
# value = sum_{m,n} (ar^H rx_mn) conj(at^T tx_mn) * fm[m] * fn[n]

def bin_power_numpy(rx, tx, ar, at, fm, fn):
    bf = np.einsum("k,mnk->mn", ar.conj(), rx) * np.conj(np.einsum("t,mnt->mn", at, tx))
    return complex(fm @ bf @ fn)


def _bin_power_impl(rx, tx, ar_conj, at, fm, fn):
    n_sym, n_sc, n_rx = rx.shape
    n_tx = tx.shape[2]
    rows = np.empty(n_sym, np.complex128)
    for m in prange(n_sym):
        acc = 0j
        for n in range(n_sc):
            b = 0j
            for k in range(n_rx):
                b += ar_conj[k] * rx[m, n, k]
            d = 0j
            for t in range(n_tx):
                d += at[t] * tx[m, n, t]
            acc += b * d.conjugate() * fn[n]
        rows[m] = acc * fm[m]
    return rows


if HAS_NUMBA:
    _echo_accumulate_jit = njit(cache=True, parallel=True)(_echo_accumulate_impl)
    _virtual_channels_jit = njit(cache=True, parallel=True)(_virtual_channels_impl)
    _music_denominator_jit = njit(cache=True, parallel=True)(_music_denominator_impl)
    _bin_power_jit = njit(cache=True, parallel=True)(_bin_power_impl)

    def echo_accumulate_numba(tx, at, ar, alpha, wn, om):
        return _echo_accumulate_jit(tx, at, ar, alpha, wn, om)

    def virtual_channels_numba(rx, tx):
        return _virtual_channels_jit(rx, tx)

    def music_denominator_numba(noise_proj, sin_grid):
        return _music_denominator_jit(noise_proj, sin_grid)

    def bin_power_numba(rx, tx, ar, at, fm, fn):
        # per-row partial sums keep the final reduction order deterministic
        return complex(_bin_power_jit(rx, tx, ar.conj(), at, fm, fn).sum())


if USE_NUMBA:
    echo_accumulate = echo_accumulate_numba
    virtual_channels = virtual_channels_numba
    music_denominator = music_denominator_numba
    bin_power = bin_power_numba
else:
    echo_accumulate = echo_accumulate_numpy
    virtual_channels = virtual_channels_numpy
    music_denominator = music_denominator_numpy
    bin_power = bin_power_numpy


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so timed runs pay no compile cost."""
    if not USE_NUMBA:
        return
    rx = np.ones((2, 2, 2), np.complex128)
    tx = np.ones((2, 2, 2), np.complex128)
    vec = np.ones(2, np.complex128)
    pair = np.ones((1, 2), np.complex128)
    mat = np.eye(2, dtype=np.complex128)
    echo_accumulate(tx, pair, pair, vec[:1], pair, pair)
    virtual_channels(rx, tx)
    music_denominator(mat, np.zeros(3))
    bin_power(rx, tx, vec, vec, vec, vec)
