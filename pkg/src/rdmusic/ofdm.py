"""64-QAM data generation and transmit frame tensors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import SystemParams

# Gray-coded square 64-QAM: 3 bits per rail, rail levels in Gray order so
# adjacent points differ in one bit. Scaled to unit average energy (mean of
# (2p-7)^2 over p=0..7 is 21 per rail, 42 total).
_QAM64_SCALE = 1.0 / math.sqrt(42.0)


def _gray_levels() -> np.ndarray:
    levels = np.empty(8)
    for p in range(8):
        levels[p ^ (p >> 1)] = 2 * p - 7
    return levels


_LEVELS = _gray_levels()
QAM64_TABLE = (_LEVELS[np.arange(64) >> 3] + 1j * _LEVELS[np.arange(64) & 7]) * _QAM64_SCALE
QAM64_TABLE.setflags(write=False)


def qam64_map(index: int) -> complex:
    """Constellation point for a 6-bit symbol index (unit average energy)."""
    if not 0 <= index <= 63:
        raise ValueError(f"64-QAM index out of range: {index}")
    return complex(QAM64_TABLE[index])


@dataclass(frozen=True)
class FrameTx:
    """Transmit tensor x_mn[p], dims (n_symbols, n_subcarriers, n_tx)."""

    symbols: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.symbols.shape


def generate_frame(rng: np.random.Generator, params: SystemParams) -> FrameTx:
    """Draw i.i.d. 64-QAM symbols scaled to the configured per-entry power."""
    shape = (params.n_symbols, params.n_subcarriers, params.n_tx)
    idx = rng.integers(0, 64, size=shape)
    symbols = QAM64_TABLE[idx] * math.sqrt(params.per_entry_power)
    return FrameTx(symbols=np.ascontiguousarray(symbols))
