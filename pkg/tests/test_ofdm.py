import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import rdmusic as rm
from rdmusic.ofdm import QAM64_TABLE


class TestQam64:
    def test_unit_average_energy(self):
        points = np.array([rm.qam64_map(i) for i in range(64)])
        assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0, rel=1e-12)

    def test_corner_magnitude(self):
        # corners are (+-7, +-7)/sqrt(42)
        mags = np.abs(QAM64_TABLE)
        corner = math.sqrt(98.0 / 42.0)
        assert np.isclose(mags.max(), corner)
        assert np.sum(np.isclose(mags, corner)) == 4

    def test_injective(self):
        points = [rm.qam64_map(i) for i in range(64)]
        assert len(set(points)) == 64

    def test_zero_mean(self):
        assert np.sum(QAM64_TABLE) == pytest.approx(0.0, abs=1e-12)

    def test_on_square_grid(self):
        scaled = QAM64_TABLE * math.sqrt(42.0)
        assert np.allclose(np.round(scaled.real), scaled.real)
        assert set(np.round(scaled.real).astype(int)) == {-7, -5, -3, -1, 1, 3, 5, 7}

    def test_gray_adjacency(self):
        # neighboring levels on each rail differ in exactly one index bit
        levels = np.round(QAM64_TABLE.real[np.arange(0, 64, 8)] * math.sqrt(42.0))
        by_level = {int(l): i for i, l in enumerate(levels)}
        for a, b in zip(range(-7, 6, 2), range(-5, 8, 2)):
            diff = by_level[a] ^ by_level[b]
            assert bin(diff).count("1") == 1

    @given(st.integers(-10, 80))
    def test_domain_check(self, idx):
        if 0 <= idx <= 63:
            rm.qam64_map(idx)
        else:
            with pytest.raises(ValueError):
                rm.qam64_map(idx)


class TestGenerateFrame:
    def test_dims(self, desk_params):
        frame = rm.generate_frame(np.random.default_rng(0), desk_params)
        assert frame.shape == (64, 256, 4)

    def test_seed_determinism(self, desk_params):
        a = rm.generate_frame(np.random.default_rng(3), desk_params)
        b = rm.generate_frame(np.random.default_rng(3), desk_params)
        assert np.array_equal(a.symbols, b.symbols)

    def test_per_entry_power(self, desk_params):
        frame = rm.generate_frame(np.random.default_rng(1), desk_params)
        emp = np.mean(np.abs(frame.symbols) ** 2)
        assert emp == pytest.approx(desk_params.per_entry_power, rel=0.01)

    def test_lag_one_autocorrelation_small(self, desk_params):
        frame = rm.generate_frame(np.random.default_rng(2), desk_params)
        flat = frame.symbols.ravel()
        flat = flat / np.sqrt(np.mean(np.abs(flat) ** 2))
        rho = np.mean(flat[1:] * np.conj(flat[:-1]))
        assert abs(rho) < 0.05
