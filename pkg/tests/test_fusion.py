import dataclasses
import math

import numpy as np
import pytest

import rdmusic as rm
from rdmusic.fusion import CandidateSet

from conftest import frame_pair, on_grid_target
from reference import beamformed_matrix_reference, bin_value_reference


def _detect_one(params, tx, rx):
    rdmap = rm.range_doppler_map(rm.matched_filter_frame(rx, tx))
    return rm.detect_peaks(rdmap, 1, params)[0]


class TestCandidatePower:
    def test_zero_rx(self, small_params):
        tx, rx = frame_pair(small_params, [])
        det = rm.Detection(doppler_bin=0, range_bin=0, delay_est=0.0,
                           doppler_est=0.0, peak_power=0.0)
        assert rm.candidate_power(rx, tx, 0.3, det, small_params) == 0.0

    def test_matches_reference(self, small_params):
        target = rm.Target(range=88.0, radial_velocity=27.0, doa=0.25,
                           reflection=1e-6 * np.exp(0.3j))
        tx, rx = frame_pair(small_params, [target], seed=4, noise_on=True)
        det = rm.Detection(doppler_bin=5, range_bin=11, delay_est=0.0,
                           doppler_est=0.0, peak_power=0.0)
        theta = -0.2
        got = rm.candidate_power(rx, tx, theta, det, small_params)
        ref = abs(bin_value_reference(
            beamformed_matrix_reference(rx.echoes, tx.symbols, theta), 5, 11)) ** 2
        assert got == pytest.approx(ref, rel=1e-10)

    def test_array_gain_separates_angles(self, desk_params):
        target = on_grid_target(desk_params, 25, 1, 0.0)
        tx, rx = frame_pair(desk_params, [target], seed=3)
        det = _detect_one(desk_params, tx, rx)
        at_truth = rm.candidate_power(rx, tx, target.doa, det, desk_params)
        off = rm.candidate_power(rx, tx, target.doa + math.radians(30.0), det, desk_params)
        assert at_truth / off >= desk_params.n_rx

    def test_power_maximal_near_truth(self, desk_params):
        target = on_grid_target(desk_params, 40, 2, 18.0)
        tx, rx = frame_pair(desk_params, [target], seed=8)
        det = _detect_one(desk_params, tx, rx)
        grid = np.radians(np.arange(-60.0, 60.5, 0.5))
        powers = [rm.candidate_power(rx, tx, th, det, desk_params) for th in grid]
        best = math.degrees(grid[int(np.argmax(powers))])
        assert abs(best - 18.0) <= 0.5

    def test_invariant_to_reflection_phase(self, desk_params):
        target = on_grid_target(desk_params, 33, 1, -12.0, reflection=3e-7 + 0j)
        rotated = dataclasses.replace(target, reflection=target.reflection * np.exp(1.9j))
        tx, rx1 = frame_pair(desk_params, [target], seed=5)
        _, rx2 = frame_pair(desk_params, [rotated], seed=5)
        det = _detect_one(desk_params, tx, rx1)
        p1 = rm.candidate_power(rx1, tx, target.doa, det, desk_params)
        p2 = rm.candidate_power(rx2, tx, target.doa, det, desk_params)
        assert p1 == pytest.approx(p2, rel=1e-9)

    def test_rejects_out_of_range_bins(self, small_params):
        tx, rx = frame_pair(small_params, [])
        det = rm.Detection(doppler_bin=8, range_bin=0, delay_est=0.0,
                           doppler_est=0.0, peak_power=0.0)
        with pytest.raises(ValueError):
            rm.candidate_power(rx, tx, 0.0, det, small_params)


class TestFuse:
    def test_single_candidate_returned(self, desk_params):
        target = on_grid_target(desk_params, 21, 1, 9.0)
        tx, rx = frame_pair(desk_params, [target], seed=2)
        det = _detect_one(desk_params, tx, rx)
        cands = CandidateSet(detection=det, delay_candidates=(target.doa,),
                             doppler_candidates=())
        est = rm.fuse(rx, tx, cands, desk_params)
        assert est.doa_est == target.doa
        assert est.winning_domain == "delay"
        assert est.winning_power == rm.candidate_power(rx, tx, target.doa, det, desk_params)

    def test_truth_beats_decoys(self, desk_params):
        target = on_grid_target(desk_params, 45, 2, 22.0)
        tx, rx = frame_pair(desk_params, [target], seed=7)
        det = _detect_one(desk_params, tx, rx)
        decoys = tuple(target.doa + math.radians(d) for d in (12.0, -15.0))
        cands = CandidateSet(detection=det,
                             delay_candidates=(decoys[0], target.doa),
                             doppler_candidates=(decoys[1], target.doa - math.radians(40)))
        est = rm.fuse(rx, tx, cands, desk_params)
        assert est.doa_est == target.doa
        # winner's power dominates every other candidate by construction
        for angle in decoys:
            assert est.winning_power >= rm.candidate_power(rx, tx, angle, det, desk_params)

    def test_doppler_branch_rescues_shared_delay_bin(self):
        # two targets in one delay bin but far apart in Doppler: the Doppler
        # filter isolates each, and fusion must keep each detection's own angle
        params = rm.desk_params(tx_power_dbm=40.0)
        t1 = on_grid_target(params, 30, 0, 25.0, reflection=2e-7 + 0j)
        t2 = rm.Target(range=t1.range,
                       radial_velocity=params.velocity_of_doppler(5 * params.doppler_bin),
                       doa=math.radians(-35.0), reflection=2e-7 + 0j)
        tx, rx = frame_pair(params, [t1, t2], seed=6)
        estimates = rm.proposed_pipeline(rx, tx, params, 2)
        assert len(estimates) == 2
        found = sorted(math.degrees(e.doa_est) for e in estimates)
        assert abs(found[0] + 35.0) <= 1.0
        assert abs(found[1] - 25.0) <= 1.0

    def test_deterministic(self, desk_params):
        target = on_grid_target(desk_params, 18, 1, -8.0)
        tx, rx = frame_pair(desk_params, [target], seed=9)
        det = _detect_one(desk_params, tx, rx)
        cands = CandidateSet(detection=det, delay_candidates=(0.1, -0.2),
                             doppler_candidates=(0.3,))
        first = rm.fuse(rx, tx, cands, desk_params)
        second = rm.fuse(rx, tx, cands, desk_params)
        assert first == second

    def test_rejects_empty_candidates(self, desk_params):
        target = on_grid_target(desk_params, 18, 1, -8.0)
        tx, rx = frame_pair(desk_params, [target], seed=9)
        det = _detect_one(desk_params, tx, rx)
        with pytest.raises(ValueError):
            rm.fuse(rx, tx, CandidateSet(det, (), ()), desk_params)
