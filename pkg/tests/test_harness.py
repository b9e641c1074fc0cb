import math

import numpy as np
import pytest

import rdmusic as rm
from rdmusic.harness import Estimate, sweep_points

from conftest import on_grid_target


def _triple(target, params):
    return Estimate(delay=target.delay, doppler=target.doppler(params), doa=target.doa)


class TestTrialRng:
    def test_deterministic(self):
        a = rm.trial_rng(42, 7).standard_normal(5)
        b = rm.trial_rng(42, 7).standard_normal(5)
        assert np.array_equal(a, b)

    def test_distinct_trials_differ(self):
        a = rm.trial_rng(42, 0).standard_normal(5)
        b = rm.trial_rng(42, 1).standard_normal(5)
        assert not np.array_equal(a, b)


class TestAssociate:
    def test_identity_pairing(self, desk_params):
        targets = [on_grid_target(desk_params, 20 + 10 * i, i, -20.0 + 17.0 * i)
                   for i in range(3)]
        ests = [_triple(t, desk_params) for t in targets]
        assignment, errors = rm.associate(targets, ests, desk_params)
        assert assignment == [0, 1, 2]
        assert errors == [0.0, 0.0, 0.0]

    def test_permutation_invariance(self, desk_params):
        targets = [on_grid_target(desk_params, 20 + 10 * i, i, -20.0 + 17.0 * i)
                   for i in range(3)]
        ests = [_triple(t, desk_params) for t in targets]
        shuffled = [ests[2], ests[0], ests[1]]
        assignment, errors = rm.associate(targets, shuffled, desk_params)
        assert assignment == [1, 2, 0]
        assert errors == [0.0, 0.0, 0.0]

    def test_two_truths_one_estimate(self, desk_params):
        t1 = on_grid_target(desk_params, 20, 1, 10.0)
        t2 = on_grid_target(desk_params, 45, 2, -30.0)
        est = _triple(t1, desk_params)
        assignment, errors = rm.associate([t1, t2], [est], desk_params)
        assert assignment == [0, None]
        assert errors[0] == 0.0
        assert errors[1] == 30.0   # miss penalty

    def test_rejects_empty(self, desk_params):
        t = on_grid_target(desk_params, 20, 1, 0.0)
        with pytest.raises(ValueError):
            rm.associate([t], [], desk_params)
        with pytest.raises(ValueError):
            rm.associate([], [_triple(t, desk_params)], desk_params)


class TestRunTrial:
    def test_deterministic(self):
        cfg = rm.make_config("desk", n_targets=2, tx_power_dbm=35.0, n_trials=1, seed=3)
        a = rm.run_trial(cfg, 0)
        b = rm.run_trial(cfg, 0)
        assert a == b

    def test_noiseless_single_target_small_error(self):
        cfg = rm.make_config("desk", n_targets=1, tx_power_dbm=30.0, n_trials=1,
                             seed=1, noise_on=False)
        record = rm.run_trial(cfg, 0)
        assert record.errors_deg["proposed"][0] <= 0.2

    def test_three_separated_targets_high_power(self):
        cfg = rm.make_config("desk", n_targets=3, tx_power_dbm=60.0, n_trials=1, seed=11)
        # hunt for a seed-trial with all pairwise range separations >= 4 bins
        for trial in range(20):
            record = rm.run_trial(cfg, trial)
            bins = sorted(t.delay * cfg.params.bandwidth for t in record.targets)
            if min(b - a for a, b in zip(bins, bins[1:])) >= 4.0:
                break
        else:
            pytest.fail("no well-separated scenario found")
        assert max(record.errors_deg["proposed"]) <= 0.5

    def test_methods_subset(self):
        cfg = rm.make_config("desk", n_targets=1, tx_power_dbm=30.0, n_trials=1,
                             seed=2, methods=("proposed",))
        record = rm.run_trial(cfg, 0)
        assert set(record.estimates) == {"proposed"}


class TestSweep:
    def test_single_trial_rmse_definition(self):
        cfg = rm.make_config("desk", n_targets=2, tx_power_dbm=40.0, n_trials=1,
                             seed=6, methods=("proposed",))
        rows, records = rm.rmse_sweep(cfg, keep_records=True)
        errs = np.array(records[0].errors_deg["proposed"])
        assert rows[0]["rmse_deg"] == pytest.approx(float(np.sqrt(np.mean(errs ** 2))))
        assert rows[0]["median_rmse_deg"] == pytest.approx(rows[0]["rmse_deg"])

    def test_doubling_trials_reuses_prefix(self):
        short = rm.make_config("desk", n_targets=1, tx_power_dbm=35.0, n_trials=2,
                               seed=9, methods=("proposed",))
        long = rm.make_config("desk", n_targets=1, tx_power_dbm=35.0, n_trials=4,
                              seed=9, methods=("proposed",))
        _, recs_short = rm.rmse_sweep(short, keep_records=True)
        _, recs_long = rm.rmse_sweep(long, keep_records=True)
        assert recs_long[:2] == recs_short

    def test_power_sweep_rows(self):
        cfg = rm.make_config("desk", n_targets=1, tx_power_dbm=(20.0, 40.0),
                             n_trials=2, seed=4, methods=("proposed", "dft_data_aided"))
        rows, _ = rm.rmse_sweep(cfg)
        assert len(rows) == 4
        assert [r["value"] for r in rows] == [20.0, 20.0, 40.0, 40.0]
        assert {r["method"] for r in rows} == {"proposed", "dft_data_aided"}

    def test_target_sweep(self):
        cfg = rm.make_config("desk", n_targets=(1, 2), tx_power_dbm=40.0,
                             n_trials=1, seed=4, methods=("proposed",))
        rows, _ = rm.rmse_sweep(cfg)
        assert [r["n_targets"] for r in rows] == [1, 2]

    def test_rejects_double_sweep(self):
        with pytest.raises(ValueError):
            rm.make_config("desk", n_targets=(1, 2), tx_power_dbm=(10.0, 20.0))

    def test_sweep_point_params_power(self):
        cfg = rm.make_config("desk", n_targets=1, tx_power_dbm=(10.0, 20.0), n_trials=1)
        points = sweep_points(cfg)
        assert [p[1] for p in points] == [10.0, 20.0]
        assert points[1][2].params.tx_power == pytest.approx(0.1)


class TestConfigValidation:
    def test_empty_sweep_rejected(self):
        with pytest.raises(ValueError):
            rm.make_config("desk", tx_power_dbm=())

    def test_bad_method_rejected(self):
        with pytest.raises(ValueError):
            rm.make_config("desk", methods=("nonsense",))

    def test_bad_trials_rejected(self):
        with pytest.raises(ValueError):
            rm.make_config("desk", n_trials=0)

    def test_desk_velocity_scaling_keeps_doppler_unambiguous(self):
        cfg = rm.make_config("desk")
        fd_max = cfg.params.doppler_shift(cfg.v_max)
        assert fd_max < cfg.params.max_unambiguous_doppler
        # occupied Doppler fraction stays comparable to the full-scale preset
        paper = rm.make_config("paper")
        frac_desk = fd_max / (1.0 / cfg.params.symbol_duration)
        frac_paper = paper.params.doppler_shift(paper.v_max) / \
            (1.0 / paper.params.symbol_duration)
        assert frac_desk == pytest.approx(frac_paper, rel=0.3)
