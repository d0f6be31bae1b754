import numpy as np
import pytest

import streamopt as so
from streamopt.bounds import bound_curve
from streamopt.harness import checkpoint_blocks, config_hash, preset_configs
from streamopt.trajectory import Trajectory


def small_cfg(**kw):
    base = dict(
        lr=so.LearningRateParams(1.0, 2 / 3, 0.0),
        batch=so.ConstantBatches(4),
        budget=1_200,
        replications=6,
        base_seed=42,
        averagers=("assg",),
    )
    base.update(kw)
    return so.ExperimentConfig(**base)


class TestRunExperiment:
    def test_deterministic_given_base_seed(self):
        a = so.run_experiment(small_cfg())
        b = so.run_experiment(small_cfg())
        assert a.equals(b)

    def test_distinct_seeds_distinct_curves(self):
        a = so.run_experiment(small_cfg())
        b = so.run_experiment(small_cfg(base_seed=43))
        assert not np.array_equal(a.mse, b.mse)

    def test_aggregation_linearity(self):
        both = so.run_experiment(small_cfg(replications=8, base_seed=11))
        first = so.run_experiment(small_cfg(replications=4, base_seed=11))
        second = so.run_experiment(small_cfg(replications=4, base_seed=15))
        np.testing.assert_allclose(
            both.mse, (first.mse + second.mse) / 2, rtol=1e-12
        )
        np.testing.assert_allclose(
            both.mse_avg, (first.mse_avg + second.mse_avg) / 2, rtol=1e-12
        )

    def test_stderr_reflects_spread(self):
        traj = so.run_experiment(small_cfg(replications=12))
        assert traj.mse_se is not None
        assert np.all(traj.mse_se >= 0)
        single = so.run_experiment(small_cfg(replications=1))
        assert single.mse_se is None

    def test_zero_noise_single_replication_decreasing(self):
        cfg = small_cfg(
            model={"kind": "linear", "theta_star": [1.0, -2.0], "noise_std": 0.0},
            lr=so.LearningRateParams(0.05, 0.6),
            replications=1,
            theta0="zeros",
            budget=400,
            batch=so.ConstantBatches(2),
        )
        traj = so.run_experiment(cfg)
        assert np.all(np.diff(traj.mse) < 0)

    def test_divergence_surfaces_seed_and_block(self):
        class ExplodingModel:
            dim = 2
            minimizer = np.zeros(2)

            def sample_batch(self, n, rng):
                return None, None

            def batch_gradient(self, theta, batch):
                return np.array([np.nan, np.nan])

        cfg = small_cfg(model=ExplodingModel(), replications=3, budget=64)
        with pytest.raises(so.DivergenceError) as e:
            so.run_experiment(cfg)
        assert e.value.block == 1
        assert "seed 42" in str(e.value)

    def test_meta_carries_config_hash_and_seed_range(self):
        cfg = small_cfg()
        traj = so.run_experiment(cfg)
        assert traj.meta["config_hash"] == config_hash(cfg)
        assert traj.meta["seed_range"] == [42, 47]

    def test_checkpoint_grid_respects_budget(self):
        cfg = small_cfg(checkpoints=[1, 10, 300])
        traj = so.run_experiment(cfg)
        np.testing.assert_array_equal(traj.t, [1, 10, 300])
        with pytest.raises(ValueError):
            so.run_experiment(small_cfg(checkpoints=[1, 10_000]))

    def test_parallel_matches_serial(self, monkeypatch):
        cfg = small_cfg(replications=4)
        serial = so.run_experiment(cfg)
        monkeypatch.setenv("STREAMOPT_THREADS", "2")
        parallel = so.run_experiment(cfg)
        assert serial.equals(parallel)

    def test_random_schedule_aggregation(self):
        cfg = small_cfg(
            batch=so.RandomBatches(1.0, 0.1, 3.0, 0.4),
            replications=4,
            budget=2_000,
        )
        traj = so.run_experiment(cfg)
        assert traj.meta["config_hash"]
        assert np.all(np.diff(traj.n_total) > 0)


class TestConfig:
    def test_dict_round_trip(self):
        cfg = small_cfg(
            batch=so.VaryingBatches(8.0, 0.5),
            averagers=("assg", "wassg"),
            estimate_fourth_moment=True,
        )
        again = so.ExperimentConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            small_cfg(replications=0)
        with pytest.raises(ValueError):
            small_cfg(averagers=("nope",))
        with pytest.raises(ValueError):
            small_cfg(checkpoints=[5, 5])

    def test_checkpoint_blocks_shape(self):
        cps = checkpoint_blocks(12_500, 64)
        assert cps[0] == 1 and cps[-1] == 12_500
        assert np.all(np.diff(cps) > 0)
        assert len(cps) <= 64


class TestFitRate:
    def _power_law(self, expo, c=3.0):
        n = np.unique(np.geomspace(10, 1e5, 40).astype(np.int64))
        return Trajectory(
            t=np.arange(1, len(n) + 1),
            n_total=n,
            mse=c * n.astype(float) ** expo,
        )

    def test_recovers_planted_exponent(self):
        fit = so.fit_rate(self._power_law(-0.5), "ssg")
        assert fit.slope == pytest.approx(-0.5, abs=1e-9)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_constant_series_zero_slope(self):
        fit = so.fit_rate(self._power_law(0.0), "ssg")
        assert fit.slope == pytest.approx(0.0, abs=1e-9)

    def test_window_restricts_points(self):
        fit = so.fit_rate(self._power_law(-1.0), "ssg", window=0.25)
        assert fit.n_points == 10

    def test_nonpositive_values_warned_and_dropped(self):
        traj = self._power_law(-0.5)
        traj.mse[-3] = 0.0
        with pytest.warns(UserWarning):
            fit = so.fit_rate(traj, "ssg")
        assert fit.n_points == 19

    def test_too_few_points_rejected(self):
        traj = self._power_law(-0.5)
        with pytest.raises(ValueError):
            so.fit_rate(traj, "ssg", window=0.05)


class TestCompareWithBound:
    def test_valid_constants_no_violations(self, paper_constants):
        cfg = small_cfg(replications=20, budget=3_000, estimate_fourth_moment=True)
        traj = so.run_experiment(cfg)
        curve = bound_curve("ssg_constant", paper_constants, cfg.lr, cfg.batch, traj.t)
        cmp = so.compare_with_bound(traj, curve, "ssg")
        assert cmp.ok
        assert np.all(cmp.ratio >= 1.0)

    def test_zero_noise_bound_flags_noisy_run(self, paper_constants):
        cfg = small_cfg(replications=20, budget=3_000)
        traj = so.run_experiment(cfg)
        fake = paper_constants.replace(sigma=0.0, tau=0.0, delta0=0.0, delta0_4=0.0)
        curve = bound_curve("ssg_constant", fake, cfg.lr, cfg.batch, traj.t)
        cmp = so.compare_with_bound(traj, curve, "ssg")
        assert not cmp.ok

    def test_grid_mismatch_rejected(self, paper_constants):
        cfg = small_cfg()
        traj = so.run_experiment(cfg)
        curve = bound_curve(
            "ssg_constant", paper_constants, cfg.lr, cfg.batch, traj.t[:-1]
        )
        with pytest.raises(ValueError):
            so.compare_with_bound(traj, curve, "ssg")


class TestPresets:
    def test_fig1_has_four_constant_runs(self):
        cfgs = preset_configs("fig1")
        assert set(cfgs) == {"crho1", "crho8", "crho64", "crho128"}
        assert all(isinstance(c.batch, so.ConstantBatches) for c in cfgs.values())

    def test_robustness_uses_batch_coupled_rate(self):
        cfgs = preset_configs("fig-robustness")
        assert all(c.lr.beta == pytest.approx(1 / 3) for c in cfgs.values())
        assert {c.batch.rho for c in cfgs.values()} == {-0.5, 0.0, 0.5}

    def test_fig6_tracks_weighted_average(self):
        cfgs = preset_configs("fig6")
        assert all("wassg" in c.averagers for c in cfgs.values())

    def test_replicate_fig1_smoke(self):
        res = so.replicate_paper_figures("fig1", replications=2, budget=1_500)
        assert len(res.runs) == 4
        # two estimator series per batch size: eight curves total
        curves = [
            (label, s)
            for label, (_, traj) in res.runs.items()
            for s in traj.series_names
        ]
        assert len(curves) == 8
        assert len(res.bounds) == 8
        for key, curve in res.bounds.items():
            assert np.all(curve.total >= 0)

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError):
            preset_configs("fig99")
