import json
from pathlib import Path

import numpy as np
import pytest

import streamopt as so
from streamopt.bounds import bound_curve
from streamopt.cli import main
from streamopt.serialize import (
    read_bound_csv,
    read_trajectory_csv,
    write_bound_csv,
    write_trajectory_csv,
)


def write_config(tmp_path, **overrides) -> Path:
    doc = {
        "model": "paper-d10",
        "lr": {"c_gamma": 1.0, "alpha": 0.6667, "beta": 0.0},
        "batch": {"kind": "constant", "c_rho": 4},
        "budget": 800,
        "replications": 3,
        "base_seed": 7,
        "averagers": ["assg"],
    }
    doc.update(overrides)
    p = tmp_path / "config.json"
    p.write_text(json.dumps(doc))
    return p


class TestSerialization:
    def test_trajectory_round_trip(self, tmp_path):
        cfg = so.ExperimentConfig(
            lr=so.LearningRateParams(1.0, 2 / 3),
            batch=so.ConstantBatches(4),
            budget=600,
            replications=4,
            base_seed=3,
            averagers=("assg", "wassg"),
            estimate_fourth_moment=True,
        )
        traj = so.run_experiment(cfg)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj)
        again = read_trajectory_csv(path)
        assert again.equals(traj)

    def test_bound_round_trip(self, tmp_path, paper_constants):
        lr = so.LearningRateParams(1.0, 2 / 3)
        curve = bound_curve(
            "assg_constant", paper_constants, lr, so.ConstantBatches(4), [2, 8, 64]
        )
        path = tmp_path / "bound.csv"
        write_bound_csv(path, curve)
        again = read_bound_csv(path)
        assert again.equals(curve)
        assert again.domain == "rmse"

    def test_header_comment_present(self, tmp_path):
        cfg = so.ExperimentConfig(
            lr=so.LearningRateParams(1.0, 2 / 3),
            batch=so.ConstantBatches(2),
            budget=100,
            replications=2,
        )
        traj = so.run_experiment(cfg)
        path = tmp_path / "t.csv"
        write_trajectory_csv(path, traj)
        first = path.read_text().splitlines()[0]
        assert first.startswith("# kind=trajectory config=")
        assert "git=" in first


class TestRunCommand:
    def test_run_writes_curves_and_manifest(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        files = sorted(p.name for p in out.iterdir())
        assert "manifest.json" in files
        assert "run_ssg.csv" in files and "run_assg.csv" in files
        traj = read_trajectory_csv(out / "run_ssg.csv")
        assert len(traj) > 0

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2

    def test_unknown_key_rejected(self, tmp_path):
        cfg = write_config(tmp_path, typo_key=1)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_invalid_alpha_rejected(self, tmp_path):
        cfg = write_config(tmp_path, lr={"c_gamma": 1.0, "alpha": 1.2})
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_seed_repetition_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg), "--seed", "7", "--out", str(a)]) == 0
        assert main(["run", "--config", str(cfg), "--seed", "7", "--out", str(b)]) == 0
        for name in ("run_ssg.csv", "run_assg.csv", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_dotted_overrides(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "o"
        rc = main(
            ["run", "--config", str(cfg), "--out", str(out),
             "--lr.alpha", "0.75", "--batch.c_rho", "2"]
        )
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        stored = next(iter(manifest["files"].values()))["config"]
        assert stored["lr"]["alpha"] == 0.75
        assert stored["batch"]["c_rho"] == 2

    def test_dangling_override_rejected(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["run", "--config", str(cfg), "--lr.alpha"]) == 2

    def test_preset_run_writes_eight_curves(self, tmp_path):
        out = tmp_path / "figs"
        rc = main(
            ["run", "--preset", "fig1", "--reps", "2", "--budget", "1200",
             "--out", str(out)]
        )
        assert rc == 0
        csvs = [p for p in out.iterdir() if p.suffix == ".csv"]
        assert len(csvs) == 8  # ssg + assg for each of four batch sizes
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["files"]) == 8

    def test_divergent_run_exits_3(self, tmp_path):
        # parameters at the float ceiling overflow the stream immediately
        cfg = write_config(
            tmp_path,
            model={"kind": "linear", "theta_star": [1e308] * 4, "noise_std": 1.0},
            lr={"c_gamma": 1.0, "alpha": 0.51, "beta": 0.0},
            batch={"kind": "constant", "c_rho": 1},
            theta0="zeros",
            budget=5000,
            replications=1,
        )
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


class TestBoundsCommand:
    def test_bounds_files_written(self, tmp_path):
        cfg = write_config(tmp_path, budget=2000)
        out = tmp_path / "b"
        assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert "bounds_ssg_constant.csv" in names
        assert "bounds_assg_constant.csv" in names
        assert "bounds_fourth_moment.csv" in names
        curve = read_bound_csv(out / "bounds_ssg_constant.csv")
        assert np.all(curve.total >= 0)

    def test_zero_noise_config_zero_asymptote(self, tmp_path):
        cfg = write_config(
            tmp_path,
            model={"kind": "linear", "theta_star": [1.0, 2.0], "noise_std": 0.0},
            budget=2000,
        )
        out = tmp_path / "b0"
        assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
        curve = read_bound_csv(out / "bounds_ssg_constant.csv")
        np.testing.assert_array_equal(curve.terms["asymptotic"], 0.0)

    def test_divergent_alpha_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, lr={"c_gamma": 1.0, "alpha": 1.0, "beta": 0.0})
        assert main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


class TestVerifyCommand:
    def test_small_suite_passes(self, capsys):
        rc = main(["verify", "--seed", "3", "--cases", "40", "--dominance-specs", "5"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "overall: PASS" in out

    def test_corrupt_hook_fails(self, capsys):
        rc = main(
            ["verify", "--seed", "3", "--cases", "10", "--dominance-specs", "2",
             "--self-check-corrupt"]
        )
        assert rc != 0
        assert "FAIL" in capsys.readouterr().out

    def test_zero_cases_vacuous_pass_with_warning(self, capsys):
        rc = main(["verify", "--cases", "0", "--dominance-specs", "0"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "vacuous" in out


class TestFitCommand:
    def test_fit_on_emitted_csv(self, tmp_path, capsys):
        cfg = write_config(tmp_path, budget=3000, replications=5)
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        rc = main(["fit", "--input", str(out / "run_ssg.csv"), "--series", "ssg"])
        assert rc == 0
        assert "slope=" in capsys.readouterr().out

    def test_unknown_series_exits_2(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "o"
        main(["run", "--config", str(cfg), "--out", str(out)])
        assert main(["fit", "--input", str(out / "run_ssg.csv"),
                     "--series", "m4"]) == 2
