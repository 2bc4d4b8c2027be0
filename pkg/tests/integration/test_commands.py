"""Integration tests for rankmap commands."""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml
from click.testing import CliRunner

from rankmap.cli import main
from rankmap.services import matrix_io

IMAGING_CONFIG = {
    "experiment": "imaging",
    "tasks": ["forward", "inverse", "denoise", "autoencode"],
    "ranks": [3, 6],
    "blur": {"image_side": 6, "kernel_side": 3, "kernel_std": 1.0},
    "images": {"train_count": 50, "test_count": 10, "smoothness": 1.0},
    "noise_std": 0.05,
}

FINANCE_CONFIG = {
    "experiment": "finance",
    "tasks": ["autoencode"],
    "form": "affine",
    "ranks": [2],
    "market": {"days": 200, "assets": 5, "factors": 2},
    "training": {"epochs": 10, "learning_rate": 0.001, "affine": True},
}

SWE_CONFIG = {
    "experiment": "swe",
    "ranks": [4],
    "swe": {
        "params": {"grid": [6, 6]},
        "steps": 10,
        "train_per_family": 3,
        "test_per_family": 2,
        "ood_per_family": 2,
    },
    "training": {"epochs": 5},
}


@pytest.fixture
def runner():
    """Create CLI runner."""
    return CliRunner()


def write_config(tmp_path, config, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(config))
    return path


class TestCli:
    """Tests for the command group itself."""

    def test_version(self, runner):
        """Test --version prints the program name."""
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "rankmap" in result.output

    def test_help_lists_commands(self, runner):
        """Test every command is registered."""
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for command in ("generate", "fit", "evaluate", "sweep", "run"):
            assert command in result.output


class TestRunCommand:
    """Tests for rankmap run."""

    def test_imaging_run(self, runner, tmp_path):
        """Test an imaging run writes maps, tables, manifest and report."""
        out = tmp_path / "imaging"
        config = write_config(tmp_path, IMAGING_CONFIG)
        result = runner.invoke(main, ["run", "--config", str(config), "--out", str(out)])

        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "tables" / "imaging_risk.csv")
        assert len(table) == 8
        for _, rows in table.groupby("task"):
            risks = rows.sort_values("rank")["bayes_risk"].to_numpy()
            assert np.all(np.diff(risks) <= 1e-10)
        assert (out / "maps" / "A_inverse_linear_r6.rkmp").exists()
        assert matrix_io.read_matrix(out / "data" / "F.rkmp").shape == (36, 36)

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "imaging"
        assert manifest["seeds"] == [0]
        assert "output_dir" not in manifest["config"]
        assert "tables/imaging_risk.csv" in manifest["artifacts"]
        assert "rankmap run: imaging" in (out / "report.md").read_text()

    def test_finance_run_is_reproducible(self, runner, tmp_path):
        """Test two runs of one configuration produce byte-identical outputs."""
        config = write_config(tmp_path, FINANCE_CONFIG)
        first, second = tmp_path / "first", tmp_path / "second"
        for out in (first, second):
            result = runner.invoke(main, ["run", "--config", str(config), "--out", str(out)])
            assert result.exit_code == 0, result.output

        files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
        assert files == sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
        for relative in files:
            assert (first / relative).read_bytes() == (second / relative).read_bytes()

        mse = pd.read_csv(first / "tables" / "finance_mse.csv")
        assert set(mse["method"]) == {"optimal", "pca", "trained"}
        correlations = pd.read_csv(first / "tables" / "finance_correlations.csv")
        assert correlations["factor_1"].between(0, 1 + 1e-12).all()

    def test_swe_run(self, runner, tmp_path):
        """Test the shallow-water run scores both maps on test and unseen families."""
        out = tmp_path / "swe"
        config = write_config(tmp_path, SWE_CONFIG)
        result = runner.invoke(main, ["run", "--config", str(config), "--out", str(out)])

        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "tables" / "swe_errors.csv")
        assert set(table["split"]) == {"test", "ood"}
        assert set(table["method"]) == {"optimal", "learned"}
        assert (table["total_nrmse"] > 0).all()
        assert matrix_io.read_matrix(out / "maps" / "A_inverse_linear_r4.rkmp").shape == (108, 108)

    def test_seed_flag(self, runner, tmp_path):
        """Test --seed replaces the configured seeds."""
        out = tmp_path / "seeded"
        config = write_config(tmp_path, IMAGING_CONFIG | {"seeds": [0, 1]})
        result = runner.invoke(
            main, ["run", "--config", str(config), "--seed", "5", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert json.loads((out / "manifest.json").read_text())["seeds"] == [5]

    def test_default_output_root(self, runner, tmp_path, monkeypatch):
        """Test RKMP_OUT_DIR picks the output root."""
        monkeypatch.setenv("RKMP_OUT_DIR", str(tmp_path / "root"))
        config = write_config(tmp_path, IMAGING_CONFIG | {"tasks": ["autoencode"]})
        result = runner.invoke(main, ["run", "--config", str(config)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "root" / "imaging" / "manifest.json").exists()

    def test_unknown_key_exits_with_config_code(self, runner, tmp_path):
        """Test a misspelled key exits 2 and suggests the right key."""
        config = write_config(tmp_path, {"experiment": "imaging", "rnaks": [3]})
        result = runner.invoke(main, ["run", "--config", str(config)])
        assert result.exit_code == 2
        assert "Did you mean" in result.output

    def test_no_experiment_exits_with_config_code(self, runner, tmp_path):
        """Test a config without an experiment is a configuration error."""
        config = write_config(tmp_path, {"ranks": [3]})
        result = runner.invoke(main, ["run", "--config", str(config)])
        assert result.exit_code == 2


class TestSweepCommand:
    """Tests for rankmap sweep."""

    def test_sweep(self, runner, tmp_path):
        """Test the sweep table has one row per rank with learned risk above optimal."""
        out = tmp_path / "sweep"
        config = write_config(
            tmp_path,
            IMAGING_CONFIG
            | {
                "tasks": ["inverse"],
                "ranks": [2, 4, 8],
                "training": {"epochs": 20, "learning_rate": 0.001},
            },
        )
        result = runner.invoke(main, ["sweep", "--config", str(config), "--out", str(out)])

        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "tables" / "sweep_inverse.csv")
        assert table["rank"].tolist() == [2, 4, 8]
        assert np.all(np.diff(table["optimal_risk"].to_numpy()) <= 1e-12)
        assert (table["learned_risk"] >= table["optimal_risk"] - 1e-12).all()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "sweep"

    def test_ranks_flag(self, runner, tmp_path):
        """Test --ranks overrides the configured ranks."""
        out = tmp_path / "sweep"
        config = write_config(tmp_path, IMAGING_CONFIG | {"tasks": ["autoencode"]})
        result = runner.invoke(
            main, ["sweep", "--config", str(config), "--ranks", "1,5", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "tables" / "sweep_autoencode.csv")
        assert table["rank"].tolist() == [1, 5]
        assert table["learned_risk"].isna().all()


class TestDataCommands:
    """Tests for generate, fit and evaluate."""

    @pytest.fixture
    def generated(self, runner, tmp_path):
        """Generate a small imaging data set."""
        out = tmp_path / "gen"
        config = write_config(tmp_path, IMAGING_CONFIG)
        result = runner.invoke(main, ["generate", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output
        return out

    def test_generate_writes_splits(self, generated):
        """Test every split and the operator are written."""
        assert matrix_io.read_matrix(generated / "data" / "train" / "X.rkmp").shape == (36, 50)
        assert matrix_io.read_matrix(generated / "data" / "test" / "Y.rkmp").shape == (36, 10)
        assert (generated / "data" / "train_denoise" / "Y.rkmp").exists()
        assert (generated / "data" / "F.rkmp").exists()

    def test_fit_then_evaluate(self, runner, tmp_path, generated):
        """Test a fitted map can be scored on the test split."""
        fit_dir = tmp_path / "fit"
        result = runner.invoke(
            main,
            [
                "fit",
                str(generated / "data" / "train"),
                "--task",
                "inverse",
                "--ranks",
                "4,8",
                "--out",
                str(fit_dir),
            ],
        )
        assert result.exit_code == 0, result.output
        map_file = fit_dir / "maps" / "A_inverse_linear_r8.rkmp"
        assert matrix_io.read_matrix(map_file).shape == (36, 36)

        metrics = tmp_path / "metrics.csv"
        result = runner.invoke(
            main,
            ["evaluate", str(map_file), str(generated / "data" / "test"), "--out", str(metrics)],
        )
        assert result.exit_code == 0, result.output
        row = pd.read_csv(metrics).iloc[0]
        assert row["samples"] == 10
        assert 0 < row["nrmse"] < 1

    def test_fit_affine_writes_bias(self, runner, tmp_path, generated):
        """Test affine fits write a bias next to the map."""
        fit_dir = tmp_path / "fit"
        result = runner.invoke(
            main,
            [
                "fit",
                str(generated / "data" / "train"),
                "--task",
                "autoencode",
                "--form",
                "affine",
                "--ranks",
                "3",
                "--out",
                str(fit_dir),
            ],
        )
        assert result.exit_code == 0, result.output
        assert (fit_dir / "maps" / "b_autoencode_affine_r3.rkmp").exists()

    def test_fit_plugin_with_ridge(self, runner, tmp_path, generated):
        """Test --ridge selects the plug-in estimator."""
        result = runner.invoke(
            main,
            [
                "fit",
                str(generated / "data" / "train"),
                "--ranks",
                "4",
                "--ridge",
                "0.01",
                "--strategy",
                "cholesky-with-ridge",
                "--out",
                str(tmp_path / "fit"),
            ],
        )
        assert result.exit_code == 0, result.output

    def test_ridge_refused_for_autoencode(self, runner, tmp_path, generated):
        """Test --ridge with a task it does not apply to exits 1."""
        result = runner.invoke(
            main,
            [
                "fit",
                str(generated / "data" / "train"),
                "--task",
                "autoencode",
                "--ranks",
                "4",
                "--ridge",
                "0.01",
                "--out",
                str(tmp_path / "fit"),
            ],
        )
        assert result.exit_code == 1

    def test_evaluate_shape_mismatch(self, runner, tmp_path, generated):
        """Test a map of the wrong size exits 1 and names the raising module."""
        map_file = matrix_io.write_matrix(tmp_path / "small.rkmp", np.eye(3))
        result = runner.invoke(main, ["evaluate", str(map_file), str(generated / "data" / "test")])
        assert result.exit_code == 1
        assert "Dimension mismatch" in result.output
        assert "rankmap.commands.evaluate" in result.output

    def test_evaluate_corrupted_map(self, runner, tmp_path, generated):
        """Test a corrupted map file exits 1."""
        bad = tmp_path / "bad.rkmp"
        bad.write_bytes(b"NOPE" + bytes(40))
        result = runner.invoke(main, ["evaluate", str(bad), str(generated / "data" / "test")])
        assert result.exit_code == 1
        assert "Bad magic" in result.output


class TestOutputFallback:
    """Tests for the default output location."""

    def test_fallback_without_env(self, runner, tmp_path, monkeypatch):
        """Test runs land under ./rankmap-out when RKMP_OUT_DIR is unset."""
        monkeypatch.delenv("RKMP_OUT_DIR", raising=False)
        config = write_config(tmp_path, IMAGING_CONFIG | {"tasks": ["autoencode"]})
        with runner.isolated_filesystem(temp_dir=tmp_path) as cwd:
            result = runner.invoke(main, ["run", "--config", str(config)])
            assert result.exit_code == 0, result.output
            assert (Path(cwd) / "rankmap-out" / "imaging" / "report.md").exists()
