"""Tests for the command line interface."""
import pandas as pd
import pytest
from typer.testing import CliRunner

from src.cli import app

runner = CliRunner()

TINY_RUN = [
    "schedule.T=20",
    "denoiser.base_width=8",
    "denoiser.depth=2",
    "denoiser.tile_size=16",
    "batch_size=4",
    "output_dir=run",
    "data.train_manifest=toy/manifest_train.json",
    "data.test_manifest=toy/manifest_test.json",
    "teacher.iterations=2",
    "teacher.save_every=1",
    "teacher.optimizer.warmup=1",
    "distill.iterations=2",
    "distill.student_optimizer.warmup=1",
    "distill.disc_optimizer.warmup=1",
    "distill.gap_pairs=1",
    "evaluation.batch_size=2",
    "evaluation.grid_rows=1",
]


def _sets(items):
    args = []
    for item in items:
        args += ["--set", item]
    return args


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(app, ["make-toy", "--n", "4", "--n-test", "2", "--size", "16", "--seed", "1", "--out", "toy"])
    assert result.exit_code == 0, result.output
    return tmp_path


@pytest.fixture
def teacher_ckpt(workdir):
    result = runner.invoke(app, ["train-teacher", "--preset", "toy", *_sets(TINY_RUN)])
    assert result.exit_code == 0, result.output
    return workdir / "run" / "teacher" / "teacher.safetensors"


class TestCommands:
    """Test each command on a tiny run."""

    def test_make_toy(self, workdir):
        assert (workdir / "toy" / "manifest_train.json").exists()
        assert (workdir / "toy" / "manifest_test.json").exists()

    def test_train_teacher(self, teacher_ckpt):
        assert teacher_ckpt.exists()

    def test_distill_sample_evaluate_bench(self, teacher_ckpt, workdir):
        result = runner.invoke(
            app, ["distill", "--teacher", str(teacher_ckpt), "--preset", "toy", "--no-adv", *_sets(TINY_RUN)]
        )
        assert result.exit_code == 0, result.output
        student = workdir / "run" / "distill" / "student.safetensors"
        assert student.exists()
        assert not (workdir / "run" / "distill" / "discriminator.safetensors").exists()

        result = runner.invoke(
            app, ["sample", "--checkpoint", str(student), "--input", "toy/test/cond", "--steps", "2", "--out", "samples"]
        )
        assert result.exit_code == 0, result.output
        assert len(list((workdir / "samples").glob("*.png"))) == 2

        result = runner.invoke(app, ["evaluate", "--checkpoint", str(student), "--steps", "1,2", "--out", "eval"])
        assert result.exit_code == 0, result.output
        assert (workdir / "eval" / "metrics_consistency_2.csv").exists()

        result = runner.invoke(
            app, ["bench", "--checkpoint", str(student), "--methods", "ancestral,consistency:1", "--reps", "3",
                  "--warmup", "0", "--out", "bench"]
        )
        assert result.exit_code == 0, result.output
        table = pd.read_csv(workdir / "bench" / "latency.csv")
        assert {"method", "steps", "median_ms", "speedup_vs_ancestral"} <= set(table.columns)


class TestFailures:
    """Test that package errors end the command with status 1."""

    def test_missing_checkpoint(self, workdir):
        result = runner.invoke(app, ["evaluate", "--checkpoint", "nowhere.safetensors"])

        assert result.exit_code == 1
        assert "CheckpointError" in result.output

    def test_unknown_preset(self, workdir):
        result = runner.invoke(app, ["train-teacher", "--preset", "huge"])

        assert result.exit_code == 1
        assert "ConfigError" in result.output

    def test_too_few_reps(self, teacher_ckpt):
        result = runner.invoke(app, ["bench", "--checkpoint", str(teacher_ckpt), "--reps", "2"])

        assert result.exit_code == 1

    def test_malformed_override(self, workdir):
        result = runner.invoke(app, ["train-teacher", "--set", "no-equals-sign"])

        assert result.exit_code != 0
