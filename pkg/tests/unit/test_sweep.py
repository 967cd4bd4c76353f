"""Tests for ablation sweep planning and failure isolation."""

from pathlib import Path
from unittest.mock import patch

import pandas as pd
import pytest

from python.agents.hammer import RunMode
from python.agents.trainer import LearningCurve, train
from python.experiments.config import ExperimentConfig
from python.experiments.sweep import (
    SweepTask,
    build_tasks,
    execute_tasks,
    normalize_axis,
    parse_axis_values,
    parse_seeds,
    run_sweep,
    run_task,
    sweep_dir,
)


@pytest.fixture
def tiny_config(tmp_path: Path) -> ExperimentConfig:
    """A config small enough to train in a unit test."""
    return ExperimentConfig(
        total_episodes=2,
        hidden_size=8,
        output_dir=str(tmp_path),
        checkpoint_every=0,
        log_every=0,
        final_window=2,
    )


class TestParsing:
    """Test sweep argument parsing."""

    def test_axis_aliases(self) -> None:
        """Test hyphenated and underscored axis names."""
        assert normalize_axis("message-length") == "message_length"
        assert normalize_axis("n_agents") == "n_agents"
        with pytest.raises(ValueError, match="Unknown sweep axis"):
            normalize_axis("gamma")

    def test_integer_values(self) -> None:
        """Test message length points."""
        assert parse_axis_values("message-length", "2, 4,6,8") == [2, 4, 6, 8]

    def test_mode_values(self) -> None:
        """Test mode points become run modes."""
        values = parse_axis_values("mode", "hammer,independent,random_message,centralized")
        assert values == list(RunMode)

    @pytest.mark.parametrize("raw", ["", "2,x", "0,4"])
    def test_bad_values(self, raw: str) -> None:
        """Test rejected value lists."""
        with pytest.raises(ValueError):
            parse_axis_values("message_length", raw)

    def test_seeds(self) -> None:
        """Test seed counts and explicit lists."""
        assert parse_seeds("3") == [1, 2, 3]
        assert parse_seeds("7,11") == [7, 11]
        with pytest.raises(ValueError):
            parse_seeds("0")
        with pytest.raises(ValueError, match="distinct"):
            parse_seeds("2,2")


class TestBuildTasks:
    """Test the (point, seed) grid."""

    def test_grid_size_and_layout(self, tiny_config: ExperimentConfig, tmp_path: Path) -> None:
        """Test 4 points x 3 seeds with one directory per point."""
        tasks = build_tasks(tiny_config, "message_length", [2, 4, 6, 8], [1, 2, 3])
        assert len(tasks) == 12
        assert [t.point for t in tasks[:3]] == ["2", "2", "2"]
        assert {t.config.message_length for t in tasks} == {2, 4, 6, 8}
        assert tasks[4].config.seed == 2
        assert tasks[4].config.run_dir.parent == tmp_path / "sweep_message_length" / "4"

    def test_points_share_fingerprint_across_seeds(self, tiny_config: ExperimentConfig) -> None:
        """Test that only the swept field separates cells."""
        tasks = build_tasks(tiny_config, "mode", [RunMode.HAMMER, RunMode.INDEPENDENT], [1, 2])
        assert tasks[0].config.fingerprint() == tasks[1].config.fingerprint()
        assert tasks[0].config.fingerprint() != tasks[2].config.fingerprint()
        assert tasks[2].point == "independent"

    def test_agent_axis_rederives_message_length(self, tiny_config: ExperimentConfig) -> None:
        """Test that N=5 points get length 8 unless set explicitly."""
        tasks = build_tasks(tiny_config, "n_agents", [3, 5], [1])
        assert [t.config.message_length for t in tasks] == [4, 8]

    def test_sweep_dir(self, tiny_config: ExperimentConfig, tmp_path: Path) -> None:
        """Test the sweep root naming."""
        assert sweep_dir(tiny_config, "n-agents") == tmp_path / "sweep_n_agents"


class TestFailureIsolation:
    """Test that one failing run never stops the others."""

    def test_run_task_records_failure(self, tiny_config: ExperimentConfig) -> None:
        """Test the failed outcome and manifest of a crashing run."""
        task = SweepTask(config=tiny_config, point="4")
        with patch("python.experiments.sweep.train", side_effect=RuntimeError("disk full")):
            outcome = run_task(task)
        assert outcome["status"] == "failed"
        assert outcome["error"] == "RuntimeError: disk full"
        assert (tiny_config.run_dir / "manifest.json").exists()

    def test_one_failure_among_four(self, tiny_config: ExperimentConfig) -> None:
        """Test that the other runs complete when one raises."""
        tasks = build_tasks(tiny_config, "message_length", [2, 4], [1, 2])

        def flaky(config: ExperimentConfig, point: str | None = None) -> LearningCurve:
            if point == "4" and config.seed == 2:
                raise FloatingPointError("Non-finite gradient")
            return train(config, point=point)

        with patch("python.experiments.sweep.train", side_effect=flaky):
            outcomes = execute_tasks(tasks, workers=1)

        assert [o["status"] for o in outcomes] == ["ok", "ok", "ok", "failed"]

    def test_sweep_summary_marks_failed_seed(self, tiny_config: ExperimentConfig) -> None:
        """Test that the summary lists the failed seed and scores the rest."""

        def flaky(config: ExperimentConfig, point: str | None = None) -> LearningCurve:
            if point == "2" and config.seed == 1:
                raise RuntimeError("worker crashed")
            return train(config, point=point)

        with patch("python.experiments.sweep.train", side_effect=flaky):
            results = run_sweep(tiny_config, "message_length", [2, 4], [1, 2])

        assert [r.point for r in results] == ["2", "4"]
        assert results[0].failed_seeds == [1]
        assert list(results[0].scores) == [2]
        assert results[1].n_seeds == 2

        root = sweep_dir(tiny_config, "message_length")
        summary = pd.read_csv(root / "summary.csv", dtype={"point": str, "failed_seeds": str})
        assert summary["failed_seeds"].fillna("").tolist() == ["1", ""]
        assert (root / "curves" / "point=4" / "curves.parquet").exists()
