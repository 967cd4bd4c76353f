"""Shared fixtures: fake run directories laid out the way ``train`` writes them."""

from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest

from python.agents.trainer import write_manifest
from python.experiments.config import ExperimentConfig, save_config
from python.storage.metrics_csv import MetricsRow, write_metrics

RunDirFactory = Callable[..., Path]


@pytest.fixture
def make_run_dir(tmp_path: Path) -> RunDirFactory:
    """Factory writing config.cfg, metrics.csv and manifest.json for one fake run."""

    def factory(
        rewards: list[float],
        seed: int = 1,
        point: str | None = None,
        status: str = "ok",
        root: Path | None = None,
        **overrides: Any,
    ) -> Path:
        config = ExperimentConfig(
            seed=seed, total_episodes=len(rewards), output_dir=str(root or tmp_path / "runs")
        ).with_overrides(**overrides)
        run_dir = config.run_dir
        save_config(config, run_dir / "config.cfg")
        rows = [
            MetricsRow(episode=i, mean_reward_per_agent=r, collisions=0)
            for i, r in enumerate(rewards, 1)
        ]
        write_metrics(rows, run_dir / "metrics.csv")
        manifest: dict[str, Any] = {"run_name": config.run_name, "seed": seed, "status": status}
        if point is not None:
            manifest["point"] = point
        if status != "ok":
            manifest["error"] = "FloatingPointError: boom"
        write_manifest(run_dir, manifest)
        return run_dir

    return factory
