"""Integration test: desk-scale learning runs (deselected by default, run with -m slow)."""

from pathlib import Path

import numpy as np
import pytest

from python.agents.hammer import RunMode
from python.agents.trainer import LearningCurve, train
from python.experiments.config import ExperimentConfig
from python.models.gradcheck import run_gradcheck_suite

SEEDS = (1, 2, 3)


def run(
    tmp_path: Path, mode: RunMode, seed: int, episodes: int, **overrides: object
) -> LearningCurve:
    config = ExperimentConfig(
        mode=mode,
        total_episodes=episodes,
        seed=seed,
        output_dir=str(tmp_path),
        checkpoint_every=0,
        log_every=1000,
        **overrides,  # type: ignore[arg-type]
    )
    return train(config)


def improves(rewards: np.ndarray, window: int = 500, margin: float = 0.0) -> bool:
    first = float(np.mean(rewards[:window]))
    last = float(np.mean(rewards[-window:]))
    return last > first + margin * abs(first)


@pytest.fixture(scope="module")
def mode_curves(tmp_path_factory: pytest.TempPathFactory) -> dict[tuple[RunMode, int], float]:
    """Final scores of all four modes, N=3, m=4, 10k episodes, 3 seeds."""
    root = tmp_path_factory.mktemp("modes")
    return {
        (mode, seed): run(root, mode, seed, 10000).final_score
        for mode in RunMode
        for seed in SEEDS
    }


def wins(scores: dict[tuple[RunMode, int], float], better: RunMode, worse: RunMode) -> int:
    return sum(scores[(better, seed)] >= scores[(worse, seed)] for seed in SEEDS)


@pytest.mark.slow
def test_gradcheck_suite() -> None:
    """Test 100 random networks against finite differences."""
    report = run_gradcheck_suite(instances=100, seed=0)
    assert report["max_relative_error"] < 1e-4


@pytest.mark.slow
def test_single_agent_ppo_learns(tmp_path: Path) -> None:
    """Test one agent reaching one landmark: last 500 episodes beat the first 500 by 30%."""
    curve = run(tmp_path, RunMode.INDEPENDENT, 1, 2000, n_agents=1)
    assert improves(curve.rewards, margin=0.3)


@pytest.mark.slow
def test_independent_learners_improve(tmp_path: Path) -> None:
    """Test that independent PPO improves on every seed with N=3."""
    for seed in SEEDS:
        curve = run(tmp_path, RunMode.INDEPENDENT, seed, 5000)
        assert improves(curve.rewards), f"seed {seed} did not improve"


@pytest.mark.slow
def test_hammer_at_least_matches_independent(
    mode_curves: dict[tuple[RunMode, int], float],
) -> None:
    """Test hammer >= independent in at least 2 of 3 seeds."""
    assert wins(mode_curves, RunMode.HAMMER, RunMode.INDEPENDENT) >= 2


@pytest.mark.slow
def test_baseline_ordering(mode_curves: dict[tuple[RunMode, int], float]) -> None:
    """Test that random messages and a centralized policy do no better than independent."""
    assert wins(mode_curves, RunMode.INDEPENDENT, RunMode.RANDOM_MESSAGE) >= 2
    assert wins(mode_curves, RunMode.INDEPENDENT, RunMode.CENTRALIZED) >= 2


@pytest.mark.slow
def test_extended_reproduction(tmp_path: Path) -> None:
    """Test 30k-episode hammer runs land in [-80, -50] and beat independent on average."""
    seeds = range(1, 6)
    hammer = [run(tmp_path, RunMode.HAMMER, s, 30000).final_score for s in seeds]
    independent = [run(tmp_path, RunMode.INDEPENDENT, s, 30000).final_score for s in seeds]
    assert -80.0 <= float(np.mean(hammer)) <= -50.0
    assert np.mean(hammer) >= np.mean(independent)
