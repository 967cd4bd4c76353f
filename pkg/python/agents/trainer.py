"""Training and evaluation runs over the navigation environment.

A run directory (``config.run_dir``) receives:

    config.cfg               resolved configuration
    metrics.csv              one row per episode
    checkpoint_ep<k>.npz     every ``checkpoint_every`` episodes
    checkpoint_final.npz     parameters and optimizer state after the last episode
    checkpoint_abort.npz     only when training hit non-finite state
    manifest.json            seed, version, wall time, scores, last local update drift
"""

import json
import math
import subprocess
import time
from contextlib import AbstractContextManager, nullcontext
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, TypedDict

import numpy as np

from python.agents.hammer import (
    Buffers,
    EpisodeSummary,
    PolicyBundle,
    RunMode,
    build_policy_bundle,
    run_episode,
)
from python.agents.ppo import RolloutBuffer, UpdateStats
from python.envs.navigation import NavigationEnv, PhysicsParams
from python.envs.trajectory import TrajectoryRecorder
from python.experiments.config import ExperimentConfig, save_config
from python.experiments.seeding import EVAL_PURPOSE, TRAIN_PURPOSE, RngStreams
from python.models.checkpoint import save_checkpoint
from python.processors.aggregator import final_score
from python.storage.metrics_csv import MetricsRow, write_metrics

PACKAGE_NAME = "hammer-marl"


class EvalReport(TypedDict):
    """Result of evaluate_policy."""

    episodes: int
    mean_reward_per_agent: float
    mean_collisions: float


@dataclass
class LearningCurve:
    """Per-episode metrics of one training run."""

    rows: list[MetricsRow] = field(default_factory=list)
    run_dir: Path | None = None
    final_score: float = math.nan
    eval_score: float | None = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([row.mean_reward_per_agent for row in self.rows], dtype=np.float64)


def make_env(config: ExperimentConfig) -> NavigationEnv:
    params = PhysicsParams(
        episode_length=config.episode_length, collision_penalty=config.collision_penalty
    )
    return NavigationEnv(config.n_agents, params=params, continuous=config.continuous)


def make_buffers(config: ExperimentConfig) -> Buffers:
    central = None
    if config.mode == RunMode.HAMMER:
        central = RolloutBuffer(config.hp_central.batch_size, "central")
    return Buffers(local=RolloutBuffer(config.hp_local.batch_size, "local"), central=central)


def version_string() -> str:
    """``git describe`` of the working tree, else the installed package version."""
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        described = result.stdout.strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "unknown"


def _metrics_row(episode: int, summary: EpisodeSummary, wall_ms: int | None) -> MetricsRow:
    central, local = summary.central_stats, summary.local_stats
    return MetricsRow(
        episode=episode,
        mean_reward_per_agent=summary.mean_reward_per_agent,
        collisions=summary.collisions,
        central_loss=central.loss if central else None,
        local_loss=local.loss if local else None,
        entropy=local.entropy if local else None,
        wall_ms=wall_ms,
    )


def _json_number(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return value


def write_manifest(run_dir: Path, manifest: dict[str, Any]) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)


def evaluate_policy(
    bundle: PolicyBundle,
    config: ExperimentConfig,
    episodes: int,
    trajectory_path: Path | None = None,
) -> EvalReport:
    """Play ``episodes`` episodes without learning.

    Messages and local actions are the policy means (argmax for discrete
    actions) unless ``config.eval_stochastic`` is set. Evaluation draws from its
    own random streams, so it never disturbs training randomness.

    Args:
        bundle: Trained networks
        config: Run configuration (mode, environment, seed)
        episodes: Number of evaluation episodes
        trajectory_path: Optional NDJSON trajectory dump

    Returns:
        EvalReport with mean reward per agent and mean collisions per episode
    """
    if episodes <= 0:
        raise ValueError(f"episodes must be positive, got {episodes}")
    env = make_env(config)
    streams = RngStreams.from_seed(config.seed, EVAL_PURPOSE)
    rewards: list[float] = []
    collisions: list[int] = []

    dump: AbstractContextManager[TrajectoryRecorder | None] = (
        TrajectoryRecorder(trajectory_path) if trajectory_path is not None else nullcontext()
    )
    with dump as recorder:
        for episode in range(1, episodes + 1):
            summary = run_episode(
                bundle,
                env,
                config.mode,
                streams,
                None,
                config.hp_central,
                config.hp_local,
                message_length=config.message_length,
                stochastic=config.eval_stochastic,
                recorder=recorder,
                episode=episode,
            )
            rewards.append(summary.mean_reward_per_agent)
            collisions.append(summary.collisions)

    return EvalReport(
        episodes=episodes,
        mean_reward_per_agent=float(np.mean(rewards)),
        mean_collisions=float(np.mean(collisions)),
    )


def train(
    config: ExperimentConfig,
    point: str | None = None,
    trajectory_path: Path | None = None,
) -> LearningCurve:
    """Run ``config.total_episodes`` episodes of simultaneous central and local learning.

    Args:
        config: Experiment configuration
        point: Sweep point label stored in the manifest
        trajectory_path: Dump evaluation trajectories here (needs eval_episodes > 0)

    Returns:
        LearningCurve with one row per episode

    Raises:
        FloatingPointError: If a network or loss becomes non-finite (after
            ``checkpoint_abort.npz`` and a partial metrics file are written)
    """
    config.validate()
    run_dir = config.run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, run_dir / "config.cfg")

    env = make_env(config)
    streams = RngStreams.from_seed(config.seed, TRAIN_PURPOSE)
    bundle = build_policy_bundle(
        config.mode, env, config.message_length, streams, hidden_size=config.hidden_size
    )
    buffers = make_buffers(config)

    manifest: dict[str, Any] = {
        "run_name": config.run_name,
        "point": point or config.cell_name,
        "seed": config.seed,
        "fingerprint": config.fingerprint(),
        "version": version_string(),
        "episodes": config.total_episodes,
    }
    curve = LearningCurve(run_dir=run_dir)
    last_local: UpdateStats | None = None
    started = time.perf_counter()
    print(f"🚀 Training {config.run_name} for {config.total_episodes:,} episodes")

    for episode in range(1, config.total_episodes + 1):
        episode_start = time.perf_counter()
        try:
            summary = run_episode(
                bundle,
                env,
                config.mode,
                streams,
                buffers,
                config.hp_central,
                config.hp_local,
                message_length=config.message_length,
                episode=episode,
            )
            if not bundle.is_finite():
                raise FloatingPointError(f"Non-finite network parameters after episode {episode}")
        except FloatingPointError as e:
            save_checkpoint(run_dir / "checkpoint_abort.npz", bundle.state_dict())
            write_metrics(curve.rows, run_dir / "metrics.csv")
            manifest.update(
                status="aborted",
                error=str(e),
                aborted_at_episode=episode,
                wall_time_s=time.perf_counter() - started,
            )
            write_manifest(run_dir, manifest)
            print(f"❌ {config.run_name} aborted at episode {episode}: {e}")
            raise

        wall_ms = None
        if config.record_wall_time:
            wall_ms = int(round((time.perf_counter() - episode_start) * 1000))
        curve.rows.append(_metrics_row(episode, summary, wall_ms))

        if config.checkpoint_every > 0 and episode % config.checkpoint_every == 0:
            save_checkpoint(run_dir / f"checkpoint_ep{episode}.npz", bundle.state_dict())
        if summary.local_stats is not None:
            last_local = summary.local_stats
        if config.log_every > 0 and episode % config.log_every == 0:
            recent = final_score(curve.rewards, config.log_every)
            drift = ""
            if last_local is not None:
                drift = (
                    f", local kl {last_local.approx_kl:.4f}, "
                    f"clipped {last_local.clip_fraction:.1%}"
                )
            print(
                f"📊 {config.run_name} episode {episode:,}/{config.total_episodes:,}: "
                f"mean reward per agent {recent:.2f}{drift}"
            )

    write_metrics(curve.rows, run_dir / "metrics.csv")
    save_checkpoint(run_dir / "checkpoint_final.npz", bundle.state_dict())
    curve.final_score = final_score(curve.rewards, config.final_window)

    if config.eval_episodes > 0:
        report = evaluate_policy(bundle, config, config.eval_episodes, trajectory_path)
        curve.eval_score = report["mean_reward_per_agent"]
    elif trajectory_path is not None:
        print("⚠️  Trajectory dump skipped: eval_episodes is 0")

    manifest.update(
        status="ok",
        wall_time_s=time.perf_counter() - started,
        final_score=_json_number(curve.final_score),
        eval_score=_json_number(curve.eval_score),
        last_local_update=(
            {
                "approx_kl": _json_number(last_local.approx_kl),
                "clip_fraction": _json_number(last_local.clip_fraction),
            }
            if last_local is not None
            else None
        ),
    )
    write_manifest(run_dir, manifest)
    print(f"✅ {config.run_name} finished: final score {curve.final_score:.2f}")
    return curve
