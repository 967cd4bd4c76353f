"""Ablation sweeps: one training run per (point, seed), aggregated after all runs join.

Layout under ``<output_dir>/sweep_<axis>/``:

    <point>/<run_name>/...   one run directory per (point, seed)
    summary.csv              one row per point
    summary.json             same rows, exported through DuckDB
    curves/point=<p>/        long-format learning curves (Parquet)
"""

import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypedDict

import pandas as pd

from python.agents.hammer import RunMode
from python.agents.trainer import train, write_manifest
from python.experiments.config import ExperimentConfig
from python.processors.aggregator import AggregateResult, ExperimentAggregator, read_manifest
from python.storage.metrics_csv import metrics_frame, read_metrics
from python.storage.parquet_writer import ParquetWriter

SWEEP_AXES = ("message_length", "mode", "n_agents")


class RunOutcome(TypedDict):
    """What one sweep worker reports back."""

    point: str
    seed: int
    run_dir: str
    status: str
    error: str | None


@dataclass(frozen=True)
class SweepTask:
    config: ExperimentConfig
    point: str


def normalize_axis(axis: str) -> str:
    """Accept ``message-length`` as well as ``message_length``."""
    name = axis.replace("-", "_")
    if name not in SWEEP_AXES:
        raise ValueError(f"Unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    return name


def parse_axis_values(axis: str, raw: str) -> list[Any]:
    """Parse a comma-separated value list for ``axis``.

    Example:
        >>> parse_axis_values("message_length", "2,4,6,8")
        [2, 4, 6, 8]
    """
    name = normalize_axis(axis)
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if not items:
        raise ValueError("Sweep needs at least one value")
    if name == "mode":
        return [RunMode(item) for item in items]
    try:
        values = [int(item) for item in items]
    except ValueError as e:
        raise ValueError(f"{name} values must be integers, got {raw!r}") from e
    if any(v <= 0 for v in values):
        raise ValueError(f"{name} values must be positive")
    return values


def parse_seeds(raw: str) -> list[int]:
    """``"3"`` means seeds 1..3; ``"1,5,9"`` lists seeds explicitly."""
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if len(items) == 1:
        count = int(items[0])
        if count <= 0:
            raise ValueError("Seed count must be positive")
        return list(range(1, count + 1))
    seeds = [int(item) for item in items]
    if len(set(seeds)) != len(seeds):
        raise ValueError("Seeds must be distinct")
    return seeds


def sweep_dir(base: ExperimentConfig, axis: str) -> Path:
    return Path(base.output_dir) / f"sweep_{normalize_axis(axis)}"


def build_tasks(
    base: ExperimentConfig, axis: str, values: list[Any], seeds: list[int]
) -> list[SweepTask]:
    """Every (point, seed) combination, points outermost."""
    name = normalize_axis(axis)
    root = sweep_dir(base, name)
    tasks = []
    for value in values:
        point = str(value)
        for seed in seeds:
            config = base.with_overrides(
                **{name: value, "seed": seed, "output_dir": str(root / point)}
            )
            tasks.append(SweepTask(config=config, point=point))
    return tasks


def run_task(task: SweepTask) -> RunOutcome:
    """Train one run; any exception marks only this run as failed."""
    config = task.config
    try:
        train(config, point=task.point)
        return RunOutcome(
            point=task.point,
            seed=config.seed,
            run_dir=str(config.run_dir),
            status="ok",
            error=None,
        )
    except Exception as e:
        error = f"{type(e).__name__}: {e}"
        if read_manifest(config.run_dir).get("status") != "aborted":
            write_manifest(
                config.run_dir,
                {
                    "run_name": config.run_name,
                    "point": task.point,
                    "seed": config.seed,
                    "status": "failed",
                    "error": error,
                    "traceback": traceback.format_exc(),
                },
            )
        return RunOutcome(
            point=task.point,
            seed=config.seed,
            run_dir=str(config.run_dir),
            status="failed",
            error=error,
        )


def execute_tasks(tasks: list[SweepTask], workers: int = 1) -> list[RunOutcome]:
    """Run tasks inline (workers <= 1) or in a process pool; outcomes keep task order."""
    outcomes: list[RunOutcome | None] = [None] * len(tasks)

    def report(outcome: RunOutcome) -> None:
        if outcome["status"] == "ok":
            print(f"✅ point {outcome['point']} seed {outcome['seed']} done")
        else:
            print(f"❌ point {outcome['point']} seed {outcome['seed']} failed: {outcome['error']}")

    if workers <= 1:
        for index, task in enumerate(tasks):
            outcome = run_task(task)
            outcomes[index] = outcome
            report(outcome)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_task, task): index for index, task in enumerate(tasks)}
            for future in as_completed(futures):
                outcome = future.result()
                outcomes[futures[future]] = outcome
                report(outcome)

    return [outcome for outcome in outcomes if outcome is not None]


def curves_frame(outcomes: list[RunOutcome]) -> pd.DataFrame:
    """Long-format curves (point, seed, episode, reward, collisions) of the successful runs."""
    frames = []
    for outcome in outcomes:
        if outcome["status"] != "ok":
            continue
        df = metrics_frame(read_metrics(Path(outcome["run_dir"]) / "metrics.csv"))
        if df.empty:
            continue
        df = df[["episode", "mean_reward_per_agent", "collisions"]].copy()
        df.insert(0, "seed", outcome["seed"])
        df.insert(0, "point", outcome["point"])
        frames.append(df)
    if not frames:
        return pd.DataFrame()
    curves = pd.concat(frames, ignore_index=True)
    return curves.astype({"seed": "int64", "episode": "int64", "collisions": "int64"})


def run_sweep(
    base: ExperimentConfig,
    axis: str,
    values: list[Any],
    seeds: list[int],
    workers: int = 1,
    window: int | None = None,
) -> list[AggregateResult]:
    """Train every (point, seed) combination and aggregate each point across seeds.

    Args:
        base: Configuration shared by all runs
        axis: ``message_length``, ``mode`` or ``n_agents`` (hyphens accepted)
        values: Sweep points along ``axis``
        seeds: Seeds run at every point
        workers: Parallel training processes
        window: Final-score window (default: ``base.final_window``)

    Returns:
        One AggregateResult per point, in ``values`` order; failed runs are
        listed in ``failed_seeds`` and left out of the statistics
    """
    name = normalize_axis(axis)
    if not values or not seeds:
        raise ValueError("Sweep needs at least one value and one seed")
    tasks = build_tasks(base, name, values, seeds)
    root = sweep_dir(base, name)
    print(f"🚀 Sweep over {name}: {len(values)} points x {len(seeds)} seeds = {len(tasks)} runs")

    outcomes = execute_tasks(tasks, workers)

    # Aggregation starts only after every run has finished
    with ExperimentAggregator() as aggregator:
        for outcome in outcomes:
            run_dir = Path(outcome["run_dir"])
            if (run_dir / "config.cfg").exists():
                aggregator.ingest_run(run_dir, outcome["point"])
            else:
                aggregator.register_failure(
                    outcome["point"], outcome["seed"], outcome["error"] or "unknown"
                )
        results = aggregator.summarize(window or base.final_window, [str(v) for v in values])
        aggregator.export_summary(results, root)

    curves = curves_frame(outcomes)
    if not curves.empty:
        ParquetWriter(root / "curves").save_frame(curves, partition_cols=["point"])

    failed = sum(1 for o in outcomes if o["status"] != "ok")
    if failed:
        print(f"⚠️  {failed} of {len(outcomes)} runs failed; see failed_seeds in summary.csv")
    print(f"📊 Sweep summary written to {root}")
    return results
