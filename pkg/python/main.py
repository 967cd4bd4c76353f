"""HAMMER experiments - Main CLI entrypoint."""

from pathlib import Path
from typing import Any

import click

from python.agents.hammer import RunMode
from python.experiments.config import (
    ENV_KINDS,
    ExperimentConfig,
    load_config,
    parse_config,
    serialize_config,
)

SWEEP_AXIS_CHOICES = ["message-length", "message_length", "mode", "n-agents", "n_agents"]


def resolve_config(
    config_path: str | None, settings: tuple[str, ...], **flags: Any
) -> ExperimentConfig:
    """Config file (or defaults), then ``--set key=value`` entries, then explicit flags."""
    config = load_config(Path(config_path)) if config_path else ExperimentConfig()
    if settings:
        extra = "\n".join(setting.replace("=", " = ", 1) for setting in settings)
        config = parse_config(serialize_config(config) + extra + "\n")
    overrides = {key: value for key, value in flags.items() if value is not None}
    return config.with_overrides(**overrides) if overrides else config


def common_options(func: Any) -> Any:
    """Options shared by ``train`` and ``sweep``."""
    options = [
        click.option(
            "--config", "-c", "config_path", type=click.Path(exists=True), help="Config file"
        ),
        click.option("--mode", type=click.Choice([m.value for m in RunMode]), help="Run mode"),
        click.option("--env", "env_kind", type=click.Choice(list(ENV_KINDS)), help="Environment"),
        click.option("--n-agents", type=int, help="Number of agents"),
        click.option("--message-length", type=int, help="Message length (default: 4, 8 if n>=5)"),
        click.option("--episodes", type=int, help="Total training episodes"),
        click.option("--output-dir", "-o", type=click.Path(), help="Output root directory"),
        click.option(
            "--set",
            "settings",
            multiple=True,
            help="Extra config entry, e.g. --set hp_central.lr=0.001 (repeatable)",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
def cli() -> None:
    """HAMMER - central message agent over independent PPO learners."""
    pass


@cli.command()
@common_options
@click.option("--seed", type=int, help="Master seed")
@click.option("--eval-episodes", type=int, help="Evaluation episodes after training")
@click.option("--dump-trajectory", is_flag=True, help="Write evaluation trajectories (NDJSON)")
def train(
    config_path: str | None,
    mode: str | None,
    env_kind: str | None,
    n_agents: int | None,
    message_length: int | None,
    episodes: int | None,
    output_dir: str | None,
    settings: tuple[str, ...],
    seed: int | None,
    eval_episodes: int | None,
    dump_trajectory: bool,
) -> None:
    """Train one run from a config file plus flag overrides."""
    from python.agents.trainer import train as train_run

    try:
        config = resolve_config(
            config_path,
            settings,
            mode=mode,
            env=env_kind,
            n_agents=n_agents,
            message_length=message_length,
            total_episodes=episodes,
            output_dir=output_dir,
            seed=seed,
            eval_episodes=eval_episodes,
        )
        trajectory = config.run_dir / "trajectory.ndjson" if dump_trajectory else None
        curve = train_run(config, trajectory_path=trajectory)

        click.echo(f"\n✅ Run written to {config.run_dir}/")
        click.echo("  • config.cfg")
        click.echo("  • metrics.csv")
        click.echo("  • checkpoint_final.npz")
        click.echo("  • manifest.json")
        click.echo(
            f"📊 Final score (last {config.final_window} episodes): {curve.final_score:.3f}"
        )
        if curve.eval_score is not None:
            click.echo(f"📊 Evaluation score: {curve.eval_score:.3f}")

    except Exception as e:
        click.echo(f"❌ Error during training: {e}", err=True)
        raise click.Abort() from e


@cli.command()
@common_options
@click.option(
    "--axis", required=True, type=click.Choice(SWEEP_AXIS_CHOICES), help="Swept setting"
)
@click.option("--values", required=True, help="Comma-separated points, e.g. 2,4,6,8")
@click.option("--seeds", default="3", show_default=True, help="Seed count or comma list")
@click.option("--workers", "-w", default=1, show_default=True, type=int, help="Parallel runs")
@click.option("--window", type=int, help="Final-score window (default: config final_window)")
def sweep(
    config_path: str | None,
    mode: str | None,
    env_kind: str | None,
    n_agents: int | None,
    message_length: int | None,
    episodes: int | None,
    output_dir: str | None,
    settings: tuple[str, ...],
    axis: str,
    values: str,
    seeds: str,
    workers: int,
    window: int | None,
) -> None:
    """Run an ablation sweep and write summary.csv / summary.json."""
    from python.experiments.sweep import (
        parse_axis_values,
        parse_seeds,
        run_sweep,
        sweep_dir,
    )

    try:
        base = resolve_config(
            config_path,
            settings,
            mode=mode,
            env=env_kind,
            n_agents=n_agents,
            message_length=message_length,
            total_episodes=episodes,
            output_dir=output_dir,
        )
        points = parse_axis_values(axis, values)
        seed_list = parse_seeds(seeds)
        results = run_sweep(base, axis, points, seed_list, workers=workers, window=window)

        click.echo(f"\n{'point':>16} {'mean':>12} {'stderr':>10} seeds")
        for result in results:
            flag = f"  ⚠️ failed: {result.failed_seeds}" if result.failed else ""
            click.echo(
                f"{result.point:>16} {result.mean:>12.3f} {result.stderr:>10.3f} "
                f"{result.n_seeds}{flag}"
            )
        click.echo(f"\n✅ Summary written to {sweep_dir(base, axis)}/")

    except Exception as e:
        click.echo(f"❌ Error during sweep: {e}", err=True)
        raise click.Abort() from e


@cli.command()
@click.argument("runs_root", type=click.Path(exists=True, file_okay=False))
@click.option("--window", default=500, show_default=True, type=int, help="Final-score window")
@click.option(
    "--output-dir", "-o", type=click.Path(), help="Where to write summaries (default: RUNS_ROOT)"
)
@click.option(
    "--db-path", "-d", type=click.Path(), help="Persist the DuckDB results store to this file"
)
def aggregate(runs_root: str, window: int, output_dir: str | None, db_path: str | None) -> None:
    """Recompute the summary table from the run directories under RUNS_ROOT."""
    from python.processors.aggregator import ExperimentAggregator

    click.echo(f"📊 Aggregating runs under {runs_root}...")
    root = Path(runs_root)
    destination = Path(output_dir) if output_dir else root

    try:
        with ExperimentAggregator(db_path=Path(db_path) if db_path else None) as aggregator:
            results = aggregator.run_full_aggregation(root, window, destination)

        for result in results:
            click.echo(f"  • {result.point}: {result.mean:.3f} ± {result.stderr:.3f}")
        click.echo(f"✅ Summary exported to {destination}/")
        click.echo("  • summary.csv")
        click.echo("  • summary.json")

    except Exception as e:
        click.echo(f"❌ Error during aggregation: {e}", err=True)
        raise click.Abort() from e


@cli.command()
@click.option("--instances", default=100, show_default=True, type=int, help="Random networks")
@click.option("--seed", default=0, show_default=True, type=int, help="Network sampling seed")
@click.option("--tolerance", default=1e-4, show_default=True, type=float, help="Max rel. error")
def gradcheck(instances: int, seed: int, tolerance: float) -> None:
    """Compare analytic and finite-difference gradients on random networks."""
    from python.models.gradcheck import run_gradcheck_suite

    click.echo(f"🧮 Checking gradients on {instances} random networks...")
    report = run_gradcheck_suite(instances=instances, seed=seed)
    error = report["max_relative_error"]
    if error < tolerance:
        click.echo(f"✅ Max relative error {error:.3e} < {tolerance:g}")
        return
    click.echo(
        f"❌ Max relative error {error:.3e} >= {tolerance:g} "
        f"(instance {report['worst_instance']})",
        err=True,
    )
    raise click.Abort()


@cli.command()
@click.argument("csv_paths", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", default="curves.svg", show_default=True, type=click.Path())
@click.option("--window", default=500, show_default=True, type=int, help="Rolling-mean window")
@click.option("--label", "labels", multiple=True, help="Legend label per CSV (repeatable)")
@click.option("--title", help="Chart title")
def plot(
    csv_paths: tuple[str, ...], output: str, window: int, labels: tuple[str, ...], title: str | None
) -> None:
    """Plot smoothed learning curves of one or more metrics CSVs as SVG."""
    from python.experiments.plotting import plot_curves

    try:
        path = plot_curves(
            [Path(p) for p in csv_paths],
            Path(output),
            window=window,
            labels=list(labels) or None,
            title=title,
        )
        click.echo(f"✅ Plot written to {path}")

    except Exception as e:
        click.echo(f"❌ Error while plotting: {e}", err=True)
        raise click.Abort() from e


if __name__ == "__main__":
    cli()
