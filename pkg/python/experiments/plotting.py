"""SVG line charts of smoothed learning curves."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from python.processors.aggregator import rolling_mean  # noqa: E402
from python.storage.metrics_csv import read_metrics  # noqa: E402

DEFAULT_WINDOW = 500


def plot_curves(
    csv_paths: list[Path],
    output_path: Path,
    window: int = DEFAULT_WINDOW,
    labels: list[str] | None = None,
    title: str | None = None,
) -> Path:
    """Plot the rolling mean reward per agent of each metrics CSV against episodes.

    Args:
        csv_paths: metrics.csv files, one line each
        output_path: Destination SVG file
        window: Rolling-mean window in episodes
        labels: Legend entries (default: each CSV's parent directory name)
        title: Optional chart title

    Returns:
        The written SVG path

    Raises:
        ValueError: If no CSV is given or labels don't match the CSVs
    """
    if not csv_paths:
        raise ValueError("At least one metrics CSV is required")
    if labels is not None and len(labels) != len(csv_paths):
        raise ValueError(f"Got {len(labels)} labels for {len(csv_paths)} curves")
    names = labels or [path.parent.name or path.stem for path in csv_paths]

    fig, ax = plt.subplots(figsize=(8, 5))
    try:
        for path, name in zip(csv_paths, names, strict=True):
            rows = read_metrics(path)
            episodes = [row.episode for row in rows]
            rewards = rolling_mean([row.mean_reward_per_agent for row in rows], window)
            ax.plot(episodes, rewards, label=name, linewidth=1.2)

        ax.set_xlabel("Episode")
        ax.set_ylabel(f"Mean reward per agent (rolling {window})")
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()

        output_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(output_path, format="svg")
    finally:
        plt.close(fig)
    return output_path
