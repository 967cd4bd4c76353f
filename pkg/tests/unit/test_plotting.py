"""Tests for learning-curve plots."""

from pathlib import Path

import pytest

from python.experiments.plotting import plot_curves
from python.storage.metrics_csv import MetricsRow, write_metrics


def write_run(root: Path, name: str, episodes: int = 30) -> Path:
    path = root / name / "metrics.csv"
    write_metrics([MetricsRow(i, -60.0 + i, i % 2) for i in range(1, episodes + 1)], path)
    return path


def test_writes_svg_with_default_labels(tmp_path: Path) -> None:
    """Test SVG output for two runs in one chart."""
    paths = [write_run(tmp_path, "hammer"), write_run(tmp_path, "independent")]
    output = plot_curves(paths, tmp_path / "plots" / "curves.svg", window=10, title="Ablation")

    svg = output.read_text()
    assert "<svg" in svg


def test_header_only_csv_still_plots(tmp_path: Path) -> None:
    """Test that a run with no episodes yields an empty line."""
    path = write_run(tmp_path, "empty", episodes=0)
    assert plot_curves([path], tmp_path / "empty.svg").exists()


def test_no_csvs_rejected(tmp_path: Path) -> None:
    """Test that at least one curve is required."""
    with pytest.raises(ValueError, match="At least one"):
        plot_curves([], tmp_path / "x.svg")


def test_label_count_mismatch(tmp_path: Path) -> None:
    """Test that labels must match the curves one to one."""
    path = write_run(tmp_path, "a")
    with pytest.raises(ValueError, match="2 labels for 1 curves"):
        plot_curves([path], tmp_path / "x.svg", labels=["a", "b"])
