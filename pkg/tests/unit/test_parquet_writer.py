"""Tests for Parquet curve storage."""

from pathlib import Path

import pandas as pd
import pytest

from python.storage.parquet_writer import ParquetWriter, read_curves


def curve_rows(points: list[str], seeds: list[int], episodes: int) -> list[dict[str, object]]:
    return [
        {
            "point": point,
            "seed": seed,
            "episode": episode,
            "mean_reward_per_agent": -50.0 + episode,
            "collisions": 1,
        }
        for point in points
        for seed in seeds
        for episode in range(1, episodes + 1)
    ]


class TestParquetWriter:
    """Test suite for ParquetWriter class."""

    def test_save_unpartitioned(self, tmp_path: Path) -> None:
        """Test saving curves into a single file."""
        writer = ParquetWriter(base_path=tmp_path)
        writer.save(curve_rows(["4"], [1], 3))

        df = pd.read_parquet(tmp_path / "curves.parquet")
        assert len(df) == 3
        assert df["mean_reward_per_agent"].tolist() == [-49.0, -48.0, -47.0]

    def test_save_partitioned_by_point(self, tmp_path: Path) -> None:
        """Test one directory per sweep point."""
        writer = ParquetWriter(base_path=tmp_path)
        writer.save(curve_rows(["2", "4", "8"], [1, 2], 5), partition_cols=["point"])

        folders = sorted(p.name for p in tmp_path.glob("point=*"))
        assert folders == ["point=2", "point=4", "point=8"]
        part = pd.read_parquet(tmp_path / "point=4" / "curves.parquet")
        assert "point" not in part.columns
        assert len(part) == 10

    def test_read_curves_restores_partition_column(self, tmp_path: Path) -> None:
        """Test that partitions load back into one long frame."""
        ParquetWriter(tmp_path).save(curve_rows(["2", "4"], [1], 2), partition_cols=["point"])
        df = read_curves(tmp_path)
        assert len(df) == 4
        assert sorted(df["point"].unique()) == ["2", "4"]

    def test_rerun_overwrites_partition(self, tmp_path: Path) -> None:
        """Test that saving a point again replaces its file."""
        writer = ParquetWriter(tmp_path)
        writer.save(curve_rows(["4"], [1, 2], 5), partition_cols=["point"])
        writer.save(curve_rows(["4"], [1], 2), partition_cols=["point"])
        assert len(read_curves(tmp_path)) == 2

    def test_save_frame(self, tmp_path: Path) -> None:
        """Test the DataFrame entry point."""
        ParquetWriter(tmp_path).save_frame(pd.DataFrame(curve_rows(["hammer"], [3], 4)))
        assert read_curves(tmp_path)["seed"].tolist() == [3, 3, 3, 3]

    def test_validate_schema(self, tmp_path: Path) -> None:
        """Test that a missing column is rejected."""
        rows = curve_rows(["4"], [1], 1)
        del rows[0]["collisions"]
        with pytest.raises(ValueError, match="Missing required column: collisions"):
            ParquetWriter(tmp_path).save(rows)

    def test_non_integer_episode(self, tmp_path: Path) -> None:
        """Test the episode dtype check."""
        rows = curve_rows(["4"], [1], 1)
        rows[0]["episode"] = 1.5
        with pytest.raises(TypeError, match="episode"):
            ParquetWriter(tmp_path).save(rows)

    def test_empty_data(self, tmp_path: Path) -> None:
        """Test that empty input is an error."""
        with pytest.raises(ValueError, match="Cannot save empty data"):
            ParquetWriter(tmp_path).save([])

    def test_read_missing_directory(self, tmp_path: Path) -> None:
        """Test that reading a missing directory raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            read_curves(tmp_path / "curves")
