"""Parquet store for learning curves, partitioned by sweep point."""

from pathlib import Path
from typing import Any

import pandas as pd

CURVE_COLUMNS = ["point", "seed", "episode", "mean_reward_per_agent", "collisions"]


class ParquetWriter:
    """Writer for saving long-format learning curves to partitioned Parquet files."""

    def __init__(self, base_path: Path | str) -> None:
        """
        Initialize Parquet writer.

        Args:
            base_path: Base directory for Parquet files
        """
        self.base_path = Path(base_path)

    def save(self, data: list[dict[str, Any]], partition_cols: list[str] | None = None) -> None:
        """
        Save curve rows to Parquet files with optional partitioning.

        Args:
            data: One dict per (point, seed, episode)
            partition_cols: Columns to partition by (e.g., ["point"])

        Raises:
            ValueError: If data is empty or a required column is missing
            TypeError: If episode or seed are not integers
        """
        if not data:
            raise ValueError("Cannot save empty data")

        df = pd.DataFrame(data)
        self._validate_schema(df)
        self.base_path.mkdir(parents=True, exist_ok=True)

        if partition_cols:
            self._save_partitioned(df, partition_cols)
        else:
            df.to_parquet(self.base_path / "curves.parquet", index=False)

    def save_frame(self, df: pd.DataFrame, partition_cols: list[str] | None = None) -> None:
        self.save(df.to_dict(orient="records"), partition_cols)

    def _validate_schema(self, df: pd.DataFrame) -> None:
        """
        Validate DataFrame schema.

        Raises:
            ValueError: If a required column is missing
            TypeError: If data types are incorrect
        """
        for col in CURVE_COLUMNS:
            if col not in df.columns:
                raise ValueError(f"Missing required column: {col}")

        if not pd.api.types.is_integer_dtype(df["episode"]):
            raise TypeError("episode must be integer type")

        if not pd.api.types.is_integer_dtype(df["seed"]):
            raise TypeError("seed must be integer type")

    def _save_partitioned(self, df: pd.DataFrame, partition_cols: list[str]) -> None:
        for keys, group in df.groupby(partition_cols):
            if isinstance(keys, tuple):
                partition_parts = [
                    f"{col}={key}" for col, key in zip(partition_cols, keys, strict=True)
                ]
            else:
                partition_parts = [f"{partition_cols[0]}={keys}"]

            partition_path = self.base_path / Path(*partition_parts)
            partition_path.mkdir(parents=True, exist_ok=True)

            # One file per partition; rerunning a sweep overwrites it
            group.drop(columns=partition_cols).to_parquet(
                partition_path / "curves.parquet", index=False
            )


def read_curves(base_path: Path | str) -> pd.DataFrame:
    """Load every partition under ``base_path`` back into one DataFrame."""
    base = Path(base_path)
    if not base.exists():
        raise FileNotFoundError(f"Curve directory not found: {base}")
    frames = []
    for file in sorted(base.rglob("*.parquet")):
        part = pd.read_parquet(file)
        for segment in file.relative_to(base).parent.parts:
            col, _, value = segment.partition("=")
            part[col] = value
        frames.append(part)
    if not frames:
        return pd.DataFrame(columns=CURVE_COLUMNS)
    return pd.concat(frames, ignore_index=True)
