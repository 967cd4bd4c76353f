"""Learning-curve smoothing and multi-seed aggregation of training runs."""

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import TracebackType
from typing import Any

import numpy as np
import pandas as pd

from python.experiments.config import load_config
from python.storage.duckdb_manager import DuckDBManager
from python.storage.metrics_csv import metrics_frame, read_metrics

SUMMARY_COLUMNS = ["point", "fingerprint", "seeds", "mean", "stderr", "scores", "failed_seeds"]


def rolling_mean(series: Sequence[float] | np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average with a ramp-up at the start.

    ``y[t]`` is the mean of the last ``min(t + 1, window)`` values.

    Example:
        >>> rolling_mean([1, 2, 3, 4], 2)
        array([1. , 1.5, 2.5, 3.5])

    Raises:
        ValueError: If window is smaller than 1
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=np.float64)
    if values.size == 0:
        return values
    smoothed: np.ndarray = (
        pd.Series(values).rolling(window=window, min_periods=1).mean().to_numpy()
    )
    return smoothed


def final_score(series: Sequence[float] | np.ndarray, window: int) -> float:
    """Mean of the last ``window`` values (NaN for an empty curve)."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=np.float64)
    if values.size == 0:
        return math.nan
    return float(values[-window:].mean())


def standard_error(scores: Sequence[float]) -> float:
    """Sample standard deviation over sqrt(n); NaN with fewer than two scores."""
    values = np.asarray(scores, dtype=np.float64)
    if values.size < 2:
        return math.nan
    return float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass
class AggregateResult:
    """Final performance of one sweep point across seeds."""

    point: str
    scores: dict[int, float]
    mean: float
    stderr: float
    fingerprint: str | None = None
    failed_seeds: list[int] = field(default_factory=list)

    @property
    def n_seeds(self) -> int:
        return len(self.scores)

    @property
    def failed(self) -> bool:
        return bool(self.failed_seeds)

    def to_row(self) -> dict[str, Any]:
        return {
            "point": self.point,
            "fingerprint": self.fingerprint,
            "seeds": self.n_seeds,
            "mean": self.mean,
            "stderr": self.stderr,
            "scores": ";".join(f"{seed}:{score!r}" for seed, score in sorted(self.scores.items())),
            "failed_seeds": ";".join(str(s) for s in sorted(self.failed_seeds)),
        }


def aggregate_scores(
    point: str,
    scores: dict[int, float],
    fingerprint: str | None = None,
    failed_seeds: list[int] | None = None,
) -> AggregateResult:
    """Build an AggregateResult from per-seed final scores.

    Example:
        >>> aggregate_scores("m=4", {1: -60.0, 2: -62.0}).mean
        -61.0
    """
    ordered = [scores[seed] for seed in sorted(scores)]
    mean = float(np.mean(ordered)) if ordered else math.nan
    return AggregateResult(
        point=point,
        scores=dict(sorted(scores.items())),
        mean=mean,
        stderr=standard_error(ordered),
        fingerprint=fingerprint,
        failed_seeds=sorted(failed_seeds or []),
    )


def summary_frame(results: list[AggregateResult]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in results], columns=SUMMARY_COLUMNS)


def read_manifest(run_dir: Path) -> dict[str, Any]:
    path = run_dir / "manifest.json"
    if not path.exists():
        return {}
    with open(path) as f:
        manifest: dict[str, Any] = json.load(f)
    return manifest


def discover_runs(root: Path) -> list[Path]:
    """Every directory under ``root`` holding a run config, sorted by path."""
    if not root.exists():
        raise FileNotFoundError(f"Run directory not found: {root}")
    return sorted(p.parent for p in root.rglob("config.cfg"))


class ExperimentAggregator:
    """Collects run directories into a DuckDB store and summarizes them per sweep point."""

    def __init__(self, db_path: Path | None = None):
        """Initialize the aggregator.

        Args:
            db_path: DuckDB database file; None keeps the store in memory
        """
        self.db_path = db_path
        self.db_manager: DuckDBManager | None = None

    def __enter__(self) -> "ExperimentAggregator":
        """Context manager entry."""
        self.db_manager = DuckDBManager(db_path=self.db_path)
        self.db_manager.__enter__()
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        """Context manager exit."""
        if self.db_manager:
            self.db_manager.__exit__(exc_type, exc_val, exc_tb)

    def _db(self) -> DuckDBManager:
        if self.db_manager is None:
            raise RuntimeError("ExperimentAggregator must be used as a context manager")
        return self.db_manager

    def ingest_run(self, run_dir: Path, point: str | None = None) -> str:
        """Load one run directory (config, metrics and manifest).

        Runs whose manifest status is not ``ok`` are registered as failed; their
        metrics are ignored.

        Args:
            run_dir: Directory written by ``train``
            point: Sweep point label (default: manifest ``point`` or the config cell name)

        Returns:
            The run id (directory path as string)
        """
        db = self._db()
        config = load_config(run_dir / "config.cfg")
        manifest = read_manifest(run_dir)
        label = point or manifest.get("point") or config.cell_name
        status = manifest.get("status", "missing")
        run_id = str(run_dir)

        if status != "ok":
            error = manifest.get("error", "run did not finish")
            db.register_run(run_id, label, config.seed, config.fingerprint(), "failed", error)
            return run_id

        rows = read_metrics(run_dir / "metrics.csv")
        db.register_run(run_id, label, config.seed, config.fingerprint())
        db.load_metrics(run_id, metrics_frame(rows))
        return run_id

    def register_failure(self, point: str, seed: int, error: str) -> None:
        self._db().register_run(f"{point}/seed={seed}", point, seed, None, "failed", error)

    def summarize(self, window: int, order: list[str] | None = None) -> list[AggregateResult]:
        """One AggregateResult per point, in ``order`` when given, else sorted by label."""
        db = self._db()
        scores = db.final_scores(window)
        failures = db.failed_runs()

        points = list(dict.fromkeys([*scores["point"], *failures["point"]]))
        if order is not None:
            points = [p for p in order if p in points] + [p for p in points if p not in order]
        else:
            points.sort()

        results = []
        for point in points:
            cell = scores[scores["point"] == point]
            fingerprints = [f for f in cell["fingerprint"].unique() if f is not None]
            if len(fingerprints) > 1:
                print(f"⚠️  Point {point} mixes {len(fingerprints)} configurations")
            failed = failures[failures["point"] == point]["seed"].astype(int).tolist()
            per_seed = {
                int(s): float(v) for s, v in zip(cell["seed"], cell["final_score"], strict=True)
            }
            results.append(
                aggregate_scores(
                    point,
                    per_seed,
                    fingerprint=fingerprints[0] if fingerprints else None,
                    failed_seeds=failed,
                )
            )
        return results

    def export_summary(self, results: list[AggregateResult], output_dir: Path) -> pd.DataFrame:
        """Write summary.csv and summary.json to ``output_dir``."""
        db = self._db()
        df = summary_frame(results)
        output_dir.mkdir(parents=True, exist_ok=True)
        df.to_csv(output_dir / "summary.csv", index=False, float_format="%.17g")

        db.conn.execute(
            """
            CREATE OR REPLACE TABLE summary (
                point VARCHAR, fingerprint VARCHAR, seeds INTEGER, mean DOUBLE,
                stderr DOUBLE, scores VARCHAR, failed_seeds VARCHAR
            )
        """
        )
        if not df.empty:
            db.append_data(df, "summary")
        db.export_to_json(output_dir / "summary.json", table_name="summary")
        return df

    def run_full_aggregation(
        self, root: Path, window: int, output_dir: Path | None = None
    ) -> list[AggregateResult]:
        """Ingest every run under ``root``, summarize, and export next to the runs."""
        run_dirs = discover_runs(root)
        if not run_dirs:
            print(f"⚠️  No runs found under {root}")
        for run_dir in run_dirs:
            try:
                self.ingest_run(run_dir)
            except (ValueError, FileNotFoundError) as e:
                print(f"❌ Skipping {run_dir}: {e}")
        results = self.summarize(window)
        self.export_summary(results, output_dir or root)
        print(f"📊 Aggregated {len(run_dirs)} runs into {len(results)} rows")
        return results
