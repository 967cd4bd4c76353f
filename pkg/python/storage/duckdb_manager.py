"""DuckDB results store for training runs and their metrics."""

from pathlib import Path
from typing import Any

import duckdb
import numpy as np
import pandas as pd


class DuckDBManager:
    """Manages a DuckDB database of experiment runs.

    Provides methods for:
    - Registering runs (sweep point, seed, config fingerprint, status)
    - Loading per-run metrics CSVs into one ``metrics`` table
    - Computing per-run final scores with SQL
    - Exporting query results to JSON
    - Context manager support for automatic connection handling
    """

    def __init__(self, db_path: Path | None = None) -> None:
        """Initialize DuckDB connection.

        Args:
            db_path: Path to the DuckDB database file (created if missing).
                     None opens an in-memory database.
        """
        self.db_path = db_path
        if db_path is None:
            self.conn = duckdb.connect(":memory:")
        else:
            self.db_path.parent.mkdir(parents=True, exist_ok=True)  # type: ignore[union-attr]
            self.conn = duckdb.connect(str(db_path))
        self.create_tables()

    def create_tables(self) -> None:
        """Create ``runs`` and ``metrics`` tables if they don't exist."""
        self.conn.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                run_id VARCHAR PRIMARY KEY,
                point VARCHAR NOT NULL,
                seed INTEGER NOT NULL,
                fingerprint VARCHAR,
                status VARCHAR NOT NULL,
                error VARCHAR
            )
        """
        )
        self.conn.execute(
            """
            CREATE TABLE IF NOT EXISTS metrics (
                run_id VARCHAR NOT NULL,
                episode INTEGER NOT NULL,
                mean_reward_per_agent DOUBLE NOT NULL,
                collisions INTEGER NOT NULL,
                central_loss DOUBLE,
                local_loss DOUBLE,
                entropy DOUBLE,
                wall_ms BIGINT,
                PRIMARY KEY (run_id, episode)
            )
        """
        )

    def append_data(self, df: pd.DataFrame, table_name: str) -> None:
        """Append DataFrame to a table in DuckDB.

        Creates table if it doesn't exist. If table exists, appends data with
        columns matched by name.

        Args:
            df: DataFrame to append
            table_name: Name of the table in DuckDB

        Example:
            >>> manager.append_data(metrics_df, "metrics")
        """
        self.conn.register("temp_df", df)

        result = self.conn.execute(
            "SELECT COUNT(*) FROM information_schema.tables WHERE table_name = ?", [table_name]
        ).fetchone()
        table_exists = result[0] if result else 0

        if table_exists:
            columns = ", ".join(f'"{col}"' for col in df.columns)
            self.conn.execute(
                f"INSERT INTO {table_name} ({columns}) SELECT {columns} FROM temp_df"
            )
        else:
            self.conn.execute(f"CREATE TABLE {table_name} AS SELECT * FROM temp_df")

        self.conn.unregister("temp_df")

    def register_run(
        self,
        run_id: str,
        point: str,
        seed: int,
        fingerprint: str | None,
        status: str = "ok",
        error: str | None = None,
    ) -> None:
        """Insert or replace one row of the ``runs`` table."""
        self.conn.execute(
            """
            INSERT OR REPLACE INTO runs (run_id, point, seed, fingerprint, status, error)
            VALUES (?, ?, ?, ?, ?, ?)
            """,
            [run_id, point, seed, fingerprint, status, error],
        )

    def load_metrics(self, run_id: str, metrics: pd.DataFrame) -> int:
        """Replace the stored metrics of ``run_id`` with ``metrics``.

        Returns:
            Number of rows loaded
        """
        self.conn.execute("DELETE FROM metrics WHERE run_id = ?", [run_id])
        if metrics.empty:
            return 0
        df = metrics.astype(
            {
                "episode": "Int64",
                "collisions": "Int64",
                "wall_ms": "Int64",
                "mean_reward_per_agent": "float64",
                "central_loss": "float64",
                "local_loss": "float64",
                "entropy": "float64",
            }
        )
        df.insert(0, "run_id", run_id)
        self.append_data(df, "metrics")
        return len(df)

    def final_scores(self, window: int) -> pd.DataFrame:
        """Mean reward per agent over the last ``window`` episodes of every successful run.

        Returns:
            DataFrame with columns run_id, point, seed, fingerprint, final_score, episodes
        """
        return self.conn.execute(
            """
            WITH ranked AS (
                SELECT
                    run_id,
                    mean_reward_per_agent,
                    ROW_NUMBER() OVER (PARTITION BY run_id ORDER BY episode DESC) AS back_rank,
                    COUNT(*) OVER (PARTITION BY run_id) AS episodes
                FROM metrics
            )
            SELECT
                r.run_id,
                r.point,
                r.seed,
                r.fingerprint,
                AVG(m.mean_reward_per_agent) AS final_score,
                MAX(m.episodes) AS episodes
            FROM runs r
            JOIN ranked m ON r.run_id = m.run_id
            WHERE r.status = 'ok' AND m.back_rank <= ?
            GROUP BY r.run_id, r.point, r.seed, r.fingerprint
            ORDER BY r.point, r.seed
            """,
            [window],
        ).df()

    def failed_runs(self) -> pd.DataFrame:
        return self.query("SELECT run_id, point, seed, error FROM runs WHERE status <> 'ok'")

    def query(self, sql: str) -> pd.DataFrame:
        """Execute SQL query and return results as DataFrame."""
        result: pd.DataFrame = self.conn.execute(sql).df()
        return result

    def export_to_json(
        self,
        output_path: Path,
        table_name: str | None = None,
        query: str | None = None,
    ) -> None:
        """Export table or query results to JSON file.

        Either table_name or query must be provided, not both.

        Raises:
            ValueError: If both or neither table_name and query are provided
        """
        if (table_name is None and query is None) or (table_name is not None and query is not None):
            raise ValueError("Must provide exactly one of: table_name or query")

        output_path.parent.mkdir(parents=True, exist_ok=True)

        if table_name:
            sql = f"SELECT * FROM {table_name}"
        else:
            assert query is not None
            sql = query

        df = self.query(sql)

        # NaN is not valid JSON
        df = df.replace([np.nan, np.inf, -np.inf], None)

        df.to_json(output_path, orient="records", indent=2)

    def close(self) -> None:
        """Close the DuckDB connection."""
        if self.conn:
            self.conn.close()

    def __enter__(self) -> "DuckDBManager":
        """Context manager entry."""
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        """Context manager exit - closes connection."""
        self.close()
