"""Per-episode metrics CSV.

Schema (fixed column order, header on line 1, one row per episode):

    episode,mean_reward_per_agent,collisions,central_loss,local_loss,entropy,wall_ms

Reals are written with 17 significant digits so reading returns the exact
values written. ``central_loss``, ``local_loss`` and ``entropy`` are blank for
episodes without a PPO update; ``wall_ms`` is blank unless wall time recording
is enabled.
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import pandas as pd

METRICS_COLUMNS = [
    "episode",
    "mean_reward_per_agent",
    "collisions",
    "central_loss",
    "local_loss",
    "entropy",
    "wall_ms",
]
FLOAT_FORMAT = "%.17g"


@dataclass
class MetricsRow:
    """Metrics for one training episode."""

    episode: int
    mean_reward_per_agent: float
    collisions: int
    central_loss: float | None = None
    local_loss: float | None = None
    entropy: float | None = None
    wall_ms: int | None = None


def write_metrics(rows: list[MetricsRow], path: Path) -> None:
    """Write rows to ``path`` (header-only when ``rows`` is empty).

    Raises:
        ValueError: If episodes are not strictly increasing
    """
    episodes = [row.episode for row in rows]
    if any(b <= a for a, b in zip(episodes, episodes[1:], strict=False)):
        raise ValueError("Metrics episodes must be strictly increasing")
    df = pd.DataFrame([asdict(row) for row in rows], columns=METRICS_COLUMNS)
    df = df.astype(
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
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="")


def _parse_int(raw: str, column: str, line_no: int, optional: bool = False) -> int | None:
    if raw == "" and optional:
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ValueError(f"Line {line_no}: invalid integer {raw!r} in column {column}") from e


def _parse_float(raw: str, column: str, line_no: int, optional: bool = False) -> float | None:
    if raw == "" and optional:
        return None
    try:
        value = float(raw)
    except ValueError as e:
        raise ValueError(f"Line {line_no}: invalid number {raw!r} in column {column}") from e
    if not math.isfinite(value):
        raise ValueError(f"Line {line_no}: non-finite value in column {column}")
    return value


def read_metrics(path: Path) -> list[MetricsRow]:
    """Read rows written by ``write_metrics``.

    Raises:
        FileNotFoundError: If the file is missing
        ValueError: On a wrong header or malformed row (message names the line)
    """
    if not path.exists():
        raise FileNotFoundError(f"Metrics file not found: {path}")
    with open(path) as f:
        header = f.readline().strip()
    if header.split(",") != METRICS_COLUMNS:
        raise ValueError(f"Line 1: unexpected header {header!r}")

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise ValueError(f"Malformed metrics file {path}: {e}") from e

    rows: list[MetricsRow] = []
    for offset, record in enumerate(df.to_dict(orient="records")):
        line_no = offset + 2
        episode = _parse_int(record["episode"], "episode", line_no)
        reward = _parse_float(record["mean_reward_per_agent"], "mean_reward_per_agent", line_no)
        collisions = _parse_int(record["collisions"], "collisions", line_no)
        assert episode is not None and reward is not None and collisions is not None
        if rows and episode <= rows[-1].episode:
            raise ValueError(f"Line {line_no}: episode {episode} is not increasing")
        rows.append(
            MetricsRow(
                episode=episode,
                mean_reward_per_agent=reward,
                collisions=collisions,
                central_loss=_parse_float(record["central_loss"], "central_loss", line_no, True),
                local_loss=_parse_float(record["local_loss"], "local_loss", line_no, True),
                entropy=_parse_float(record["entropy"], "entropy", line_no, True),
                wall_ms=_parse_int(record["wall_ms"], "wall_ms", line_no, True),
            )
        )
    return rows


def metrics_frame(rows: list[MetricsRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in rows], columns=METRICS_COLUMNS)
