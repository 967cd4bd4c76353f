"""Optional newline-delimited trajectory dump for debugging.

Each line is one JSON object:

    {"t": int, "positions": [[x, y], ...], "actions": [...], "rewards": [...]}

``positions`` are agent positions after the step, ``actions`` are action
indices (discrete) or [fx, fy] pairs (continuous), ``rewards`` are per agent.
Episodes are separated by a line ``{"episode": int, "landmarks": [[x, y], ...]}``.
"""

import json
from pathlib import Path
from types import TracebackType
from typing import Any, TextIO

import numpy as np

from python.envs.navigation import NavWorld, StepResult


class TrajectoryRecorder:
    """Appends trajectory records to a text file."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._handle: TextIO | None = None

    def __enter__(self) -> "TrajectoryRecorder":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(self.path, "a")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        if self._handle:
            self._handle.close()
            self._handle = None

    def start_episode(self, episode: int, world: NavWorld) -> None:
        self._write({"episode": episode, "landmarks": world.landmark_pos.tolist()})

    def record(self, world: NavWorld, actions: Any, result: StepResult) -> None:
        self._write(
            {
                "t": world.t,
                "positions": world.agent_pos.tolist(),
                "actions": np.asarray(actions).tolist(),
                "rewards": [float(r) for r in result.rewards],
            }
        )

    def _write(self, record: dict[str, Any]) -> None:
        if self._handle is None:
            raise RuntimeError("TrajectoryRecorder must be used as a context manager")
        self._handle.write(json.dumps(record) + "\n")


def read_trajectory(path: Path) -> list[dict[str, Any]]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
