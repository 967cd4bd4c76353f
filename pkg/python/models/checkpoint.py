"""Checkpoint container for network parameters and optimizer state.

Layout: an uncompressed NumPy ``.npz`` archive. Every entry maps a slash-separated
name to an array stored with its shape and dtype, row-major:

    <owner>/<part>/W<i>, <owner>/<part>/b<i>   float64 layer parameters
    <owner>/log_std                             float64 Gaussian log std (if any)
    <owner>/adam/m<j>, <owner>/adam/v<j>        float64 Adam moments, parameter order
    <owner>/adam/step_count                     int64 scalar

``owner`` is ``central`` or ``local``; ``part`` is ``actor`` or ``critic``.
Loading returns the exact bytes that were saved.
"""

from pathlib import Path

import numpy as np

from python.models.mlp import Mlp
from python.models.optim import AdamState


def mlp_state(net: Mlp, prefix: str) -> dict[str, np.ndarray]:
    return {
        f"{prefix}/{name}": param
        for name, param in zip(net.parameter_names(), net.parameters(), strict=True)
    }


def adam_state(state: AdamState, prefix: str) -> dict[str, np.ndarray]:
    entries: dict[str, np.ndarray] = {}
    for j, (m, v) in enumerate(zip(state.first_moment, state.second_moment, strict=True)):
        entries[f"{prefix}/m{j}"] = m
        entries[f"{prefix}/v{j}"] = v
    entries[f"{prefix}/step_count"] = np.array(state.step_count, dtype=np.int64)
    return entries


def restore_mlp(net: Mlp, arrays: dict[str, np.ndarray], prefix: str) -> None:
    """Copy stored parameters into ``net`` in place, checking shapes."""
    for name, param in zip(net.parameter_names(), net.parameters(), strict=True):
        stored = arrays[f"{prefix}/{name}"]
        if stored.shape != param.shape:
            raise ValueError(
                f"Checkpoint shape {stored.shape} for {prefix}/{name}, expected {param.shape}"
            )
        param[...] = stored


def restore_adam(state: AdamState, arrays: dict[str, np.ndarray], prefix: str) -> None:
    for j, (m, v) in enumerate(zip(state.first_moment, state.second_moment, strict=True)):
        m[...] = arrays[f"{prefix}/m{j}"]
        v[...] = arrays[f"{prefix}/v{j}"]
    state.step_count = int(arrays[f"{prefix}/step_count"])


def save_checkpoint(path: Path, arrays: dict[str, np.ndarray]) -> None:
    """Write named arrays to ``path`` (parent directories are created)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_checkpoint(path: Path) -> dict[str, np.ndarray]:
    """Read every named array from a checkpoint written by ``save_checkpoint``."""
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        return {name: archive[name] for name in archive.files}
