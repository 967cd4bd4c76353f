"""Named random streams derived from one master seed.

Scheme: ``np.random.SeedSequence([seed, purpose]).spawn(4)`` yields four child
sequences assigned, in order, to the ``env``, ``central``, ``local`` and
``messages`` streams. ``purpose`` is 0 for training and 1 for evaluation.
Every stream feeds its own PCG64 generator, so a mode that never touches one
stream (e.g. ``central`` in independent mode) leaves the others unchanged and
all modes see the same environment episodes under the same seed.
"""

from dataclasses import dataclass

import numpy as np

STREAM_NAMES = ("env", "central", "local", "messages")
TRAIN_PURPOSE = 0
EVAL_PURPOSE = 1


@dataclass
class RngStreams:
    """Independent generators for the environment, both policies and random messages."""

    env: np.random.Generator
    central: np.random.Generator
    local: np.random.Generator
    messages: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, purpose: int = TRAIN_PURPOSE) -> "RngStreams":
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        children = np.random.SeedSequence([seed, purpose]).spawn(len(STREAM_NAMES))
        generators = [np.random.Generator(np.random.PCG64(child)) for child in children]
        return cls(**dict(zip(STREAM_NAMES, generators, strict=True)))
