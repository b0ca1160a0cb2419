"""Deterministic random streams keyed by (master seed, trial, stage)."""

from __future__ import annotations

import zlib

import numpy as np


def stage_code(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def stream(master_seed: int, trial: int = 0, stage: str = "") -> np.random.Generator:
    """Return an independent generator for one (seed, trial, stage) tuple.

    The same tuple always yields the same stream, regardless of which
    process or in what order the streams are requested.
    """
    seq = np.random.SeedSequence(
        entropy=int(master_seed) & ((1 << 64) - 1),
        spawn_key=(int(trial), stage_code(stage)),
    )
    return np.random.Generator(np.random.PCG64(seq))
