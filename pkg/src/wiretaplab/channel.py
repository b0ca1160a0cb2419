"""Binary symmetric channels and the wiretap capacity formulas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidProbability
from .infomath import binary_entropy


def _check_probability(p: float, lo: float = 0.0, hi: float = 1.0, name: str = "p") -> float:
    p = float(p)
    if not (lo <= p <= hi):
        raise InvalidProbability(f"{name} = {p} outside [{lo}, {hi}]")
    return p


def apply_bsc(seq: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``p``."""
    p = _check_probability(p)
    seq = np.asarray(seq, dtype=np.uint8)
    flips = (rng.random(seq.shape[0]) < p).astype(np.uint8)
    return seq ^ flips


def cascade(p1: float, p2: float) -> float:
    """Crossover of two BSCs in series."""
    return p1 + p2 - 2.0 * p1 * p2


def capacity(p: float) -> float:
    return 1.0 - binary_entropy(p)


def secrecy_capacity(p_m: float, p_w: float) -> float:
    """C_s = C_m - C_w for a BSC main channel and BSC wiretap channel."""
    _check_probability(p_m, 0.0, 0.5, "p_m")
    _check_probability(p_w, 0.0, 0.5, "p_w")
    return capacity(p_m) - capacity(p_w)


@dataclass(frozen=True)
class ChannelParams:
    p1: float
    p2: float = 0.0

    def __post_init__(self):
        _check_probability(self.p1, 0.0, 0.5, "p1")
        _check_probability(self.p2, 0.0, 0.5, "p2")

    @property
    def p_prime(self) -> float:
        return cascade(self.p1, self.p2)
