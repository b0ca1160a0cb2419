"""Binary entropy and mutual information, closed-form and plug-in."""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def lfsr_marginal_one(k: int) -> float:
    """Fraction of ones in one period of a maximal-length sequence of degree k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 ** (k - 1) / (2.0**k - 1.0)


def closed_form_mi(p_prime: float, k: int) -> float:
    """I(A;Y) = H(Y) - H(p') for an m-sequence bit seen through BSC(p')."""
    m = lfsr_marginal_one(k)
    q = m * (1.0 - p_prime) + (1.0 - m) * p_prime
    return max(0.0, binary_entropy(q) - binary_entropy(p_prime))


def mi_upper_bound(p_prime: float) -> float:
    return 1.0 - binary_entropy(p_prime)


def joint_counts(a: np.ndarray, y: np.ndarray) -> np.ndarray:
    """2x2 table ``c[a, y]`` of co-occurrence counts."""
    a = np.asarray(a, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if a.shape != y.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {y.shape}")
    return np.bincount(2 * a + y, minlength=4).reshape(2, 2)


def mi_from_counts(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise DimensionError("empty sequences")
    joint = counts / total
    pa = joint.sum(axis=1)
    py = joint.sum(axis=0)
    mi = 0.0
    for i in range(2):
        for j in range(2):
            if joint[i, j] > 0:
                mi += joint[i, j] * math.log2(joint[i, j] / (pa[i] * py[j]))
    return max(0.0, mi)


def empirical_mi(a: np.ndarray, y: np.ndarray) -> float:
    """Plug-in estimate of I(A;Y) from paired bit sequences (no bias correction)."""
    if len(a) == 0:
        raise DimensionError("empirical MI needs at least one sample")
    return mi_from_counts(joint_counts(a, y))


def empirical_entropy(a: np.ndarray) -> float:
    a = np.asarray(a)
    if len(a) == 0:
        raise DimensionError("empty sequence")
    return binary_entropy(float(a.mean()))
