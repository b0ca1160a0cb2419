"""Noniterative fast correlation attack (reliability ranking + toggling).

The attacker ranks keystream bits by the posterior probability ``p*`` that
they agree with the LFSR output, solves for the key from the ``k`` most
reliable linearly independent bits, and then toggles those bits in order of
increasing Hamming weight until the correct key appears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator

import numpy as np
from scipy.special import comb, expit

from .errors import RankDeficient
from .gf2lfsr import (
    CheckSystem,
    ConnectionPolynomial,
    GF2Basis,
    LfsrKey,
    all_dependency_rows,
    dependency_rows,
    gf2_inverse_columns,
)
from .infomath import binary_entropy

CLAMP = 1e-6
DEFAULT_MAX_TRIALS = 1 << 20


def clamp_probability(p: float) -> float:
    """Keep ``p`` inside ``[1e-6, 0.5 - 1e-6]`` where the posterior is defined."""
    return min(max(float(p), CLAMP), 0.5 - CLAMP)


def fold_s(p1: float, t: int) -> float:
    """Probability that ``t`` bits through BSC(p1) carry an even number of flips."""
    if t < 1:
        raise ValueError("t must be >= 1")
    s = 1.0 - p1
    for _ in range(t - 1):
        s = (1.0 - p1) * s + p1 * (1.0 - s)
    return s


def pstar_log_odds(p1, s, w, h):
    """Log-odds of ``z_j = a_j`` given ``h`` of ``w`` checks hold (vectorised)."""
    w = np.asarray(w, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    llr_check = np.log(s) - np.log1p(-s)
    return np.log1p(-p1) - np.log(p1) + (2.0 * h - w) * llr_check


def pstar(p1: float, s: float, w, h):
    """Posterior probability that a keystream bit equals its LFSR bit.

    Evaluated in the log domain; ``p1`` and ``s`` must lie strictly inside
    (0, 1).
    """
    out = expit(pstar_log_odds(p1, s, w, h))
    return float(out) if np.ndim(out) == 0 else out


def reliability_vector(z: np.ndarray, checks: CheckSystem, p1: float) -> np.ndarray:
    p1 = clamp_probability(p1)
    s = fold_s(p1, checks.t)
    h = checks.holding_counts(np.asarray(z, dtype=np.uint8))
    return pstar(p1, s, checks.w, h)


def reliability_order(p_star: np.ndarray) -> np.ndarray:
    """Positions by decreasing reliability, ties broken by lower index."""
    return np.lexsort((np.arange(len(p_star)), -np.asarray(p_star)))


def select_reliable_independent(
    p_star: np.ndarray, poly: ConnectionPolynomial, k: int | None = None
) -> list[int]:
    k = poly.degree if k is None else k
    n = len(p_star)
    rows = all_dependency_rows(n, poly)
    basis = GF2Basis()
    chosen: list[int] = []
    for j in reliability_order(p_star):
        if basis.add(rows[j]):
            chosen.append(int(j))
            if len(chosen) == k:
                return chosen
    raise RankDeficient(f"only {len(chosen)} independent positions among {n}")


def toggle_patterns(k: int, max_weight: int | None = None) -> Iterator[tuple[int, ...]]:
    """Index sets to toggle: by Hamming weight, lexicographic within a weight."""
    top = k if max_weight is None else max_weight
    for d in range(top + 1):
        yield from combinations(range(k), d)


def trials_budget(k: int, r: int) -> tuple[int, float]:
    """Worst-case trial count A(k, r) and its entropy bound 2^(H(r/k) k)."""
    if not 0 <= r <= k:
        raise ValueError("need 0 <= r <= k")
    count = sum(math.comb(k, i) for i in range(r + 1))
    bound = 2.0 ** (binary_entropy(r / k) * k) if k else 1.0
    return count, bound


@dataclass
class Attack1Outcome:
    success: bool
    trials: int
    recovered_key: LfsrKey | None
    selected_positions: list[int]
    wrong_selected: int
    p_star: np.ndarray = field(repr=False, default=None)


def run_attack1(
    y: np.ndarray,
    checks: CheckSystem,
    p_prime: float,
    true_key: LfsrKey,
    poly: ConnectionPolynomial,
    max_trials: int = DEFAULT_MAX_TRIALS,
    a_truth: np.ndarray | None = None,
) -> Attack1Outcome:
    """Run the attack against ``y``; candidate keys are verified against ``true_key``.

    ``a_truth`` is only used to report how many selected bits were wrong.
    """
    k = poly.degree
    y = np.asarray(y, dtype=np.uint8)
    p_star = reliability_vector(y, checks, p_prime)
    positions = select_reliable_independent(p_star, poly, k)
    cols = gf2_inverse_columns(dependency_rows(positions, poly), k)
    base = 0
    for c, j in zip(cols, positions):
        if y[j]:
            base ^= c
    target = true_key.to_int()

    wrong = -1
    if a_truth is not None:
        wrong = int(np.sum(y[positions] != np.asarray(a_truth)[positions]))

    trials = 0
    for pattern in toggle_patterns(k):
        if trials >= max_trials:
            break
        trials += 1
        cand = base
        for i in pattern:
            cand ^= cols[i]
        if cand == target:
            return Attack1Outcome(True, trials, LfsrKey.from_int(cand, k), positions, wrong, p_star)
    return Attack1Outcome(False, trials, None, positions, wrong, p_star)


@dataclass(frozen=True)
class WrongSelectedEstimate:
    h_prime: int
    r_bar: float
    trial_order: float
    w_prime: int


def _tail_terms(w: int, s: float, p: float, h: int) -> tuple[float, float]:
    i = np.arange(h, w + 1)
    c = comb(w, i)
    right = c * (1.0 - p) * s**i * (1.0 - s) ** (w - i)
    wrong = c * p * (1.0 - s) ** i * s ** (w - i)
    return float(right.sum()), float(wrong.sum())


def expected_wrong_selected(checks: CheckSystem, p_prime: float, k: int | None = None) -> WrongSelectedEstimate:
    """Expected number of wrong bits among the ``k`` most reliable ones.

    ``w'`` is the rounded mean check count, ``h'`` the largest threshold
    for which at least ``k`` bits are expected to satisfy ``h'`` or more
    checks.
    """
    k = checks.poly.degree if k is None else k
    p = clamp_probability(p_prime)
    s = fold_s(p, checks.t)
    w = int(round(checks.w_mean))
    n = checks.n
    h_prime = 0
    for h in range(w, -1, -1):
        right, wrong = _tail_terms(w, s, p, h)
        if n * (right + wrong) >= k:
            h_prime = h
            break
    right, wrong = _tail_terms(w, s, p, h_prime)
    r_bar = min(max(k - k * right / (right + wrong), 0.0), float(k))
    order = 2.0 ** (binary_entropy(r_bar / k) * k)
    return WrongSelectedEstimate(h_prime, r_bar, order, w)
