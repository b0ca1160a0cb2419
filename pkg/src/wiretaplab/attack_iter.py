"""Iterative fast correlation attack: rounds of reliability updates and bit flips.

Each iteration recomputes, for every check a bit takes part in, the
probability ``S`` that the other members of the check carry an even number
of errors, using the current per-bit reliabilities.  The per-bit posterior is
then rebuilt from those individual ``S`` values.  A round ends after
``alpha`` iterations or as soon as more than ``n_thr`` bits fall below
``p_thr``; the sub-threshold bits are flipped and all reliabilities reset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import comb, expit, logit

from .attack_noniter import clamp_probability, fold_s, pstar
from .errors import InsufficientData, InvalidArity
from .gf2lfsr import CheckSystem
from .infomath import empirical_mi

log = logging.getLogger(__name__)

_EPS = 1e-15


def smatrix_entry(q: Sequence[float]) -> float:
    """Even-parity probability of a check's other members, by recursion."""
    if len(q) == 0:
        raise InvalidArity("need at least one probability")
    s = float(q[0])
    for ql in q[1:]:
        s = ql * s + (1.0 - ql) * (1.0 - s)
    return s


def smatrix(p_star: np.ndarray, checks: CheckSystem) -> np.ndarray:
    """``S[r, u]`` for member ``u`` of relation ``r``, from the other members.

    Uses ``2S - 1 = prod(2q - 1)`` over the other members, which is the
    closed form of the recursion in :func:`smatrix_entry`.
    """
    c = 2.0 * np.asarray(p_star)[checks.relations] - 1.0
    ones = np.ones((c.shape[0], 1))
    prefix = np.cumprod(np.hstack([ones, c[:, :-1]]), axis=1)
    suffix = np.cumprod(np.hstack([ones, c[:, :0:-1]]), axis=1)[:, ::-1]
    return 0.5 * (1.0 + prefix * suffix)


def update_pstar_individual(
    z: np.ndarray,
    checks: CheckSystem,
    p_star_prev: np.ndarray,
    p1: float,
    prior: np.ndarray | float | None = None,
) -> np.ndarray:
    """One reliability update using per-check ``S`` values.

    ``prior`` defaults to the channel agreement probability ``1 - p1``.
    """
    p1 = clamp_probability(p1)
    if prior is None:
        prior_logit = np.log1p(-p1) - np.log(p1)
    else:
        prior_logit = logit(np.clip(prior, _EPS, 1.0 - _EPS))
    n = checks.n
    if checks.num_relations == 0:
        return expit(np.broadcast_to(prior_logit, (n,)).astype(np.float64))
    S = np.clip(smatrix(p_star_prev, checks), _EPS, 1.0 - _EPS)
    holds = checks.relation_parity(np.asarray(z, dtype=np.uint8)) == 0
    sign = np.where(holds, 1.0, -1.0)[:, None]
    contrib = sign * (np.log(S) - np.log1p(-S))
    total = np.bincount(checks.relations.ravel(), weights=contrib.ravel(), minlength=n)[:n]
    return expit(prior_logit + total)


def estimate_p1(z: np.ndarray, checks: CheckSystem) -> float:
    """Invert the fraction of satisfied level-0 checks for the crossover rate."""
    level0 = checks.levels == 0
    if not level0.any():
        raise InsufficientData("no checks available for estimation")
    parity = np.bitwise_xor.reduce(np.asarray(z, dtype=np.uint8)[checks.relations[level0]], axis=1)
    return p1_from_check_fraction(float(np.mean(parity == 0)), checks.t)


def p1_from_check_fraction(f: float, t: int) -> float:
    """Solve ``f = (1 + (1 - 2 p1)^(t+1)) / 2`` for ``p1``, clamped."""
    corr = 2.0 * f - 1.0
    if corr <= 0.0:
        return clamp_probability(0.5)
    return clamp_probability(0.5 * (1.0 - corr ** (1.0 / (t + 1))))


@dataclass(frozen=True)
class Thresholds:
    p_thr: float
    n_thr: float
    h_thr: int
    expected_gain: float


def compute_thresholds(p1: float, checks: CheckSystem, n: int | None = None) -> Thresholds:
    """Pick the flip threshold maximising expected net corrections in round one.

    First-iteration model: a bit is wrong with probability ``p1``; each of its
    ``w'`` checks holds with probability ``s`` if the bit is right and ``1 - s``
    if wrong.  Bits with fewer than ``h_thr`` holding checks are flipped.
    """
    n = checks.n if n is None else n
    p1 = clamp_probability(p1)
    s = fold_s(p1, checks.t)
    w = int(round(checks.w_mean))
    h = np.arange(w + 1)
    c = comb(w, h)
    pmf_right = c * s**h * (1.0 - s) ** (w - h)
    pmf_wrong = c * (1.0 - s) ** h * s ** (w - h)
    # cumulative over h < h_thr for h_thr = 0..w+1
    below_right = np.concatenate([[0.0], np.cumsum(pmf_right)])
    below_wrong = np.concatenate([[0.0], np.cumsum(pmf_wrong)])
    gain = n * (p1 * below_wrong - (1.0 - p1) * below_right)
    h_thr = int(np.argmax(gain))
    n_thr = n * (p1 * below_wrong[h_thr] + (1.0 - p1) * below_right[h_thr])
    return Thresholds(pstar(p1, s, w, h_thr), float(n_thr), h_thr, float(gain[h_thr]))


@dataclass(frozen=True)
class Attack2Params:
    alpha: int = 5
    p_thr: float = 0.5
    n_thr: float = 0.0
    max_rounds: int = 50
    reset_value: float | None = None  # None -> 1 - p1

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if not 0.0 < self.p_thr < 1.0:
            raise ValueError("p_thr must lie in (0, 1)")
        if self.n_thr < 0:
            raise ValueError("n_thr must be >= 0")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")

    @classmethod
    def derived(
        cls,
        p1: float,
        checks: CheckSystem,
        alpha: int = 5,
        max_rounds: int = 50,
        literal_reset: bool = False,
    ) -> Attack2Params:
        """Parameters with thresholds from :func:`compute_thresholds`.

        ``literal_reset`` resets reliabilities to ``p1`` instead of ``1 - p1``.
        """
        thr = compute_thresholds(p1, checks)
        reset = clamp_probability(p1) if literal_reset else None
        return cls(alpha=alpha, p_thr=thr.p_thr, n_thr=thr.n_thr, max_rounds=max_rounds, reset_value=reset)


def run_round(
    y: np.ndarray, checks: CheckSystem, params: Attack2Params, p1: float
) -> tuple[np.ndarray, int, int]:
    """One round; returns the flipped sequence, iterations used and flip count."""
    p1c = clamp_probability(p1)
    reset = 1.0 - p1c if params.reset_value is None else params.reset_value
    p_star = np.full(checks.n, reset)
    iterations = 0
    for _ in range(params.alpha):
        p_star = update_pstar_individual(y, checks, p_star, p1c)
        iterations += 1
        if np.count_nonzero(p_star < params.p_thr) > params.n_thr:
            break
    flip = p_star < params.p_thr
    out = np.asarray(y, dtype=np.uint8) ^ flip.astype(np.uint8)
    return out, iterations, int(flip.sum())


@dataclass
class RoundTrace:
    """Per-round history of one attack.

    ``sequences[0]`` is the input ``Y`` and ``sequences[l]`` is ``Y`` after
    round ``l``; likewise for ``errors`` and ``mi``.  ``flips`` and
    ``iterations`` have one entry per executed round.
    """

    errors: list[int] = field(default_factory=list)
    mi: list[float] = field(default_factory=list)
    flips: list[int] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    sequences: list[np.ndarray] = field(default_factory=list, repr=False)
    status: str = "round_cap"

    @property
    def rounds(self) -> int:
        return len(self.flips)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def first_round_correction(self) -> int | None:
        """Errors removed by round one (negative if it added errors)."""
        if self.rounds == 0:
            return None
        return self.errors[0] - self.errors[1]


def run_attack2(
    y0: np.ndarray,
    a_truth: np.ndarray,
    checks: CheckSystem,
    params: Attack2Params,
    p1: float,
    keep_sequences: bool = True,
) -> RoundTrace:
    a_truth = np.asarray(a_truth, dtype=np.uint8)
    y = np.asarray(y0, dtype=np.uint8).copy()
    if y.shape != a_truth.shape:
        raise ValueError("y0 and a_truth differ in length")
    trace = RoundTrace()

    def record(seq):
        trace.errors.append(int(np.count_nonzero(seq != a_truth)))
        trace.mi.append(empirical_mi(a_truth, seq) if len(seq) else 0.0)
        if keep_sequences:
            trace.sequences.append(seq.copy())

    record(y)
    if trace.errors[0] == 0:
        trace.status = "converged"
        return trace
    for _ in range(params.max_rounds):
        new, iters, nflip = run_round(y, checks, params, p1)
        trace.flips.append(nflip)
        trace.iterations.append(iters)
        record(new)
        if trace.errors[-1] == 0:
            trace.status = "converged"
            return trace
        if nflip == 0 or np.array_equal(new, y):
            trace.status = "stagnated"
            return trace
        y = new
    trace.status = "round_cap"
    return trace
