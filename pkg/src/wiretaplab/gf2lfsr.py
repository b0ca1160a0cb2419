"""GF(2) machinery for a single Fibonacci LFSR.

Shift convention
----------------
The register holds ``k`` bits.  Bit ``i`` of the state after ``j`` shifts is
``a_{j+i}``, so the output ``a_j`` is the least significant state bit after
shift ``j`` and the key (initial state) is simply ``(a_0, ..., a_{k-1})``.
The sequence obeys ``sum_i g_i a_{j+i} = 0`` for every ``j``, i.e. the
connection polynomial ``g`` is the characteristic polynomial of the
recurrence.  Consequently ``a_j`` as a linear form in the key is given by the
coefficients of ``X^j mod g(X)``.

Sequences are plain ``numpy.uint8`` arrays of 0/1 values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidKey,
    InvalidPolynomial,
    SingularError,
    UnsupportedDegree,
)

MAX_EXHAUSTIVE_DEGREE = 20


@dataclass(frozen=True)
class ConnectionPolynomial:
    """Feedback polynomial ``g(X)``; bit ``i`` of ``mask`` is ``g_i``."""

    mask: int

    def __post_init__(self):
        if self.mask < 2:
            raise InvalidPolynomial("degree must be at least 1")
        if not self.mask & 1:
            raise InvalidPolynomial("g_0 must be 1")

    @classmethod
    def from_taps(cls, taps: Iterable[int]) -> ConnectionPolynomial:
        mask = 0
        for j in taps:
            if j < 0:
                raise InvalidPolynomial(f"negative exponent {j}")
            mask ^= 1 << j
        return cls(mask)

    @classmethod
    def from_hex(cls, text: str, degree: int | None = None) -> ConnectionPolynomial:
        """Parse a hex coefficient string with ``g_0`` in the least significant bit."""
        try:
            mask = int(text, 16)
        except ValueError:
            raise InvalidPolynomial(f"not a hex string: {text!r}") from None
        poly = cls(mask)
        if degree is not None and poly.degree != degree:
            raise InvalidPolynomial(
                f"hex {text!r} has degree {poly.degree}, declared {degree}"
            )
        return poly

    @property
    def degree(self) -> int:
        return self.mask.bit_length() - 1

    @property
    def hex(self) -> str:
        return f"{self.mask:x}"

    @cached_property
    def taps(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.degree + 1) if (self.mask >> i) & 1)

    @property
    def coefficients(self) -> list[int]:
        return [(self.mask >> i) & 1 for i in range(self.degree + 1)]

    @property
    def t(self) -> int:
        """Number of nonzero coefficients minus one."""
        return len(self.taps) - 1

    def __str__(self) -> str:
        terms = ["1" if j == 0 else ("X" if j == 1 else f"X^{j}") for j in self.taps]
        return "+".join(terms)


@dataclass(frozen=True)
class LfsrKey:
    """Initial register contents ``(a_0, ..., a_{k-1})``."""

    state: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.state):
            raise InvalidKey("key bits must be 0 or 1")
        if not any(self.state):
            raise InvalidKey("all-zero key")

    @classmethod
    def from_int(cls, value: int, k: int) -> LfsrKey:
        return cls(tuple((value >> i) & 1 for i in range(k)))

    def to_int(self) -> int:
        return sum(b << i for i, b in enumerate(self.state))

    @property
    def k(self) -> int:
        return len(self.state)


def random_key(k: int, rng: np.random.Generator) -> LfsrKey:
    return LfsrKey.from_int(int(rng.integers(1, 1 << k)), k)


def as_bits(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit sequences are one-dimensional")
    return arr


# -- Vetted primitive polynomials -------------------------------------------

# Degree -> exponents of the nonzero coefficients.  Degree 15 (weight 5) and
# degree 31 (weight 7) match the t = 4 and t = 6 experiment configurations.
# Entries up to degree 20 are re-verified by the test suite with
# ``is_primitive``; higher degrees were verified offline with the
# multiplicative-order test against the factorisation of 2^k - 1.
PRIMITIVE_TAPS: dict[int, tuple[int, ...]] = {
    3: (0, 1, 3),
    4: (0, 1, 4),
    5: (0, 2, 5),
    6: (0, 1, 6),
    7: (0, 1, 7),
    8: (0, 1, 2, 7, 8),
    9: (0, 4, 9),
    10: (0, 3, 10),
    11: (0, 2, 11),
    12: (0, 1, 2, 8, 12),
    13: (0, 1, 2, 5, 13),
    14: (0, 1, 2, 12, 14),
    15: (0, 1, 4, 9, 15),
    16: (0, 1, 3, 12, 16),
    17: (0, 3, 17),
    18: (0, 7, 18),
    19: (0, 1, 2, 5, 19),
    20: (0, 3, 20),
    21: (0, 2, 21),
    22: (0, 1, 22),
    23: (0, 5, 23),
    24: (0, 1, 2, 7, 24),
    25: (0, 3, 25),
    26: (0, 1, 2, 6, 26),
    27: (0, 1, 2, 5, 27),
    28: (0, 3, 28),
    29: (0, 2, 29),
    30: (0, 1, 2, 23, 30),
    31: (0, 11, 13, 16, 19, 21, 31),
}


def table_polynomial(k: int) -> ConnectionPolynomial:
    try:
        return ConnectionPolynomial.from_taps(PRIMITIVE_TAPS[k])
    except KeyError:
        raise UnsupportedDegree(f"no vetted primitive polynomial of degree {k}") from None


# -- Sequence generation -------------------------------------------------------


def generate_sequence(poly: ConnectionPolynomial, key: LfsrKey, n: int) -> np.ndarray:
    k = poly.degree
    if key.k != k:
        raise InvalidKey(f"key has {key.k} bits, polynomial degree is {k}")
    if n < 0:
        raise ValueError("n must be non-negative")
    feedback = poly.mask ^ (1 << k)
    state = key.to_int()
    top = k - 1
    out = np.empty(n, dtype=np.uint8)
    for j in range(n):
        out[j] = state & 1
        fb = (state & feedback).bit_count() & 1
        state = (state >> 1) | (fb << top)
    return out


def lfsr_period(poly: ConnectionPolynomial, key: LfsrKey | None = None) -> int:
    """Number of shifts until the register state first repeats.

    Without a key the impulse state ``(0, ..., 0, 1)`` is used, whose period
    equals the order of ``X`` modulo ``g``.
    """
    k = poly.degree
    if k > MAX_EXHAUSTIVE_DEGREE:
        raise UnsupportedDegree(f"exhaustive period search limited to k <= {MAX_EXHAUSTIVE_DEGREE}")
    feedback = poly.mask ^ (1 << k)
    start = key.to_int() if key is not None else 1 << (k - 1)
    state = start
    top = k - 1
    for step in range(1, 1 << k):
        fb = (state & feedback).bit_count() & 1
        state = (state >> 1) | (fb << top)
        if state == start:
            return step
    raise AssertionError("LFSR with g_0 = 1 must be periodic")


def is_primitive(poly: ConnectionPolynomial) -> bool:
    if poly.degree > MAX_EXHAUSTIVE_DEGREE:
        raise UnsupportedDegree(
            f"degree {poly.degree} > {MAX_EXHAUSTIVE_DEGREE}; use the vetted table"
        )
    return lfsr_period(poly) == (1 << poly.degree) - 1


# -- Linear forms and the key solver ------------------------------------------


def _mulmod(a: int, b: int, mask: int, k: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if (a >> k) & 1:
            a ^= mask
    return r


def xpow_mod(e: int, poly: ConnectionPolynomial) -> int:
    """``X^e mod g(X)`` as a bitmask of ``k`` coefficients."""
    k = poly.degree
    result, base = 1, 2
    if k == 1:
        # X = 1 mod (1 + X)
        return 1
    while e:
        if e & 1:
            result = _mulmod(result, base, poly.mask, k)
        base = _mulmod(base, base, poly.mask, k)
        e >>= 1
    return result


def dependency_rows(positions: Sequence[int], poly: ConnectionPolynomial) -> list[int]:
    """Row ``i`` (bit ``c`` = coefficient of key bit ``c``) for ``a_{positions[i]}``."""
    return [xpow_mod(int(p), poly) for p in positions]


def all_dependency_rows(n: int, poly: ConnectionPolynomial) -> list[int]:
    """Rows for positions ``0..n-1`` by repeated multiplication by ``X``."""
    k = poly.degree
    rows = []
    row = 1
    for _ in range(n):
        rows.append(row)
        row <<= 1
        if (row >> k) & 1:
            row ^= poly.mask
    return rows


class GF2Basis:
    """Incrementally built row space over GF(2) (reduced by pivot bit)."""

    def __init__(self):
        self._pivots: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._pivots)

    def reduce(self, row: int) -> int:
        while row:
            top = row.bit_length() - 1
            pivot = self._pivots.get(top)
            if pivot is None:
                return row
            row ^= pivot
        return 0

    def add(self, row: int) -> bool:
        """Insert ``row``; return False if it was already in the span."""
        row = self.reduce(row)
        if not row:
            return False
        self._pivots[row.bit_length() - 1] = row
        return True


def gf2_rank(rows: Iterable[int]) -> int:
    basis = GF2Basis()
    for r in rows:
        basis.add(r)
    return len(basis)


def gf2_inverse_columns(rows: Sequence[int], k: int) -> list[int]:
    """Invert the square system ``rows`` (row i maps key -> bit i).

    Returns ``cols`` such that the key solving ``row_i . key = v_i`` is the
    XOR of ``cols[i]`` over all ``i`` with ``v_i = 1``.
    """
    if len(rows) != k:
        raise ValueError(f"need exactly {k} rows, got {len(rows)}")
    # augmented [R | I]; the identity part sits above bit k
    work = [r | (1 << (k + i)) for i, r in enumerate(rows)]
    for col in range(k):
        pivot = next((i for i in range(col, k) if (work[i] >> col) & 1), None)
        if pivot is None:
            raise SingularError("positions are not linearly independent")
        work[col], work[pivot] = work[pivot], work[col]
        for i in range(k):
            if i != col and (work[i] >> col) & 1:
                work[i] ^= work[col]
    # row c of R^-1 is now work[c] >> k; transpose into columns
    inv_rows = [w >> k for w in work]
    cols = []
    for i in range(k):
        c = 0
        for r in range(k):
            if (inv_rows[r] >> i) & 1:
                c |= 1 << r
        cols.append(c)
    return cols


def solve_initial_state(
    positions: Sequence[int], values: Sequence[int], poly: ConnectionPolynomial
) -> LfsrKey:
    k = poly.degree
    if len(positions) != k or len(values) != k:
        raise ValueError(f"need exactly k = {k} positions and values")
    if len(set(int(p) for p in positions)) != k:
        raise ValueError("positions must be distinct")
    rows = dependency_rows(positions, poly)
    try:
        cols = gf2_inverse_columns(rows, k)
    except SingularError:
        # all-zero observations on a nullity-1 system leave one nonzero state
        kernel = gf2_kernel(rows, k)
        if any(values) or len(kernel) != 1:
            raise
        return LfsrKey.from_int(kernel[0], k)
    key = 0
    for c, v in zip(cols, values):
        if v:
            key ^= c
    if key == 0:
        raise InvalidKey("observed bits are consistent only with the all-zero state")
    return LfsrKey.from_int(key, k)


def gf2_kernel(rows: Sequence[int], k: int) -> list[int]:
    """Basis of ``{x : row . x = 0 for every row}`` over ``k`` bits."""
    work = [int(r) for r in rows]
    pivots: dict[int, int] = {}
    rank = 0
    for col in range(k):
        pivot = next((i for i in range(rank, len(work)) if (work[i] >> col) & 1), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and (work[i] >> col) & 1:
                work[i] ^= work[rank]
        pivots[col] = rank
        rank += 1
    basis = []
    for free in (c for c in range(k) if c not in pivots):
        x = 1 << free
        for col, r in pivots.items():
            if (work[r] >> free) & 1:
                x |= 1 << col
        basis.append(x)
    return basis


# -- Parity checks -------------------------------------------------------------


def default_squarings(n: int, k: int) -> int:
    if n - 1 < k:
        return 0
    return int(math.floor(math.log2((n - 1) / k)))


@dataclass(frozen=True, eq=False)
class CheckSystem:
    """All parity relations of ``g(X)^(2^m)`` that fit inside ``[0, n)``.

    ``relations[r]`` lists the ``t + 1`` positions of one relation (their XOR
    is zero on a noiseless sequence).  Every member of a relation is the
    target of one check whose other ``t`` members predict it, so position
    ``j`` takes part in ``w[j]`` checks.
    """

    poly: ConnectionPolynomial
    n: int
    relations: np.ndarray  # (M, t+1) int64
    levels: np.ndarray  # (M,) squaring level of each relation
    w: np.ndarray = field(init=False)

    def __post_init__(self):
        counts = np.bincount(self.relations.ravel(), minlength=self.n)[: self.n]
        object.__setattr__(self, "w", counts.astype(np.int64))

    @property
    def t(self) -> int:
        return self.poly.t

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    @property
    def w_mean(self) -> float:
        return float(self.w.mean()) if self.n else 0.0

    def checks_for(self, j: int) -> list[tuple[int, ...]]:
        """Index sets of the checks predicting bit ``j``, excluding ``j`` itself."""
        rows = np.nonzero((self.relations == j).any(axis=1))[0]
        return [tuple(int(p) for p in self.relations[r] if p != j) for r in rows]

    def relation_parity(self, bits: np.ndarray) -> np.ndarray:
        """XOR over each relation: 0 where the relation holds."""
        if len(self.relations) == 0:
            return np.zeros(0, dtype=np.uint8)
        return np.bitwise_xor.reduce(bits[self.relations], axis=1)

    def holding_counts(self, bits: np.ndarray) -> np.ndarray:
        """``h[j]``: number of checks on ``j`` that hold in ``bits``."""
        holds = (self.relation_parity(bits) == 0).astype(np.int64)
        per_member = np.repeat(holds, self.relations.shape[1]) if len(holds) else holds
        return np.bincount(
            self.relations.ravel(), weights=per_member, minlength=self.n
        )[: self.n].astype(np.int64)


def derive_checks(
    poly: ConnectionPolynomial, n: int, max_squarings: int | None = None
) -> CheckSystem:
    """Relations from the recurrence and its squarings ``g(X^(2^m))``.

    Squaring over GF(2) keeps the weight, so every check has ``t`` terms
    besides its target, with tap offsets scaled by ``2^m``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    k = poly.degree
    if max_squarings is None:
        max_squarings = default_squarings(n, k)
    if max_squarings < 0:
        raise ValueError("max_squarings must be non-negative")
    taps = np.asarray(poly.taps, dtype=np.int64)
    blocks, levels = [], []
    for m in range(max_squarings + 1):
        span = k << m
        if span >= n:
            break
        shifts = np.arange(n - span, dtype=np.int64)
        blocks.append(shifts[:, None] + (taps << m)[None, :])
        levels.append(np.full(n - span, m, dtype=np.int64))
    if blocks:
        relations = np.concatenate(blocks)
        lv = np.concatenate(levels)
    else:
        relations = np.zeros((0, len(taps)), dtype=np.int64)
        lv = np.zeros(0, dtype=np.int64)
    return CheckSystem(poly=poly, n=n, relations=relations, levels=lv)
