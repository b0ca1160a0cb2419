"""Small-instance oracle checks run by ``wiretaplab selftest``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import rng as rngmod
from .attack_iter import smatrix_entry
from .attack_noniter import fold_s, toggle_patterns, trials_budget
from .channel import cascade
from .gf2lfsr import (
    ConnectionPolynomial,
    LfsrKey,
    derive_checks,
    generate_sequence,
    is_primitive,
    solve_initial_state,
    table_polynomial,
)


def _m_sequence_small() -> bool:
    poly = ConnectionPolynomial.from_taps((0, 1, 3))
    seq = generate_sequence(poly, LfsrKey((1, 0, 0)), 14)
    return int(seq[:7].sum()) == 4 and bool(np.array_equal(seq[:7], seq[7:]))


def _primitivity() -> bool:
    return (
        is_primitive(ConnectionPolynomial.from_taps((0, 1)))
        and not is_primitive(ConnectionPolynomial.from_taps((0, 2)))
        and all(is_primitive(table_polynomial(k)) for k in range(3, 13))
    )


def _solver_brute_force() -> bool:
    """Solver succeeds iff exhaustive search over nonzero states finds one match."""
    g = rngmod.stream(0, 0, "selftest-solver")
    for k in range(3, 8):
        poly = table_polynomial(k)
        n = 3 * k
        seqs = {v: generate_sequence(poly, LfsrKey.from_int(v, k), n) for v in range(1, 1 << k)}
        for _ in range(10):
            key = int(g.integers(1, 1 << k))
            pos = sorted(int(p) for p in g.choice(n, size=k, replace=False))
            vals = seqs[key][pos]
            matches = [v for v, s in seqs.items() if np.array_equal(s[pos], vals)]
            try:
                got = [solve_initial_state(pos, vals, poly).to_int()]
            except ArithmeticError:
                got = None
            if (len(matches) == 1) != (got is not None) or (got and got != matches):
                return False
    return True


def _check_soundness() -> bool:
    for k in (3, 5, 8):
        poly = table_polynomial(k)
        checks = derive_checks(poly, 60)
        seq = generate_sequence(poly, LfsrKey.from_int(1, k), 60)
        if checks.relation_parity(seq).any():
            return False
    return True


def _budget() -> bool:
    for k in range(1, 9):
        pats = list(toggle_patterns(k))
        for r in range(k + 1):
            if trials_budget(k, r)[0] != sum(1 for p in pats if len(p) <= r):
                return False
    return True


def _identities() -> bool:
    for p in np.linspace(0.0, 0.5, 11):
        for t in (1, 2, 6, 20):
            if abs(fold_s(p, t) - (1 + (1 - 2 * p) ** t) / 2) > 1e-12:
                return False
            if abs(smatrix_entry([1 - p] * t) - fold_s(p, t)) > 1e-12:
                return False
    return cascade(0.2, 0.1) == 0.26


CHECKS: dict[str, Callable[[], bool]] = {
    "m-sequence 1+X+X^3": _m_sequence_small,
    "primitivity": _primitivity,
    "solver vs brute force": _solver_brute_force,
    "check soundness": _check_soundness,
    "toggle budget": _budget,
    "recursion identities": _identities,
}


def run_selftest() -> list[tuple[str, bool]]:
    return [(name, bool(fn())) for name, fn in CHECKS.items()]
