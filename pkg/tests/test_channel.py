import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wiretaplab.channel import ChannelParams, apply_bsc, capacity, cascade, secrecy_capacity
from wiretaplab.errors import InvalidProbability
from wiretaplab.rng import stream

probs = st.floats(0.0, 0.5, allow_nan=False)


def three_sigma(n, p):
    return 3.0 * math.sqrt(p * (1 - p) / n)


class TestBsc:
    def test_noiseless(self):
        seq = stream(1).integers(0, 2, 1000, dtype=np.uint8)
        assert np.array_equal(apply_bsc(seq, 0.0, stream(2)), seq)

    def test_always_flip(self):
        seq = stream(1).integers(0, 2, 1000, dtype=np.uint8)
        assert np.array_equal(apply_bsc(seq, 1.0, stream(2)), 1 - seq)

    def test_flip_rate(self):
        n = 10**5
        out = apply_bsc(np.zeros(n, dtype=np.uint8), 0.2, stream(3, 0, "bsc"))
        assert abs(out.mean() - 0.2) <= three_sigma(n, 0.2)

    def test_deterministic_given_seed(self):
        seq = np.zeros(500, dtype=np.uint8)
        assert np.array_equal(apply_bsc(seq, 0.3, stream(9, 4, "x")), apply_bsc(seq, 0.3, stream(9, 4, "x")))
        assert not np.array_equal(apply_bsc(seq, 0.3, stream(9, 4, "x")), apply_bsc(seq, 0.3, stream(9, 5, "x")))

    @pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
    def test_invalid_probability(self, p):
        with pytest.raises(InvalidProbability):
            apply_bsc(np.zeros(3, dtype=np.uint8), p, stream(0))

    def test_cascaded_rate_matches_formula(self):
        n = 10**5
        a = np.zeros(n, dtype=np.uint8)
        y = apply_bsc(apply_bsc(a, 0.2, stream(5, 0, "one")), 0.1, stream(5, 0, "two"))
        assert abs(y.mean() - cascade(0.2, 0.1)) <= three_sigma(n, 0.26)


class TestCascade:
    def test_reference_value(self):
        assert cascade(0.2, 0.1) == 0.26

    @given(probs)
    def test_noiseless_second_stage(self, p):
        assert cascade(p, 0.0) == p

    @given(probs)
    def test_useless_second_stage(self, p):
        assert cascade(p, 0.5) == pytest.approx(0.5, abs=1e-15)

    @given(probs, probs, probs)
    def test_commutative_associative_dominating(self, p, q, r):
        assert cascade(p, q) == pytest.approx(cascade(q, p), abs=1e-15)
        assert cascade(cascade(p, q), r) == pytest.approx(cascade(p, cascade(q, r)), abs=1e-12)
        assert cascade(p, q) >= max(p, q) - 1e-15
        assert cascade(p, q) <= 0.5 + 1e-15

    def test_params(self):
        cp = ChannelParams(0.2, 0.1)
        assert cp.p_prime == 0.26
        with pytest.raises(InvalidProbability):
            ChannelParams(0.6)


class TestSecrecyCapacity:
    def test_identical_channels(self):
        assert secrecy_capacity(0.17, 0.17) == 0.0

    def test_perfect_main_useless_wiretap(self):
        assert secrecy_capacity(0.0, 0.5) == 1.0

    def test_entropy_difference(self):
        h = lambda p: -p * math.log2(p) - (1 - p) * math.log2(1 - p)
        assert secrecy_capacity(0.1, 0.2) == pytest.approx(h(0.2) - h(0.1), abs=1e-12)
        assert secrecy_capacity(0.1, 0.2) == pytest.approx(0.2529, abs=1e-4)

    @given(probs, probs)
    def test_positive_iff_wiretap_noisier(self, pm, pw):
        cs = secrecy_capacity(pm, pw)
        if pw > pm:
            assert cs > 0 or math.isclose(capacity(pm), capacity(pw))
        else:
            assert cs <= 0
