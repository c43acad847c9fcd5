import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbist.ora import PRIMITIVE_TAPS
from kbist.tpg import (DEFAULT_TAPS, LfsrError, gen_patterns, lfsr_bits, lfsr_new, parse_taps,
                       patterns_for_seed)


def _period(degree, taps, seed=1):
    s = lfsr_new(degree, taps, seed)
    start = s.state
    for k in range(1, 2 ** degree + 1):
        s.step()
        assert s.state != 0
        if s.state == start:
            return k
    return None


def test_default_construction():
    s = lfsr_new(32, {32, 22, 2, 1}, 0x00000001)
    assert s.degree == 32 and s.state == 1 and s.seed == 1
    assert s.taps == (32, 22, 2, 1) == DEFAULT_TAPS


def test_degree_implied_in_taps():
    assert lfsr_new(4, {3}, 1).taps == (4, 3)


@pytest.mark.parametrize("args", [(32, DEFAULT_TAPS, 0), (4, (4, 3), 16), (4, (), 1),
                                  (1, (1,), 1), (4, (5, 4), 1), (4, (0, 4), 1)])
def test_construction_errors(args):
    with pytest.raises(LfsrError):
        lfsr_new(*args)


def test_hand_enumerated_degree4():
    # taps {4,3}: s[k+4] = s[k+4-4] ^ s[k+4-3] = s[k] ^ s[k+1]
    # seed 0b0001 sets s0..s3 = 1,0,0,0
    # s4 = s0^s1 = 1, s5 = s1^s2 = 0, s6 = s2^s3 = 0, s7 = s3^s4 = 1
    s = lfsr_new(4, (4, 3), 0b0001)
    assert gen_patterns(s, 4, 2) == [(1, 0, 0, 0), (1, 0, 0, 1)]


def test_recurrence_holds():
    taps = DEFAULT_TAPS
    bits = lfsr_bits(lfsr_new(32, taps, 0xDEADBEEF), 500)
    for k in range(500 - 32):
        assert bits[k + 32] == (bits[k + 32 - 22] ^ bits[k + 32 - 2] ^ bits[k + 32 - 1] ^ bits[k])


def test_seed_bits_come_out_first():
    bits = lfsr_bits(lfsr_new(32, DEFAULT_TAPS, 0xDEADBEEF), 32)
    assert sum(b << i for i, b in enumerate(bits)) == 0xDEADBEEF


def test_period_degree4_all_seeds():
    for seed in range(1, 16):
        assert _period(4, (4, 3), seed) == 15


def test_period_degree8():
    assert _period(8, (8, 6, 5, 4)) == 255


@pytest.mark.parametrize("degree", range(2, 17))
def test_primitive_table_gives_full_period(degree):
    assert _period(degree, PRIMITIVE_TAPS[degree]) == 2 ** degree - 1


def test_count_zero_is_identity():
    s = lfsr_new(4, (4, 3), 5)
    assert lfsr_bits(s, 0) == []
    assert s.state == 5


def test_pattern_bit_budget():
    s = lfsr_new(seed=7)
    ref = s.copy()
    pats = gen_patterns(s, 5, 7)
    assert len(pats) == 7 and all(len(p) == 5 for p in pats)
    lfsr_bits(ref, 35)
    assert s.state == ref.state


def test_copy_is_independent():
    s = lfsr_new(seed=3)
    c = s.copy()
    lfsr_bits(s, 10)
    assert c.state == 3 and c.seed == 3


def test_gen_patterns_errors():
    with pytest.raises(LfsrError):
        gen_patterns(lfsr_new(), 0, 3)
    with pytest.raises(LfsrError):
        gen_patterns(lfsr_new(), 3, -1)
    with pytest.raises(LfsrError):
        lfsr_bits(lfsr_new(), -1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 2**32 - 1), st.integers(1, 40), st.integers(0, 30))
def test_patterns_are_reshaped_stream(seed, width, count):
    pats = patterns_for_seed(seed, width, count)
    bits = lfsr_bits(lfsr_new(32, DEFAULT_TAPS, seed), width * count)
    assert [b for p in pats for b in p] == bits
    assert patterns_for_seed(seed, width, count) == pats


def test_parse_taps():
    assert parse_taps("32,22,2,1") == (32, 22, 2, 1)
    assert parse_taps(" 4, 3 ") == (4, 3)
    for bad in ["", "a,b", ","]:
        with pytest.raises(LfsrError):
            parse_taps(bad)
