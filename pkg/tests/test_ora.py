import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbist import iscas85
from kbist.faultsim import ResponseStream, simulate_batch, simulate_faulty
from kbist.kmac import DeviceKey, KmacError, kmac128, prefix_mac
from kbist.netlist import parse_bench
from kbist.ora import (PRIMITIVE_TAPS, AliasingReport, DomainError, SisrState, aliasing_analysis,
                       cr_kmac, cr_sr, fold_slice, format_table, misr_compact, pa_kmac, pa_sr,
                       response_message, sign_response, sign_responses, sisr_compact,
                       sr_signature_valid)
from kbist.tpg import patterns_for_seed
from netgen import C17

KEY = DeviceKey(bytes.fromhex("0123456789abcdef"))
OTHER = DeviceKey(bytes.fromhex("0123456789abcdee"))


# -- GF(2) helpers, polynomials as ints (bit i = coefficient of x**i) ---------

def _gf2_mod(a, m):
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def _gf2_mulmod(a, b, m):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a = _gf2_mod(a << 1, m)
    return _gf2_mod(r, m)


def _gf2_powmod(a, e, m):
    r = 1
    while e:
        if e & 1:
            r = _gf2_mulmod(r, a, m)
        a = _gf2_mulmod(a, a, m)
        e >>= 1
    return r


def _char_poly(n, taps):
    p = (1 << n) | 1
    for t in taps:
        p |= 1 << t
    return p


# -- signing ------------------------------------------------------------------

def _pack_by_hand(bits):
    v = 0
    for b in bits:
        v = (v << 1) | b
    pad = -len(bits) % 8
    return (v << pad).to_bytes((len(bits) + pad) // 8, "big") + len(bits).to_bytes(8, "big")


def test_empty_response_signs_the_trailer():
    r = ResponseStream(b"", 0, 0, 3)
    sig = sign_response(KEY, r)
    assert sig.bit_length == 256
    assert sig == kmac128(KEY, bytes(8))


def test_c17_golden_packing_and_stability():
    c17 = parse_bench(C17, "c17")
    pats = patterns_for_seed(0xABCD, 5, 7)
    r = simulate_batch(c17, pats)
    assert r.bit_length == 14
    bits = [b for p in pats for b in _c17_bits(p)]
    assert response_message(r) == _pack_by_hand(bits)
    assert sign_response(KEY, r) == kmac128(KEY, _pack_by_hand(bits))
    assert sign_response(KEY, r) == sign_response(KEY, simulate_batch(c17, pats))


def _c17_bits(p):
    nand = lambda a, b: 1 - (a & b)
    n1, n2, n3, n6, n7 = p
    n11, n16 = nand(n3, n6), nand(n2, nand(n3, n6))
    return nand(nand(n1, n3), n16), nand(n16, nand(n11, n7))


def test_keys_separate_signatures():
    r = ResponseStream.from_bits([1, 0, 1, 1], 2, 2)
    assert sign_response(KEY, r) != sign_response(OTHER, r)


def test_trailer_separates_lengths():
    # identical padded octets, different bit lengths
    a = ResponseStream.from_bits([1], 1, 1)
    b = ResponseStream.from_bits([1, 0], 2, 1)
    assert a.data == b.data
    assert sign_response(KEY, a) != sign_response(KEY, b)


def test_prefix_mode():
    r = ResponseStream.from_bits([1, 1, 0], 3, 1)
    assert sign_response(KEY, r, mode="prefix") == prefix_mac(KEY, response_message(r))
    with pytest.raises(ValueError):
        sign_response(KEY, r, mode="xor")
    with pytest.raises(KmacError):
        sign_response(KEY, r, d=100)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=200), st.sampled_from([64, 256]))
def test_signing_is_a_function_of_bits(bits, d):
    r1 = ResponseStream.from_bits(bits, len(bits), 1)
    r2 = ResponseStream.from_bits(list(bits), 1 if bits else 0, len(bits)) if bits else r1
    # same bits and length, different pattern/output framing: same signature
    assert sign_response(KEY, r1, d) == sign_response(KEY, r2, d)
    assert sign_response(KEY, r1, d) == kmac128(KEY, _pack_by_hand(bits), d)


def test_batch_signing_matches_single():
    rng = random.Random(2)
    rs = [ResponseStream.from_bits([rng.getrandbits(1) for _ in range(n)], n, 1)
          for n in (0, 1, 7, 8, 9, 100, 1400)]
    assert sign_responses(KEY, rs) == [sign_response(KEY, r) for r in rs]


# -- SISR / MISR ----------------------------------------------------------------

def test_sisr_zero():
    assert sisr_compact(SisrState(8), [0] * 100) == 0


def test_sisr_is_polynomial_remainder():
    rng = random.Random(6)
    for n in (3, 4, 8, 16, 32):
        p = _char_poly(n, PRIMITIVE_TAPS[n])
        for L in (1, n - 1, n, n + 1, 3 * n + 5):
            bits = [rng.getrandbits(1) for _ in range(max(L, 0))]
            m = int("".join(map(str, bits)) or "0", 2)
            assert sisr_compact(SisrState(n), bits) == _gf2_mod(m, p)


def test_sisr_exhaustive_n3_l5():
    counts = Counter(sisr_compact(SisrState(3), bits) for bits in itertools.product((0, 1), repeat=5))
    assert len(counts) == 8
    assert set(counts.values()) == {4}


def test_sisr_short_response_stays_in_range():
    s = SisrState(8)
    v = sisr_compact(s, [1, 0, 1])
    assert 0 <= v < 256 and v == 0b101
    assert not sr_signature_valid(8, 3)
    assert sr_signature_valid(8, 9)


def test_sisr_state_persists_across_calls():
    s = SisrState(5)
    bits = [1, 0, 1, 1, 0, 1, 1, 1, 0, 0, 1]
    sisr_compact(s, bits[:4])
    assert sisr_compact(s, bits[4:]) == sisr_compact(SisrState(5), bits)


def test_sisr_rejects_bad_widths():
    with pytest.raises(ValueError):
        SisrState(0)
    with pytest.raises(ValueError):
        SisrState(4, (5, 1))


def test_misr_zero_and_single_slice():
    assert misr_compact(4, None, [[0] * 4] * 10) == 0
    assert misr_compact(4, None, [0b1011]) == 0b1011
    assert misr_compact(4, None, [[1, 1, 0, 1]]) == 0b1011


def test_misr_hand_trace():
    # x^4 + x^3 + 1: feedback mask 1001
    # 0000 -> shift 0000 ^ 1011 = 1011
    # 1011 -> shift 0110, top set: ^1001 = 1111; ^0110 = 1001
    # 1001 -> shift 0010, top set: ^1001 = 1011; ^1100 = 0111
    assert misr_compact(4, (4, 3), [0b1011, 0b0110, 0b1100]) == 0b0111


def test_misr_linearity():
    rng = random.Random(7)
    a = [rng.getrandbits(8) for _ in range(30)]
    b = [rng.getrandbits(8) for _ in range(30)]
    ab = [x ^ y for x, y in zip(a, b)]
    assert misr_compact(8, None, ab) == misr_compact(8, None, a) ^ misr_compact(8, None, b)


def test_fold_and_pad():
    assert fold_slice([1, 1], 4) == 0b0011
    # column j gets outputs j, j+3, ...
    assert fold_slice([1, 0, 1, 1, 1], 3) == 0b110


def test_primitive_table_is_primitive():
    sympy = pytest.importorskip("sympy")
    assert sorted(PRIMITIVE_TAPS) == list(range(1, 33))
    for n, taps in PRIMITIVE_TAPS.items():
        p = _char_poly(n, [t for t in taps if t < n])
        order = 2 ** n - 1
        # x has order exactly 2**n - 1 modulo p
        assert _gf2_powmod(0b10, order, p) == 1
        for q in sympy.factorint(order):
            assert _gf2_powmod(0b10, order // q, p) != 1, (n, q)


# -- formulas -----------------------------------------------------------------

def test_pa_sr_values():
    assert pa_sr(2, 4) == Fraction(3, 15) == Fraction(1, 5)
    for n in (1, 4, 16, 32):
        assert abs(float(pa_sr(n, n + 64)) - 2.0 ** -n) < 1e-9
    with pytest.raises(DomainError):
        pa_sr(4, 4)
    # exact at sizes far beyond float range
    big = pa_sr(32, 62160)
    assert isinstance(big, Fraction) and abs(float(big) - 2.0 ** -32) < 1e-15


def test_pa_sr_matches_preimage_counting():
    for n in (2, 3):
        for L in range(n + 1, 9):
            counts = Counter(sisr_compact(SisrState(n), b) for b in itertools.product((0, 1), repeat=L))
            total = 2 ** L
            emp = Fraction(sum(c * (c - 1) for c in counts.values()), total * (total - 1))
            assert emp == pa_sr(n, L)


def test_cr_sr():
    assert cr_sr(8, 32) == Fraction(3, 4) == 0.75
    assert float(cr_sr(16, 10 ** 9)) > 0.99999
    with pytest.raises(DomainError):
        cr_sr(128, 128)


def test_pa_kmac():
    assert pa_kmac(256) == Fraction(1, 2 ** 128)
    assert pa_kmac(512) == Fraction(1, 2 ** 256)
    assert pa_kmac(2) == Fraction(1, 2)


@pytest.mark.parametrize("name", iscas85.CIRCUITS)
def test_cr_kmac_reference_cells(name):
    row = iscas85.REFERENCE[name]
    assert row.response_bits == row.po_count * row.pattern_count
    assert round(float(100 * cr_kmac(256, row.response_bits)), 2) == row.compaction_rate_pct


def test_cr_kmac_edges():
    assert cr_kmac(256, 256) == 0
    assert cr_kmac(256, 14) < 0
    with pytest.raises(DomainError):
        cr_kmac(256, 0)


# -- aliasing analysis -----------------------------------------------------------

def test_aliasing_c17():
    c17 = iscas85.load("c17")
    rep = aliasing_analysis(c17, patterns_for_seed(1, 5, 7), KEY)
    assert rep.response_length_bits == 14
    assert round(100 * rep.compaction_rate, 2) == -1728.57
    assert rep.aliased_fault_ids == () and rep.aliasing_rate == 0.0
    assert rep.faults_total == 46 and 0 < rep.faults_detected <= 46


def test_aliasing_c432():
    n = iscas85.load("c432")
    rep = aliasing_analysis(n, patterns_for_seed(1, len(n.inputs), 63), KEY)
    assert rep.response_length_bits == 441
    assert round(100 * rep.compaction_rate, 2) == 41.95
    assert rep.aliasing_rate == 0.0


def test_tiny_digest_aliases_and_is_consistent():
    # at d=8 a few hundred response classes must hit the golden signature now and then
    n = iscas85.load("c880")
    pats = patterns_for_seed(5, len(n.inputs), 40)
    rep = aliasing_analysis(n, pats, KEY, d=8)
    assert rep.aliased_fault_ids
    golden = sign_response(KEY, simulate_batch(n, pats), 8)
    good = simulate_batch(n, pats)
    for fid in rep.aliased_fault_ids[:20]:
        bad = simulate_faulty(n, fid, pats)
        assert bad != good
        assert sign_response(KEY, bad, 8) == golden
    assert rep.aliasing_rate == len(rep.aliased_fault_ids) / rep.faults_detected


def test_no_detected_faults_means_zero_rate():
    rep = AliasingReport("x", 1, 1, 1, -255.0, 4, 0, ())
    assert rep.aliasing_rate == 0.0


def test_aliasing_needs_patterns():
    with pytest.raises(ValueError):
        aliasing_analysis(iscas85.load("c17"), [], KEY)


def test_report_rendering():
    rep = AliasingReport("c17", 2, 7, 14, -17.2857142857, 46, 17, ())
    assert rep.csv_row() == ["c17", "2", "7", "14", "-1728.57", "0.00"]
    table = format_table([rep])
    assert "-1728.57" in table and table.splitlines()[0].split()[0] == "circuit"
