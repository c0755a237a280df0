import numpy as np
import pytest
from hypothesis import given, strategies as st

from unicodec.core import DomainError
from unicodec.outer import (CRC11, BchSpec, CrcSpec, GF2m, bch_decode, bch_decode_batch,
                            bch_encode, crc_append, crc_bits, crc_check, dvbs2_bch)


def long_division_crc(bits, full_poly):
    """Bitwise remainder of msg(x) * x^d modulo g(x) (oracle)."""
    d = full_poly.bit_length() - 1
    reg = list(bits) + [0] * d
    g = [(full_poly >> (d - i)) & 1 for i in range(d + 1)]
    for i in range(len(bits)):
        if reg[i]:
            for j in range(d + 1):
                reg[i + j] ^= g[j]
    return reg[-d:]


def poly_mod(a, g):
    """GF(2)[x] remainder with polynomials as ints (oracle)."""
    dg = g.bit_length() - 1
    while a and a.bit_length() - 1 >= dg:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def word_poly(word):
    """Word as a polynomial, first bit = highest power."""
    return int("".join(map(str, word.tolist())), 2)


# ---------------------------------------------------------------------------
# CRC


def test_crc11_polynomial():
    assert CRC11.degree == 11
    assert CRC11.full == (1 << 11) | (1 << 10) | (1 << 9) | (1 << 5) | 1
    assert CRC11.to_hex() == "0xe21"
    assert CrcSpec.from_full(0xE21) == CRC11


def test_crc11_frozen_vector():
    msg = np.array([(i * 7 + 3) % 5 < 2 for i in range(117)], dtype=np.uint8)
    ref = long_division_crc(msg.tolist(), 0xE21)
    assert crc_bits(msg, CRC11).tolist() == ref
    # frozen from the long-division oracle
    assert "".join(map(str, ref)) == "11000001101"


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 200))
def test_crc_matches_long_division(seed, k):
    msg = np.random.default_rng(seed).integers(0, 2, k, dtype=np.uint8)
    assert crc_bits(msg, CRC11).tolist() == long_division_crc(msg.tolist(), 0xE21)
    crc24 = CrcSpec.from_full(0x1864CFB)
    assert crc_bits(msg, crc24).tolist() == long_division_crc(msg.tolist(), 0x1864CFB)


def test_crc_append_check_round_trip():
    msg = np.random.default_rng(0).integers(0, 2, (10_000, 128), dtype=np.uint8)
    word = crc_append(msg, CRC11)
    assert word.shape == (10_000, 139)
    assert crc_check(word, CRC11).all()
    assert crc_check(word[0], CRC11) is True


def test_crc_detects_single_and_burst_errors():
    msg = np.random.default_rng(1).integers(0, 2, 128, dtype=np.uint8)
    word = crc_append(msg, CRC11)
    for i in range(word.size):
        bad = word.copy()
        bad[i] ^= 1
        assert not crc_check(bad, CRC11)
    rng = np.random.default_rng(2)
    for _ in range(500):
        length = int(rng.integers(2, 12))
        start = int(rng.integers(0, word.size - length + 1))
        pattern = rng.integers(0, 2, length, dtype=np.uint8)
        pattern[0] = pattern[-1] = 1
        bad = word.copy()
        bad[start:start + length] ^= pattern
        assert not crc_check(bad, CRC11)


def test_crc_spec_validation():
    with pytest.raises(DomainError):
        CrcSpec(3, 0b1000)
    with pytest.raises(DomainError):
        CrcSpec(3, 0b110)


# ---------------------------------------------------------------------------
# GF(2^m)


def test_gf256_axioms_exhaustive():
    gf = GF2m(8, 0x11D)
    for a in range(256):
        for b in range(256):
            assert gf.mul(a, b) == poly_mod(_clmul(a, b), 0x11D)
    for a in range(1, 256):
        assert gf.mul(a, gf.inv(a)) == 1
    assert len({gf.pow_alpha(e) for e in range(255)}) == 255
    rng = np.random.default_rng(0)
    for a, b, c in rng.integers(0, 256, (500, 3)):
        a, b, c = int(a), int(b), int(c)
        assert gf.mul(a, b ^ c) == gf.mul(a, b) ^ gf.mul(a, c)
        assert gf.mul(gf.mul(a, b), c) == gf.mul(a, gf.mul(b, c))
    with pytest.raises(ZeroDivisionError):
        gf.inv(0)


def _clmul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def test_gf_rejects_non_primitive():
    with pytest.raises(DomainError):
        GF2m(8, 0x11B)  # irreducible, but x has order 51
    with pytest.raises(DomainError):
        GF2m(8, 0x1D)


def test_minimal_polynomial_has_its_root():
    gf = GF2m(8, 0x11D)
    for j in (1, 3, 5, 7, 85):
        mp = gf.minimal_polynomial(j)
        root, acc, power = gf.pow_alpha(j), 0, 1
        for i in range(mp.bit_length()):
            if (mp >> i) & 1:
                acc ^= power
            power = gf.mul(power, root)
        assert acc == 0
    assert gf.minimal_polynomial(1) == 0x11D


# ---------------------------------------------------------------------------
# BCH


@pytest.fixture(scope="module")
def bch255():
    return BchSpec(8, 2, 0x11D)


def test_bch_parameters(bch255):
    assert (bch255.length, bch255.k, bch255.parity_bits) == (255, 239, 16)
    assert poly_mod((1 << 255) | 1, bch255.generator) == 0


def test_dvbs2_bch_parameters():
    s = dvbs2_bch(32400, 12)
    assert (s.k, s.parity_bits) == (32208, 192)
    assert dvbs2_bch(57600, 8).k == 57472
    # factors g2 and g3 of the standard's generator table
    assert s.field_.minimal_polynomial(3) == (1 << 16) | 0x173
    assert s.field_.minimal_polynomial(5) == 0x10FBD


def test_bch_codewords_are_multiples_of_generator(bch255):
    msg = np.random.default_rng(0).integers(0, 2, (50, bch255.k), dtype=np.uint8)
    for w in bch_encode(msg, bch255):
        assert poly_mod(word_poly(w), bch255.generator) == 0


@pytest.mark.parametrize("n", [None, 100])
def test_bch_corrects_up_to_t(n):
    spec = BchSpec(8, 2, 0x11D, n=n)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        msg = rng.integers(0, 2, spec.k, dtype=np.uint8)
        cw = bch_encode(msg, spec)
        bad = cw.copy()
        e = int(rng.integers(0, spec.t + 1))
        bad[rng.choice(spec.length, e, replace=False)] ^= 1
        res = bch_decode(bad, spec)
        assert res.ok and res.n_errors == e
        assert np.array_equal(res.word, cw)


def test_bch_beyond_t_is_flagged_or_miscorrects_to_codeword(bch255):
    rng = np.random.default_rng(4)
    flagged = 0
    for _ in range(1000):
        cw = bch_encode(rng.integers(0, 2, bch255.k, dtype=np.uint8), bch255)
        bad = cw.copy()
        bad[rng.choice(255, 3, replace=False)] ^= 1
        res = bch_decode(bad, bch255)
        if not res.ok:
            flagged += 1
            assert np.array_equal(res.word, bad)
        else:
            assert not np.array_equal(res.word, cw)
            assert np.array_equal(bch_encode(res.word[:bch255.k], bch255), res.word)
    assert flagged > 500


def test_bch_batch_matches_single(bch255):
    rng = np.random.default_rng(5)
    words = bch_encode(rng.integers(0, 2, (30, bch255.k), dtype=np.uint8), bch255)
    words ^= (rng.random(words.shape) < 0.01).astype(np.uint8)
    out, ok = bch_decode_batch(words, bch255)
    for i in range(30):
        r = bch_decode(words[i], bch255)
        assert np.array_equal(out[i], r.word) and ok[i] == r.ok


def test_dvbs2_bch_corrects_t_errors():
    spec = dvbs2_bch(32400, 12)
    rng = np.random.default_rng(6)
    cw = bch_encode(rng.integers(0, 2, spec.k, dtype=np.uint8), spec)
    bad = cw.copy()
    bad[rng.choice(spec.length, 12, replace=False)] ^= 1
    res = bch_decode(bad, spec)
    assert res.ok and np.array_equal(res.word, cw)


def test_bch_errors(bch255):
    with pytest.raises(DomainError):
        bch_encode(np.zeros(10, np.uint8), bch255)
    with pytest.raises(DomainError):
        bch_decode(np.zeros(10, np.uint8), bch255)
    with pytest.raises(DomainError):
        BchSpec(8, 2, 0x11D, n=300)
