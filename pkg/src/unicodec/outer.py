"""Outer codes: CRC over GF(2) and binary BCH with Berlekamp-Massey decoding.

Bit vectors are MSB-first: element ``i`` of a length-``n`` word is the
coefficient of ``x^(n-1-i)``.  CRCs use zero initial value and zero final XOR.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import DomainError, as_batch

# ---------------------------------------------------------------------------
# GF(2) polynomial helpers on Python ints (bit k = coefficient of x^k)


def _deg(p: int) -> int:
    return p.bit_length() - 1


def _gf2_mod(a: int, g: int) -> int:
    dg = _deg(g)
    while a and _deg(a) >= dg:
        a ^= g << (_deg(a) - dg)
    return a


def _gf2_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


@lru_cache(maxsize=64)
def _parity_matrix(g: int, k: int) -> np.ndarray:
    """Row ``i`` holds ``x^(deg g + k-1-i) mod g`` as a length-``deg g`` MSB-first vector."""
    d = _deg(g)
    rems = np.empty(k, dtype=object)
    r = _gf2_mod(1 << d, g)
    for i in range(k - 1, -1, -1):
        rems[i] = r
        r <<= 1
        if r >> d:
            r ^= g
    nbytes = (d + 7) // 8
    raw = b"".join(int(v).to_bytes(nbytes, "big") for v in rems)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(k, nbytes), axis=1)
    return np.ascontiguousarray(bits[:, 8 * nbytes - d:])


def _systematic_parity(msg: np.ndarray, g: int) -> np.ndarray:
    P = _parity_matrix(g, msg.shape[-1])
    return (msg.astype(np.int64) @ P.astype(np.int64) & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# CRC


@dataclass(frozen=True)
class CrcSpec:
    """CRC of ``degree`` bits; ``poly`` is the generator without its leading term."""

    degree: int
    poly: int

    def __post_init__(self):
        if self.degree < 1 or self.poly >> self.degree:
            raise DomainError(f"polynomial {self.poly:#x} does not fit degree {self.degree}")
        if not self.poly & 1:
            raise DomainError("CRC polynomial must have a nonzero constant term")

    @classmethod
    def from_full(cls, full: int) -> "CrcSpec":
        d = _deg(full)
        return cls(d, full ^ (1 << d))

    @property
    def full(self) -> int:
        return self.poly | (1 << self.degree)

    def to_hex(self) -> str:
        return f"{self.full:#x}"


#: 5G NR CRC-11, g(x) = x^11 + x^10 + x^9 + x^5 + 1.
CRC11 = CrcSpec.from_full(0xE21)


def crc_bits(msg, crc: CrcSpec) -> np.ndarray:
    """CRC remainder of ``msg(x) * x^degree`` for one word or a batch."""
    m, single = as_batch(msg, np.uint8)
    r = _systematic_parity(m, crc.full)
    return r[0] if single else r


def crc_append(msg, crc: CrcSpec) -> np.ndarray:
    m = np.asarray(msg, dtype=np.uint8)
    return np.concatenate([m, crc_bits(m, crc)], axis=-1)


def crc_check(word, crc: CrcSpec):
    """True where the word (message followed by CRC) has zero remainder."""
    w = np.asarray(word, dtype=np.uint8)
    ok = np.all(crc_bits(w[..., :-crc.degree], crc) == w[..., -crc.degree:], axis=-1)
    return bool(ok) if w.ndim == 1 else ok


# ---------------------------------------------------------------------------
# GF(2^m)


class GF2m:
    """Binary extension field with exp/log tables (elements as ints)."""

    def __init__(self, m: int, prim_poly: int):
        if _deg(prim_poly) != m:
            raise DomainError("primitive polynomial degree must equal m")
        self.m = m
        self.order = (1 << m) - 1
        self.prim_poly = prim_poly
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(1 << m, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            exp[i] = x
            if log[x] != -1:
                raise DomainError(f"{prim_poly:#x} is not primitive")
            log[x] = i
            x <<= 1
            if x >> m:
                x ^= prim_poly
        exp[self.order:] = exp[:self.order]
        self.exp = exp
        self.log = log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def pow_alpha(self, e: int) -> int:
        return int(self.exp[e % self.order])

    def minimal_polynomial(self, j: int) -> int:
        """Minimal polynomial of alpha^j over GF(2), as a GF(2) int polynomial."""
        coset, c = [], j % self.order
        while c not in coset:
            coset.append(c)
            c = 2 * c % self.order
        poly = [1]  # coefficients over GF(2^m), lowest degree first
        for c in coset:
            root = self.pow_alpha(c)
            nxt = [0] * (len(poly) + 1)
            for i, a in enumerate(poly):
                nxt[i + 1] ^= a
                nxt[i] ^= self.mul(a, root)
            poly = nxt
        if any(a not in (0, 1) for a in poly):
            raise AssertionError("minimal polynomial left GF(2)")
        return sum(a << i for i, a in enumerate(poly))


# ---------------------------------------------------------------------------
# BCH


@dataclass(frozen=True)
class BchSpec:
    """Narrow-sense binary BCH code, optionally shortened to length ``n``."""

    m: int
    t: int
    prim_poly: int
    n: int | None = None
    field_: GF2m = field(init=False, repr=False, compare=False)
    generator: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gf = GF2m(self.m, self.prim_poly)
        g, seen = 1, set()
        for j in range(1, 2 * self.t + 1, 2):
            mp = gf.minimal_polynomial(j)
            if mp not in seen:
                seen.add(mp)
                g = _gf2_mul(g, mp)
        object.__setattr__(self, "field_", gf)
        object.__setattr__(self, "generator", g)
        n = self.length
        if n > gf.order or n <= self.parity_bits:
            raise DomainError(f"length {n} invalid for m={self.m}, t={self.t}")

    @property
    def length(self) -> int:
        return self.n if self.n is not None else (1 << self.m) - 1

    @property
    def parity_bits(self) -> int:
        return _deg(self.generator)

    @property
    def k(self) -> int:
        return self.length - self.parity_bits


#: DVB-S2 normal-frame outer BCH for the rate-1/2 LDPC code.
def dvbs2_bch(n_bch: int = 32400, t: int = 12) -> BchSpec:
    return BchSpec(m=16, t=t, prim_poly=(1 << 16) | 0b101101, n=n_bch)


def bch_encode(msg, spec: BchSpec) -> np.ndarray:
    """Systematic encoding: ``[message | parity]``."""
    m = np.asarray(msg, dtype=np.uint8)
    if m.shape[-1] != spec.k:
        raise DomainError(f"message length {m.shape[-1]} != k={spec.k}")
    b, single = as_batch(m)
    word = np.concatenate([b, _systematic_parity(b, spec.generator)], axis=-1)
    return word[0] if single else word


@dataclass
class BchResult:
    word: np.ndarray
    n_errors: int
    ok: bool


def _syndromes(word: np.ndarray, spec: BchSpec) -> list[int]:
    gf = spec.field_
    n = spec.length
    pos = (n - 1 - np.flatnonzero(word)).astype(np.int64)
    out = []
    for j in range(1, 2 * spec.t + 1):
        if pos.size == 0:
            out.append(0)
            continue
        out.append(int(np.bitwise_xor.reduce(gf.exp[(pos * j) % gf.order])))
    return out


def _berlekamp_massey(S: list[int], gf: GF2m) -> list[int]:
    C, B = [1], [1]
    L, shift, b = 0, 1, 1
    for r in range(len(S)):
        d = S[r]
        for i in range(1, L + 1):
            if i < len(C):
                d ^= gf.mul(C[i], S[r - i])
        if d == 0:
            shift += 1
            continue
        coef = gf.mul(d, gf.inv(b))
        T = list(C)
        need = len(B) + shift
        if len(C) < need:
            C = C + [0] * (need - len(C))
        for i, bi in enumerate(B):
            C[i + shift] ^= gf.mul(coef, bi)
        if 2 * L <= r:
            L, B, b, shift = r + 1 - L, T, d, 1
        else:
            shift += 1
    while len(C) > 1 and C[-1] == 0:
        C.pop()
    return C


def _chien(locator: list[int], spec: BchSpec) -> np.ndarray:
    """Exponents p in [0, n) with locator(alpha^-p) == 0."""
    gf = spec.field_
    p = np.arange(spec.length, dtype=np.int64)
    acc = np.zeros(spec.length, dtype=np.int64)
    for k, lam in enumerate(locator):
        if lam == 0:
            continue
        acc ^= gf.exp[(gf.log[lam] - p * k) % gf.order]
    return np.flatnonzero(acc == 0)


def bch_decode(word, spec: BchSpec) -> BchResult:
    """Correct up to ``t`` errors; failure is reported through ``ok=False``.

    On failure the received word is returned unchanged.
    """
    w = np.asarray(word, dtype=np.uint8)
    if w.shape != (spec.length,):
        raise DomainError(f"word length {w.shape} != n={spec.length}")
    S = _syndromes(w, spec)
    if not any(S):
        return BchResult(w.copy(), 0, True)
    locator = _berlekamp_massey(S, spec.field_)
    deg = len(locator) - 1
    if deg > spec.t:
        return BchResult(w.copy(), 0, False)
    roots = _chien(locator, spec)
    if roots.size != deg:
        return BchResult(w.copy(), 0, False)
    out = w.copy()
    out[spec.length - 1 - roots] ^= 1
    return BchResult(out, deg, True)


def bch_decode_batch(words, spec: BchSpec) -> tuple[np.ndarray, np.ndarray]:
    """Decode each row; returns corrected words and per-row success flags."""
    w = np.asarray(words, dtype=np.uint8)
    out = np.empty_like(w)
    ok = np.empty(w.shape[0], dtype=bool)
    for i in range(w.shape[0]):
        res = bch_decode(w[i], spec)
        out[i], ok[i] = res.word, res.ok
    return out, ok
