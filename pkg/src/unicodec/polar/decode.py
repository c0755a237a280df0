"""Successive-cancellation family decoders for polar codes.

All decoders are batched: LLR input of shape ``(B, N)`` (or a single frame of
shape ``(N,)``) is decoded in one recursive pass over the polar factor tree,
with the frame axis vectorized.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core import ConstructionError, DomainError, SeedSpec, as_batch
from ..outer import crc_check
from .construct import PolarCodeSpec, polar_transform


def f_minsum(a, b):
    m = np.minimum(np.abs(a), np.abs(b))
    return np.where((a < 0) ^ (b < 0), -m, m)


def f_exact(a, b):
    """Exact check-node combination (box-plus) in a numerically stable form."""
    return (f_minsum(a, b) + np.log1p(np.exp(-np.abs(a + b)))
            - np.log1p(np.exp(-np.abs(a - b))))


def g_update(a, b, beta):
    return np.where(beta.astype(bool), b - a, b + a)


_KERNELS = {"minsum": f_minsum, "exact": f_exact}


class NodeKind(Enum):
    RATE0 = "rate0"
    RATE1 = "rate1"
    REP = "rep"
    SPC = "spc"
    GENERIC = "generic"


def classify_node(frozen: np.ndarray) -> NodeKind:
    """Kind of a subtree from the frozen pattern of its leaves."""
    frozen = np.asarray(frozen, dtype=bool)
    if frozen.all():
        return NodeKind.RATE0
    if not frozen.any():
        return NodeKind.RATE1
    if frozen[:-1].all():
        return NodeKind.REP
    if frozen[0] and not frozen[1:].any():
        return NodeKind.SPC
    return NodeKind.GENERIC


@dataclass
class DecodeOutcome:
    """Decoder output; arrays carry a leading frame axis unless a single frame was decoded."""

    message: np.ndarray
    codeword: np.ndarray
    metric: np.ndarray
    crc_ok: np.ndarray | None = None
    iterations: np.ndarray | None = None
    syndrome_ok: np.ndarray | None = None
    posterior: np.ndarray | None = None

    def _squeeze(self) -> "DecodeOutcome":
        pick = lambda v: None if v is None else v[0]
        return DecodeOutcome(self.message[0], self.codeword[0], self.metric[0],
                             pick(self.crc_ok), pick(self.iterations), pick(self.syndrome_ok),
                             pick(self.posterior))


def correlation(codeword, llr) -> np.ndarray:
    """Sum of ``(1 - 2 c_i) * llr_i``; larger is a better match."""
    return np.sum(np.where(np.asarray(codeword, dtype=bool), -llr, llr), axis=-1)


def _outcome(spec: PolarCodeSpec, codeword: np.ndarray, llr: np.ndarray, metric=None) -> DecodeOutcome:
    u = polar_transform(codeword)
    info = u[:, spec.info_set]
    crc_ok = None
    if spec.crc is not None:
        crc_ok = np.atleast_1d(crc_check(info, spec.crc))
        info = info[:, :spec.message_length]
    if metric is None:
        metric = correlation(codeword, llr)
    return DecodeOutcome(info, codeword, metric, crc_ok)


def _check_llr(spec: PolarCodeSpec, llr):
    a, single = as_batch(llr, np.float64)
    if a.shape[-1] != spec.N:
        raise DomainError(f"expected {spec.N} LLRs, got {a.shape[-1]}")
    return a, single


class OpCounter:
    """Counts elementwise f/g kernel evaluations per frame."""

    def __init__(self):
        self.f = 0
        self.g = 0

    @property
    def total(self) -> int:
        return self.f + self.g


# ---------------------------------------------------------------------------
# SC and simplified SC


class _ScTree:
    def __init__(self, spec: PolarCodeSpec, kernel: str, prune: bool, counter: OpCounter | None):
        if kernel not in _KERNELS:
            raise DomainError(f"unknown kernel {kernel!r}")
        if prune and kernel != "minsum":
            raise DomainError("simplified SC is defined for the min-sum kernel")
        self.frozen = spec.frozen_mask
        self.f = _KERNELS[kernel]
        self.prune = prune
        self.counter = counter
        self.kinds: dict[tuple[int, int], NodeKind] = {}

    def kind(self, off: int, size: int) -> NodeKind:
        key = (off, size)
        k = self.kinds.get(key)
        if k is None:
            k = self.kinds[key] = classify_node(self.frozen[off:off + size])
        return k

    def run(self, alpha: np.ndarray, off: int = 0) -> np.ndarray:
        size = alpha.shape[1]
        if size == 1:
            if self.frozen[off]:
                return np.zeros_like(alpha, dtype=np.uint8)
            return (alpha < 0).astype(np.uint8)
        if self.prune:
            kind = self.kind(off, size)
            if kind is NodeKind.RATE0:
                return np.zeros(alpha.shape, dtype=np.uint8)
            if kind is NodeKind.RATE1:
                return (alpha < 0).astype(np.uint8)
            if kind is NodeKind.REP:
                s = alpha
                while s.shape[1] > 1:
                    h = s.shape[1] // 2
                    s = s[:, h:] + s[:, :h]
                    if self.counter:
                        self.counter.g += h
                return np.repeat((s < 0).astype(np.uint8), size, axis=1)
            if kind is NodeKind.SPC:
                beta = (alpha < 0).astype(np.uint8)
                odd = np.bitwise_xor.reduce(beta, axis=1).astype(bool)
                if odd.any():
                    rows = np.flatnonzero(odd)
                    worst = np.argmin(np.abs(alpha[rows]), axis=1)
                    beta[rows, worst] ^= 1
                return beta
        h = size // 2
        a, b = alpha[:, :h], alpha[:, h:]
        if self.counter:
            self.counter.f += h
            self.counter.g += h
        beta1 = self.run(self.f(a, b), off)
        beta2 = self.run(g_update(a, b, beta1), off + h)
        return np.concatenate([beta1 ^ beta2, beta2], axis=1)


def decode_sc(spec: PolarCodeSpec, llr, kernel: str = "minsum",
              counter: OpCounter | None = None) -> DecodeOutcome:
    """Successive cancellation decoding; frozen bits decide 0, ties decide 0."""
    a, single = _check_llr(spec, llr)
    cw = _ScTree(spec, kernel, False, counter).run(a)
    out = _outcome(spec, cw, a)
    return out._squeeze() if single else out


def decode_ssc(spec: PolarCodeSpec, llr, counter: OpCounter | None = None) -> DecodeOutcome:
    """Simplified SC: Rate-0, Rate-1, repetition and SPC subtrees decoded in one step.

    Produces the same decisions as min-sum :func:`decode_sc` whenever no
    intermediate LLR is exactly zero.
    """
    a, single = _check_llr(spec, llr)
    cw = _ScTree(spec, "minsum", True, counter).run(a)
    out = _outcome(spec, cw, a)
    return out._squeeze() if single else out


# ---------------------------------------------------------------------------
# SC list


class _SclTree:
    def __init__(self, spec: PolarCodeSpec, L: int, kernel: str):
        self.frozen = spec.frozen_mask
        self.L = L
        self.f = _KERNELS[kernel]
        self.rate0: dict[tuple[int, int], bool] = {}

    def is_rate0(self, off, size):
        key = (off, size)
        if key not in self.rate0:
            self.rate0[key] = bool(self.frozen[off:off + size].all())
        return self.rate0[key]

    def run(self, alpha: np.ndarray, pm: np.ndarray, off: int = 0):
        """Decode a subtree for all paths; returns (beta, path permutation, metrics)."""
        B, L, size = alpha.shape
        ident = np.broadcast_to(np.arange(L), (B, L))
        if self.is_rate0(off, size):
            pen = np.where(alpha < 0, -alpha, 0.0).sum(axis=2) if size > 1 else np.where(alpha[..., 0] < 0, -alpha[..., 0], 0.0)
            return np.zeros(alpha.shape, dtype=np.uint8), ident, pm + pen
        if size == 1:
            lam = alpha[..., 0]
            mag = np.abs(lam)
            pm0 = pm + np.where(lam < 0, mag, 0.0)
            pm1 = pm + np.where(lam >= 0, mag, 0.0)
            cand = np.stack([pm0, pm1], axis=2).reshape(B, 2 * L)
            order = np.argsort(cand, axis=1, kind="stable")[:, :L]
            new_pm = np.take_along_axis(cand, order, axis=1)
            return (order % 2).astype(np.uint8)[..., None], order // 2, new_pm
        h = size // 2
        a, b = alpha[..., :h], alpha[..., h:]
        beta1, p1, pm = self.run(self.f(a, b), pm, off)
        bi = np.arange(B)[:, None]
        a, b = a[bi, p1], b[bi, p1]
        beta2, p2, pm = self.run(g_update(a, b, beta1), pm, off + h)
        beta1 = beta1[bi, p2]
        return np.concatenate([beta1 ^ beta2, beta2], axis=2), p1[bi, p2], pm


def decode_scl(spec: PolarCodeSpec, llr, list_size: int, kernel: str = "minsum") -> DecodeOutcome:
    """SC list decoding with the hardware-friendly path metric.

    A path is penalized by ``|llr|`` whenever its decision disagrees with the
    LLR sign.  The surviving candidates are the ``L`` lowest metrics, ties
    resolved by (parent path, bit) order.  With a CRC, the best path passing
    the check is returned, else the best path with ``crc_ok = False``.
    """
    if list_size < 1:
        raise DomainError("list size must be >= 1")
    a, single = _check_llr(spec, llr)
    B, N = a.shape
    L = list_size
    pm = np.full((B, L), np.inf)
    pm[:, 0] = 0.0
    alpha = np.repeat(a[:, None, :], L, axis=1)
    beta, _, pm = _SclTree(spec, L, kernel).run(alpha, pm)
    u = polar_transform(beta)
    info = u[..., spec.info_set]
    rank = np.argsort(pm, axis=1, kind="stable")
    if spec.crc is not None:
        ok = crc_check(info.reshape(B * L, -1), spec.crc).reshape(B, L) & np.isfinite(pm)
        ok_sorted = np.take_along_axis(ok, rank, axis=1)
        first = np.where(ok_sorted.any(axis=1), np.argmax(ok_sorted, axis=1), 0)
        pick = rank[np.arange(B), first]
        crc_ok = ok[np.arange(B), pick]
    else:
        pick = rank[:, 0]
        crc_ok = None
    rows = np.arange(B)
    cw = beta[rows, pick]
    msg = info[rows, pick][:, :spec.message_length]
    out = DecodeOutcome(msg, cw, pm[rows, pick], crc_ok)
    return out._squeeze() if single else out


# ---------------------------------------------------------------------------
# Automorphism ensembles


def _transposition_symmetric(info: set, n: int, k: int) -> bool:
    def swap(i):
        if ((i >> k) ^ (i >> (k + 1))) & 1:
            i ^= (1 << k) | (1 << (k + 1))
        return i
    return {swap(i) for i in info} == info


def blta_blocks(spec: PolarCodeSpec) -> list[list[int]]:
    """Bit positions grouped into blocks of mutually exchangeable variables.

    Blocks are listed from the most significant bit downwards; each block is a
    maximal run of adjacent bit positions whose transposition leaves the
    information set invariant.
    """
    info = set(spec.info_set.tolist())
    blocks = [[spec.n - 1]]
    for k in range(spec.n - 2, -1, -1):
        if _transposition_symmetric(info, spec.n, k):
            blocks[-1].append(k)
        else:
            blocks.append([k])
    return blocks


def _random_invertible(size: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        m = rng.integers(0, 2, (size, size), dtype=np.uint8)
        if _gf2_rank(m) == size:
            return m


def _gf2_rank(m: np.ndarray) -> int:
    m = m.copy() % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = np.flatnonzero(m[rank:, c])
        if piv.size == 0:
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        hit = np.flatnonzero(m[:, c])
        hit = hit[hit != rank]
        m[hit] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def affine_permutation(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Position permutation ``x -> A x + b`` on n-bit indices (row/column k = bit k)."""
    n = A.shape[0]
    N = 1 << n
    bits = (np.arange(N)[:, None] >> np.arange(n)) & 1
    img = (bits @ A.T.astype(np.int64) + b) % 2
    return (img << np.arange(n)).sum(axis=1)


def sample_automorphisms(spec: PolarCodeSpec, count: int, seed: SeedSpec) -> list[np.ndarray]:
    """``count`` distinct position permutations from the block-lower-triangular affine group.

    The first permutation is always the identity.  Variable ``k`` may receive
    contributions from variables in its own block or in any block of less
    significant bits.
    """
    if spec.i_min is None:
        raise ConstructionError("code has no automorphism descriptor (construct it from i_min)")
    if count < 1:
        raise DomainError("count must be >= 1")
    n = spec.n
    blocks = blta_blocks(spec)
    rng = seed.rng()
    perms = [np.arange(spec.N)]
    seen = {perms[0].tobytes()}
    attempts = 0
    while len(perms) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise ConstructionError("automorphism group too small for the requested count")
        A = np.zeros((n, n), dtype=np.uint8)
        for bi, blk in enumerate(blocks):
            A[np.ix_(blk, blk)] = _random_invertible(len(blk), rng)
            lower = [k for later in blocks[bi + 1:] for k in later]
            if lower:
                A[np.ix_(blk, lower)] = rng.integers(0, 2, (len(blk), len(lower)), dtype=np.uint8)
        b = rng.integers(0, 2, n)
        p = affine_permutation(A, b)
        key = p.tobytes()
        if key not in seen:
            seen.add(key)
            perms.append(p)
    return perms


def decode_aed(spec: PolarCodeSpec, llr, ensemble_size: int, seed: SeedSpec,
               permutations: list[np.ndarray] | None = None) -> DecodeOutcome:
    """Automorphism ensemble of independent SC decoders, best by correlation."""
    if ensemble_size < 1:
        raise DomainError("ensemble size must be >= 1")
    a, single = _check_llr(spec, llr)
    perms = permutations or sample_automorphisms(spec, ensemble_size, seed)
    perms = perms[:ensemble_size]
    B, N = a.shape
    stacked = np.concatenate([a[:, p] for p in perms], axis=0)
    tree = _ScTree(spec, "minsum", False, None)
    cands = tree.run(stacked).reshape(len(perms), B, N)
    cw = np.empty_like(cands)
    for e, p in enumerate(perms):
        cw[e][:, p] = cands[e]
    corr = correlation(cw, a[None, :, :])
    best = np.argmax(corr, axis=0)
    chosen = cw[best, np.arange(B)]
    out = _outcome(spec, chosen, a, corr[best, np.arange(B)])
    return out._squeeze() if single else out
