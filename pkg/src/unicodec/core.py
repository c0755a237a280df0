"""Shared primitives: bit/LLR conventions, the BPSK-AWGN channel and seeding.

LLRs are natural-log ratios ``log P(b=0|y) / P(b=1|y)``; positive values
favour bit 0.  Every decoder in the package accepts and produces arrays whose
last axis is the code dimension, with an optional leading batch axis of
independent frames.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

#: Magnitude used for "infinitely" reliable LLRs (frozen / known bits).
LLR_SAT = 1e30


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class ConstructionError(ValueError):
    """Raised when a code cannot be built with the requested parameters."""


def ebn0_to_sigma(ebn0_db: float, rate) -> float:
    """Noise standard deviation for unit-energy BPSK at the given Eb/N0."""
    rate = float(rate)
    if not rate > 0 or rate > 1:
        raise DomainError(f"code rate must lie in (0, 1], got {rate}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


@dataclass(frozen=True)
class SeedSpec:
    """Reproducible random stream: ``(master_seed, stream_id)`` fixes all draws.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    distinct stream ids (and distinct ``extra`` keys passed to :meth:`rng`)
    give statistically independent Philox generators.
    """

    master_seed: int = 0
    stream_id: int = 0

    def rng(self, *extra: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_id, *extra))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


@dataclass(frozen=True)
class ChannelSpec:
    ebn0_db: float
    code_rate: Fraction | float
    kind: str = "biawgn"

    def __post_init__(self):
        if self.kind != "biawgn":
            raise DomainError(f"unsupported channel kind {self.kind!r}")

    @property
    def sigma(self) -> float:
        return ebn0_to_sigma(self.ebn0_db, self.code_rate)


def bpsk_awgn_llr(codeword, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """BPSK over AWGN with noise std ``sigma``; returns channel LLRs ``2y/sigma^2``."""
    x = 1.0 - 2.0 * np.asarray(codeword, dtype=np.float64)
    if sigma * sigma == 0:  # noiseless (or variance below float range)
        return x * LLR_SAT
    y = x + sigma * rng.standard_normal(x.shape)
    return np.clip(2.0 * y / (sigma * sigma), -LLR_SAT, LLR_SAT)


def transmit_bpsk_awgn(codeword, channel: ChannelSpec, seed: SeedSpec) -> np.ndarray:
    return bpsk_awgn_llr(codeword, channel.sigma, seed.rng())


def hard_decision(llr) -> np.ndarray:
    """Bit 0 iff ``llr >= 0`` (exact zeros decide 0)."""
    return (np.asarray(llr) < 0).astype(np.uint8)


def as_batch(x, dtype=None) -> tuple[np.ndarray, bool]:
    """Promote a single frame to a batch of one; report whether it was single."""
    a = np.asarray(x, dtype=dtype)
    if a.ndim == 1:
        return a[None, :], True
    return a, False


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054):
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
