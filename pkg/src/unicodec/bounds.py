"""Finite-blocklength reference curve for the binary-input AWGN channel.

The converse is evaluated with the normal approximation

    eps ~ Q((n C - k + 0.5 log2 n) / sqrt(n V))

where ``C`` and ``V`` are capacity and dispersion in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .core import DomainError, ebn0_to_sigma

_TINY = np.finfo(float).tiny


@lru_cache(maxsize=4)
def _nodes(count: int):
    x, w = np.polynomial.hermite_e.hermegauss(count)
    return x, w / np.sqrt(2 * np.pi)


def capacity_dispersion_biawgn(sigma: float, nodes: int = 200) -> tuple[float, float]:
    """Capacity ``C`` (bits) and dispersion ``V`` (bits^2) with BPSK input.

    The information density for input +1 is ``1 - log2(1 + exp(-2y/sigma^2))``
    with ``y = 1 + sigma z``; both moments are Gauss-Hermite quadratures over
    ``z``.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    x, w = _nodes(nodes)
    y = 1.0 + sigma * x
    i = 1.0 - np.logaddexp(0.0, -2.0 * y / sigma ** 2) / np.log(2.0)
    C = float(w @ i)
    V = float(w @ (i - C) ** 2)
    return C, V


@dataclass(frozen=True)
class BoundPoint:
    ebn0_db: float
    n: int
    k: int
    fer_bound: float


def normal_approx_fer(n: int, k: int, ebn0_db: float) -> float:
    """Normal approximation of the minimum FER for an ``(n, k)`` code; ``Eb/N0`` uses ``R = k/n``."""
    if n < 1 or not 0 < k < n:
        raise DomainError("need n >= 1 and 0 < k < n")
    C, V = capacity_dispersion_biawgn(ebn0_to_sigma(ebn0_db, k / n))
    arg = (n * C - k + 0.5 * np.log2(n)) / np.sqrt(n * V)
    return float(np.clip(ndtr(-arg), _TINY, 1 - 1e-16))


def bound_curve(n: int, k: int, ebn0_db) -> list[BoundPoint]:
    return [BoundPoint(float(s), n, k, normal_approx_fer(n, k, s)) for s in ebn0_db]


def ebn0_for_fer(n: int, k: int, fer: float, lo: float = -2.0, hi: float = 15.0) -> float:
    """Eb/N0 (dB) at which the normal approximation reaches ``fer``."""
    if not 0 < fer < 1:
        raise DomainError("fer must lie in (0, 1)")
    f = lambda s: np.log(normal_approx_fer(n, k, s)) - np.log(fer)
    return float(brentq(f, lo, hi, xtol=1e-9))
