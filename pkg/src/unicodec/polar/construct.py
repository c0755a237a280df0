"""Polar code construction.

Indexing follows ``x = u G_N`` with ``G_N`` the ``n``-fold Kronecker power of
``[[1, 0], [1, 1]]``.  Bit ``n-1`` (the MSB) of a synthetic-channel index
selects the first polarization step: 0 is the degraded (check-node) branch,
1 the upgraded (variable-node) branch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import log_ndtr

from ..core import LLR_SAT, ConstructionError, DomainError, ebn0_to_sigma
from ..outer import CrcSpec


def _log2_exact(N: int) -> int:
    n = int(N).bit_length() - 1
    if N < 1 or (1 << n) != N:
        raise DomainError(f"length {N} is not a power of two")
    return n


def polar_transform(u) -> np.ndarray:
    """Compute ``u G_N`` over GF(2) along the last axis in ``log2 N`` butterfly passes."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    n = _log2_exact(N)
    lead = x.shape[:-1]
    for s in range(n):
        h = 1 << s
        v = x.reshape(*lead, N // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
    return x


# ---------------------------------------------------------------------------
# Gaussian-approximation density evolution

_A, _B, _C = -0.4527, 0.86, 0.0218
_X0 = 10.0


_X1 = 1.0  # below this the tabulated exact phi replaces Chung's fit


def _exact_psi(x):
    """``1 - phi(x)`` by Gauss-Hermite quadrature, E[tanh(u/2)] with u ~ N(x, 2x)."""
    z, w = np.polynomial.hermite_e.hermegauss(80)
    x = np.asarray(x, dtype=np.float64)[:, None]
    return (np.tanh((x + np.sqrt(2 * x) * z) / 2) * (w / w.sum())).sum(axis=1)


def _chung_log_phi(x):
    return np.minimum(_A * np.maximum(x, 0.0) ** _B + _C, 0.0)


# log-log table of psi on (1e-12, _X1], scaled to meet Chung's fit at _X1
_LX = np.linspace(np.log(1e-12), np.log(_X1), 600)
_PSI_X1 = -np.expm1(_chung_log_phi(_X1))
_LPSI = np.log(_exact_psi(np.exp(_LX)))
_LPSI += np.log(_PSI_X1) - _LPSI[-1]


def _psi_small(x):
    """Scaled exact ``1 - phi`` for ``0 <= x <= _X1`` (linear below the table)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(_LPSI[0]) * x / np.exp(_LX[0])
    inside = x > np.exp(_LX[0])
    out[inside] = np.exp(np.interp(np.log(x[inside]), _LX, _LPSI))
    return out


def _psi_small_inv(psi):
    psi = np.asarray(psi, dtype=np.float64)
    out = psi * np.exp(_LX[0]) / np.exp(_LPSI[0])
    inside = psi > np.exp(_LPSI[0])
    out[inside] = np.exp(np.interp(np.log(psi[inside]), _LPSI, _LX))
    return out


def _log_phi(x):
    """Natural log of the GA phi function.

    Exact (tabulated) below ``_X1``, Chung's two-piece approximation above.
    """
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    out = np.zeros_like(x)
    tiny = x < _X1
    out[tiny] = np.log1p(-_psi_small(x[tiny]))
    mid = (x >= _X1) & (x < _X0)
    out[mid] = _chung_log_phi(x[mid])
    xl = x[x >= _X0]
    out[x >= _X0] = 0.5 * np.log(np.pi / xl) - xl / 4 + np.log1p(-10.0 / (7.0 * xl))
    return out


_LOG_PHI_X0 = _A * _X0 ** _B + _C
_LOG_PHI_X1 = float(_chung_log_phi(_X1))


def _log_phi_inv(ly):
    """Inverse of :func:`_log_phi` (decreasing), solved piecewise."""
    ly = np.minimum(np.asarray(ly, dtype=np.float64), 0.0)
    x = np.empty_like(ly)
    tiny = ly > _LOG_PHI_X1
    x[tiny] = _psi_small_inv(-np.expm1(ly[tiny]))
    first = (ly >= _LOG_PHI_X0) & ~tiny
    x[first] = ((_C - ly[first]) / -_A) ** (1.0 / _B)
    rest = ly < _LOG_PHI_X0
    if rest.any():
        target = ly[rest]
        lo = np.full_like(target, _X0)
        hi = np.maximum(-4.0 * target, 2 * _X0)
        while np.any(_log_phi(hi) > target):
            hi = np.where(_log_phi(hi) > target, 2 * hi, hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = _log_phi(mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        x[rest] = 0.5 * (lo + hi)
    return x


def ga_check(mu):
    """Mean LLR after a check-node (f) combination of two i.i.d. Gaussian LLRs.

    Small means are combined as ``psi_out = psi**2`` to avoid cancellation.
    """
    mu = np.maximum(np.asarray(mu, dtype=np.float64), 0.0)
    out = np.empty_like(mu)
    tiny = mu < _X1
    out[tiny] = _psi_small_inv(_psi_small(mu[tiny]) ** 2)
    lp = _log_phi(mu[~tiny])
    out[~tiny] = _log_phi_inv(lp + np.log(2.0 - np.exp(lp)))
    return out


def density_evolution_reliabilities(n: int, design_sigma: float) -> np.ndarray:
    """Mean LLR of every synthetic channel under the Gaussian approximation.

    Larger values are more reliable.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if not design_sigma > 0:
        raise DomainError(f"design sigma must be positive, got {design_sigma}")
    mu = np.array([2.0 / design_sigma ** 2])
    for _ in range(n):
        nxt = np.empty(2 * mu.size)
        nxt[0::2] = ga_check(mu)
        nxt[1::2] = 2.0 * mu
        mu = nxt
    return mu


def _channel_paths(n: int) -> np.ndarray:
    """Per channel, the branch bits from the first polarization step to the last."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(bool)


def _log_error_prob(mu) -> np.ndarray:
    """log Q(sqrt(mu / 2)), the GA bit error probability of a channel with mean mu."""
    return log_ndtr(-np.sqrt(np.maximum(mu, 0.0) / 2.0))


def ga_block_error(rel, info_set) -> float:
    """Union estimate of SC block error from GA means: sum of channel error probabilities."""
    lp = _log_error_prob(np.asarray(rel)[np.asarray(info_set, dtype=np.int64)])
    return float(np.exp(lp).sum())


def select_info_set(rel, K: int) -> np.ndarray:
    """Indices of the ``K`` largest reliabilities, sorted; ties go to the larger index."""
    rel = np.asarray(rel, dtype=np.float64)
    N = rel.size
    if not 0 <= K <= N:
        raise DomainError(f"K={K} outside [0, {N}]")
    order = np.lexsort((np.arange(N), rel))  # ascending by (rel, index)
    return np.sort(order[N - K:])


def design_snr_for_target(n: int, K: int, target_fer: float = 1e-6,
                          rate: float | None = None, lo: float = -10.0,
                          hi: float = 30.0) -> float:
    """Eb/N0 (dB) at which the GA-predicted block error of the best K channels equals the target."""
    rate = K / (1 << n) if rate is None else rate

    def fer(snr):
        rel = density_evolution_reliabilities(n, ebn0_to_sigma(snr, rate))
        return ga_block_error(rel, select_info_set(rel, K))

    if K == 0:
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if fer(mid) > target_fer:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-4:
            break
    return round(0.5 * (lo + hi), 4)


@dataclass(frozen=True)
class ReliabilitySequence:
    """Synthetic channels ordered from least to most reliable."""

    order: np.ndarray
    design_snr_db: float | None = None
    target_fer: float | None = None

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(order.size)):
            raise DomainError("reliability order must be a permutation")
        _log2_exact(order.size)
        object.__setattr__(self, "order", order)

    @property
    def n(self) -> int:
        return self.order.size.bit_length() - 1

    def info_set(self, K: int, N: int | None = None) -> np.ndarray:
        seq = self if N is None else extract_nested(self, _log2_exact(N))
        if not 0 <= K <= seq.order.size:
            raise DomainError(f"K={K} outside [0, {seq.order.size}]")
        return np.sort(seq.order[seq.order.size - K:])


def extract_nested(seq: ReliabilitySequence, n_short: int) -> ReliabilitySequence:
    """Sub-sequence of channel indices below ``2**n_short``, relative order kept."""
    if n_short < 0 or (1 << n_short) > seq.order.size:
        raise DomainError(f"n_short={n_short} exceeds master length {seq.order.size}")
    return ReliabilitySequence(seq.order[seq.order < (1 << n_short)],
                               seq.design_snr_db, seq.target_fer)


def rate_flexible_sequence(n: int, target_fer: float = 1e-6,
                           rate_for_snr: float = 0.5) -> ReliabilitySequence:
    """Order channels by the SNR at which each reaches ``target_fer`` (GA).

    Channels needing a higher SNR come first (least reliable).  Each channel's
    mean LLR is evolved along its own branch path, so the per-channel
    bisection is fully vectorized.
    """
    paths = _channel_paths(n)
    N = 1 << n
    log_target = math.log(target_fer)
    lo = np.full(N, -20.0)
    hi = np.full(N, 40.0)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        mu = 4.0 * rate_for_snr * 10.0 ** (mid / 10.0)  # 2 / sigma^2
        for step in range(n):
            up = paths[:, step]
            mu = np.where(up, 2.0 * mu, ga_check(mu))
        reached = _log_error_prob(mu) <= log_target
        hi = np.where(reached, mid, hi)
        lo = np.where(reached, lo, mid)
    need = 0.5 * (lo + hi)
    order = np.lexsort((np.arange(N), -need))
    return ReliabilitySequence(order, None, target_fer)


def nr5g_sequence() -> ReliabilitySequence:
    """The 1024-entry 5G NR polar reliability sequence."""
    text = resources.files("unicodec.data").joinpath("polar_5g_sequence.txt").read_text()
    vals = [int(t) for t in text.split("\n") if t and not t.startswith("#")]
    return ReliabilitySequence(np.array(vals))


# ---------------------------------------------------------------------------
# Partial order and automorphism-friendly designs


def partial_order_leq(i: int, j: int, n: int) -> bool:
    """``i`` precedes ``j`` in the polar partial order (j at least as reliable as i).

    Holds iff for every threshold, ``j`` has at least as many ones at or above
    that bit position as ``i`` does.
    """
    ci = cj = 0
    for k in range(n - 1, -1, -1):
        ci += (i >> k) & 1
        cj += (j >> k) & 1
        if cj < ci:
            return False
    return True


def closure_info_set(n: int, i_min, K: int | None = None, rel=None) -> np.ndarray:
    """Upward closure of ``i_min`` under the partial order, topped up by reliability."""
    N = 1 << n
    base = {j for j in range(N) if any(partial_order_leq(i, j, n) for i in i_min)}
    if K is None:
        return np.array(sorted(base))
    if len(base) > K:
        raise ConstructionError(f"closure of {sorted(i_min)} has {len(base)} > K={K} elements")
    if len(base) < K:
        if rel is None:
            raise ConstructionError("reliabilities needed to fill the remaining positions")
        rel = np.asarray(rel, dtype=np.float64)
        rest = [j for j in np.lexsort((np.arange(N), -rel)) if j not in base]
        base.update(int(j) for j in rest[:K - len(base)])
    return np.array(sorted(base))


# ---------------------------------------------------------------------------
# Code specification


@dataclass(frozen=True)
class LengthMatch:
    """``none``, ``puncture`` (first ``count`` code bits) or ``shorten`` (last ``count``)."""

    kind: str = "none"
    count: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "puncture", "shorten"):
            raise DomainError(f"unknown length-match kind {self.kind!r}")
        if self.count < 0 or (self.kind == "none" and self.count):
            raise DomainError("invalid length-match count")


@dataclass(frozen=True)
class PolarCodeSpec:
    n: int
    info_set: np.ndarray
    crc: CrcSpec | None = None
    length_match: LengthMatch = field(default_factory=LengthMatch)
    design_snr_db: float | None = None
    i_min: tuple[int, ...] | None = None

    def __post_init__(self):
        info = np.unique(np.asarray(self.info_set, dtype=np.int64))
        if info.size != np.asarray(self.info_set).size:
            raise ConstructionError("duplicate indices in info set")
        N = 1 << self.n
        if info.size and (info[0] < 0 or info[-1] >= N):
            raise ConstructionError("info set index out of range")
        object.__setattr__(self, "info_set", info)
        lm = self.length_match
        if lm.count >= N:
            raise ConstructionError("length matching removes the whole codeword")
        if lm.kind == "shorten" and info.size and info[-1] >= N - lm.count:
            raise ConstructionError("shortened positions overlap the information set")
        if lm.kind == "puncture" and info.size and info[0] < lm.count:
            raise ConstructionError("punctured-incapable positions overlap the information set")
        if self.crc is not None and self.crc.degree >= info.size:
            raise ConstructionError("CRC longer than the information set")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return int(self.info_set.size)

    @property
    def message_length(self) -> int:
        return self.K - (self.crc.degree if self.crc else 0)

    @property
    def transmitted_length(self) -> int:
        return self.N - self.length_match.count

    @property
    def frozen_mask(self) -> np.ndarray:
        m = np.ones(self.N, dtype=bool)
        m[self.info_set] = False
        return m

    @property
    def frozen_set(self) -> np.ndarray:
        return np.flatnonzero(self.frozen_mask)

    @property
    def rate(self) -> float:
        return self.K / self.transmitted_length


def construct_polar(N: int, K: int, *, design_snr_db: float | None = None,
                    target_fer: float = 1e-6, crc: CrcSpec | None = None,
                    length_match: LengthMatch | None = None,
                    sequence: ReliabilitySequence | None = None) -> PolarCodeSpec:
    """Density-evolution (or sequence-based) polar code of dimension ``K``.

    ``K`` counts CRC bits.  Without an explicit design SNR, the GA design
    point is chosen so that the predicted block error equals ``target_fer``.
    Positions removed by length matching are excluded from the info set.
    """
    n = _log2_exact(N)
    lm = length_match or LengthMatch()
    if sequence is not None:
        nested = extract_nested(sequence, n)
        rel = np.empty(N)
        rel[nested.order] = np.arange(N)
        design = sequence.design_snr_db
    else:
        tx = N - lm.count
        if design_snr_db is None:
            design_snr_db = design_snr_for_target(n, K, target_fer, rate=K / tx)
        rel = density_evolution_reliabilities(n, ebn0_to_sigma(design_snr_db, K / tx))
        design = design_snr_db
    rel = rel.astype(np.float64)
    if lm.kind == "puncture":
        rel[:lm.count] = -np.inf
    elif lm.kind == "shorten":
        rel[N - lm.count:] = -np.inf
    if K > N - lm.count:
        raise ConstructionError("K exceeds the number of usable channels")
    return PolarCodeSpec(n, select_info_set(rel, K), crc, lm, design)


def construct_aed_code(N: int, K: int, i_min, design_snr_db: float | None = None,
                       target_fer: float = 1e-6) -> PolarCodeSpec:
    """Automorphism-friendly code from the minimal information set ``i_min``."""
    n = _log2_exact(N)
    if design_snr_db is None:
        design_snr_db = design_snr_for_target(n, K, target_fer)
    rel = density_evolution_reliabilities(n, ebn0_to_sigma(design_snr_db, K / N))
    info = closure_info_set(n, i_min, K, rel)
    return PolarCodeSpec(n, info, design_snr_db=design_snr_db, i_min=tuple(int(i) for i in i_min))


# ---------------------------------------------------------------------------
# Encoding and length matching


def polar_encode(spec: PolarCodeSpec, message) -> np.ndarray:
    """Full-length codeword(s) ``u G_N`` for message(s) (CRC appended when configured)."""
    from ..outer import crc_append

    m = np.asarray(message, dtype=np.uint8)
    if m.shape[-1] != spec.message_length:
        raise DomainError(f"message length {m.shape[-1]} != {spec.message_length}")
    if spec.crc is not None:
        m = crc_append(m, spec.crc)
    u = np.zeros(m.shape[:-1] + (spec.N,), dtype=np.uint8)
    u[..., spec.info_set] = m
    return polar_transform(u)


def _removed_positions(spec: PolarCodeSpec) -> np.ndarray:
    lm = spec.length_match
    if lm.kind == "puncture":
        return np.arange(lm.count)
    if lm.kind == "shorten":
        return np.arange(spec.N - lm.count, spec.N)
    return np.arange(0)


def rate_match(spec: PolarCodeSpec, codeword) -> np.ndarray:
    """Drop punctured or shortened code bits before transmission."""
    keep = np.setdiff1d(np.arange(spec.N), _removed_positions(spec))
    return np.asarray(codeword)[..., keep]


def apply_length_match(spec: PolarCodeSpec, llr) -> np.ndarray:
    """Expand received LLRs to length N: 0 at punctured, +saturation at shortened bits."""
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape[-1] != spec.transmitted_length:
        raise DomainError(f"expected {spec.transmitted_length} LLRs, got {llr.shape[-1]}")
    out = np.zeros(llr.shape[:-1] + (spec.N,))
    removed = _removed_positions(spec)
    keep = np.setdiff1d(np.arange(spec.N), removed)
    out[..., keep] = llr
    if spec.length_match.kind == "shorten":
        out[..., removed] = LLR_SAT
    return out


# ---------------------------------------------------------------------------
# Code-spec files


SPEC_FORMAT = "unicodec-polar/1"


def _runs(indices: np.ndarray) -> list[list[int]]:
    runs: list[list[int]] = []
    for i in indices.tolist():
        if runs and runs[-1][0] + runs[-1][1] == i:
            runs[-1][1] += 1
        else:
            runs.append([i, 1])
    return runs


def spec_to_dict(spec: PolarCodeSpec) -> dict:
    return {
        "format": SPEC_FORMAT,
        "n": spec.n,
        "K": spec.K,
        "design_snr_db": spec.design_snr_db,
        "info_set_runs": _runs(spec.info_set),
        "crc": None if spec.crc is None else {"degree": spec.crc.degree, "poly": spec.crc.to_hex()},
        "length_match": {"kind": spec.length_match.kind, "count": spec.length_match.count},
        "i_min": None if spec.i_min is None else list(spec.i_min),
    }


def spec_from_dict(d: dict) -> PolarCodeSpec:
    expected = {"format", "n", "K", "design_snr_db", "info_set_runs", "crc", "length_match", "i_min"}
    unknown = set(d) - expected
    if unknown:
        raise DomainError(f"unknown code-spec keys: {sorted(unknown)}")
    if d.get("format") != SPEC_FORMAT:
        raise DomainError(f"unsupported code-spec format {d.get('format')!r}")
    info = [s + k for s, ln in d["info_set_runs"] for k in range(ln)]
    if len(info) != d["K"]:
        raise DomainError("info_set_runs disagree with K")
    crc = None
    if d.get("crc"):
        crc = CrcSpec.from_full(int(d["crc"]["poly"], 16))
        if crc.degree != d["crc"]["degree"]:
            raise DomainError("CRC degree mismatch")
    lm = LengthMatch(**d.get("length_match", {"kind": "none", "count": 0}))
    i_min = tuple(d["i_min"]) if d.get("i_min") is not None else None
    return PolarCodeSpec(int(d["n"]), np.array(info, dtype=np.int64), crc, lm,
                         d.get("design_snr_db"), i_min)


def save_spec(spec: PolarCodeSpec, path) -> None:
    Path(path).write_text(json.dumps(spec_to_dict(spec), indent=1) + "\n")


def load_spec(path) -> PolarCodeSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))
