"""Belief-propagation decoding: SPA and min-sum kernels, flooding and layered schedules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..core import DomainError, as_batch
from ..polar.decode import DecodeOutcome
from .matrix import ParityCheckMatrix, split_conflicting_layers

#: Saturation of BP messages and posteriors (natural-log LLR).
MSG_SAT = 30.0
_PAD = 1e30


@dataclass(frozen=True)
class BpConfig:
    """Decoder settings.

    ``kernel`` is ``"spa"``, ``"nms"`` (scaled by ``alpha``) or ``"oms"``
    (offset by ``beta``).  With ``quant_bits`` set, channel LLRs and all
    messages pass through :func:`quantize_llr`; posteriors saturate two bits
    wider.
    """

    kernel: str = "spa"
    schedule: str = "layered"
    max_iterations: int = 8
    alpha: float = 0.75
    beta: float = 0.5
    quant_bits: int | None = None
    quant_step: float = 1.0
    early_stop: bool = True

    def __post_init__(self):
        if self.kernel not in ("spa", "nms", "oms"):
            raise DomainError(f"unknown kernel {self.kernel!r}")
        if self.schedule not in ("flooding", "layered"):
            raise DomainError(f"unknown schedule {self.schedule!r}")
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")
        if self.beta < 0:
            raise DomainError("beta must be non-negative")
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be non-negative")
        if self.quant_bits is not None:
            if not 2 <= self.quant_bits <= 16:
                raise DomainError("quantization bits must lie in [2, 16]")
            if not self.quant_step > 0:
                raise DomainError("quantization step must be positive")


def quantize_llr(llr, bits: int, step: float) -> np.ndarray:
    """Symmetric uniform mid-tread quantizer saturating at ``(2^(bits-1) - 1) step``.

    Zero maps to zero; the output levels are the integers ``-L..L`` times
    ``step`` with ``L = 2^(bits-1) - 1``.
    """
    if not 2 <= bits <= 16:
        raise DomainError("quantization bits must lie in [2, 16]")
    if not step > 0:
        raise DomainError("quantization step must be positive")
    L = 2 ** (bits - 1) - 1
    return np.clip(np.rint(np.asarray(llr, dtype=np.float64) / step), -L, L) * step


def count_bit_errors(decoded, reference):
    """Per-frame ``(frame_error, bit_errors)``; scalars for single frames."""
    d = np.asarray(decoded)
    r = np.asarray(reference)
    if d.shape != r.shape:
        raise DomainError(f"shape mismatch {d.shape} vs {r.shape}")
    be = np.count_nonzero(d != r, axis=-1)
    if d.ndim == 1:
        return bool(be > 0), int(be)
    return be > 0, be


# ---------------------------------------------------------------------------
# Check-node kernels on (..., rows, degree) arrays of VN-to-CN messages


def cn_spa(v2c: np.ndarray) -> np.ndarray:
    t = np.tanh(0.5 * v2c)
    ones = np.ones(t.shape[:-1] + (1,))
    pre = np.cumprod(np.concatenate([ones, t[..., :-1]], axis=-1), axis=-1)
    suf = np.cumprod(np.concatenate([ones, t[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    p = np.clip(pre * suf, -1 + 1e-13, 1 - 1e-13)
    return np.clip(2.0 * np.arctanh(p), -MSG_SAT, MSG_SAT)


def cn_minsum(v2c: np.ndarray, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
    """Min-sum: magnitude = min of the other inputs, sign = product of the other signs."""
    neg = v2c < 0
    parity = np.logical_xor.reduce(neg, axis=-1, keepdims=True)
    mag = np.abs(v2c)
    i1 = np.argmin(mag, axis=-1)[..., None]
    m1 = np.take_along_axis(mag, i1, axis=-1)
    masked = mag.copy()
    np.put_along_axis(masked, i1, np.inf, axis=-1)
    m2 = masked.min(axis=-1, keepdims=True)
    out = np.where(np.arange(mag.shape[-1]) == i1, m2, m1)
    if alpha != 1.0:
        out = alpha * out
    if beta:
        out = np.maximum(out - beta, 0.0)
    return np.where(parity ^ neg, -out, out)


# ---------------------------------------------------------------------------


class _Block:
    """Padded edge/VN index arrays for a set of rows (pad edge E, pad VN N)."""

    def __init__(self, H: ParityCheckMatrix, rows: np.ndarray, edge_start: np.ndarray):
        deg = H.cn_degrees[rows]
        d = int(deg.max(initial=1))
        self.edges = np.full((rows.size, d), H.n_edges, dtype=np.int64)
        cols = np.arange(d)
        valid = cols < deg[:, None]
        self.edges[valid] = (edge_start[rows][:, None] + cols)[valid]
        self.vns = np.where(valid, np.append(H.edge_col, H.N)[self.edges], H.N)
        self.valid = valid


class _Graph:
    def __init__(self, H: ParityCheckMatrix):
        self.H = H
        start = np.concatenate([[0], np.cumsum(H.cn_degrees)[:-1]])
        self.all = _Block(H, np.arange(H.M), start)
        layers = split_conflicting_layers(H, H.layers) if self._conflicts(H) else H.layers
        self.layers = [_Block(H, l, start) for l in layers]
        # N x E incidence for posterior accumulation
        self.vn_sum = sp.csr_matrix(
            (np.ones(H.n_edges), (H.edge_col, np.arange(H.n_edges))), shape=(H.N, H.n_edges))

    @staticmethod
    def _conflicts(H):
        for l in H.layers:
            cols = H.edge_col[np.isin(H.edge_row, l)]
            if cols.size != np.unique(cols).size:
                return True
        return False


def _graph(H: ParityCheckMatrix) -> _Graph:
    g = H.__dict__.get("_bp_graph")
    if g is None:
        g = H.__dict__["_bp_graph"] = _Graph(H)
    return g


def _syndrome_ok(H: ParityCheckMatrix, hard: np.ndarray) -> np.ndarray:
    s = (H.csr @ hard.T.astype(np.int64)) & 1
    return ~np.any(s, axis=0)


def decode_bp(H: ParityCheckMatrix, llr, cfg: BpConfig = BpConfig()) -> DecodeOutcome:
    """Iterative belief propagation.

    Flooding updates all checks and then all variables once per iteration.
    Layered decoding processes the layers of ``H`` in order with immediate
    posterior refresh; one sweep counts as one iteration.  The first hard
    decision with zero syndrome is latched as the output, so early stopping
    only saves work and never changes the result.

    Returns a :class:`DecodeOutcome` whose ``message`` and ``codeword`` are
    the hard decisions on all ``N`` positions, ``metric`` the number of
    unsatisfied checks, plus ``iterations``, ``syndrome_ok`` and
    ``posterior`` (the LLRs of the last iteration each frame ran).
    """
    a, single = as_batch(llr, np.float64)
    if a.shape[-1] != H.N:
        raise DomainError(f"expected {H.N} LLRs, got {a.shape[-1]}")
    g = _graph(H)
    B = a.shape[0]
    q = cfg.quant_bits
    if q is not None:
        qz = lambda x: quantize_llr(x, q, cfg.quant_step)
        post_sat = (2 ** (q + 1) - 1) * cfg.quant_step
    else:
        qz = None
        post_sat = None
    ch = np.clip(a, -_PAD, _PAD)
    if qz:
        ch = qz(ch)
    if cfg.kernel == "spa":
        kern = cn_spa
    else:
        al = cfg.alpha if cfg.kernel == "nms" else 1.0
        be = cfg.beta if cfg.kernel == "oms" else 0.0
        kern = lambda v: cn_minsum(v, al, be)

    out = (ch < 0).astype(np.uint8)
    iters = np.full(B, cfg.max_iterations, dtype=np.int64)
    ok = _syndrome_ok(H, out)
    iters[ok] = 0
    active = np.flatnonzero(~ok)
    if not cfg.early_stop:
        active = np.arange(B)
        latched = ok.copy()
    else:
        latched = ok

    c2v = np.zeros((active.size, H.n_edges + 1))
    post = np.empty((active.size, H.N + 1))
    post[:, :H.N] = ch[active]
    post[:, H.N] = _PAD
    post_out = ch.copy()
    chan = post[:, :H.N].copy()

    def c2v_of(blk, v):
        v = np.clip(v, -MSG_SAT, MSG_SAT)
        c = kern(qz(v) if qz else v)
        if qz:
            c = qz(c)
        return np.where(blk.valid, c, 0.0)

    for it in range(1, cfg.max_iterations + 1):
        if active.size == 0:
            break
        if cfg.schedule == "flooding":
            blk = g.all
            v = post[:, blk.vns] - c2v[:, blk.edges]
            c2v[:, blk.edges] = c2v_of(blk, v)
            c2v[:, H.n_edges] = 0.0
            post[:, :H.N] = chan + (g.vn_sum @ c2v[:, :H.n_edges].T).T
        else:
            for blk in g.layers:
                # the posterior keeps the unclipped extrinsic so that it stays
                # equal to channel + sum of check messages under saturation
                v = post[:, blk.vns] - c2v[:, blk.edges]
                new = c2v_of(blk, v)
                c2v[:, blk.edges] = new
                c2v[:, H.n_edges] = 0.0
                post[:, blk.vns] = v + new
                post[:, H.N] = _PAD
        if post_sat is not None:
            np.clip(post[:, :H.N], -post_sat, post_sat, out=post[:, :H.N])
        hard = (post[:, :H.N] < 0).astype(np.uint8)
        done = _syndrome_ok(H, hard)
        fresh = done & ~latched[active]
        if fresh.any():
            rows = active[fresh]
            out[rows] = hard[fresh]
            iters[rows] = it
            latched[rows] = True
        pending = ~latched[active]
        if it == cfg.max_iterations:
            out[active[pending]] = hard[pending]
        elif cfg.early_stop and not pending.all():
            post_out[active[~pending]] = post[~pending, :H.N]
            active = active[pending]
            c2v, post, chan = c2v[pending], post[pending], chan[pending]
    post_out[active] = post[:, :H.N]
    syn_ok = _syndrome_ok(H, out)
    unsat = ((H.csr @ out.T.astype(np.int64)) & 1).sum(axis=0).astype(np.float64)
    res = DecodeOutcome(out, out, unsat, None, iters, syn_ok, post_out)
    return res._squeeze() if single else res
