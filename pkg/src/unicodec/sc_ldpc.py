"""Spatially-coupled LDPC chains built by edge spreading, and the sliding-window decoder."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import ConstructionError, DomainError, SeedSpec, as_batch
from .ldpc.decode import BpConfig, MSG_SAT, _Block, cn_minsum, cn_spa
from .ldpc.matrix import ParityCheckMatrix
from .polar.decode import DecodeOutcome


def regular_base(dv: int = 4, dc: int = 8) -> np.ndarray:
    """All-ones ``dv x dc`` protograph of a (dv, dc)-regular code."""
    return np.ones((dv, dc), dtype=np.int64)


def default_spreading(base: np.ndarray, w: int) -> np.ndarray:
    """Balanced edge spreading of a 0/1 protograph; returns ``(w, rows, cols)``.

    Each column splits its ``rows`` edges over the ``w`` components as evenly
    as possible (the remainder going to the lowest components), giving the
    pattern ``p``; entry ``(r, c)`` goes to component ``p[(r + c) mod rows]``.
    For the all-ones 4 x 8 protograph and ``w = 3`` every column has 2/1/1
    and every row 4/2/2 edges in ``B_0/B_1/B_2``.
    """
    base = np.asarray(base, dtype=np.int64)
    if base.max(initial=0) > 1:
        raise ConstructionError("default spreading needs a simple (0/1) protograph")
    rows = base.shape[0]
    counts = [rows // w + (i < rows % w) for i in range(w)]
    pattern = np.repeat(np.arange(w), counts)
    r, c = np.indices(base.shape)
    comp = pattern[(r + c) % rows]
    return np.stack([(comp == i) & (base == 1) for i in range(w)]).astype(np.int64)


@dataclass(frozen=True)
class CoupledChain:
    """Terminated SC-LDPC chain.

    VN position ``t`` (``0 <= t < L``) owns columns ``[t nb Z, (t+1) nb Z)``
    and CN position ``s`` (``0 <= s < L + w - 1``) rows ``[s mb Z, (s+1) mb Z)``,
    where ``mb x nb`` is the protograph size.  Block ``(t + i, t)`` is the
    lifted component ``B_i``.
    """

    base: np.ndarray
    spreading: np.ndarray
    L: int
    Z: int
    seed: int
    H: ParityCheckMatrix

    @property
    def w(self) -> int:
        return self.spreading.shape[0]

    @property
    def mb(self) -> int:
        return self.base.shape[0]

    @property
    def nb(self) -> int:
        return self.base.shape[1]

    @property
    def n_position(self) -> int:
        return self.nb * self.Z

    @property
    def cn_positions(self) -> int:
        return self.L + self.w - 1

    @property
    def design_rate(self) -> float:
        return 1.0 - self.mb / self.nb

    @property
    def rate(self) -> float:
        return 1.0 - self.H.M / self.H.N

    def vn_position(self, t: int) -> np.ndarray:
        return np.arange(t * self.n_position, (t + 1) * self.n_position)

    def cn_rows(self, s0: int, s1: int) -> np.ndarray:
        return np.arange(s0 * self.mb * self.Z, s1 * self.mb * self.Z)


def build_coupled_chain(base=None, w: int = 3, L_chain: int = 10, Z: int = 800,
                        seed: int = 0, spreading=None) -> CoupledChain:
    """Edge-spread ``base`` over ``w`` components, couple ``L_chain`` positions and lift by ``Z``.

    Every component edge receives an independent circulant shift drawn from
    ``SeedSpec(seed)``; the chain is fully terminated (``w - 1`` extra CN
    positions of reduced degree).
    """
    base = regular_base() if base is None else np.asarray(base, dtype=np.int64)
    if w < 1:
        raise ConstructionError("coupling width must be >= 1")
    if L_chain <= w - 1 or L_chain < 1:
        raise ConstructionError("chain length must exceed w - 1")
    if base.max(initial=0) > w:
        raise ConstructionError("edge multiplicity exceeds the coupling width")
    if spreading is None:
        spreading = default_spreading(base, w)
    spreading = np.asarray(spreading, dtype=np.int64)
    if spreading.shape != (w,) + base.shape or not np.array_equal(spreading.sum(axis=0), base):
        raise ConstructionError("spreading components must sum to the base")
    if spreading.min() < 0 or spreading.max() > 1:
        raise ConstructionError("spreading components must be binary")
    mb, nb = base.shape
    rng = SeedSpec(seed).rng()
    rows, cols = [], []
    t_ = np.arange(Z)
    for t in range(L_chain):
        for i in range(w):
            br, bc = np.nonzero(spreading[i])
            shifts = rng.integers(0, Z, br.size)
            s = t + i
            for r, c, sh in zip(br, bc, shifts):
                rows.append((s * mb + r) * Z + t_)
                cols.append((t * nb + c) * Z + (t_ + sh) % Z)
    M = (L_chain + w - 1) * mb * Z
    N = L_chain * nb * Z
    H = ParityCheckMatrix(np.concatenate(rows), np.concatenate(cols), (M, N))
    return CoupledChain(base, spreading, L_chain, Z, seed, H)


def chain_to_dict(chain: CoupledChain) -> dict:
    return {"format": "unicodec-scldpc/1", "base": chain.base.tolist(),
            "spreading": chain.spreading.tolist(), "L_chain": chain.L,
            "Z": chain.Z, "seed": chain.seed}


def chain_from_dict(d: dict) -> CoupledChain:
    allowed = {"format", "base", "spreading", "L_chain", "Z", "seed"}
    extra = set(d) - allowed
    if extra:
        raise DomainError(f"unknown keys {sorted(extra)}")
    if d.get("format") != "unicodec-scldpc/1":
        raise DomainError("not a coupled-chain file")
    sp_ = np.asarray(d["spreading"])
    return build_coupled_chain(d["base"], sp_.shape[0], d["L_chain"], d["Z"], d["seed"], sp_)


def save_chain(chain: CoupledChain, path) -> None:
    Path(path).write_text(json.dumps(chain_to_dict(chain), indent=1) + "\n")


def load_chain(path) -> CoupledChain:
    return chain_from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class WindowConfig:
    """``D`` positions per window, ``iterations_per_step`` BP iterations per step.

    A layered iteration sweeps the window's check positions from oldest to
    newest, one layer per (position, protograph row), refreshing posteriors
    immediately; a flooding iteration updates all window checks, then all
    window variables.

    With ``warmup`` the window enters the chain gradually: the first window
    ends at position 0, so every position is processed in ``D`` steps before
    it is committed.  Without it the first window starts at position 0.
    """

    window_size: int = 8
    iterations_per_step: int = 1
    kernel: str = "spa"
    warmup: bool = True
    schedule: str = "layered"

    def __post_init__(self):
        if self.window_size < 1:
            raise DomainError("window size must be >= 1")
        if self.iterations_per_step < 1:
            raise DomainError("iterations_per_step must be >= 1")
        BpConfig(kernel=self.kernel, schedule=self.schedule)


class _WindowPlan:
    """Per-step row blocks and VN incidence matrices."""

    def __init__(self, chain: CoupledChain, D: int, warmup: bool):
        H = chain.H
        start = np.concatenate([[0], np.cumsum(H.cn_degrees)[:-1]])
        edge_ids = sp.csr_matrix((np.arange(H.n_edges) + 1, (H.edge_col, H.edge_row)),
                                 shape=(H.N, H.M))
        self.steps = []
        for t in range(-(D - 1) if warmup else 0, chain.L):
            t0, end = max(t, 0), t + D
            s1 = end if end < chain.L else chain.cn_positions
            rows = chain.cn_rows(t0, s1)
            vn = np.arange(t0 * chain.n_position, min(end, chain.L) * chain.n_position)
            sub = edge_ids[vn]  # rows of the VN -> edge table
            sub.sort_indices()
            lens = np.diff(sub.indptr)
            vedges = sub.data - 1
            inc = sp.csr_matrix((np.ones(vedges.size), vedges, sub.indptr),
                                shape=(vn.size, H.n_edges + 1))
            self.steps.append((t, _Block(H, rows, start), vn, inc,
                               np.repeat(np.arange(vn.size), lens), vedges))
        # layered schedule: one layer per (CN position, protograph row), in chain order
        self.layers = [_Block(H, np.arange(q * chain.Z, (q + 1) * chain.Z), start)
                       for q in range(H.M // chain.Z)]
        self.layer_span = {t: (max(t, 0) * chain.mb,
                               (t + D if t + D < chain.L else chain.cn_positions) * chain.mb)
                           for t, *_ in self.steps}
        pos = H.edge_col // chain.n_position
        self.position_edges = [np.flatnonzero(pos == t) for t in range(chain.L)]


def _plan(chain: CoupledChain, D: int, warmup: bool) -> _WindowPlan:
    cache = chain.H.__dict__.setdefault("_window_plans", {})
    if (D, warmup) not in cache:
        cache[D, warmup] = _WindowPlan(chain, D, warmup)
    return cache[D, warmup]


def decode_windowed(chain: CoupledChain, llr, wcfg: WindowConfig = WindowConfig(),
                    on_commit=None) -> DecodeOutcome:
    """Sliding-window BP over the chain.

    At step ``t`` the window spans VN positions ``t .. t+D-1`` and CN
    positions ``t .. t+D-1``, clipped to the chain (the final windows also
    take the termination checks).  Steps start at ``t = 1 - D`` with warm-up
    and at ``t = 0`` otherwise; nothing is committed while ``t < 0``.
    Each step runs ``iterations_per_step`` iterations on the window, then
    commits the hard decisions of VN position ``t``.
    Messages persist between steps; VN-to-CN messages of committed positions
    stay frozen at their last values.  ``on_commit(t, bits)`` is called after
    every commitment.
    """
    a, single = as_batch(llr, np.float64)
    H = chain.H
    if a.shape[-1] != H.N:
        raise DomainError(f"expected {H.N} LLRs, got {a.shape[-1]}")
    if wcfg.window_size > chain.L:
        raise DomainError("window larger than the chain")
    kern = cn_spa if wcfg.kernel == "spa" else (
        lambda v: cn_minsum(v, 0.75 if wcfg.kernel == "nms" else 1.0,
                            0.5 if wcfg.kernel == "oms" else 0.0))
    plan = _plan(chain, wcfg.window_size, wcfg.warmup)
    B = a.shape[0]
    ch = np.clip(a, -MSG_SAT, MSG_SAT)
    if wcfg.schedule == "layered":
        return _decode_windowed_layered(chain, plan, ch, wcfg, kern, on_commit, single)
    v2c = np.empty((B, H.n_edges + 1))
    v2c[:, :H.n_edges] = ch[:, H.edge_col]
    v2c[:, H.n_edges] = MSG_SAT
    c2v = np.zeros((B, H.n_edges + 1))
    out = np.zeros((B, H.N), dtype=np.uint8)
    npos = chain.n_position
    for t, blk, vn, inc, vrow, vedges in plan.steps:
        for _ in range(wcfg.iterations_per_step):
            c = kern(v2c[:, blk.edges])
            c2v[:, blk.edges] = np.where(blk.valid, c, 0.0)
            c2v[:, H.n_edges] = 0.0
            post = ch[:, vn] + (inc @ c2v.T).T
            v2c[:, vedges] = np.clip(post[:, vrow] - c2v[:, vedges], -MSG_SAT, MSG_SAT)
        if t < 0:
            continue
        bits = (post[:, :npos] < 0).astype(np.uint8)
        out[:, t * npos:(t + 1) * npos] = bits
        if on_commit is not None:
            on_commit(t, bits.copy())
    res = DecodeOutcome(out, out, np.zeros(B), None, None, None)
    return res._squeeze() if single else res


def _decode_windowed_layered(chain, plan, ch, wcfg, kern, on_commit, single):
    H = chain.H
    B = ch.shape[0]
    npos = chain.n_position
    post = np.empty((B, H.N + 1))
    post[:, :H.N] = ch
    post[:, H.N] = MSG_SAT
    c2v = np.zeros((B, H.n_edges + 1))
    frozen_v2c = np.zeros((B, H.n_edges + 1))
    out = np.zeros((B, H.N), dtype=np.uint8)
    for t, *_ in plan.steps:
        q0, q1 = plan.layer_span[t]
        for _ in range(wcfg.iterations_per_step):
            for blk in plan.layers[q0:q1]:
                frozen = (blk.vns < max(t, 0) * npos)
                v = post[:, blk.vns] - c2v[:, blk.edges]
                if frozen.any():
                    v = np.where(frozen, frozen_v2c[:, blk.edges], v)
                new = np.where(blk.valid, kern(np.clip(v, -MSG_SAT, MSG_SAT)), 0.0)
                c2v[:, blk.edges] = new
                c2v[:, H.n_edges] = 0.0
                upd = blk.valid & ~frozen
                post[:, blk.vns[upd]] = (v + new)[:, upd]
        if t < 0:
            continue
        cols = slice(t * npos, (t + 1) * npos)
        bits = (post[:, cols] < 0).astype(np.uint8)
        out[:, cols] = bits
        e = plan.position_edges[t]
        frozen_v2c[:, e] = post[:, H.edge_col[e]] - c2v[:, e]
        if on_commit is not None:
            on_commit(t, bits.copy())
    res = DecodeOutcome(out, out, np.zeros(B), None, None, None)
    return res._squeeze() if single else res
