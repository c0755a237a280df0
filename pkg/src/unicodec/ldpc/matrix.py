"""Sparse parity-check matrices, quasi-cyclic lifting, alist I/O and encoders."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..core import ConstructionError, DomainError, as_batch


class AlistParseError(ValueError):
    """Malformed alist or base-graph text; ``line`` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class QcStructure:
    shifts: np.ndarray  # base_rows x base_cols, -1 = zero block
    Z: int

    @property
    def base_rows(self) -> int:
        return self.shifts.shape[0]

    @property
    def base_cols(self) -> int:
        return self.shifts.shape[1]


class ParityCheckMatrix:
    """Binary sparse matrix with row- and column-major views.

    Parameters
    ----------
    rows, cols : array_like
        Coordinates of the nonzero entries (duplicates are rejected).
    shape : (M, N)
    qc : QcStructure, optional
        Shift table the matrix was expanded from.
    layers : list of arrays, optional
        Ordered partition of the row indices used by layered decoding.
    """

    def __init__(self, rows, cols, shape, qc: QcStructure | None = None, layers=None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        M, N = shape
        if rows.size and (rows.min() < 0 or rows.max() >= M or cols.min() < 0 or cols.max() >= N):
            raise DomainError("entry index outside the matrix")
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        if rows.size > 1 and np.any((np.diff(rows) == 0) & (np.diff(cols) == 0)):
            raise DomainError("duplicate entries")
        self.M, self.N = int(M), int(N)
        self.edge_row = rows
        self.edge_col = cols
        self.qc = qc
        if layers is None:
            layers = [np.arange(self.M)]
        layers = [np.asarray(l, dtype=np.int64) for l in layers]
        cover = np.sort(np.concatenate(layers)) if layers else np.empty(0, np.int64)
        if not np.array_equal(cover, np.arange(self.M)):
            raise DomainError("layers must partition the rows")
        self.layers = layers

    @classmethod
    def from_dense(cls, H, **kw) -> "ParityCheckMatrix":
        H = np.asarray(H) % 2
        r, c = np.nonzero(H)
        return cls(r, c, H.shape, **kw)

    @property
    def shape(self) -> tuple[int, int]:
        return self.M, self.N

    @property
    def n_edges(self) -> int:
        return self.edge_row.size

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(self.n_edges, dtype=np.uint8)
        return sp.csr_matrix((data, (self.edge_row, self.edge_col)), shape=self.shape)

    @cached_property
    def csc(self) -> sp.csc_matrix:
        return self.csr.tocsc()

    @property
    def vn_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_col, minlength=self.N)

    @property
    def cn_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_row, minlength=self.M)

    def to_dense(self) -> np.ndarray:
        H = np.zeros(self.shape, dtype=np.uint8)
        H[self.edge_row, self.edge_col] = 1
        return H

    def row_support(self, r: int) -> np.ndarray:
        return self.csr.indices[self.csr.indptr[r]:self.csr.indptr[r + 1]]

    def col_support(self, c: int) -> np.ndarray:
        return np.sort(self.csc.indices[self.csc.indptr[c]:self.csc.indptr[c + 1]])

    def with_layers(self, layers) -> "ParityCheckMatrix":
        return ParityCheckMatrix(self.edge_row, self.edge_col, self.shape, self.qc, layers)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ParityCheckMatrix) and self.shape == other.shape
                and np.array_equal(self.edge_row, other.edge_row)
                and np.array_equal(self.edge_col, other.edge_col))

    def __repr__(self) -> str:
        return f"ParityCheckMatrix(M={self.M}, N={self.N}, edges={self.n_edges})"


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite graph view; edges are numbered in row-major order."""

    vn_degrees: np.ndarray
    cn_degrees: np.ndarray
    edge_vn: np.ndarray
    edge_cn: np.ndarray

    @property
    def n_edges(self) -> int:
        return self.edge_vn.size


def split_conflicting_layers(H: ParityCheckMatrix, groups) -> list[np.ndarray]:
    """Split each row group first-fit so that no column appears twice in a layer."""
    out = []
    for g in groups:
        parts: list[tuple[list[int], set]] = []
        for r in g:
            sup = set(H.row_support(int(r)).tolist())
            for rows, used in parts:
                if not used & sup:
                    rows.append(int(r))
                    used |= sup
                    break
            else:
                parts.append(([int(r)], sup))
        out.extend(np.asarray(rows, dtype=np.int64) for rows, _ in parts)
    return out


def tanner_graph(H: ParityCheckMatrix) -> TannerGraph:
    return TannerGraph(H.vn_degrees, H.cn_degrees, H.edge_col.copy(), H.edge_row.copy())


def syndrome(H: ParityCheckMatrix, word) -> np.ndarray:
    """``H w^T`` over GF(2) for one word or a batch (rows are words)."""
    w, single = as_batch(word, np.uint8)
    if w.shape[-1] != H.N:
        raise DomainError(f"word length {w.shape[-1]} != N={H.N}")
    s = (H.csr @ w.T.astype(np.int64)).T & 1
    s = s.astype(np.uint8)
    return s[0] if single else s


# ---------------------------------------------------------------------------
# alist


def write_alist(H: ParityCheckMatrix, path) -> None:
    dv, dc = H.vn_degrees, H.cn_degrees
    lines = [f"{H.N} {H.M}", f"{dv.max(initial=0)} {dc.max(initial=0)}",
             " ".join(map(str, dv)), " ".join(map(str, dc))]
    for c in range(H.N):
        lines.append(" ".join(str(r + 1) for r in H.col_support(c)))
    for r in range(H.M):
        lines.append(" ".join(str(c + 1) for c in H.row_support(r)))
    Path(path).write_text("\n".join(lines) + "\n")


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(t) for t in line.split()]
    except ValueError as e:
        raise AlistParseError(f"non-integer token ({e})", lineno) from None


def parse_alist(text: str) -> ParityCheckMatrix:
    """Parse MacKay's alist format; zero padding in index lists is accepted."""
    lines = [(i + 1, l) for i, l in enumerate(text.splitlines()) if l.strip()]
    if not lines:
        raise AlistParseError("empty file", 1)
    it = iter(lines)

    def take(expected: int | None, what: str) -> tuple[int, list[int]]:
        try:
            ln, line = next(it)
        except StopIteration:
            raise AlistParseError(f"unexpected end of file reading {what}",
                                  lines[-1][0] + 1) from None
        vals = _ints(line, ln)
        if expected is not None and len(vals) != expected:
            raise AlistParseError(f"{what}: expected {expected} values, got {len(vals)}", ln)
        return ln, vals

    ln, (N, M) = take(2, "dimensions")
    if N <= 0 or M <= 0:
        raise AlistParseError("dimensions must be positive", ln)
    take(2, "maximum degrees")
    ln_dv, dv = take(N, "column degrees")
    ln_dc, dc = take(M, "row degrees")
    rows, cols = [], []
    for c in range(N):
        ln, vals = take(None, f"column {c + 1}")
        nz = [v for v in vals if v != 0]
        if len(nz) != dv[c]:
            raise AlistParseError(f"column {c + 1} lists {len(nz)} rows, header says {dv[c]}", ln)
        for r in nz:
            if not 1 <= r <= M:
                raise AlistParseError(f"row index {r} out of range", ln)
            rows.append(r - 1)
            cols.append(c)
    seen = {}
    for r in range(M):
        ln, vals = take(None, f"row {r + 1}")
        nz = [v for v in vals if v != 0]
        if len(nz) != dc[r]:
            raise AlistParseError(f"row {r + 1} lists {len(nz)} columns, header says {dc[r]}", ln)
        for c in nz:
            if not 1 <= c <= N:
                raise AlistParseError(f"column index {c} out of range", ln)
        seen[r] = (ln, sorted(c - 1 for c in nz))
    H = ParityCheckMatrix(rows, cols, (M, N))
    for r, (ln, cs) in seen.items():
        if list(H.row_support(r)) != cs:
            raise AlistParseError(f"row {r + 1} disagrees with the column lists", ln)
    return H


def load_alist(path) -> ParityCheckMatrix:
    return parse_alist(Path(path).read_text())


# ---------------------------------------------------------------------------
# Quasi-cyclic base graphs


def expand_base_graph(base, Z: int) -> ParityCheckMatrix:
    """Lift a shift table: shift ``s`` becomes the identity cyclically shifted right by ``s``.

    The resulting matrix carries one layer per base row.
    """
    base = np.asarray(base, dtype=np.int64)
    if base.ndim != 2:
        raise DomainError("base graph must be a 2-D shift table")
    if Z < 1:
        raise DomainError("lifting size must be positive")
    if np.any(base < -1) or np.any(base >= Z):
        raise DomainError(f"shifts must lie in [-1, {Z})")
    br, bc = np.nonzero(base >= 0)
    s = base[br, bc]
    t = np.arange(Z)
    rows = (br[:, None] * Z + t).ravel()
    cols = (bc[:, None] * Z + (t + s[:, None]) % Z).ravel()
    layers = [np.arange(r * Z, (r + 1) * Z) for r in range(base.shape[0])]
    return ParityCheckMatrix(rows, cols, (base.shape[0] * Z, base.shape[1] * Z),
                             qc=QcStructure(base.copy(), Z), layers=layers)


def recover_base_graph(H: ParityCheckMatrix, Z: int) -> np.ndarray:
    """Read the shift table back from a lifted matrix (errors if a block is not a circulant)."""
    if H.M % Z or H.N % Z:
        raise DomainError("matrix dimensions are not multiples of Z")
    base = np.full((H.M // Z, H.N // Z), -1, dtype=np.int64)
    br, bc = H.edge_row // Z, H.edge_col // Z
    shift = (H.edge_col % Z - H.edge_row % Z) % Z
    key = br * base.shape[1] + bc
    for k in np.unique(key):
        sel = key == k
        s = np.unique(shift[sel])
        if sel.sum() != Z or s.size != 1:
            raise DomainError(f"block {divmod(int(k), base.shape[1])} is not a shifted identity")
        base.flat[k] = s[0]
    return base


def write_base_graph(base, Z: int, path) -> None:
    base = np.asarray(base, dtype=np.int64)
    lines = [str(Z), f"{base.shape[0]} {base.shape[1]}"]
    lines += [" ".join(map(str, row)) for row in base]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_base_graph(text: str) -> tuple[np.ndarray, int]:
    lines = [(i + 1, l) for i, l in enumerate(text.splitlines()) if l.strip()]
    if len(lines) < 2:
        raise AlistParseError("base graph needs Z and dimensions", len(lines) + 1)
    zl = _ints(lines[0][1], lines[0][0])
    dims = _ints(lines[1][1], lines[1][0])
    if len(zl) != 1 or len(dims) != 2:
        raise AlistParseError("expected `Z` then `rows cols`", lines[1][0] if len(zl) == 1 else lines[0][0])
    Z, (R, C) = zl[0], dims
    body = lines[2:]
    if len(body) != R:
        raise AlistParseError(f"expected {R} shift rows, got {len(body)}", (body or lines)[-1][0])
    base = np.empty((R, C), dtype=np.int64)
    for r, (ln, line) in enumerate(body):
        vals = _ints(line, ln)
        if len(vals) != C:
            raise AlistParseError(f"expected {C} shifts, got {len(vals)}", ln)
        if any(v < -1 or v >= Z for v in vals):
            raise AlistParseError(f"shift out of range [-1, {Z})", ln)
        base[r] = vals
    return base, Z


def load_base_graph(path) -> tuple[np.ndarray, int]:
    return parse_base_graph(Path(path).read_text())


# ---------------------------------------------------------------------------
# Encoders


def gf2_rank(A) -> int:
    return _gf2_rref(np.asarray(A, dtype=np.uint8) % 2)[1].size


def _gf2_rref(A: np.ndarray, col_order=None) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form; returns (matrix, pivot columns in pivot order)."""
    A = A.copy()
    M, N = A.shape
    cols = np.arange(N) if col_order is None else np.asarray(col_order)
    pivots = []
    r = 0
    for c in cols:
        if r == M:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        hit = np.flatnonzero(A[:, c])
        hit = hit[hit != r]
        A[hit] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], np.asarray(pivots, dtype=np.int64)


class GenericEncoder:
    """Systematic encoder from GF(2) elimination of ``H``.

    Pivots are searched from the last column backwards, so the message lands
    on the leading (non-pivot) columns whenever the trailing columns of ``H``
    have full rank, as for systematic-first layouts.
    """

    def __init__(self, H: ParityCheckMatrix):
        R, piv = _gf2_rref(H.to_dense(), col_order=np.arange(H.N)[::-1])
        self.N = H.N
        self.parity_pos = piv
        mask = np.ones(H.N, dtype=bool)
        mask[piv] = False
        self.info_pos = np.flatnonzero(mask)
        self.k = self.info_pos.size
        # each pivot row reads: c[piv_i] = sum over free columns of R[i, free] c[free]
        self._P = np.ascontiguousarray(R[:, self.info_pos].T.astype(np.int64))

    def encode(self, message) -> np.ndarray:
        m, single = as_batch(message, np.uint8)
        if m.shape[-1] != self.k:
            raise DomainError(f"message length {m.shape[-1]} != k={self.k}")
        c = np.zeros((m.shape[0], self.N), dtype=np.uint8)
        c[:, self.info_pos] = m
        c[:, self.parity_pos] = (m.astype(np.int64) @ self._P) & 1
        return c[0] if single else c


class AccumulatorEncoder:
    """Encoder for ``H = [H_info | staircase]`` (IRA structure, systematic first)."""

    def __init__(self, H: ParityCheckMatrix):
        k = H.N - H.M
        if not is_staircase(H):
            raise ConstructionError("parity part is not a staircase")
        self.N, self.k = H.N, k
        self.info_pos = np.arange(k)
        self.parity_pos = np.arange(k, H.N)
        self._Hi = H.csr[:, :k].astype(np.int64)

    def encode(self, message) -> np.ndarray:
        m, single = as_batch(message, np.uint8)
        if m.shape[-1] != self.k:
            raise DomainError(f"message length {m.shape[-1]} != k={self.k}")
        pre = ((self._Hi @ m.T.astype(np.int64)).T & 1).astype(np.uint8)
        p = np.bitwise_xor.accumulate(pre, axis=1)
        c = np.concatenate([m, p], axis=1)
        return c[0] if single else c


def is_staircase(H: ParityCheckMatrix) -> bool:
    k = H.N - H.M
    if k <= 0:
        return False
    sel = H.edge_col >= k
    r, c = H.edge_row[sel], H.edge_col[sel] - k
    if r.size != 2 * H.M - 1:
        return False
    diag = r == c
    sub = r == c + 1
    return bool(np.all(diag | sub) and diag.sum() == H.M)


def make_encoder(H: ParityCheckMatrix):
    """Accumulator encoder for staircase codes, otherwise Gaussian elimination."""
    if is_staircase(H):
        return AccumulatorEncoder(H)
    if H.N > 20000:
        raise ConstructionError("dense elimination is limited to N <= 20000")
    return GenericEncoder(H)


def encode(H: ParityCheckMatrix, message) -> np.ndarray:
    enc = H.__dict__.get("_encoder")
    if enc is None:
        enc = H.__dict__["_encoder"] = make_encoder(H)
    return enc.encode(message)


# ---------------------------------------------------------------------------
# Standard codes


@dataclass
class LdpcCode:
    """An LDPC code together with its transmission format.

    The codeword of ``H`` has length ``H.N``.  ``message_pos`` holds the
    codeword positions carrying the message, ``known_zero`` the filler
    positions (received with saturated LLR) and ``tx_pos`` the transmitted
    positions, in transmission order.  Positions neither transmitted nor known
    are punctured and enter the decoder with LLR 0.
    """

    name: str
    H: ParityCheckMatrix
    message_pos: np.ndarray
    tx_pos: np.ndarray
    known_zero: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    encoder: object = None

    def __post_init__(self):
        if self.encoder is None:
            self.encoder = make_encoder(self.H)

    @property
    def k(self) -> int:
        return self.message_pos.size

    @property
    def n(self) -> int:
        return self.tx_pos.size

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, message) -> np.ndarray:
        """Transmitted bits for message(s)."""
        m, single = as_batch(message, np.uint8)
        info = np.zeros((m.shape[0], self.encoder.k), dtype=np.uint8)
        pos = np.searchsorted(self.encoder.info_pos, self.message_pos)
        info[:, pos] = m
        cw = self.encoder.encode(info)
        out = cw[:, self.tx_pos]
        return out[0] if single else out

    def full_codeword(self, message) -> np.ndarray:
        m, single = as_batch(message, np.uint8)
        info = np.zeros((m.shape[0], self.encoder.k), dtype=np.uint8)
        info[:, np.searchsorted(self.encoder.info_pos, self.message_pos)] = m
        cw = self.encoder.encode(info)
        return cw[0] if single else cw

    def receive(self, llr_tx) -> np.ndarray:
        """Decoder input of length ``H.N`` from transmitted-position LLRs."""
        from ..core import LLR_SAT
        l, single = as_batch(llr_tx, np.float64)
        full = np.zeros((l.shape[0], self.H.N))
        full[:, self.tx_pos] = l
        full[:, self.known_zero] = LLR_SAT
        return full[0] if single else full


def _data_text(name: str) -> str:
    return resources.files("unicodec.data").joinpath(name).read_text()


#: Lifting sizes of 5G NR grouped by set index.
NR_LIFTING_SETS = [[a * 2 ** j for j in range(8) if a * 2 ** j <= 384]
                   for a in (2, 3, 5, 7, 9, 11, 13, 15)]


def nr_bg2_shifts(Z: int) -> np.ndarray:
    """5G NR base graph 2 (42 x 52) shift table for lifting size ``Z``."""
    ils = next((i for i, s in enumerate(NR_LIFTING_SETS) if Z in s), None)
    if ils is None:
        raise DomainError(f"{Z} is not a 5G NR lifting size")
    base = np.full((42, 52), -1, dtype=np.int64)
    reader = csv.reader(_data_text("nr_bg2.csv").splitlines()[2:], delimiter=";")
    row = None
    for rec in reader:
        if not rec or not rec[1].strip():
            continue
        if rec[0].strip():
            row = int(rec[0])
        col = int(rec[1])
        base[row, col] = int(rec[2 + ils]) % Z
    return base


def nr5g_bg2_code(K: int = 128, E: int = 256) -> LdpcCode:
    """5G NR base graph 2 code with circular-buffer rate matching (redundancy version 0).

    The first ``2 Z`` systematic columns are punctured, filler bits pad the
    message to ``10 Z`` and the transmitted bits are read sequentially from
    column ``2 Z`` onward, skipping fillers.
    """
    kb = 10 if K > 640 else 9 if K > 560 else 8 if K > 192 else 6
    Z = min(z for s in NR_LIFTING_SETS for z in s if kb * z >= K)
    kcols = 10 * Z
    filler = np.arange(K, kcols)
    # parity columns needed after the fillers are skipped
    n_sys_tx = kcols - 2 * Z - filler.size
    n_par = E - n_sys_tx
    if n_par <= 0:
        raise ConstructionError("E too small for the message")
    extra_rows = max(4, -(-n_par // Z))
    if extra_rows > 42:
        raise ConstructionError("E exceeds the mother code length")
    base = nr_bg2_shifts(Z)[:extra_rows, :10 + extra_rows]
    H = expand_base_graph(base, Z)
    order = np.arange(2 * Z, H.N)
    order = order[(order < K) | (order >= kcols)]
    tx = order[:E]
    return LdpcCode(f"5G-BG2 K={K} E={E}", H, np.arange(K), tx, filler)


def _dvbs2_table(rate: str) -> tuple[list[list[int]], int, int]:
    lines = _data_text(f"dvbs2_normal_{rate}.txt").splitlines()
    header = lines[0]
    k = int(header.split("k=")[1].split(",")[0])
    q = int(header.split("q=")[1].split()[0])
    return [list(map(int, l.split())) for l in lines[1:] if l.strip()], k, q


def dvbs2_matrix(rate: str = "1_2") -> ParityCheckMatrix:
    """DVB-S2 normal frame (n = 64800) parity-check matrix from the address tables.

    Information bit ``j`` is connected to parity checks
    ``(x + (j mod 360) q) mod (n - k)`` for every address ``x`` of its group
    of 360; the parity part is a staircase.  Layers are blocks of 360
    consecutive rows, split further where a column would otherwise be touched
    twice within one layer.
    """
    table, k, q = _dvbs2_table(rate)
    n = 64800
    M = n - k
    if len(table) * 360 != k:
        raise ConstructionError("address table does not match k")
    rows, cols = [], []
    t = np.arange(360)
    for g, addrs in enumerate(table):
        j = g * 360 + t
        for x in addrs:
            rows.append((x + t * q) % M)
            cols.append(j)
    rows.append(np.arange(M))
    cols.append(k + np.arange(M))
    rows.append(np.arange(1, M))
    cols.append(k + np.arange(M - 1))
    H = ParityCheckMatrix(np.concatenate(rows), np.concatenate(cols), (M, n))
    blocks = [np.arange(i, min(i + 360, M)) for i in range(0, M, 360)]
    return H.with_layers(split_conflicting_layers(H, blocks))


def dvbs2_code(rate: str = "1_2") -> LdpcCode:
    H = dvbs2_matrix(rate)
    k = H.N - H.M
    return LdpcCode(f"DVB-S2 {rate.replace('_', '/')}", H, np.arange(k), np.arange(H.N))
