"""Monte-Carlo engine: chunked frame simulation with deterministic aggregation.

Every SNR point is split into chunks of frames.  Chunk ``c`` of point ``p``
draws its messages and noise from ``SeedSpec(master, stream).rng(p, c)``, so a
chunk's outcome depends only on the seed and never on which worker ran it.
Chunks are aggregated strictly in index order and the stop rule is checked
after each one; chunks computed past the stopping chunk are discarded.  The
statistics are therefore identical for any worker count (only the wall-clock
rule depends on timing).
"""
from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import ebn0_to_sigma, wilson_interval
from .config import ExperimentConfig, config_from_dict
from .schemes import Scheme, build_scheme

STOP_ERRORS = "min_frame_errors"
STOP_FRAMES = "max_frames"
STOP_WALL = "max_wall_seconds"


@dataclass
class PointResult:
    ebn0_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    bits_total: int
    stop_reason: str
    iterations: dict[int, int] | None = None
    seconds: float = field(default=0.0, compare=False)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total if self.bits_total else float("nan")

    @property
    def ci(self) -> tuple[float, float]:
        """95 % Wilson interval of the FER."""
        return wilson_interval(self.frame_errors, self.frames)


@dataclass
class SimResult:
    """Outcome of one experiment.

    ``block`` is the ``(n, k)`` pair used for the finite-length bound and
    ``payload_bits`` the number of information bits per frame.  ``config``
    is the experiment configuration as a plain dictionary.
    """

    label: str
    config: dict
    rate: float
    payload_bits: int
    block: tuple[int, int]
    points: list[PointResult]
    all_zero: bool = False

    def point(self, ebn0_db: float) -> PointResult:
        for p in self.points:
            if abs(p.ebn0_db - ebn0_db) < 1e-9:
                return p
        raise KeyError(ebn0_db)


# ---------------------------------------------------------------------------
# Workers

_worker_scheme: Scheme | None = None


def _init_worker(cfg_dict: dict) -> None:
    global _worker_scheme
    _worker_scheme = build_scheme(config_from_dict(cfg_dict).scheme)


def _chunk(scheme: Scheme, seed, point: int, chunk: int, sigma: float, frames: int):
    rng = seed.rng(point, chunk)
    st = scheme.run(rng, sigma, frames)
    hist = None
    if st.iterations is not None:
        vals, counts = np.unique(st.iterations, return_counts=True)
        hist = dict(zip(vals.tolist(), counts.tolist()))
    return frames, int(st.frame_errors.sum()), int(st.bit_errors.sum()), hist


def _remote_chunk(seed, point, chunk, sigma, frames):
    return _chunk(_worker_scheme, seed, point, chunk, sigma, frames)


# ---------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, progress=None) -> SimResult:
    """Simulate every SNR point of ``cfg`` until its stop rule fires.

    ``progress(point_result)`` is called after each finished point.
    """
    scheme = build_scheme(cfg.scheme)
    workers = cfg.resolved_workers
    chunk = cfg.chunk_frames or scheme.default_chunk
    stop = cfg.stop
    points: list[PointResult] = []
    pool = None
    if workers > 1 and stop.max_frames > 0:
        pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg.to_dict(),))
    try:
        for pi, snr in enumerate(cfg.snr_points):
            if stop.max_frames == 0:
                break
            sigma = ebn0_to_sigma(snr, scheme.rate)
            t0 = time.perf_counter()
            sizes = _chunk_sizes(stop.max_frames, chunk)
            frames = errors = bits = 0
            hist: Counter | None = None
            reason = STOP_FRAMES
            pending: dict[int, object] = {}
            next_submit = 0
            for ci in range(len(sizes)):
                if pool is None:
                    res = _chunk(scheme, cfg.seed, pi, ci, sigma, sizes[ci])
                else:
                    while next_submit < len(sizes) and len(pending) < 2 * workers:
                        pending[next_submit] = pool.submit(
                            _remote_chunk, cfg.seed, pi, next_submit, sigma, sizes[next_submit])
                        next_submit += 1
                    res = pending.pop(ci).result()
                f, fe, be, h = res
                frames += f
                errors += fe
                bits += be
                if h is not None:
                    hist = (hist or Counter()) + Counter(h)
                if errors >= stop.min_frame_errors:
                    reason = STOP_ERRORS
                    break
                if frames >= stop.max_frames:
                    reason = STOP_FRAMES
                    break
                if stop.max_wall_seconds is not None and time.perf_counter() - t0 >= stop.max_wall_seconds:
                    reason = STOP_WALL
                    break
            for fut in pending.values():
                fut.cancel()
            p = PointResult(snr, frames, errors, bits, frames * scheme.payload_bits, reason,
                            None if hist is None else dict(sorted(hist.items())),
                            time.perf_counter() - t0)
            points.append(p)
            if progress:
                progress(p)
    finally:
        if pool is not None:
            pool.shutdown(wait=True, cancel_futures=True)
    return SimResult(scheme.label, cfg.to_dict(), scheme.rate, scheme.payload_bits,
                     scheme.block, points, scheme.all_zero)


def _chunk_sizes(max_frames: int, chunk: int) -> "_Sizes":
    return _Sizes(max_frames, chunk)


class _Sizes:
    """Lazy list of chunk sizes summing to ``max_frames``."""

    def __init__(self, total: int, chunk: int):
        self.total, self.chunk = total, chunk

    def __len__(self):
        return -(-self.total // self.chunk)

    def __getitem__(self, i):
        if not 0 <= i < len(self):
            raise IndexError(i)
        return min(self.chunk, self.total - i * self.chunk)
