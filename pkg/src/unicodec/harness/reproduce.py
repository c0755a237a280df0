"""Canned experiment sets for the three comparison figures.

``fig1``: length 256, rate 1/2.  ``fig2``: length about 64k, rate 1/2, FER
and BER.  ``fig3``: length about 64k, rate 8/9.  The full scale uses the
default stop rule on SNR grids covering FER down to about 1e-4; the quick
scale runs two points per scheme with a handful of errors.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..bounds import bound_curve
from ..core import SeedSpec
from ..outer import CRC11
from .config import ExperimentConfig, SchemeDescriptor, StopRule
from .io import export_csv, export_json
from .plotting import FigureStyle, render_figure
from .sim import run_experiment

FIGURES = ("fig1", "fig2", "fig3")

_BP8 = {"kernel": "spa", "schedule": "layered", "max_iterations": 8}
_BP32 = dict(_BP8, max_iterations=32)
_WBP8 = {"window_size": 8, "iterations_per_step": 1, "kernel": "spa", "schedule": "layered"}


def _polar_sc(N, K, label="Polar SC"):
    return SchemeDescriptor("polar", label, {"N": N, "K": K, "construction": "ga"},
                            {"kind": "ssc"})


def _schemes(fig: str):
    """``(descriptor, full grid, quick grid)`` triples and the bound block."""
    if fig == "fig1":
        return [
            (_polar_sc(256, 128), np.arange(1.0, 4.51, 0.5), [2.0, 3.0]),
            (SchemeDescriptor("ldpc", "LDPC 5G LBP-8", {"standard": "5g_bg2", "K": 128, "E": 256},
                              _BP8), np.arange(1.0, 4.01, 0.5), [2.0, 3.0]),
            (SchemeDescriptor("polar", "Polar 5G CA-SCL-8",
                              {"N": 256, "K": 139, "construction": "5g", "crc": CRC11.to_hex()},
                              {"kind": "scl", "list_size": 8}), np.arange(1.0, 3.51, 0.5),
             [1.5, 2.0]),
            (SchemeDescriptor("polar", "Polar AE-SC-8",
                              {"N": 256, "K": 128, "construction": "aed", "i_min": [31, 57]},
                              {"kind": "aed", "ensemble_size": 8}), np.arange(0.5, 3.51, 0.5),
             [1.5, 2.0]),
        ], (256, 128), np.arange(0.0, 4.01, 0.1)
    if fig == "fig2":
        return [
            (SchemeDescriptor("ldpc", "LDPC DVB-S2 LBP-8", {"standard": "dvbs2", "rate": "1_2"},
                              _BP8), np.arange(1.4, 2.01, 0.1), [1.4, 1.5]),
            (SchemeDescriptor("ldpc", "LDPC DVB-S2 LBP-32", {"standard": "dvbs2", "rate": "1_2"},
                              _BP32), np.arange(0.6, 0.851, 0.025), [0.6, 0.7]),
            (SchemeDescriptor("ldpc", "LDPC+BCH DVB-S2 LBP-8",
                              {"standard": "dvbs2", "rate": "1_2", "bch_t": 12}, _BP8),
             np.array([1.2258, 1.3258, 1.4258, 1.5258]), [1.2258, 1.3258]),
            (_polar_sc(65536, 32768), np.arange(1.0, 1.61, 0.1), [1.1, 1.2]),
            (SchemeDescriptor("sc_ldpc", "SC-LDPC WBP-8",
                              {"dv": 4, "dc": 8, "w": 3, "L_chain": 10, "Z": 800, "seed": 0},
                              _WBP8), np.arange(1.35, 1.61, 0.05), [1.35, 1.45]),
        ], (65536, 32768), np.arange(0.0, 0.41, 0.01)
    if fig == "fig3":
        return [
            (_polar_sc(65536, 58254), np.arange(3.7, 4.21, 0.1), [3.7, 3.8]),
            (SchemeDescriptor("ldpc", "LDPC DVB-S2 LBP-8", {"standard": "dvbs2", "rate": "8_9"},
                              _BP8), np.arange(3.6, 3.86, 0.05), [3.6, 3.7]),
            (SchemeDescriptor("ldpc", "LDPC+BCH DVB-S2 LBP-8",
                              {"standard": "dvbs2", "rate": "8_9", "bch_t": 8}, _BP8),
             np.array([3.6258, 3.6758, 3.7258, 3.7758]), [3.6258, 3.6758]),
        ], (65536, 58254), np.arange(2.9, 3.41, 0.01)
    raise ValueError(f"unknown figure {fig!r}")


def figure_configs(fig: str, quick: bool = False, seed: int = 1,
                   workers: int | None = None) -> tuple[list[ExperimentConfig], tuple[int, int], np.ndarray]:
    schemes, block, bgrid = _schemes(fig)
    if quick:
        stop = StopRule(min_frame_errors=5, max_frames=40 if block[0] > 1000 else 2000)
    else:
        stop = StopRule()
    cfgs = []
    for i, (desc, full, short) in enumerate(schemes):
        pts = [round(float(s), 4) for s in (short if quick else full)]
        cfgs.append(ExperimentConfig(desc, tuple(pts), stop, seed=SeedSpec(seed, i),
                                     workers=workers, name=f"{fig}-{i}"))
    return cfgs, block, bgrid


def reproduce(fig: str, out_dir, quick: bool = False, seed: int = 1,
              workers: int | None = None, progress=None) -> dict[str, Path]:
    """Run a figure's experiments and write ``<fig>.csv``, ``.json`` and ``.svg``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfgs, (n, k), bgrid = figure_configs(fig, quick, seed, workers)
    results = []
    for cfg in cfgs:
        results.append(run_experiment(cfg, progress=(lambda p, c=cfg: progress(c, p)) if progress else None))
    bound = bound_curve(n, k, [round(float(s), 4) for s in bgrid])
    paths = {
        "csv": export_csv(results, out / f"{fig}.csv", bound),
        "json": export_json(results, out / f"{fig}.json", bound),
        "svg": render_figure(results, bound, FigureStyle(title=fig, show_ber=fig == "fig2"),
                             out / f"{fig}.svg"),
    }
    return paths
