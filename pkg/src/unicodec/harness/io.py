"""CSV and JSON persistence of simulation results and bound curves.

CSV files use RFC 4180 conventions (CRLF line ends, minimal quoting) with the
columns of :data:`CSV_COLUMNS`.  The last column, ``kind``, is ``sim`` for
simulated points and ``bound`` for rows of a finite-length bound curve, which
carry the bound value in ``fer`` and leave the counting columns empty.
"""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

from ..bounds import BoundPoint
from .sim import PointResult, SimResult

CSV_COLUMNS = ["scheme", "ebn0_db", "frames", "frame_errors", "bit_errors", "fer", "ber",
               "ci_low", "ci_high", "seconds", "kind"]
RESULT_FORMAT = "unicodec-result/1"
_BOUND_LABEL = re.compile(r"\(n=(\d+), k=(\d+)\)")


def bound_label(n: int, k: int) -> str:
    return f"normal approximation (n={n}, k={k})"


def _as_list(results) -> list[SimResult]:
    return [results] if isinstance(results, SimResult) else list(results)


def _num(x: float) -> str:
    return "" if x != x else repr(float(x))


def _open(path, mode):
    p = Path(path)
    try:
        return p.open(mode, newline="" if "b" not in mode else None)
    except OSError as e:
        raise OSError(e.errno, f"{e.strerror}: {p}") from None


def csv_rows(results, bound: list[BoundPoint] | None = None) -> list[dict]:
    rows = []
    for r in _as_list(results):
        for p in r.points:
            lo, hi = p.ci
            rows.append({"scheme": r.label, "ebn0_db": _num(p.ebn0_db), "frames": p.frames,
                         "frame_errors": p.frame_errors, "bit_errors": p.bit_errors,
                         "fer": _num(p.fer), "ber": _num(p.ber), "ci_low": _num(lo),
                         "ci_high": _num(hi), "seconds": f"{p.seconds:.3f}", "kind": "sim"})
    for b in bound or []:
        rows.append({"scheme": bound_label(b.n, b.k), "ebn0_db": _num(b.ebn0_db), "frames": "",
                     "frame_errors": "", "bit_errors": "", "fer": _num(b.fer_bound), "ber": "",
                     "ci_low": "", "ci_high": "", "seconds": "", "kind": "bound"})
    return rows


def export_csv(results, path, bound: list[BoundPoint] | None = None) -> Path:
    """Write one row per SNR point (and per bound point)."""
    with _open(path, "w") as f:
        w = csv.DictWriter(f, CSV_COLUMNS, lineterminator="\r\n")
        w.writeheader()
        w.writerows(csv_rows(results, bound))
    return Path(path)


def read_csv(path) -> tuple[list[dict], list[BoundPoint]]:
    """Simulation rows (as dictionaries with numeric fields) and bound points."""
    sims, bound = [], []
    with _open(path, "r") as f:
        reader = csv.DictReader(f, strict=True)
        if reader.fieldnames is None or not set(CSV_COLUMNS[:-1]) <= set(reader.fieldnames):
            raise ValueError(f"{path}: not a result CSV (columns {reader.fieldnames})")
        for row in reader:
            if row.get("kind", "sim") == "bound":
                m = _BOUND_LABEL.search(row["scheme"])
                n, k = (int(m[1]), int(m[2])) if m else (0, 0)
                bound.append(BoundPoint(float(row["ebn0_db"]), n, k, float(row["fer"])))
            else:
                d = dict(row)
                for key in ("frames", "frame_errors", "bit_errors"):
                    d[key] = int(d[key])
                for key in ("ebn0_db", "fer", "ber", "ci_low", "ci_high", "seconds"):
                    d[key] = float(d[key]) if d[key] else float("nan")
                sims.append(d)
    return sims, bound


# ---------------------------------------------------------------------------
# JSON


def result_to_dict(r: SimResult) -> dict:
    return {
        "format": RESULT_FORMAT,
        "label": r.label,
        "rate": r.rate,
        "payload_bits": r.payload_bits,
        "block": list(r.block),
        "all_zero": r.all_zero,
        "config": r.config,
        "points": [{
            "ebn0_db": p.ebn0_db, "frames": p.frames, "frame_errors": p.frame_errors,
            "bit_errors": p.bit_errors, "bits_total": p.bits_total, "stop_reason": p.stop_reason,
            "iterations": None if p.iterations is None else [[k, v] for k, v in p.iterations.items()],
            "seconds": p.seconds, "fer": p.fer if p.frames else None,
            "ber": p.ber if p.bits_total else None, "ci": list(p.ci),
        } for p in r.points],
    }


def result_from_dict(d: dict) -> SimResult:
    if d.get("format") != RESULT_FORMAT:
        raise ValueError(f"unsupported result format {d.get('format')!r}")
    pts = [PointResult(p["ebn0_db"], p["frames"], p["frame_errors"], p["bit_errors"],
                       p["bits_total"], p["stop_reason"],
                       None if p["iterations"] is None else {int(k): int(v) for k, v in p["iterations"]},
                       p["seconds"]) for p in d["points"]]
    return SimResult(d["label"], d["config"], d["rate"], d["payload_bits"], tuple(d["block"]),
                     pts, d.get("all_zero", False))


def export_json(results, path, bound: list[BoundPoint] | None = None) -> Path:
    """A list of results (each embedding its configuration) plus the bound curve."""
    doc = {"results": [result_to_dict(r) for r in _as_list(results)],
           "bound": [[b.ebn0_db, b.n, b.k, b.fer_bound] for b in bound or []]}
    with _open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    return Path(path)


def load_json(path) -> tuple[list[SimResult], list[BoundPoint]]:
    with _open(path, "r") as f:
        doc = json.load(f)
    return ([result_from_dict(r) for r in doc["results"]],
            [BoundPoint(float(e), int(n), int(k), float(v)) for e, n, k, v in doc.get("bound", [])])
