"""Deterministic SVG error-rate figures."""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..bounds import BoundPoint
from ..core import DomainError
from .sim import SimResult


@dataclass(frozen=True)
class FigureStyle:
    title: str = ""
    show_ber: bool = False
    show_ci: bool = True
    width: float = 6.0
    height: float = 4.5
    ymin: float | None = None
    ymax: float = 1.0


@dataclass
class Series:
    """One plotted curve: FER with optional Wilson interval and BER."""

    label: str
    ebn0_db: np.ndarray
    fer: np.ndarray
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None
    ber: np.ndarray | None = None

    @classmethod
    def from_result(cls, r: SimResult) -> "Series":
        pts = [p for p in r.points if p.frames > 0]
        ci = np.array([p.ci for p in pts]).reshape(-1, 2)
        return cls(r.label, np.array([p.ebn0_db for p in pts]), np.array([p.fer for p in pts]),
                   ci[:, 0], ci[:, 1], np.array([p.ber for p in pts]))

    @classmethod
    def from_rows(cls, rows: list[dict]) -> list["Series"]:
        """Group CSV rows (see :func:`~unicodec.harness.io.read_csv`) by scheme."""
        out: dict[str, list[dict]] = {}
        for row in rows:
            if row["frames"] > 0:
                out.setdefault(row["scheme"], []).append(row)
        series = []
        for label, rs in out.items():
            rs = sorted(rs, key=lambda d: d["ebn0_db"])
            col = lambda k: np.array([d[k] for d in rs], dtype=float)
            series.append(cls(label, col("ebn0_db"), col("fer"), col("ci_low"), col("ci_high"),
                              col("ber")))
        return series


def _plt():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def render_figure(results: list, bound: list[BoundPoint] | None = None,
                  style: FigureStyle = FigureStyle(), path=None) -> Path | str:
    """FER versus Eb/N0 on a log axis; one marked series per scheme.

    ``results`` holds :class:`SimResult` or :class:`Series` objects.  The
    bound is drawn as an unmarked black line.  Series are tagged in the SVG
    with ids ``series-<i>`` (BER curves ``ber-<i>``, the bound ``bound``).
    Returns ``path`` or, without a path, the SVG text.  Output is
    byte-identical for identical input.
    """
    series = [s if isinstance(s, Series) else Series.from_result(s) for s in results]
    if not series:
        raise DomainError("nothing to plot")
    plt = _plt()
    rc = {"svg.hashsalt": "unicodec", "svg.fonttype": "path", "path.simplify": False}
    with plt.rc_context(rc):
        fig, ax = plt.subplots(figsize=(style.width, style.height))
        markers = "osD^v<>ph*"
        lows = []
        for i, s in enumerate(series):
            color = f"C{i % 10}"
            (line,) = ax.plot(s.ebn0_db, s.fer, marker=markers[i % len(markers)], ms=4,
                              lw=1.0, color=color, label=s.label)
            line.set_gid(f"series-{i}")
            if style.show_ci and s.ci_low is not None and len(s.fer):
                err = np.vstack([s.fer - s.ci_low, s.ci_high - s.fer])
                eb = ax.errorbar(s.ebn0_db, s.fer, yerr=np.clip(err, 0, None), fmt="none",
                                 ecolor=color, elinewidth=0.6, capsize=2)
                for k, art in enumerate(eb.lines[1] + eb.lines[2]):
                    art.set_gid(f"ci-{i}-{k}")
            if style.show_ber and s.ber is not None:
                (bl,) = ax.plot(s.ebn0_db, s.ber, ls="--", marker=markers[i % len(markers)],
                                ms=3, lw=0.8, color=color, label=f"{s.label} (BER)")
                bl.set_gid(f"ber-{i}")
            vals = s.fer[s.fer > 0]
            if vals.size:
                lows.append(vals.min())
        if bound:
            b = sorted(bound, key=lambda p: p.ebn0_db)
            (bl,) = ax.plot([p.ebn0_db for p in b], [p.fer_bound for p in b], color="k",
                            lw=1.0, marker="none",
                            label=f"normal approximation ({b[0].n},{b[0].k})")
            bl.set_gid("bound")
        ax.set_yscale("log")
        ymin = style.ymin if style.ymin is not None else (
            10 ** np.floor(np.log10(min(lows)) - 0.5) if lows else 1e-6)
        ax.set_ylim(ymin, style.ymax)
        xs = np.concatenate([s.ebn0_db for s in series])
        if xs.size:
            pad = 0.05 * max(np.ptp(xs), 0.2)
            ax.set_xlim(xs.min() - pad, xs.max() + pad)
        ax.set_xlabel("Eb/N0 (dB)")
        ax.set_ylabel("BER / FER" if style.show_ber else "FER")
        if style.title:
            ax.set_title(style.title)
        ax.grid(True, which="both", ls=":", lw=0.5)
        ax.legend(fontsize=7, loc="lower left")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    text = buf.getvalue()
    if path is None:
        return text
    p = Path(path)
    try:
        p.write_text(text)
    except OSError as e:
        raise OSError(e.errno, f"{e.strerror}: {p}") from None
    return p
