"""Command-line interface: ``unicodec construct|simulate|bound|plot|reproduce``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="unicodec", description="Polar / LDPC forward-error-correction workbench.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("construct", help="emit a code-spec file")
    csub = c.add_subparsers(dest="family", required=True, parser_class=_Parser)
    cp = csub.add_parser("polar", help="polar code spec (JSON)")
    cp.add_argument("--N", type=int, required=True)
    cp.add_argument("--K", type=int, required=True, help="information bits incl. CRC")
    cp.add_argument("--construction", choices=["ga", "5g", "aed"], default="ga")
    cp.add_argument("--crc", help="CRC polynomial in hex including the leading term, e.g. 0xE21")
    cp.add_argument("--i-min", type=int, nargs="+", help="minimal information set (aed)")
    cp.add_argument("--design-snr", type=float, help="GA design Eb/N0 in dB")
    cp.add_argument("--target-fer", type=float, default=1e-6)
    cp.add_argument("--out", required=True)
    cl = csub.add_parser("ldpc", help="LDPC parity-check matrix (alist)")
    cl.add_argument("--standard", choices=["5g_bg2", "dvbs2"], required=True)
    cl.add_argument("--rate", choices=["1_2", "8_9"], default="1_2")
    cl.add_argument("--K", type=int, default=128)
    cl.add_argument("--E", type=int, default=256)
    cl.add_argument("--out", required=True)
    cs = csub.add_parser("sc-ldpc", help="coupled chain (JSON)")
    cs.add_argument("--dv", type=int, default=4)
    cs.add_argument("--dc", type=int, default=8)
    cs.add_argument("--w", type=int, default=3)
    cs.add_argument("--L", type=int, default=10)
    cs.add_argument("--Z", type=int, default=800)
    cs.add_argument("--seed", type=int, default=0)
    cs.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="run an experiment config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--workers", type=int)
    s.add_argument("--plot", action="store_true", help="also write an SVG figure")

    b = sub.add_parser("bound", help="normal-approximation FER bound")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--ebn0", type=float, nargs="+", required=True, help="Eb/N0 values in dB")
    b.add_argument("--csv", help="also write the curve in result-CSV form")

    pl = sub.add_parser("plot", help="CSV/JSON results to SVG")
    pl.add_argument("inputs", nargs="+")
    pl.add_argument("--out", required=True)
    pl.add_argument("--title", default="")
    pl.add_argument("--ber", action="store_true", help="also draw BER curves")

    r = sub.add_parser("reproduce", help="regenerate a comparison figure")
    r.add_argument("figure", choices=["fig1", "fig2", "fig3"])
    r.add_argument("--quick", action="store_true", help="reduced scale smoke run")
    r.add_argument("--out-dir", default=".")
    r.add_argument("--workers", type=int)
    r.add_argument("--seed", type=int, default=1)
    return p


def _print_point(label, p):
    lo, hi = p.ci
    print(f"{label:28s} {p.ebn0_db:7.3f} dB  frames={p.frames:<9d} errors={p.frame_errors:<5d} "
          f"FER={p.fer:.3e} [{lo:.2e}, {hi:.2e}]  BER={p.ber:.3e}  ({p.stop_reason}, "
          f"{p.seconds:.1f} s)", flush=True)


def _construct(a) -> None:
    if a.family == "polar":
        from .harness.schemes import polar_spec_from_descriptor
        from .polar.construct import save_spec
        code = {"N": a.N, "K": a.K, "construction": a.construction, "crc": a.crc,
                "i_min": a.i_min, "design_snr_db": a.design_snr, "target_fer": a.target_fer}
        spec = polar_spec_from_descriptor(code)
        save_spec(spec, a.out)
        print(f"wrote polar ({spec.N},{spec.K}) spec to {a.out}")
    elif a.family == "ldpc":
        from .harness.schemes import ldpc_code_from_descriptor
        from .ldpc.matrix import write_alist
        desc = ({"standard": "dvbs2", "rate": a.rate} if a.standard == "dvbs2"
                else {"standard": "5g_bg2", "K": a.K, "E": a.E})
        code, _ = ldpc_code_from_descriptor(desc)
        write_alist(code.H, a.out)
        print(f"wrote {code.name} ({code.H.M} x {code.H.N}) to {a.out}")
    else:
        from .sc_ldpc import build_coupled_chain, regular_base, save_chain
        chain = build_coupled_chain(regular_base(a.dv, a.dc), w=a.w, L_chain=a.L, Z=a.Z,
                                    seed=a.seed)
        save_chain(chain, a.out)
        print(f"wrote SC-LDPC chain ({chain.H.M} x {chain.H.N}) to {a.out}")


def _simulate(a) -> None:
    from dataclasses import replace
    from .harness import export_csv, export_json, load_config, render_figure, run_experiment
    cfg = load_config(a.config)
    if a.workers is not None:
        cfg = replace(cfg, workers=a.workers)
    res = run_experiment(cfg, progress=lambda p: _print_point(cfg.scheme.label or cfg.name, p))
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.name or Path(a.config).stem
    export_csv(res, out / f"{stem}.csv")
    export_json(res, out / f"{stem}.json")
    print(f"wrote {out / stem}.csv and .json")
    if a.plot and any(p.frames for p in res.points):
        render_figure([res], path=out / f"{stem}.svg")


def _bound(a) -> None:
    from .bounds import bound_curve
    from .harness.io import export_csv
    curve = bound_curve(a.n, a.k, a.ebn0)
    for p in curve:
        print(f"{p.ebn0_db:.4f} {p.fer_bound:.4e}")
    if a.csv:
        export_csv([], a.csv, curve)


def _plot(a) -> None:
    from .harness.io import load_json, read_csv
    from .harness.plotting import FigureStyle, Series, render_figure
    series, bound = [], []
    for path in a.inputs:
        if path.lower().endswith(".json"):
            res, b = load_json(path)
            series += [Series.from_result(r) for r in res]
        else:
            rows, b = read_csv(path)
            series += Series.from_rows(rows)
        bound += b
    render_figure(series, bound or None, FigureStyle(title=a.title, show_ber=a.ber), a.out)
    print(f"wrote {a.out}")


def _reproduce(a) -> None:
    from .harness.reproduce import reproduce
    paths = reproduce(a.figure, a.out_dir, quick=a.quick, seed=a.seed, workers=a.workers,
                      progress=lambda c, p: _print_point(c.scheme.label, p))
    for kind, path in paths.items():
        print(f"wrote {path}")


_COMMANDS = {"construct": _construct, "simulate": _simulate, "bound": _bound, "plot": _plot,
             "reproduce": _reproduce}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    try:
        _COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError) as e:
        print(f"unicodec {args.command}: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    _entry()
