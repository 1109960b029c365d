"""Command-line entry point: ``ptwell <command> [flags]``.

Every command writes ``manifest.json`` (a ResultRecord) plus a command-specific
CSV or JSON payload into ``--out``.  Exit codes: 0 success, 1 usage error,
2 numerical failure (the manifest still carries the diagnostic payload).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import records
from .errors import PTWellError, SectorError
from .model import PotentialSpec, Rep

log = logging.getLogger("ptwell")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

# acceptance thresholds used by --paper-check
TABLE_HBAR_TOL = 1e-3
TABLE_E_TOL = 5e-4
CONTACT_TOL = 1e-3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def parse_grid(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptwell", description=__doc__.splitlines()[0])
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="JSON file with default flag values (flags win)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", help="stabilized lowest levels")
    s.add_argument("--rep", default="H", choices=["H", "K", "B", "R", "harmonic"])
    s.add_argument("--param", type=parse_complex, default=1.0)
    s.add_argument("--count", type=int, default=6)
    s.add_argument("--gate", type=float, default=None)

    s = sub.add_parser("cross", help="crossing record for one n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--what", choices=["p", "a", "both", "none"], default="both")
    s.add_argument("--no-exponent", action="store_true")

    s = sub.add_parser("table1", help="contact parameters for several n with reference comparison")
    s.add_argument("--ns", type=parse_grid, default=[3, 4, 5, 6, 7])
    s.add_argument("--paper-check", action="store_true")

    s = sub.add_parser("stokes", help="Stokes complex at energy E")
    s.add_argument("--E", type=parse_complex, default=None)
    s.add_argument("--hbar", type=parse_complex, default=0.0)
    s.add_argument("--mode", choices=["truncation", "pade11", "continued_fraction"], default="pade11")
    s.add_argument("--kind", choices=["stokes", "antiStokes"], default="stokes")
    s.add_argument("--harmonic", action="store_true")
    s.add_argument("--paper-check", action="store_true")

    s = sub.add_parser("zeros", help="zero catalog of one eigenfunction")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--hbar", type=parse_complex, required=True)
    s.add_argument("--Y", type=float, default=3.0, help="depth of the search window below the real axis")

    s = sub.add_parser("monodromy", help="transport a level around hbar_n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps-frac", type=float, default=0.1)
    s.add_argument("--loops", type=float, default=1.0)
    s.add_argument("--direction", type=int, choices=[1, -1], default=1)

    s = sub.add_parser("sheets", help="endpoint labels of E_m along a family of hbar curves")
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--c-grid", type=parse_grid, default=[-2.0, -0.5, 0.5, 2.0])
    s.add_argument("--path", choices=["alpha-line", "printed"], default="alpha-line")
    s.add_argument("--h-end", type=float, default=0.02)
    return p


def resolve_args(argv) -> argparse.Namespace:
    """Parse twice: once to find --config, then with the config values installed as defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = set(cfg) - known - {"out", "verbose"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    subparser.set_defaults(**{k: v for k, v in cfg.items() if k in known})
    parser.set_defaults(**{k: v for k, v in cfg.items() if k in ("out", "verbose")})
    args = parser.parse_args(argv)
    # config values bypass argparse's type conversion
    for k in ("param", "E", "hbar"):
        if isinstance(getattr(args, k, None), (str, int, float, dict)):
            v = getattr(args, k)
            setattr(args, k, complex(v["re"], v["im"]) if isinstance(v, dict) else parse_complex(v))
    for k in ("ns", "c_grid"):
        if isinstance(getattr(args, k, None), str):
            setattr(args, k, parse_grid(getattr(args, k)))
    return args


# ------------------------------------------------------------------ commands

def _path(args, name):
    return os.path.join(args.out, name)


def cmd_spectrum(args):
    from .spectral import GATE_REL, stabilized_spectrum

    rep = Rep.parse(args.rep)
    param = args.param.real if args.param.imag == 0 else args.param
    try:
        spec = PotentialSpec(rep, param)
    except SectorError as exc:
        raise UsageError(str(exc)) from exc
    sl = stabilized_spectrum(spec, args.count, gate=args.gate or GATE_REL)
    rows = [(i, lv.energy.real, lv.energy.imag, lv.accuracy) for i, lv in enumerate(sl.levels)]
    records.write_csv(_path(args, "levels.csv"), ["index", "reE", "imE", "accuracy"], rows)
    out = {"levels": [lv.energy for lv in sl.levels], "accuracy": [lv.accuracy for lv in sl.levels],
           "N": sl.N, "omega": sl.omega, "files": ["levels.csv"]}
    return out, ["spectrum"]


def cmd_cross(args):
    from . import crossing

    hn, Ec = crossing.find_crossing(args.n)
    rec = {"n": args.n, "hbar_n": hn, "E_crossing": Ec}
    if args.what in ("p", "both"):
        rec["hbar_p"], rec["E_p"], rec["node_offset"] = crossing.find_contact_p(args.n)
    if args.what in ("a", "both"):
        rec["hbar_a"], rec["E_a"], rec["antinode_offset"] = crossing.find_contact_a(args.n)
    if not args.no_exponent:
        be, ci = crossing.branch_exponent(args.n)
        rec["branchExponent"] = be
        rec["branchExponentCI"] = list(ci)
    records.atomic_write(_path(args, "crossing.json"), records.dumps(rec) + "\n")
    rec["files"] = ["crossing.json"]
    return rec, ["crossing", "contact"]


def cmd_table1(args):
    from .crossing import TABLE1, table1

    rows = table1(tuple(int(n) for n in args.ns))
    csv_rows, checks = [], []
    for r in rows:
        for kind in ("p", "a"):
            h, E = r[f"hbar_{kind}"], r[f"E_{kind}"]
            ref = TABLE1[kind].get(r["n"])
            dh = abs(h - ref[0]) if ref else math.nan
            dE = abs(E - ref[1]) if ref else math.nan
            ok = bool(ref) and dh <= TABLE_HBAR_TOL and dE <= TABLE_E_TOL
            csv_rows.append((r["n"], kind, h, E, ref[0] if ref else math.nan, ref[1] if ref else math.nan, dh, dE))
            checks.append({"n": r["n"], "kind": kind, "pass": ok, "dhbar": dh, "dE": dE})
    records.write_csv(_path(args, "table1.csv"),
                      ["n", "kind", "hbar", "E", "ref_hbar", "ref_E", "abs_dhbar", "abs_dE"], csv_rows)
    if args.paper_check:
        for c in checks:
            print(f"{'PASS' if c['pass'] else 'FAIL'} table1 n={c['n']} {c['kind']}: "
                  f"|dhbar|={c['dhbar']:.2e} |dE|={c['dE']:.2e}")
    return {"rows": rows, "checks": checks, "files": ["table1.csv"]}, ["contact"]


def _stokes_paper_check():
    from .wkb import critical_energy, trace_stokes

    Ec = critical_energy()
    out = []
    d = trace_stokes(Ec, 0.0)
    out.append(("attached at E^c", d.topology == "attached" and (d.contact_distance or 0) < CONTACT_TOL))
    out.append(("detached at E^c+1e-3", trace_stokes(Ec + 1e-3, 0.0).topology == "detached"))
    out.append(("asymmetric at E^c+1e-3i", trace_stokes(Ec + 1e-3j, 0.0).topology == "asymmetric"))
    h = trace_stokes(1.0, 0.0, spec=PotentialSpec(Rep.HARMONIC, 1.0))
    sectors = {l.sector for l in h.lines if l.end == "escape"}
    out.append(("harmonic: four sectors, no board", h.board is None and len(sectors) == 4))
    return Ec, out


def cmd_stokes(args):
    from .wkb import critical_energy, trace_stokes

    spec = PotentialSpec(Rep.HARMONIC, 1.0) if args.harmonic else None
    E = args.E if args.E is not None else (1.0 if args.harmonic else critical_energy())
    hbar = args.hbar if args.hbar != 0 else 0.0
    data = trace_stokes(E, hbar, mode=args.mode, spec=spec, kind=args.kind)
    rows = []
    for i, line in enumerate(data.lines):
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(line.points)))])
        name = f"{line.origin}:{line.launch}"
        rows += [(i, line.kind, name, line.end, sv, z.real, z.imag) for sv, z in zip(s, line.points)]
    records.write_csv(_path(args, "polylines.csv"), ["lineId", "type", "origin", "end", "s", "reZ", "imZ"], rows)
    out = {"energy": data.energy, "hbar": data.hbar, "topology": data.topology,
           "contactDistance": data.contact_distance, "turningPoints": data.turning_points.labeled(),
           "lines": [{"origin": l.origin, "launch": l.launch, "end": l.end, "sector": l.sector,
                      "arclength": l.arclength, "phaseDrift": l.phase_drift} for l in data.lines],
           "files": ["polylines.csv"]}
    if args.paper_check:
        Ec, checks = _stokes_paper_check()
        for name, ok in checks:
            print(f"{'PASS' if ok else 'FAIL'} stokes {name}")
        out["check"] = {"E_c": Ec, "checks": [{"name": n, "pass": ok} for n, ok in checks]}
    return out, ["stokes-geometry"]


def cmd_zeros(args):
    from .spectral import stabilized_spectrum
    from .wavefield import classify_catalog, default_rect, make_state

    h = args.hbar.real if args.hbar.imag == 0 else args.hbar
    try:
        spec = PotentialSpec(Rep.H, h)
    except SectorError as exc:
        raise UsageError(str(exc)) from exc
    sl = stabilized_spectrum(spec, args.m + 1)
    st = make_state(sl[args.m])
    cat = classify_catalog(st, default_rect(st, Y=args.Y))
    out = {"m": args.m, "hbar": h, "energy": st.energy, "nodes": cat.nodes, "antinodes": cat.antinodes,
           "boardZeros": cat.board_zeros, "stationaryPoints": cat.stationary_points,
           "sequence": cat.sequence, "imaginaryNodes": cat.imaginary_nodes,
           "imaginaryAntinodes": cat.imaginary_antinodes,
           "window": [cat.rect.x0, cat.rect.x1, cat.rect.y0, cat.rect.y1], "files": ["catalog.json"]}
    records.atomic_write(_path(args, "catalog.json"), records.dumps(out) + "\n")
    return out, ["zeros"]


def cmd_monodromy(args):
    from .crossing import monodromy, son_prediction

    p = monodromy(args.n, args.eps_frac, args.loops, args.direction)
    rows = [(float(np.real(h)), float(np.imag(h)), lv.energy.real, lv.energy.imag) for h, lv in p.transported.samples]
    records.write_csv(_path(args, "transport.csv"), ["reHbar", "imHbar", "reE", "imE"], rows)
    out = {"n": p.n, "hbar_n": p.hbar_n, "radius": p.radius, "loops": p.loops, "startLabel": p.start_label,
           "endLabel": p.end_label, "startEnergy": p.start_energy, "endEnergy": p.end_energy,
           "reference": p.reference, "defect": p.defect, "files": ["transport.csv"]}
    if abs(args.loops - 0.5) < 1e-12:
        out["expectedLabel"] = son_prediction(args.n, args.direction)
    return out, ["monodromy"]


def cmd_sheets(args):
    from .crossing import sheet_scan

    res = sheet_scan(args.m, args.c_grid, args.path, h_end=args.h_end)
    out = {"m": args.m, "path": args.path, "stripes": res, "exploratory": True, "files": ["sheets.json"]}
    records.atomic_write(_path(args, "sheets.json"), records.dumps(res) + "\n")
    return out, ["riemann-sheets"]


COMMANDS = {"spectrum": cmd_spectrum, "cross": cmd_cross, "table1": cmd_table1, "stokes": cmd_stokes,
            "zeros": cmd_zeros, "monodromy": cmd_monodromy, "sheets": cmd_sheets}


def _inputs(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("verbose",)}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = resolve_args(argv)
    except UsageError as exc:
        print(f"ptwell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    os.makedirs(args.out, exist_ok=True)
    try:
        outputs, refs = COMMANDS[args.command](args)
        code = EXIT_OK
    except UsageError as exc:
        print(f"ptwell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PTWellError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        outputs = {"error": type(exc).__name__, "message": str(exc),
                   "diagnostics": records.to_jsonable_safe(exc.payload)}
        refs, code = [], EXIT_NUMERIC
    rec = records.ResultRecord(args.command, records.to_jsonable(_inputs(args)), records.to_jsonable(outputs), refs)
    records.write_record(_path(args, "manifest.json"), rec)
    return code


if __name__ == "__main__":
    sys.exit(main())
