"""Command-line front end: sum rules, cross-checks and sweeps as CSV or JSON data.

Every command returns a list of rows; each numeric result carries an
``abs_error`` column. CSV output starts with ``#`` comment lines echoing
the configuration and its hash; JSON output holds the same fields. Floats
are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import closedforms as cf
from . import oracle
from .basis1d import transverse_kernel
from .errors import DrumsumError
from .green2d import BCPair, Rect, green_with_error
from .sumrule import Density2, ZERO_MODE_CHOICES, zeta_box3_separable, zeta_general

OUTDIR_ENV = "DRUMSUM_OUTDIR"
EPS = float(np.finfo(float).eps)
SECTOR_SERIES_REL = 1e-12


class ConfigError(DrumsumError, ValueError):
    """The command-line configuration is invalid."""


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)

    def digest(self) -> str:
        blob = json.dumps({"command": self.command, **self.parameters}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- argument parsing helpers ------------------------------------------------------


def parse_rect(text: str):
    """'1x2' -> Rect(1, 2); '1x1x2' -> (1.0, 1.0, 2.0) for the 3D box."""
    try:
        dims = tuple(float(v) for v in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"cannot parse rectangle {text!r}; expected AxB or AxBxC") from None
    if len(dims) == 2:
        return Rect(*dims)
    if len(dims) == 3 and all(d > 0 for d in dims):
        return dims
    raise ConfigError(f"cannot parse rectangle {text!r}; expected AxB or AxBxC")


def parse_point(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse point {text!r}; expected x,y") from None
    return x, y


def parse_density(text: str) -> Density2:
    """Density mini-language: const:<v>, conformal-annulus:<rmin>, power-annulus:<b>,<rmin>."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "const":
            return Density2.const(float(arg or 1.0))
        if kind == "conformal-annulus":
            return Density2.conformal_annulus(float(arg))
        if kind == "power-annulus":
            b, rmin = (float(v) for v in arg.split(","))
            return Density2.power_annulus(b, rmin)
    except ValueError:
        raise ConfigError(f"bad density argument in {text!r}") from None
    raise ConfigError(f"unknown density {text!r}; use const:<v>, conformal-annulus:<rmin> "
                      "or power-annulus:<b>,<rmin>")


def parse_range(text: str) -> list[float]:
    """'v', 'a,b,c', 'a:b:step' (inclusive) or 'a:b:log[:n]' (n log-spaced points, default 25)."""
    text = text.strip()
    try:
        if ":" not in text:
            return [float(v) for v in text.split(",")]
        parts = text.split(":")
        a, b = float(parts[0]), float(parts[1])
        if len(parts) >= 3 and parts[2] == "log":
            n = int(parts[3]) if len(parts) == 4 else 25
            if a <= 0 or b <= 0 or n < 2:
                raise ConfigError(f"log range {text!r} needs positive ends and >= 2 points")
            return list(np.geomspace(a, b, n))
        if len(parts) != 3:
            raise ValueError
        step = float(parts[2])
        if step <= 0 or b < a:
            raise ConfigError(f"range {text!r} needs a <= b and a positive step")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [a + i * step for i in range(n)]
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}") from None


def _phi(args) -> float:
    if args.phi is not None:
        return float(args.phi)
    return float(args.phi_over_pi) * math.pi


# --- commands ----------------------------------------------------------------------


def _closed(value: float, rel: float = 8 * EPS) -> dict:
    return {"value": float(value), "abs_error": abs(float(value)) * rel}


def cmd_kernel(args) -> list[dict]:
    v = float(transverse_kernel(args.family, args.L, args.kappa2, args.y, args.yp,
                                zero_mode=args.zero_mode))
    return [{"family": args.family, "L": args.L, "kappa2": args.kappa2, "y": args.y,
             "yp": args.yp, **_closed(v, 16 * EPS)}]


def cmd_green(args) -> list[dict]:
    rect = parse_rect(args.rect)
    if not isinstance(rect, Rect):
        raise ConfigError("green needs a 2D rectangle AxB")
    R, Rp = parse_point(args.r), parse_point(args.rp)
    g = green_with_error(args.bc, rect, R, Rp, axis=args.axis)
    return [{"bc": args.bc, "rect": args.rect, "r": args.r, "rp": args.rp, "value": g.value,
             "abs_error": g.tail_bound + 16 * EPS * abs(g.value), "modes_used": g.modes_used,
             "axis": g.axis}]


def cmd_zeta(args) -> list[dict]:
    rect = parse_rect(args.rect)
    out = []
    for p in args.p:
        if isinstance(rect, Rect):
            res = zeta_general(p, args.bc, rect, parse_density(args.density), method=args.method,
                               x_modes=args.x_modes, zero_mode=args.zero_mode)
        else:
            if args.bc.upper() != "DD" or not args.density.startswith("const"):
                raise ConfigError("the 3D box supports bc DD with a constant density only")
            c = float(args.density.partition(":")[2] or 1.0)
            res = zeta_box3_separable(p, rect, lambda t: np.full_like(t, c))
        out.append({"bc": args.bc, "rect": args.rect, "density": args.density, "p": p,
                    "value": res.value, "abs_error": res.abs_error, "modes_used": res.modes_used})
    return out


def _small_hole_error(case: str, r: float) -> float:
    """Size of the first omitted order of a small-hole expansion (4x for safety)."""
    lg = abs(math.log(r))
    if case.startswith("NDP"):
        return 4 * r ** 8 * lg ** 3
    return 4 * r ** 4 * lg ** 2


def _annulus_engine(bc: str, r: float, p: int, zero_mode: str = "spectral"):
    return zeta_general(p, bc, Rect(-math.log(r), 2 * math.pi), Density2.conformal_annulus(r),
                        zero_mode=zero_mode)


def cmd_annulus(args) -> list[dict]:
    r = args.rmin
    row = {"form": args.form, "rmin": r}
    if args.form == "series":
        row.update(p=2, **_closed(cf.annulus_z2_dp_series(r)))
    elif args.form == "series-uncorrected":
        row.update(p=2, **_closed(cf.annulus_z2_dp_series_uncorrected(r)))
    elif args.form == "polylog":
        row.update(p=2, **_closed(cf.annulus_z2_dp_polylog(r)))
    elif args.form == "small-hole":
        if not args.case:
            raise ConfigError("--form small-hole needs --case")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            v = cf.annulus_small_hole(args.case, r)
        row.update(case=args.case.upper(), value=v,
                   abs_error=_small_hole_error(args.case.upper(), r),
                   warning="; ".join(str(w.message) for w in caught))
    else:
        res = _annulus_engine(args.bc, r, args.p, args.zero_mode)
        row.update(bc=args.bc, p=args.p, value=res.value, abs_error=res.abs_error)
    return [row]


def cmd_sector(args) -> list[dict]:
    phi = _phi(args)
    out = []
    for p in args.p:
        v = cf.sector_zeta(phi, p)
        s = cf.sector_zeta_series(phi, p)
        out.append({"phi": phi, "p": p, **_closed(v, 64 * EPS), "series": s,
                    "series_deviation": s - v})
    return out


def _inhom_row(r: float, b: float, asym: bool) -> dict:
    v = cf.inhom_annulus_z2(r, b)
    row = {"rmin": r, "b": b, **_closed(v, 1e-14)}
    mirror = cf.inhom_annulus_z2(r, -4 - b)
    row["mirror"] = mirror
    row["asymmetry"] = v - mirror
    if asym:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            row["asymptotic"] = cf.inhom_annulus_z2_asym(r)
    return row


def cmd_inhom(args) -> list[dict]:
    return [_inhom_row(args.rmin, args.b, args.asym)]


def _spectrum(args):
    if args.domain == "rectangle":
        rect = parse_rect(args.rect)
        if not isinstance(rect, Rect):
            raise ConfigError("oracle rectangle must be 2D")
        return oracle.rectangle_spectrum(args.bc, rect, args.emax)
    if args.domain == "annulus":
        return oracle.annulus_spectrum(args.edge, args.rmin, args.emax)
    return oracle.sector_spectrum(_phi(args), args.emax)


def cmd_oracle(args) -> list[dict]:
    spec = _spectrum(args)
    if args.spectrum_csv:
        oracle.spectrum_to_csv(spec, args.spectrum_csv)
    cert = oracle.weyl_certificate(spec)
    out = []
    for p in args.p:
        res = oracle.zeta_bruteforce(spec, p, oracle.TailModel(args.tail))
        out.append({"domain": args.domain, "label": spec.label, "p": p, "value": res.value,
                    "abs_error": res.abs_error, "modes": spec.count,
                    "truncation_energy": spec.truncation_energy,
                    "weyl_count": cert.count, "weyl_area_estimate": cert.weyl_area,
                    "weyl_ok": cert.ok})
    return out


def _report(case: str, entries: list[tuple[str, float, float]], **extra) -> list[dict]:
    vals = [v for _, v, _ in entries]
    dev = max(abs(a - b) for a in vals for b in vals)
    rows = [{"case": case, "method": name, "value": v, "abs_error": e, **extra}
            for name, v, e in entries]
    for row in rows:
        row["max_pairwise_deviation"] = dev
    return rows


def cmd_compare(args) -> list[dict]:
    r, p = args.rmin, args.p
    case = args.case
    if case in ("annulus-dp", "annulus-np", "annulus-ndp", "annulus-dnp"):
        bc = case.split("-")[1].upper()
        edge = {"DP": "DD", "NP": "NN", "NDP": "ND", "DNP": "DN"}[bc]
        eng = _annulus_engine(bc, r, p)
        entries = [("engine", eng.value, eng.abs_error)]
        if bc == "DP" and p == 2:
            ser, poly = cf.annulus_z2_dp_series(r), cf.annulus_z2_dp_polylog(r)
            entries += [("series", ser, 8 * EPS * abs(ser)), ("polylog", poly, 8 * EPS * abs(poly))]
        if bc == "NP":
            # the NP2 small-hole expansion follows the unweighted zero-mode projection
            pr = _annulus_engine(bc, r, p, "unweighted")
            entries.append(("engine-unweighted-projection", pr.value, pr.abs_error))
        hole = f"{bc}{p}"
        if r < 0.2 and hole in cf.SMALL_HOLE_CASES:
            entries.append(("small-hole", cf.annulus_small_hole(hole, r), _small_hole_error(hole, r)))
        spec = oracle.annulus_spectrum(edge, r, args.emax)
        bf = oracle.zeta_bruteforce(spec, p)
        entries.append(("bessel-oracle", bf.value, bf.abs_error))
        return _report(case, entries, rmin=r, p=p)
    if case == "sector":
        phi = _phi(args)
        spec = oracle.sector_spectrum(phi, args.emax)
        bf = oracle.zeta_bruteforce(spec, p)
        closed, series = cf.sector_zeta(phi, p), cf.sector_zeta_series(phi, p)
        # the order series carries a truncated n^{-2p} tail correction
        entries = [("closed-form", closed, 64 * EPS * abs(closed)),
                   ("series", series, SECTOR_SERIES_REL * abs(series)),
                   ("bessel-oracle", bf.value, bf.abs_error)]
        if p <= 4:
            ra = oracle.sector_zeta_rayleigh(phi, p, min(args.emax, 1e4))
            entries.append(("rayleigh-accelerated", ra.value, ra.abs_error))
        return _report(case, entries, phi=phi, p=p)
    if case == "lattice":
        rect = parse_rect(args.rect)
        eng = zeta_general(p, args.bc, rect, Density2.const(1.0))
        spec = oracle.rectangle_spectrum(args.bc, rect, args.emax)
        bf = oracle.zeta_bruteforce(spec, p)
        return _report(case, [("engine", eng.value, eng.abs_error),
                              ("lattice-oracle", bf.value, bf.abs_error)], bc=args.bc, p=p)
    raise ConfigError(f"unknown compare case {case!r}")


def _annulus_dp_row(r: float, p: int) -> dict:
    if p == 2:
        v = cf.annulus_z2_dp_polylog(r)
        return {"rmin": r, "p": p, **_closed(v), "series": cf.annulus_z2_dp_series(r)}
    res = _annulus_engine("DP", r, p)
    return {"rmin": r, "p": p, "value": res.value, "abs_error": res.abs_error}


def _sweep_row(task):
    kind, a, b, flag = task
    if kind == "inhom":
        return _inhom_row(a, b, flag)
    return _annulus_dp_row(a, int(b))


def cmd_sweep(args) -> list[dict]:
    rmins = parse_range(args.rmin)
    if args.target == "inhom":
        if args.p != 2:
            raise ConfigError("the radial-power annulus sum rule is available for p = 2 only")
        bs = parse_range(args.b)
        tasks = [("inhom", r, b, args.asym or (len(bs) == 1 and bs[0] == -2.0))
                 for r in rmins for b in bs]
        if len(tasks) < 2:
            raise ConfigError("a sweep needs at least two points")
    else:
        tasks = [("annulus-dp", r, args.p, False) for r in rmins]
        if len(tasks) < 2:
            raise ConfigError("a sweep needs at least two points")
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            return list(pool.map(_sweep_row, tasks))      # map keeps parameter order
    return [_sweep_row(t) for t in tasks]


def cmd_sector_constants(args) -> list[dict]:
    out = []
    for key, phi in cf.SECTOR_EXACT_ANGLES.items():
        for p in (2, 3, 4):
            v = cf.sector_zeta(phi, p)
            exact = cf.sector_exact_value(key, p)
            out.append({"phi_over_pi": key, "p": p, **_closed(v, 64 * EPS), "exact": exact,
                        "rel_deviation": abs(v / exact - 1)})
    return out


COMMANDS = {"kernel": cmd_kernel, "green": cmd_green, "zeta": cmd_zeta, "annulus": cmd_annulus,
            "sector": cmd_sector, "inhom": cmd_inhom, "oracle": cmd_oracle, "compare": cmd_compare,
            "sweep": cmd_sweep, "sector-constants": cmd_sector_constants}


# --- parser ------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drumsum", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help=f"output file; default ${OUTDIR_ENV}/<command>.<format> "
                                      "when that variable is set, else standard output")
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", parents=[common], help="transverse 1D kernel g(y, y'; kappa^2)")
    k.add_argument("--family", required=True, choices=("D", "N", "P", "ND", "DN"))
    k.add_argument("--L", type=float, required=True)
    k.add_argument("--kappa2", type=float, required=True)
    k.add_argument("--y", type=float, required=True)
    k.add_argument("--yp", type=float, required=True)
    k.add_argument("--zero-mode", action="store_true",
                   help="allow the kappa^2 = 0 pseudo-kernel for N and P")

    g = sub.add_parser("green", parents=[common], help="2D Green's function on a rectangle")
    g.add_argument("--bc", required=True, choices=[b.value for b in BCPair])
    g.add_argument("--rect", required=True)
    g.add_argument("--r", required=True, help="x,y (centred coordinates)")
    g.add_argument("--rp", required=True, help="x',y'")
    g.add_argument("--axis", choices=("x", "y"))

    z = sub.add_parser("zeta", parents=[common], help="sum rule from the Green's-function engine")
    z.add_argument("--bc", required=True, choices=[b.value for b in BCPair])
    z.add_argument("--rect", required=True, help="AxB (or AxBxC for the Dirichlet box)")
    z.add_argument("--p", type=_int_list, required=True, help="order(s), e.g. 2 or 2,3")
    z.add_argument("--density", default="const:1")
    z.add_argument("--method", choices=("auto", "expansion"), default="auto")
    z.add_argument("--x-modes", type=int, default=16)
    z.add_argument("--zero-mode", choices=ZERO_MODE_CHOICES, default="spectral")

    a = sub.add_parser("annulus", parents=[common], help="annulus sum rules")
    a.add_argument("--form", required=True,
                   choices=("series", "series-uncorrected", "polylog", "small-hole", "engine"))
    a.add_argument("--rmin", type=float, required=True)
    a.add_argument("--case", help="small-hole case, e.g. DP2 or NDP4")
    a.add_argument("--bc", default="DP", choices=("DP", "NP", "NDP", "DNP"))
    a.add_argument("--p", type=int, default=2)
    a.add_argument("--zero-mode", choices=ZERO_MODE_CHOICES, default="spectral")

    s = sub.add_parser("sector", parents=[common], help="Dirichlet circular sector")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--phi", type=float, help="half opening angle in radians")
    grp.add_argument("--phi-over-pi", type=float, help="half opening angle in units of pi")
    s.add_argument("--p", type=_int_list, default=[2, 3, 4])

    i = sub.add_parser("inhom", parents=[common], help="annulus with radial density r^b")
    i.add_argument("--rmin", type=float, required=True)
    i.add_argument("--b", type=float, required=True)
    i.add_argument("--asym", action="store_true", help="add the b = -2 small-hole asymptote")

    o = sub.add_parser("oracle", parents=[common], help="brute-force spectral sums")
    o.add_argument("--domain", required=True, choices=("rectangle", "annulus", "sector"))
    o.add_argument("--emax", type=float, required=True)
    o.add_argument("--p", type=_int_list, default=[2])
    o.add_argument("--bc", default="DD", choices=[b.value for b in BCPair])
    o.add_argument("--rect", default="1x1")
    o.add_argument("--edge", default="DD", choices=oracle.ANNULUS_EDGES)
    o.add_argument("--rmin", type=float, default=0.5)
    og = o.add_mutually_exclusive_group()
    og.add_argument("--phi", type=float)
    og.add_argument("--phi-over-pi", type=float, default=0.5)
    o.add_argument("--tail", choices=oracle.TAIL_KINDS, default="weyl_integral")
    o.add_argument("--spectrum-csv", help="also write the spectrum (E, multiplicity)")

    c = sub.add_parser("compare", parents=[common], help="cross-check independent evaluations")
    c.add_argument("--case", required=True,
                   choices=("annulus-dp", "annulus-np", "annulus-ndp", "annulus-dnp",
                            "sector", "lattice"))
    c.add_argument("--rmin", type=float, default=0.5)
    c.add_argument("--p", type=int, default=2)
    c.add_argument("--emax", type=float, default=2e4)
    c.add_argument("--bc", default="DD", choices=[b.value for b in BCPair])
    c.add_argument("--rect", default="1x1")
    cg = c.add_mutually_exclusive_group()
    cg.add_argument("--phi", type=float)
    cg.add_argument("--phi-over-pi", type=float, default=0.5)

    w = sub.add_parser("sweep", parents=[common], help="parameter sweeps (figure data)")
    w.add_argument("target", choices=("inhom", "annulus-dp"))
    w.add_argument("--rmin", required=True, help="value, list a,b,c, a:b:step or a:b:log[:n]")
    w.add_argument("--b", default="-2", help="density exponent(s), same syntax")
    w.add_argument("--p", type=int, default=2)
    w.add_argument("--asym", action="store_true")
    w.add_argument("--workers", type=int, default=1)

    sub.add_parser("sector-constants", parents=[common], help="sector constants at four angles")
    return ap


# --- output ------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def render(config: RunConfig, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        doc = {"command": config.command, "config": config.parameters,
               "config_hash": config.digest(),
               "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
        return json.dumps(doc, indent=1, default=str) + "\n"
    cols: list[str] = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    buf.write(f"# drumsum {config.command}\n")
    buf.write(f"# config: {json.dumps(config.parameters, sort_keys=True, default=str)}\n")
    buf.write(f"# config_hash: {config.digest()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    return buf.getvalue()


def _destination(args) -> str | None:
    if args.out:
        return args.out
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        name = args.command if args.command != "sweep" else f"sweep-{args.target}"
        return os.path.join(outdir, f"{name}.{args.format}")
    return None


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Rewrite '--b -6:2:0.1' as '--b=-6:2:0.1'; argparse would read the value as an option."""
    out: list[str] = []
    for tok in argv:
        prev = out[-1] if out else ""
        if (len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")
                and prev.startswith("--") and "=" not in prev):
            out[-1] = f"{prev}={tok}"
        else:
            out.append(tok)
    return out


def run(argv: list[str] | None = None) -> int:
    """Entry point; returns the exit status (0 ok, 2 invalid input, 1 computation failure)."""
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            _error("ConfigError", "invalid command line (see usage above)", None)
        return int(exc.code or 0)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "format", "out")}
    config = RunConfig(args.command, params)
    try:
        rows = COMMANDS[args.command](args)
    except ValueError as exc:
        # bad input values: ConfigError, DomainError, OrderError, ...
        _error(type(exc).__name__, str(exc), args.command)
        return 2
    except (DrumsumError, ArithmeticError) as exc:
        _error(type(exc).__name__, str(exc), args.command)
        return 1
    text = render(config, rows, args.format)
    dest = _destination(args)
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)
    return 0


def _error(kind: str, message: str, command: str | None) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "command": command}) + "\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
