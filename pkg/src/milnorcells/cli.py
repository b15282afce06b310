"""Command-line front end: ``milnorcells {lattice,predict,critical,verify,family} FILE``.

Exit status: 0 when the requested check passes (or for purely combinatorial
commands), 1 when found and predicted counts disagree, 2 for bad input or
usage.  Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, fields, replace

from .analysis import analyze, family_scan, solve_stage
from .arrangement import ArrangementError, fmt_rational, load_arrangement, parse_rational
from .frame import choose_frame
from .lattice import build_lattice, poincare, predict_cells
from .solver import TrackerOptions

COMMANDS = ("lattice", "predict", "critical", "verify", "family")
FORMATS = ("human", "json", "csv")
CSV_HEADER = ("t", "stage", "predicted", "found", "diverged", "max_norm", "pass")

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str
    seed: int = 0
    stage: int | None = None
    tol: tuple = ()  # (name, value) overrides of TrackerOptions fields
    t_values: tuple = ()
    format: str = "human"
    csv_path: str | None = None  # family table written here in addition to stdout

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise UsageError(f"unknown output format {self.format!r}")
        if self.format == "csv" and self.command != "family":
            raise UsageError("CSV output is only available for 'family'")
        if self.t_values and self.command != "family":
            raise UsageError("--values only applies to 'family'")
        if self.csv_path is not None and self.command != "family":
            raise UsageError("--csv only applies to 'family'")
        if self.stage is not None and self.command != "critical":
            raise UsageError("--stage only applies to 'critical'")

    def tracker_options(self) -> TrackerOptions:
        names = {f.name for f in fields(TrackerOptions)} - {"seed"}
        opts = TrackerOptions(seed=self.seed)
        for name, value in self.tol:
            if name not in names:
                raise UsageError(f"unknown tolerance {name!r}; choose from {', '.join(sorted(names))}")
            cast = int if name == "max_retries" else float
            try:
                opts = replace(opts, **{name: cast(value)})
            except ValueError as e:
                raise UsageError(f"bad value for {name}: {e}") from None
        return opts


# --- commands ----------------------------------------------------------------------

def _lattice(arr, cfg):
    lat = build_lattice(arr)
    data = lat.to_dict()
    lines = [f"dim {lat.dim}, {lat.n} hyperplanes, {len(lat.flats)} flats",
             "rank  mu  members"]
    for f in lat.flats:
        lines.append(f"{f.rank:4d} {f.mobius:3d}  {{{', '.join(str(i) for i in sorted(f.members))}}}")
    lines.append("chi(t) = " + _poly_text(lat.characteristic()))
    return EXIT_OK, data, "\n".join(lines)


def _predict(arr, cfg):
    pd = poincare(build_lattice(arr))
    cells = predict_cells(pd, arr.n)
    data = {"poincare": pd.to_dict(), "cell_counts": cells.to_dict()}
    lines = [f"chi(t)   = {_poly_text(pd.chi)}",
             f"P(M)     = {_poly_text(pd.p_M)}",
             f"P(M*)    = {_poly_text(pd.p_Mstar)}",
             f"c_F      = {_tuple(cells.c_F)}   (euler {cells.euler_F})",
             f"c_M*     = {_tuple(cells.c_Mstar)}   (euler {cells.euler_Mstar})",
             f"c_M      = {_tuple(cells.c_M)}"]
    return EXIT_OK, data, "\n".join(lines)


def _critical(arr, cfg):
    k = arr.dim if cfg.stage is None else cfg.stage
    if not 2 <= k <= arr.dim:
        raise UsageError(f"--stage must lie in 2..{arr.dim}")
    opts = cfg.tracker_options()
    pd = poincare(build_lattice(arr))
    U = choose_frame(arr, cfg.seed)
    rep = solve_stage(arr, U, k, pd, opts)
    lines = [_stage_line(rep), "solutions:"]
    for z, idx in zip(rep.solutions, rep.indices):
        coords = "  ".join(f"{c.real:+.10f}{c.imag:+.10f}i" for c in z)
        lines.append(f"  {coords}   index {'?' if idx is None else idx}")
    return (EXIT_OK if rep.match else EXIT_MISMATCH), rep.to_dict(), "\n".join(lines)


def _verify(arr, cfg):
    rep = analyze(arr, cfg.tracker_options())
    cc = rep.cell_counts
    lines = [f"predicted c_F = {_tuple(cc.c_F)}", f"found     c_F = {_tuple(rep.found())}"]
    lines += [_stage_line(s) for s in rep.stages]
    lines.append(f"euler {'ok' if rep.euler_ok else 'FAIL'}, "
                 f"equivariance {'ok' if rep.equivariance.passed else 'FAIL'}, "
                 f"indices {'ok' if rep.indices_ok else 'FAIL'}, frame seed {rep.frame_seed}")
    lines.append("PASS" if rep.passed else "FAIL")
    return (EXIT_OK if rep.passed else EXIT_MISMATCH), rep.to_dict(), "\n".join(lines)


def _family(arr, cfg):
    if arr.param_name is None:
        raise UsageError("'family' needs an arrangement with a 'param:' line")
    if not cfg.t_values:
        raise UsageError("'family' needs --values")
    opts = cfg.tracker_options()
    fam = family_scan(arr, cfg.t_values, opts)
    lines = []
    for row in fam.rows:
        if row.error:
            lines.append(f"t = {fmt_rational(row.t)}: error: {row.error}")
            continue
        warn = "  (norm close to the divergence threshold)" if row.norm_warning else ""
        lines.append(f"t = {fmt_rational(row.t)}: {_stage_line(row.top)}{warn}")
        if row.norm_warning:
            print(f"warning: t = {fmt_rational(row.t)}: max solution norm "
                  f"{row.max_solution_norm:.4g} exceeds 1% of divergence_norm", file=sys.stderr)
    ok = all(r.passed for r in fam.rows)
    return (EXIT_OK if ok else EXIT_MISMATCH), fam.to_dict(), "\n".join(lines), fam


def family_csv(fam) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in fam.rows:
        top = row.top
        if top is None:
            w.writerow([fmt_rational(row.t), "", "", "", "", "", "false"])
            continue
        w.writerow([fmt_rational(row.t), top.stage_dim, top.predicted, top.found, top.diverged,
                    repr(top.max_solution_norm), "true" if row.passed else "false"])
    return buf.getvalue()


# --- formatting helpers ------------------------------------------------------------

def _poly_text(coeffs):
    terms = []
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
        mag = abs(c)
        body = str(mag) if (not mono or mag != 1) else ""
        body = f"{body}{mono}" if body and mono else (body or mono)
        terms.append(("-" if c < 0 else "+", body))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    return out + "".join(f" {s} {b}" for s, b in terms[1:])


def _tuple(seq):
    return "(" + ", ".join(str(v) for v in seq) + ")"


def _stage_line(s):
    return (f"stage {s.stage_dim}: predicted {s.predicted}, found {s.found}, "
            f"bezout {s.bezout}, at infinity {s.diverged}, failed {s.failed}, "
            f"max norm {s.max_solution_norm:.6g} -> {'match' if s.match else 'MISMATCH'}")


# --- entry points ------------------------------------------------------------------

def run(cfg: RunConfig):
    """Execute one command; returns (exit status, text written to stdout)."""
    try:
        arr = load_arrangement(cfg.input_path)
    except OSError as e:
        raise UsageError(f"cannot read {cfg.input_path}: {e.strerror or e}") from None
    if arr.param_name is not None and cfg.command != "family":
        raise UsageError(f"{cfg.input_path} defines a parameter; use 'family'")
    handler = {"lattice": _lattice, "predict": _predict, "critical": _critical,
               "verify": _verify, "family": _family}[cfg.command]
    out = handler(arr, cfg)
    status, data, human = out[:3]
    if cfg.format == "json":
        text = json.dumps(data, indent=2)
    elif cfg.format == "csv":
        text = family_csv(out[3])
    else:
        text = human
    if cfg.csv_path is not None:
        try:
            with open(cfg.csv_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(family_csv(out[3]))
        except OSError as e:
            raise UsageError(f"cannot write {cfg.csv_path}: {e.strerror or e}") from None
    return status, text


def _parse_values(text):
    try:
        return tuple(parse_rational(v.strip()) for v in text.split(",") if v.strip())
    except (ValueError, ZeroDivisionError, ArrangementError) as e:
        raise UsageError(f"bad --values entry: {e}") from None


def _parse_tol(items):
    out = []
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            name, value = "newton_tol", item
        out.append((name.strip(), value.strip()))
    return tuple(out)


def build_parser():
    p = argparse.ArgumentParser(
        prog="milnorcells",
        description="Predict minimal cell counts of an arrangement complement and its "
                    "Milnor fiber, and check them by solving for critical points.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", help="arrangement file")
    p.add_argument("--seed", type=int, default=0, help="random seed for frames and homotopies")
    p.add_argument("--stage", type=int, help="stage to solve for 'critical' (default: top)")
    p.add_argument("--tol", action="append", metavar="[NAME=]VALUE",
                   help="tracker tolerance override; a bare number sets newton_tol")
    p.add_argument("--values", help="comma-separated rational t-values for 'family', e.g. 1,1/10,0")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--csv", metavar="PATH", help="write the family table as CSV ('-' for stdout)")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.json and args.csv == "-":
            raise UsageError("--json and --csv - both write to stdout")
        fmt = "json" if args.json else ("csv" if args.csv == "-" else "human")
        if args.csv is not None and args.command != "family":
            raise UsageError("--csv only applies to 'family'")
        cfg = RunConfig(args.command, args.input, args.seed, args.stage, _parse_tol(args.tol),
                        _parse_values(args.values) if args.values is not None else (),
                        fmt, args.csv if args.csv not in (None, "-") else None)
        status, text = run(cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ArrangementError as e:
        print(f"error: {args.input}: {e}", file=sys.stderr)
        return EXIT_USAGE
    if text:
        print(text.rstrip("\n"))
    return status


if __name__ == "__main__":
    sys.exit(main())
