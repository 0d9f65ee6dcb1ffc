"""Command-line front end: ``quartop <command> FILE [options]``.

Exit codes: 0 success, 1 usage or parse error, 2 mathematical failure.
Reports are JSON with sorted keys; ``--no-timing`` makes them byte-stable.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from quartop import __version__
from quartop import equivalence as eq
from quartop import expr as ex
from quartop.errors import (
    AllPointsSingular,
    MathError,
    NotConstantType,
    ParseError,
    QuartopError,
    UsageError,
)
from quartop.invariants import ALPHAS, constant_type_test, invariant_record
from quartop.jet import Point, value_of
from quartop.operator4 import NAMES, Diffeo, Operator, pushforward
from quartop.quantize import total_symbol
from quartop.quartic import (
    absolute_invariant,
    classify_roots,
    discriminant,
    hilbert_invariants,
    is_regular,
    sign_class,
)
from quartop.wagner import (
    covariant_derivative_symbol,
    curvature,
    group_type_classify,
    invariant_gradient,
    solve_connection,
    torsion,
    torsion_parallel_residual,
)

SCHEMA_VERSION = 1
DEFAULT_GRID = 5
MAX_CLI_ORDER = 8
FACTORED_TOL = 1e-12


# input ------------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorFile:
    operator: Operator
    window: tuple[float, float, float, float]
    label: str
    digest: str
    path: str


def load_operator(path: str) -> OperatorFile:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("coefficients"), dict):
        raise UsageError(f"{path}: expected an object with a 'coefficients' object")
    coeffs = {}
    for name, text in doc["coefficients"].items():
        if name not in NAMES:
            raise UsageError(f"{path}: unknown coefficient name {name!r}")
        if not isinstance(text, (str, int, float)) or isinstance(text, bool):
            raise UsageError(f"{path}: coefficient {name} must be a string or a number")
        try:
            coeffs[name] = ex.parse(str(text))
        except ParseError as exc:
            raise ParseError(f"coefficient {name}: {exc.message}", exc.offset, exc.expected, exc.text) from exc
    window = doc.get("window", [-1.0, 1.0, -1.0, 1.0])
    if (not isinstance(window, list) or len(window) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in window)):
        raise UsageError(f"{path}: window must be [x0, x1, y0, y1]")
    x0, x1, y0, y1 = (float(v) for v in window)
    if not (x0 <= x1 and y0 <= y1) or not all(map(math.isfinite, (x0, x1, y0, y1))):
        raise UsageError(f"{path}: empty window {window}")
    sources = {n: str(doc["coefficients"][n]) for n in coeffs}
    return OperatorFile(Operator(coeffs, sources), (x0, x1, y0, y1), str(doc.get("label", "")),
                        hashlib.sha256(data).hexdigest(), path)


def parse_point(text: str) -> Point:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--at expects 'x,y', got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise UsageError(f"--at expects numbers, got {text!r}") from exc


def _axis(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid axis must be 'start:stop:count', got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad grid axis {text!r}") from exc
    if n < 1:
        raise UsageError(f"grid count must be positive in {text!r}")
    return [float(v) for v in np.linspace(a, b, n)] if n > 1 else [a]


def parse_grid(text: str) -> list[Point]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--grid expects 'x0:x1:nx,y0:y1:ny', got {text!r}")
    xs, ys = _axis(parts[0]), _axis(parts[1])
    return [(x, y) for x in xs for y in ys]


def window_grid(window: tuple[float, float, float, float], n: int = DEFAULT_GRID) -> list[Point]:
    x0, x1, y0, y1 = window
    return [(float(x), float(y)) for x in np.linspace(x0, x1, n) for y in np.linspace(y0, y1, n)]


def sample_points(args: argparse.Namespace, f: OperatorFile) -> list[Point]:
    if args.at:
        return [parse_point(t) for t in args.at]
    if args.grid:
        return parse_grid(args.grid)
    return window_grid(f.window)


# output helpers ------------------------------------------------------------------------

def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isfinite(f):
            return f
        return "NaN" if math.isnan(f) else ("Infinity" if f > 0 else "-Infinity")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _error_record(p: Point, exc: Exception) -> dict:
    return {"point": list(p), "error": type(exc).__name__, "message": str(exc)}


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _guarded(fn: Callable[[Point], dict]) -> Callable[[Point], dict]:
    def run(p: Point) -> dict:
        try:
            return fn(p)
        except MathError as exc:
            return _error_record(p, exc)
    return run


def _require_some(records: list[dict], what: str) -> None:
    if records and all("error" in r for r in records):
        first = records[0]
        raise AllPointsSingular(f"{what} failed at every sample point ({first['error']}: {first['message']})")


def factored_warnings(A: Operator, points: Sequence[Point]) -> list[str]:
    """Note for symbols given in the real factored normal form."""
    vals = []
    for p in points:
        try:
            vals.append([A.values(p)[f"a{k}"] for k in range(5)])
        except MathError:
            continue
    if not vals:
        return []
    scale = max(1.0, max(abs(v) for row in vals for v in row))
    tol = FACTORED_TOL * scale
    out = []
    if all(abs(r[0]) <= tol and abs(r[4]) <= tol for r in vals):
        out.append("symbol has the factored form dx.dy.(b0 dx^2 + 2 b1 dx.dy + b2 dy^2); "
                   "its discriminant equals b0^2 b2^2 (b1^2 - b0 b2) / 64, and the closed form "
                   "with the factor (9 b1^2 - 16 b0 b2) does not hold (at b = (1, 1, 1) it gives "
                   "-7 instead of 0)")
    return out


# commands --------------------------------------------------------------------------------

def _classify_point(A: Operator, p: Point) -> dict:
    q = A.at(p, 1).principal_symbol()
    qv = q.values()
    i2, i3 = hilbert_invariants(qv)
    rec = {"point": list(p), "coefficients": list(qv.coeffs), "discriminant": discriminant(qv),
           "sign": sign_class(qv), "root_class": str(classify_roots(qv)), "I2": i2, "I3": i3,
           "regular": is_regular(qv)}
    try:
        i0 = absolute_invariant(q)
        rec["I0"] = value_of(i0)
        rec["dI0"] = list(i0.gradient())
    except MathError as exc:
        rec["I0"] = None
        rec["I0_error"] = type(exc).__name__
    if rec["regular"]:
        gx, gy, _ = invariant_gradient(q)
        rec["dK"] = [gx, gy]
    return rec


def cmd_classify(args, f: OperatorFile) -> tuple[list[dict], dict, list[str]]:
    pts = sample_points(args, f)
    A = f.operator
    records = _pmap(_guarded(lambda p: _classify_point(A, p)), pts, args.threads)
    _require_some(records, "classification")
    regular_pts = [tuple(r["point"]) for r in records if r.get("regular")]
    summary: dict = {"regular": len(regular_pts) == len(pts), "regular_points": len(regular_pts),
                     "points": len(pts)}
    if not regular_pts:
        raise AllPointsSingular("the principal symbol is degenerate at every sample point")
    constant, worst = constant_type_test(A, regular_pts)
    summary["constant_type"] = constant
    summary["max_dK"] = worst
    summary["group_type"] = group_type_classify(A, regular_pts).value
    return records, summary, factored_warnings(A, pts)


def cmd_invariants(args, f: OperatorFile) -> tuple[list[dict], dict, list[str]]:
    if args.order < 5:
        raise UsageError("invariants need --order >= 5")
    if args.tresse and args.order < 6:
        raise UsageError("--tresse needs --order >= 6")
    pts = sample_points(args, f)
    A = f.operator
    recs = _pmap(lambda p: invariant_record(A, p, args.tresse, args.order), pts, args.threads)
    records = [r.as_dict() for r in recs]
    if all("error" in r.flags for r in recs):
        first = recs[0].flags
        raise AllPointsSingular(f"every requested point is singular ({first['error']}: {first['message']})")
    summary = {"points": len(pts), "singular_points": sum(1 for r in recs if "error" in r.flags)}
    if args.tresse:
        summary["tresse_singular_points"] = sum(1 for r in recs if "tresse" in r.flags)
    if args.csv:
        _write_csv(args.csv, _invariant_rows(recs))
    return records, summary, []


def _invariant_rows(recs) -> tuple[list[str], list[list]]:
    header = ["x", "y", "I0", "I1"] + [f"J{a[0]}{a[1]}" for a in ALPHAS] + ["flag"]
    rows = []
    for r in recs:
        row = [r.point[0], r.point[1], r.I0, r.I1] + [r.J.get(a) for a in ALPHAS]
        rows.append(row + [r.flags.get("error", r.flags.get("tresse", ""))])
    return header, rows


def _connection_point(A: Operator, p: Point) -> dict:
    q = A.at(p, 3).principal_symbol()
    G, res = solve_connection(q, "auto")
    T = torsion(G)
    R = curvature(G)
    nabla = np.vectorize(value_of)(covariant_derivative_symbol(q, G)).astype(float)
    return {"point": list(p), "Gamma": G.values(), "torsion": T.values(), "theta": T.theta_values(),
            "curvature": R.values(), "curvature_norm": R.norm(),
            "excluded_residuals": [res[0].value, res[1].value],
            "nabla_sigma_max": float(np.abs(nabla).max()),
            "torsion_parallel_max": float(np.abs(torsion_parallel_residual(G, T)).max())}


def cmd_connection(args, f: OperatorFile) -> tuple[list[dict], dict, list[str]]:
    pts = sample_points(args, f)
    A = f.operator
    constant, worst = constant_type_test(A, pts)
    if not constant and not args.force:
        raise NotConstantType(f"the symbol is not of constant type: max |dK| = {worst:.6g} "
                              "over the samples (use --force for a diagnostic solve)")
    records = _pmap(_guarded(lambda p: _connection_point(A, p)), pts, args.threads)
    _require_some(records, "connection")
    summary = {"points": len(pts), "constant_type": constant, "max_dK": worst, "forced": not constant}
    return records, summary, []


def _total_symbol_point(A: Operator, p: Point, force: bool) -> dict:
    ts = total_symbol(A, p, force=force)
    return {"point": list(p), "sigma": {str(l): v for l, v in ts.values().items()},
            "forced": ts.forced, "nabla_sigma_max": ts.residual}


def cmd_total_symbol(args, f: OperatorFile) -> tuple[list[dict], dict, list[str]]:
    pts = sample_points(args, f)
    A = f.operator
    records = _pmap(_guarded(lambda p: _total_symbol_point(A, p, args.force)), pts, args.threads)
    if not args.force:
        errors = [r for r in records if r.get("error") == "NotConstantType"]
        if errors:
            raise NotConstantType(errors[0]["message"] + " (use --force for a diagnostic decomposition)")
    _require_some(records, "total symbol")
    return records, {"points": len(pts)}, []


def cmd_pushforward(args, f: OperatorFile) -> tuple[list[dict], dict, list[str]]:
    if not args.map:
        raise UsageError("pushforward needs --map 'phi1,phi2'")
    parts = args.map.split(",")
    if len(parts) != 2:
        raise UsageError(f"--map expects two comma-separated expressions, got {args.map!r}")
    phi = Diffeo.from_strings(parts[0], parts[1])
    for e in (phi.phi1, phi.phi2):
        extra = ex.free_variables(e) - {"x", "y"}
        if extra:
            raise UsageError(f"--map uses unknown variables {sorted(extra)}")
    pts = sample_points(args, f)
    A = f.operator

    def one(p: Point) -> dict:
        P = pushforward(A, phi, p, order=args.order)
        rec = {"point": list(p), "image": list(phi(p)), "coefficients": P.values()}
        if args.full:
            rec["jets"] = {n: j.coeffs for n, j in P.jets.items()}
        return rec

    records = _pmap(one, pts, args.threads)
    return records, {"points": len(pts), "map": [ex.unparse(phi.phi1), ex.unparse(phi.phi2)]}, []


# equiv takes two files, so it is dispatched separately ------------------------------------

def cmd_equiv(args, fa: OperatorFile, fb: OperatorFile) -> tuple[list[dict], dict, list[str]]:
    pa = sample_points(args, fa)
    pb = sample_points(args, fb)
    sa = eq.signature(fa.operator, pa, full=args.full)
    sb = eq.signature(fb.operator, pb, full=args.full)
    verdict = eq.compare(sa, sb, args.tol)
    v = {k: getattr(verdict, k) for k in verdict.__dataclass_fields__}
    records = [{"file": fa.path, **sa.as_dict()}, {"file": fb.path, **sb.as_dict()}]
    return records, {"verdict": v}, []


# plumbing ------------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _order(text: str) -> int:
    try:
        n = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= n <= MAX_CLI_ORDER:
        raise argparse.ArgumentTypeError(f"order must lie in [0, {MAX_CLI_ORDER}]")
    return n


def _threads(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quartop", description="Invariants of fourth-order operators on the plane.")
    parser.add_argument("--version", action="version", version=f"quartop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--at", action="append", metavar="X,Y", help="sample point (repeatable)")
        g.add_argument("--grid", metavar="X0:X1:NX,Y0:Y1:NY", help="sample grid")
        p.add_argument("--order", type=_order, default=6, help="coefficient jet order (default 6)")
        p.add_argument("--threads", type=_threads, default=1, help="worker threads")
        p.add_argument("--no-timing", action="store_true", help="omit wall-clock timing")
        p.add_argument("-o", "--output", metavar="PATH", help="write the report here instead of stdout")

    p = sub.add_parser("classify", help="discriminant, roots, I0 and group type")
    p.add_argument("file")
    common(p)
    p = sub.add_parser("invariants", help="I0, I1, J_alpha and Tresse derivatives")
    p.add_argument("file")
    p.add_argument("--tresse", action="store_true", help="also compute Tresse derivatives")
    p.add_argument("--csv", metavar="PATH", help="CSV mirror of the records")
    common(p)
    p = sub.add_parser("connection", help="Wagner connection, torsion and curvature")
    p.add_argument("file")
    p.add_argument("--force", action="store_true", help="solve even without constant type")
    common(p)
    p = sub.add_parser("total-symbol", help="total symbol at the sample points")
    p.add_argument("file")
    p.add_argument("--force", action="store_true", help="decompose even without constant type")
    common(p)
    p = sub.add_parser("equiv", help="compare invariant signatures of two operators")
    p.add_argument("file")
    p.add_argument("other")
    p.add_argument("--full", action="store_true", help="use every J_alpha with |alpha| <= 4")
    p.add_argument("--tol", type=float, default=eq.COMPARE_TOL, help="Hausdorff tolerance")
    common(p)
    p = sub.add_parser("pushforward", help="coefficients of the transformed operator")
    p.add_argument("file")
    p.add_argument("--map", metavar="PHI1,PHI2", help="the diffeomorphism, as two expressions")
    p.add_argument("--full", action="store_true", help="include coefficient jets")
    common(p)
    return parser


COMMANDS = {"classify": cmd_classify, "invariants": cmd_invariants, "connection": cmd_connection,
            "total-symbol": cmd_total_symbol, "pushforward": cmd_pushforward}


def _write_csv(path: str, table: tuple[list[str], list[list]]) -> None:
    header, rows = table
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    """``--grid -1:1:5,...`` -> ``--grid=-1:1:5,...`` so argparse does not read a flag."""
    out: list[str] = []
    it = iter(argv)
    for a in it:
        if a in ("--at", "--grid", "--map"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-"):
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(a)
    return out


def run(argv: Sequence[str] | None = None) -> dict:
    """Execute a command and return the report (raises on failure)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    start = time.perf_counter()
    if args.command == "equiv":
        fa, fb = load_operator(args.file), load_operator(args.other)
        records, summary, warnings = cmd_equiv(args, fa, fb)
        inputs = [{"path": f.path, "digest": f.digest, "label": f.label} for f in (fa, fb)]
    else:
        f = load_operator(args.file)
        records, summary, warnings = COMMANDS[args.command](args, f)
        inputs = [{"path": f.path, "digest": f.digest, "label": f.label}]
    report = {"schema": SCHEMA_VERSION, "tool": "quartop", "version": __version__,
              "command": args.command, "inputs": inputs,
              "settings": {k: v for k, v in sorted(vars(args).items())
                           if k not in ("command", "file", "other", "output", "no_timing", "threads", "csv")},
              "records": records, "summary": summary, "warnings": warnings}
    if not args.no_timing:
        report["timing"] = {"seconds": time.perf_counter() - start}
    report = _clean(report)
    text = json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return report


def main(argv: Sequence[str] | None = None) -> int:
    try:
        run(argv)
    except SystemExit as exc:  # --help, --version and argparse usage errors
        return exc.code if isinstance(exc.code, int) else 1
    except (UsageError, ParseError) as exc:
        sys.stderr.write(f"quartop: {type(exc).__name__}: {exc}\n")
        return 1
    except MathError as exc:
        sys.stderr.write(f"quartop: {type(exc).__name__}: {exc}\n")
        return 2
    except QuartopError as exc:
        sys.stderr.write(f"quartop: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
