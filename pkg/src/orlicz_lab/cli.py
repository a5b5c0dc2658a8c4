"""Command-line front end.

Every subcommand prints (or writes to ``--output``) a JSON report

    {"command", "inputs_echo", "results", "certificates_used", "passed"}

plus ``"timings"`` when ``--timings`` is given, so that identical inputs
give byte-identical reports by default.  ``sweep`` writes CSV instead.

Exit codes: 0 pass, 1 a checked inequality failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from . import growth as growth_mod
from . import young as young_mod
from .appendix import appendix_a_embedding, appendix_b_sandwich
from .compose import (AffineMap, composition_ratio, diag_opnorm_lower, dilation_opnorm,
                      necessity_certificate, orthogonal_invariance_check, samples_from_spec,
                      sufficiency_bound, sufficiency_constant)
from .domain import SimpleFunction, random_staircase
from .errors import OrliczLabError, PreconditionError, UsageError
from .growth import certify_class, log_grid, morrey, morrey_window, psi_monotonicity
from .indicators import BoxSpec, box_indicator_norm
from .norms import SearchSpec, orlicz_morrey_norm, thread_cap, weak_orlicz_morrey_norm
from .specs import jsonable, load_spec
from .young import certify_young, power, verify_inverse_sandwich

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_MAX_ROWS = 100_000


# ---------------------------------------------------------------------------
# argument helpers

def _require(args, name: str):
    val = getattr(args, name, None)
    if val is None:
        raise UsageError(f"missing required option --{name.replace('_', '-')}")
    return val


def _field(name: str, fn: Callable, *a):
    """Run a parser, prefixing any usage error with the offending field."""
    try:
        return fn(*a)
    except (UsageError, ValueError, TypeError, KeyError, OSError) as exc:
        raise UsageError(f"--{name}: {exc}") from None


def _young(args):
    return _field("young", young_mod.from_spec, _require(args, "young"))


def _phi(args):
    return _field("phi", growth_mod.from_spec, _require(args, "phi"))


def _search(args, default=None):
    spec = args.search if getattr(args, "search", None) is not None else default
    return _field("search", SearchSpec.from_spec, spec)


def _grid(text: str | None, lo=1e-6, hi=1e6, points=121) -> np.ndarray:
    if text is None:
        return log_grid(lo, hi, points)
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("--grid expects lo,hi,points")
    lo, hi, points = float(parts[0]), float(parts[1]), int(parts[2])
    if not (0 < lo < hi) or points < 2:
        raise UsageError("--grid needs 0 < lo < hi and at least 2 points")
    return log_grid(lo, hi, points)


def _is_function_list(data: Any) -> bool:
    if not isinstance(data, list) or not data:
        return False
    first = data[0]
    return isinstance(first, list) or (isinstance(first, dict) and "cells" in first)


def _functions(args) -> list[SimpleFunction]:
    def parse(spec):
        data = load_spec(spec)
        items = data if _is_function_list(data) else [data]
        return [SimpleFunction.from_json(item) for item in items]
    return _field("f", parse, _require(args, "f"))


def _function(args) -> SimpleFunction:
    fs = _functions(args)
    if len(fs) != 1:
        raise UsageError("--f: expected a single function")
    return fs[0]


def _floats(name: str, text: str) -> list[float]:
    def parse(t):
        return [float(x) for x in t.split(",") if x.strip()]
    return _field(name, parse, text)


# ---------------------------------------------------------------------------
# subcommands; each returns (results, certificates_used, passed)

def cmd_norm(args, weak: bool = False):
    f, Y, g = _function(args), _young(args), _phi(args)
    search = _search(args)
    fn = weak_orlicz_morrey_norm if weak else orlicz_morrey_norm
    est = fn(f, Y, g, search, args.tol)
    return est.to_json(), [], bool(est.converged)


def cmd_weak_norm(args):
    return cmd_norm(args, weak=True)


def cmd_indicator_norm(args):
    a = _floats("a", _require(args, "a"))
    n = int(_require(args, "n"))
    spec = _field("a", BoxSpec.sorted_from, a, n)
    Y, g = _young(args), _phi(args)
    est = box_indicator_norm(spec, Y, g, tol=args.tol or 1e-10)
    res = {"value": est.value, "argmax_R": est.witness["argmax_R"],
           "regime": est.witness["regime"], "lo": est.lo, "hi": est.hi,
           "diagnostic": est.diagnostic}
    return res, [], True


def cmd_certify_phi(args):
    g = _phi(args)
    cert = certify_class(g, _field("grid", _grid, args.grid))
    res = cert.to_json()
    return res, [{"kind": "growth-class", "phi": g.to_json(), **res}], bool(cert.in_G1dec)


def cmd_certify_young(args):
    Y = _young(args)
    if args.grid is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-4, 1e2, 200)])
    else:
        grid = np.concatenate([[0.0], _field("grid", _grid, args.grid)])
    cert = certify_young(Y, grid)
    sand = verify_inverse_sandwich(Y, np.geomspace(1e-3, 1e3, 50))
    res = {"certificate": cert.to_json(),
           "sandwich": {"n_checked": sand.n_checked, "violations": sand.violations,
                        "passed": sand.passed}}
    return res, [{"kind": "young", "young": Y.to_json(), **cert.to_json()}], \
        bool(cert.passed and sand.passed)


def _class_cert(g, args):
    return certify_class(g, _field("grid", _grid, getattr(args, "grid", None)))


def cmd_op_norm(args):
    psi = _field("map", AffineMap.from_spec, _require(args, "map"))
    g = _phi(args)
    cert = _class_cert(g, args)
    A, n = psi.A, psi.n
    res: dict[str, Any] = {"map": psi.to_json(), "singular_values": psi.singular_values.tolist(),
                           "K": 1.0 / psi.abs_det, "L": psi.lipschitz,
                           "box_preserving": psi.is_box_preserving}
    ok = True
    upper = None
    if cert.in_G1dec:
        upper = sufficiency_constant(psi, g, cert)
    res["upper_bound"] = upper
    lowers = []
    diag = np.diag(A)
    if np.array_equal(A, np.diag(diag)) and np.all(diag > 0):
        if np.all(diag == diag[0]):
            dil = dilation_opnorm(g, float(diag[0]), cert=cert)
            res["dilation"] = dil.to_json()
            lowers.append(dil.lower)
            ok &= dil.within_class_bounds is not False
        if cert.submultiplicative_C2 is not None and cert.reciprocal_C3 is not None:
            rep = diag_opnorm_lower(g, diag)
            slack = (cert.submultiplicative_C2 * cert.reciprocal_C3) ** (1.0 / n)
            res["diagonal"] = {"phi_prod_root": rep.lower_bound, "slack": slack}
            lowers.append(rep.lower_bound / slack)
    if np.allclose(A.T @ A, np.eye(n), atol=1e-10, rtol=0):
        res["orthogonal"] = True
        lowers.append(1.0)
        if args.f is not None:
            Y = _young(args)
            checks = [orthogonal_invariance_check(A, f, Y, g, search=args.search).to_json()
                      for f in _functions(args)]
            res["orthogonal_checks"] = checks
            ok &= all(c["passed"] for c in checks)
    elif args.f is not None:
        if not psi.is_box_preserving:
            raise UsageError("--map: empirical ratios need a box-preserving map")
        Y = _young(args)
        ratios = [composition_ratio(f, psi, Y, g, _search(args, {"region": "cube"}))["ratio"]
                  for f in _functions(args)]
        res["empirical_ratios"] = ratios
        lowers.append(max(ratios, default=0.0))
    res["lower_estimate"] = max(lowers) if lowers else None
    if upper is not None and lowers:
        ok &= max(lowers) <= upper * (1 + 1e-9)
    return res, [{"kind": "growth-class", "phi": g.to_json(), **cert.to_json()}], bool(ok)


def cmd_check_sufficiency(args):
    psi = _field("map", AffineMap.from_spec, _require(args, "map"))
    Y, g = _young(args), _phi(args)
    if not psi.is_box_preserving:
        raise UsageError("--map: the exact sufficiency check needs a box-preserving map")
    if args.f is not None:
        fs = _functions(args)
    else:
        rng = np.random.default_rng(args.seed)
        fs = [random_staircase(rng, psi.n) for _ in range(args.count)]
    cert = _class_cert(g, args)
    rep = sufficiency_bound(psi, Y, g, fs, cert, _search(args, {"region": "cube"}))
    res = rep.to_json()
    res["test_functions"] = [f.to_json() for f in fs]
    return res, [{"kind": "growth-class", "phi": g.to_json(), **cert.to_json()}], bool(rep.passed)


def cmd_certify_necessity(args):
    samples = _field("samples", samples_from_spec, _require(args, "samples"))
    g = _phi(args)
    cert = _class_cert(g, args)
    rep = necessity_certificate(samples, g, args.band, cert)
    return rep.to_json(), [{"kind": "growth-class", "phi": g.to_json(), **cert.to_json()}], \
        bool(rep.passed)


def cmd_appendix(args):
    which = _require(args, "which")
    f = _function(args)
    if which == "a":
        rep = appendix_a_embedding(f, args.n, _search(args))
        return rep.to_json(), [], bool(rep.passed)
    Y, g = _young(args), _phi(args)
    rep = appendix_b_sandwich(f, Y, g, _search(args))
    return rep.to_json(), [], bool(rep.passed)


# ---------------------------------------------------------------------------
# sweep

def parse_range(text: str) -> tuple[str, list[float]]:
    """``name=spec`` with spec one of ``a,b,c`` / ``i:j`` (inclusive integers) /
    ``pow2:i:j`` / ``lin:a:b:num``; an empty spec is an empty range."""
    name, eq, spec = text.partition("=")
    name = name.strip()
    if not eq or not name:
        raise UsageError(f"--range: expected name=values, got {text!r}")
    spec = spec.strip()
    if not spec:
        return name, []
    parts = spec.split(":")
    try:
        if parts[0] == "pow2" and len(parts) == 3:
            return name, [2.0 ** j for j in range(int(parts[1]), int(parts[2]) + 1)]
        if parts[0] == "lin" and len(parts) == 4:
            return name, np.linspace(float(parts[1]), float(parts[2]), int(parts[3])).tolist()
        if len(parts) == 2:
            return name, [float(j) for j in range(int(parts[0]), int(parts[1]) + 1)]
        if len(parts) == 1:
            vals = [float(x) for x in spec.split(",") if x.strip()]
            if any(not math.isfinite(v) for v in vals):
                raise ValueError("range values must be finite")
            return name, vals
    except ValueError as exc:
        raise UsageError(f"--range {name}: {exc}") from None
    raise UsageError(f"--range {name}: cannot parse {spec!r}")


def _sweep_dilation(args):
    g = _phi(args)
    r_grid = _field("grid", _grid, args.grid)

    def row(p):
        rep = dilation_opnorm(g, p["c"], r_grid)
        return [p["c"], rep.lower, rep.upper, rep.phi_c], True
    return ["c"], ["c", "lower", "upper", "phi_c"], row


def _sweep_psi(args):
    r_grid = _field("grid", _grid, args.grid)
    C_grid = [0.25, 1.0, 4.0]

    def row(p):
        n, k = int(p["n"]), int(p["k"])
        if k < 1 or n < 1:
            raise UsageError("psi sweep needs n >= 1 and k >= 1")
        g, Y = morrey(p["p"], n), power(p["q"])
        lower = psi_monotonicity(g, Y, k - 1, C_grid, r_grid).direction
        upper = psi_monotonicity(g, Y, k, C_grid, r_grid).direction
        in_prof = lower == "almost-increasing" and upper == "almost-decreasing"
        in_formula = morrey_window(n, p["p"], p["q"], k)
        return [n, p["p"], p["q"], k, lower, upper, in_prof, in_formula,
                in_prof == in_formula], in_prof == in_formula
    return ["n", "p", "q", "k"], ["n", "p", "q", "k", "lower_direction", "upper_direction",
                                  "in_window_profiles", "in_window_formula", "match"], row


SWEEPS = {"dilation_opnorm": _sweep_dilation, "psi_monotonicity": _sweep_psi}


def _csv_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else ("-inf" if x < 0 else "nan"))
    return str(x)


def run_sweep(args) -> int:
    check = _require(args, "check")
    if check not in SWEEPS:
        raise UsageError(f"--check: unknown sweep {check!r}; choose from {sorted(SWEEPS)}")
    ranges = dict(parse_range(r) for r in (args.range or []))
    params, columns, row = SWEEPS[check](args)
    missing = [p for p in params if p not in ranges]
    if missing:
        raise UsageError(f"--range: missing parameter(s) {missing}")
    size = math.prod(len(ranges[p]) for p in params)
    if size > args.max_rows:
        raise UsageError(f"--range: {size} configurations exceed the cap of {args.max_rows}")
    configs = [dict(zip(params, combo)) for combo in itertools.product(*[ranges[p] for p in params])]
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        rows = list(pool.map(row, configs))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for values, _ in rows:
        w.writerow([_csv_cell(v) for v in values])
    _emit(args.output, buf.getvalue())
    return EXIT_PASS if all(ok for _, ok in rows) else EXIT_FAIL


# ---------------------------------------------------------------------------
# plumbing

COMMANDS: dict[str, Callable] = {
    "norm": cmd_norm,
    "weak-norm": cmd_weak_norm,
    "indicator-norm": cmd_indicator_norm,
    "op-norm": cmd_op_norm,
    "certify-phi": cmd_certify_phi,
    "certify-young": cmd_certify_young,
    "check-sufficiency": cmd_check_sufficiency,
    "certify-necessity": cmd_certify_necessity,
    "appendix": cmd_appendix,
}

_ECHO_SKIP = {"command", "output", "timings"}


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _common(p: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "f": "simple function: JSON list of {box, value} cells, shorthand or @file",
        "young": "Young function, e.g. power:q=2 or appendix-exp:n=2",
        "phi": "growth function, e.g. power:p=4,n=2",
        "search": "search spec JSON, e.g. '{\"region\": \"cube\"}'",
        "map": "affine map JSON: diag / perm / affine",
        "grid": "certification radius grid lo,hi,points (log spaced)",
    }
    for name in names:
        p.add_argument(f"--{name}", help=helps.get(name))
    p.add_argument("--tol", type=float, default=None, help="relative tolerance")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="seed for generated test families")
    p.add_argument("--timings", action="store_true", help="include wall-clock timings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orlicz-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("norm", "weak-norm"):
        _common(sub.add_parser(name, help=f"{name.replace('-', ' ')} of a simple function"),
                "f", "young", "phi", "search")
    p = sub.add_parser("indicator-norm", help="closed-form norm of a box indicator")
    _common(p, "young", "phi")
    p.add_argument("--a", help="comma-separated bounded side lengths")
    p.add_argument("--n", type=int, help="ambient dimension")
    p = sub.add_parser("op-norm", help="operator-norm bounds for an affine composition")
    _common(p, "map", "phi", "young", "f", "search", "grid")
    p = sub.add_parser("certify-phi", help="growth-class certificate")
    _common(p, "phi", "grid")
    p = sub.add_parser("certify-young", help="Young-function certificate")
    _common(p, "young", "grid")
    p = sub.add_parser("check-sufficiency", help="empirical ratios against the sufficiency bound")
    _common(p, "map", "young", "phi", "f", "search", "grid")
    p.add_argument("--count", type=int, default=10, help="generated test functions if no --f")
    p = sub.add_parser("certify-necessity", help="singular-value necessity certificate")
    _common(p, "phi", "grid")
    p.add_argument("--samples", help="JSON list of {x0, jacobian}")
    p.add_argument("--band", type=float, default=None, help="acceptance band (default 10*C1*C2*C3)")
    p = sub.add_parser("appendix", help="embedding (a) or L-infinity sandwich (b)")
    _common(p, "f", "young", "phi", "search")
    p.add_argument("--which", choices=["a", "b"])
    p.add_argument("--n", type=int, default=None, help="dimension for the embedding")
    p = sub.add_parser("sweep", help="CSV sweep of a named check over parameter ranges")
    _common(p, "phi", "grid")
    p.add_argument("--check", help=f"one of {', '.join(sorted(SWEEPS))}")
    p.add_argument("--range", action="append", help="name=values (repeatable)")
    p.add_argument("--max-rows", type=int, default=DEFAULT_MAX_ROWS)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be positive")
        if args.command == "sweep":
            return run_sweep(args)
        t0 = time.perf_counter()
        results, certs, passed = COMMANDS[args.command](args)
        elapsed = time.perf_counter() - t0
    except PreconditionError as exc:
        print(f"orlicz-lab: precondition not met: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OrliczLabError as exc:
        print(f"orlicz-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {
        "command": args.command,
        "inputs_echo": {k: v for k, v in sorted(vars(args).items()) if k not in _ECHO_SKIP},
        "results": results,
        "certificates_used": certs,
        "passed": passed,
    }
    if args.timings:
        report["timings"] = {"total_seconds": elapsed}
    _emit(args.output, json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n")
    return EXIT_PASS if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
