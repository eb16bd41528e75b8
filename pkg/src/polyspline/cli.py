"""Command-line interface: ``polyspline <command> [options]``.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 verification
failure. Every JSON output carries ``schema_version`` and ``seed``.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import io
from .analysis import energy, error_study
from .errors import ConstructionError, DivergenceError, InputError, PolysplineError
from .functions import DATA_CATALOGUE, datum
from .spline import KnotSet, build_interpolant
from .surface import (
    ModalSurface,
    NaturalCubicZeroMode,
    SurfaceModel,
    build_surface,
    equispaced_thetas,
    export_mesh,
    ingest,
    reproduction_defect,
    truncation_estimate,
)
from .verification import operator_checks, random_instance, spline_checks

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
DEFAULT_VERIFY_KS = (1, 2, 3, 5)


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _emit(obj, path):
    obj = _clean(obj)
    if path:
        io.write_json(obj, path)
    else:
        sys.stdout.write(io.dumps(obj))


def _header(kind, args):
    return {"schema_version": io.SCHEMA_VERSION, "kind": kind, "seed": args.seed}


def _require_k(args):
    if args.k is None:
        raise InputError("--k is required for this command")
    if args.k == 0:
        raise InputError("k = 0 is not supported (spline commands need a nonzero frequency)")
    return args.k


def _grid(text: str):
    try:
        a, b, n = text.split(":")
        n = int(n)
        a, b = float(a), float(b)
    except ValueError as exc:
        raise InputError(f"grid must look like start:stop:count, got {text!r}") from exc
    if n < 1:
        raise InputError("grid count must be positive")
    return np.linspace(a, b, n)


def _floats(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"expected a comma separated list of numbers, got {text!r}") from exc


def _load_spline(path):
    if not path:
        raise InputError("--input is required")
    return io.spline_from_json(io.read_json(path))


def cmd_interp(args):
    k = _require_k(args)
    if not args.input:
        raise InputError("--input CSV with rows r,value is required")
    radii, values = io.read_knot_csv(args.input)
    try:
        knots = KnotSet(tuple(radii))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    s = build_interpolant(k, knots, values)
    _emit(io.spline_to_json(s, seed=args.seed), args.output)
    samples = args.samples
    if samples is None and args.output:
        samples = str(args.output).rsplit(".", 1)[0] + ".samples.csv"
    if samples:
        r = _grid(args.r_grid) if args.r_grid else np.linspace(0.0, 2.0 * knots.last, 201)
        f0, f1, f2 = s.derivs(r)
        io.write_samples_csv(samples, r, {"value": f0, "d1": f1, "d2": f2})
    return EXIT_OK


def cmd_eval(args):
    s = _load_spline(args.input)
    if args.r:
        r = np.asarray(_floats(args.r))
    elif args.r_grid:
        r = _grid(args.r_grid)
    else:
        raise InputError("give --r or --r-grid")
    if args.m not in (0, 1, 2):
        raise InputError("--m must be 0, 1 or 2")
    vals = s(r, args.m)
    out = _header("evaluation", args)
    out.update({"k": s.k, "m": args.m, "r": [float(x) for x in r], "values": [io.encode_scalar(v) for v in vals]})
    _emit(out, args.output)
    return EXIT_OK


def cmd_energy(args):
    if args.input:
        f = _load_spline(args.input)
        k = f.k
        source = "spline"
    else:
        k = _require_k(args)
        f = datum(args.datum, k)
        source = args.datum
    try:
        e = energy(k, f, quad_order=args.quad_order)
    except DivergenceError as exc:
        raise DivergenceError(f"{source} has infinite energy at k={k}: {exc}") from exc
    out = _header("energy", args)
    out.update({"k": k, "source": source, "energy": e.value, "norm": e.norm, "is_seminorm": e.is_seminorm})
    _emit(out, args.output)
    return EXIT_OK


def cmd_verify(args):
    rng = np.random.default_rng(args.seed)
    sections = []
    if args.input:
        s = _load_spline(args.input)
        todo = [(s.k, s)]
    else:
        ks = [args.k] if args.k is not None else list(DEFAULT_VERIFY_KS)
        if 0 in ks:
            raise InputError("k = 0 is not supported")
        todo = [(k, None) for k in ks]
    ok = True
    for k, s in todo:
        if s is None:
            s = random_instance(k, rng)
        checks = operator_checks(k) + spline_checks(s, rng, tol=args.tol)
        ok = ok and all(c.passed for c in checks)
        sections.append({"k": k, "n": s.n, "knots": list(s.knots.radii), "checks": [c.to_json() for c in checks]})
    out = _header("verification", args)
    out.update({"tol": args.tol, "instances": sections, "pass": ok})
    _emit(out, args.output)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_converge(args):
    k = _require_k(args) if args.k is not None else 2
    if args.levels < 2:
        raise InputError("--levels must be at least 2")
    a, b = _floats(args.interval) if args.interval else (1.0, 2.0)
    if not 0 < a < b:
        raise InputError("--interval needs 0 < a < b")
    family = [KnotSet.uniform(a, b, 2 ** (i + 2) + 1) for i in range(args.levels)]
    g = datum(args.datum, k)
    study = error_study(k, g, family, quad_order=args.quad_order)
    out = _header("convergence", args)
    out.update(
        {
            "k": k,
            "datum": args.datum,
            "interval": [a, b],
            "reports": [r.to_json() for r in study.reports],
            "orders": study.orders,
            "bounds_hold": study.bounds_hold,
        }
    )
    _emit(out, args.output)
    return EXIT_OK if study.bounds_hold else EXIT_VERIFY


def _demo_dataset(args):
    K = args.truncation if args.truncation is not None else 2
    mode = max(1, min(K, 2))
    ref = ModalSurface({mode: datum("rkexp", mode)})
    knots = KnotSet.uniform(1.0, 2.0, 5)
    M = max(16, 2 * K + 1)
    return ingest(knots.radii, ref.sample(knots, M), K=K)


def _dataset_from_json(d, truncation):
    try:
        radii = d["radii"]
        curves = np.asarray(d["curves"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"surface input needs radii and curves: {exc}") from exc
    thetas = None
    ts = d.get("theta_samples")
    if isinstance(ts, list):
        thetas = ts
    elif ts is not None and int(ts) != curves.shape[-1]:
        raise InputError(f"theta_samples={ts} but curves have {curves.shape[-1]} samples")
    K = truncation if truncation is not None else d.get("truncation")
    return ingest(radii, curves, K=K, thetas=thetas)


def _write_mesh(S, args, path):
    r = _grid(args.r_grid) if args.r_grid else np.linspace(0.0, 2.0 * S.knots.last, 41)
    th = equispaced_thetas(args.theta_grid)
    export_mesh(S, r, th, path)


def cmd_surface(args):
    if args.input:
        d = _dataset_from_json(io.read_json(args.input), args.truncation)
    else:
        d = _demo_dataset(args)
    S = build_surface(d)
    diag = d.diagnostics()
    diag["reproduction_defect"] = [float(x) for x in reproduction_defect(S, d)]
    diag["truncation_estimate"] = [float(x) for x in truncation_estimate(d)]
    out = io.surface_to_json(S, seed=args.seed, diagnostics=diag)
    _emit(out, args.output)
    if args.mesh:
        _write_mesh(S, args, args.mesh)
    return EXIT_OK


def surface_from_json(d) -> SurfaceModel:
    if d.get("kind") != "surface":
        raise InputError(f"not a surface artifact (kind={d.get('kind')!r})")
    knots = KnotSet(tuple(float(x) for x in d["knots"]))
    splines = {int(k): io.spline_from_json(v) for k, v in d["modes"].items()}
    strategy = NaturalCubicZeroMode()
    z0 = strategy(knots, [io.decode_scalar(v) for v in d["zero_mode"]["values"]])
    return SurfaceModel(knots, int(d["K"]), splines, z0, strategy.describe())


def cmd_mesh(args):
    if not args.input or not args.output:
        raise InputError("mesh needs --input (surface artifact) and --output (CSV path)")
    S = surface_from_json(io.read_json(args.input))
    _write_mesh(S, args, args.output)
    return EXIT_OK


COMMANDS = {
    "interp": (cmd_interp, "interpolate r,value data with a frequency-k spline"),
    "eval": (cmd_eval, "evaluate a spline artifact"),
    "energy": (cmd_energy, "energy of a spline artifact or a built-in datum"),
    "verify": (cmd_verify, "randomised property checks"),
    "converge": (cmd_converge, "error study under uniform refinement"),
    "surface": (cmd_surface, "build a surface from curves on circles"),
    "mesh": (cmd_mesh, "export a surface artifact as an r,theta,x,y,z mesh"),
}


def _positive(typ):
    def conv(s):
        v = typ(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyspline", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--k", type=int)
        sp.add_argument("--input")
        sp.add_argument("--output")
        sp.add_argument("--quad-order", type=_positive(int), default=32)
        sp.add_argument("--tol", type=_positive(float), default=1e-6)
        sp.add_argument("--truncation", type=int)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--levels", type=int, default=4)
        sp.add_argument("--datum", choices=DATA_CATALOGUE, default="r2exp")
        sp.add_argument("--interval", help="a,b for the convergence study (default 1,2)")
        sp.add_argument("--samples", help="dense sample CSV written by interp")
        sp.add_argument("--mesh", help="mesh CSV written by surface")
        sp.add_argument("--r", help="comma separated radii for eval")
        sp.add_argument("--r-grid", help="start:stop:count")
        sp.add_argument("--theta-grid", type=_positive(int), default=32, help="number of equispaced angles")
        sp.add_argument("--m", type=int, default=0, help="derivative order for eval")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        return fn(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConstructionError, DivergenceError, PolysplineError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
