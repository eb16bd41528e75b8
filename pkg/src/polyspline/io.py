"""JSON artifacts and CSV inputs.

Floats go through ``repr`` (shortest round-trip form), so a reloaded
artifact is bit-identical. Complex numbers are ``[re, im]`` pairs and
rational exponents are strings such as ``"5/2"``.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InputError
from .powerlog import PowerLogExpr, PowerLogTerm
from .spline import BeppoLeviSpline, KnotSet

SCHEMA_VERSION = 1


def encode_scalar(c):
    if isinstance(c, (complex, np.complexfloating)):
        c = complex(c)
        if c.imag != 0.0:
            return [float(c.real), float(c.imag)]
        c = c.real
    c = float(c)
    if not math.isfinite(c):
        return None if math.isnan(c) else ("inf" if c > 0 else "-inf")
    return c


def decode_scalar(v):
    if isinstance(v, list):
        if len(v) != 2:
            raise InputError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if v is None:
        return math.nan
    return float(v)


def encode_exponent(a):
    if isinstance(a, Fraction):
        return int(a) if a.denominator == 1 else str(a)
    return float(a)


def decode_exponent(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return float(v)


def expr_to_json(e: PowerLogExpr) -> list:
    return [
        {"exponent": encode_exponent(t.exponent), "log_power": int(t.log_power), "coeff": encode_scalar(t.coeff)}
        for t in e.terms
    ]


def expr_from_json(terms) -> PowerLogExpr:
    try:
        return PowerLogExpr(
            PowerLogTerm(decode_scalar(t["coeff"]), decode_exponent(t["exponent"]), int(t.get("log_power", 0)))
            for t in terms
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed term list: {exc}") from exc


def spline_to_json(s: BeppoLeviSpline, seed=None) -> dict:
    radii = list(s.knots.radii)
    edges = [0.0] + radii + [None]
    pieces = [
        {"interval": [edges[i], edges[i + 1]], "terms": expr_to_json(p)} for i, p in enumerate(s.pieces)
    ]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "beppo_levi_spline",
        "k": int(s.k),
        "knots": radii,
        "values": [encode_scalar(v) for v in s.values],
        "residual": float(s.residual),
        "pieces": pieces,
        "seed": seed,
    }


def spline_from_json(d: dict) -> BeppoLeviSpline:
    if d.get("kind") != "beppo_levi_spline":
        raise InputError(f"not a spline artifact (kind={d.get('kind')!r})")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {d.get('schema_version')!r}")
    try:
        knots = KnotSet(tuple(float(x) for x in d["knots"]))
        pieces = [expr_from_json(p["terms"]) for p in d["pieces"]]
        values = tuple(decode_scalar(v) for v in d["values"])
        k = int(d["k"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed spline artifact: missing {exc}") from exc
    if len(pieces) != knots.n + 1:
        raise InputError(f"expected {knots.n + 1} pieces, found {len(pieces)}")
    return BeppoLeviSpline(k, knots, pieces[0], tuple(pieces[1:-1]), pieces[-1], values, float(d.get("residual", 0.0)))


def surface_to_json(S, seed=None, diagnostics=None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "surface",
        "K": int(S.K),
        "knots": list(S.knots.radii),
        "modes": {str(k): spline_to_json(s) for k, s in sorted(S.splines.items())},
        "zero_mode": {"values": [encode_scalar(v) for v in S.zero_mode.values], **S.zero_mode_info},
        "diagnostics": diagnostics,
        "seed": seed,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    text = dumps(obj)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def read_knot_csv(path):
    """Rows ``r,value`` (header optional). Returns ``(radii, values)``."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    radii, values = [], []
    for i, row in enumerate(rows, 1):
        if len(row) != 2:
            raise InputError(f"{path}: row {i} must have two columns r,value")
        try:
            radii.append(float(row[0]))
            values.append(float(row[1]))
        except ValueError as exc:
            raise InputError(f"{path}: row {i}: {exc}") from exc
    return radii, values


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_samples_csv(path, r, columns: dict) -> None:
    names = list(columns)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r"] + names)
            for i, x in enumerate(r):
                row = [x] + [columns[n][i] for n in names]
                w.writerow(["%.17g" % v for v in row])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
