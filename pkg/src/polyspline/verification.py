"""Randomised self-checks of a spline against its defining properties."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import orthogonality_defect, pythagoras_check
from .errors import PolysplineError
from .functions import Composite, vanishing_bump
from .powerlog import apply_gk, apply_lk, apply_mk, apply_mk_adjoint, apply_rk, monomial
from .spline import (
    BeppoLeviSpline,
    KnotSet,
    build_by_collocation,
    build_interpolant,
    continuity_defects,
    end_condition_residuals,
    head_basis,
    kernel_basis,
    tail_basis,
)

FACTOR_TOL = 1e-12
JOIN_TOL = 1e-8
RECOVERY_TOL = 1e-8
NEGATIVE_CONTROL_MIN = 1e-3


@dataclass(frozen=True)
class Check:
    name: str
    value: Optional[float]
    tol: Optional[float]
    passed: bool
    note: str = ""

    def to_json(self) -> dict:
        v = None if self.value is None or not math.isfinite(self.value) else float(self.value)
        return {"name": self.name, "value": v, "tol": self.tol, "pass": bool(self.passed), "note": self.note}


def annihilation_defect(k: int) -> float:
    """Largest coefficient left after applying L_k, G_k, R_k to their kernels."""
    out = [apply_lk(k, e).norm() for e in kernel_basis(k)]
    out += [apply_gk(k, e).norm() for e in head_basis(k)]
    out += [apply_rk(k, e).norm() for e in tail_basis(k)]
    return max(out)


def factorization_defect(k: int, exponents=range(-3, 6)) -> float:
    """Max relative coefficient gap in ``L = G r^3 R`` and ``L = M* M`` over monomials."""
    worst = 0.0
    for j in exponents:
        e = monomial(j)
        L = apply_lk(k, e)
        scale = max(1.0, L.norm())
        worst = max(worst, (apply_gk(k, apply_rk(k, e).shift(3)) - L).norm() / scale)
        worst = max(worst, (apply_mk_adjoint(k, apply_mk(k, e)) - L).norm() / scale)
    return worst


def random_knots(rng: np.random.Generator, n: int, r1=(0.3, 1.5), gap=(0.1, 1.0)) -> KnotSet:
    start = rng.uniform(*r1)
    return KnotSet(tuple(start + np.concatenate([[0.0], np.cumsum(rng.uniform(*gap, n - 1))])))


def random_test_function(rng: np.random.Generator, knots: KnotSet, skip=()):
    extra = rng.normal(size=3)
    return vanishing_bump(knots, extra=extra, skip=skip)


def spline_checks(s: BeppoLeviSpline, rng: np.random.Generator, tol: float = 1e-6, trials: int = 3) -> list:
    k = s.k
    checks = []
    head_res, tail_res = end_condition_residuals(s)
    scale = max(1.0, max(p.norm() for p in s.pieces))
    joins = float(np.max(continuity_defects(s))) if s.n > 1 else 0.0
    end_ok = head_res <= 1e-12 * scale and tail_res <= 1e-12 * scale and joins <= JOIN_TOL
    checks.append(
        Check(
            "end_conditions",
            max(head_res / scale, tail_res / scale, joins),
            JOIN_TOL,
            end_ok,
            "head in Ker G, tail in Ker R, C2 joins at every knot",
        )
    )
    r = s.knots.array
    vals = np.asarray(s.values)
    interp = float(np.max(np.abs(s(r) - vals)) / max(1.0, np.max(np.abs(vals))))
    checks.append(Check("interpolation", interp, RECOVERY_TOL, interp <= RECOVERY_TOL))

    def orthogonality():
        worst = 0.0
        for _ in range(trials):
            worst = max(worst, orthogonality_defect(k, s, random_test_function(rng, s.knots), normalized=True))
        return Check("orthogonality", worst, tol, worst <= tol, f"{trials} random test functions")

    def negative_control():
        j = int(rng.integers(s.n))
        neg = orthogonality_defect(
            k, s, random_test_function(rng, s.knots, skip=(j,)), normalized=True, check_knots=False
        )
        return Check("orthogonality_negative_control", neg, NEGATIVE_CONTROL_MIN, neg > NEGATIVE_CONTROL_MIN,
                     f"test function does not vanish at knot {j}")

    def pythagoras():
        worst, minimal = 0.0, True
        for _ in range(trials):
            psi = random_test_function(rng, s.knots)
            g = Composite.of(s) + Composite.of(psi) * float(rng.normal())
            res = pythagoras_check(k, s, g)
            worst = max(worst, res.defect)
            minimal = minimal and res.sigma_energy < res.lhs
        return Check("pythagoras", worst, tol, worst <= tol and minimal, "spline energy strictly below competitors")

    def representation():
        if abs(k) == 1:
            return Check("representation", None, None, True,
                         "not applicable for |k| = 1: phi_1(r) = r, so the dilates are linearly dependent")
        _, c = build_by_collocation(k, s.knots, s.values)
        grid = np.linspace(0.0, 2.0 * r[-1], 801)
        ref = np.abs(s(grid))
        err = float(np.max(np.abs(c(grid) - s(grid))) / max(1.0, np.max(ref)))
        return Check("representation", err, RECOVERY_TOL, err <= RECOVERY_TOL, "dilation sum vs piecewise")

    checks.append(_guarded("orthogonality", tol, orthogonality))
    if s.n >= 2:
        checks.append(_guarded("orthogonality_negative_control", NEGATIVE_CONTROL_MIN, negative_control))
    checks.append(_guarded("pythagoras", tol, pythagoras))
    checks.append(_guarded("representation", RECOVERY_TOL, representation))
    return checks


def _guarded(name, tol, fn) -> Check:
    # a malformed spline can violate a check's preconditions; report that as a failure
    try:
        return fn()
    except PolysplineError as exc:
        return Check(name, None, tol, False, f"could not run: {exc}")


def operator_checks(k: int) -> list:
    a = annihilation_defect(k)
    f = factorization_defect(k)
    return [
        Check("annihilation", a, 0.0, a == 0.0, "L, G, R on their kernels"),
        Check("factorization", f, FACTOR_TOL, f <= FACTOR_TOL, "L = G r^3 R and L = M* M on r^-3..r^5"),
    ]


def random_instance(k: int, rng: np.random.Generator, n_range=(3, 8)) -> BeppoLeviSpline:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    knots = random_knots(rng, n)
    return build_interpolant(k, knots, rng.normal(size=n))
