"""Radial profiles with analytic derivatives, and sums of them with splines.

Anything exposing ``derivs(r) -> (f, f', f'')`` can be fed to the energy,
orthogonality and error routines. :class:`RadialFunction` wraps smooth
closed forms; :class:`Composite` adds such functions to a piecewise
power-log function so that energies can mix exact and quadrature segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InputError
from .powerlog import PowerLogExpr
from .spline import BeppoLeviSpline, PiecewisePowerLog, as_knots


@dataclass(frozen=True)
class RadialFunction:
    """Smooth profile ``f`` with ``derivs(r) -> (f, f', f'')``, zero outside ``support``."""

    derivs_fn: Callable
    support: tuple = (0.0, math.inf)
    breakpoints: tuple = ()
    name: str = ""

    def derivs(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.support
        inside = (r >= a) & (r <= b)
        vals = self.derivs_fn(np.where(inside, r, 0.5 * (a + min(b, a + 1.0))))
        return tuple(np.where(inside, v, 0.0) for v in vals)

    def __call__(self, r, m: int = 0):
        return self.derivs(r)[m]

    def evaluate(self, r, m: int = 0):
        return self.derivs(r)[m]


def bump(a: float, b: float) -> RadialFunction:
    """C-infinity bump ``e * exp(-1/(1-u^2))`` on ``(a, b)``, peak value 1."""
    if not b > a:
        raise InputError("bump needs a < b")
    c, w = 0.5 * (a + b), 0.5 * (b - a)

    def derivs(r):
        u = (r - c) / w
        q = 1.0 - u * u
        ok = q > 1e-3  # exp(-1000) underflows anyway
        qs = np.where(ok, q, 1.0)
        s = np.where(ok, np.exp(1.0 - 1.0 / qs), 0.0)
        g1 = -2.0 * u / qs**2
        g2 = -2.0 / qs**2 - 8.0 * u * u / qs**3
        return s, s * g1 / w, s * (g1 * g1 + g2) / w**2

    return RadialFunction(derivs, (float(a), float(b)), name=f"bump({a:g},{b:g})")


def polynomial_times(poly: Polynomial, f: RadialFunction, name: str = "") -> RadialFunction:
    """Product of a polynomial with a radial function, derivatives by the Leibniz rule."""
    p1, p2 = poly.deriv(1), poly.deriv(2)

    def derivs(r):
        f0, f1, f2 = f.derivs_fn(r)
        P0, P1, P2 = poly(r), p1(r), p2(r)
        return P0 * f0, P1 * f0 + P0 * f1, P2 * f0 + 2 * P1 * f1 + P0 * f2

    return RadialFunction(derivs, f.support, f.breakpoints, name or f"poly*{f.name}")


def vanishing_bump(knots, delta: Optional[float] = None, extra=None, scale: float = 1.0, skip=()) -> RadialFunction:
    """Test function vanishing at every knot, supported in ``(r_1 - delta, r_n + delta)``.

    ``extra`` are additional polynomial coefficients (ascending) multiplying
    ``prod_j (r - r_j)``; indices in ``skip`` drop the corresponding root,
    which gives a function that does *not* vanish there.
    """
    knots = as_knots(knots)
    r = knots.array
    if delta is None:
        delta = 0.5 * max(knots.mesh_size, 0.25 * r[0])
    a = max(r[0] - delta, 0.0)
    b = r[-1] + delta
    roots = [x for j, x in enumerate(r) if j not in set(skip)]
    P = Polynomial.fromroots(roots) if roots else Polynomial([1.0])
    if extra is not None:
        P = P * Polynomial(extra)
    # keep the peak magnitude moderate regardless of knot spread
    grid = np.linspace(a, b, 257)
    peak = np.max(np.abs(P(grid))) or 1.0
    P = P * (scale / peak)
    return polynomial_times(P, bump(a, b), name="vanishing_bump")


def _r2exp(r):
    e = np.exp(-r)
    return r * r * e, (2 * r - r * r) * e, (2 - 4 * r + r * r) * e


def _zero(r):
    z = np.zeros_like(r)
    return z, z, z


def _rk_exp(a):
    def derivs(r):
        e = np.exp(-r)
        f = r**a * e
        f1 = (a * r ** (a - 1) - r**a) * e
        f2 = (a * (a - 1) * r ** (a - 2) - 2 * a * r ** (a - 1) + r**a) * e
        return f, f1, f2

    return derivs


def datum(name: str, k: int = 2) -> RadialFunction:
    """Built-in data functions: ``r2exp`` (r^2 e^-r), ``rkexp`` (r^|k| e^-r) and ``zero``."""
    if name == "r2exp":
        return RadialFunction(_r2exp, (0.0, math.inf), (1.0, 4.0, 16.0), "r2exp")
    if name == "rkexp":
        return RadialFunction(_rk_exp(abs(int(k))), (0.0, math.inf), (1.0, 4.0, 16.0), "rkexp")
    if name == "zero":
        return RadialFunction(_zero, (0.0, math.inf), (), "zero")
    raise InputError(f"unknown datum {name!r}; choose from r2exp, rkexp, zero")


DATA_CATALOGUE = ("r2exp", "rkexp", "zero")


def refine(pw: PiecewisePowerLog, breaks) -> PiecewisePowerLog:
    """Same function with break points ``breaks`` (a superset of ``pw.breaks``)."""
    breaks = tuple(sorted(set(float(b) for b in breaks) | set(pw.breaks)))
    edges = (0.0,) + breaks + (math.inf,)
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi) if math.isfinite(hi) else lo + 1.0
        pieces.append(pw.pieces[int(pw.piece_index(mid))])
    return PiecewisePowerLog(breaks, tuple(pieces))


def as_piecewise(f) -> Optional[PiecewisePowerLog]:
    if f is None or isinstance(f, PiecewisePowerLog):
        return f
    if isinstance(f, BeppoLeviSpline):
        return f.piecewise
    if isinstance(f, PowerLogExpr):
        return PiecewisePowerLog((), (f,))
    raise TypeError(f"cannot treat {type(f).__name__} as a piecewise power-log function")


def _add_piecewise(p, q, sign=1.0):
    if p is None:
        return None if q is None else q * sign
    if q is None:
        return p
    if tuple(p.breaks) != tuple(q.breaks):
        both = set(p.breaks) | set(q.breaks)
        p, q = refine(p, both), refine(q, both)
    return p + q * sign


@dataclass(frozen=True)
class Composite:
    """``piecewise + sum_i c_i f_i`` with exact and smooth parts kept apart."""

    piecewise: Optional[PiecewisePowerLog] = None
    smooth: tuple = field(default=())

    @classmethod
    def of(cls, f) -> "Composite":
        if isinstance(f, Composite):
            return f
        if isinstance(f, RadialFunction):
            return cls(None, ((1.0, f),))
        return cls(as_piecewise(f), ())

    def derivs(self, r):
        r = np.asarray(r, dtype=float)
        out = [np.zeros(r.shape, dtype=complex if self.is_complex else float) for _ in range(3)]
        if self.piecewise is not None:
            for i, v in enumerate(self.piecewise.derivs(r)):
                out[i] = out[i] + v
        for c, f in self.smooth:
            for i, v in enumerate(f.derivs(r)):
                out[i] = out[i] + c * v
        return tuple(out)

    def __call__(self, r, m: int = 0):
        return self.derivs(r)[m]

    evaluate = __call__

    @property
    def is_complex(self) -> bool:
        pc = self.piecewise is not None and self.piecewise.is_complex
        return pc or any(np.iscomplexobj(c) or isinstance(c, complex) for c, _ in self.smooth)

    def breaks(self) -> list:
        pts = set()
        if self.piecewise is not None:
            pts.update(self.piecewise.breaks)
        for _, f in self.smooth:
            pts.update(x for x in f.support if 0 < x < math.inf)
            pts.update(f.breakpoints)
        return sorted(pts)

    def smooth_active(self, lo: float, hi: float) -> bool:
        """Whether any smooth part is nonzero somewhere in ``(lo, hi)``."""
        return any(f.support[0] < hi and f.support[1] > lo for _, f in self.smooth)

    def _combine(self, other, sign):
        other = Composite.of(other)
        return Composite(
            _add_piecewise(self.piecewise, other.piecewise, sign),
            self.smooth + tuple((sign * c, f) for c, f in other.smooth),
        )

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        pw = None if self.piecewise is None else self.piecewise * c
        return Composite(pw, tuple((c * ci, f) for ci, f in self.smooth))

    __rmul__ = __mul__
