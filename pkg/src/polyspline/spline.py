"""Interpolatory Beppo Levi L_k-splines for a nonzero frequency k.

A spline on knots ``0 < r_1 < ... < r_n`` is stored as ``n + 1`` power-log
pieces: a head piece on ``(0, r_1)`` in ``span{r^(|k|+2), r^|k|}``, one piece
in the null space of ``L_k`` per interior interval, and a tail piece on
``(r_n, inf)`` in ``span{r^(2-|k|), r^-|k|}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConstructionError, InputError, UnsupportedFrequencyError
from .powerlog import PowerLogExpr, apply_gk, apply_rk, monomial

MIN_RADIUS = 1e-12
#: largest accepted normwise relative residual of the interpolation system
MAX_RESIDUAL = 1e-6


@dataclass(frozen=True)
class KnotSet:
    """Strictly increasing positive radii."""

    radii: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).ravel()
        if r.size == 0:
            raise InputError("a knot set needs at least one radius")
        if not np.all(np.isfinite(r)):
            raise InputError("radii must be finite")
        if r[0] < MIN_RADIUS:
            raise InputError(f"radii must exceed {MIN_RADIUS:g}, got {r[0]!r}")
        if np.any(np.diff(r) <= 0):
            raise InputError("radii must be strictly increasing (duplicates are rejected)")
        object.__setattr__(self, "radii", tuple(float(x) for x in r))

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "KnotSet":
        return cls(tuple(np.linspace(a, b, n)))

    @property
    def n(self) -> int:
        return len(self.radii)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.radii)

    @property
    def first(self) -> float:
        return self.radii[0]

    @property
    def last(self) -> float:
        return self.radii[-1]

    @property
    def mesh_size(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.max(np.diff(self.radii)))

    def scaled(self, lam: float) -> "KnotSet":
        return KnotSet(tuple(lam * x for x in self.radii))

    def __len__(self):
        return self.n


def as_knots(knots) -> KnotSet:
    return knots if isinstance(knots, KnotSet) else KnotSet(tuple(np.atleast_1d(knots)))


def check_frequency(k) -> int:
    if isinstance(k, bool) or int(k) != k:
        raise UnsupportedFrequencyError(f"frequency must be an integer, got {k!r}")
    if k == 0:
        raise UnsupportedFrequencyError(
            "k = 0 needs different end operators and is not handled by this construction"
        )
    return int(k)


# local bases in x = r / r_j


def kernel_basis(k: int) -> tuple:
    """Generators of the null space of ``L_k``."""
    a = abs(check_frequency(k))
    if a == 1:
        return (monomial(3), monomial(1), monomial(1, 1.0, 1), monomial(-1))
    return (monomial(a + 2), monomial(a), monomial(2 - a), monomial(-a))


def head_basis(k: int) -> tuple:
    a = abs(check_frequency(k))
    return (monomial(a + 2), monomial(a))


def tail_basis(k: int) -> tuple:
    a = abs(check_frequency(k))
    return (monomial(2 - a), monomial(-a))


def phi_head(k: int) -> PowerLogExpr:
    a = abs(check_frequency(k))
    return PowerLogExpr([(0.5 * (1 + a), a), (0.5 * (1 - a), a + 2)])


def phi_tail(k: int) -> PowerLogExpr:
    a = abs(check_frequency(k))
    return PowerLogExpr([(0.5 * (1 - a), -a), (0.5 * (1 + a), 2 - a)])


def phi_k(k: int, r):
    """The single-knot spline with unit value at ``r = 1``.

    ``phi_k(r) = r^|k| ((1+|k|) + (1-|k|) r^2) / 2`` on ``[0, 1]`` and
    ``r^-|k| ((1-|k|) + (1+|k|) r^2) / 2`` beyond.
    """
    a = abs(check_frequency(k))
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InputError("phi_k is defined for r >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = 0.5 * r**a * ((1 + a) + (1 - a) * r**2)
        outer = 0.5 * r ** (-a) * ((1 - a) + (1 + a) * r**2)
    out = np.where(r <= 1.0, inner, outer)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class PiecewisePowerLog:
    """Function on ``[0, inf)`` given by power-log pieces between ``breaks``.

    ``pieces[0]`` lives on ``(0, breaks[0])``, ``pieces[i]`` on
    ``(breaks[i-1], breaks[i])`` and ``pieces[-1]`` on ``(breaks[-1], inf)``.
    """

    breaks: tuple
    pieces: tuple

    def __post_init__(self):
        if len(self.pieces) != len(self.breaks) + 1:
            raise ValueError("need exactly one more piece than break points")

    @cached_property
    def _derivative_pieces(self):
        d1 = tuple(p.differentiate() for p in self.pieces)
        d2 = tuple(p.differentiate() for p in d1)
        return (self.pieces, d1, d2)

    @property
    def intervals(self):
        edges = (0.0,) + tuple(self.breaks) + (math.inf,)
        return list(zip(edges[:-1], edges[1:]))

    @property
    def is_complex(self) -> bool:
        return any(p.is_complex for p in self.pieces)

    def piece_index(self, r):
        return np.searchsorted(np.asarray(self.breaks), r, side="right")

    def evaluate(self, r, m: int = 0):
        if m not in (0, 1, 2):
            raise ValueError("only derivative orders 0, 1 and 2 are exposed; use the pieces directly")
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise InputError("radius must be non-negative")
        pieces = self._derivative_pieces[m]
        idx = self.piece_index(r)
        out = np.zeros(r.shape, dtype=complex if self.is_complex else float)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = pieces[i](r[mask])
        return out[()] if out.ndim == 0 else out

    __call__ = evaluate

    def derivs(self, r):
        return self.evaluate(r, 0), self.evaluate(r, 1), self.evaluate(r, 2)

    def _combine(self, other, op):
        if isinstance(other, PiecewisePowerLog):
            if tuple(self.breaks) != tuple(other.breaks):
                raise ValueError("piecewise expressions must share break points")
            return PiecewisePowerLog(self.breaks, tuple(op(p, q) for p, q in zip(self.pieces, other.pieces)))
        if isinstance(other, PowerLogExpr):
            return PiecewisePowerLog(self.breaks, tuple(op(p, other) for p in self.pieces))
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, lambda p, q: p + q)

    def __sub__(self, other):
        return self._combine(other, lambda p, q: p - q)

    def __mul__(self, c):
        if np.isscalar(c):
            return PiecewisePowerLog(self.breaks, tuple(p * c for p in self.pieces))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


@dataclass(frozen=True)
class BeppoLeviSpline:
    """Interpolatory spline with adjoint end conditions at frequency ``k``."""

    k: int
    knots: KnotSet
    head: PowerLogExpr
    interior: tuple
    tail: PowerLogExpr
    values: tuple
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.knots.n

    @property
    def pieces(self) -> tuple:
        return (self.head,) + tuple(self.interior) + (self.tail,)

    @cached_property
    def piecewise(self) -> PiecewisePowerLog:
        return PiecewisePowerLog(self.knots.radii, self.pieces)

    def evaluate(self, r, m: int = 0):
        return self.piecewise.evaluate(r, m)

    __call__ = evaluate

    def derivs(self, r):
        return self.piecewise.derivs(r)

    @property
    def is_complex(self) -> bool:
        return self.piecewise.is_complex

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return BeppoLeviSpline(
            self.k,
            self.knots,
            self.head * c,
            tuple(p * c for p in self.interior),
            self.tail * c,
            tuple(v * c for v in self.values),
            self.residual,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "BeppoLeviSpline":
        return BeppoLeviSpline(
            self.k,
            self.knots,
            self.head.conjugate(),
            tuple(p.conjugate() for p in self.interior),
            self.tail.conjugate(),
            tuple(np.conj(v) for v in self.values),
            self.residual,
        )


def evaluate(s, r, m: int = 0):
    """m-th derivative (m in {0, 1, 2}) of a spline at radius ``r >= 0``."""
    return s.evaluate(r, m)


def _solve(A: np.ndarray, B: np.ndarray, k: int):
    """LU with partial pivoting plus one refinement step; returns (X, residual)."""
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu))) == 0.0:
        raise ConstructionError(f"interpolation system is singular (k={k})", residual=math.inf, k=k)
    X = scipy.linalg.lu_solve((lu, piv), B)
    X = X + scipy.linalg.lu_solve((lu, piv), B - A @ X)
    resid = np.max(np.abs(A @ X - B), axis=0)
    scale = np.linalg.norm(A, np.inf) * np.max(np.abs(X), axis=0) + np.max(np.abs(B), axis=0)
    rel = float(np.max(np.where(scale > 0, resid / np.where(scale > 0, scale, 1.0), resid)))
    if not np.isfinite(rel) or rel > MAX_RESIDUAL:
        raise ConstructionError(
            f"interpolation system solved with relative residual {rel:.3e} (k={k})", residual=rel, k=k
        )
    return X, rel


def _interior_rows(k: int, knots: KnotSet):
    """System matrix for the pieces on ``[r_1, r_n]`` in the local bases."""
    a = abs(k)
    n = knots.n
    r = knots.array
    ratios = r[1:] / r[:-1]
    basis = kernel_basis(k)
    theta = [[b] for b in basis]
    for lst in theta:
        lst.append(lst[-1].euler())
        lst.append(lst[-1].euler())
    left_op = [apply_gk(k, b).shift(3) for b in basis]
    right_op = [apply_rk(k, b).shift(3) for b in basis]

    def row(exprs, x):
        return np.array([float(np.real(e(x))) for e in exprs])

    size = 4 * (n - 1)
    A = np.zeros((size, size))
    rows = 0
    # interpolation
    for j in range(n - 1):
        A[rows, 4 * j : 4 * j + 4] = row([t[0] for t in theta], 1.0)
        rows += 1
    A[rows, 4 * (n - 2) :] = row([t[0] for t in theta], ratios[-1])
    rows += 1
    # C2 joins at r_2 .. r_{n-1}, via value and the first two Euler derivatives
    for j in range(1, n - 1):
        for p in range(3):
            A[rows, 4 * (j - 1) : 4 * j] = row([t[p] for t in theta], ratios[j - 1])
            A[rows, 4 * j : 4 * j + 4] = -row([t[p] for t in theta], 1.0)
            rows += 1
    # end conditions at r_1+ and r_n-
    A[rows, 0:4] = row(left_op, 1.0)
    rows += 1
    A[rows, 4 * (n - 2) :] = row(right_op, ratios[-1])
    rows += 1
    assert rows == size, (rows, size, a)
    return A, theta, ratios


def build_interpolant(k: int, knots, values: Sequence) -> BeppoLeviSpline:
    """The unique Beppo Levi L_k-spline taking ``values`` at ``knots``.

    For ``n >= 2`` the ``4(n-1)`` coefficients of the interior pieces are
    found from the interpolation, C^2 and end conditions, then the head and
    tail pieces follow from value and slope matching at ``r_1`` and ``r_n``.
    A single knot gives ``values[0] * phi_k(r / r_1)``.

    Complex values are solved as two real right-hand sides sharing one
    factorization.
    """
    k = check_frequency(k)
    knots = as_knots(knots)
    vals = np.asarray(values).ravel()
    if vals.size != knots.n:
        raise InputError(f"got {vals.size} values for {knots.n} knots")
    if not np.all(np.isfinite(vals)):
        raise InputError("values must be finite")
    is_complex = np.iscomplexobj(vals) and np.any(np.imag(vals) != 0)
    vals = vals.astype(complex) if is_complex else np.real(vals).astype(float)
    stored = tuple(complex(v) if is_complex else float(v) for v in vals)

    if knots.n == 1:
        v = stored[0]
        r1 = knots.first
        return BeppoLeviSpline(k, knots, phi_head(k).rescale(r1) * v, (), phi_tail(k).rescale(r1) * v, stored)

    n = knots.n
    A, theta, ratios = _interior_rows(k, knots)
    rhs = np.zeros((A.shape[0], 2 if is_complex else 1))
    data = np.stack([vals.real, vals.imag], axis=1) if is_complex else vals[:, None]
    rhs[:n] = data
    # row equilibration
    scale = np.max(np.abs(A), axis=1)
    A = A / scale[:, None]
    rhs = rhs / scale[:, None]
    X, rel = _solve(A, rhs, k)
    coef = X[:, 0] + 1j * X[:, 1] if is_complex else X[:, 0]
    coef = coef.reshape(n - 1, 4)

    r = knots.array
    basis = [t[0] for t in theta]
    interior = []
    for j in range(n - 1):
        local = PowerLogExpr([])
        for c, b in zip(coef[j], basis):
            local = local + b * complex(c) if is_complex else local + b * float(c)
        interior.append(local.rescale(r[j]))

    a = abs(k)
    # head: c1 x^(a+2) + c2 x^a with x = r / r_1, matching value and r d/dr at r_1
    v1 = sum(c * t[0](1.0) for c, t in zip(coef[0], theta))
    dv1 = sum(c * t[1](1.0) for c, t in zip(coef[0], theta))
    c1 = 0.5 * (dv1 - a * v1)
    head = PowerLogExpr([(c1, a + 2), (v1 - c1, a)]).rescale(r[0])
    # tail: c3 x^(2-a) + c4 x^-a with x = r / r_n
    xn = ratios[-1]
    vn = sum(c * t[0](xn) for c, t in zip(coef[-1], theta))
    dvn = sum(c * t[1](xn) for c, t in zip(coef[-1], theta))
    c3 = 0.5 * (dvn + a * vn)
    tail = PowerLogExpr([(c3, 2 - a), (vn - c3, -a)]).rescale(r[-1])
    return BeppoLeviSpline(k, knots, head, tuple(interior), tail, stored, rel)


def phi_spline(k: int, r1: float = 1.0, value=1.0) -> BeppoLeviSpline:
    """``value * phi_k(r / r1)`` as a one-knot spline."""
    return build_interpolant(k, KnotSet((r1,)), [value])


def psi_kernel(k: int, t):
    """``exp(-t) phi_k(exp(t))``, an even function of ``t``; needs ``|k| >= 2``."""
    a = abs(check_frequency(k))
    if a < 2:
        raise UnsupportedFrequencyError("the log-coordinate kernel needs |k| >= 2")
    t = np.abs(np.asarray(t, dtype=float))
    out = 0.5 * np.exp(-a * t) * ((1 - a) * np.exp(-t) + (1 + a) * np.exp(t))
    return out[()] if out.ndim == 0 else out


def psi_kernel_ft(k: int, tau):
    """Fourier transform of :func:`psi_kernel`; positive for all ``tau``."""
    a = abs(check_frequency(k))
    if a < 2:
        raise UnsupportedFrequencyError("the log-coordinate kernel needs |k| >= 2")
    tau = np.asarray(tau, dtype=float)
    out = 4.0 * a * (a * a - 1) / (((a - 1) ** 2 + tau**2) * ((a + 1) ** 2 + tau**2))
    return out[()] if out.ndim == 0 else out


def collocation_gram(k: int, knots) -> np.ndarray:
    """Symmetric matrix ``psi_k(ln r_i - ln r_j)``.

    The collocation matrix ``phi_k(r_i / r_j)`` equals ``D G D^-1`` with
    ``D = diag(r)`` and ``G`` this Gram matrix.
    """
    knots = as_knots(knots)
    t = np.log(knots.array)
    return psi_kernel(k, t[:, None] - t[None, :])


def build_by_collocation(k: int, knots, values):
    """Interpolant written as ``sum_j a_j phi_k(r / r_j)``; needs ``|k| >= 2``.

    Returns ``(a, spline)``. The system is solved through the symmetric
    positive definite Gram matrix by Cholesky.
    """
    k = check_frequency(k)
    if abs(k) == 1:
        raise UnsupportedFrequencyError("dilates of phi_k do not span the spline space for |k| = 1")
    knots = as_knots(knots)
    vals = np.asarray(values).ravel()
    if vals.size != knots.n:
        raise InputError(f"got {vals.size} values for {knots.n} knots")
    r = knots.array
    G = collocation_gram(k, knots)
    try:
        cho = scipy.linalg.cho_factor(G, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError(f"collocation Gram matrix is not positive definite (k={k})", k=k) from exc
    b = scipy.linalg.cho_solve(cho, vals / r)
    coeffs = r * b
    return coeffs, dilation_sum(k, knots, coeffs)


def dilation_sum(k: int, knots, coeffs) -> BeppoLeviSpline:
    """The spline ``sum_j a_j phi_k(r / r_j)`` in piecewise form."""
    k = check_frequency(k)
    knots = as_knots(knots)
    coeffs = np.asarray(coeffs).ravel()
    is_complex = np.iscomplexobj(coeffs)
    cast = complex if is_complex else float
    inner = [phi_head(k).rescale(rj) for rj in knots.radii]
    outer = [phi_tail(k).rescale(rj) for rj in knots.radii]
    n = knots.n

    def piece(i):
        # knots with index < i lie to the left of the interval
        terms = []
        for j in range(n):
            src = outer[j] if j < i else inner[j]
            terms.extend((cast(coeffs[j]) * t.coeff, t.exponent, t.log_power) for t in src)
        return PowerLogExpr(terms)

    pieces = [piece(i) for i in range(n + 1)]
    values = tuple(cast(v) for v in PiecewisePowerLog(knots.radii, tuple(pieces))(knots.array))
    return BeppoLeviSpline(k, knots, pieces[0], tuple(pieces[1:-1]), pieces[-1], values)


def end_condition_residuals(s: BeppoLeviSpline) -> tuple[float, float]:
    """Coefficient norms of ``G_k`` applied to the head and ``R_k`` to the tail."""
    return apply_gk(s.k, s.head).norm(), apply_rk(s.k, s.tail).norm()


def continuity_defects(s) -> np.ndarray:
    """Jumps of value, first and second derivative at each knot, shape (n, 3).

    Each column is relative to the largest one-sided magnitude of that
    derivative over all knots.
    """
    r = np.asarray(s.knots.radii if hasattr(s, "knots") else s.breaks)
    pieces = s.pieces
    left = np.zeros((r.size, 3), dtype=complex)
    right = np.zeros((r.size, 3), dtype=complex)
    for j, rj in enumerate(r):
        lp, rp = pieces[j], pieces[j + 1]
        for m in range(3):
            left[j, m], right[j, m] = lp(rj), rp(rj)
            lp, rp = lp.differentiate(), rp.differentiate()
    scale = np.maximum(np.abs(left), np.abs(right)).max(axis=0)
    jump = np.abs(left - right)
    return np.divide(jump, scale, out=np.zeros_like(jump), where=scale > 0)
