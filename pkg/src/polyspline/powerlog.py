"""Exact calculus on finite sums of terms ``c * r**alpha * (ln r)**m``.

All spline pieces, kernel generators and operator images used by the library
live in this class of functions, so differentiation, the Euler operator
``r d/dr``, multiplication by powers of ``r`` and integration can all be done
term by term without any discretisation.

Exponents are kept as :class:`fractions.Fraction` whenever they are integers
or half-integers, which covers every operator used here; other real
exponents fall back to floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from .errors import DivergenceError, UnsupportedFrequencyError

Exponent = Union[Fraction, float]

#: merged coefficients cancelling below this fraction of their addends are dropped
MERGE_RTOL = 1e-14
#: float exponents closer than this are merged
EXPONENT_ATOL = 1e-12


def as_exponent(alpha) -> Exponent:
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, (int, np.integer)):
        return Fraction(int(alpha))
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ValueError(f"exponent must be finite, got {alpha}")
    twice = round(2.0 * alpha)
    if abs(2.0 * alpha - twice) <= EXPONENT_ATOL:
        return Fraction(twice, 2)
    return alpha


def _key(alpha: Exponent):
    if isinstance(alpha, Fraction):
        return alpha
    # float exponents merge on a 1e-12 grid
    return round(alpha / EXPONENT_ATOL) * EXPONENT_ATOL


def _clean_coeff(c):
    if isinstance(c, (complex, np.complexfloating)):
        c = complex(c)
        return c.real if c.imag == 0.0 else c
    return float(c)


@dataclass(frozen=True)
class PowerLogTerm:
    """One term ``coeff * r**exponent * (ln r)**log_power``."""

    coeff: Union[float, complex]
    exponent: Exponent
    log_power: int = 0

    def __post_init__(self):
        if self.log_power < 0 or int(self.log_power) != self.log_power:
            raise ValueError(f"log power must be a non-negative integer, got {self.log_power}")

    def __str__(self):
        s = f"{self.coeff!r}*r^{self.exponent}"
        if self.log_power:
            s += f"*ln(r)^{self.log_power}"
        return s


class PowerLogExpr:
    """Immutable normalized sum of :class:`PowerLogTerm`.

    No two stored terms share ``(exponent, log_power)`` and zero coefficients
    are never stored. A merged coefficient is dropped when it is the residue
    of cancellation, i.e. ``|sum| <= MERGE_RTOL * sum(|addends|)``; small but
    genuine coefficients (as produced by dilation) are kept.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable = ()):
        acc: dict = {}
        mag: dict = {}
        exps: dict = {}
        for t in terms:
            if not isinstance(t, PowerLogTerm):
                t = PowerLogTerm(*t)
            c = t.coeff
            if c == 0:
                continue
            a = as_exponent(t.exponent)
            key = (_key(a), int(t.log_power))
            exps.setdefault(key, a)
            acc[key] = acc.get(key, 0.0) + c
            mag[key] = mag.get(key, 0.0) + abs(c)
        out = {}
        for key in sorted(acc, key=lambda kk: (float(kk[0]), kk[1])):
            c = acc[key]
            if c == 0 or abs(c) <= MERGE_RTOL * mag[key]:
                continue
            out[(exps[key], key[1])] = _clean_coeff(c)
        self._terms = out

    # construction helpers
    @classmethod
    def monomial(cls, exponent, coeff=1.0, log_power=0) -> "PowerLogExpr":
        return cls([PowerLogTerm(coeff, exponent, log_power)])

    @classmethod
    def constant(cls, c) -> "PowerLogExpr":
        return cls([PowerLogTerm(c, 0, 0)])

    @classmethod
    def zero(cls) -> "PowerLogExpr":
        return cls()

    @property
    def terms(self) -> tuple:
        return tuple(PowerLogTerm(c, a, m) for (a, m), c in self._terms.items())

    def coefficient(self, exponent, log_power=0):
        return self._terms.get((as_exponent(exponent), log_power), 0.0)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_complex(self) -> bool:
        return any(isinstance(c, complex) for c in self._terms.values())

    def norm(self) -> float:
        """Largest coefficient magnitude (0 for the zero expression)."""
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # arithmetic
    def __add__(self, other):
        if isinstance(other, PowerLogExpr):
            return PowerLogExpr(self.terms + other.terms)
        if np.isscalar(other):
            return self + PowerLogExpr.constant(other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return PowerLogExpr((-c, a, m) for (a, m), c in self._terms.items())

    def __sub__(self, other):
        if isinstance(other, PowerLogExpr) or np.isscalar(other):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerLogExpr):
            return PowerLogExpr(
                (c1 * c2, a1 + a2, m1 + m2)
                for (a1, m1), c1 in self._terms.items()
                for (a2, m2), c2 in other._terms.items()
            )
        if np.isscalar(other):
            return PowerLogExpr((c * other, a, m) for (a, m), c in self._terms.items())
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / other)
        return NotImplemented

    def conjugate(self) -> "PowerLogExpr":
        return PowerLogExpr((np.conj(c), a, m) for (a, m), c in self._terms.items())

    @property
    def real(self) -> "PowerLogExpr":
        return PowerLogExpr((np.real(c), a, m) for (a, m), c in self._terms.items())

    @property
    def imag(self) -> "PowerLogExpr":
        return PowerLogExpr((np.imag(c), a, m) for (a, m), c in self._terms.items())

    def shift(self, beta) -> "PowerLogExpr":
        """Multiply by ``r**beta``."""
        beta = as_exponent(beta)
        return PowerLogExpr((c, a + beta, m) for (a, m), c in self._terms.items())

    def differentiate(self) -> "PowerLogExpr":
        out = []
        for (a, m), c in self._terms.items():
            if a != 0:
                out.append((c * float(a), a - 1, m))
            if m:
                out.append((c * m, a - 1, m - 1))
        return PowerLogExpr(out)

    def euler(self) -> "PowerLogExpr":
        """The Euler operator ``r d/dr``."""
        return self.differentiate().shift(1)

    def rescale(self, s: float) -> "PowerLogExpr":
        """Return the expression for ``r -> f(r / s)``."""
        if not s > 0:
            raise ValueError(f"scale must be positive, got {s}")
        ls = math.log(s)
        out = []
        for (a, m), c in self._terms.items():
            cs = c * s ** (-float(a))
            for i in range(m + 1):
                # (ln r - ln s)^m, binomially expanded
                out.append((cs * math.comb(m, i) * (-ls) ** (m - i), a, i))
        return PowerLogExpr(out)

    def antiderivative(self) -> "PowerLogExpr":
        """An antiderivative, obtained term by term."""
        out = []
        for (a, m), c in self._terms.items():
            if a == -1:
                out.append((c / (m + 1), 0, m + 1))
                continue
            b = a + 1
            fall = 1  # m!/(m-i)!
            for i in range(m + 1):
                if i:
                    fall *= m - i + 1
                out.append((c * (-1) ** i * fall / float(b) ** (i + 1), b, m - i))
        return PowerLogExpr(out)

    # evaluation
    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        dtype = complex if self.is_complex else float
        out = np.zeros(r_arr.shape, dtype=dtype)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logr = np.log(r_arr) if any(m for (_, m) in self._terms) else None
            for (a, m), c in self._terms.items():
                p = np.power(r_arr, float(a))
                if m:
                    p = p * logr**m
                if a > 0:
                    p = np.where(r_arr == 0.0, 0.0, p)
                out = out + c * p
        return out[()] if out.ndim == 0 else out

    evaluate = __call__

    # comparison
    def isclose(self, other: "PowerLogExpr", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        keys = set(self._terms) | set(other._terms)
        for key in keys:
            c1 = self._terms.get(key, 0.0)
            c2 = other._terms.get(key, 0.0)
            if abs(c1 - c2) > atol + rtol * max(abs(c1), abs(c2)):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, PowerLogExpr):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __repr__(self):
        if not self._terms:
            return "PowerLogExpr(0)"
        return "PowerLogExpr(" + " + ".join(str(t) for t in self.terms) + ")"


def monomial(exponent, coeff=1.0, log_power=0) -> PowerLogExpr:
    return PowerLogExpr.monomial(exponent, coeff, log_power)


def differentiate(e: PowerLogExpr) -> PowerLogExpr:
    """Term-wise derivative d/dr."""
    return e.differentiate()


def apply_euler(e: PowerLogExpr) -> PowerLogExpr:
    """Apply ``r d/dr``."""
    return e.euler()


def _check_k(k) -> int:
    if int(k) != k:
        raise UnsupportedFrequencyError(f"frequency must be an integer, got {k}")
    if k == 0:
        raise UnsupportedFrequencyError("frequency k = 0 is not supported by the adjoint end-operator family")
    return abs(int(k))


def _euler_factor(e: PowerLogExpr, c) -> PowerLogExpr:
    # (r d/dr + c) e
    return e.euler() + e * float(c)


def apply_gk(k: int, e: PowerLogExpr) -> PowerLogExpr:
    """Left end operator ``r^-3 (r d/dr - |k|)(r d/dr - |k| - 2)``."""
    a = _check_k(k)
    return _euler_factor(_euler_factor(e, -a - 2), -a).shift(-3)


def apply_rk(k: int, e: PowerLogExpr) -> PowerLogExpr:
    """Right end operator ``r^-3 (r d/dr + |k|)(r d/dr + |k| - 2)``."""
    a = _check_k(k)
    return _euler_factor(_euler_factor(e, a - 2), a).shift(-3)


def apply_bessel(k: int, e: PowerLogExpr) -> PowerLogExpr:
    """``d^2/dr^2 + r^-1 d/dr - k^2 r^-2`` (the radial part of the Laplacian at frequency k)."""
    d1 = e.differentiate()
    return d1.differentiate() + d1.shift(-1) - e.shift(-2) * float(k * k)


def apply_lk(k: int, e: PowerLogExpr) -> PowerLogExpr:
    """Euler-Lagrange operator ``r (d^2/dr^2 + r^-1 d/dr - k^2 r^-2)^2``.

    Built from plain derivatives, independently of the Euler-factor forms
    used by :func:`apply_gk`, :func:`apply_rk` and :func:`apply_mk`.
    """
    _check_k(k)
    return apply_bessel(k, apply_bessel(k, e)).shift(1)


def apply_mk(k: int, e: PowerLogExpr) -> PowerLogExpr:
    """``r^-3/2 (r d/dr - |k|)(r d/dr + |k|)``."""
    a = _check_k(k)
    return _euler_factor(_euler_factor(e, a), -a).shift(Fraction(-3, 2))


def apply_mk_adjoint(k: int, e: PowerLogExpr) -> PowerLogExpr:
    """Formal adjoint of :func:`apply_mk`.

    With ``M u = r^(1/2) u'' + r^(-1/2) u' - k^2 r^(-3/2) u`` the adjoint is
    ``(r^(1/2) v)'' - (r^(-1/2) v)' - k^2 r^(-3/2) v``.
    """
    _check_k(k)
    half = Fraction(1, 2)
    return (
        e.shift(half).differentiate().differentiate()
        - e.shift(-half).differentiate()
        - e.shift(-3 * half) * float(k * k)
    )


def integrate_exact(e: PowerLogExpr, a: float, b: float) -> Union[float, complex]:
    """Exact value of the integral of ``e`` over ``(a, b)``.

    ``a`` may be 0 and ``b`` may be ``inf``; the improper integral must then
    converge term by term, otherwise :class:`DivergenceError` names the first
    offending integrand term.
    """
    if not (a >= 0 and b > a):
        if a == b:
            return 0.0
        raise ValueError(f"need 0 <= a < b, got a={a}, b={b}")
    for (al, m), c in e._terms.items():
        if a == 0 and not al > -1:
            raise DivergenceError(f"term {PowerLogTerm(c, al, m)} is not integrable at r = 0")
        if math.isinf(b) and not al < -1:
            raise DivergenceError(f"term {PowerLogTerm(c, al, m)} is not integrable at r = infinity")
    F = e.antiderivative()
    hi = 0.0 if math.isinf(b) else F(b)
    lo = 0.0 if a == 0 else F(a)
    val = hi - lo
    return _clean_coeff(val) if np.iscomplexobj(val) else float(val)
