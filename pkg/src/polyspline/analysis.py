"""Energies, orthogonality and optimality checks, and convergence studies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._concurrency import thread_map
from .errors import DivergenceError, PreconditionError
from .functions import Composite
from .powerlog import PowerLogExpr, apply_rk, integrate_exact
from .quadrature import DEFAULT_ORDER, composite_rule, half_line_rule
from .spline import (
    BeppoLeviSpline,
    KnotSet,
    PiecewisePowerLog,
    as_knots,
    build_interpolant,
    check_frequency,
    psi_kernel,
    psi_kernel_ft,
)

__all__ = [
    "EnergyValue",
    "ErrorReport",
    "ErrorStudy",
    "PythagorasResult",
    "energy",
    "energy_density",
    "inner_density",
    "orthogonality_defect",
    "pythagoras_check",
    "psi_kernel",
    "psi_kernel_ft",
    "error_study",
    "fit_order",
    "apply_gk_numeric",
    "apply_rk_numeric",
]


@dataclass(frozen=True)
class EnergyValue:
    """Squared energy ``||f||_k^2``; a seminorm only for ``|k| = 1`` (kernel ``span{r}``)."""

    value: float
    k: int
    is_seminorm: bool

    @property
    def norm(self) -> float:
        return math.sqrt(self.value)

    def __float__(self):
        return float(self.value)


def inner_density(k: int, e: PowerLogExpr, f: PowerLogExpr) -> PowerLogExpr:
    """Integrand of the energy inner product of two power-log pieces (second argument conjugated)."""
    k2 = float(k * k)

    def parts(p):
        d1 = p.differentiate()
        d2 = d1.differentiate()
        return d2, p.shift(-2) - d1.shift(-1), p.shift(-2) * k2 - d1.shift(-1)

    A1, B1, C1 = parts(e)
    A2, B2, C2 = parts(f) if f is not e else (A1, B1, C1)
    A2, B2, C2 = A2.conjugate(), B2.conjugate(), C2.conjugate()
    return (A1 * A2 + (B1 * B2) * (2.0 * k2) + C1 * C2).shift(1)


def energy_density(k: int, e: PowerLogExpr) -> PowerLogExpr:
    return inner_density(k, e, e)


def _density_numeric(k: int, r, f0, f1, f2):
    k2 = k * k
    B = f0 / r**2 - f1 / r
    C = k2 * f0 / r**2 - f1 / r
    return (np.abs(f2) ** 2 + 2 * k2 * np.abs(B) ** 2 + np.abs(C) ** 2) * r


def energy(
    k: int,
    f,
    *,
    quad_order: int = DEFAULT_ORDER,
    subdivisions: int = 2,
    method: str = "auto",
    interval: tuple = (0.0, math.inf),
) -> EnergyValue:
    """Squared energy ``int_0^inf {|f''|^2 + 2k^2|f/r^2 - f'/r|^2 + |k^2 f/r^2 - f'/r|^2} r dr``.

    Segments where ``f`` is a power-log expression are integrated in closed
    form (including the improper head and tail); segments where a smooth
    part is active use composite Gauss-Legendre quadrature, with the
    half-line handled by the substitution ``r = a / u``.

    ``method="quadrature"`` forces quadrature on finite segments (the tail of
    a pure power-log function is still integrated exactly). ``interval``
    restricts the integral to a sub-range of the half-line.
    """
    k = check_frequency(k)
    if method not in ("auto", "exact", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    comp = Composite.of(f)
    if method == "exact" and comp.smooth:
        raise ValueError("exact energy needs a purely piecewise power-log function")
    lo_lim, hi_lim = float(interval[0]), float(interval[1])
    if not 0.0 <= lo_lim < hi_lim:
        raise ValueError(f"bad integration interval {interval!r}")
    edges = [lo_lim] + [b for b in comp.breaks() if lo_lim < b < hi_lim] + [hi_lim]
    if edges == [0.0, math.inf]:
        edges = [0.0, 1.0, math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        smooth = comp.smooth_active(lo, hi)
        finite = math.isfinite(hi)
        if not smooth and not (method == "quadrature" and finite):
            if comp.piecewise is None:
                continue
            mid = 0.5 * (lo + hi) if finite else lo + 1.0
            piece = comp.piecewise.pieces[int(comp.piecewise.piece_index(mid))]
            total += integrate_exact(energy_density(k, piece), lo, hi)
            continue
        if finite:
            nodes, weights = composite_rule([lo, hi], quad_order, subdivisions)
        else:
            nodes, weights = half_line_rule(lo, quad_order)
            panels = (weights * _density_numeric(k, nodes, *comp.derivs(nodes))).reshape(-1, quad_order)
            contrib = np.abs(panels.sum(axis=1))
            # panels run from r = lo * 2**levels down to lo; a non-negligible far end means no decay
            if not np.all(np.isfinite(contrib)) or contrib[:8].sum() > 1e-10 * max(contrib.sum(), 1e-300):
                raise DivergenceError(f"energy integrand does not decay as r -> inf (k={k})")
            total += panels.sum()
            continue
        vals = _density_numeric(k, nodes, *comp.derivs(nodes))
        total += np.sum(weights * vals)
    total = float(np.real(total))
    if not math.isfinite(total):
        raise DivergenceError(f"energy integral is not finite for k={k}")
    return EnergyValue(max(total, 0.0), k, abs(k) == 1)


def apply_gk_numeric(k: int, r, f0, f1, f2):
    a = abs(k)
    return (f2 - (2 * a + 1) * f1 / r + a * (a + 2) * f0 / r**2) / r


def apply_rk_numeric(k: int, r, f0, f1, f2):
    a = abs(k)
    return (f2 + (2 * a - 1) * f1 / r + a * (a - 2) * f0 / r**2) / r


def _check_vanishing(psi, radii, tol):
    r = np.asarray(radii)
    vals = np.abs(psi.derivs(r)[0])
    grid = np.linspace(0.5 * r[0], r[-1] * 1.5, 513)
    scale = max(1.0, float(np.max(np.abs(psi.derivs(grid)[0]))))
    bad = np.nonzero(vals > tol * scale)[0]
    if bad.size:
        j = int(bad[0])
        raise PreconditionError(f"test function does not vanish at knot r={r[j]!r} (|psi|={vals[j]:.3e})")


def orthogonality_defect(
    k: int,
    eta: BeppoLeviSpline,
    psi,
    *,
    normalized: bool = False,
    check_knots: bool = True,
    knot_tol: float = 1e-10,
    quad_order: int = DEFAULT_ORDER,
    subdivisions: int = 4,
):
    """``I_k = int_0^{r_n} r^3 (R_k eta)(conj R_k psi) dr`` by composite quadrature.

    Zero whenever ``psi`` vanishes on the knots. With ``normalized=True``
    returns ``|I_k| / (||r^3/2 R_k eta|| ||r^3/2 R_k psi||)`` over ``(0, r_n)``.
    """
    k = check_frequency(k)
    if abs(eta.k) != abs(k):
        raise ValueError(f"spline has frequency {eta.k}, expected +-{abs(k)}")
    psi = Composite.of(psi)
    radii = eta.knots.radii
    if check_knots:
        _check_vanishing(psi, radii, knot_tol)
    rn = radii[-1]
    pts = {0.0, *radii}
    pts.update(b for b in psi.breaks() if 0 < b < rn)
    nodes, weights = composite_rule(sorted(pts), quad_order, subdivisions)
    r_eta = PiecewisePowerLog(radii, tuple(apply_rk(k, p) for p in eta.pieces))(nodes)
    r_psi = apply_rk_numeric(k, nodes, *psi.derivs(nodes))
    w3 = weights * nodes**3
    I = np.sum(w3 * r_eta * np.conj(r_psi))
    if np.iscomplexobj(I) and I.imag == 0:
        I = I.real
    if not normalized:
        return complex(I) if np.iscomplexobj(I) else float(I)
    n_eta = math.sqrt(float(np.sum(w3 * np.abs(r_eta) ** 2)))
    n_psi = math.sqrt(float(np.sum(w3 * np.abs(r_psi) ** 2)))
    denom = n_eta * n_psi
    return float(abs(I) / denom) if denom > 0 else float(abs(I))


@dataclass(frozen=True)
class PythagorasResult:
    lhs: float  # ||g||^2
    rhs: float  # ||sigma||^2 + ||g - sigma||^2
    defect: float
    sigma_energy: float
    residual_energy: float
    sigma_is_minimal: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.defect))


def pythagoras_check(k: int, sigma: BeppoLeviSpline, g, *, knot_tol: float = 1e-10, **quad) -> PythagorasResult:
    """Compare ``||g||^2`` with ``||sigma||^2 + ||g - sigma||^2`` for a competitor ``g``.

    ``g`` must take the same values as ``sigma`` at the knots.
    """
    k = check_frequency(k)
    g = Composite.of(g)
    r = np.asarray(sigma.knots.radii)
    gv = g(r)
    sv = np.asarray(sigma.values)
    tol = knot_tol * max(1.0, float(np.max(np.abs(sv))))
    bad = np.nonzero(np.abs(gv - sv) > tol)[0]
    if bad.size:
        j = int(bad[0])
        raise PreconditionError(
            f"competitor does not interpolate the spline data at r={float(r[j])!r} ({gv[j].item()!r} vs {sv[j].item()!r})"
        )
    lhs = energy(k, g, **quad).value
    e_sigma = energy(k, sigma, **quad).value
    e_diff = energy(k, g - sigma, **quad).value
    rhs = e_sigma + e_diff
    defect = abs(lhs - rhs) / lhs if lhs > 0 else abs(lhs - rhs)
    return PythagorasResult(lhs, rhs, defect, e_sigma, e_diff, e_sigma <= lhs)


@dataclass(frozen=True)
class ErrorReport:
    """Measured interpolation errors on ``[r_1, r_n]`` next to their theoretical bounds."""

    k: int
    n: int
    h: float
    err_linf: tuple  # (m=0, m=1)
    err_l2: tuple
    bound_linf: tuple
    bound_l2: tuple
    data_norm: float  # ||g||_k

    @property
    def bounds_hold(self) -> bool:
        return all(e <= b for e, b in zip(self.err_linf + self.err_l2, self.bound_linf + self.bound_l2))

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "h": self.h,
            "errLinf0": self.err_linf[0],
            "errLinf1": self.err_linf[1],
            "errL2_0": self.err_l2[0],
            "errL2_1": self.err_l2[1],
            "boundLinf0": self.bound_linf[0],
            "boundLinf1": self.bound_linf[1],
            "boundL2_0": self.bound_l2[0],
            "boundL2_1": self.bound_l2[1],
            "energy": self.data_norm,
            "boundsHold": self.bounds_hold,
        }


@dataclass(frozen=True)
class ErrorStudy:
    reports: list
    orders: dict = field(default_factory=dict)

    @property
    def bounds_hold(self) -> bool:
        return all(r.bounds_hold for r in self.reports)


def fit_order(hs: Sequence[float], errs: Sequence[float], drop_coarsest: bool = True) -> float:
    """Least-squares slope of ``log err`` against ``log h``; nan when undefined."""
    h = np.asarray(hs, dtype=float)
    e = np.asarray(errs, dtype=float)
    if drop_coarsest and h.size >= 3:
        keep = h < h.max()
        h, e = h[keep], e[keep]
    if h.size < 2 or np.any(e <= 0) or np.any(h <= 0):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def _level_report(k, g, knots, g_norm, quad_order, grid_per_segment):
    r = knots.array
    sigma = build_interpolant(k, knots, g(r))
    grid = np.unique(np.concatenate([np.linspace(a, b, grid_per_segment) for a, b in zip(r[:-1], r[1:])]))
    nodes, weights = composite_rule(r, quad_order, 2)
    linf, l2 = [], []
    for m in (0, 1):
        linf.append(float(np.max(np.abs(g(grid, m) - sigma(grid, m)))))
        l2.append(math.sqrt(float(np.sum(weights * np.abs(g(nodes, m) - sigma(nodes, m)) ** 2))))
    h = knots.mesh_size
    coef = [1.0 / (2.0 ** (1 - m) * math.sqrt(r[0])) for m in (0, 1)]
    bound_linf = tuple(coef[m] * h ** (1.5 - m) * g_norm for m in (0, 1))
    bound_l2 = tuple(coef[m] * h ** (2 - m) * g_norm for m in (0, 1))
    return ErrorReport(k, knots.n, h, tuple(linf), tuple(l2), bound_linf, bound_l2, g_norm)


def error_study(
    k: int,
    g,
    knot_family: Sequence,
    *,
    quad_order: int = DEFAULT_ORDER,
    grid_per_segment: int = 65,
    workers: Optional[int] = None,
) -> ErrorStudy:
    """Interpolate ``g`` on each knot set and compare errors with the ``h``-power bounds.

    Order fits (``L2_0``, ``L2_1``, ``Linf_0``, ``Linf_1``) discard the
    coarsest level.
    """
    k = check_frequency(k)
    g = Composite.of(g)
    try:
        g_norm = energy(k, g, quad_order=quad_order).norm
    except DivergenceError as exc:
        raise DivergenceError(f"data function has infinite energy for k={k}: {exc}") from exc
    family = [as_knots(kn) for kn in knot_family]
    for kn in family:
        if kn.n < 2:
            raise PreconditionError("error study needs at least two knots per level")
    reports = thread_map(lambda kn: _level_report(k, g, kn, g_norm, quad_order, grid_per_segment), family, workers)
    hs = [rep.h for rep in reports]
    orders = {}
    for m in (0, 1):
        orders[f"L2_{m}"] = fit_order(hs, [rep.err_l2[m] for rep in reports])
        orders[f"Linf_{m}"] = fit_order(hs, [rep.err_linf[m] for rep in reports])
    return ErrorStudy(list(reports), orders)
