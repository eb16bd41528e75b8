"""Transfinite surfaces interpolating curves on concentric circles.

Curves sampled on an equispaced angular grid are expanded in discrete
Fourier coefficients; each mode ``k != 0`` is interpolated radially by the
frequency-``k`` spline, and the surface is re-synthesised as

    s(r, theta) = z0(r) + 2 Re sum_{k=1}^{K} sigma_k(r) e^{i k theta}.

The ``k = 0`` profile is supplied by a pluggable strategy. The default is a
natural cubic interpolant, which is a convenience choice and makes no claim of
minimising the zero-mode energy.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from ._concurrency import thread_map
from .analysis import energy
from .errors import ConstructionError, InputError, PolysplineError
from .functions import Composite
from .quadrature import DEFAULT_ORDER, composite_rule, half_line_rule
from .spline import BeppoLeviSpline, KnotSet, as_knots, build_interpolant

WIENER_RTOL = 1e-8
GRID_ATOL = 1e-12


def equispaced_thetas(M: int) -> np.ndarray:
    """``theta_i = -pi + 2 pi i / M``."""
    return -math.pi + 2.0 * math.pi * np.arange(M) / M


def _fourier_all(curves: np.ndarray, theta0: float) -> np.ndarray:
    """Coefficients for ``k = 0..M-1`` (row per curve) with the ``1/M`` normalisation."""
    M = curves.shape[1]
    # signed frequencies: the phase shift differs between j and j - M unless M theta0 is a multiple of 2 pi
    k = np.rint(np.fft.fftfreq(M, 1.0 / M))
    return np.fft.fft(curves, axis=1) / M * np.exp(-1j * k * theta0)[None, :]


def _wiener_profile(coeffs: np.ndarray) -> np.ndarray:
    """Per-curve weighted magnitudes ``|c_k| (1+|k|)^2`` folded onto ``|k| = 0..M//2``."""
    M = coeffs.shape[1]
    half = M // 2
    out = np.zeros((coeffs.shape[0], half + 1))
    for j in range(M):
        kk = j if j <= half else M - j
        out[:, kk] += np.abs(coeffs[:, j]) * (1 + abs(kk)) ** 2
    return out


@dataclass(frozen=True)
class TransfiniteDataset:
    """Curves ``mu_j`` on circles ``r = r_j`` with their Fourier coefficients up to ``K``."""

    knots: KnotSet
    thetas: np.ndarray
    curves: np.ndarray
    K: int
    fourier: np.ndarray  # (n, 2K+1), column K + k holds mode k
    wiener_sums: np.ndarray  # per curve, modes |k| <= K
    tail_fractions: np.ndarray  # per curve, weighted mass beyond K over the total

    @property
    def n(self) -> int:
        return self.knots.n

    @property
    def M(self) -> int:
        return self.curves.shape[1]

    def coefficient(self, k: int) -> np.ndarray:
        if abs(k) > self.K:
            raise InputError(f"mode {k} is beyond the truncation K={self.K}")
        return self.fourier[:, self.K + k]

    @property
    def leakage(self) -> np.ndarray:
        """Per-curve flag: energy beyond ``K`` (including aliased content) is not negligible."""
        return self.tail_fractions > WIENER_RTOL

    def diagnostics(self) -> dict:
        return {
            "K": self.K,
            "M": self.M,
            "wiener_sums": [float(x) for x in self.wiener_sums],
            "tail_fractions": [float(x) for x in self.tail_fractions],
            "leakage": [bool(x) for x in self.leakage],
        }


def _check_grid(thetas: np.ndarray) -> float:
    M = thetas.size
    step = 2.0 * math.pi / M
    expected = thetas[0] + step * np.arange(M)
    if np.max(np.abs(thetas - expected)) > GRID_ATOL * max(1.0, abs(thetas[0]) + 2 * math.pi):
        raise InputError("angular samples must be equispaced with spacing 2*pi/M")
    return float(thetas[0])


def ingest(radii, curves, K: Optional[int] = None, thetas=None) -> TransfiniteDataset:
    """Discrete Fourier coefficients of curves sampled at equispaced angles.

    ``curves`` has one row per radius. Without ``thetas`` the grid is
    ``-pi + 2 pi i / M``. With ``K=None`` the smallest truncation whose
    weighted tail falls below ``1e-8`` of the total is chosen.
    """
    knots = as_knots(radii)
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    if curves.shape[0] != knots.n:
        raise InputError(f"got {curves.shape[0]} curves for {knots.n} radii")
    M = curves.shape[1]
    if M < 1:
        raise InputError("curves need at least one sample")
    if not np.all(np.isfinite(curves)):
        raise InputError("curve samples must be finite")
    thetas = equispaced_thetas(M) if thetas is None else np.asarray(thetas, dtype=float)
    if thetas.shape != (M,):
        raise InputError(f"expected {M} angles, got {thetas.shape}")
    theta0 = _check_grid(thetas)
    full = _fourier_all(curves, theta0)
    profile = _wiener_profile(full)
    total = profile.sum(axis=1)
    kmax = (M - 1) // 2
    if K is None:
        K = 0
        agg = profile.sum(axis=0)
        while K < kmax and agg[K + 1 :].sum() > WIENER_RTOL * agg.sum():
            K += 1
    K = int(K)
    if K < 0:
        raise InputError("truncation K must be non-negative")
    if M < 2 * K + 1:
        raise InputError(f"need M >= 2K+1 samples per curve (M={M}, K={K})")
    cols = [full[:, k % M] for k in range(-K, K + 1)]
    fourier = np.stack(cols, axis=1)
    wiener = profile[:, : K + 1].sum(axis=1)
    tail = profile[:, K + 1 :].sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, tail / np.where(total > 0, total, 1.0), 0.0)
    return TransfiniteDataset(knots, thetas, curves, K, fourier, wiener, frac)


@dataclass(frozen=True)
class ZeroModeProfile:
    """Real radial profile with ``__call__(r, m)``; linear beyond the data range."""

    knots: KnotSet
    values: tuple
    _spline: Optional[CubicSpline] = field(default=None, repr=False)

    def __call__(self, r, m: int = 0):
        r = np.asarray(r, dtype=float)
        if self._spline is None:
            return np.full(r.shape, self.values[0] if m == 0 else 0.0)
        a, b = self.knots.first, self.knots.last
        s = self._spline
        out = s(np.clip(r, a, b), m)
        for edge, mask in ((a, r < a), (b, r > b)):
            if np.any(mask):
                d = r[mask] - edge
                if m == 0:
                    out[mask] = s(edge) + s(edge, 1) * d
                elif m == 1:
                    out[mask] = s(edge, 1)
                else:
                    out[mask] = 0.0
        return out

    def derivs(self, r):
        return tuple(self(r, m) for m in range(3))


class NaturalCubicZeroMode:
    """Default zero-mode strategy: natural cubic spline through ``(r_j, mu_j0)``.

    Plumbing only. It is C^2 and extends linearly outside ``[r_1, r_n]``, but
    is not the zero-frequency energy minimiser, and it does not distinguish the
    two variants of the construction that differ in their behaviour at the
    origin (value at 0 versus biharmonicity at 0).
    """

    from_theory = False
    variant = "unspecified (origin behaviour of the zero mode is not modelled)"

    def __call__(self, knots: KnotSet, values) -> ZeroModeProfile:
        vals = np.real(np.asarray(values))
        if knots.n == 1:
            return ZeroModeProfile(knots, (float(vals[0]),))
        cs = CubicSpline(knots.array, vals, bc_type="natural")
        return ZeroModeProfile(knots, tuple(float(v) for v in vals), cs)

    def describe(self) -> dict:
        return {"strategy": "natural_cubic", "from_theory": self.from_theory, "variant": self.variant}


@dataclass(frozen=True)
class SurfaceModel:
    knots: KnotSet
    K: int
    splines: Mapping  # k -> BeppoLeviSpline for 1 <= k <= K
    zero_mode: Callable
    zero_mode_info: dict = field(default_factory=dict)

    def mode(self, k: int):
        """Radial amplitude of mode ``k``; negative modes are conjugates."""
        if k == 0:
            return self.zero_mode
        if abs(k) > self.K:
            raise InputError(f"mode {k} is beyond the truncation K={self.K}")
        s = self.splines[abs(k)]
        return s if k > 0 else s.conjugate()

    def evaluate(self, r, theta, m: int = 0):
        return evaluate_surface(self, r, theta, m)

    __call__ = evaluate

    def modal_energies(self, **quad) -> dict:
        """``||sigma_k||_k^2`` for ``k = 1..K`` (closed form)."""
        return {k: energy(k, s, **quad).value for k, s in self.splines.items()}

    def bl_energy(self, **quad) -> float:
        """``2 pi sum_{0 < |k| <= K} ||sigma_k||_k^2`` (zero mode excluded)."""
        return 2.0 * math.pi * 2.0 * sum(self.modal_energies(**quad).values())


def build_surface(dataset: TransfiniteDataset, zero_mode=None, workers: Optional[int] = None) -> SurfaceModel:
    """Interpolate every mode ``1 <= k <= K`` radially; the zero mode goes to ``zero_mode``."""
    strategy = zero_mode or NaturalCubicZeroMode()
    knots = dataset.knots

    def one(k):
        try:
            return build_interpolant(k, knots, dataset.coefficient(k))
        except PolysplineError as exc:
            raise ConstructionError(f"surface mode k={k} failed: {exc}", getattr(exc, "residual", None), k) from exc

    ks = list(range(1, dataset.K + 1))
    splines = dict(zip(ks, thread_map(one, ks, workers)))
    z0 = strategy(knots, dataset.coefficient(0))
    info = strategy.describe() if hasattr(strategy, "describe") else {"strategy": type(strategy).__name__}
    return SurfaceModel(knots, dataset.K, splines, z0, info)


def _synth(modes: Mapping, r, theta, m: int):
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    r, theta = np.broadcast_arrays(r, theta)
    out = np.zeros(r.shape)
    if 0 in modes and modes[0] is not None:
        out = out + np.real(modes[0](r, m))
    for k, prof in modes.items():
        if k <= 0:
            continue
        out = out + 2.0 * np.real(prof(r, m) * np.exp(1j * k * theta))
    return out


def evaluate_surface(S: SurfaceModel, r, theta, m: int = 0):
    """``d^m/dr^m s(r, theta)`` for ``m`` in ``{0, 1, 2}``; broadcasts ``r`` against ``theta``."""
    if m not in (0, 1, 2):
        raise ValueError("radial derivative order must be 0, 1 or 2")
    if np.any(np.asarray(r) < 0):
        raise InputError("radius must be non-negative")
    modes = {0: S.zero_mode, **S.splines}
    return _synth(modes, r, theta, m)


def _profile(f):
    return None if f is None else Composite.of(f)


@dataclass(frozen=True)
class ModalSurface:
    """Real reference surface ``f0(r) + 2 Re sum_{k>=1} f_k(r) e^{ik theta}`` from radial profiles."""

    modes: Mapping  # k >= 0 -> profile

    def __post_init__(self):
        if any(k < 0 for k in self.modes):
            raise InputError("give profiles for k >= 0 only; negative modes are implied by realness")

    def profile(self, k: int):
        p = self.modes.get(abs(k))
        if p is None:
            return None
        return _profile(p)

    @property
    def K(self) -> int:
        return max([k for k in self.modes] + [0])

    @property
    def has_mean(self) -> bool:
        p = self.modes.get(0)
        if p is None:
            return False
        grid = np.linspace(1e-3, 10.0, 97)
        return bool(np.any(np.asarray(_profile(p)(grid)) != 0))

    def evaluate(self, r, theta, m: int = 0):
        return _synth({k: _profile(p) for k, p in self.modes.items() if p is not None}, r, theta, m)

    __call__ = evaluate

    def sample(self, radii, M: int):
        """Curves on the circles ``radii`` at the default ``M``-point angular grid."""
        r = np.asarray(as_knots(radii).array)
        th = equispaced_thetas(M)
        return self.evaluate(r[:, None], th[None, :])

    def mode_energies(self, **quad) -> dict:
        return {k: energy(k, _profile(p), **quad).value for k, p in self.modes.items() if k > 0 and p is not None}

    def bl_norm(self, **quad) -> float:
        """``sqrt(2 pi sum_k ||f_k||_k^2)`` over nonzero modes (each ``k`` counted with ``-k``)."""
        return math.sqrt(2.0 * math.pi * 2.0 * sum(self.mode_energies(**quad).values()))


@dataclass(frozen=True)
class SurfaceErrorResult:
    m: int
    measured: float
    bound: float
    bl_norm: float
    h: float
    checked: bool

    @property
    def holds(self) -> bool:
        return (not self.checked) or self.measured <= self.bound

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "h": self.h,
            "measured": self.measured,
            "bound": self.bound if self.checked else None,
            "blNorm": self.bl_norm,
            "checked": self.checked,
            "holds": self.holds,
        }


def _theta_rule(n_theta: int):
    th = equispaced_thetas(n_theta)
    return th, np.full(n_theta, 2.0 * math.pi / n_theta)


def surface_error_l2(
    S: SurfaceModel,
    f: ModalSurface,
    m: int = 0,
    *,
    quad_order: int = DEFAULT_ORDER,
    subdivisions: int = 2,
    n_theta: Optional[int] = None,
) -> SurfaceErrorResult:
    """Annulus error ``(int_{r_1}^{r_n} int |d^m_r (f - s)|^2 r dtheta dr)^{1/2}`` and its bound.

    The bound is ``2^{m-1} sqrt(r_n/r_1) h^{2-m} ||f||_BL``. It is only
    checked for references without a mean (zero) mode; otherwise a warning is
    issued and ``bound`` is nan.
    """
    if m not in (0, 1):
        raise ValueError("m must be 0 or 1")
    knots = S.knots
    if knots.n < 2:
        raise InputError("the annulus error needs at least two circles")
    kmax = max(S.K, f.K)
    n_theta = n_theta or max(64, 4 * kmax + 8)
    th, wt = _theta_rule(n_theta)
    rn, wr = composite_rule(knots.array, quad_order, subdivisions)
    diff = f.evaluate(rn[:, None], th[None, :], m) - evaluate_surface(S, rn[:, None], th[None, :], m)
    measured = math.sqrt(float(np.sum((wr * rn)[:, None] * wt[None, :] * diff**2)))
    h = knots.mesh_size
    if f.has_mean:
        warnings.warn("reference surface has a mean mode; the L2 bound is not checked", stacklevel=2)
        return SurfaceErrorResult(m, measured, math.nan, math.nan, h, False)
    bl = f.bl_norm(quad_order=quad_order)
    bound = 2.0 ** (m - 1) * math.sqrt(knots.last / knots.first) * h ** (2 - m) * bl
    return SurfaceErrorResult(m, measured, bound, bl, h, True)


def _polar_derivs(modes: Mapping, r, theta):
    """``u_rr``, ``d_r(u_theta / r)`` and ``u_r / r + u_thetatheta / r^2`` on a tensor grid."""
    R, T = r[:, None], theta[None, :]
    urr = np.zeros((r.size, theta.size))
    mix = np.zeros_like(urr)
    lap = np.zeros_like(urr)
    for k, prof in modes.items():
        f0, f1, f2 = (np.asarray(v)[:, None] for v in prof.derivs(r))
        c = 1.0 if k == 0 else 2.0
        e = np.exp(1j * k * T)
        urr += c * np.real(f2 * e)
        mix += c * np.real(1j * k * (f1 / R - f0 / R**2) * e)
        lap += c * np.real((f1 / R - k * k * f0 / R**2) * e)
    return urr, mix, lap


def bl_energy_check(S: SurfaceModel, *, quad_order: int = DEFAULT_ORDER, subdivisions: int = 2, n_theta=None):
    """Compare the mode-wise Beppo Levi energy with a 2-D polar quadrature.

    Returns ``(modal, quadrature)``: the first is ``2 pi sum ||sigma_k||_k^2``
    from closed-form mode energies; the second integrates
    ``u_rr^2 + 2 (d_r(u_theta/r))^2 + (u_r/r + u_thetatheta/r^2)^2`` over
    ``[r_1, r_n] x [-pi, pi)`` with a tensor rule and adds the exact
    mode-wise energies of the inner disc and the outer region. The zero mode
    is excluded from both.
    """
    knots = S.knots
    modal = S.bl_energy()
    if knots.n < 2:
        return modal, modal
    n_theta = n_theta or max(64, 4 * S.K + 8)
    th, wt = _theta_rule(n_theta)
    rn, wr = composite_rule(knots.array, quad_order, subdivisions)
    modes = {k: s for k, s in S.splines.items()}
    urr, mix, lap = _polar_derivs(modes, rn, th)
    dens = urr**2 + 2.0 * mix**2 + lap**2
    inner = float(np.sum((wr * rn)[:, None] * wt[None, :] * dens))
    outer = 0.0
    for k, s in S.splines.items():
        outer += energy(k, s, interval=(0.0, knots.first)).value
        outer += energy(k, s, interval=(knots.last, math.inf)).value
    return modal, inner + 2.0 * math.pi * 2.0 * outer


def reference_bl_check(f: ModalSurface, *, quad_order: int = DEFAULT_ORDER, subdivisions: int = 2, n_theta=None):
    """``(modal, quadrature)`` Beppo Levi energies of a mean-free reference surface.

    ``modal`` is ``2 pi sum_k ||f_k||_k^2``; ``quadrature`` integrates the
    polar energy density over the whole plane with Gauss-Legendre panels in
    ``r`` (half-line substitution beyond the last break) and the trapezoid
    rule in ``theta``.
    """
    modes = {k: f.profile(k) for k in f.modes if k > 0 and f.modes[k] is not None}
    modal = f.bl_norm(quad_order=quad_order) ** 2
    breaks = sorted({b for p in modes.values() for b in p.breaks()} | {1.0})
    r1, w1 = composite_rule([0.0] + breaks, quad_order, subdivisions)
    r2, w2 = half_line_rule(breaks[-1], quad_order)
    rn, wr = np.concatenate([r1, r2]), np.concatenate([w1, w2])
    n_theta = n_theta or max(64, 4 * f.K + 8)
    th, wt = _theta_rule(n_theta)
    urr, mix, lap = _polar_derivs(modes, rn, th)
    dens = urr**2 + 2.0 * mix**2 + lap**2
    return modal, float(np.sum((wr * rn)[:, None] * wt[None, :] * dens))


def reproduction_defect(S: SurfaceModel, d: TransfiniteDataset) -> np.ndarray:
    """Per-curve ``max_i |s(r_j, theta_i) - mu_j(theta_i)|``."""
    r = d.knots.array
    vals = evaluate_surface(S, r[:, None], d.thetas[None, :])
    return np.max(np.abs(vals - d.curves), axis=1)


def truncation_estimate(d: TransfiniteDataset) -> np.ndarray:
    """Per-curve sum of ``|mu_jk|`` over the discrete modes beyond ``K``."""
    full = _fourier_all(d.curves, float(d.thetas[0]))
    M = d.M
    keep = np.zeros(M, dtype=bool)
    for k in range(-d.K, d.K + 1):
        keep[k % M] = True
    return np.sum(np.abs(full[:, ~keep]), axis=1)


def export_mesh(S, r_grid, theta_grid, path) -> int:
    """Write ``r,theta,x,y,z`` rows (``r`` outer, ``theta`` inner); returns the row count."""
    r_grid = np.asarray(r_grid, dtype=float).ravel()
    theta_grid = np.asarray(theta_grid, dtype=float).ravel()
    if r_grid.size == 0 or theta_grid.size == 0:
        raise InputError("mesh grids must be nonempty")
    z = np.asarray(S(r_grid[:, None], theta_grid[None, :]))
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "theta", "x", "y", "z"])
            for i, r in enumerate(r_grid):
                for j, t in enumerate(theta_grid):
                    row = (r, t, r * math.cos(t), r * math.sin(t), z[i, j])
                    w.writerow(["%.17g" % v for v in row])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write mesh to {path}: {exc.strerror}") from exc
    return r_grid.size * theta_grid.size
