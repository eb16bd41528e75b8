import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from polyspline.errors import InputError
from polyspline.functions import Composite, bump, datum, polynomial_times, refine, vanishing_bump
from polyspline.spline import KnotSet, build_interpolant


def _fd_check(f, r, h=1e-5, tol=1e-6):
    f0, f1, f2 = f.derivs(r)
    d1 = (f(r + h) - f(r - h)) / (2 * h)
    d2 = (f(r + h) - 2 * f0 + f(r - h)) / h**2
    scale = max(1.0, np.max(np.abs(f2)))
    assert np.max(np.abs(d1 - f1)) <= tol * scale
    assert np.max(np.abs(d2 - f2)) <= 1e2 * tol * scale


def test_bump_derivatives():
    _fd_check(bump(1.0, 2.0), np.linspace(1.05, 1.95, 37))


def test_bump_peak_and_support():
    b = bump(1.0, 3.0)
    assert b(2.0) == pytest.approx(1.0)
    assert np.all(b(np.array([0.5, 1.0, 3.0, 4.0])) == 0.0)


def test_bump_rejects_empty_interval():
    with pytest.raises(InputError):
        bump(2.0, 2.0)


def test_polynomial_times_derivatives():
    f = polynomial_times(Polynomial([0.5, -1.0, 0.3]), bump(0.5, 2.5))
    _fd_check(f, np.linspace(0.6, 2.4, 41))


def test_vanishing_bump_vanishes_at_knots():
    knots = KnotSet((0.8, 1.1, 1.9, 2.4))
    psi = vanishing_bump(knots, extra=[1.0, 0.4])
    assert np.max(np.abs(psi(knots.array))) <= 1e-15
    # the polynomial factor is normalised to peak 1 and the bump is at most 1
    assert 1e-3 < np.max(np.abs(psi(np.linspace(0.7, 2.5, 200)))) <= 1.0


def test_vanishing_bump_skip():
    knots = KnotSet((1.0, 1.5, 2.0))
    psi = vanishing_bump(knots, skip=(1,))
    assert abs(psi(1.5)) > 1e-3
    assert abs(psi(1.0)) <= 1e-15 and abs(psi(2.0)) <= 1e-15


@pytest.mark.parametrize("name,k", [("r2exp", 2), ("rkexp", 1), ("rkexp", 4)])
def test_datum_derivatives(name, k):
    _fd_check(datum(name, k), np.linspace(0.2, 6.0, 30))


def test_datum_values():
    assert datum("r2exp")(1.0) == pytest.approx(math.exp(-1))
    assert datum("rkexp", 3)(2.0) == pytest.approx(8 * math.exp(-2))
    assert np.all(datum("zero")(np.linspace(0, 5, 6)) == 0)
    with pytest.raises(InputError):
        datum("nope")


def test_composite_arithmetic():
    s = build_interpolant(2, KnotSet((1.0, 2.0)), [1.0, -1.0])
    g = datum("r2exp")
    c = (Composite.of(s) + g) * 2.0 - Composite.of(g)
    r = np.linspace(0.1, 4, 40)
    for m in range(3):
        assert np.allclose(c(r, m), 2 * s(r, m) + g(r, m), rtol=1e-13, atol=1e-13)


def test_composite_of_two_splines_merges_breaks():
    a = build_interpolant(3, KnotSet((1.0, 2.0)), [1.0, 0.5])
    b = build_interpolant(3, KnotSet((1.5, 3.0)), [-1.0, 2.0])
    c = Composite.of(a) - Composite.of(b)
    assert c.breaks() == [1.0, 1.5, 2.0, 3.0]
    r = np.linspace(0, 5, 51)
    assert np.allclose(c(r), a(r) - b(r), atol=1e-13)


def test_composite_breaks_and_support():
    c = Composite.of(bump(1.0, 2.0)) + datum("r2exp")
    assert c.breaks() == [1.0, 2.0, 4.0, 16.0]
    assert Composite.of(bump(1.0, 2.0)).smooth_active(0.5, 1.2)
    assert not Composite.of(bump(1.0, 2.0)).smooth_active(2.0, 3.0)


def test_complex_scaling():
    c = Composite.of(datum("r2exp")) * 1j
    assert c.is_complex
    assert c(1.0) == pytest.approx(1j * math.exp(-1))


def test_refine_preserves_values():
    s = build_interpolant(2, KnotSet((1.0, 2.0)), [1.0, 3.0])
    pw = refine(s.piecewise, [0.5, 1.5, 3.0])
    assert pw.breaks == (0.5, 1.0, 1.5, 2.0, 3.0)
    r = np.linspace(0, 4, 41)
    assert np.allclose(pw(r), s(r), atol=1e-14)
