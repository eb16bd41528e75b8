import csv
import math

import numpy as np
import pytest

from polyspline.errors import ConstructionError, InputError
from polyspline.functions import Composite, datum
from polyspline.spline import KnotSet, build_interpolant, phi_k
from polyspline.surface import (
    ModalSurface,
    NaturalCubicZeroMode,
    bl_energy_check,
    build_surface,
    equispaced_thetas,
    evaluate_surface,
    export_mesh,
    ingest,
    reference_bl_check,
    reproduction_defect,
    surface_error_l2,
    truncation_estimate,
)

TH16 = equispaced_thetas(16)


# -- ingest


def test_pure_cosine_mode():
    d = ingest([1.0], [np.cos(2 * TH16)], K=3)
    expected = np.zeros(7, dtype=complex)
    expected[3 + 2] = expected[3 - 2] = 0.5
    assert np.allclose(d.fourier[0], expected, atol=1e-12)


def test_constant_curve():
    d = ingest([1.0, 2.0], [np.full(16, 2.5), np.full(16, -1.0)], K=2)
    assert np.allclose(d.coefficient(0), [2.5, -1.0], atol=1e-15)
    for k in (1, 2, -1, -2):
        assert np.allclose(d.coefficient(k), 0, atol=1e-15)


def test_sine_phase_convention():
    # (1/M) sum e^{-ik theta} sin(theta) = -i/2 at k = 1
    d = ingest([1.0], [np.sin(TH16)], K=1)
    assert d.coefficient(1)[0] == pytest.approx(-0.5j, abs=1e-15)
    assert d.coefficient(-1)[0] == pytest.approx(0.5j, abs=1e-15)


def test_shifted_grid_gives_same_coefficients():
    th = TH16 + 0.3
    d = ingest([1.0], [np.cos(3 * th) + 0.2 * np.sin(th)], K=4, thetas=th)
    ref = ingest([1.0], [np.cos(3 * TH16) + 0.2 * np.sin(TH16)], K=4)
    assert np.allclose(d.fourier, ref.fourier, atol=1e-14)


def test_conjugate_symmetry_of_real_data():
    rng = np.random.default_rng(0)
    d = ingest([1.0, 2.0], rng.normal(size=(2, 17)), K=8)
    for k in range(1, 9):
        assert np.allclose(d.coefficient(-k), np.conj(d.coefficient(k)), atol=1e-15)


def test_aliased_mode_is_flagged():
    d = ingest([1.0], [np.cos(7 * TH16)], K=3)
    assert d.leakage[0]
    clean = ingest([1.0], [np.cos(2 * TH16)], K=3)
    assert not clean.leakage[0]


def test_auto_truncation():
    d = ingest([1.0, 1.5], [np.cos(3 * TH16), 0.5 * np.sin(2 * TH16)])
    assert d.K == 3
    assert not np.any(d.leakage)


def test_grid_errors():
    with pytest.raises(InputError):
        ingest([1.0], [np.zeros(6)], K=3)
    with pytest.raises(InputError):
        ingest([1.0], [np.zeros(4)], thetas=[0.0, 0.5, 1.0, 3.0], K=1)
    with pytest.raises(InputError):
        ingest([1.0, 2.0], [np.zeros(8)], K=1)


def test_wiener_sums():
    d = ingest([1.0], [np.cos(2 * TH16)], K=3)
    # |c_{+-2}| (1 + 2)^2 each
    assert d.wiener_sums[0] == pytest.approx(2 * 0.5 * 9, rel=1e-12)


# -- building and evaluating


def test_single_mode_synthesis():
    knots = KnotSet((1.0, 1.5, 2.0))
    vals = np.array([1.0, -0.5, 0.25])
    curves = vals[:, None] * np.cos(2 * TH16)[None, :]
    S = build_surface(ingest(knots.radii, curves, K=2))
    sig = build_interpolant(2, knots, vals / 2)
    r = np.linspace(0, 4, 41)
    th = 0.7
    assert np.allclose(evaluate_surface(S, r, th), 2 * np.real(sig(r) * np.exp(2j * th)), atol=1e-13)
    assert np.allclose(evaluate_surface(S, r, 0.0), 2 * sig(r), atol=1e-13)


def _manufactured(knots, seed=0):
    rng = np.random.default_rng(seed)
    modes = {}
    for k in (1, 2, 3):
        c = rng.normal(size=knots.n) + 1j * rng.normal(size=knots.n)
        modes[k] = build_interpolant(k, knots, c)
    return ModalSurface(modes)


def test_reproduces_known_polyspline():
    knots = KnotSet((0.8, 1.3, 1.7, 2.6))
    f = _manufactured(knots)
    d = ingest(knots.radii, f.sample(knots, 16), K=3)
    S = build_surface(d)
    r = np.linspace(0, 5, 51)[:, None]
    th = equispaced_thetas(24)[None, :]
    assert np.max(np.abs(S(r, th) - f(r, th))) <= 1e-7
    assert np.max(reproduction_defect(S, d)) <= 1e-12


def test_single_circle_is_phi_dilates():
    curve = 1.0 + np.cos(TH16) + 0.5 * np.sin(3 * TH16)
    S = build_surface(ingest([1.5], [curve], K=3))
    r = np.array([0.3, 1.0, 1.5, 4.0])
    th = 0.4
    ref = 1.0 + np.cos(th) * phi_k(1, r / 1.5) + 0.5 * np.sin(3 * th) * phi_k(3, r / 1.5)
    assert np.allclose(S(r, th), ref, atol=1e-13)


def test_periodicity_and_realness():
    knots = KnotSet((1.0, 2.0, 3.0))
    S = build_surface(ingest(knots.radii, _manufactured(knots).sample(knots, 16), K=3))
    r = np.linspace(0, 5, 11)
    for th in (-2.0, 0.1, 1.3):
        assert np.allclose(S(r, th), S(r, th + 2 * math.pi), atol=1e-12)
    assert np.isrealobj(S(r, 0.3))


def test_negative_modes_are_conjugates():
    knots = KnotSet((1.0, 2.0))
    S = build_surface(ingest(knots.radii, _manufactured(knots).sample(knots, 16), K=3))
    r = np.linspace(0, 4, 9)
    assert np.allclose(S.mode(-2)(r), np.conj(S.mode(2)(r)))


def test_per_mode_decoupling():
    knots = KnotSet((1.0, 1.5, 2.5))
    base = _manufactured(knots).sample(knots, 16)
    S1 = build_surface(ingest(knots.radii, base, K=3))
    bump = np.array([0.3, -0.1, 0.2])[:, None] * np.cos(2 * TH16)[None, :]
    S2 = build_surface(ingest(knots.radii, base + bump, K=3))
    assert S1.splines[1].pieces == S2.splines[1].pieces
    assert S1.splines[3].pieces == S2.splines[3].pieces
    assert S1.splines[2].pieces != S2.splines[2].pieces


def test_zero_mode_default_is_flagged():
    zm = NaturalCubicZeroMode()
    assert zm.describe()["from_theory"] is False
    knots = KnotSet((1.0, 2.0, 3.0))
    prof = zm(knots, [1.0, 3.0, 2.0])
    assert np.allclose(prof(knots.array), [1.0, 3.0, 2.0])
    # C2 with linear extension
    assert prof(np.array([0.0, 5.0]), 2) == pytest.approx([0.0, 0.0])


def test_failure_names_the_mode():
    class Broken:
        def __call__(self, knots, values):
            return NaturalCubicZeroMode()(knots, values)

    knots = KnotSet((1.0, 2.0))
    d = ingest(knots.radii, np.zeros((2, 16)), K=3)
    import polyspline.surface as surf

    orig = surf.build_interpolant

    def failing(k, kn, v):
        if k == 2:
            raise ConstructionError("singular", 1.0, k)
        return orig(k, kn, v)

    surf.build_interpolant = failing
    try:
        with pytest.raises(ConstructionError, match="k=2"):
            build_surface(d, Broken())
    finally:
        surf.build_interpolant = orig


# -- energies and the annulus bound


def test_plancherel_spline_surface():
    knots = KnotSet((0.9, 1.4, 2.2, 3.0))
    S = build_surface(ingest(knots.radii, _manufactured(knots, 3).sample(knots, 16), K=3))
    modal, quad = bl_energy_check(S)
    assert abs(modal - quad) <= 1e-8 * modal


def test_plancherel_reference_surface():
    f = ModalSurface({1: Composite.of(datum("rkexp", 1)) * (0.4 - 0.3j), 3: datum("rkexp", 3)})
    modal, quad = reference_bl_check(f)
    assert abs(modal - quad) <= 1e-8 * modal


def test_surface_error_of_itself_is_zero():
    knots = KnotSet((1.0, 1.5, 2.0))
    f = _manufactured(knots)
    S = build_surface(ingest(knots.radii, f.sample(knots, 16), K=3))
    res = surface_error_l2(S, f, 0)
    assert res.measured <= 1e-12 and res.holds


def test_surface_bound_and_rate():
    f = ModalSurface({k: datum("rkexp", k) for k in (1, 2, 3)})
    errs = []
    for n in (5, 9, 17):
        knots = KnotSet.uniform(1.0, 2.0, n)
        S = build_surface(ingest(knots.radii, f.sample(knots, 16), K=3))
        for m in (0, 1):
            res = surface_error_l2(S, f, m)
            assert res.checked and res.measured <= res.bound
            if m == 0:
                errs.append(res.measured)
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_mean_mode_skips_bound_with_warning():
    knots = KnotSet((1.0, 2.0))
    f = ModalSurface({0: datum("r2exp"), 2: datum("rkexp", 2)})
    S = build_surface(ingest(knots.radii, f.sample(knots, 16), K=2))
    with pytest.warns(UserWarning, match="mean"):
        res = surface_error_l2(S, f, 0)
    assert not res.checked and math.isnan(res.bound)


def test_truncation_estimate():
    d = ingest([1.0], [np.cos(2 * TH16) + 0.1 * np.cos(5 * TH16)], K=3)
    assert truncation_estimate(d)[0] == pytest.approx(0.1, abs=1e-14)


# -- mesh export


def _read_mesh(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_mesh_rows(tmp_path):
    S = build_surface(ingest([1.0], [np.cos(2 * TH16)], K=2))
    p = tmp_path / "m.csv"
    assert export_mesh(S, [0.5, 1.0], [0.0, 1.0], p) == 4
    header, data = _read_mesh(p)
    assert header == ["r", "theta", "x", "y", "z"] and data.shape == (4, 5)
    assert np.allclose(data[:, 2], data[:, 0] * np.cos(data[:, 1]))
    assert np.allclose(data[:, 3], data[:, 0] * np.sin(data[:, 1]))


def test_constant_surface_mesh(tmp_path):
    S = build_surface(ingest([1.0], [np.full(8, 4.0)], K=0))
    p = tmp_path / "c.csv"
    export_mesh(S, np.linspace(0, 3, 5), equispaced_thetas(6), p)
    _, data = _read_mesh(p)
    assert np.allclose(data[:, 4], 4.0, atol=1e-15)


def test_mesh_matches_direct_evaluation(tmp_path):
    knots = KnotSet((1.0, 1.5, 2.0))
    curves = np.array([1.0, 0.2, -0.4])[:, None] * np.cos(2 * TH16)[None, :]
    S = build_surface(ingest(knots.radii, curves, K=2))
    p = tmp_path / "k2.csv"
    export_mesh(S, np.linspace(0, 3, 7), equispaced_thetas(10), p)
    _, data = _read_mesh(p)
    assert np.max(np.abs(data[:, 4] - S(data[:, 0], data[:, 1]))) <= 1e-12


def test_mesh_io_error_names_path(tmp_path):
    S = build_surface(ingest([1.0], [np.full(4, 1.0)], K=0))
    bad = tmp_path / "missing" / "m.csv"
    with pytest.raises(OSError, match="missing"):
        export_mesh(S, [1.0], [0.0], bad)
