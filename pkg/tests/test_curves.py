from __future__ import annotations

import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from ribbonlim.curves import (
    CHEBYSHEV_OPEN,
    FOURIER_CLOSED,
    BoundaryData,
    ConstraintSet,
    CurveSpec,
    circle,
    constraint_report,
    curve_length,
    evaluate_derivatives,
    fit_curve,
    frenet_sample,
    helix,
    impose_boundary_data,
    locate_curvature_zeros,
    random_closed_curve,
    reparameterize_arclength,
    segment,
    speed,
    torsion_modulated,
)
from ribbonlim.errors import DegenerateCurve, DomainError, InflectionPoint
from ribbonlim.io import curve_to_json, read_curve, write_curve


def rotation_from(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def test_circle_derivatives_at_zero():
    c = CurveSpec(FOURIER_CLOSED, np.array([[0, 1, 0] + [0] * 6, [0, 0, 1] + [0] * 6, [0] * 9], dtype=float))
    pos, d1, d2, d3, d4 = evaluate_derivatives(c, 0.0)
    np.testing.assert_allclose(pos, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(d1, [0, 2 * np.pi, 0], atol=1e-12)
    np.testing.assert_allclose(d2, [-4 * np.pi**2, 0, 0], atol=1e-12)
    np.testing.assert_allclose(d3, [0, -8 * np.pi**3, 0], atol=1e-10)
    np.testing.assert_allclose(d4, [16 * np.pi**4, 0, 0], atol=1e-9)


def test_segment_higher_derivatives_vanish():
    t = np.linspace(0, 1, 11)
    _, d1, d2, d3, d4 = evaluate_derivatives(segment(), t)
    np.testing.assert_allclose(d1, np.tile([1.0, 0, 0], (11, 1)), atol=1e-14)
    for d in (d2, d3, d4):
        assert np.max(np.abs(d)) == 0.0


@pytest.mark.parametrize("t", [-1e-9, 1.0000001, np.nan])
def test_evaluate_outside_domain(t):
    with pytest.raises(DomainError):
        evaluate_derivatives(circle(), t)


def test_helix_derivatives_match_symbolic():
    a, b = 0.6, 0.3
    curve = helix(a, b, length=1.0, n=40)
    t = sp.symbols("t")
    th = t / sp.sqrt(a**2 + b**2)
    expr = sp.Matrix([a * sp.cos(th), a * sp.sin(th), b * th])
    exact = [sp.lambdify(t, expr.diff(t, k), "numpy") for k in range(5)]
    ts = np.linspace(0, 1, 100)
    got = evaluate_derivatives(curve, ts)
    for k in range(5):
        want = np.array([np.broadcast_to(np.asarray(exact[k](x), dtype=float).ravel(), (3,)) for x in ts])
        # endpoint rounding of a Chebyshev series grows by ~n^2 per derivative
        np.testing.assert_allclose(got[k], want, atol=10.0 ** (2 * k - 14))
    np.testing.assert_allclose(np.linalg.norm(got[1], axis=1), 1.0, atol=1e-12)


def _richardson(f, t, order, h=0.02, levels=4):
    """Central-difference derivative of ``f`` with repeated step halving."""
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1, -2, 1]),
        3: ([-2, -1, 1, 2], [-0.5, 1, -1, 0.5]),
        4: ([-2, -1, 0, 1, 2], [1, -4, 6, -4, 1]),
    }
    offs, wts = stencils[order]
    table = []
    for i in range(levels):
        hh = h / 2**i
        est = sum(w * f(t + o * hh) for o, w in zip(offs, wts)) / hh**order
        row = [est]
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (4**j - 1))
        table.append(row)
    return table[-1][-1]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_derivatives_match_richardson_differences(seed):
    curve = random_closed_curve(np.random.default_rng(seed))
    f = lambda x: curve(np.array([x % 1.0]))[0]
    for t in (0.13, 0.5, 0.77):
        d = evaluate_derivatives(curve, t)
        for k in range(1, 5):
            est = _richardson(f, t, k)
            assert np.linalg.norm(est - d[k]) <= 1e-7 * np.linalg.norm(d[k])


def test_helix_frenet_closed_forms():
    s = frenet_sample(helix(1.0, 1.0, length=1.0), np.linspace(0.05, 0.95, 19))
    np.testing.assert_allclose(s.kappa, 0.5, atol=1e-10)
    np.testing.assert_allclose(s.tau, 0.5, atol=1e-9)
    np.testing.assert_allclose(s.eta, 1.0, atol=1e-9)
    np.testing.assert_allclose(s.eta_prime, 0.0, atol=1e-6)
    np.testing.assert_allclose(s.kappa, np.linalg.norm(s.d2, axis=1), atol=1e-9)


def test_planar_circle_frenet():
    radius = 1 / (2 * np.pi)
    s = frenet_sample(circle(), np.linspace(0, 1, 7))
    np.testing.assert_allclose(s.kappa, 1 / radius, rtol=1e-13)
    assert np.max(np.abs(s.tau)) == 0.0 and np.max(np.abs(s.eta)) == 0.0
    np.testing.assert_allclose(s.arclength_s, np.linspace(0, 1, 7), atol=1e-14)


def test_straight_line_is_inflection():
    with pytest.raises(InflectionPoint) as info:
        frenet_sample(segment(), 0.3)
    assert info.value.t == pytest.approx(0.3)


def test_torsion_modulated_frenet_matches_symbolic():
    from oracles import SymbolicCurve, torsion_modulated_expr

    oracle = SymbolicCurve(torsion_modulated_expr(2, 0.05, 0.02))
    curve = torsion_modulated(2, 0.05, 0.02)
    L = oracle.raw_length
    t = np.linspace(0, 1, 33)
    th = 2 * np.pi * t
    s = frenet_sample(curve, t)
    np.testing.assert_allclose(s.kappa, L * oracle.kappa(th), rtol=1e-11)
    np.testing.assert_allclose(s.tau, L * oracle.tau(th), rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(s.eta, oracle.eta(th), rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(s.eta_prime, L * oracle.eta_prime(th), rtol=1e-9, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    q=st.tuples(*[st.floats(-1, 1) for _ in range(4)]).filter(lambda v: np.linalg.norm(v) > 0.1),
    d=st.tuples(*[st.floats(-5, 5) for _ in range(3)]),
)
def test_rigid_motion_invariance(seed, q, d):
    curve = random_closed_curve(np.random.default_rng(seed))
    moved = curve.transformed(rotation_from(q), d)
    t = np.linspace(0, 1, 41)
    a, b = frenet_sample(curve, t), frenet_sample(moved, t)
    for name in ("kappa", "tau", "eta", "eta_prime"):
        np.testing.assert_allclose(getattr(b, name), getattr(a, name), atol=1e-10, rtol=0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), axis=st.integers(0, 2))
def test_mirror_negates_torsion(seed, axis):
    curve = random_closed_curve(np.random.default_rng(seed))
    mirror = np.eye(3)
    mirror[axis, axis] = -1.0
    t = np.linspace(0, 1, 41)
    a, b = frenet_sample(curve, t), frenet_sample(curve.transformed(mirror), t)
    np.testing.assert_allclose(b.kappa, a.kappa, atol=1e-10)
    np.testing.assert_allclose(b.tau, -a.tau, atol=1e-10)
    np.testing.assert_allclose(b.eta, -a.eta, atol=1e-10)


def _stretched_arc(n=40):
    radius, sweep = 0.5, 1.5 * np.pi

    def fn(t):
        th = sweep * (t + t**2) / 2
        return np.stack([radius * np.cos(th), radius * np.sin(th), 0 * t], axis=-1)

    return fit_curve(fn, CHEBYSHEV_OPEN, n), radius, sweep


def test_reparameterize_quadratically_stretched_arc():
    curve, radius, sweep = _stretched_arc()
    out = reparameterize_arclength(curve)
    L = radius * sweep
    u = np.linspace(0, 1, 501)
    np.testing.assert_allclose(speed(out, u), L, rtol=1e-9)
    assert abs(curve_length(out) - L) <= 1e-10 * L
    # the point at parameter u sits at arclength u L, i.e. at angle u * sweep
    pts = out(u)
    np.testing.assert_allclose(np.arctan2(pts[:, 1], pts[:, 0]) % (2 * np.pi), (u * sweep) % (2 * np.pi), atol=1e-8)


def test_reparameterize_unit_speed_identity():
    curve = circle()
    out = reparameterize_arclength(curve)
    t = np.linspace(0, 1, 257)
    np.testing.assert_allclose(speed(out, t), speed(curve, t), atol=1e-12)


def test_reparameterize_helix_preserves_length():
    from scipy.integrate import quad

    a, b = 0.4, 0.2

    def fn(t):
        th = 3 * t + t**2  # non-uniform parameter speed
        return np.stack([a * np.cos(th), a * np.sin(th), b * th], axis=-1)

    curve = fit_curve(fn, CHEBYSHEV_OPEN, 40)
    exact = quad(lambda t: np.hypot(a, b) * (3 + 2 * t), 0, 1, epsabs=1e-14)[0]
    out = reparameterize_arclength(curve)
    assert abs(curve_length(out) - exact) <= 1e-10 * exact
    assert abs(curve_length(curve) - exact) <= 1e-12 * exact


def test_reparameterization_invariance_of_frenet():
    curve = torsion_modulated(3, 0.01, 0.02)
    out = reparameterize_arclength(curve)
    L = curve_length(curve)
    t = np.linspace(0.0, 0.95, 20)
    before = frenet_sample(curve, t)
    after = frenet_sample(out, before.arclength_s / L)
    for name in ("kappa", "tau", "eta"):
        np.testing.assert_allclose(getattr(after, name), getattr(before, name), atol=1e-8, rtol=0)


def test_reparameterize_degenerate_speed():
    coef = np.zeros((3, 8))
    coef[0, 2] = 1.0  # T2(2t - 1): speed vanishes at t = 1/2
    coef[1, 1] = 0.0
    curve = CurveSpec(CHEBYSHEV_OPEN, coef)
    with pytest.raises(DegenerateCurve):
        reparameterize_arclength(curve)


def test_constraint_report_circle():
    ok = constraint_report(circle(), ConstraintSet(kappa_min=0.5), grid=64)
    assert ok["kappa_ok"] and ok["speed_ok"]
    assert ok["min_kappa"] == pytest.approx(2 * np.pi, rel=1e-12)
    bad = constraint_report(circle(), ConstraintSet(kappa_min=10.0), grid=64)
    assert not bad["kappa_ok"]
    assert bad["min_kappa"] == pytest.approx(2 * np.pi, rel=1e-12)


def test_constraint_report_clamped_residuals():
    base = torsion_modulated()
    arc = fit_curve(lambda t: base(0.5 * t), CHEBYSHEV_OPEN, 24)
    d = arc.derivatives(np.array([0.0, 1.0]), 1)
    tan = d[1] / np.linalg.norm(d[1], axis=1)[:, None]
    bd = BoundaryData(d[0][0], tan[0], d[0][1], tan[1])
    clamped = impose_boundary_data(CurveSpec(CHEBYSHEV_OPEN, arc.coefficients + 1e-3, target_length=curve_length(arc)), bd)
    rep = constraint_report(clamped, ConstraintSet(bc_mode="clamped"), grid=64)
    assert rep["bc_ok"]
    assert max(rep["bc_residuals"].values()) < 1e-10


def test_constraint_report_grid_minimum():
    with pytest.raises(DomainError):
        constraint_report(circle(), ConstraintSet(), grid=8)


@pytest.mark.parametrize(
    "kwargs",
    [dict(kappa_min=-1.0), dict(unit_speed_tol=0.0), dict(unit_speed_tol=1e-2), dict(bc_mode="sticky")],
)
def test_constraint_set_validation(kwargs):
    with pytest.raises(DomainError):
        ConstraintSet(**kwargs)


@pytest.mark.parametrize(
    "basis, coef",
    [
        (CHEBYSHEV_OPEN, np.zeros((3, 7))),
        (FOURIER_CLOSED, np.zeros((3, 10))),
        (CHEBYSHEV_OPEN, np.zeros((2, 9))),
        ("spline", np.zeros((3, 9))),
    ],
)
def test_curvespec_validation(basis, coef):
    with pytest.raises(DomainError):
        CurveSpec(basis, coef)


def test_boundary_tangent_must_be_unit():
    with pytest.raises(DomainError):
        BoundaryData([0, 0, 0], [1, 0, 1e-5], [1, 0, 0], [1, 0, 0])


def test_curvature_zeros_of_cubic():
    curve = fit_curve(lambda t: np.stack([t, (t - 0.3) ** 3, 0 * t], axis=-1), CHEBYSHEV_OPEN, 8)
    zeros = locate_curvature_zeros(curve)
    assert len(zeros) == 1 and zeros[0] == pytest.approx(0.3, abs=1e-6)
    assert locate_curvature_zeros(circle()) == []


@pytest.mark.parametrize("seed", [3, 4])
def test_curve_json_round_trip(tmp_path, seed):
    curve = random_closed_curve(np.random.default_rng(seed))
    path = write_curve(tmp_path / "c.json", curve)
    back = read_curve(path)
    assert back.basis_kind == curve.basis_kind
    assert np.array_equal(back.coefficients, curve.coefficients)
    assert back.target_length == curve.target_length
    assert curve_to_json(back) == curve_to_json(curve)


def test_curve_json_round_trip_with_boundary(tmp_path):
    bd = BoundaryData([0, 0, 0], [1, 0, 0], [0.5, 0.1, 0.2], [0, 1, 0])
    curve = impose_boundary_data(helix(0.3, 0.1, n=16), bd)
    back = read_curve(write_curve(tmp_path / "h.json", curve))
    assert np.array_equal(back.boundary_data.end, bd.end)
    assert np.array_equal(back.coefficients, curve.coefficients)


def test_curve_json_rejects_bad_content(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(DomainError):
        read_curve(p)
    p.write_text(json.dumps({"basis_kind": "fourier_closed"}))
    with pytest.raises(DomainError):
        read_curve(p)
    with pytest.raises(FileNotFoundError):
        read_curve(tmp_path / "missing.json")
