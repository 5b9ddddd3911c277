import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fracflow import curvature as cv
from fracflow import geometry as geo
from fracflow import shapes
from fracflow.errors import DomainError, MethodError

# H*(0.5) from the closed form (2^{1-s}/s) B(1/2, (1-s)/2), frozen
H_STAR_HALF = 14.832597418410973


def circle_constant_by_quad(s):
    """Independent evaluation of (2^{1-s}/s) ∫ cos^{-s}φ dφ over (-π/2, π/2)."""
    # cos φ = sin(π/2 - φ) ~ (π/2 - φ) near the endpoint; integrate the smooth ratio instead
    ratio = lambda p: (np.cos(p) / (np.pi / 2 - p)) ** (-s) if p < np.pi / 2 else 1.0
    val = quad(ratio, 0.0, np.pi / 2, weight="alg", wvar=(0.0, -s), epsabs=1e-14, epsrel=1e-13)[0]
    return 2.0 ** (1.0 - s) / s * 2.0 * val


@st.composite
def convex_fields(draw, N=64):
    return shapes.random_convex(N, np.random.default_rng(draw(st.integers(0, 2**32 - 1))))


# circle


def test_circle_closed_form_frozen():
    assert cv.circle_curvature(0.5) == pytest.approx(H_STAR_HALF, rel=1e-14)


@pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_circle_closed_form_against_adaptive_quadrature(s):
    assert cv.circle_curvature(s) == pytest.approx(circle_constant_by_quad(s), rel=1e-10)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_alexandrov_constancy(s):
    smp = cv.curvature_field(shapes.circle(256), s)
    assert np.std(smp.values) / smp.average < 1e-6
    assert smp.dissipation < 1e-10
    assert smp.average == pytest.approx(cv.circle_curvature(s), rel=1e-8)


@pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
def test_scaling_law(r):
    s = 0.5
    base = cv.frac_curvature_at(shapes.circle(64), 0, s)
    assert cv.frac_curvature_at(shapes.circle(64, r), 0, s) == pytest.approx(r ** (-s) * base, rel=1e-6)


@given(convex_fields(), st.sampled_from([0.5, 2.0, 3.0]))
@settings(max_examples=8, deadline=None)
def test_scaling_law_on_convex_fields(f, c):
    s = 0.4
    a = cv.chord_curvature(f, s, nodes=[0, 17])
    b = cv.chord_curvature(f.scaled(c), s, nodes=[0, 17])
    assert np.allclose(b, c ** (-s) * a, rtol=1e-6)


def test_half_plane_limit():
    assert cv.frac_curvature_at(shapes.circle(64, 1e12), 0, 0.5) < 1e-4


def test_s_times_circle_constant_bounded():
    vals = [s * cv.circle_curvature(s) for s in np.arange(1, 10) / 10]
    assert all(np.isfinite(v) and v > 0.0 for v in vals)
    assert max(vals) < 100.0


# chords


def test_ray_chord_circle():
    f = shapes.circle(64)
    assert cv.ray_chord(f, 0, 0.0) == pytest.approx(2.0, abs=1e-12)
    assert cv.ray_chord(f, 5, np.pi / 3) == pytest.approx(1.0, abs=1e-12)


def test_ray_chord_ellipse_axis_against_dense_sampling():
    a = 1.3
    f = shapes.ellipse(256, a)
    rho = cv.ray_chord(f, 0, 0.0)
    assert rho == pytest.approx(2.0 * a, abs=1e-10)
    t = np.linspace(1e-6, 3.0, 300001)
    pts = np.array([a, 0.0]) + t[:, None] * np.array([-1.0, 0.0])
    inside = f.contains(pts)
    assert abs(t[inside].max() - rho) < 2e-5


@given(convex_fields(), st.integers(0, 63), st.floats(-1.4, 1.4))
@settings(max_examples=20, deadline=None)
def test_ray_chord_endpoint_on_boundary(f, node, phi):
    rho = cv.ray_chord(f, node, phi)
    P, nu = f.points[node], f.normals[node]
    inward = -nu
    d = np.cos(phi) * inward + np.sin(phi) * np.array([-inward[1], inward[0]])
    assert f.contains((P + 0.999 * rho * d)[None])[0]
    assert not f.contains((P + 1.001 * rho * d)[None])[0]


# method agreement


def test_pv_oracle_circle():
    f = shapes.circle(64)
    assert cv.pv_oracle(f, 3, 0.5) == pytest.approx(cv.frac_curvature_at(f, 3, 0.5), rel=1e-4)


def test_pv_oracle_radius_two():
    f = shapes.circle(64, 2.0)
    assert cv.pv_oracle(f, 0, 0.5) == pytest.approx(2 ** -0.5 * H_STAR_HALF, rel=1e-4)


def test_pv_oracle_two_mode_field():
    th = geo.grid_angles(64)
    f = geo.build_field(1.0 + 0.05 * np.cos(2 * th))
    for node in (0, 9):
        assert cv.pv_oracle(f, node, 0.5) == pytest.approx(cv.frac_curvature_at(f, node, 0.5), rel=1e-3)


def test_pv_oracle_handles_nonconvex_field():
    th = geo.grid_angles(128)
    f = geo.build_field(1.0 + 0.2 * np.cos(5 * th))
    assert not geo.is_convex(f)
    H = cv.boundary_curvature(f, 0.5)
    for node in (0, 6, 13):
        assert cv.pv_oracle(f, node, 0.5) == pytest.approx(H[node], rel=1e-6)
    assert H[13] < 0.0
    with pytest.raises(MethodError):
        cv.frac_curvature_at(f, 0, 0.5)


@pytest.mark.parametrize("seed", range(3))
def test_boundary_rule_matches_chord_rule(seed):
    f = shapes.random_convex(128, np.random.default_rng(seed))
    for s in (0.3, 0.7):
        assert np.allclose(cv.boundary_curvature(f, s), cv.chord_curvature(f, s), rtol=1e-6)


@given(convex_fields())
@settings(max_examples=10, deadline=None)
def test_sample_invariants(f):
    smp = cv.curvature_field(f, 0.5, "boundary")
    assert np.all(smp.values >= 0.0)
    assert smp.values.min() <= smp.average <= smp.values.max()
    assert smp.dissipation >= 0.0


def test_ellipse_dissipation_positive():
    assert cv.curvature_field(shapes.ellipse(128, 1.3), 0.5).dissipation > 1.0


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2])
def test_s_out_of_range(s):
    with pytest.raises(DomainError):
        cv.curvature_field(shapes.circle(16), s)


def test_unknown_method():
    with pytest.raises(DomainError):
        cv.curvature_field(shapes.circle(16), 0.5, "trapezoid")


# perimeter


# unit-disk value of P_s at s = 0.5 from the boundary formula at N = 256, frozen
P_DISK_HALF = 62.130638777779766


def test_disk_perimeter_regression():
    assert cv.fractional_perimeter(shapes.circle(256), 0.5) == pytest.approx(P_DISK_HALF, rel=1e-12)


def test_disk_perimeter_nested_oracle():
    assert cv.fractional_perimeter_nested(shapes.circle(64), 0.5) == pytest.approx(P_DISK_HALF, rel=1e-3)


@pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
def test_perimeter_scaling(r):
    s = 0.5
    assert cv.fractional_perimeter(shapes.circle(128, r), s) == pytest.approx(r ** (2 - s) * P_DISK_HALF,
                                                                             rel=cv.RTOL_P)


def test_isoperimetric_comparison():
    e = geo.rescale_and_center(shapes.ellipse(128, 1.3), np.pi)
    assert cv.fractional_perimeter(e, 0.5) > cv.fractional_perimeter(shapes.circle(128), 0.5)


def test_perimeter_routes_agree_on_ellipse():
    f = shapes.ellipse(128, 1.3)
    assert cv.fractional_perimeter(f, 0.5) == pytest.approx(cv.fractional_perimeter_nested(f, 0.5), rel=1e-3)


# directional derivative


def test_directional_derivative_vanishes_on_circle():
    f = shapes.circle(128)
    for node in (0, 40):
        assert abs(cv.directional_derivative_H(f, node, f.tangents[node], 0.5)) < 1e-4


def test_directional_derivative_rejects_normal_direction():
    f = shapes.ellipse(64, 1.3)
    with pytest.raises(DomainError):
        cv.directional_derivative_H(f, 3, f.normals[3], 0.5)


def test_calibrated_constant():
    assert cv.calibrate_cns(0.5) == pytest.approx(2.0, rel=1e-2)


def test_calibration_ratio_node_independent():
    f = shapes.ellipse(128, 1.3)
    ratios = [cv.angular_derivative_fd(f, i, 0.5) / cv.directional_derivative_H(f, i, f.tangents[i], 0.5, C_ns=1.0)
              for i in (3, 11, 21, 40)]
    assert np.ptp(ratios) / np.mean(ratios) < 1e-2


def test_directional_derivative_matches_spectral_angular_derivative():
    f = shapes.ellipse(512, 1.3)
    H = cv.boundary_curvature(f, 0.5)
    dH = geo.spectral_derivative(H)
    for node in (10, 45, 100):
        val = cv.directional_derivative_H(f, node, f.tangents[node], 0.5)
        assert val == pytest.approx(dH[node], rel=5e-2)


def test_rotating_the_set_reverses_angular_derivative():
    # rotating E by +δ about the origin changes H at a fixed boundary angle by −δ ∂_θ H
    f = shapes.ellipse(512, 1.3)
    dH = geo.spectral_derivative(cv.boundary_curvature(f, 0.5))
    d = 2e-3
    plus = geo.HeightField(f.evaluate(f.theta - d))
    minus = geo.HeightField(f.evaluate(f.theta + d))
    for node in (10, 45, 100):
        fd = (cv.frac_curvature_at(plus, node, 0.5) - cv.frac_curvature_at(minus, node, 0.5)) / (2 * d)
        assert fd == pytest.approx(-dH[node], rel=5e-2)
