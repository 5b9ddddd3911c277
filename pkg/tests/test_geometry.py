import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracflow import geometry as geo
from fracflow import shapes
from fracflow.errors import DomainError, GeometryError, SizeError


def mode_field(N, amp=0.1, k=3):
    th = geo.grid_angles(N)
    return geo.build_field(1.0 + amp * np.cos(k * th))


@st.composite
def convex_fields(draw, N=64):
    seed = draw(st.integers(0, 2**32 - 1))
    return shapes.random_convex(N, np.random.default_rng(seed))


# construction


def test_constant_field_has_zero_derivatives():
    f = geo.build_field(np.ones(64))
    assert np.all(f.values == 1.0)
    assert np.max(np.abs(f.d1)) < 1e-14
    assert np.max(np.abs(f.d2)) < 1e-14


def test_single_mode_second_derivative():
    f = mode_field(64)
    assert f.d2[0] == pytest.approx(-0.9, abs=1e-10)


def test_round_trip_values():
    v = 1.0 + 0.05 * np.random.default_rng(1).random(32)
    f = geo.build_field(v)
    assert np.array_equal(f.values, v)


@pytest.mark.parametrize("bad", [np.r_[np.ones(15), 0.0], np.r_[np.ones(15), -1.0], np.r_[np.ones(15), np.nan]])
def test_non_positive_sample_rejected(bad):
    with pytest.raises(DomainError):
        geo.build_field(bad)


@pytest.mark.parametrize("n", [8, 24, 100])
def test_bad_length_rejected(n):
    with pytest.raises(SizeError):
        geo.build_field(np.ones(n))


def test_values_are_read_only():
    f = geo.build_field(np.ones(16))
    with pytest.raises(ValueError):
        f.values[0] = 2.0


# area


@pytest.mark.parametrize("c, expected", [(1.0, np.pi), (2.0, 4 * np.pi)])
def test_area_of_disks(c, expected):
    assert geo.area(geo.build_field(np.full(64, c))) == pytest.approx(expected, abs=1e-12)


def test_area_of_ellipse():
    assert geo.area(shapes.ellipse(256, 1.3)) == pytest.approx(np.pi, abs=1e-6)


@given(convex_fields(), st.floats(0.2, 5.0))
@settings(max_examples=25, deadline=None)
def test_area_scales_quadratically(f, c):
    assert geo.area(f.scaled(c)) == pytest.approx(c * c * geo.area(f), rel=1e-14)


# normals and Jacobian


@pytest.mark.parametrize("c", [1.0, 2.0])
def test_normal_of_disk_is_radial(c):
    f = geo.build_field(np.full(32, c))
    for node in (0, 5, 17):
        nu, J = geo.normal_and_jacobian(f, node)
        th = f.theta[node]
        assert np.allclose(nu, [np.cos(th), np.sin(th)], atol=1e-14)
        assert J == pytest.approx(c, abs=1e-14)


def test_normal_at_symmetry_point():
    nu, J = geo.normal_and_jacobian(mode_field(64), 0)
    assert np.allclose(nu, [1.0, 0.0], atol=1e-14)
    assert J == pytest.approx(1.1, abs=1e-14)


@given(convex_fields())
@settings(max_examples=25, deadline=None)
def test_normals_are_unit_and_outward(f):
    assert np.allclose(np.linalg.norm(f.normals, axis=1), 1.0, atol=1e-12)
    assert np.all(np.sum(f.normals * f.points, axis=1) > 0.0)


def test_spectral_second_derivative_matches_synthesis():
    N = 64
    th = geo.grid_angles(N)
    v = 1.0 + 0.1 * np.cos(2 * th) + 0.03 * np.sin(5 * th)
    direct = -0.4 * np.cos(2 * th) - 0.75 * np.sin(5 * th)
    f = geo.build_field(v)
    assert np.max(np.abs(geo.spectral_derivative(geo.spectral_derivative(v)) - direct)) < 1e-8
    assert np.max(np.abs(f.d2 - direct)) < 1e-8


# shape metrics


def test_circle_metrics():
    m = geo.shape_metrics(shapes.circle(256), 0.5)
    assert m.min_curvature == pytest.approx(1.0, abs=1e-12)
    assert m.convex
    assert m.inradius == pytest.approx(1.0, abs=1e-12)
    assert m.circumradius == pytest.approx(1.0, abs=1e-12)
    assert m.slope_constant == pytest.approx(2**-0.5, abs=1e-3)


def test_star_shaped_nonconvex_field():
    th = geo.grid_angles(128)
    f = geo.build_field(1.0 + 0.35 * np.cos(5 * th))
    m = geo.shape_metrics(f, 0.5)
    assert not m.convex
    assert m.min_curvature < -geo.convexity_tolerance(f)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("N", [64, 256])
def test_circle_slope_constant(s, N):
    assert abs(geo.slope_constant(shapes.circle(N), s) - 2.0 ** (-s)) <= 4.0 / N


@given(convex_fields())
@settings(max_examples=15, deadline=None)
def test_supporting_half_plane_and_radii(f):
    p, nu = f.points, f.normals
    for k in range(1, f.N):
        assert np.all(np.sum((p - np.roll(p, -k, axis=0)) * nu, axis=1) >= -1e-12)
    m = geo.shape_metrics(f, 0.5)
    assert 0.0 < m.inradius <= m.circumradius
    assert np.isfinite(m.slope_constant)


# renormalization


def test_rescale_pure_scaling():
    f = geo.rescale_and_center(geo.build_field(np.full(64, 2.0)), np.pi)
    assert np.allclose(f.values, 1.0, atol=1e-14)


def test_rescale_identity_on_unit_circle():
    f = geo.rescale_and_center(shapes.circle(64), np.pi)
    assert np.allclose(f.values, 1.0, atol=1e-14)


def test_recentering_shifted_disk():
    f = geo.rescale_and_center(shapes.shifted_circle(128, 0.3), np.pi)
    assert np.max(np.abs(f.values - 1.0)) < 1e-6
    assert np.hypot(*geo.barycenter(f)) < 1e-10


@given(convex_fields(), st.floats(0.5, 10.0))
@settings(max_examples=20, deadline=None)
def test_rescale_hits_target_area(f, target):
    g = geo.rescale_and_center(f, target)
    assert geo.area(g) == pytest.approx(target, rel=1e-12)


def test_recentering_fails_when_origin_leaves_set():
    f = shapes.shifted_circle(64, 0.95)
    with pytest.raises(GeometryError):
        geo._resample_about(f, np.array([-1.2, 0.0]))


# shapes


@pytest.mark.parametrize("desc", ["circle", "circle:2", "ellipse:1.3", "shifted_circle:0.2", "polygon:5",
                                  "polygon:6:0.3", "random"])
def test_shape_descriptors_are_convex(desc):
    f = shapes.make_shape(desc, 128, np.random.default_rng(0))
    assert geo.is_convex(f)


@pytest.mark.parametrize("seed", range(6))
def test_random_convex_curvature_floor(seed):
    f = shapes.random_convex(128, np.random.default_rng(seed))
    assert f.curvature.min() > 0.1
