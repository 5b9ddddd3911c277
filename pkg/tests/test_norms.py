import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracflow import norms
from fracflow.errors import DegenerateInputError, DomainError, ResolutionError


def grid(N):
    return 2.0 * np.pi * np.arange(N) / N


@st.composite
def trig_polys(draw, N=64):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return norms.random_trig_polynomial(N, rng, 1, 8)


# derivatives


@pytest.mark.parametrize("order", [1, 2, 3])
def test_circle_derivative_of_mode(order):
    th = grid(64)
    u = np.sin(5 * th)
    exact = 5.0**order * np.sin(5 * th + 0.5 * np.pi * order)
    assert np.max(np.abs(norms.derivative(u, order) - exact)) < 1e-10


def test_torus_derivative_uses_length():
    L = 3.0
    x = L * np.arange(64) / 64
    u = np.cos(2 * np.pi * 2 * x / L)
    exact = -(4 * np.pi / L) * np.sin(2 * np.pi * 2 * x / L)
    assert np.max(np.abs(norms.derivative(u, 1, "torus", L) - exact)) < 1e-12


def test_derivative_vector_valued():
    th = grid(32)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert np.allclose(norms.derivative(u), np.stack([-np.sin(th), np.cos(th)], axis=1), atol=1e-13)


def test_unknown_domain():
    with pytest.raises(DomainError):
        norms.derivative(np.ones(8), 1, "sphere")


# Hölder seminorms and norms


def test_lipschitz_constant_of_cosine_on_circle():
    assert norms.holder_seminorm(np.cos(grid(64)), 1.0) == pytest.approx(1.0, abs=1e-14)


def test_torus_lipschitz_constant():
    N, L = 256, 2.0
    x = L * np.arange(N) / N
    val = norms.holder_seminorm(np.sin(2 * np.pi * x / L), 1.0, "torus", L)
    assert val == pytest.approx(2 * np.pi / L, rel=1e-3)
    assert val <= 2 * np.pi / L


@pytest.mark.parametrize("beta", [0.0, -0.1, 1.5])
def test_seminorm_exponent_range(beta):
    with pytest.raises(DomainError):
        norms.holder_seminorm(np.ones(8), beta)


@given(trig_polys(), st.floats(-5.0, 5.0), st.floats(0.05, 1.0))
@settings(max_examples=25, deadline=None)
def test_seminorm_homogeneous(u, c, beta):
    assert norms.holder_seminorm(c * u, beta) == pytest.approx(abs(c) * norms.holder_seminorm(u, beta), rel=1e-12)


@given(trig_polys(), trig_polys(), st.floats(0.05, 0.95))
@settings(max_examples=25, deadline=None)
def test_norm_triangle_inequality(u, v, gamma):
    assert norms.holder_norm(u + v, gamma) <= (1 + 1e-12) * (norms.holder_norm(u, gamma) + norms.holder_norm(v, gamma))


@given(trig_polys(), st.floats(0.05, 0.9), st.floats(0.05, 0.9))
@settings(max_examples=25, deadline=None)
def test_holder_norm_monotone_in_exponent(u, a, b):
    lo, hi = sorted((a, b))
    # chordal distances are at most 2, so the seminorm ordering holds up to the factor 2^{hi-lo}
    assert norms.holder_norm(u, lo) <= 2.0 ** (hi - lo) * norms.holder_norm(u, hi) * (1 + 1e-12)


def test_constant_function_norm():
    assert norms.ck_beta_norm(np.full(32, -2.5), 0, 0.5) == pytest.approx(2.5)
    assert norms.ck_beta_norm(np.full(32, 2.5), 1, 0.0) == pytest.approx(2.5)


def test_ck_beta_norm_of_mode():
    th = grid(128)
    u = np.cos(3 * th)
    expected = 1.0 + 3.0 + norms.holder_seminorm(-3.0 * np.sin(3 * th), 0.5)
    assert norms.holder_norm(u, 1.5) == pytest.approx(expected, rel=1e-12)


def test_resolution_guard():
    th = grid(64)
    norms.check_resolution(np.cos(10 * th))
    with pytest.raises(ResolutionError):
        norms.check_resolution(np.cos(24 * th))
    with pytest.raises(ResolutionError):
        norms.ck_beta_norm(np.cos(24 * th), 0, 0.5)
    assert np.isfinite(norms.ck_beta_norm(np.cos(24 * th), 0, 0.5, check=False))


def test_bad_norm_arguments():
    with pytest.raises(DomainError):
        norms.ck_beta_norm(np.ones(8), -1, 0.5)
    with pytest.raises(DomainError):
        norms.ck_beta_norm(np.ones(8), 0, 1.0)
    with pytest.raises(DomainError):
        norms.top_seminorm(np.ones(8), 1.0)


def test_top_seminorm_drops_lower_orders():
    th = grid(64)
    u = 7.0 + np.cos(2 * th)
    assert norms.top_seminorm(u, 1.5) == pytest.approx(norms.holder_seminorm(-2 * np.sin(2 * th), 0.5))


# Littlewood-Paley


def test_eta_profile():
    r = np.linspace(0, 3, 301)
    e = norms.eta(r)
    assert np.all(e[r <= 1] == 1.0) and np.all(e[r >= 2] == 0.0)
    assert np.all(np.diff(e) <= 0.0)


def test_delta_support():
    xi = np.linspace(-3, 3, 601)
    d = norms.delta(xi)
    assert np.all(d[np.abs(xi) <= 0.5] == 0.0) and np.all(d[np.abs(xi) >= 2] == 0.0)
    assert np.all(d >= 0.0)


def test_blocks_partition_of_unity():
    m = np.arange(1, 2049)
    total = sum(norms.delta(m * 2.0 ** (-j)) for j in range(13))
    assert np.allclose(total, 1.0, atol=1e-15)


@given(trig_polys(N=128))
@settings(max_examples=20, deadline=None)
def test_blocks_reassemble(u):
    pb = norms.paley_blocks(u)
    assert np.allclose(pb.total() + u.mean(), u, atol=1e-12)


@pytest.mark.parametrize("j", [1, 2, 3, 4, 5])
def test_single_block_identity(j):
    th = grid(256)
    u = np.cos(2**j * th)
    for i in norms.block_range(256):
        target = u if i == j else np.zeros_like(u)
        assert np.max(np.abs(norms.paley_block(u, i) - target)) < 1e-8


@pytest.mark.parametrize("j", [1, 3, 5])
@pytest.mark.parametrize("gamma", [0.3, 0.5, 1.5])
def test_fourier_norm_of_dyadic_mode(j, gamma):
    u = np.sin(2**j * grid(256))
    assert norms.fourier_holder_norm(u, gamma) == pytest.approx(2.0 ** (j * gamma), rel=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.0, -0.5])
def test_fourier_norm_exponent_range(gamma):
    with pytest.raises(DomainError):
        norms.fourier_holder_norm(np.ones(16), gamma)


# interpolation


@given(trig_polys(N=128))
@settings(max_examples=10, deadline=None)
def test_interpolation_ratio_positive_finite(u):
    r = norms.interpolation_check(u, 0.2, 1.6, 0.5)
    assert np.isfinite(r) and r > 0.0


def test_interpolation_zero_function():
    with pytest.raises(DegenerateInputError):
        norms.interpolation_check(np.zeros(64), 0.2, 1.6, 0.5)


def test_interpolation_theta_range():
    with pytest.raises(DomainError):
        norms.interpolation_check(np.ones(64), 0.2, 1.6, 1.0)


# corpora


def test_random_trig_polynomial_seeded_and_band_limited():
    a = norms.random_trig_polynomial(64, np.random.default_rng(5), 3, 7)
    b = norms.random_trig_polynomial(64, np.random.default_rng(5), 3, 7)
    assert np.array_equal(a, b)
    power = np.abs(np.fft.rfft(a))
    assert np.all(power[:3] < 1e-12) and np.all(power[8:] < 1e-12)
