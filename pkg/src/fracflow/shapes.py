"""Initial shapes as height fields.

Descriptors are strings such as ``circle``, ``circle:2``, ``ellipse:1.3``,
``shifted_circle:0.3``, ``polygon:5`` or ``polygon:5:0.6``, ``random`` and
``file:path.csv``.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, GeometryError
from .geometry import HeightField, grid_angles


def circle(N: int, radius: float = 1.0) -> HeightField:
    return HeightField(np.full(N, float(radius)))


def ellipse(N: int, a: float, b: float | None = None) -> HeightField:
    """Centered ellipse with semi-axis ``a`` along x; ``b`` defaults to ``1/a`` (area π)."""
    b = 1.0 / a if b is None else b
    th = grid_angles(N)
    return HeightField(a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2))


def shifted_circle(N: int, offset: float, radius: float = 1.0) -> HeightField:
    """Circle of ``radius`` centered at ``(offset, 0)``, seen from the origin."""
    th = grid_angles(N)
    c, sn = offset * np.cos(th), offset * np.sin(th)
    return HeightField(c + np.sqrt(radius**2 - sn**2))


def _field_from_support(N: int, modes: np.ndarray, coef: np.ndarray) -> HeightField:
    """Radial function of the convex curve with support function ``Σ coef_k cos(k φ)``.

    The boundary point with outward normal angle φ is ``p n + p' n'``; the radial
    samples come from solving ``arg X(φ) = θ_i`` by Newton iteration.
    """
    th = grid_angles(N)

    def curve(phi):
        ang = np.multiply.outer(phi, modes)
        p = np.cos(ang) @ coef
        dp = -(np.sin(ang) * modes) @ coef
        rho = p - (np.cos(ang) * modes**2) @ coef
        n = np.stack([np.cos(phi), np.sin(phi)], -1)
        t = np.stack([-np.sin(phi), np.cos(phi)], -1)
        return p[:, None] * n + dp[:, None] * t, rho[:, None] * t

    # arg X(φ) increases monotonically for a convex curve around the origin,
    # so a dense table inverted by interpolation seeds Newton
    fine = 2.0 * np.pi * np.arange(64 * N + 1) / (64 * N)
    xf, _ = curve(fine)
    arg = np.unwrap(np.arctan2(xf[:, 1], xf[:, 0]))
    arg -= 2.0 * np.pi * np.floor(arg[0] / (2.0 * np.pi) + 0.5)
    phi = np.interp(th, arg, fine)
    e = np.stack([np.cos(th), np.sin(th)], -1)
    for _ in range(60):
        x, dx = curve(phi)
        f = e[:, 0] * x[:, 1] - e[:, 1] * x[:, 0]
        fp = e[:, 0] * dx[:, 1] - e[:, 1] * dx[:, 0]
        step = f / fp
        phi -= step
        if np.max(np.abs(step)) < 1e-15:
            break
    x, _ = curve(phi)
    if np.max(np.abs(e[:, 0] * x[:, 1] - e[:, 1] * x[:, 0])) > 1e-12:
        raise GeometryError("support-function curve could not be re-sampled radially")
    x, _ = curve(phi)
    return HeightField(np.sum(x * e, axis=1))


def smoothed_polygon(N: int, m: int, smoothing: float = 0.6) -> HeightField:
    """Regular ``m``-gon (circumradius 1) with Gaussian-smoothed support function.

    The radius of curvature of a polygon, as a function of the normal angle, is a
    sum of point masses of weight equal to the side length. Convolving it with a
    periodic Gaussian keeps it positive, so the smoothed curve is strictly convex.
    The Gaussian width is ``smoothing`` times the half gap ``π/m`` between edge
    normals, which keeps the curvature ratio independent of ``m``.
    """
    if m < 3:
        raise ValueError("a polygon needs at least three sides")
    if not smoothing > 0.0:
        raise ValueError("smoothing must be positive")
    side = 2.0 * np.sin(np.pi / m)
    sigma = smoothing * np.pi / m
    kmax = int(np.ceil(np.sqrt(2.0 * 42.0) / sigma))
    modes = np.arange(0, kmax + 1, m, dtype=float)
    damp = np.exp(-0.5 * (sigma * modes) ** 2)
    # edge normals sit at angles π(2j+1)/m; their Fourier sum picks multiples of m
    rho_hat = side * m / (2.0 * np.pi) * damp * np.cos(modes * np.pi / m)
    coef = np.where(modes == 0, 1.0, 2.0) * rho_hat / (1.0 - modes**2)
    return _field_from_support(N, modes, coef)


def random_convex(N: int, rng: np.random.Generator, kmax: int = 6, budget: float = 0.4,
                  min_curvature: float = 0.1) -> HeightField:
    """``1 + Σ ε_k cos(kθ + φ_k)`` with ``Σ k² ε_k`` bounded by a random share of ``budget``."""
    k = np.arange(2, kmax + 1)
    eps = rng.uniform(0.0, 1.0, k.size) / k**2
    phase = rng.uniform(0.0, 2.0 * np.pi, k.size)
    eps *= budget * rng.uniform(0.3, 1.0) / np.sum(k**2 * eps)
    th = grid_angles(N)
    while True:
        values = 1.0 + np.cos(np.multiply.outer(th, k) + phase) @ eps
        field = HeightField(values)
        if field.curvature.min() > min_curvature:
            return field
        eps *= 0.5


def make_shape(descriptor: str, N: int, rng: np.random.Generator | None = None) -> HeightField:
    """Build the height field named by a shape descriptor."""
    name, _, rest = descriptor.partition(":")
    args = rest.split(":") if rest else []
    try:
        if name == "circle":
            return circle(N, float(args[0]) if args else 1.0)
        if name == "ellipse":
            return ellipse(N, float(args[0]) if args else 1.3)
        if name == "shifted_circle":
            return shifted_circle(N, float(args[0]) if args else 0.3)
        if name == "polygon":
            m = int(args[0]) if args else 5
            return smoothed_polygon(N, m, float(args[1]) if len(args) > 1 else 0.6)
        if name == "random":
            return random_convex(N, rng if rng is not None else np.random.default_rng(0))
        if name == "file":
            from .io import read_field_csv

            field = read_field_csv(rest)
            if field.N != N:
                raise ConfigError("shape", f"file holds {field.N} samples, expected N={N}")
            return field
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("shape", f"malformed descriptor {descriptor!r}: {exc}") from exc
    raise ConfigError("shape", f"unknown shape {descriptor!r}")
