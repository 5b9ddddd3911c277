"""Height-function representation of star-shaped planar sets.

A set is stored through its radial function ``h`` sampled at ``N`` uniform
angles, so that the boundary is the closed curve ``P(θ) = h(θ)·e(θ)`` with
``e(θ) = (cos θ, sin θ)``. Angular derivatives are spectral.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, GeometryError, SizeError

MIN_GRID = 16


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def grid_angles(n: int) -> np.ndarray:
    """Uniform angles ``2πi/n``."""
    return 2.0 * np.pi * np.arange(n) / n


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Angular derivative of a periodic sample by multiplication with ``(ik)^order``.

    The Nyquist mode is dropped for odd orders so that real data stay real and
    the derivative of the interpolant is reproduced exactly.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if order == 0:
        return values.copy()
    coef = np.fft.rfft(values, axis=-1)
    k = np.arange(coef.shape[-1], dtype=float)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0
    return np.fft.irfft(coef * mult, n=n, axis=-1)


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """z-component of the planar cross product along the last axis."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class TrigInterpolant:
    """Band-limited interpolant of periodic samples, evaluated by Horner's rule.

    Trailing modes below ``1e−17`` of the largest coefficient are dropped so
    that off-grid evaluation of smooth data stays cheap.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        c = np.fft.rfft(values, axis=0) / n
        c[1:] *= 2.0
        if n % 2 == 0:
            c[-1] *= 0.5
        mag = np.abs(c).reshape(c.shape[0], -1).max(axis=1)
        keep = np.nonzero(mag > 1e-17 * max(mag.max(), 1e-300))[0]
        self.coef = c[: keep[-1] + 1] if keep.size else c[:1]

    def __call__(self, phi, derivative: int = 0) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        c = self.coef
        if derivative:
            mult = (1j * np.arange(c.shape[0])) ** derivative
            c = c * mult.reshape((-1,) + (1,) * (c.ndim - 1))
        z = np.exp(1j * phi)
        if c.ndim > 1:
            z = z[..., None]
        acc = np.zeros(np.broadcast_shapes(z.shape, c.shape[1:]), dtype=complex) + c[-1]
        for ck in c[-2::-1]:
            acc = acc * z + ck
        return acc.real


@dataclass(frozen=True, eq=False)
class HeightField:
    """Radial function of a star-shaped planar set on a uniform angular grid.

    Attributes
    ----------
    values : ndarray, shape (N,)
        Radii ``h(θ_i)`` at ``θ_i = 2πi/N``; strictly positive.
    n : int
        Boundary dimension. Only curves (``n = 1``) are represented.
    """

    values: np.ndarray
    n: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1:
            raise SizeError("height samples must be one-dimensional")
        if not is_power_of_two(v.size) or v.size < MIN_GRID:
            raise SizeError(f"grid size must be a power of two >= {MIN_GRID}, got {v.size}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise DomainError("height samples must be finite and strictly positive")
        if self.n != 1:
            raise DomainError("only planar curves (n = 1) are supported")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.N

    @cached_property
    def theta(self) -> np.ndarray:
        return grid_angles(self.N)

    @cached_property
    def d1(self) -> np.ndarray:
        return spectral_derivative(self.values, 1)

    @cached_property
    def d2(self) -> np.ndarray:
        return spectral_derivative(self.values, 2)

    @cached_property
    def d3(self) -> np.ndarray:
        return spectral_derivative(self.values, 3)

    @cached_property
    def interpolant(self) -> "TrigInterpolant":
        return TrigInterpolant(self.values)

    def evaluate(self, phi, derivative: int = 0) -> np.ndarray:
        """Trigonometric interpolant (or its derivative) at arbitrary angles."""
        return self.interpolant(phi, derivative)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict radial inclusion test ``|z| < h(arg z)``."""
        r = np.hypot(points[..., 0], points[..., 1])
        return r < self.evaluate(np.arctan2(points[..., 1], points[..., 0]))

    def scaled(self, c: float) -> "HeightField":
        return HeightField(c * self.values)

    # boundary curve and its parameter derivatives

    @cached_property
    def frame(self) -> tuple[np.ndarray, np.ndarray]:
        th = self.theta
        e = np.stack([np.cos(th), np.sin(th)], axis=1)
        eperp = np.stack([-np.sin(th), np.cos(th)], axis=1)
        return e, eperp

    @cached_property
    def points(self) -> np.ndarray:
        e, _ = self.frame
        return self.values[:, None] * e

    @cached_property
    def tangents(self) -> np.ndarray:
        """``P'(θ) = h' e + h e⊥``."""
        e, ep = self.frame
        return self.d1[:, None] * e + self.values[:, None] * ep

    @cached_property
    def second(self) -> np.ndarray:
        """``P''(θ) = (h'' − h) e + 2h' e⊥``."""
        e, ep = self.frame
        return (self.d2 - self.values)[:, None] * e + 2.0 * self.d1[:, None] * ep

    @cached_property
    def third(self) -> np.ndarray:
        """``P'''(θ) = (h''' − 3h') e + (3h'' − h) e⊥``."""
        e, ep = self.frame
        return (self.d3 - 3.0 * self.d1)[:, None] * e + (3.0 * self.d2 - self.values)[:, None] * ep

    @cached_property
    def jacobian(self) -> np.ndarray:
        """Arclength density ``J = √(h² + h'²)``."""
        return np.hypot(self.values, self.d1)

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normals ``(h e − h' e⊥)/J``."""
        e, ep = self.frame
        return (self.values[:, None] * e - self.d1[:, None] * ep) / self.jacobian[:, None]

    @cached_property
    def curvature(self) -> np.ndarray:
        """Classical curvature of the boundary, positive for convex sets."""
        h, h1, h2 = self.values, self.d1, self.d2
        return (h * h + 2.0 * h1 * h1 - h * h2) / (h * h + h1 * h1) ** 1.5


def build_field(samples) -> HeightField:
    """Validate positive samples on a power-of-two grid and wrap them."""
    return HeightField(np.asarray(samples, dtype=float))


def area(field: HeightField) -> float:
    """Enclosed area ``½ Σ h² Δθ`` (spectrally exact for band-limited ``h²``)."""
    return 0.5 * float(np.sum(field.values**2)) * field.dtheta


def normal_and_jacobian(field: HeightField, node: int) -> tuple[np.ndarray, float]:
    """Outward unit normal and arclength density at one node."""
    if not 0 <= node < field.N:
        raise IndexError(f"node {node} outside grid of size {field.N}")
    return field.normals[node].copy(), float(field.jacobian[node])


def barycenter(field: HeightField) -> np.ndarray:
    """Centroid of the enclosed region, ``(1/|E|)∫ h³/3 · e dθ``."""
    e, _ = field.frame
    m = np.sum((field.values**3 / 3.0)[:, None] * e, axis=0) * field.dtheta
    return m / area(field)


def convexity_tolerance(field: HeightField) -> float:
    return 1e-8 / float(field.values.max())


def is_convex(field: HeightField) -> bool:
    return bool(field.curvature.min() >= -convexity_tolerance(field))


def slope_constant(field: HeightField, s: float) -> float:
    """``sup ⟨x − y, ν(x)⟩ / |x − y|^{1+s}`` over all ordered node pairs."""
    p, nu = field.points, field.normals
    best = -np.inf
    for k in range(1, field.N):
        d = p - np.roll(p, -k, axis=0)
        num = np.sum(d * nu, axis=1)
        dist = np.hypot(d[:, 0], d[:, 1])
        best = max(best, float(np.max(num / dist ** (1.0 + s))))
    return best


@dataclass(frozen=True, eq=False)
class ShapeMetrics:
    area: float
    barycenter: np.ndarray
    inradius: float
    circumradius: float
    convex: bool
    slope_constant: float
    min_curvature: float


def shape_metrics(field: HeightField, s: float) -> ShapeMetrics:
    """Area, centroid, in/circum-radius about the centroid, convexity and slope.

    The inradius is the smallest support distance ``⟨P − b, ν⟩`` from the
    centroid ``b``, which is the distance to the boundary for convex sets.
    """
    b = barycenter(field)
    rel = field.points - b
    r = float(np.min(np.sum(rel * field.normals, axis=1)))
    R = float(np.max(np.hypot(rel[:, 0], rel[:, 1])))
    kmin = float(field.curvature.min())
    return ShapeMetrics(
        area=area(field),
        barycenter=b,
        inradius=r,
        circumradius=R,
        convex=kmin >= -convexity_tolerance(field),
        slope_constant=slope_constant(field, s),
        min_curvature=kmin,
    )


def _resample_about(field: HeightField, center: np.ndarray, iters: int = 40) -> np.ndarray:
    """Radial function of the boundary seen from ``center`` on the same grid."""
    th = field.theta
    c_cross = np.cos(th) * center[1] - np.sin(th) * center[0]
    rel = field.points - center
    if np.any(cross2(rel, field.tangents) <= 0.0) or not field.contains(center[None, :])[0]:
        raise GeometryError("boundary is not star-shaped about the new center")
    psi = th.copy()
    for _ in range(iters):
        h = field.evaluate(psi)
        h1 = field.evaluate(psi, 1)
        sn, cs = np.sin(psi - th), np.cos(psi - th)
        f = h * sn - c_cross
        fp = h1 * sn + h * cs
        step = f / fp
        psi = psi - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise GeometryError("re-sampling about the new center did not converge")
    h = field.evaluate(psi)
    q = h[:, None] * np.stack([np.cos(psi), np.sin(psi)], axis=1) - center
    radial = q[:, 0] * np.cos(th) + q[:, 1] * np.sin(th)
    if np.any(radial <= 0.0) or np.max(np.abs(cross2(np.stack([np.cos(th), np.sin(th)], 1), q))) > 1e-9:
        raise GeometryError("translated boundary could not be re-sampled radially")
    return radial


def rescale_and_center(field: HeightField, target_area: float, center_tol: float = 0.0) -> HeightField:
    """Move the centroid to the origin and scale to the requested area.

    Recentering re-samples the translated boundary on the angular grid and is
    skipped when the centroid is already within ``center_tol`` of the origin.
    """
    if not target_area > 0.0:
        raise DomainError("target area must be positive")
    b = barycenter(field)
    values = field.values
    if np.hypot(*b) > center_tol:
        values = _resample_about(field, b)
    a = 0.5 * float(np.sum(values**2)) * field.dtheta
    return HeightField(values * np.sqrt(target_area / a))
