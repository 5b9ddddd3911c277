"""Anisotropic kernels of the height-function equation and their verifiers.

For a height field ``h`` on the unit circle the squared distance between
boundary points splits as

    |h(y)y − h(x)x|² = ‖y − x‖²_{A(x)} + g_h(y, x),
    A(x) = h(x)² I + ∇_τh(x) ⊗ ∇_τh(x),

with ``∇_τh = h' e⊥`` and ``g_h`` built from the first-order Taylor remainder
``T_x[h](y)``. Points ``x, y`` below are on the unit circle and are passed as
angles unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .errors import AlgebraError, DomainError, SingularityError
from .geometry import HeightField, TrigInterpolant
from . import norms


def _unit(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _perp(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


@dataclass(frozen=True, eq=False)
class KernelField:
    """Symmetric elliptic matrix field on the circle nodes.

    Attributes
    ----------
    A : ndarray, shape (N, 2, 2)
    lam, Lam : float
        Ellipticity constants.
    s : float
        Order of the kernel ``⟨A(x)(y−x), y−x⟩^{−(2+s)/2}``.
    holder_alpha, holder_norm : float
        Exponent and discrete ``C^α`` norm of the entries of ``A``.
    """

    A: np.ndarray
    lam: float
    Lam: float
    s: float = 0.5
    holder_alpha: float = 0.2
    holder_norm: float = float("nan")

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N

    def quad_form(self, node, v: np.ndarray) -> np.ndarray:
        """``⟨A(x_node) v, v⟩``; ``node`` and ``v`` broadcast together."""
        A = self.A[node]
        return np.einsum("...i,...ij,...j->...", v, A, v)

    def ellipticity_violation(self, n_dirs: int = 32) -> float:
        """Largest relative breach of ``λ|ξ|² ≤ ⟨Aξ,ξ⟩ ≤ Λ|ξ|²`` on a direction net."""
        xi = _unit(np.pi * np.arange(n_dirs) / n_dirs)
        q = np.einsum("di,nij,dj->nd", xi, self.A, xi)
        return float(max(np.max(self.lam - q), np.max(q - self.Lam), 0.0))


def constant_kernel_field(A, N: int = 64, s: float = 0.5, alpha: float = 0.2) -> KernelField:
    """Spatially constant field, e.g. ``A = I``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A * np.eye(2)
    _require_spd(A)
    ev = np.linalg.eigvalsh(A)
    return KernelField(np.broadcast_to(A, (N, 2, 2)).copy(), float(ev[0]), float(ev[-1]), s, alpha,
                       float(np.max(np.abs(A))))


def _require_spd(A: np.ndarray) -> None:
    A = np.asarray(A, dtype=float)
    if not np.allclose(A, np.swapaxes(A, -1, -2), rtol=0.0, atol=1e-13 * max(1.0, np.abs(A).max())):
        raise DomainError("matrix is not symmetric")
    if np.any(np.linalg.eigvalsh(A) <= 0.0):
        raise DomainError("matrix is not positive definite")


def build_matrix_field(field: HeightField, s: float = 0.5, alpha: float = 0.2) -> KernelField:
    """``A(x) = h² I + ∇_τh ⊗ ∇_τh`` at every node; ``λ = min h²``, ``Λ = max(h² + h'²)``."""
    h, h1 = field.values, field.d1
    g = h1[:, None] * _perp(field.theta)
    A = (h * h)[:, None, None] * np.eye(2) + g[:, :, None] * g[:, None, :]
    lam = float(np.min(h * h))
    Lam = float(np.max(h * h + h1 * h1))
    entries = A.reshape(A.shape[0], 4)
    hn = norms.ck_beta_norm(entries, 0, alpha, check=False)
    return KernelField(A, lam, Lam, s, alpha, hn)


def kernel_eval(K: KernelField, y, node: int) -> np.ndarray:
    """``K_A(y, x) = ⟨A(x)(y − x), y − x⟩^{−(2+s)/2}`` with ``x`` the node point on the circle."""
    y = np.asarray(y, dtype=float)
    x = _unit(K.theta[node])
    d = y - x
    q = K.quad_form(node, d)
    if np.any(q == 0.0):
        raise SingularityError("kernel evaluated on the diagonal y = x")
    return q ** (-(2.0 + K.s) / 2.0)


def pullback_matrix(A: np.ndarray, grad_phi: np.ndarray) -> np.ndarray:
    """``Ã = J_φᵀ A J_φ`` with ``J_φ ξ' = (ξ', ⟨∇φ, ξ'⟩)`` for a graph chart ``x_{n+1} = φ(x')``."""
    A = np.asarray(A, dtype=float)
    grad_phi = np.atleast_1d(np.asarray(grad_phi, dtype=float))
    n = grad_phi.size
    if A.shape != (n + 1, n + 1):
        raise DomainError("matrix and chart gradient dimensions disagree")
    J = np.vstack([np.eye(n), grad_phi[None, :]])
    return J.T @ A @ J


def sphere_chart_gradient(xp) -> np.ndarray:
    """Gradient of ``φ(x') = √(1 − |x'|²)``, the upper-hemisphere chart."""
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    return -xp / np.sqrt(1.0 - np.dot(xp, xp))


# splitting of the squared distance


def taylor_remainder(field: HeightField, ty, tx) -> np.ndarray:
    """``T_x[h](y) = h(y) − h(x) − ⟨∇_τh(x), y − x⟩``."""
    f = field.interpolant
    hy, hx, h1x = f(ty), f(tx), f(tx, 1)
    d = _unit(ty) - _unit(tx)
    return hy - hx - h1x * np.sum(_perp(tx) * d, axis=-1)


def g_term(field: HeightField, ty, tx) -> np.ndarray:
    """``g_h(y,x) = h(x)(h(y) − h(x))|x − y|² + 2(h(y) − h(x))T − T²``."""
    f = field.interpolant
    hy, hx = f(ty), f(tx)
    d = _unit(ty) - _unit(tx)
    T = taylor_remainder(field, ty, tx)
    return hx * (hy - hx) * np.sum(d * d, axis=-1) + 2.0 * (hy - hx) * T - T * T


def splitting_residual(field: HeightField, ty, tx) -> np.ndarray:
    """``|h(y)y − h(x)x|² − ‖y − x‖²_{A(x)} − g_h(y, x)``; zero up to rounding."""
    f = field.interpolant
    hy, hx, h1x = f(ty), f(tx), f(tx, 1)
    ey, ex = _unit(ty), _unit(tx)
    lhs = np.sum((hy[..., None] * ey - hx[..., None] * ex) ** 2, axis=-1)
    d = ey - ex
    grad = h1x[..., None] * _perp(tx)
    normA = hx * hx * np.sum(d * d, axis=-1) + np.sum(grad * d, axis=-1) ** 2
    return lhs - normA - g_term(field, ty, tx)


@dataclass(frozen=True, eq=False)
class SplitData:
    taylor: Callable
    g: Callable
    bounds: dict = dc_field(default_factory=dict)
    max_residual: float = 0.0


def split_data(field: HeightField, s: float = 0.5, alpha: float = 0.2, n_pairs: int = 64,
               tol: float = 1e-10) -> SplitData:
    """Splitting data with the identity verified on an ``n_pairs × n_pairs`` node sample.

    Reported bounds are the empirical constants of
    ``|g_h(y,x)| ≤ C ‖h‖_{C^{1+s+α}} |y − x|^{2+s+α}`` and, for ``|z − x| ≤ |y − x|/2``,
    ``|g_h(y,z) − g_h(y,x)| ≤ C ‖h‖_{C^{1+s+α}} |z − x|^{s+α} |y − x|²``.
    """
    idx = np.linspace(0, field.N, n_pairs, endpoint=False).astype(int)
    th = field.theta[idx]
    TY, TX = np.meshgrid(th, th, indexing="ij")
    res = float(np.max(np.abs(splitting_residual(field, TY, TX))))
    if res > tol:
        raise AlgebraError(f"splitting identity violated by {res:.3e}")
    hn = norms.ck_beta_norm(field.values, 1, s + alpha, check=False)
    off = TY != TX
    dist = np.linalg.norm(_unit(TY) - _unit(TX), axis=-1)
    g = g_term(field, TY, TX)
    c1 = float(np.max(np.abs(g[off]) / (hn * dist[off] ** (2.0 + s + alpha))))
    # increment bound on triples with z close to x
    tz = TX + 0.5 * (TY - TX) * 0.5
    dz = np.linalg.norm(_unit(tz) - _unit(TX), axis=-1)
    ok = off & (dz > 0) & (dz <= 0.5 * dist)
    inc = np.abs(g_term(field, TY, tz) - g)
    c2 = float(np.max(inc[ok] / (hn * dz[ok] ** (s + alpha) * dist[ok] ** 2))) if ok.any() else 0.0
    return SplitData(
        taylor=lambda ty, tx: taylor_remainder(field, ty, tx),
        g=lambda ty, tx: g_term(field, ty, tx),
        bounds={"growth": c1, "increment": c2, "norm_C1sa": hn},
        max_residual=res,
    )


def g_growth_exponent(field: HeightField, n_scales: int = 12, n_base: int = 64) -> float:
    """Log–log slope of ``max_x |g_h(y,x)|`` against ``|y − x|`` over small separations."""
    tx = 2.0 * np.pi * np.arange(n_base) / n_base
    seps = np.geomspace(1e-3, 1e-1, n_scales)
    gmax = []
    for d in seps:
        g = np.abs(np.concatenate([g_term(field, tx + d, tx), g_term(field, tx - d, tx)]))
        gmax.append(g.max())
    chord = 2.0 * np.sin(0.5 * seps)
    return float(np.polyfit(np.log(chord), np.log(gmax), 1)[0])


def taylor_bound_ratio(field: HeightField, beta: float, n_pairs: int = 64) -> float:
    """``max |T_x[h](y)| / (‖h‖_{C^{1+β}} |y − x|^{1+β})`` on a node-pair sample (≤ 1 expected)."""
    idx = np.linspace(0, field.N, n_pairs, endpoint=False).astype(int)
    th = field.theta[idx]
    TY, TX = np.meshgrid(th, th, indexing="ij")
    off = TY != TX
    dist = np.linalg.norm(_unit(TY) - _unit(TX), axis=-1)
    T = np.abs(taylor_remainder(field, TY, TX))
    hn = norms.ck_beta_norm(field.values, 1, beta, check=False)
    return float(np.max(T[off] / (hn * dist[off] ** (1.0 + beta))))


def G_mu(a, g, mu: float, q: float, sign: float = 1.0) -> np.ndarray:
    """``d/dμ (a / (a + sign·μ g))^q = −sign·q g a^q / (a + sign·μ g)^{q+1}``."""
    a = np.asarray(a, dtype=float)
    g = np.asarray(g, dtype=float)
    den = a + sign * mu * g
    return -sign * q * g * a**q / den ** (q + 1.0)


# lemma verifiers


def _triples(N: int, rng: np.random.Generator, samples: int):
    """Node triples ``(x, y, z)`` with ``0 < |z − x| ≤ |y − x|/2`` on the circle."""
    ix = rng.integers(0, N, samples)
    off_y = rng.integers(1, N, samples)
    iy = (ix + off_y) % N
    ky = np.minimum(off_y, N - off_y)
    span = np.maximum(ky // 3, 1)
    kz = rng.integers(1, span + 1) * rng.choice([-1, 1], samples)
    iz = (ix + kz) % N
    th = 2.0 * np.pi / N
    dxy = 2.0 * np.abs(np.sin(0.5 * th * ky))
    dzx = 2.0 * np.abs(np.sin(0.5 * th * np.abs(kz)))
    ok = (dzx > 0) & (dzx <= 0.5 * dxy)
    return ix[ok], iy[ok], iz[ok], dxy[ok], dzx[ok]


def kernel_lemma_constants(K: KernelField, seed: int, samples: int) -> dict:
    rng = np.random.default_rng(seed)
    ix, iy, iz, dxy, dzx = _triples(K.N, rng, samples)
    pts = _unit(K.theta)
    kyx = kernel_eval(K, pts[iy], ix)
    kyz = kernel_eval(K, pts[iy], iz)
    p = 2.0 + K.s
    a = K.holder_alpha
    c_size = float(np.max(kyx * dxy**p))
    inc = np.abs(kyz - kyx)
    c_inc = float(np.max(inc / (dzx / dxy ** (p + 1.0) + dzx**a / dxy**p)))
    c_lip = float(np.max(inc * dxy ** (p + 1.0) / dzx))
    return {"size": c_size, "increment": c_inc, "lipschitz": c_lip, "triples": int(ix.size)}


def verify_kernel_lemma(K: KernelField, seed: int = 0, samples: int = 4000) -> dict:
    """Empirical constants of ``|K_A(y,x)| ≤ C|y − x|^{−(2+s)}`` and of the increment bound.

    Passes when every constant is finite and doubling the triple sample grows
    none of them by a factor 2 or more.
    """
    c1 = kernel_lemma_constants(K, seed, samples)
    c2 = kernel_lemma_constants(K, seed, 2 * samples)
    keys = ("size", "increment")
    finite = all(np.isfinite(c2[k]) for k in keys)
    stable = all(c2[k] < 2.0 * c1[k] for k in keys)
    return {
        "lemma": "kernel_bounds",
        "seed": seed,
        "samples": 2 * samples,
        "empirical_constant": max(c2[k] for k in keys),
        "constants": {k: c2[k] for k in ("size", "increment", "lipschitz")},
        "pass": bool(finite and stable),
    }


def flat_increment_constant(s: float) -> float:
    """Supremum of ``|K(y,z) − K(y,x)| |y − x|^{3+s} / |z − x|`` for ``A = I`` as ``|y − x| → 0``.

    With ``r = |y − x|`` and ``z`` between ``x`` and ``y`` at distance ``δr``,
    the ratio is ``((1 − δ)^{−(2+s)} − 1)/δ``, increasing in ``δ`` up to ``δ = 1/2``.
    """
    return 2.0 * (2.0 ** (2.0 + s) - 1.0)


def verify_remainder_lemma(field: HeightField, s: float = 0.5, alpha: float = 0.2, seed: int = 0,
                           samples: int = 4000, mus=(0.0, 0.5, 1.0)) -> dict:
    """Empirical constant of ``|G_μ(y,x)| ≤ C κ |y − x|^{s+α}`` with ``κ`` the fitted growth constant of ``g_h``."""
    K = build_matrix_field(field, s, alpha)
    sd = split_data(field, s, alpha)
    kappa = sd.bounds["growth"] * sd.bounds["norm_C1sa"]
    q = (2.0 + s) / 2.0

    def worst(n):
        rng = np.random.default_rng(seed)
        ix, iy, _, dxy, _ = _triples(field.N, rng, n)
        tx, ty = field.theta[ix], field.theta[iy]
        a = K.quad_form(ix, _unit(ty) - _unit(tx))
        g = g_term(field, ty, tx)
        return max(float(np.max(np.abs(G_mu(a, g, mu, q)) / (kappa * dxy ** (s + alpha)))) for mu in mus)

    c1, c2 = worst(samples), worst(2 * samples)
    return {"lemma": "remainder_factor", "seed": seed, "samples": 2 * samples,
            "empirical_constant": c2, "pass": bool(np.isfinite(c2) and c2 < 2.0 * max(c1, 1e-300))}


# convolution functionals


def _graded_rule(n_panels: int = 24, order: int = 12, ratio: float = 0.35):
    """Composite Gauss–Legendre on ``(0, π]`` geometrically graded toward 0."""
    x, w = roots_legendre(order)
    edges = np.pi * ratio ** np.arange(n_panels)[::-1]
    edges = np.concatenate([[0.0], edges])
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(a + 0.5 * (b - a) * (x + 1.0))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    psi: np.ndarray
    holder_alpha: float
    holder_norm: float
    growth_ok: bool
    kappa0: float


def convolution_functional(F: Callable, K: KernelField, growth_exponent: float | None = None) -> ConvolutionResult:
    """``ψ(x) = PV ∫_{S¹} F(y, x) K_A(y, x) dH¹_y`` at every node of ``K``.

    ``F`` takes unit-circle points ``y`` and ``x`` (arrays ``(..., 2)``) and may
    be scalar- or vector-valued. The integral pairs ``θ_x ± Δ`` and uses a rule
    graded toward ``Δ = 0``. The growth condition ``|F| ≤ κ₀|y − x|^{1+s+α}`` is
    sampled and reported; a violation only sets ``growth_ok = False``.
    """
    s, a = K.s, K.holder_alpha
    gexp = 1.0 + s + a if growth_exponent is None else growth_exponent
    d, w = _graded_rule()
    th = K.theta
    out = []
    for i, t in enumerate(th):
        x = _unit(t)
        total = 0.0
        for sign in (1.0, -1.0):
            y = _unit(t + sign * d)
            val = np.asarray(F(y, np.broadcast_to(x, y.shape)), dtype=float)
            k = kernel_eval(K, y, i)
            total = total + np.tensordot(w, val * k.reshape(k.shape + (1,) * (val.ndim - 1)), axes=(0, 0))
        out.append(total)
    psi = np.array(out)
    # growth sample at two separation bands
    probe = np.array([1e-3, 3e-3, 1e-2, 3e-2, 1e-1])
    kap = []
    for sep in probe:
        y = _unit(th + sep)
        val = np.asarray(F(y, _unit(th)), dtype=float)
        mag = np.abs(val) if val.ndim == 1 else np.linalg.norm(val, axis=-1)
        kap.append(float(mag.max()) / (2.0 * np.sin(0.5 * sep)) ** gexp)
    kappa0 = max(kap)
    growth_ok = bool(kap[0] <= 10.0 * max(kap[-1], 1e-300) or kappa0 == 0.0)
    hn = norms.ck_beta_norm(psi, 0, a, check=False)
    return ConvolutionResult(psi, a, hn, growth_ok, kappa0)


def product_integrand(v1: Callable, v2: Callable, v3: Callable) -> Callable:
    """``F(y,x) = (v1(y) − v1(x)) v2(y) v3(x)`` for functions of the angle."""
    def F(y, x):
        ty = np.arctan2(y[..., 1], y[..., 0])
        tx = np.arctan2(x[..., 1], x[..., 0])
        return (v1(ty) - v1(tx)) * v2(ty) * v3(tx)
    return F


def grid_function(values) -> TrigInterpolant:
    """Callable band-limited interpolant of node samples (angle argument)."""
    return TrigInterpolant(values)
