"""Discrete Hölder norms, Littlewood–Paley blocks and interpolation checks.

Grid functions live on a uniform periodic grid, either the unit circle
(``domain="circle"``: angles ``2πi/N``, chordal distance ``2|sin(Δθ/2)|``,
derivatives in θ) or a flat torus of given ``length`` (periodic distance,
derivatives in x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, ResolutionError


def _distances(N: int, domain: str, length: float) -> np.ndarray:
    """Distance between nodes ``k`` steps apart, ``k = 0..N/2``."""
    k = np.arange(N // 2 + 1)
    if domain == "circle":
        return 2.0 * np.sin(np.pi * k / N)
    if domain == "torus":
        return length * k / N
    raise DomainError(f"unknown domain {domain!r}")


def derivative(u: np.ndarray, order: int = 1, domain: str = "circle", length: float = 1.0) -> np.ndarray:
    """Spectral derivative along the first axis; Nyquist dropped for odd orders."""
    u = np.asarray(u, dtype=float)
    if order == 0:
        return u.copy()
    N = u.shape[0]
    coef = np.fft.rfft(u, axis=0)
    k = np.arange(coef.shape[0], dtype=float)
    if domain == "torus":
        k = k * (2.0 * np.pi / length)
    elif domain != "circle":
        raise DomainError(f"unknown domain {domain!r}")
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[-1] = 0.0
    mult = mult.reshape((-1,) + (1,) * (u.ndim - 1))
    return np.fft.irfft(coef * mult, n=N, axis=0)


def _sup(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(u) if u.ndim == 1 else np.linalg.norm(u, axis=-1)))


def holder_seminorm(u, beta: float, domain: str = "circle", length: float = 1.0) -> float:
    """``max_{x≠y} |u(y) − u(x)| / |y − x|^β`` over all node pairs.

    Vector-valued samples (shape ``(N, d)``) use the Euclidean norm of differences.
    """
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"Hölder exponent must lie in (0, 1], got {beta}")
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    dist = _distances(N, domain, length)
    best = 0.0
    for k in range(1, N // 2 + 1):
        diff = u - np.roll(u, -k, axis=0)
        mag = np.abs(diff) if u.ndim == 1 else np.linalg.norm(diff, axis=-1)
        best = max(best, float(mag.max()) / dist[k] ** beta)
    return best


def check_resolution(u, threshold: float = 1e-8) -> None:
    """Raise if more than ``threshold`` of the spectral energy sits above ``N/4``."""
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    power = np.abs(np.fft.rfft(u, axis=0)) ** 2
    power = power.reshape(power.shape[0], -1).sum(axis=1)
    power[1:] *= 2.0
    total = power.sum()
    if total > 0.0 and power[N // 4 + 1:].sum() > threshold * total:
        raise ResolutionError("grid function is under-resolved: energy above N/4")


def ck_beta_norm(u, k: int, beta: float, domain: str = "circle", length: float = 1.0,
                 check: bool = True) -> float:
    """``Σ_{l≤k} ‖∂^l u‖_∞ + [∂^k u]_β`` (the seminorm is omitted when ``β = 0``)."""
    if k < 0 or not 0.0 <= beta < 1.0:
        raise DomainError("need k >= 0 and beta in [0, 1)")
    if check:
        check_resolution(u)
    total = 0.0
    top = None
    for order in range(k + 1):
        top = derivative(u, order, domain, length)
        total += _sup(top)
    if beta > 0.0:
        total += holder_seminorm(top, beta, domain, length)
    return total


def holder_norm(u, gamma: float, domain: str = "circle", length: float = 1.0, check: bool = True) -> float:
    """``‖u‖_{C^γ}`` with ``γ = k + β`` split into integer and fractional parts."""
    k = int(np.floor(gamma))
    return ck_beta_norm(u, k, gamma - k, domain, length, check)


def top_seminorm(u, gamma: float, domain: str = "circle", length: float = 1.0) -> float:
    """Highest-order part ``[∂^k u]_β`` of the ``C^γ`` norm, ``γ = k + β`` non-integer."""
    k = int(np.floor(gamma))
    if gamma == k:
        raise DomainError("the top seminorm needs a non-integer exponent")
    return holder_seminorm(derivative(u, k, domain, length), gamma - k, domain, length)


# Littlewood–Paley


def eta(r) -> np.ndarray:
    """Cutoff equal to 1 on ``[0, 1]``, 0 on ``[2, ∞)``, quintic smoothstep between."""
    r = np.asarray(r, dtype=float)
    t = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def delta(xi) -> np.ndarray:
    """Annulus profile ``η(|ξ|) − η(2|ξ|)``, supported in ``1/2 < |ξ| < 2``."""
    a = np.abs(np.asarray(xi, dtype=float))
    return eta(a) - eta(2.0 * a)


def paley_block(u, j: int) -> np.ndarray:
    """``Δ_j u``: multiply mode ``m`` by ``δ(2^{−j}|m|)``."""
    u = np.asarray(u, dtype=float)
    N = u.shape[0]
    coef = np.fft.rfft(u, axis=0)
    m = np.arange(coef.shape[0], dtype=float)
    mult = delta(m * 2.0 ** (-j)).reshape((-1,) + (1,) * (u.ndim - 1))
    return np.fft.irfft(coef * mult, n=N, axis=0)


def block_range(N: int) -> range:
    """Indices ``j ≥ 0`` whose blocks cover frequencies ``1..N/2``."""
    return range(0, int(np.log2(N // 2)) + 2)


@dataclass(frozen=True, eq=False)
class PaleyBlocks:
    blocks: dict
    j_range: range

    eta = staticmethod(eta)
    delta = staticmethod(delta)

    def total(self) -> np.ndarray:
        return sum(self.blocks.values())


def paley_blocks(u) -> PaleyBlocks:
    u = np.asarray(u, dtype=float)
    jr = block_range(u.shape[0])
    return PaleyBlocks(blocks={j: paley_block(u, j) for j in jr}, j_range=jr)


def fourier_holder_norm(u, gamma: float) -> float:
    """``sup_{j≥1} 2^{jγ} ‖Δ_j u‖_∞`` for non-integer ``γ ∈ (0, 2)``."""
    if not 0.0 < gamma < 2.0 or float(gamma).is_integer():
        raise DomainError(f"gamma must be a non-integer in (0, 2), got {gamma}")
    u = np.asarray(u, dtype=float)
    return max(2.0 ** (j * gamma) * _sup(paley_block(u, j)) for j in block_range(u.shape[0]) if j >= 1)


def interpolation_check(u, s1: float, s2: float, theta: float, domain: str = "circle",
                        length: float = 1.0) -> float:
    """``‖u‖_{C^s} / (‖u‖_{C^{s1}}^θ ‖u‖_{C^{s2}}^{1−θ})`` with ``s = θ s1 + (1 − θ) s2``."""
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    s = theta * s1 + (1.0 - theta) * s2
    n1 = holder_norm(u, s1, domain, length)
    n2 = holder_norm(u, s2, domain, length)
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateInputError("interpolation ratio undefined for the zero function")
    return holder_norm(u, s, domain, length) / (n1**theta * n2 ** (1.0 - theta))


def random_trig_polynomial(N: int, rng: np.random.Generator, kmin: int = 1, kmax: int = 8,
                           decay: float = 1.0) -> np.ndarray:
    """Seeded real trigonometric polynomial with amplitudes ``~ k^{−decay}``."""
    k = np.arange(kmin, kmax + 1)
    a = rng.standard_normal(k.size) * k ** (-decay)
    b = rng.standard_normal(k.size) * k ** (-decay)
    th = 2.0 * np.pi * np.arange(N) / N
    ang = np.multiply.outer(th, k)
    return np.cos(ang) @ a + np.sin(ang) @ b
