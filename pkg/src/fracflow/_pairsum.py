"""Compiled O(N²) pair sums for the boundary-integral rules.

Each routine visits every unordered node pair once and scatters the
contribution to both ends, so the fractional power is evaluated N(N−1)/2 times.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def curvature_pairs(x, y, tx, ty, diag, wt, s):
    """``out_i = diag_i wt_0 + Σ_{j≠i} wt_{j−i} cross(P_j − P_i, T_j) |P_j − P_i|^{−2−s}``."""
    n = x.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = diag[i] * wt[0]
    e = -1.0 - 0.5 * s
    for i in range(n):
        xi = x[i]
        yi = y[i]
        txi = tx[i]
        tyi = ty[i]
        acc = 0.0
        for j in range(i + 1, n):
            dx = x[j] - xi
            dy = y[j] - yi
            p = wt[j - i] * (dx * dx + dy * dy) ** e
            acc += (dx * ty[j] - dy * tx[j]) * p
            out[j] += (dy * txi - dx * tyi) * p
        out[i] += acc
    return out


@numba.njit(cache=True)
def perimeter_pairs(x, y, tx, ty, wt, s):
    """``Σ_i wt_0 |T_i|^{2−s} + Σ_{i≠j} wt_{j−i} ⟨T_i, T_j⟩ |P_i − P_j|^{−s}``."""
    n = x.shape[0]
    total = 0.0
    e = -0.5 * s
    for i in range(n):
        t2 = tx[i] * tx[i] + ty[i] * ty[i]
        total += wt[0] * t2 ** (1.0 + e)
        acc = 0.0
        for j in range(i + 1, n):
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            acc += wt[j - i] * (tx[i] * tx[j] + ty[i] * ty[j]) * (dx * dx + dy * dy) ** e
        total += 2.0 * acc
    return total
