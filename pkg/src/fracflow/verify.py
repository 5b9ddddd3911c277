"""Deterministic property suite behind the ``verify`` subcommand.

Every check is a pure function of ``(s, alpha, seed)`` and returns a record
``{"check", "pass", ...numbers}``. Timings are never recorded here.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import curvature as cv
from . import flow
from . import geometry as geo
from . import kernels
from . import norms
from . import shapes
from . import spectral

CHECKS: dict[str, Callable] = {}


def check(name: str):
    def deco(fn):
        CHECKS[name] = fn
        return fn

    return deco


def _rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream per check so results do not depend on execution order."""
    tag = int.from_bytes(name.encode()[:8].ljust(8, b"\0"), "little")
    return np.random.default_rng([seed, tag])


# corpora


def lp_corpus(N: int, rng: np.random.Generator, size: int, kmin: int = 2, kmax: int = 12) -> list[np.ndarray]:
    """Band-limited trig polynomials; mode 1 is excluded because the blocks start at ``j = 1``."""
    return [norms.random_trig_polynomial(N, rng, kmin, kmax) for _ in range(size)]


def lp_band(corpus_fn: Callable[[int], list], N: int, gamma: float) -> dict:
    """Ratio band of ``fourier_holder_norm`` to the direct ``C^γ`` norm at ``N`` and ``2N``."""
    out = {}
    for n in (N, 2 * N):
        r = [norms.fourier_holder_norm(u, gamma) / norms.holder_norm(u, gamma) for u in corpus_fn(n)]
        out[n] = (min(r), max(r))
    w1 = out[N][1] / out[N][0]
    w2 = out[2 * N][1] / out[2 * N][0]
    return {"band": out[N], "band_doubled": out[2 * N], "width": w1, "width_doubled": w2,
            "width_change": abs(w2 / w1 - 1.0)}


def interpolation_max(corpus_fn: Callable[[int], list], N: int, s1: float, s2: float, theta: float) -> dict:
    m1 = max(norms.interpolation_check(u, s1, s2, theta) for u in corpus_fn(N))
    m2 = max(norms.interpolation_check(u, s1, s2, theta) for u in corpus_fn(2 * N))
    return {"max_ratio": m1, "max_ratio_doubled": m2, "change": abs(m2 / m1 - 1.0)}


def single_block_identity(N: int = 256) -> float:
    """Largest error of ``Δ_j u = u`` and ``Δ_i u = 0`` (``i ≠ j``) for the pure mode ``m = 2^j``."""
    th = 2.0 * np.pi * np.arange(N) / N
    err = 0.0
    for j in range(1, int(np.log2(N // 2))):
        u = np.cos(2 ** j * th)
        for i in norms.block_range(N):
            target = u if i == j else 0.0
            err = max(err, float(np.max(np.abs(norms.paley_block(u, i) - target))))
    return err


# checks


@check("alexandrov_constancy")
def _alexandrov(s, alpha, seed, N=256):
    worst = 0.0
    for sv in (0.3, 0.5, 0.7):
        H = cv.chord_curvature(shapes.circle(N), sv)
        worst = max(worst, float(np.std(H) / np.mean(H)))
    return {"N": N, "max_rel_std": worst, "pass": worst < 1e-6}


@check("curvature_scaling")
def _scaling(s, alpha, seed, N=64):
    unit = cv.chord_curvature(shapes.circle(N), s, nodes=[0])[0]
    errs = [abs(cv.chord_curvature(shapes.circle(N, r), s, nodes=[0])[0] / (r ** (-s) * unit) - 1.0)
            for r in (0.5, 2.0, 3.0)]
    closed = abs(unit / cv.circle_curvature(s) - 1.0)
    return {"max_rel_error": max(errs), "closed_form_error": closed, "pass": max(errs) < 1e-6 and closed < 1e-8}


@check("method_cross_validation")
def _cross(s, alpha, seed, N=64, fields=2, nodes=(0, 21)):
    rng = _rng(seed, "method_cross_validation")
    worst = 0.0
    for _ in range(fields):
        f = shapes.random_convex(N, rng)
        chord = cv.chord_curvature(f, s, nodes=list(nodes))
        pv = np.array([cv.pv_oracle(f, i, s) for i in nodes])
        worst = max(worst, float(np.max(np.abs(chord / pv - 1.0))))
    return {"fields": fields, "max_rel_diff": worst, "pass": worst < 1e-3}


@check("boundary_rule_agreement")
def _boundary(s, alpha, seed, N=128):
    f = shapes.random_convex(N, _rng(seed, "boundary_rule_agreement"))
    d = float(np.max(np.abs(cv.boundary_curvature(f, s) / cv.chord_curvature(f, s) - 1.0)))
    return {"max_rel_diff": d, "pass": d < 1e-6}


@check("perimeter_dual_route")
def _perimeter(s, alpha, seed, N=128):
    f = shapes.ellipse(N, 1.3)
    a, b = cv.fractional_perimeter(f, s), cv.fractional_perimeter_nested(f, s)
    rel = abs(a / b - 1.0)
    return {"boundary": a, "nested": b, "rel_diff": rel, "pass": rel < 0.1 * cv.RTOL_P}


@check("directional_derivative_constant")
def _cns(s, alpha, seed):
    c = cv.calibrate_cns(s)
    return {"C_ns": c, "pass": abs(c / 2.0 - 1.0) < 5e-2}


@check("slope_constant_circle")
def _slope(s, alpha, seed, N=256):
    v = geo.slope_constant(shapes.circle(N), s)
    return {"slope_constant": v, "expected": 2.0 ** (-s), "error": abs(v - 2.0 ** (-s)),
            "pass": abs(v - 2.0 ** (-s)) <= 1e-2}


@check("flow_volume_structure")
def _volume(s, alpha, seed, N=128, steps=20):
    st = flow.initial_state(shapes.ellipse(N, 1.3), s)
    dt = flow.cfl_dt(st.field, s, 0.2)
    worst = 0.0
    cur = st
    for _ in range(steps):
        cur, rec = flow.step(cur, s, dt)
        worst = max(worst, abs(rec["mean_V"]))
    d1 = flow.step(st, s, dt)[1]["volume_drift_raw"]
    d2 = flow.step(st, s, 0.5 * dt)[1]["volume_drift_raw"]
    ratio = d1 / d2
    return {"max_abs_mean_V": worst, "drift_ratio": ratio,
            "pass": worst < 1e-4 and abs(ratio / 4.0 - 1.0) < 0.3}


@check("flow_equilibrium")
def _equilibrium(s, alpha, seed, N=128):
    st = flow.initial_state(shapes.circle(N), s)
    new, _ = flow.step(st, s, flow.cfl_dt(st.field, s, 0.2))
    d = float(np.max(np.abs(new.field.values - st.field.values)))
    return {"max_change": d, "pass": d < 1e-6}


@check("splitting_identity")
def _split(s, alpha, seed, N=128, fields=5):
    rng = _rng(seed, "splitting_identity")
    res = max(kernels.split_data(shapes.random_convex(N, rng), s, alpha, n_pairs=64).max_residual
              for _ in range(fields))
    return {"fields": fields, "max_residual": res, "pass": res < 1e-10}


@check("kernel_lemma")
def _klemma(s, alpha, seed, N=128):
    K = kernels.build_matrix_field(shapes.ellipse(N, 1.3), s, alpha)
    r = kernels.verify_kernel_lemma(K, seed=seed % 2**32, samples=2000)
    return {"empirical_constant": r["empirical_constant"], "pass": r["pass"]}


@check("remainder_lemma")
def _rlemma(s, alpha, seed, N=128):
    f = shapes.random_convex(N, _rng(seed, "remainder_lemma"))
    r = kernels.verify_remainder_lemma(f, s, alpha, seed=seed % 2**32, samples=2000)
    return {"empirical_constant": r["empirical_constant"], "pass": r["pass"]}


@check("symbol_exactness")
def _symbol(s, alpha, seed):
    cs = spectral.c_s(s)
    alt, _ = spectral.c_s_alternative(s)
    sym = spectral.compute_symbol(1.0, s)
    e_sym = abs(sym / (2.0 * cs) - 1.0)
    e_cs = abs(alt / cs - 1.0)
    e_closed = abs(spectral.c_s_closed_form(s) / cs - 1.0)
    return {"c_s": cs, "symbol_error": e_sym, "schemes_rel_diff": e_cs, "closed_form_rel_diff": e_closed,
            "pass": e_sym < 1e-12 and e_cs < 1e-8 and e_closed < 1e-8}


@check("duhamel_exactness")
def _duhamel(s, alpha, seed, N=64, T=1.0):
    a = spectral.compute_symbol(1.0, s)
    worst = 0.0
    for k in (1, 3, 8):
        st = spectral.evolve(spectral.SpectralState(N, s), lambda x, t, k=k: np.cos(2 * np.pi * k * x), T)
        exact = spectral.mode_solution(a, k, s, T, 0.5)
        worst = max(worst, abs(st.mode(k).real / exact - 1.0))
    return {"max_rel_error": worst, "pass": worst < 1e-10}


@check("maximum_principle")
def _maxp(s, alpha, seed, N=64, T=2.0, size=20):
    rng = _rng(seed, "maximum_principle")
    worst = 0.0
    for _ in range(size):
        f = spectral.random_forcing(rng, time_dependent=True)
        st = spectral.evolve(spectral.SpectralState(N, s), f, T, T / 256)
        worst = max(worst, spectral.max_principle_check(st.history, T)["ratio"])
    return {"corpus": size, "max_ratio": worst, "pass": worst <= 1.05}


@check("symbol_quadrature_consistency")
def _symq(s, alpha, seed):
    a = spectral.compute_symbol(1.0, s)
    r = {k: spectral.mode_eigenvalue(k, 1.0, s) / (a * k ** (1.0 + s)) for k in (8, 16, 32)}
    return {"ratios": [r[k] for k in (8, 16, 32)], "pass": all(0.9 <= v <= 1.1 for v in r.values())}


@check("paley_block_identity")
def _lp_block(s, alpha, seed):
    e = single_block_identity()
    return {"max_error": e, "pass": e < 1e-8}


@check("littlewood_paley_equivalence")
def _lp(s, alpha, seed, N=128, size=20, gamma=0.5):
    corpus = lambda n: lp_corpus(n, _rng(seed, "littlewood_paley"), size)
    r = lp_band(corpus, N, gamma)
    return {"gamma": gamma, "width": r["width"], "width_doubled": r["width_doubled"],
            "width_change": r["width_change"], "pass": r["width_change"] < 0.25}


@check("interpolation_inequality")
def _interp(s, alpha, seed, N=128, size=50):
    corpus = lambda n: lp_corpus(n, _rng(seed, "interpolation"), size)
    r = interpolation_max(corpus, N, 0.2, 1.6, 0.5)
    r["pass"] = bool(np.isfinite(r["max_ratio"]) and r["change"] < 0.2)
    return r


@check("schauder_constant")
def _schauder(s, alpha, seed, size=6, T=1.0):
    rng = _rng(seed, "schauder_constant")
    corpus = [spectral.random_forcing(rng, time_dependent=True) for _ in range(size)]
    c1 = spectral.schauder_constant(1.0, s, alpha, T, corpus, N=64)["C_T"]
    c2 = spectral.schauder_constant(1.0, s, alpha, T, corpus, N=128)["C_T"]
    return {"C_T": c1, "C_T_doubled": c2, "change": abs(c2 / c1 - 1.0),
            "pass": bool(np.isfinite(c1) and abs(c2 / c1 - 1.0) < 0.25)}


def run_suite(s: float = 0.5, alpha: float = 0.2, seed: int = 0, names=None) -> list[dict]:
    """Run the named checks (all by default) in a fixed order."""
    out = []
    for name in names or CHECKS:
        rec = CHECKS[name](s, alpha, seed)
        rec = {"check": name, "s": s, "alpha": alpha, "seed": seed, **rec}
        rec["pass"] = bool(rec["pass"])
        out.append(rec)
    return out
