"""Volume-preserving fractional curvature flow of convex planar curves.

The boundary ``{h(θ)e(θ)}`` moves with normal velocity ``V = −(H^s − H̄^s)``,
which in the height parametrization reads ``∂_t h = V √(h² + h'²) / h``.
Each step is explicit Euler followed by recentering and rescaling to area π.
"""

from __future__ import annotations

import time
from array import array
from dataclasses import asdict, dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from . import curvature as cv
from . import geometry as geo
from . import norms
from .errors import DegenerateFitError, DomainError, FlowEventError
from .io import config_hash
from .shapes import make_shape
from .spectral import c_s

TARGET_AREA = np.pi
NOISE_FLOOR = 1000.0 * np.finfo(float).eps
STATIONARY_LOG_SPAN = 1e-9

COLUMNS = ("t", "dt", "sup_H", "avg_H", "dissipation", "sup_dev", "convex", "volume_drift_raw",
           "mean_V", "slope_constant", "r", "R", "holder_C1s", "P_s")
SPARSE = ("slope_constant", "r", "R", "holder_C1s", "P_s")


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of one flow run; ``dt=None`` selects the stability rule."""

    s: float = 0.5
    N: int = 256
    T: float = 20.0
    shape: str = "ellipse:1.3"
    seed: int = 0
    c_cfl: float = 0.2
    dt: float | None = None
    method: str = "boundary"
    monitor_every: int = 50
    perimeter_every: int = 50
    center_tol: float = 1e-10
    fit_window: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")
        if not self.T > 0.0:
            raise DomainError("T must be positive")
        if self.dt is not None and not self.dt > 0.0:
            raise DomainError("dt must be positive")
        if self.monitor_every < 1 or self.perimeter_every < 1:
            raise DomainError("monitor cadences must be positive")

    @property
    def window(self) -> tuple[float, float]:
        return tuple(self.fit_window) if self.fit_window is not None else (0.25 * self.T, self.T)


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    field: geo.HeightField
    dt: float
    step_index: int
    last_sample: cv.CurvatureSample


class FlowTrace:
    """Columnar per-step records; sparse monitors are NaN between evaluations."""

    def __init__(self, metadata: dict):
        self.metadata = dict(metadata)
        self.columns = {name: array("d") for name in COLUMNS}
        self.halt: dict | None = None
        self.final_field: geo.HeightField | None = None
        self.runtime = 0.0

    def __len__(self) -> int:
        return len(self.columns["t"])

    def append(self, record: dict) -> None:
        if len(self) and not record["t"] > self.columns["t"][-1]:
            raise DomainError("trace times must increase strictly")
        for name in COLUMNS:
            v = record.get(name, np.nan)
            self.columns[name].append(float(v))

    def column(self, name: str) -> np.ndarray:
        return np.frombuffer(self.columns[name], dtype=float).copy()

    def record(self, i: int) -> dict:
        out = {}
        for name in COLUMNS:
            v = self.columns[name][i]
            if name == "convex":
                out[name] = bool(v)
            elif not (name in SPARSE and np.isnan(v)):
                out[name] = v
        return out

    def records(self, every: int = 1):
        n = len(self)
        for i in range(0, n, every):
            yield self.record(i)
        if n and (n - 1) % every:
            yield self.record(n - 1)


def velocity(sample: cv.CurvatureSample) -> np.ndarray:
    """``V = −(H^s − H̄^s)``."""
    return -(sample.values - sample.average)


def weighted_mean(values: np.ndarray, field: geo.HeightField) -> float:
    """Arclength-weighted mean over the boundary."""
    J = field.jacobian
    return float(np.sum(values * J) / np.sum(J))


def cfl_dt(field: geo.HeightField, s: float, c_cfl: float) -> float:
    """``c_cfl (2π/N)^{1+s} / a_ref`` with ``a_ref = 2c_s (min h)^{−(2+s)/2}``."""
    a_ref = 2.0 * c_s(float(s)) * float(field.values.min()) ** (-(2.0 + s) / 2.0)
    return c_cfl * (2.0 * np.pi / field.N) ** (1.0 + s) / a_ref


def _sample(field: geo.HeightField, s: float, method: str) -> cv.CurvatureSample:
    return cv.curvature_field(field, s, method)


def initial_state(field: geo.HeightField, s: float, method: str = "boundary", center_tol: float = 1e-10) -> FlowState:
    """Normalize to area π about the centroid and evaluate the curvature."""
    field = geo.rescale_and_center(field, TARGET_AREA, center_tol)
    if not geo.is_convex(field):
        raise DomainError("initial field is not convex")
    return FlowState(0.0, field, 0.0, 0, _sample(field, s, method))


def _cheap_record(state: FlowState) -> dict:
    smp = state.last_sample
    return {
        "t": state.t,
        "dt": state.dt,
        "sup_H": float(np.max(smp.values)),
        "avg_H": smp.average,
        "dissipation": smp.dissipation,
        "sup_dev": float(np.max(np.abs(state.field.values - 1.0))),
        "convex": geo.is_convex(state.field),
    }


def monitors(state: FlowState, s: float, perimeter: bool = True) -> dict:
    """Curvature bound, slope constant, in/circum-radius, ``‖h‖_{C^{1+s}}`` and ``P_s``."""
    m = geo.shape_metrics(state.field, s)
    rec = _cheap_record(state)
    rec.update(slope_constant=m.slope_constant, r=m.inradius, R=m.circumradius,
               holder_C1s=norms.ck_beta_norm(state.field.values, 1, s, "circle", check=False))
    if perimeter:
        rec["P_s"] = cv.fractional_perimeter(state.field, s)
    return rec


def step(state: FlowState, s: float, dt: float, method: str = "boundary",
         center_tol: float = 1e-10) -> tuple[FlowState, dict]:
    """One explicit Euler step, renormalization and convexity check.

    Returns the new state and its record; ``volume_drift_raw`` is the area
    change before renormalization and ``mean_V`` the arclength mean of the
    velocity that drove the step.
    """
    f = state.field
    V = velocity(state.last_sample)
    raw = f.values + dt * V * f.jacobian / f.values
    if np.any(raw <= 0.0):
        raise FlowEventError("height became non-positive", state=state)
    raw_field = geo.HeightField(raw)
    drift = geo.area(raw_field) - geo.area(f)
    new = geo.rescale_and_center(raw_field, TARGET_AREA, center_tol)
    base = {"volume_drift_raw": drift, "mean_V": weighted_mean(V, f)}
    if not geo.is_convex(new):
        rec = dict(base, t=state.t + dt, dt=dt, convex=False, min_curvature=float(new.curvature.min()))
        raise FlowEventError("convexity lost", state=state, record=rec)
    nxt = FlowState(state.t + dt, new, dt, state.step_index + 1, _sample(new, s, method))
    rec = _cheap_record(nxt)
    rec.update(base)
    return nxt, rec


def run(config: FlowConfig, field: geo.HeightField | None = None,
        on_record: Callable[[int, dict, FlowState], None] | None = None) -> FlowTrace:
    """Integrate to ``config.T`` or until a halt event.

    A step is a pure function of ``(h, dt)``, so once a step returns ``h``
    unchanged bit for bit every later step with the same ``dt`` would too; those
    steps reuse the stored record instead of recomputing it.
    """
    t_start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    if field is None:
        field = make_shape(config.shape, config.N, rng)
    trace = FlowTrace({"s": config.s, "N": field.N, "seed": config.seed, "shape": config.shape,
                       "config_hash": config_hash(asdict(config)), "method": config.method})
    state = initial_state(field, config.s, config.method, config.center_tol)
    rec = monitors(state, config.s)
    trace.append(rec)
    if on_record:
        on_record(0, rec, state)
    last_monitor, last_perimeter = rec, rec
    fixed_dt = None
    while state.t < config.T * (1.0 - 1e-14):
        dt = config.dt if config.dt is not None else cfl_dt(state.field, config.s, config.c_cfl)
        dt = min(dt, config.T - state.t)
        i = state.step_index + 1
        if fixed_dt is not None and dt == fixed_dt:
            state = replace(state, t=state.t + dt, step_index=i)
            rec = dict(rec, t=state.t)
            for k in SPARSE:
                rec.pop(k, None)
        else:
            try:
                new, rec = step(state, config.s, dt, config.method, config.center_tol)
            except FlowEventError as exc:
                trace.halt = {"cause": str(exc), "t": state.t, "step": i, "record": exc.record}
                break
            fixed_dt = dt if np.array_equal(new.field.values, state.field.values) else None
            state = new
        if i % config.monitor_every == 0:
            if fixed_dt is None:
                last_monitor = monitors(state, config.s, perimeter=False)
            rec.update({k: last_monitor[k] for k in ("slope_constant", "r", "R", "holder_C1s")})
        if i % config.perimeter_every == 0:
            if fixed_dt is None:
                last_perimeter = {"P_s": cv.fractional_perimeter(state.field, config.s)}
            rec["P_s"] = last_perimeter["P_s"]
        trace.append(rec)
        if on_record:
            on_record(i, rec, state)
    trace.final_field = state.field
    trace.runtime = time.perf_counter() - t_start
    return trace


def fit_exponential_rate(trace: FlowTrace, window: tuple[float, float]) -> tuple[float, float, float]:
    """Least-squares fit ``log sup|h − 1| ≈ log C − c t`` on a time window.

    Returns ``(c, C, residual)`` with the RMS residual in log scale. The fit is
    degenerate when the window holds samples at or below the rounding floor
    ``1000 ε`` or when the signal is stationary (its logarithm varies by less
    than ``STATIONARY_LOG_SPAN``), since neither carries decay information.
    """
    t = trace.column("t")
    y = trace.column("sup_dev")
    lo, hi = window
    if not lo < hi or lo < t[0] - 1e-12 or hi > t[-1] * (1 + 1e-12):
        raise DomainError(f"window {window} outside the traced interval [{t[0]}, {t[-1]}]")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 3:
        raise DegenerateFitError("fewer than three samples in the window")
    ts, ys = t[sel], y[sel]
    if np.any(ys <= NOISE_FLOOR):
        raise DegenerateFitError(
            f"signal at the rounding floor on [{lo}, {hi}]: min sup|h-1| = {ys.min():.3e}")
    logy = np.log(ys)
    if np.ptp(logy) < STATIONARY_LOG_SPAN:
        raise DegenerateFitError(
            f"signal stationary on [{lo}, {hi}]: sup|h-1| = {ys.min():.3e}..{ys.max():.3e}")
    slope, icpt = np.polyfit(ts, logy, 1)
    resid = logy - (slope * ts + icpt)
    return float(-slope), float(np.exp(icpt)), float(np.sqrt(np.mean(resid**2)))


def summary(trace: FlowTrace, window: tuple[float, float]) -> dict:
    """Summary row: config hash, fitted rate, prefactor, residual, runtime and halt cause."""
    row = {"config_hash": trace.metadata["config_hash"], "c": np.nan, "C": np.nan, "residual": np.nan,
           "fit_error": "", "runtime": trace.runtime, "halt": trace.halt["cause"] if trace.halt else ""}
    try:
        row["c"], row["C"], row["residual"] = fit_exponential_rate(trace, window)
    except (DegenerateFitError, DomainError) as exc:
        row["fit_error"] = str(exc)
    return row
