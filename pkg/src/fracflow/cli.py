"""Command-line entry point: ``fracflow <subcommand> [options]``.

Configuration precedence is flags > ``--config`` file > defaults;
``FRACFLOW_THREADS`` stands in for ``--threads`` when the flag is absent.
Numerical artifacts are pure functions of the configuration and seed;
wall-clock information is confined to ``manifest.json`` and ``summary.csv``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import curvature as cv
from . import flow as flowmod
from . import io
from . import norms
from . import spectral
from . import verify as verifymod
from .config import HELP, SUBCOMMANDS, RunConfig, build_config, parse_pairs
from .errors import ConfigError, FracFlowError
from .shapes import make_shape

CHECK_FAILED = 1
IO_FAILURE = 5


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def set_threads(n: int) -> int:
    """Bound the compiled kernels' thread pool; returns the effective count."""
    import numba

    eff = max(1, min(n, numba.config.NUMBA_NUM_THREADS))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        numba.set_num_threads(eff)
    return eff


class Outputs:
    """Single writer for one run directory; records every artifact for the manifest."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if p not in self.paths:
            self.paths.append(p)
        return p

    def manifest(self, cfg: RunConfig, checks: list[dict], started: str, status: int, error: dict | None):
        arts = [{"path": str(p.relative_to(self.root)), "sha256": io.sha256_file(p), "bytes": p.stat().st_size}
                for p in self.paths if p.exists()]
        doc = {"version": __version__, "subcommand": cfg.subcommand, "config": cfg.to_dict(),
               "config_hash": io.config_hash(cfg.to_dict()), "seed": cfg.seed, "checks": checks,
               "artifacts": arts, "exit_status": status, "error": error,
               "started": started, "finished": _now()}
        (self.root / "manifest.json").write_text(json.dumps(io._num(doc), indent=2, sort_keys=True) + "\n")


# subcommands


def run_flow(cfg: RunConfig, out: Outputs) -> tuple[int, list[dict]]:
    fc = flowmod.FlowConfig(s=cfg.s, N=cfg.N, T=cfg.T, shape=cfg.shape, seed=cfg.seed, c_cfl=cfg.c_cfl,
                            dt=cfg.dt, method=cfg.method, monitor_every=cfg.monitor_every,
                            perimeter_every=cfg.perimeter_every)
    trace_path = out.path("trace.jsonl")
    last = {}
    with trace_path.open("w", encoding="utf-8") as fh:

        def on_record(i, rec, state):
            last.update(i=i, rec=rec)
            if i % cfg.trace_every == 0:
                fh.write(io.dumps({"step": i, "seed": cfg.seed, **rec}) + "\n")
            if cfg.snapshot_every and i % cfg.snapshot_every == 0:
                io.write_field_csv(out.path(f"snapshots/h_{i:08d}.csv"), state.field)

        trace = flowmod.run(fc, on_record=on_record)
        if last and last["i"] % cfg.trace_every:
            fh.write(io.dumps({"step": last["i"], "seed": cfg.seed, **last["rec"]}) + "\n")
    io.write_field_csv(out.path("final_field.csv"), trace.final_field)
    row = flowmod.summary(trace, fc.window)
    sup_h = trace.column("sup_H")
    row.update(steps=len(trace) - 1, final_sup_dev=float(trace.column("sup_dev")[-1]),
               sup_H_ratio=float(sup_h.max() / sup_h[0]))
    header = list(row)
    io.write_columns_csv(out.path("summary.csv"), header, [[row[k] for k in header]])
    checks = flow_checks(trace)
    if trace.halt:
        io.write_jsonl(out.path("halt.jsonl"), [{"cause": trace.halt["cause"], "t": trace.halt["t"],
                                                  "step": trace.halt["step"], "record": trace.halt["record"]}])
        return flowmod.FlowEventError.exit_status, checks
    return 0, checks


def flow_checks(trace: flowmod.FlowTrace) -> list[dict]:
    """Structural checks evaluated on a finished trace."""
    mean_v = trace.column("mean_V")[1:]
    P = trace.column("P_s")
    P = P[~np.isnan(P)]
    rise = float(np.max(np.diff(P) / P[:-1])) if P.size > 1 else 0.0
    sup_h = trace.column("sup_H")
    return [
        {"check": "convexity_preserved", "pass": bool(trace.column("convex").min() == 1.0) and not trace.halt},
        {"check": "volume_conservation", "value": float(np.max(np.abs(mean_v), initial=0.0)),
         "pass": bool(np.max(np.abs(mean_v), initial=0.0) < 1e-4)},
        {"check": "perimeter_non_increasing", "value": rise, "pass": rise <= cv.RTOL_P},
        {"check": "curvature_bound", "value": float(sup_h.max() / sup_h[0]), "pass": bool(sup_h.max() <= 1.5 * sup_h[0])},
    ]


def run_curvature(cfg: RunConfig, out: Outputs) -> tuple[int, list[dict]]:
    field = make_shape(cfg.shape, cfg.N, np.random.default_rng(cfg.seed))
    smp = cv.curvature_field(field, cfg.s, cfg.method, cfg.n_quad)
    io.write_columns_csv(out.path("curvature.csv"), ["theta", "H"], zip(field.theta, smp.values))
    rec = {"shape": cfg.shape, "s": cfg.s, "N": cfg.N, "method": cfg.method, "n_quad": cfg.n_quad, "seed": cfg.seed,
           "average": smp.average, "dissipation": smp.dissipation, "min": float(smp.values.min()),
           "max": float(smp.values.max()), "perimeter": cv.fractional_perimeter(field, cfg.s)}
    checks = [{"check": "average_within_range", "pass": bool(smp.values.min() <= smp.average <= smp.values.max())}]
    if cfg.shape.startswith("circle"):
        r = float(field.values[0])
        ref = cv.circle_curvature(cfg.s, r)
        rec["closed_form"] = ref
        rel_std = float(np.std(smp.values) / np.mean(smp.values))
        checks.append({"check": "alexandrov_constancy", "value": rel_std, "pass": rel_std < 1e-6})
        checks.append({"check": "circle_closed_form", "value": abs(smp.average / ref - 1.0),
                       "pass": abs(smp.average / ref - 1.0) < 1e-6})
    io.write_jsonl(out.path("curvature.jsonl"), [rec])
    return 0, checks


def run_spectral(cfg: RunConfig, out: Outputs) -> tuple[int, list[dict]]:
    s, alpha = cfg.s, cfg.holder_alpha
    grid = sorted(set(np.round(np.linspace(0.05, 0.95, 19), 10).tolist()) | {s})
    rows = []
    for sv in grid:
        c = spectral.c_s(sv)
        rows.append([sv, c, spectral.c_s_alternative(sv)[0], spectral.c_s_closed_form(sv),
                     spectral.compute_symbol(1.0, sv)])
    io.write_columns_csv(out.path("symbol.csv"), ["s", "c_s", "c_s_alternative", "c_s_closed_form", "a_A1"], rows)
    rng = np.random.default_rng(cfg.seed)
    corpus = [spectral.random_forcing(rng, time_dependent=True) for _ in range(cfg.corpus)]
    dt = cfg.dt if cfg.dt is not None else cfg.T / 1024
    n_steps = int(np.ceil(cfg.T / dt - 1e-12))
    every = max(1, min(cfg.trace_every, n_steps))
    st = spectral.evolve(spectral.SpectralState(cfg.N, s), corpus[0], cfg.T, dt, 1.0, alpha=alpha, norm_every=every)
    io.write_jsonl(out.path("spectral_trace.jsonl"),
                   [{"seed": cfg.seed, **{k: r[k] for k in ("t", "sup_u", "norm_u_C1sa", "norm_f_Ca")}}
                    for r in st.history
                    if "norm_u_C1sa" in r])
    mp = max(spectral.max_principle_check(
        spectral.evolve(spectral.SpectralState(cfg.N, s), f, cfg.T, dt).history, cfg.T)["ratio"] for f in corpus)
    sch = spectral.schauder_constant(1.0, s, alpha, cfg.T, corpus, N=cfg.N, dt=dt)
    a = spectral.compute_symbol(1.0, s)
    eig = {k: spectral.mode_eigenvalue(k, 1.0, s) / (a * k ** (1.0 + s)) for k in (8, 16, 32)}
    summary = {"s": s, "alpha": alpha, "T": cfg.T, "N": cfg.N, "seed": cfg.seed, "c_s": spectral.c_s(s),
               "symbol": a, "max_principle_ratio": mp, "C_T": sch["C_T"], "schauder_ratios": sch["ratios"],
               "eigenvalue_ratios": [eig[k] for k in (8, 16, 32)]}
    io.write_jsonl(out.path("spectral_summary.jsonl"), [summary])
    checks = [{"check": "maximum_principle", "value": mp, "pass": mp <= 1.05},
              {"check": "symbol_quadrature_consistency", "value": list(eig.values()),
               "pass": all(0.9 <= v <= 1.1 for v in eig.values())},
              {"check": "schauder_constant_finite", "value": sch["C_T"], "pass": bool(np.isfinite(sch["C_T"]))}]
    return 0, checks


def run_norms(cfg: RunConfig, out: Outputs) -> tuple[int, list[dict]]:
    """Norm table in long form ``(function, norm, value, N)`` at ``N`` and ``2N``."""
    s = cfg.s
    gammas = (s, 1.0 + s)
    kmax = max(2, min(12, cfg.N // 8))
    rows, ratios, interp = [], {}, {}
    for n in (cfg.N, 2 * cfg.N):
        corpus = verifymod.lp_corpus(n, np.random.default_rng(cfg.seed), cfg.corpus, kmax=kmax)
        for i, u in enumerate(corpus):
            for g in gammas:
                d, f = norms.holder_norm(u, g), norms.fourier_holder_norm(u, g)
                rows += [[i, f"holder_{g:g}", d, n], [i, f"fourier_{g:g}", f, n]]
                ratios.setdefault((g, n), []).append(f / d)
            q = norms.interpolation_check(u, 0.5 * s, 1.0 + 0.5 * s, 0.5)
            rows.append([i, "interpolation_ratio", q, n])
            interp.setdefault(n, []).append(q)
    io.write_columns_csv(out.path("norms.csv"), ["function", "norm", "value", "N"], rows)

    def width(g, n):
        return max(ratios[g, n]) / min(ratios[g, n])

    changes = {f"{g:g}": abs(width(g, 2 * cfg.N) / width(g, cfg.N) - 1.0) for g in gammas}
    imax = {n: max(v) for n, v in interp.items()}
    summary = {"s": s, "N": cfg.N, "seed": cfg.seed, "corpus": cfg.corpus,
               "bands": {f"{g:g}": [min(ratios[g, cfg.N]), max(ratios[g, cfg.N])] for g in gammas},
               "band_width_change": changes, "interpolation_max": imax[cfg.N],
               "interpolation_max_doubled": imax[2 * cfg.N],
               "block_identity_error": verifymod.single_block_identity()}
    io.write_jsonl(out.path("norms.jsonl"), [summary])
    ichange = abs(imax[2 * cfg.N] / imax[cfg.N] - 1.0)
    checks = [{"check": "paley_block_identity", "value": summary["block_identity_error"],
               "pass": summary["block_identity_error"] < 1e-8},
              {"check": "littlewood_paley_band_stable", "value": max(changes.values()),
               "pass": max(changes.values()) < 0.25},
              {"check": "interpolation_stable", "value": ichange,
               "pass": bool(np.isfinite(imax[cfg.N]) and ichange < 0.2)}]
    return 0, checks


def run_verify(cfg: RunConfig, out: Outputs) -> tuple[int, list[dict]]:
    records = verifymod.run_suite(cfg.s, cfg.holder_alpha, cfg.seed)
    io.write_jsonl(out.path("verify.jsonl"), records)
    checks = [{"check": r["check"], "pass": r["pass"]} for r in records]
    return (0 if all(r["pass"] for r in records) else CHECK_FAILED), checks


RUNNERS = {"flow": run_flow, "curvature": run_curvature, "spectral": run_spectral,
           "norms": run_norms, "verify": run_verify}


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file with key=value lines or one JSON object")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one key (repeatable)")
    defaults = RunConfig()
    for f in fields(RunConfig):
        if f.name == "subcommand":
            continue
        common.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=argparse.SUPPRESS,
                            metavar=f.name.upper(), help=f"{HELP[f.name]} (default: {getattr(defaults, f.name)})")
    parser = argparse.ArgumentParser(prog="fracflow", description="Fractional curvature flow laboratory.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} laboratory")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    file_layer = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from exc
        file_layer = parse_pairs(text)
    env_layer = {"threads": environ["FRACFLOW_THREADS"]} if environ.get("FRACFLOW_THREADS") else {}
    set_layer = parse_pairs("\n".join(args.set)) if args.set else {}
    flag_layer = {k: v for k, v in vars(args).items() if k not in ("config", "set", "subcommand")}
    return build_config(file_layer, env_layer, set_layer, flag_layer, {"subcommand": args.subcommand})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _now()
    try:
        cfg = resolve_config(args)
    except FracFlowError as exc:
        print(json.dumps({"error": exc.code, "key": getattr(exc, "key", None), "message": str(exc)}), file=sys.stderr)
        return exc.exit_status
    try:
        out = Outputs(Path(cfg.output_dir))
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return IO_FAILURE
    set_threads(cfg.threads)
    error = None
    checks: list[dict] = []
    try:
        status, checks = RUNNERS[cfg.subcommand](cfg, out)
    except FracFlowError as exc:
        status = exc.exit_status
        error = {"code": exc.code, "message": str(exc)}
    except OSError as exc:
        status = IO_FAILURE
        error = {"code": "io", "message": str(exc)}
    out.manifest(cfg, checks, started, status, error)
    if error:
        print(json.dumps({"error": error["code"], "message": error["message"]}), file=sys.stderr)
    return status
