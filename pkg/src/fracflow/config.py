"""Run configuration: parsing, defaults and validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from .curvature import METHODS
from .errors import ConfigError
from .geometry import is_power_of_two

SUBCOMMANDS = ("flow", "curvature", "spectral", "norms", "verify")
USES_ALPHA = ("spectral", "verify")


@dataclass(frozen=True)
class RunConfig:
    """All knobs of the command-line laboratories.

    ``alpha=None`` resolves to ``min(s, 1 − s)/2`` where a Hölder exponent is
    needed. ``dt`` overrides the flow's stability rule.
    """

    subcommand: str = "flow"
    s: float = 0.5
    alpha: float | None = None
    N: int = 256
    T: float = 20.0
    dt: float | None = None
    shape: str = "ellipse:1.3"
    seed: int = 0
    output_dir: str = "out"
    method: str = "boundary"
    n_quad: int = 128
    c_cfl: float = 0.2
    monitor_every: int = 50
    perimeter_every: int = 50
    trace_every: int = 1
    snapshot_every: int = 0
    corpus: int = 20
    threads: int = 1

    @property
    def holder_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 0.5 * min(self.s, 1.0 - self.s)

    def to_dict(self) -> dict:
        return asdict(self)


HELP = {
    "subcommand": "one of " + ", ".join(SUBCOMMANDS),
    "s": "fractional order in (0, 1)",
    "alpha": "Hölder exponent in (0, min(s, 1-s)); default min(s, 1-s)/2",
    "N": "grid size, power of two in [16, 4096]",
    "T": "time horizon",
    "dt": "fixed time step overriding the stability rule",
    "shape": "circle[:r] | ellipse[:a] | shifted_circle[:o] | polygon[:m[:sigma]] | random | file:PATH",
    "seed": "seed of the single random generator, 0 <= seed < 2**64",
    "output_dir": "directory receiving all artifacts",
    "method": "curvature rule: " + ", ".join(METHODS),
    "n_quad": "Gauss-Jacobi depth of the chord rule (checked against twice the depth)",
    "c_cfl": "stability-rule factor for the flow time step",
    "monitor_every": "steps between slope/radius/norm monitors",
    "perimeter_every": "steps between fractional-perimeter samples",
    "trace_every": "steps between JSON Lines trace records (the final step is always written)",
    "snapshot_every": "steps between height-field CSV snapshots (0 disables)",
    "corpus": "number of seeded functions in the spectral and norm corpora",
    "threads": "upper bound on worker threads",
}

_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT = {"N", "n_quad", "seed", "monitor_every", "perimeter_every", "trace_every", "snapshot_every", "corpus", "threads"}
_FLOAT = {"s", "alpha", "T", "dt", "c_cfl"}


def _coerce(key: str, value):
    if key not in _FIELDS:
        raise ConfigError(key, "unknown key")
    if value is None or (isinstance(value, str) and value.lower() in ("none", "null", "")):
        if key in ("alpha", "dt"):
            return None
        raise ConfigError(key, "a value is required")
    try:
        if key in _INT:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if key in _FLOAT:
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot interpret {value!r}: {exc}") from exc
    return str(value)


def validate(cfg: RunConfig, alpha_explicit: bool | None = None) -> RunConfig:
    """Check ranges; raise :class:`ConfigError` naming the offending key."""
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"must be one of {SUBCOMMANDS}")
    if not 0.0 < cfg.s < 1.0:
        raise ConfigError("s", f"must lie in (0, 1), got {cfg.s}")
    alpha_used = cfg.alpha is not None if alpha_explicit is None else alpha_explicit
    if alpha_used or cfg.subcommand in USES_ALPHA:
        a = cfg.holder_alpha
        if not 0.0 < a < min(cfg.s, 1.0 - cfg.s):
            raise ConfigError("alpha", f"must lie in (0, min(s, 1-s)) = (0, {min(cfg.s, 1 - cfg.s)}), got {a}")
    if not (is_power_of_two(cfg.N) and 16 <= cfg.N <= 4096):
        raise ConfigError("N", f"must be a power of two in [16, 4096], got {cfg.N}")
    if not cfg.T > 0.0:
        raise ConfigError("T", "must be positive")
    if cfg.dt is not None and not cfg.dt > 0.0:
        raise ConfigError("dt", "must be positive")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    if cfg.method not in METHODS:
        raise ConfigError("method", f"must be one of {METHODS}")
    if cfg.n_quad < 8:
        raise ConfigError("n_quad", "must be at least 8")
    if not cfg.c_cfl > 0.0:
        raise ConfigError("c_cfl", "must be positive")
    for key in ("monitor_every", "perimeter_every", "trace_every", "corpus", "threads"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, "must be at least 1")
    if cfg.snapshot_every < 0:
        raise ConfigError("snapshot_every", "must be non-negative")
    return cfg


def parse_pairs(text: str) -> dict:
    """Raw ``key -> value`` mapping from ``key=value`` tokens or one JSON object."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("<json>", "expected a JSON object")
        return dict(obj)
    out = {}
    for line in stripped.splitlines():
        line = line.split("#", 1)[0]
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ConfigError(key, "expected key=value")
            out[key.strip()] = value.strip()
    return out


def build_config(*layers: dict) -> RunConfig:
    """Apply layers in order (later wins) over the defaults, then validate."""
    cfg = RunConfig()
    explicit_alpha = False
    for layer in layers:
        vals = {k: _coerce(k, v) for k, v in layer.items()}
        explicit_alpha = explicit_alpha or "alpha" in vals and vals["alpha"] is not None
        cfg = replace(cfg, **vals)
    return validate(cfg, explicit_alpha)


def parse_config(text: str) -> RunConfig:
    """Validated :class:`RunConfig` from ``key=value`` text or a JSON object."""
    return build_config(parse_pairs(text))
