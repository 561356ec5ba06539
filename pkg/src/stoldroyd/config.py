"""INI run configuration: parsing, validation, canonical serialization, hashing.

The format is flat ``key = value`` sections, chosen to stay hand-editable and
diff-friendly across experiment sweeps.  Parsing is schema-driven: unknown
sections or keys are rejected by name, every value is coerced to its declared
type with an error naming the offending field, and defaults are materialized
so that parse -> serialize -> parse is the identity on configurations.

Numeric bounds are NOT re-checked here; they live with the objects that own
them (grid, parameters, noise, stepper, monitor), and ``materialize`` builds
all of those up front so a bad value fails before any run starts, with the
owning module's message (which names the field and its bound).
"""
from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass

from .dynamics import FlowState, PhysicalParams
from .monitor import MonitorConfig
from .noise import (
    JumpConfig,
    JumpOperator,
    SigmaInstance,
    StressNoiseInstance,
    WienerQConfig,
    rng_for_run,
)
from .spectral import (
    SpectralGrid,
    TensorField,
    VectorField,
    hs_norm,
    make_grid,
    random_field,
    truncate,
)
from .stepping import NoiseModel, StepperConfig

# Stream index reserved for drawing initial data, disjoint from ensemble run
# indices (which are small nonnegative integers).
INITIAL_DATA_STREAM = 2**62

_REQUIRED = object()

# section -> key -> (type tag, default).  Type tags: int, float, bool, str,
# floats (comma-separated list).  _REQUIRED marks keys without defaults.
_SCHEMA = {
    "grid": {
        "dim": ("int", _REQUIRED),
        "modes_per_axis": ("int", _REQUIRED),
        "box_length": ("float", 2.0 * math.pi),
        "truncation_radius": ("float", 0.0),  # 0 means "use the dealias limit"
        "dealias_fraction": ("float", 2.0 / 3.0),
    },
    "params": {
        "nu": ("float", _REQUIRED),
        "a": ("float", _REQUIRED),
        "b": ("float", _REQUIRED),
        "mu1": ("float", _REQUIRED),
        "mu2": ("float", _REQUIRED),
        "s": ("float", 2.0),
        "nonlinear": ("bool", True),
    },
    "noise": {
        "lambda0": ("float", 0.0),
        "j_modes": ("int", 0),
        "decay": ("float", 2.0),
        "c0": ("float", 0.0),
        "c1": ("float", 0.0),
        "h_kind": ("str", "identity"),
        "c_h": ("float", 0.0),
        "bump_width": ("float", 1.0),
        "jump_rate": ("float", 0.0),
        "gamma_kind": ("str", "constant"),
        "gamma0": ("float", 0.0),
        "z_min": ("float", 0.0),
        "z_max": ("float", 1.0),
    },
    "initial": {
        "alpha": ("float", 5.0),
        "v_scale": ("float", 1.0),
        "tau_scale": ("float", 1.0),
    },
    "stepper": {
        "dt": ("float", _REQUIRED),
        "horizon": ("float", _REQUIRED),
        "record_noise": ("bool", False),
    },
    "monitor": {
        "threshold": ("float", _REQUIRED),
        "s_monitor": ("float", 2.0),
    },
    "seeds": {
        "master_seed": ("int", _REQUIRED),
    },
    "ensemble": {
        "n_runs": ("int", 100),
        "deltas": ("floats", (0.01,)),
        "randomize_initial": ("bool", False),
    },
    "refine": {
        "cutoffs": ("floats", (8.0, 16.0)),
        "n_paths": ("int", 20),
    },
}

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


@dataclass(frozen=True)
class RunConfig:
    """Fully typed, fully defaulted contents of one configuration file."""

    grid_dim: int
    grid_modes_per_axis: int
    grid_box_length: float
    grid_truncation_radius: float
    grid_dealias_fraction: float
    nu: float
    a: float
    b: float
    mu1: float
    mu2: float
    s: float
    nonlinear: bool
    lambda0: float
    j_modes: int
    decay: float
    c0: float
    c1: float
    h_kind: str
    c_h: float
    bump_width: float
    jump_rate: float
    gamma_kind: str
    gamma0: float
    z_min: float
    z_max: float
    init_alpha: float
    init_v_scale: float
    init_tau_scale: float
    dt: float
    horizon: float
    record_noise: bool
    threshold: float
    s_monitor: float
    master_seed: int
    ensemble_n_runs: int
    ensemble_deltas: tuple[float, ...]
    ensemble_randomize_initial: bool
    refine_cutoffs: tuple[float, ...]
    refine_n_paths: int


_FIELD_OF = {
    ("grid", "dim"): "grid_dim",
    ("grid", "modes_per_axis"): "grid_modes_per_axis",
    ("grid", "box_length"): "grid_box_length",
    ("grid", "truncation_radius"): "grid_truncation_radius",
    ("grid", "dealias_fraction"): "grid_dealias_fraction",
    ("params", "nu"): "nu",
    ("params", "a"): "a",
    ("params", "b"): "b",
    ("params", "mu1"): "mu1",
    ("params", "mu2"): "mu2",
    ("params", "s"): "s",
    ("params", "nonlinear"): "nonlinear",
    ("noise", "lambda0"): "lambda0",
    ("noise", "j_modes"): "j_modes",
    ("noise", "decay"): "decay",
    ("noise", "c0"): "c0",
    ("noise", "c1"): "c1",
    ("noise", "h_kind"): "h_kind",
    ("noise", "c_h"): "c_h",
    ("noise", "bump_width"): "bump_width",
    ("noise", "jump_rate"): "jump_rate",
    ("noise", "gamma_kind"): "gamma_kind",
    ("noise", "gamma0"): "gamma0",
    ("noise", "z_min"): "z_min",
    ("noise", "z_max"): "z_max",
    ("initial", "alpha"): "init_alpha",
    ("initial", "v_scale"): "init_v_scale",
    ("initial", "tau_scale"): "init_tau_scale",
    ("stepper", "dt"): "dt",
    ("stepper", "horizon"): "horizon",
    ("stepper", "record_noise"): "record_noise",
    ("monitor", "threshold"): "threshold",
    ("monitor", "s_monitor"): "s_monitor",
    ("seeds", "master_seed"): "master_seed",
    ("ensemble", "n_runs"): "ensemble_n_runs",
    ("ensemble", "deltas"): "ensemble_deltas",
    ("ensemble", "randomize_initial"): "ensemble_randomize_initial",
    ("refine", "cutoffs"): "refine_cutoffs",
    ("refine", "n_paths"): "refine_n_paths",
}


def _coerce(section: str, key: str, tag: str, raw: str):
    where = f"[{section}] {key}"
    text = raw.strip()
    try:
        if tag == "int":
            return int(text)
        if tag == "float":
            return float(text)
        if tag == "bool":
            word = text.lower()
            if word not in _BOOL_WORDS:
                raise ValueError
            return _BOOL_WORDS[word]
        if tag == "floats":
            parts = [p.strip() for p in text.split(",") if p.strip()]
            if not parts:
                raise ValueError
            return tuple(float(p) for p in parts)
        return text
    except ValueError:
        raise ValueError(f"{where}: expected {tag}, got {text!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse INI text into a RunConfig, rejecting anything off-schema."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            tag, _ = _SCHEMA[section][key]
            values[_FIELD_OF[(section, key)]] = _coerce(section, key, tag, raw)

    missing = []
    for section, keys in _SCHEMA.items():
        for key, (tag, default) in keys.items():
            field = _FIELD_OF[(section, key)]
            if field in values:
                continue
            if default is _REQUIRED:
                missing.append(f"[{section}] {key}")
            else:
                values[field] = default
    if missing:
        raise ValueError("missing required config keys: " + ", ".join(missing))
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def _format(tag: str, value) -> str:
    if tag == "bool":
        return "true" if value else "false"
    if tag == "float":
        return repr(float(value))
    if tag == "floats":
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical INI text with every key explicit; stable across round trips."""
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key, (tag, _) in keys.items():
            value = getattr(cfg, _FIELD_OF[(section, key)])
            out.write(f"{key} = {_format(tag, value)}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(cfg: RunConfig) -> str:
    """Short content hash of the canonical serialization, for provenance."""
    digest = hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()
    return digest[:16]


# ---------------------------------------------------------------------------
# Builders: RunConfig -> live objects
# ---------------------------------------------------------------------------

def build_grid(cfg: RunConfig) -> SpectralGrid:
    radius = cfg.grid_truncation_radius if cfg.grid_truncation_radius > 0.0 else None
    return make_grid(cfg.grid_dim, cfg.grid_modes_per_axis, cfg.grid_box_length,
                     radius, cfg.grid_dealias_fraction)


def build_params(cfg: RunConfig) -> PhysicalParams:
    return PhysicalParams(nu=cfg.nu, a=cfg.a, b=cfg.b, mu1=cfg.mu1, mu2=cfg.mu2,
                          s=cfg.s, nonlinear=cfg.nonlinear)


def build_noise(cfg: RunConfig, grid: SpectralGrid) -> NoiseModel:
    """Channels switch off at zero: j_modes for the velocity noise, c_h for
    the stress noise, jump_rate for the jump channel."""
    wiener = None
    sigma = None
    if cfg.j_modes > 0:
        wiener = WienerQConfig(lambda0=cfg.lambda0, J=cfg.j_modes, decay=cfg.decay)
        sigma = SigmaInstance(grid, wiener, c0=cfg.c0, c1=cfg.c1)
    stress = None
    if cfg.c_h != 0.0:
        stress = StressNoiseInstance(grid, cfg.h_kind, c_h=cfg.c_h,
                                     bump_width=cfg.bump_width)
    jump = None
    if cfg.jump_rate > 0.0:
        jump = JumpOperator(grid, JumpConfig(rate=cfg.jump_rate, z_min=cfg.z_min,
                                             z_max=cfg.z_max, gamma_kind=cfg.gamma_kind,
                                             gamma0=cfg.gamma0))
    return NoiseModel(wiener=wiener, sigma=sigma, stress=stress, jump=jump)


def build_stepper(cfg: RunConfig) -> StepperConfig:
    return StepperConfig(dt=cfg.dt, horizon=cfg.horizon, record_noise=cfg.record_noise)


def build_monitor(cfg: RunConfig) -> MonitorConfig:
    return MonitorConfig(threshold=cfg.threshold, s=cfg.s_monitor)


def build_initial(cfg: RunConfig, grid: SpectralGrid, master_seed: int) -> FlowState:
    """Deterministic initial data from the master seed's reserved stream.

    Fields are drawn with spectral decay ``init_alpha``, ball-truncated, and
    scaled so their H^s norms (s from [params]) equal v_scale and tau_scale;
    a zero scale gives the zero field.
    """
    rng = rng_for_run(master_seed, INITIAL_DATA_STREAM)
    v = truncate(random_field(grid, cfg.init_alpha, "vector", rng=rng),
                 grid.truncation_radius)
    tau = truncate(random_field(grid, cfg.init_alpha, "tensor", rng=rng),
                   grid.truncation_radius)
    v_norm = hs_norm(v, cfg.s)
    tau_norm = hs_norm(tau, cfg.s)
    v_scale = cfg.init_v_scale / v_norm if cfg.init_v_scale != 0.0 and v_norm > 0.0 else 0.0
    tau_scale = cfg.init_tau_scale / tau_norm if cfg.init_tau_scale != 0.0 and tau_norm > 0.0 else 0.0
    return FlowState(
        0.0,
        VectorField(grid, v_scale * v.coeffs, div_free=v.div_free),
        TensorField(grid, tau_scale * tau.coeffs, symmetric=tau.symmetric),
    )


@dataclass(frozen=True)
class MaterializedRun:
    """Everything a command needs, validated before any stepping happens."""

    grid: SpectralGrid
    params: PhysicalParams
    noise: NoiseModel
    stepper: StepperConfig
    monitor: MonitorConfig
    initial: FlowState
    master_seed: int


def materialize(cfg: RunConfig, master_seed: int | None = None) -> MaterializedRun:
    """Build every object a run needs; any invalid field raises here.

    ``master_seed`` overrides the config's seed (the --seed flag).
    """
    seed = cfg.master_seed if master_seed is None else master_seed
    grid = build_grid(cfg)
    params = build_params(cfg)
    noise = build_noise(cfg, grid)
    stepper = build_stepper(cfg)
    monitor = build_monitor(cfg)
    initial = build_initial(cfg, grid, seed)
    return MaterializedRun(grid=grid, params=params, noise=noise, stepper=stepper,
                           monitor=monitor, initial=initial, master_seed=seed)
