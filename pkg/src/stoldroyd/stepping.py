"""Semi-implicit Euler–Maruyama time stepping with noise recording and replay.

One step, in order:

1. explicit velocity update: v* = v + dt * (nonstiff drift - jump
   compensator) + Wiener increment sigma(t, v) dW1;
2. per-mode implicit viscous solve v* <- v* / (1 + nu dt |xi|^2), which is
   unconditionally contractive (and the identity when nu = 0);
3. jumps from (t, t+dt] applied sequentially in time order to the
   post-diffusion state — each uses the pre-jump (left-limit) velocity;
4. Leray projection and spectral-ball cutoff;
5. explicit stress update tau <- cutoff[ tau + dt * stress drift
   (Ito correction included) + S(tau) dW2 ].

Everything stochastic comes through a `StepNoise`, so a recorded `NoisePath`
re-fed to the same configuration reproduces the trajectory bitwise, and one
path can drive runs at different spectral cutoffs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import FlowState, PhysicalParams, stress_drift, velocity_drift
from .monitor import EnergyRecord, MonitorConfig, StoppingEvent, detect_stop, energy
from .noise import (
    JumpConfig,
    JumpOperator,
    NoisePath,
    NoiseSampler,
    SigmaInstance,
    StepNoise,
    StressNoiseInstance,
    WienerQConfig,
)
from .spectral import SpectralGrid, TensorField, VectorField, leray_project, make_grid, truncate

__all__ = [
    "StepperConfig",
    "NoiseModel",
    "SimulationResult",
    "step",
    "simulate",
    "simulate_replay",
    "save_checkpoint",
    "load_checkpoint",
]

SCHEME = "semi_implicit_euler_maruyama"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class StepperConfig:
    """Fixed-step scheme parameters; the horizon is rounded up to whole steps."""

    dt: float
    horizon: float
    scheme: str = SCHEME
    record_noise: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.scheme != SCHEME:
            raise ValueError(f"unknown scheme {self.scheme!r} (only {SCHEME!r} is implemented)")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    @property
    def actual_horizon(self) -> float:
        """n_steps * dt — reported because the horizon rounds up."""
        return self.n_steps * self.dt


@dataclass
class NoiseModel:
    """The channels actually driving a run; None switches a channel off."""

    wiener: WienerQConfig | None = None
    sigma: SigmaInstance | None = None
    stress: StressNoiseInstance | None = None
    jump: JumpOperator | None = None

    @property
    def J(self) -> int:
        return self.wiener.J if self.wiener is not None else 0

    def sampler(self, rng: np.random.Generator) -> NoiseSampler:
        jump_config = self.jump.config if self.jump is not None else JumpConfig(rate=0.0)
        return NoiseSampler(self.J, jump_config, rng)

    def signature(self, grid: SpectralGrid) -> tuple:
        return (grid.dim, float(grid.box_length), self.J)


def step(
    state: FlowState,
    params: PhysicalParams,
    noise: NoiseModel,
    sn: StepNoise,
    dt: float,
) -> FlowState:
    """Advance one step; see the module docstring for the update order."""
    grid = state.v.grid
    n = grid.truncation_radius
    with np.errstate(over="ignore", invalid="ignore"):
        vd = velocity_drift(state, params)
        v_star = state.v.coeffs + dt * vd.nonstiff.coeffs
        if noise.jump is not None:
            v_star = v_star - dt * noise.jump.compensator(state.v).coeffs
        if noise.sigma is not None:
            v_star = v_star + noise.sigma.apply(state.t, state.v, sn.dw1).coeffs
        v_star = v_star / (1.0 + params.nu * dt * grid.xi_sq)
        v_new = VectorField(grid, v_star)
        if noise.jump is not None:
            for _, z in sn.jumps:
                inc = truncate(noise.jump.jump_increment(v_new, z), n)
                v_new = VectorField(grid, v_new.coeffs + inc.coeffs)
        v_new = leray_project(truncate(v_new, n))

        sd = stress_drift(state, params, noise.stress)
        tau_c = state.tau.coeffs + dt * sd.coeffs
        symmetric = state.tau.symmetric and sd.symmetric
        if noise.stress is not None:
            tau_c = tau_c + sn.dw2 * noise.stress.s_apply(state.tau).coeffs
            symmetric = symmetric and noise.stress.preserves_symmetry
        tau_new = truncate(TensorField(grid, tau_c, symmetric=symmetric), n)
    return FlowState(state.t + dt, v_new, tau_new)


@dataclass
class SimulationResult:
    records: list[EnergyRecord]
    event: StoppingEvent
    final_state: FlowState
    noise_path: NoisePath | None = None

    @property
    def stopped(self) -> bool:
        return self.event.kind != "horizon"


def _check_replay_compatible(path: NoisePath, stepper: StepperConfig, signature: tuple) -> None:
    if path.dt != stepper.dt:
        raise ValueError(f"noise path dt {path.dt} does not match stepper dt {stepper.dt}")
    if tuple(path.signature) != tuple(signature):
        raise ValueError(
            f"noise path basis {tuple(path.signature)} does not match run basis {tuple(signature)}"
        )
    if path.n_steps < stepper.n_steps:
        raise ValueError(
            f"noise path holds {path.n_steps} steps, run needs {stepper.n_steps}"
        )


def simulate(
    initial: FlowState,
    params: PhysicalParams,
    noise: NoiseModel,
    stepper: StepperConfig,
    monitor: MonitorConfig,
    rng: np.random.Generator | None = None,
    noise_path: NoisePath | None = None,
    observer=None,
) -> SimulationResult:
    """Run until the horizon, a threshold crossing, or divergence.

    Noise comes from `rng` (fresh sampling) or from `noise_path` (replay of a
    recorded run; dt, basis, and length are validated).  `observer(i, state)`
    is called after every accepted step.  Deterministic: (initial, configs,
    seed) fixes the trajectory bitwise.
    """
    grid = initial.v.grid
    signature = noise.signature(grid)
    if noise_path is not None:
        _check_replay_compatible(noise_path, stepper, signature)
        sampler = None
    else:
        if rng is None:
            raise ValueError("simulate needs an rng unless a noise_path is replayed")
        sampler = noise.sampler(rng)

    records = [energy(initial, monitor.s, params, 0.0)]
    recorded_steps: list[StepNoise] | None = [] if stepper.record_noise else None
    state = initial
    event = detect_stop(records[-1:], monitor.threshold)
    if event is None:
        cum_diss = 0.0
        for i in range(stepper.n_steps):
            sn = noise_path.step_noise(i) if noise_path is not None else sampler.sample_step(stepper.dt)
            if recorded_steps is not None:
                recorded_steps.append(sn)
            cum_diss += stepper.dt * records[-1].gradv_hs2
            state = step(state, params, noise, sn, stepper.dt)
            rec = energy(state, monitor.s, params, cum_diss)
            records.append(rec)
            if observer is not None:
                observer(i + 1, state)
            event = detect_stop(records[-1:], monitor.threshold)
            if event is not None:
                break
    if event is None:
        event = StoppingEvent(kind="horizon", t_stop=stepper.actual_horizon, e_n=records[-1].e_n)

    path = None
    if recorded_steps is not None:
        path = NoisePath.record(stepper.dt, signature, recorded_steps)
    return SimulationResult(records=records, event=event, final_state=state, noise_path=path)


def simulate_replay(
    initial: FlowState,
    params: PhysicalParams,
    noise: NoiseModel,
    stepper: StepperConfig,
    monitor: MonitorConfig,
    noise_path: NoisePath,
    observer=None,
) -> SimulationResult:
    """Drive a run from recorded increments (possibly at a different spectral
    cutoff than the recording run — the basis is cutoff-independent)."""
    return simulate(
        initial, params, noise, stepper, monitor, rng=None, noise_path=noise_path, observer=observer
    )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(filename, state: FlowState, rng: np.random.Generator, step_index: int) -> None:
    """Full spectral state plus RNG state, enough to resume a run exactly."""
    grid = state.v.grid
    np.savez(
        filename,
        version=np.int64(CHECKPOINT_VERSION),
        t=np.float64(state.t),
        step_index=np.int64(step_index),
        dim=np.int64(grid.dim),
        modes_per_axis=np.int64(grid.modes_per_axis),
        box_length=np.float64(grid.box_length),
        truncation_radius=np.float64(grid.truncation_radius),
        dealias_fraction=np.float64(grid.dealias_fraction),
        v=state.v.coeffs,
        tau=state.tau.coeffs,
        tau_symmetric=np.bool_(state.tau.symmetric),
        rng_state=np.bytes_(json.dumps(rng.bit_generator.state).encode()),
    )


def load_checkpoint(filename) -> tuple[FlowState, np.random.Generator, int]:
    with np.load(filename) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(
                f"checkpoint version {version} not supported (expected {CHECKPOINT_VERSION})"
            )
        grid = make_grid(
            int(data["dim"]),
            int(data["modes_per_axis"]),
            float(data["box_length"]),
            float(data["truncation_radius"]),
            float(data["dealias_fraction"]),
        )
        v = VectorField(grid, data["v"].copy(), div_free=True)
        tau = TensorField(grid, data["tau"].copy(), symmetric=bool(data["tau_symmetric"]))
        state = FlowState(float(data["t"]), v, tau)
        rng = np.random.default_rng()
        rng.bit_generator.state = json.loads(bytes(data["rng_state"]).decode())
        step_index = int(data["step_index"])
    return state, rng, step_index
