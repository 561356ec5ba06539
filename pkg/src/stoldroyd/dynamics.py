"""Deterministic drift of the truncated velocity/stress system.

The velocity drift splits into a stiff viscous part (handled implicitly by
the integrator) and an explicit part: minus the truncated self-advection plus
the stress-divergence coupling, Leray-projected.  The stress drift is fully
explicit: transport, relaxation, the bilinear rotation/slip form Q, the
deformation forcing, and the Ito correction coming from the Stratonovich
stress noise.

Quadratic terms are evaluated with dealiased physical-space products and then
cut to the spectral ball (in that order); the cutoff is the grid's truncation
radius.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    TensorField,
    VectorField,
    convect_tensor,
    convect_vector,
    divergence_tensor,
    gradient_vector,
    leray_project,
    tensor_matmul,
    truncate,
)

__all__ = [
    "PhysicalParams",
    "FlowState",
    "deformation",
    "vorticity",
    "q_form",
    "advect_vector",
    "advect_tensor",
    "VelocityDrift",
    "velocity_drift",
    "stress_drift",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants: viscosity, relaxation, slip, coupling weights.

    `s` is the working Sobolev index used by energy monitoring and noise
    growth bookkeeping.  `nonlinear` switches the quadratic terms (advection
    and Q) on or off; the linear stress/velocity couplings always stay on, so
    False gives the Stokes-type linearization.
    """

    nu: float
    a: float
    b: float
    mu1: float
    mu2: float
    s: float = 2.0
    nonlinear: bool = True

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.a < 0:
            raise ValueError(f"a must be >= 0, got {self.a}")
        if not -1.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [-1, 1], got {self.b}")
        if self.mu1 < 0:
            raise ValueError(f"mu1 must be >= 0, got {self.mu1}")
        if self.mu2 < 0:
            raise ValueError(f"mu2 must be >= 0, got {self.mu2}")


@dataclass(frozen=True)
class FlowState:
    """Velocity/stress pair at one instant; fields are never mutated."""

    t: float
    v: VectorField
    tau: TensorField

    def with_fields(self, v: VectorField, tau: TensorField, t: float | None = None) -> "FlowState":
        return FlowState(self.t if t is None else t, v, tau)


def deformation(v: VectorField) -> TensorField:
    """Symmetric velocity-gradient part D(v) = (grad v + grad v^T)/2.

    The output is symmetric to the last bit: entry (i,j) and entry (j,i) are
    the same floating-point sum.
    """
    g = gradient_vector(v).coeffs
    c = 0.5 * (g + np.swapaxes(g, 0, 1))
    return TensorField(v.grid, c, symmetric=True)


def vorticity(v: VectorField) -> TensorField:
    """Skew part W(v) = (grad v - grad v^T)/2; W + W^T = 0 exactly."""
    g = gradient_vector(v).coeffs
    c = 0.5 * (g - np.swapaxes(g, 0, 1))
    return TensorField(v.grid, c, symmetric=False)


def q_form(tau: TensorField, v: VectorField, b: float) -> TensorField:
    """Rotation/slip bilinear form Q = tau W - W tau - b (D tau + tau D).

    For symmetric tau, W tau = -(tau W)^T and D tau = (tau D)^T, so both
    groups are assembled as an explicit symmetrization P + P^T — the result
    carries zero symmetry defect by construction.  Products are dealiased.
    """
    w = vorticity(v)
    d = deformation(v)
    tw = tensor_matmul(tau, w).coeffs
    rotation = tw + np.swapaxes(tw, 0, 1)
    td = tensor_matmul(tau, d).coeffs
    slip = td + np.swapaxes(td, 0, 1)
    return TensorField(v.grid, rotation - b * slip, symmetric=True)


def advect_vector(v: VectorField, u: VectorField) -> VectorField:
    """Truncated transport (v . grad) u."""
    return truncate(convect_vector(v, u), v.grid.truncation_radius)


def advect_tensor(v: VectorField, tau: TensorField) -> TensorField:
    """Truncated transport (v . grad) tau."""
    return truncate(convect_tensor(v, tau), v.grid.truncation_radius)


@dataclass(frozen=True)
class VelocityDrift:
    """Velocity drift split for the semi-implicit scheme.

    `nonstiff` is Leray-projected and truncated: -(v.grad)v + mu1 div(tau).
    `viscous` is nu * Laplacian(v), returned separately so the integrator can
    treat it implicitly; `total` recombines them for diagnostics.
    """

    nonstiff: VectorField
    viscous: VectorField

    @property
    def total(self) -> VectorField:
        return VectorField(
            self.nonstiff.grid,
            self.nonstiff.coeffs + self.viscous.coeffs,
            div_free=True,
        )


def velocity_drift(state: FlowState, params: PhysicalParams) -> VelocityDrift:
    """Assemble the velocity drift at the current state."""
    grid = state.v.grid
    coeffs = params.mu1 * divergence_tensor(state.tau).coeffs
    if params.nonlinear:
        coeffs = coeffs - advect_vector(state.v, state.v).coeffs
    nonstiff = leray_project(VectorField(grid, coeffs))
    viscous = VectorField(grid, -params.nu * grid.xi_sq * state.v.coeffs, div_free=state.v.div_free)
    return VelocityDrift(nonstiff=nonstiff, viscous=viscous)


def stress_drift(state: FlowState, params: PhysicalParams, stress_noise=None) -> TensorField:
    """Assemble the stress drift at the current state.

    -(v.grad)tau - a tau - Q(tau, grad v) + mu2 D(v), plus the Ito correction
    (1/2) S^2(tau) when a stress-noise instance is supplied (S is its linear
    action; the correction converts the Stratonovich product to Ito form).
    Quadratic pieces are truncated to the spectral ball.
    """
    grid = state.v.grid
    n = grid.truncation_radius
    coeffs = -params.a * state.tau.coeffs + params.mu2 * deformation(state.v).coeffs
    if params.nonlinear:
        coeffs = coeffs - advect_tensor(state.v, state.tau).coeffs
        coeffs = coeffs - truncate(q_form(state.tau, state.v, params.b), n).coeffs
    symmetric = state.tau.symmetric
    if stress_noise is not None:
        correction = stress_noise.s_squared(state.tau)
        coeffs = coeffs + 0.5 * truncate(correction, n).coeffs
        symmetric = symmetric and getattr(stress_noise, "preserves_symmetry", False)
    return TensorField(grid, coeffs, symmetric=symmetric)
