"""Drift assembly: deformation/vorticity, the Q form, advection, couplings."""
import math

import numpy as np
import pytest

from stoldroyd.dynamics import (
    FlowState,
    PhysicalParams,
    advect_tensor,
    advect_vector,
    deformation,
    q_form,
    stress_drift,
    velocity_drift,
    vorticity,
)
from stoldroyd.spectral import (
    ScalarField,
    TensorField,
    VectorField,
    dealiased_product,
    divergence_defect,
    divergence_tensor,
    gradient_vector,
    hs_norm,
    l2_inner,
    leray_project,
    make_grid,
    random_field,
    symmetry_defect,
    to_physical,
    truncate,
)

import oracles

GRID = make_grid(2, 64, 2 * math.pi, 16)
PARAMS = PhysicalParams(nu=0.1, a=0.5, b=0.3, mu1=0.7, mu2=0.9)


def ball_field(kind, seed, grid=GRID, alpha=4.0):
    """Random field truncated to the spectral ball (admissible dynamics data)."""
    f = random_field(grid, alpha, kind, seed=seed)
    return truncate(f, grid.truncation_radius)


def zero_state(grid=GRID):
    v = VectorField(grid, np.zeros((grid.dim,) + grid.shape, dtype=complex), div_free=True)
    tau = TensorField(grid, np.zeros((grid.dim, grid.dim) + grid.shape, dtype=complex), symmetric=True)
    return FlowState(0.0, v, tau)


class TestPhysicalParams:
    def test_slip_parameter_bounds(self):
        with pytest.raises(ValueError, match=r"b must lie in \[-1, 1\]"):
            PhysicalParams(nu=0.1, a=0.0, b=1.5, mu1=1.0, mu2=1.0)
        PhysicalParams(nu=0.1, a=0.0, b=1.0, mu1=1.0, mu2=1.0)
        PhysicalParams(nu=0.1, a=0.0, b=-1.0, mu1=1.0, mu2=1.0)

    def test_negative_viscosity_rejected(self):
        with pytest.raises(ValueError, match="nu"):
            PhysicalParams(nu=-0.1, a=0.0, b=0.0, mu1=1.0, mu2=1.0)

    def test_zero_viscosity_allowed(self):
        p = PhysicalParams(nu=0.0, a=0.0, b=0.0, mu1=0.0, mu2=0.0)
        assert p.nu == 0.0

    def test_negative_relaxation_rejected(self):
        with pytest.raises(ValueError, match="a must"):
            PhysicalParams(nu=0.1, a=-2.0, b=0.0, mu1=1.0, mu2=1.0)


class TestDeformationVorticity:
    def test_zero_velocity(self):
        st = zero_state()
        assert np.all(deformation(st.v).coeffs == 0)
        assert np.all(vorticity(st.v).coeffs == 0)

    def test_single_mode_formula(self):
        """D_hat = (i xi (x) v_hat + i v_hat (x) xi) / 2 at one mode."""
        k = (3, -2)
        vhat = np.array([1.0 + 0.5j, -0.7 + 0.2j])
        c = np.zeros((2,) + GRID.shape, dtype=complex)
        c[:, k[0], k[1]] = vhat
        d = deformation(VectorField(GRID, c))
        xi = np.array([3.0, -2.0])
        want = 0.5j * (np.outer(vhat, xi) + np.outer(xi, vhat))
        got = d.coeffs[:, :, k[0], k[1]]
        assert np.allclose(got, want, rtol=1e-14, atol=0)

    def test_deformation_exactly_symmetric(self):
        d = deformation(ball_field("vector", 1))
        assert symmetry_defect(d) == 0.0
        assert d.symmetric

    def test_vorticity_exactly_skew(self):
        w = vorticity(ball_field("vector", 2))
        assert np.array_equal(w.coeffs, -np.swapaxes(w.coeffs, 0, 1))

    def test_parts_sum_to_gradient(self):
        """D + W reconstructs grad v (up to the one rounding each half takes)."""
        v = ball_field("vector", 3)
        total = deformation(v).coeffs + vorticity(v).coeffs
        g = gradient_vector(v).coeffs
        assert np.max(np.abs(total - g)) <= 1e-15 * np.max(np.abs(g))


class TestQForm:
    def test_identity_stress_gives_slip_term_only(self):
        """tau = I commutes with W, so Q = -2 b D(v)."""
        v = ball_field("vector", 4)
        c = np.zeros((2, 2) + GRID.shape, dtype=complex)
        c[0, 0, 0, 0] = 1.0
        c[1, 1, 0, 0] = 1.0
        tau = TensorField(GRID, c, symmetric=True)
        b = 0.25
        q = q_form(tau, v, b)
        want = -2.0 * b * deformation(v).coeffs
        scale = np.max(np.abs(want))
        assert np.max(np.abs(q.coeffs - want)) <= 1e-13 * scale

    def test_zero_velocity_gives_zero(self):
        tau = ball_field("tensor", 5)
        q = q_form(tau, zero_state().v, 0.7)
        assert np.all(q.coeffs == 0)

    def test_corotational_energy_neutrality(self):
        """b = 0: (Q(tau, grad v), tau)_L2 vanishes by the trace identity."""
        for seed in range(10):
            v = ball_field("vector", seed)
            tau = ball_field("tensor", seed + 50)
            q = q_form(tau, v, 0.0)
            val = abs(l2_inner(q, tau))
            scale = hs_norm(q, 0.0) * hs_norm(tau, 0.0)
            assert val <= 1e-10 * scale

    def test_output_exactly_symmetric(self):
        v = ball_field("vector", 6)
        tau = ball_field("tensor", 7)
        q = q_form(tau, v, 0.4)
        assert symmetry_defect(q) == 0.0

    def test_bilinearity(self):
        v = ball_field("vector", 8)
        tau = ball_field("tensor", 9)
        base = q_form(tau, v, 0.4)
        doubled = q_form(TensorField(GRID, 2.0 * tau.coeffs, symmetric=True), v, 0.4)
        assert np.array_equal(doubled.coeffs, 2.0 * base.coeffs)  # power of two: exact
        scaled = q_form(TensorField(GRID, 0.3 * tau.coeffs, symmetric=True), v, 0.4)
        assert np.allclose(scaled.coeffs, 0.3 * base.coeffs, rtol=1e-12, atol=1e-16)


class TestAdvection:
    def test_constant_field_not_transported(self):
        v = ball_field("vector", 10)
        c = np.zeros((2,) + GRID.shape, dtype=complex)
        c[:, 0, 0] = [2.0, -1.0]
        u = VectorField(GRID, c)
        assert np.all(advect_vector(v, u).coeffs == 0)

    def test_skew_symmetry_after_truncation(self):
        for seed in range(10):
            v = ball_field("vector", seed + 100)
            u = ball_field("vector", seed + 200)
            val = abs(l2_inner(advect_vector(v, u), u))
            scale = hs_norm(v, 1.0) * hs_norm(u, 1.0) * hs_norm(u, 0.0)
            assert val <= 1e-10 * scale

    def test_divergence_form_identity(self):
        """(v.grad)u = div(v (x) u) for divergence-free v."""
        v = ball_field("vector", 11)
        u = ball_field("vector", 12)
        adv = advect_vector(v, u)
        pv, pu = to_physical(v), to_physical(u)
        # row-wise divergence wants T_ab = u_a v_b: (div T)_a = (v.grad)u_a + u_a div v
        outer = np.einsum("a...,b...->ab...", pu, pv)
        chat = np.fft.fftn(outer, axes=(-2, -1), norm="forward") * GRID.dealias_mask
        div_form = truncate(divergence_tensor(TensorField(GRID, chat)), GRID.truncation_radius)
        scale = hs_norm(adv, 0.0)
        assert np.max(np.abs(adv.coeffs - div_form.coeffs)) <= 1e-10 * scale

    def test_tensor_transport_preserves_symmetry(self):
        v = ball_field("vector", 13)
        tau = ball_field("tensor", 14)
        out = advect_tensor(v, tau)
        assert symmetry_defect(out) == 0.0


class TestVelocityDrift:
    def test_rest_state(self):
        d = velocity_drift(zero_state(), PARAMS)
        assert np.all(d.total.coeffs == 0)

    def test_single_mode_viscous_decay_only(self):
        """Perpendicular single mode has no self-interaction: drift = -nu |xi|^2 v."""
        k = (3, 4)
        c = np.zeros((2,) + GRID.shape, dtype=complex)
        c[0][k] = -4.0
        c[1][k] = 3.0
        c[0][-k[0], -k[1]] = -4.0  # Hermitian partner
        c[1][-k[0], -k[1]] = 3.0
        v = VectorField(GRID, c, div_free=True)
        tau = zero_state().tau
        d = velocity_drift(FlowState(0.0, v, tau), PARAMS)
        want = -PARAMS.nu * 25.0 * c
        assert np.max(np.abs(d.total.coeffs - want)) <= 1e-12 * np.max(np.abs(want))

    def test_output_divergence_free(self):
        st = FlowState(0.0, ball_field("vector", 15), ball_field("tensor", 16))
        d = velocity_drift(st, PARAMS)
        assert divergence_defect(d.nonstiff) <= 1e-12

    def test_coupling_cancellation(self):
        """(div tau, v) + (D(v), tau) = 0: the coupling does no net work."""
        for seed in range(10):
            v = ball_field("vector", seed + 300)
            tau = ball_field("tensor", seed + 400)
            total = l2_inner(divergence_tensor(tau), v) + l2_inner(deformation(v), tau)
            scale = hs_norm(tau, 1.0) * hs_norm(v, 1.0)
            assert abs(total) <= 1e-10 * scale


class TestStressDrift:
    def test_pure_relaxation(self):
        tau = ball_field("tensor", 17)
        st = FlowState(0.0, zero_state().v, tau)
        d = stress_drift(st, PARAMS)
        assert np.array_equal(d.coeffs, -PARAMS.a * tau.coeffs)

    def test_pure_deformation_forcing(self):
        v = ball_field("vector", 18)
        st = FlowState(0.0, v, zero_state().tau)
        d = stress_drift(st, PARAMS)
        assert np.array_equal(d.coeffs, PARAMS.mu2 * deformation(v).coeffs)

    def test_one_mode_against_direct_convolution(self):
        """Assemble every drift term independently at one mode by summing the
        convolution in index space (no FFT) and compare."""
        grid = make_grid(2, 16, 2 * math.pi, 4)
        v = truncate(random_field(grid, 5.0, "vector", seed=19), 4)
        tau = truncate(random_field(grid, 5.0, "tensor", seed=20), 4)
        st = FlowState(0.0, v, tau)
        params = PhysicalParams(nu=0.2, a=0.4, b=0.6, mu1=0.0, mu2=0.8)
        drift = stress_drift(st, params)

        k = (2, 1)
        kmax = grid.dealias_kmax
        # direct convolution of (v . grad) tau and Q at mode k
        adv = np.zeros((2, 2), dtype=complex)
        q = np.zeros((2, 2), dtype=complex)
        for p0 in range(-kmax, kmax + 1):
            for p1 in range(-kmax, kmax + 1):
                q0, q1 = k[0] - p0, k[1] - p1
                if abs(q0) > kmax or abs(q1) > kmax:
                    continue
                vp = v.coeffs[:, p0, p1]
                tq = tau.coeffs[:, :, q0, q1]
                xi_q = np.array([q0, q1], dtype=float)
                adv += (1j * vp @ xi_q) * tq
                # grad v at p, tau at q
                gv = 1j * np.outer(v.coeffs[:, p0, p1], np.array([p0, p1], float))
                d_p = 0.5 * (gv + gv.T)
                w_p = 0.5 * (gv - gv.T)
                q += tq @ w_p - w_p @ tq - params.b * (d_p @ tq + tq @ d_p)
        xi_k = np.array(k, dtype=float)
        gv_k = 1j * np.outer(v.coeffs[:, k[0], k[1]], xi_k)
        want = (
            -adv
            - params.a * tau.coeffs[:, :, k[0], k[1]]
            - q
            + params.mu2 * 0.5 * (gv_k + gv_k.T)
        )
        got = drift.coeffs[:, :, k[0], k[1]]
        assert np.allclose(got, want, rtol=1e-10, atol=1e-14)

    def test_stokes_mode_drops_quadratic_terms(self):
        v = ball_field("vector", 21)
        tau = ball_field("tensor", 22)
        st = FlowState(0.0, v, tau)
        linear = PhysicalParams(nu=0.1, a=0.5, b=0.3, mu1=0.7, mu2=0.9, nonlinear=False)
        d = stress_drift(st, linear)
        want = -linear.a * tau.coeffs + linear.mu2 * deformation(v).coeffs
        assert np.array_equal(d.coeffs, want)
        dv = velocity_drift(st, linear)
        want_v = leray_project(
            VectorField(GRID, linear.mu1 * divergence_tensor(tau).coeffs)
        ).coeffs
        assert np.array_equal(dv.nonstiff.coeffs, want_v)
