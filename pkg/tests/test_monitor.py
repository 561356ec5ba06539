"""Energy functional entries, stopping detection, CSV format."""
import io
import math

import numpy as np
import pytest

from stoldroyd.dynamics import FlowState, PhysicalParams
from stoldroyd.monitor import (
    CSV_COLUMNS,
    EnergyRecord,
    MonitorConfig,
    StoppingEvent,
    detect_stop,
    energy,
    gradient_energy,
    write_energy_csv,
)
from stoldroyd.spectral import (
    TensorField,
    VectorField,
    gradient_vector,
    hs_norm,
    make_grid,
    random_field,
    to_physical,
    truncate,
)

import oracles

GRID = make_grid(2, 64, 2 * math.pi, 16)
PARAMS = PhysicalParams(nu=0.1, a=0.2, b=0.0, mu1=0.5, mu2=2.0)


def make_record(t, e_n, finite=True):
    val = e_n if finite else float("nan")
    return EnergyRecord(t=t, v_hs2=val, tau_hs2=0.0, gradv_hs2=0.0, cum_diss=0.0,
                        e_n=val, sym_defect=0.0)


def zero_state():
    v = VectorField(GRID, np.zeros((2,) + GRID.shape, dtype=complex), div_free=True)
    tau = TensorField(GRID, np.zeros((2, 2) + GRID.shape, dtype=complex), symmetric=True)
    return FlowState(0.0, v, tau)


class TestEnergy:
    def test_zero_state_all_zero(self):
        rec = energy(zero_state(), 2.0, PARAMS)
        assert (rec.v_hs2, rec.tau_hs2, rec.gradv_hs2, rec.cum_diss, rec.e_n) == (0,) * 5

    def test_single_mode_multiplier_values(self):
        """|xi|^2 = 3, amplitude 1, s = 1: ||v||^2 = 4 and ||grad v||^2 = 12."""
        g3 = make_grid(3, 8, 2 * math.pi, 2)
        c = np.zeros((3,) + g3.shape, dtype=complex)
        c[0][1, 1, 1] = 1.0
        v = VectorField(g3, c)
        tau = TensorField(g3, np.zeros((3, 3) + g3.shape, dtype=complex), symmetric=True)
        params = PhysicalParams(nu=0.5, a=0.0, b=0.0, mu1=1.0, mu2=1.0)
        rec = energy(FlowState(0.0, v, tau), 1.0, params)
        assert rec.v_hs2 == pytest.approx(4.0, rel=1e-14)
        assert rec.gradv_hs2 == pytest.approx(12.0, rel=1e-14)
        assert rec.e_n == pytest.approx(4.0, rel=1e-14)

    def test_gradient_energy_matches_tensor_norm(self):
        v = truncate(random_field(GRID, 4.0, "vector", seed=1), 16)
        tau = truncate(random_field(GRID, 4.0, "tensor", seed=2), 16)
        st = FlowState(0.0, v, tau)
        direct = gradient_energy(st, 1.5)
        via_field = hs_norm(gradient_vector(v), 1.5) ** 2
        assert direct == pytest.approx(via_field, rel=1e-12)

    def test_s0_matches_physical_quadrature(self):
        v = truncate(random_field(GRID, 4.0, "vector", seed=3), 16)
        tau = truncate(random_field(GRID, 4.0, "tensor", seed=4), 16)
        rec = energy(FlowState(0.0, v, tau), 0.0, PARAMS)
        assert rec.v_hs2 == pytest.approx(
            oracles.rms_norm_components(to_physical(v), 2) ** 2, rel=1e-12
        )
        assert rec.tau_hs2 == pytest.approx(
            oracles.rms_norm_components(to_physical(tau), 2) ** 2, rel=1e-12
        )

    def test_weighted_combination(self):
        v = truncate(random_field(GRID, 4.0, "vector", seed=5), 16)
        tau = truncate(random_field(GRID, 4.0, "tensor", seed=6), 16)
        rec = energy(FlowState(0.0, v, tau), 2.0, PARAMS, cum_diss=3.0)
        want = PARAMS.mu2 * rec.v_hs2 + PARAMS.mu1 * rec.tau_hs2 + 2 * PARAMS.mu2 * PARAMS.nu * 3.0
        assert rec.e_n == pytest.approx(want, rel=1e-14)


class TestDetectStop:
    def test_zero_trajectory_survives(self):
        records = [make_record(0.001 * k, 0.0) for k in range(100)]
        assert detect_stop(records, 1.0) is None

    def test_monotone_crossing(self):
        dt = 0.001
        records = [make_record(dt * k, 0.1 * k) for k in range(100)]
        evt = detect_stop(records, 0.55)
        assert evt is not None and evt.kind == "threshold_N"
        assert evt.t_stop == pytest.approx(6 * dt)  # first sample with 0.1k > 0.55

    def test_equality_is_not_a_crossing(self):
        records = [make_record(0.0, 1.0), make_record(0.1, 1.0)]
        assert detect_stop(records, 1.0) is None

    def test_nan_is_divergence(self):
        records = [make_record(0.0, 0.5), make_record(0.1, 0.0, finite=False)]
        evt = detect_stop(records, 10.0)
        assert evt.kind == "divergence"
        assert evt.t_stop == 0.1

    def test_cap_is_divergence_even_above_threshold(self):
        records = [make_record(0.0, 5e12)]
        evt = detect_stop(records, 1.0)
        assert evt.kind == "divergence"

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(7)
        e = np.cumsum(rng.uniform(0, 0.2, size=200))
        records = [make_record(0.01 * k, float(v)) for k, v in enumerate(e)]

        def t_stop(n):
            evt = detect_stop(records, n)
            return evt.t_stop if evt else float("inf")

        thresholds = sorted(rng.uniform(0.0, e[-1] * 1.2, size=20))
        stops = [t_stop(n) for n in thresholds]
        assert stops == sorted(stops)

    def test_threshold_validated(self):
        with pytest.raises(ValueError, match="threshold"):
            detect_stop([], 0.0)
        with pytest.raises(ValueError, match="threshold"):
            MonitorConfig(threshold=-1.0)


class TestCsv:
    def test_exact_column_order_and_comments(self):
        records = [make_record(0.0, 1.0), make_record(0.5, 2.0)]
        buf = io.StringIO()
        write_energy_csv(records, buf, header_comments=["config: abc", "seed: 42"])
        lines = buf.getvalue().splitlines()
        assert lines[0] == "# config: abc"
        assert lines[1] == "# seed: 42"
        assert lines[2] == "t,v_hs2,tau_hs2,gradv_hs2,cum_diss,E_N,sym_defect"
        assert len(lines) == 5
        assert CSV_COLUMNS == ("t", "v_hs2", "tau_hs2", "gradv_hs2", "cum_diss", "E_N", "sym_defect")

    def test_floats_round_trip(self):
        rec = EnergyRecord(t=1 / 3, v_hs2=math.pi, tau_hs2=0.1, gradv_hs2=2e-17,
                           cum_diss=7.0, e_n=math.e, sym_defect=0.0)
        buf = io.StringIO()
        write_energy_csv([rec], buf)
        row = buf.getvalue().splitlines()[1].split(",")
        assert float(row[0]) == rec.t
        assert float(row[1]) == rec.v_hs2
        assert float(row[5]) == rec.e_n
