import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfdyn.neural import DivergenceError
from cfdyn.signal import write_csv
from cfdyn.systems import (
    DoubleMassSpec,
    VdpSpec,
    gen_double_mass,
    gen_vdp_sim,
    gen_vdp_truth,
    load_measurements,
    rk4,
    vdp_truth_rhs,
    vdp_truth_states,
)


class TestDoubleMass:
    def test_initial_value(self):
        x0 = 1.28 * math.cos(-7.7) + 0.677 - 0.009
        assert gen_double_mass().samples[0, 0] == pytest.approx(x0, abs=1e-12)
        assert x0 == pytest.approx(0.864, abs=1e-3)

    def test_length_and_rate(self):
        y = gen_double_mass()
        assert y.n_steps == 1000 and y.sample_rate_hz == pytest.approx(10.0)
        assert y.times[-1] == pytest.approx(99.9)

    def test_deterministic(self):
        assert np.array_equal(gen_double_mass().samples, gen_double_mass().samples)

    def test_invalid(self):
        with pytest.raises(ValueError):
            DoubleMassSpec(dt=0.0)


class TestVdp:
    def test_unforced_equivalence(self):
        spec = VdpSpec(b=0.0, a_tilde=5.0, duration=100 * 0.05)
        np.testing.assert_allclose(gen_vdp_truth(spec).samples, gen_vdp_sim(spec).samples, atol=1e-6)

    def test_rk4_fourth_order(self):
        spec = VdpSpec(duration=2.0)
        rhs = lambda s: vdp_truth_rhs(s, spec.a, spec.b, spec.omega)
        T = 1.0

        def end_state(dt):
            return rk4(rhs, spec.initial_state, dt, int(round(T / dt)) + 1)[-1]

        ref = end_state(0.01 / 4)
        e1 = np.linalg.norm(end_state(0.01) - ref)
        e2 = np.linalg.norm(end_state(0.005) - ref)
        # against a dt/4 reference the ideal ratio is (1 - 4**-4) / (2**-4 - 4**-4) = 17
        assert 16 * 0.7 <= e1 / e2 <= 16 * 1.3

    def test_harmonic_forcing_invariant(self):
        # the (u, v) block does not see (x, y); b=0 keeps the slow-forcing truth bounded
        spec = VdpSpec(omega=2 * np.pi * 0.1, b=0.0)
        s = vdp_truth_states(spec)
        energy = spec.omega**2 * s[:, 2] ** 2 + s[:, 3] ** 2
        assert len(s) == 1000
        assert np.max(np.abs(energy / energy[0] - 1)) < 1e-6

    def test_fast_forcing_decays_at_rk4_rate(self):
        # at omega*dt ~ 0.56 the RK4 amplification |R(i omega dt)| < 1 is visible
        spec = VdpSpec()
        s = vdp_truth_states(spec)
        energy = spec.omega**2 * s[:, 2] ** 2 + s[:, 3] ** 2
        z = 1j * spec.omega * spec.dt
        amp = abs(1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24) ** 2
        expected = amp ** np.arange(len(s))
        np.testing.assert_allclose(energy / energy[0], expected, rtol=1e-9)

    def test_limit_cycle_amplitude(self):
        spec = VdpSpec(duration=200.0)
        x = gen_vdp_sim(spec).samples[0]
        assert np.abs(x[-1000:]).max() == pytest.approx(2.0, rel=0.1)

    def test_observes_position_only(self):
        spec = VdpSpec()
        assert gen_vdp_truth(spec).n_channels == 1
        np.testing.assert_array_equal(gen_vdp_truth(spec).samples[0], vdp_truth_states(spec)[:, 0])
        assert gen_vdp_truth(spec).sample_rate_hz == pytest.approx(20.0)

    def test_divergence_reports_step(self):
        with pytest.raises(DivergenceError) as info:
            with np.errstate(over="ignore", invalid="ignore"):
                rk4(lambda s: s * s, [1.0], 1.0, 50)
        assert info.value.step > 0

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            VdpSpec(initial_state=(1.0, 0.0))
        with pytest.raises(ValueError):
            VdpSpec(dt=-1.0)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2))
    def test_sim_starts_at_truth_position(self, x0, y0):
        spec = VdpSpec(duration=1.0, initial_state=(x0, y0, 1.0, 0.0))
        assert gen_vdp_sim(spec).samples[0, 0] == gen_vdp_truth(spec).samples[0, 0] == x0


def test_load_measurements_round_trip(tmp_path):
    y = gen_double_mass()
    write_csv(y, tmp_path / "m.csv")
    back = load_measurements(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.samples, y.samples)
