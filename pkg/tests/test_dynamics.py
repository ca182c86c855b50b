import math

import numpy as np
import pytest

from megastable.models import PulseParams, SystemParams
from megastable.services import DynamicsService, IntegratorService


def constant_history(x):
    return lambda s: (x, 0.0)


class TestDelay:

    def test_zero_velocity_gives_full_delay(self, params):
        assert DynamicsService.delay(0.0, params) == pytest.approx(0.8)

    def test_delay_vanishes(self, params):
        v = math.pi / (2.0 * params.lam)
        assert DynamicsService.delay(v, params) == pytest.approx(0.0, abs=1e-15)

    def test_half_delay(self, params):
        v = math.pi / (4.0 * params.lam)
        assert DynamicsService.delay(v, params) == pytest.approx(0.4)

    def test_even_and_bounded(self, params):
        vs = np.linspace(-20.0, 20.0, 401)
        taus = np.array([DynamicsService.delay(v, params) for v in vs])
        np.testing.assert_allclose(taus, taus[::-1], atol=1e-15)
        assert taus.min() >= 0.0
        assert taus.max() <= params.tau0


class TestDdeRhs:

    def test_origin_is_equilibrium(self, params):
        assert DynamicsService.dde_rhs(0.0, (0.0, 0.0), constant_history(0.0), params) == (0.0, 0.0)

    def test_initial_acceleration(self, params):
        fx, fy = DynamicsService.dde_rhs(0.0, (1.0, 0.0), constant_history(1.0), params)
        assert fx == 0.0
        assert fy == pytest.approx(-0.35)

    def test_zero_delay_reduces_to_ode(self):
        p = SystemParams(tau0=0.0)

        def lookup(s):
            assert s == 2.0
            return (0.7, 0.0)

        _, fy = DynamicsService.dde_rhs(2.0, (0.7, 0.3), lookup, p)
        assert fy == pytest.approx(-p.zeta * 0.3 - (p.k + p.alpha) * 0.7)

    def test_odd_symmetry(self, params):
        plus = DynamicsService.dde_rhs(1.0, (0.4, 1.3), constant_history(0.9), params)
        minus = DynamicsService.dde_rhs(1.0, (-0.4, -1.3), constant_history(-0.9), params)
        assert plus == tuple(-v for v in minus)

    def test_pulse_enters_acceleration(self, params):
        pulse = PulseParams(F0=2.0, Omega=0.5, t0=0.0, N=1)
        _, free = DynamicsService.dde_rhs(0.0, (0.0, 0.0), constant_history(0.0), params)
        _, driven = DynamicsService.dde_rhs(0.0, (0.0, 0.0), constant_history(0.0), params, pulse)
        assert driven - free == pytest.approx(2.0)


class TestPulse:

    def test_duration(self):
        pulse = PulseParams(F0=6.0, Omega=0.59, t0=300.0, N=5)
        assert pulse.delta_t == pytest.approx(53.247, abs=1e-3)

    def test_closed_window(self):
        pulse = PulseParams(F0=6.0, Omega=0.59, phi=0.3, t0=300.0, N=5)
        assert DynamicsService.pulse_force(299.999, pulse) == 0.0
        assert DynamicsService.pulse_force(300.0, pulse) == pytest.approx(6.0 * math.cos(0.59 * 300.0 + 0.3))
        end = pulse.t_end
        assert DynamicsService.pulse_force(end, pulse) == pytest.approx(6.0 * math.cos(0.59 * end + 0.3))
        assert DynamicsService.pulse_force(end + 1e-6, pulse) == 0.0

    def test_no_pulse(self):
        assert DynamicsService.pulse_force(10.0, None) == 0.0
        assert DynamicsService.pulse_force(300.0, PulseParams(F0=0.0, t0=300.0)) == 0.0


class TestLowMemory:

    def test_origin(self, params):
        assert DynamicsService.low_memory_rhs(0.0, (0.0, 0.0), params) == (0.0, 0.0)

    def test_restoring_force(self, params):
        _, fy = DynamicsService.low_memory_rhs(0.0, (1.0, 0.0), params)
        assert fy == pytest.approx(-0.35)

    def test_damping_cancels(self, params):
        # cos²(λy) = ζ/(ατ0) 时净阻尼为零
        y = math.acos(math.sqrt(params.zeta / (params.alpha * params.tau0))) / params.lam
        _, fy = DynamicsService.low_memory_rhs(0.0, (1.0, y), params)
        assert fy == pytest.approx(-0.35, abs=1e-12)

    def test_energy_conserved_without_damping(self):
        p = SystemParams(zeta=0.0, tau0=0.0)
        traj = IntegratorService.integrate_ode(DynamicsService.make_low_memory_rhs(p), (1.0, 0.0), 100.0)
        energy = DynamicsService.lyapunov_energy((traj.x, traj.y), p)
        assert np.max(np.abs(energy - energy[0])) < 1e-6

    def test_close_to_dde_for_short_delay(self):
        p = SystemParams(tau0=0.01)
        dde = IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(p), 1.0, 10.0)
        ode = IntegratorService.integrate_ode(DynamicsService.make_low_memory_rhs(p), (1.0, 0.0), 10.0)
        assert abs(dde.x[-1] - ode.x[-1]) < 1e-3


class TestAveragedRhs:

    def test_origin(self, params):
        assert DynamicsService.averaged_rhs(0.0, params) == pytest.approx(0.0, abs=1e-15)

    def test_pure_damping(self):
        assert DynamicsService.averaged_field(2.0, 1.0, 0.0) == pytest.approx(-2.0)
        p = SystemParams(alpha=0.0, zeta=1.0)
        assert DynamicsService.averaged_rhs(2.0, p) == pytest.approx(-2.0)

    def test_vectorised(self, params):
        r = np.linspace(0.0, 30.0, 31)
        values = DynamicsService.averaged_field(r, params.mu, params.eps)
        scalar = [DynamicsService.averaged_rhs(float(v), params) for v in r]
        np.testing.assert_allclose(values, scalar, atol=1e-14)


class TestLyapunovEnergy:

    def test_values(self, params):
        assert DynamicsService.lyapunov_energy((0.0, 0.0), params) == 0.0
        assert DynamicsService.lyapunov_energy((1.0, 0.0), params) == pytest.approx(0.175)
        assert DynamicsService.lyapunov_energy((0.0, 2.0), params) == pytest.approx(2.0)

    def test_array_input(self, params):
        x = np.array([1.0, 0.0])
        y = np.array([0.0, 2.0])
        np.testing.assert_allclose(DynamicsService.lyapunov_energy((x, y), params), [0.175, 2.0])
