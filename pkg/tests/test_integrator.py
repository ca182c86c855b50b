import math

import numpy as np
import pytest

from megastable.exceptions import DivergenceError, OutOfRangeError
from megastable.models import DenseTrajectory, IntegratorConfig, SystemParams
from megastable.services import DynamicsService, IntegratorService


def harmonic(t, state, lookup):
    x, y = state
    return (y, -x)


def test_harmonic_oscillator_period():
    traj = IntegratorService.integrate_dde(harmonic, 1.0, 2.0 * math.pi)
    x, y = IntegratorService.interpolate(traj, 2.0 * math.pi)
    assert x == pytest.approx(1.0, abs=1e-6)
    assert y == pytest.approx(0.0, abs=1e-6)


def test_ode_exponential_decay():
    traj = IntegratorService.integrate_ode(lambda t, s: (-s[0], 0.0), (1.0, 0.0), 1.0)
    x, _ = IntegratorService.interpolate(traj, 1.0)
    assert x == pytest.approx(math.exp(-1.0), abs=1e-8)


def test_zero_field_stays_constant():
    traj = IntegratorService.integrate_dde(lambda t, s, lookup: (0.0, 0.0), 2.5, 10.0)
    np.testing.assert_array_equal(traj.x, 2.5)
    np.testing.assert_array_equal(traj.y, 0.0)


def test_cubic_hermite_reproduces_cubic():
    # x = t³, y = 3t²
    traj = DenseTrajectory.from_samples([0.0, 1.0], [[0.0, 0.0], [1.0, 3.0]], [[0.0, 0.0], [3.0, 6.0]])
    x, y = IntegratorService.interpolate(traj, 0.5)
    assert x == pytest.approx(0.125, abs=1e-12)
    assert y == pytest.approx(0.75, abs=1e-12)


def test_interpolate_nodes_and_pre_history(params):
    traj = IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(params), 2.0, 5.0)
    assert IntegratorService.interpolate(traj, -5.0) == (2.0, 0.0)
    i = 123
    x, y = IntegratorService.interpolate(traj, float(traj.times[i]))
    assert x == traj.states[i, 0]
    assert y == traj.states[i, 1]


def test_interpolate_beyond_t_final():
    traj = IntegratorService.integrate_dde(harmonic, 1.0, 1.0)
    with pytest.raises(OutOfRangeError):
        IntegratorService.interpolate(traj, 1.5)


def test_non_positive_t_final():
    with pytest.raises(OutOfRangeError):
        IntegratorService.integrate_dde(harmonic, 1.0, 0.0)


def test_last_step_lands_on_t_final():
    traj = IntegratorService.integrate_dde(harmonic, 1.0, 1.005, IntegratorConfig(h=0.01))
    assert traj.times[-1] == 1.005
    assert traj.t_final == 1.005
    assert np.all(np.diff(traj.times) > 0)


def test_convergence_order(params):
    """h, h/2, h/4 的 Richardson 估计接近四阶"""
    rhs = DynamicsService.make_dde_rhs(params)
    values = [
        IntegratorService.interpolate(IntegratorService.integrate_dde(rhs, 1.0, 50.0, IntegratorConfig(h=h)), 50.0)[0]
        for h in (0.04, 0.02, 0.01)
    ]
    order = math.log2(abs(values[0] - values[1]) / abs(values[1] - values[2]))
    assert 3.5 <= order <= 4.5


def test_reflection_symmetry(params):
    rhs = DynamicsService.make_dde_rhs(params)
    plus = IntegratorService.integrate_dde(rhs, 1.0, 100.0)
    minus = IntegratorService.integrate_dde(rhs, -1.0, 100.0)
    scale = max(1.0, float(np.max(np.abs(plus.x))))
    assert np.max(np.abs(plus.states + minus.states)) <= 1e-9 * scale


def test_deterministic(params):
    rhs = DynamicsService.make_dde_rhs(params)
    a = IntegratorService.integrate_dde(rhs, 1.0, 20.0)
    b = IntegratorService.integrate_dde(rhs, 1.0, 20.0)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.times, b.times)


def test_delayed_queries_stay_within_tau0(params):
    lags = []

    def recording(t, state, lookup):
        def logged(s):
            lags.append(t - s)
            return lookup(s)
        return DynamicsService.dde_rhs(t, state, logged, params)

    IntegratorService.integrate_dde(recording, 3.0, 30.0)
    lags = np.asarray(lags)
    assert lags.min() >= -1e-12
    assert lags.max() <= params.tau0 + 1e-12


def test_segments_are_contiguous(params):
    traj = IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(params), 1.0, 0.1)
    segments = traj.segments
    assert segments[0].t_start == 0.0
    for a, b in zip(segments, segments[1:]):
        assert a.t_end == b.t_start
        assert a.state_end == b.state_start


def test_zero_delay_uses_fixed_point_iteration():
    def instant(t, state, lookup):
        x, y = state
        return (y, -lookup(t)[0])

    traj = IntegratorService.integrate_dde(instant, 1.0, 2.0 * math.pi)
    assert traj.metadata['fixed_point_steps'] > 0
    assert traj.warnings == []
    x, _ = IntegratorService.interpolate(traj, 2.0 * math.pi)
    assert x == pytest.approx(1.0, abs=1e-5)


def test_fixed_point_cap_is_reported_not_fatal():
    def instant(t, state, lookup):
        x, y = state
        return (y, -lookup(t)[0])

    cfg = IntegratorConfig(max_fixed_point_iters=1, fixed_point_tol=1e-300)
    traj = IntegratorService.integrate_dde(instant, 1.0, 1.0, cfg)
    assert len(traj.warnings) > 0
    assert traj.t_final == 1.0


def test_divergence():
    with pytest.raises(DivergenceError) as info:
        IntegratorService.integrate_dde(lambda t, s, lookup: (s[1], 100.0 * s[0]), 1.0, 200.0)
    assert 0.0 < info.value.payload['t_fail'] < 200.0


def test_divergence_through_delay_term():
    p = SystemParams(zeta=-5.0)
    with pytest.raises(DivergenceError):
        IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(p), 1.0, 400.0)


def test_ode_divergence():
    with pytest.raises(DivergenceError):
        IntegratorService.integrate_ode(lambda t, s: (s[1], 100.0 * s[0]), (1.0, 0.0), 200.0)
