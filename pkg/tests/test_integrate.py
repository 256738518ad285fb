"""Closed-loop integrator: closed forms, order, determinism, positivity."""

from __future__ import annotations

import math

import numpy as np
import pytest

from seirvax import (
    ConstantVax,
    GainConstraintError,
    ImmuneFeedback,
    IntegratorConfig,
    ModelParams,
    NonFiniteStateError,
    SeirState,
    SusceptibleLinear,
    Trajectory,
    ZeroVax,
    integrate,
    positivity_events,
)


class TestBasics:
    def test_disease_free_is_fixed(self, p1):
        cfg = IntegratorConfig(t_end=50.0, dt=0.05, sampling_stride=10)
        tr = integrate(SeirState(1000.0, 0.0, 0.0, 0.0), p1, ZeroVax(), cfg)
        assert np.all(tr.S == 1000.0)
        assert np.all(tr.E == 0.0) and np.all(tr.I == 0.0) and np.all(tr.R == 0.0)

    def test_first_sample_is_initial_and_t_increases(self, p1, mixed_state):
        cfg = IntegratorConfig(t_end=5.0, dt=0.01, sampling_stride=7)
        tr = integrate(mixed_state, p1, ZeroVax(), cfg)
        assert tr.t[0] == 0.0
        assert tr.state_at(0) == mixed_state
        assert np.all(np.diff(tr.t) > 0.0)
        assert tr.t[-1] == pytest.approx(5.0, abs=1e-12)

    def test_rejects_bad_initial(self, p1):
        cfg = IntegratorConfig(t_end=1.0)
        with pytest.raises(ValueError):
            integrate(SeirState(-1.0, 0.0, 0.0, 1001.0), p1, ZeroVax(), cfg)
        with pytest.raises(ValueError, match="sums to"):
            integrate(SeirState(500.0, 0.0, 0.0, 400.0), p1, ZeroVax(), cfg)

    def test_rejects_invalid_gains(self, p1, mixed_state):
        cfg = IntegratorConfig(t_end=1.0)
        with pytest.raises(GainConstraintError):
            integrate(mixed_state, p1, SusceptibleLinear(-0.5), cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(t_end=1.0, dt=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(t_end=0.0, t0=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(t_end=1.0, positivity_policy="clamp")

    def test_non_finite_abort_carries_sample_index(self, p1, mixed_state):
        cfg = IntegratorConfig(t_end=1.0, dt=0.01)
        with pytest.raises(NonFiniteStateError) as err:
            integrate(mixed_state, p1, ConstantVax(1e308), cfg)
        assert err.value.sample_index >= 1


class TestClosedForms:
    def test_theorem2i_susceptible_decay(self, p1):
        # Under the susceptible-linear law, dS/dt = -(mu+g)S exactly:
        # S(10) = 500*exp(-1.1) ~= 166.44 for g = 0.1.
        cfg = IntegratorConfig(t_end=10.0, dt=1e-3, sampling_stride=100)
        tr = integrate(SeirState(500.0, 200.0, 100.0, 200.0), p1,
                       SusceptibleLinear(0.1), cfg)
        expected = 500.0 * math.exp(-1.1)
        assert expected == pytest.approx(166.4355, abs=5e-4)
        assert tr.S[-1] == pytest.approx(expected, rel=1e-3)

    def test_theorem2i_s_independent_of_companions(self, p1):
        # The decoupled S equation ignores the other compartments, so any
        # companion split must land on the same closed form (up to the
        # step-hold error of V).
        cfg = IntegratorConfig(t_end=10.0, dt=1e-3, sampling_stride=1000)
        expected = 500.0 * math.exp(-1.1)
        for companions in ((200.0, 100.0, 200.0), (50.0, 250.0, 200.0)):
            tr = integrate(SeirState(500.0, *companions), p1,
                           SusceptibleLinear(0.1), cfg)
            assert tr.S[-1] == pytest.approx(expected, rel=1e-3)

    def test_theorem3_immune_growth(self, p1):
        # dR/dt = -(mu+omega+g)R + g1*N exactly; from R(0)=0 with
        # g=0, g1=0.03: R(100) = 1000*(1 - exp(-3)) ~= 950.21.
        cfg = IntegratorConfig(t_end=100.0, dt=1e-2, sampling_stride=100)
        tr = integrate(SeirState(700.0, 200.0, 100.0, 0.0), p1,
                       ImmuneFeedback(0.0, 0.03), cfg)
        expected = 1000.0 * (1.0 - math.exp(-3.0))
        assert expected == pytest.approx(950.2129, abs=5e-4)
        assert tr.R[-1] == pytest.approx(expected, rel=1e-3)

    def test_rk4_order_against_closed_form(self):
        # Configuration with constant V along the trajectory (omega = 0,
        # E = I = 0, g = 0 makes V identically 1), so the step error is
        # pure RK4: halving dt divides the closed-form error by ~2^4.
        p = ModelParams(N=1000.0, mu=0.5, omega=0.0, beta=0.7,
                        sigma=0.2, gamma=0.25)
        s0 = SeirState(600.0, 0.0, 0.0, 400.0)
        law = SusceptibleLinear(0.0)

        def err(dt: float) -> float:
            cfg = IntegratorConfig(t_end=10.0, dt=dt, sampling_stride=10_000)
            tr = integrate(s0, p, law, cfg)
            assert np.allclose(tr.V, 1.0)
            return abs(float(tr.S[-1]) - 600.0 * math.exp(-0.5 * 10.0))

        ratio = err(0.25) / err(0.125)
        assert 12.0 <= ratio <= 20.0

    def test_against_scipy_reference(self, p1, mixed_state):
        # Independent oracle: scipy's adaptive RK45 at tight tolerance on
        # the same vaccination-free vector field.
        solve_ivp = pytest.importorskip("scipy.integrate").solve_ivp

        def rhs(t, y):
            S, E, I, R = y
            bp = p1.beta / p1.N
            return [
                -p1.mu * S + p1.omega * R - bp * S * I + p1.mu * p1.N,
                bp * S * I - (p1.mu + p1.sigma) * E,
                -(p1.mu + p1.gamma) * I + p1.sigma * E,
                -(p1.mu + p1.omega) * R + p1.gamma * I,
            ]

        sol = solve_ivp(rhs, (0.0, 50.0), list(mixed_state.as_tuple()),
                        rtol=1e-11, atol=1e-11, dense_output=True)
        cfg = IntegratorConfig(t_end=50.0, dt=1e-3, sampling_stride=5000)
        tr = integrate(mixed_state, p1, ZeroVax(), cfg)
        ref = sol.sol(tr.t)
        ours = tr.states().T
        assert np.max(np.abs(ours - ref)) < 1e-6 * p1.N


class TestInvariants:
    def test_conservation(self, p1, mixed_state):
        cfg = IntegratorConfig(t_end=200.0, dt=1e-2, sampling_stride=10)
        tr = integrate(mixed_state, p1, ImmuneFeedback(0.0, 0.03), cfg)
        drift = np.abs(tr.S + tr.E + tr.I + tr.R - p1.N)
        assert drift.max() <= 1e-9 * p1.N

    def test_determinism_bitwise(self, p1, mixed_state):
        cfg = IntegratorConfig(t_end=20.0, dt=1e-2)
        a = integrate(mixed_state, p1, ImmuneFeedback(0.0, 0.03), cfg)
        b = integrate(mixed_state, p1, ImmuneFeedback(0.0, 0.03), cfg)
        for name in ("t", "S", "E", "I", "R", "V", "u"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_v_hold_consistency(self, p1, mixed_state):
        # Recomputing u from stored state and V reproduces stored u exactly.
        cfg = IntegratorConfig(t_end=10.0, dt=1e-2, sampling_stride=3)
        tr = integrate(mixed_state, p1, ImmuneFeedback(0.01, 0.05), cfg)
        u = p1.omega * tr.R - p1.sigma * tr.E - p1.mu * p1.N * tr.V
        assert np.array_equal(u, tr.u)

    def test_stored_v_matches_law(self, p1, mixed_state):
        from seirvax import evaluate
        cfg = IntegratorConfig(t_end=5.0, dt=1e-2, sampling_stride=11)
        law = ImmuneFeedback(0.01, 0.05)
        tr = integrate(mixed_state, p1, law, cfg)
        for i in range(len(tr)):
            assert tr.V[i] == evaluate(law, tr.state_at(i), p1, float(tr.t[i]))


class TestPositivity:
    def test_compliant_run_has_no_events(self, p1, mixed_state):
        from seirvax import Saturated
        cfg = IntegratorConfig(t_end=300.0, dt=1e-2, sampling_stride=10)
        law = Saturated(ImmuneFeedback(0.0, 0.03), 0.0, 1.0)
        tr = integrate(mixed_state, p1, law, cfg)
        assert positivity_events(tr) == []

    def test_injected_negative_start_reported_at_t0(self, p1):
        # Hand-built trajectory: the monitor flags the first sample.
        t = np.array([0.0, 1.0])
        tr = Trajectory(t=t, S=np.array([-1.0, 1.0]), E=np.zeros(2),
                        I=np.zeros(2), R=np.array([1001.0, 999.0]),
                        V=np.zeros(2), u=np.zeros(2), params=p1,
                        law=ZeroVax(), law_label="zero",
                        config=IntegratorConfig(t_end=1.0))
        events = positivity_events(tr)
        assert events and events[0].t == 0.0 and events[0].component == "S"

    def test_negative_vaccination_drives_r_negative(self, p1):
        # V = -5 from (N,0,0,0): dR/dt = -50/day, so the first event is
        # one step after t0.
        cfg = IntegratorConfig(t_end=1.0, dt=1e-2)
        tr = integrate(SeirState(1000.0, 0.0, 0.0, 0.0), p1,
                       ConstantVax(-5.0), cfg)
        events = positivity_events(tr)
        assert events
        assert events[0].component == "R"
        assert events[0].t == pytest.approx(cfg.dt, abs=1e-12)

    def test_project_policy_clamps_and_logs(self, p1):
        cfg = IntegratorConfig(t_end=1.0, dt=1e-2, positivity_policy="project")
        tr = integrate(SeirState(1000.0, 0.0, 0.0, 0.0), p1,
                       ConstantVax(-5.0), cfg)
        assert tr.projected_count > 0
        assert tr.projected[0].component == "R"
        assert np.all(tr.R >= 0.0)


class TestAdaptive:
    def test_adaptive_matches_fixed(self, p1, mixed_state):
        fixed = integrate(mixed_state, p1, ImmuneFeedback(0.0, 0.03),
                          IntegratorConfig(t_end=50.0, dt=1e-3,
                                           sampling_stride=50_000))
        adaptive = integrate(mixed_state, p1, ImmuneFeedback(0.0, 0.03),
                             IntegratorConfig(t_end=50.0, dt=1e-2,
                                              adaptive=True, rel_tol=1e-9,
                                              abs_tol=1e-9,
                                              sampling_stride=1_000_000))
        assert adaptive.t[-1] == pytest.approx(50.0, abs=1e-9)
        assert adaptive.S[-1] == pytest.approx(float(fixed.S[-1]), abs=2e-3)
        assert adaptive.R[-1] == pytest.approx(float(fixed.R[-1]), abs=2e-3)

    def test_adaptive_conserves(self, p1, mixed_state):
        tr = integrate(mixed_state, p1, ZeroVax(),
                       IntegratorConfig(t_end=100.0, dt=1e-2, adaptive=True,
                                        rel_tol=1e-10, abs_tol=1e-10))
        drift = np.abs(tr.S + tr.E + tr.I + tr.R - p1.N)
        assert drift.max() <= 1e-9 * p1.N


def test_sampling_stride_counts(p1, mixed_state):
    cfg = IntegratorConfig(t_end=1.0, dt=0.01, sampling_stride=7)
    tr = integrate(mixed_state, p1, ZeroVax(), cfg)
    # 100 steps: samples at 0, 7, ..., 98, plus the final step 100.
    assert len(tr) == 100 // 7 + 2
    assert tr.t[-1] == pytest.approx(1.0, abs=1e-12)


def test_adaptive_project_policy(p1):
    cfg = IntegratorConfig(t_end=1.0, dt=1e-2, adaptive=True,
                           positivity_policy="project",
                           rel_tol=1e-8, abs_tol=1e-8)
    tr = integrate(SeirState(1000.0, 0.0, 0.0, 0.0), p1, ConstantVax(-5.0), cfg)
    assert tr.projected_count > 0
    assert np.all(tr.R >= 0.0)
