"""Core model: vector field, admissibility, control coupling."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seirvax import (
    ModelParams,
    SeirState,
    VaccinationChannelError,
    check_assumption1,
    coupling_control,
    derivative,
    is_conserved,
    vaccination_from_control,
)

from conftest import random_conserved_state


class TestParams:
    def test_rejects_nonpositive_population(self):
        with pytest.raises(ValueError):
            ModelParams(N=0.0, mu=0.1, omega=0.1, beta=0.1, sigma=0.1, gamma=0.1)

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            ModelParams(N=10.0, mu=-0.1, omega=0.1, beta=0.1, sigma=0.1, gamma=0.1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ModelParams(N=10.0, mu=math.inf, omega=0.1, beta=0.1, sigma=0.1,
                        gamma=0.1)

    def test_beta_prime(self, p1):
        assert p1.beta_prime == 0.9 / 1000.0


class TestDerivative:
    def test_disease_free_fixed_point(self, p1):
        d = derivative(SeirState(1000.0, 0.0, 0.0, 0.0), p1, 0.0)
        assert d.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_hand_evaluated_components(self, p1, mixed_state):
        # Term-by-term: dS = -0.01*700 + 0.02*150 - 0.9*700*50/1000 + 10
        #                  = -7 + 3 - 31.5 + 10 = -25.5
        #               dE = 31.5 - 0.21*100 = 10.5
        #               dI = -0.21*50 + 0.2*100 = 9.5
        #               dR = -0.03*150 + 0.2*50 = 5.5
        d = derivative(mixed_state, p1, 0.0)
        assert d.dS == pytest.approx(-25.5, abs=1e-12)
        assert d.dE == pytest.approx(10.5, abs=1e-12)
        assert d.dI == pytest.approx(9.5, abs=1e-12)
        assert d.dR == pytest.approx(5.5, abs=1e-12)
        assert d.dS + d.dE + d.dI + d.dR == pytest.approx(0.0, abs=1e-12)

    def test_v_shifts_only_s_and_r(self, p1, mixed_state):
        # V enters only dS and dR, linearly with coefficients -/+ mu*N.
        d0 = derivative(mixed_state, p1, 0.3)
        d1 = derivative(mixed_state, p1, 0.3 + 0.25)
        muN_delta = p1.mu * p1.N * 0.25
        assert d1.dE == d0.dE and d1.dI == d0.dI
        assert d1.dS - d0.dS == pytest.approx(-muN_delta, rel=1e-12)
        assert d1.dR - d0.dR == pytest.approx(muN_delta, rel=1e-12)

    def test_non_finite_input_rejected(self, p1):
        with pytest.raises(ValueError):
            derivative(SeirState(math.nan, 0.0, 0.0, 0.0), p1, 0.0)
        with pytest.raises(ValueError):
            derivative(SeirState(1.0, 2.0, 3.0, 994.0), p1, math.inf)

    @given(data=st.data())
    @settings(max_examples=200, deadline=None)
    def test_components_sum_to_zero_on_conserved_states(self, data):
        # On S+E+I+R = N the algebraic sum is exactly zero; the floating
        # sum must vanish to roundoff in the mu-terms.
        p = ModelParams(N=1000.0, mu=0.01, omega=0.02, beta=0.9,
                        sigma=0.2, gamma=0.2)
        seed = data.draw(st.integers(min_value=0, max_value=2**32 - 1))
        v = data.draw(st.floats(min_value=-5.0, max_value=65.0))
        state = random_conserved_state(np.random.default_rng(seed), p.N)
        d = derivative(state, p, v)
        scale = max(abs(d.dS), abs(d.dE), abs(d.dI), abs(d.dR), p.mu * p.N,
                    p.mu * p.N * abs(v))
        # budget: mu-term cancellation noise plus the conservation defect
        budget = 4.0 * np.finfo(float).eps * scale + p.mu * abs(state.total - p.N)
        assert abs(d.total) <= budget


class TestAssumption1:
    def test_zero_infectious_discharges_conditional(self, p1):
        rep = check_assumption1(SeirState(999.0, 1.0, 0.0, 0.0), p1)
        assert rep.assumption1_holds
        assert rep.violated_clauses == ()

    def test_incidence_clause_threshold(self, p1):
        # With I0=10, E0=15: exposed clause needs 1.05*10 = 10.5 < 15 (ok);
        # incidence clause needs 0.9*S0*10/(0.21*1000) > 15, i.e. S0 > 350.
        ok = check_assumption1(SeirState(351.0, 15.0, 10.0, 624.0), p1)
        assert ok.assumption1_holds
        bad = check_assumption1(SeirState(349.0, 15.0, 10.0, 626.0), p1)
        assert not bad.assumption1_holds
        assert any("beta*S0*I0" in name for name in bad.violated_clauses)

    def test_beta_threshold(self, p1):
        # beta0 = (mu+gamma)*(1+mu/sigma) = 0.21*1.05 = 0.2205
        rep = check_assumption1(SeirState(999.0, 1.0, 0.0, 0.0), p1)
        assert rep.beta0 == pytest.approx(0.2205, rel=1e-12)
        assert rep.beta_above_threshold
        low = ModelParams(N=1000.0, mu=0.01, omega=0.02, beta=0.2,
                          sigma=0.2, gamma=0.2)
        assert not check_assumption1(SeirState(999.0, 1.0, 0.0, 0.0),
                                     low).beta_above_threshold

    def test_beta0_large_sigma_limit(self):
        # sigma -> inf proxy: beta0 -> mu+gamma within 1e-4 relative.
        p = ModelParams(N=1000.0, mu=0.01, omega=0.02, beta=0.9,
                        sigma=1e6, gamma=0.2)
        rep = check_assumption1(SeirState(999.0, 1.0, 0.0, 0.0), p)
        assert abs(rep.beta0 - (p.mu + p.gamma)) / (p.mu + p.gamma) < 1e-4

    def test_sigma_zero_with_infectious_is_violated(self):
        p = ModelParams(N=1000.0, mu=0.01, omega=0.02, beta=0.9,
                        sigma=0.0, gamma=0.2)
        rep = check_assumption1(SeirState(900.0, 50.0, 50.0, 0.0), p)
        assert not rep.assumption1_holds
        assert "sigma zero" in rep.violated_clauses

    def test_satisfied_incidence_clause_forces_growing_exposed(self, p1):
        # The report surfaces dE/dt(0): positive whenever the incidence
        # clause holds (its known tension with the narrative reading).
        rep = check_assumption1(SeirState(500.0, 15.0, 10.0, 475.0), p1)
        assert rep.assumption1_holds
        assert rep.e_dot0 > 0.0

    def test_pure_predicate(self, p1, mixed_state):
        assert check_assumption1(mixed_state, p1) == check_assumption1(
            mixed_state, p1)


class TestControlCoupling:
    def test_zeroing_vaccination_gives_zero_control(self, p1, mixed_state):
        v = (p1.omega * mixed_state.R - p1.sigma * mixed_state.E) / (p1.mu * p1.N)
        assert coupling_control(mixed_state, p1, v) == pytest.approx(0.0, abs=1e-12)

    def test_hand_evaluated_control(self, p1, mixed_state):
        # u = 0.02*150 - 0.2*100 = -17
        assert coupling_control(mixed_state, p1, 0.0) == pytest.approx(-17.0)
        assert vaccination_from_control(mixed_state, p1, -17.0) == pytest.approx(0.0)

    def test_slope_in_v(self, p1, mixed_state):
        u0 = coupling_control(mixed_state, p1, 0.2)
        u1 = coupling_control(mixed_state, p1, 0.7)
        assert u1 - u0 == pytest.approx(-p1.mu * p1.N * 0.5, rel=1e-12)

    @given(seed=st.integers(min_value=0, max_value=2**32 - 1),
           v=st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, seed, v):
        p = ModelParams(N=1000.0, mu=0.01, omega=0.02, beta=0.9,
                        sigma=0.2, gamma=0.2)
        state = random_conserved_state(np.random.default_rng(seed), p.N)
        v_back = vaccination_from_control(state, p, coupling_control(state, p, v))
        # within 4 ulps (at the scale of the zeroing term) for mu*N >= 1
        z_scale = abs(p.omega * state.R - p.sigma * state.E) / (p.mu * p.N)
        assert abs(v_back - v) <= 4.0 * np.spacing(max(abs(v), z_scale, 1.0))

    def test_zero_channel_rejected(self, mixed_state):
        p = ModelParams(N=1000.0, mu=0.0, omega=0.02, beta=0.9,
                        sigma=0.2, gamma=0.2)
        with pytest.raises(VaccinationChannelError):
            vaccination_from_control(mixed_state, p, 0.0)


def test_is_conserved(p1):
    assert is_conserved(SeirState(700.0, 100.0, 50.0, 150.0), p1)
    assert not is_conserved(SeirState(700.0, 100.0, 50.0, 150.1), p1)
