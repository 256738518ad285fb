"""Deterministic closed-loop integration of the SEIR plant under a law.

The default scheme is classic fixed-step 4th-order Runge-Kutta. The
vaccination fraction V is evaluated from the law at the state at the
start of each step and held constant across the step's internal stages
(zero-order hold): the laws are state feedback, and freezing V per step
keeps runs exactly reproducible. An embedded Dormand-Prince 5(4) pair is
available for adaptive stepping.

Every sample records the applied V and the auxiliary control
u = omega*R - sigma*E - mu*N*V, computed with the same arithmetic as
`model.coupling_control` so recomputation reproduces stored values
bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GainConstraintError, NonFiniteStateError
from .laws import ControlLaw, compile_law, law_name, required_gain_failures
from .model import ModelParams, SeirState

__all__ = [
    "IntegratorConfig",
    "PositivityEvent",
    "Trajectory",
    "integrate",
    "positivity_events",
    "EPS_POS_RTOL",
]

# Absolute positivity slack is EPS_POS_RTOL * N: large enough to ignore
# integration roundoff, small enough to expose genuine model violations.
EPS_POS_RTOL = 1e-9

_PROJECTION_LOG_CAP = 10_000


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration window and scheme selection.

    positivity_policy: "report" leaves negative excursions in place for
    the monitors to see (default; clamping would mask bugs), "project"
    clamps negative components to zero after each step and logs the event.
    """

    t_end: float
    t0: float = 0.0
    dt: float = 1e-2
    sampling_stride: int = 1
    positivity_policy: str = "report"
    adaptive: bool = False
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not (self.dt > 0.0):
            raise ValueError("dt must be > 0")
        if not (self.t_end > self.t0):
            raise ValueError("t_end must be > t0")
        if self.sampling_stride < 1:
            raise ValueError("sampling_stride must be >= 1")
        if self.positivity_policy not in ("report", "project"):
            raise ValueError("positivity_policy must be 'report' or 'project'")
        if self.adaptive and not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("adaptive mode needs rel_tol > 0 and abs_tol > 0")


@dataclass(frozen=True)
class PositivityEvent:
    """One negative-component observation (projection log or monitor hit)."""

    t: float
    component: str
    value: float


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples of the closed loop, immutable after construction.

    Arrays t, S, E, I, R, V, u share a common length; t is strictly
    increasing and the first sample equals the initial condition at t0.
    """

    t: np.ndarray
    S: np.ndarray
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    V: np.ndarray
    u: np.ndarray
    params: ModelParams
    law: ControlLaw
    law_label: str
    config: IntegratorConfig
    projected: tuple[PositivityEvent, ...] = field(default=())
    projected_count: int = 0

    def __len__(self) -> int:
        return self.t.shape[0]

    def state_at(self, i: int) -> SeirState:
        return SeirState(float(self.S[i]), float(self.E[i]),
                         float(self.I[i]), float(self.R[i]))

    def final_state(self) -> SeirState:
        return self.state_at(len(self) - 1)

    def states(self) -> np.ndarray:
        """(n, 4) array of samples in S, E, I, R order."""
        return np.column_stack((self.S, self.E, self.I, self.R))


def _check_initial(state0: SeirState, params: ModelParams) -> None:
    if min(state0.S, state0.E, state0.I, state0.R) < 0.0:
        raise ValueError("initial state components must be >= 0")
    if abs(state0.total - params.N) > 1e-6 * params.N:
        raise ValueError(
            f"initial state sums to {state0.total!r}, expected N = {params.N!r} "
            "within 1e-6 relative")


def integrate(state0: SeirState, params: ModelParams, law: ControlLaw,
              config: IntegratorConfig) -> Trajectory:
    """Integrate the plant closed under `law` over [t0, t_end].

    Raises:
        ValueError: invalid initial state or configuration.
        GainConstraintError: law gains violate a required constraint.
        NonFiniteStateError: a non-finite state appeared; carries the
            diagnostic sample index and time.
    """
    _check_initial(state0, params)
    failures = required_gain_failures(law, params)
    if failures:
        raise GainConstraintError(
            f"law {law_name(law)} fails required gain constraints: "
            + ", ".join(failures))
    law_fn = compile_law(law, params)

    if config.adaptive:
        columns, projected, count = _run_dopri45(state0, params, law_fn, config)
    else:
        columns, projected, count = _run_rk4(state0, params, law_fn, config)

    t, S, E, I, R, V, u = (np.asarray(c, dtype=np.float64) for c in columns)
    return Trajectory(t=t, S=S, E=E, I=I, R=R, V=V, u=u,
                      params=params, law=law, law_label=law_name(law),
                      config=config, projected=tuple(projected),
                      projected_count=count)


def _run_rk4(state0, params, law_fn, config):
    """Fixed-step classic RK4 with V held across stages."""
    mu, om, si, ga, N = (params.mu, params.omega, params.sigma,
                         params.gamma, params.N)
    bp = params.beta_prime
    muN = mu * N
    h = config.dt
    t0 = config.t0
    n = max(1, int(round((config.t_end - t0) / h)))
    stride = config.sampling_stride
    project = config.positivity_policy == "project"

    S, E, I, R = state0.S, state0.E, state0.I, state0.R
    isfinite = math.isfinite

    ts: list[float] = []
    Ss: list[float] = []
    Es: list[float] = []
    Is: list[float] = []
    Rs: list[float] = []
    Vs: list[float] = []
    us: list[float] = []
    projected: list[PositivityEvent] = []
    n_projected = 0

    def record(t: float, V: float) -> None:
        if not isfinite(S + E + I + R) or not isfinite(V):
            raise NonFiniteStateError(
                f"non-finite state at t = {t} (sample index {len(ts)})",
                t=t, sample_index=len(ts))
        ts.append(t)
        Ss.append(S)
        Es.append(E)
        Is.append(I)
        Rs.append(R)
        Vs.append(V)
        us.append(om * R - si * E - muN * V)

    V = law_fn(S, E, I, R, t0)
    record(t0, V)

    for k in range(n):
        t = t0 + k * h
        V = law_fn(S, E, I, R, t)
        vax = muN * V
        inflow = muN - vax

        s, e, i, r = S, E, I, R
        w = om * r; f = bp * (s * i); rec = ga * i; inc = si * e
        k1S = w - mu * s - f + inflow
        k1E = f - mu * e - inc
        k1I = inc - mu * i - rec
        k1R = rec + vax - mu * r - w

        s = S + 0.5 * h * k1S; e = E + 0.5 * h * k1E
        i = I + 0.5 * h * k1I; r = R + 0.5 * h * k1R
        w = om * r; f = bp * (s * i); rec = ga * i; inc = si * e
        k2S = w - mu * s - f + inflow
        k2E = f - mu * e - inc
        k2I = inc - mu * i - rec
        k2R = rec + vax - mu * r - w

        s = S + 0.5 * h * k2S; e = E + 0.5 * h * k2E
        i = I + 0.5 * h * k2I; r = R + 0.5 * h * k2R
        w = om * r; f = bp * (s * i); rec = ga * i; inc = si * e
        k3S = w - mu * s - f + inflow
        k3E = f - mu * e - inc
        k3I = inc - mu * i - rec
        k3R = rec + vax - mu * r - w

        s = S + h * k3S; e = E + h * k3E; i = I + h * k3I; r = R + h * k3R
        w = om * r; f = bp * (s * i); rec = ga * i; inc = si * e
        k4S = w - mu * s - f + inflow
        k4E = f - mu * e - inc
        k4I = inc - mu * i - rec
        k4R = rec + vax - mu * r - w

        sixth = h / 6.0
        S = S + sixth * (k1S + 2.0 * (k2S + k3S) + k4S)
        E = E + sixth * (k1E + 2.0 * (k2E + k3E) + k4E)
        I = I + sixth * (k1I + 2.0 * (k2I + k3I) + k4I)
        R = R + sixth * (k1R + 2.0 * (k2R + k3R) + k4R)

        t_next = t0 + (k + 1) * h
        if project:
            if S < 0.0 or E < 0.0 or I < 0.0 or R < 0.0:
                for name, val in (("S", S), ("E", E), ("I", I), ("R", R)):
                    if val < 0.0:
                        n_projected += 1
                        if len(projected) < _PROJECTION_LOG_CAP:
                            projected.append(PositivityEvent(t_next, name, val))
                S = max(S, 0.0); E = max(E, 0.0)
                I = max(I, 0.0); R = max(R, 0.0)

        if (k + 1) % stride == 0 or k + 1 == n:
            record(t_next, law_fn(S, E, I, R, t_next))

    return (ts, Ss, Es, Is, Rs, Vs, us), projected, n_projected


# Dormand-Prince 5(4) tableau.
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
# 5th-order solution weights (row 7 of A, FSAL) and error weights b5 - b4.
_DP_B = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
         11.0 / 84.0, 0.0)
_DP_E = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
         -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def _run_dopri45(state0, params, law_fn, config):
    """Embedded Dormand-Prince 5(4) with V held per attempted step."""
    mu, om, si, ga, N = (params.mu, params.omega, params.sigma,
                         params.gamma, params.N)
    bp = params.beta_prime
    muN = mu * N
    rtol, atol = config.rel_tol, config.abs_tol
    t0, t_end = config.t0, config.t_end
    stride = config.sampling_stride
    project = config.positivity_policy == "project"

    def f(y: tuple, inflow: float, vax: float) -> tuple:
        s, e, i, r = y
        w = om * r; fl = bp * (s * i); rec = ga * i; inc = si * e
        return (w - mu * s - fl + inflow,
                fl - mu * e - inc,
                inc - mu * i - rec,
                rec + vax - mu * r - w)

    y = state0.as_tuple()
    t = t0
    h = min(config.dt, t_end - t0)

    ts = [t0]; cols = [[c] for c in y]
    V0 = law_fn(*y, t0)
    Vs = [V0]
    us = [om * y[3] - si * y[1] - muN * V0]
    projected: list[PositivityEvent] = []
    n_projected = 0
    accepted = 0

    while t < t_end:
        h = min(h, t_end - t)
        V = law_fn(*y, t)
        vax = muN * V
        inflow = muN - vax

        while True:
            ks = []
            for j in range(7):
                yj = y if j == 0 else tuple(
                    y[c] + h * sum(_DP_A[j][m] * ks[m][c] for m in range(j))
                    for c in range(4))
                ks.append(f(yj, inflow, vax))
            y5 = tuple(y[c] + h * sum(_DP_B[m] * ks[m][c] for m in range(7))
                       for c in range(4))
            err = list(h * sum(_DP_E[m] * ks[m][c] for m in range(7))
                       for c in range(4))
            # The hold of V across the step leaves an O(h) bias the
            # embedded pair cannot see; charge mu*N*|dV|*h/2 against the
            # S and R components so the controller resolves fast feedback.
            hold_err = 0.5 * h * muN * abs(law_fn(*y5, t + h) - V)
            err[0] += math.copysign(hold_err, err[0]) if err[0] else hold_err
            err[3] += math.copysign(hold_err, err[3]) if err[3] else hold_err
            norm = math.sqrt(sum(
                (err[c] / (atol + rtol * max(abs(y[c]), abs(y5[c])))) ** 2
                for c in range(4)) / 4.0)
            if not math.isfinite(norm):
                raise NonFiniteStateError(
                    f"non-finite state at t = {t + h} (sample index {len(ts)})",
                    t=t + h, sample_index=len(ts))
            if norm <= 1.0:
                break
            h *= min(1.0, max(0.2, 0.9 * norm ** -0.2))
            if h <= 1e-14 * max(1.0, abs(t)):
                raise RuntimeError("adaptive step size underflow")

        t = t_end if t + h >= t_end else t + h
        y = y5
        if project and min(y) < 0.0:
            names = ("S", "E", "I", "R")
            for c in range(4):
                if y[c] < 0.0:
                    n_projected += 1
                    if len(projected) < _PROJECTION_LOG_CAP:
                        projected.append(PositivityEvent(t, names[c], y[c]))
            y = tuple(max(v, 0.0) for v in y)
        accepted += 1
        if accepted % stride == 0 or t >= t_end:
            if not math.isfinite(sum(y)):
                raise NonFiniteStateError(
                    f"non-finite state at t = {t} (sample index {len(ts)})",
                    t=t, sample_index=len(ts))
            V_rec = law_fn(*y, t)
            ts.append(t)
            for c in range(4):
                cols[c].append(y[c])
            Vs.append(V_rec)
            us.append(om * y[3] - si * y[1] - muN * V_rec)
        h *= min(5.0, max(0.2, 0.9 * norm ** -0.2)) if norm > 0.0 else 5.0

    return (ts, cols[0], cols[1], cols[2], cols[3], Vs, us), projected, n_projected


def positivity_events(traj: Trajectory) -> list[PositivityEvent]:
    """Samples where any component dips below -EPS_POS_RTOL*N.

    An empty list means the trajectory is numerically positive.
    """
    eps = EPS_POS_RTOL * traj.params.N
    events: list[PositivityEvent] = []
    for name in ("S", "E", "I", "R"):
        col = getattr(traj, name)
        for idx in np.nonzero(col < -eps)[0]:
            events.append(PositivityEvent(float(traj.t[idx]), name,
                                          float(col[idx])))
    events.sort(key=lambda ev: (ev.t, ev.component))
    return events
