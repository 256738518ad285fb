"""Trajectory-level verification: conservation, positivity, identities, limits.

Checks are deterministic, read-only and idempotent over immutable
trajectories. Each returns a Check with the worst residual, its
location, the tolerance applied, and a pass verdict defined as
worst <= tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .exceptions import HorizonError
from .integrate import EPS_POS_RTOL, Trajectory
from .laws import AsymptoticPrediction, ControlLaw, Saturated
from .model import ModelParams

__all__ = [
    "Check",
    "VerificationReport",
    "DecayFit",
    "monitor_conservation",
    "monitor_positivity",
    "check_identity_suite",
    "check_asymptotics",
    "estimate_decay_rate",
    "check_integral_limit",
    "identity_tolerance",
]


@dataclass(frozen=True)
class Check:
    """One named verification outcome; passed iff worst <= tolerance."""

    name: str
    passed: bool
    worst: float
    tolerance: float
    location_t: Optional[float] = None
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VerificationReport:
    """A bundle of checks with an overall verdict."""

    checks: tuple[Check, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            loc = "" if c.location_t is None else f" at t={c.location_t:g}"
            out.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: "
                       f"worst={c.worst:.6g} tol={c.tolerance:.6g}{loc}")
        return out


def monitor_conservation(traj: Trajectory) -> Check:
    """Worst |S+E+I+R - N| over the samples against 1e-9*N."""
    N = traj.params.N
    drift = np.abs(traj.S + traj.E + traj.I + traj.R - N)
    k = int(np.argmax(drift))
    worst = float(drift[k])
    tol = 1e-9 * N
    return Check("conservation", worst <= tol, worst, tol, float(traj.t[k]))


def monitor_positivity(traj: Trajectory,
                       v_bounds: Union[tuple[float, float], str] = (0.0, 1.0),
                       alpha: Optional[float] = None) -> Check:
    """Componentwise range checks plus the recorded-V range check.

    Sub-checks: (a) components >= -eps, (b) components <= N + eps with
    eps = 1e-9*N, (c) V within [lo, hi]. Pass v_bounds="corollary1" to
    check V against the state-dependent extended bound
    1 + (alpha - beta*I/N)*S/(mu*N) (alpha defaults to beta).
    """
    p = traj.params
    N = p.N
    eps = EPS_POS_RTOL * N
    states = traj.states()

    low = states.min(axis=1)
    k_low = int(np.argmin(low))
    lower = Check("components >= 0", bool(low[k_low] >= -eps),
                  max(0.0, -float(low[k_low])), eps, float(traj.t[k_low]))

    high = states.max(axis=1)
    k_high = int(np.argmax(high))
    upper = Check("components <= N", bool(high[k_high] <= N + eps),
                  max(0.0, float(high[k_high]) - N), eps, float(traj.t[k_high]))

    if v_bounds == "corollary1":
        a = p.beta if alpha is None else alpha
        hi = 1.0 + (a - p.beta_prime * traj.I) * traj.S / (p.mu * N)
        lo = np.zeros_like(hi)
        bound_name = "V in corollary1 range"
    else:
        lo_v, hi_v = v_bounds
        lo = np.full_like(traj.V, lo_v)
        hi = np.full_like(traj.V, hi_v)
        bound_name = f"V in [{lo_v:g}, {hi_v:g}]"
    finite = np.abs(np.concatenate((lo, hi)))
    finite = finite[np.isfinite(finite)]
    slack = 1e-12 * max(1.0, float(finite.max()) if finite.size else 1.0)
    excess = np.maximum(lo - traj.V, traj.V - hi)
    k_v = int(np.argmax(excess))
    vrange = Check(bound_name, bool(excess[k_v] <= slack),
                   max(0.0, float(excess[k_v])), slack, float(traj.t[k_v]))

    subs = (lower, upper, vrange)
    worst_sub = max(subs, key=lambda c: c.worst / max(c.tolerance, 1e-300))
    return Check(
        "positivity", all(c.passed for c in subs), worst_sub.worst,
        worst_sub.tolerance, worst_sub.location_t,
        details={c.name: c for c in subs})


def _gain_sum(law: ControlLaw) -> float:
    if isinstance(law, Saturated):
        return _gain_sum(law.inner)
    total = 0.0
    for attr in ("g", "g1", "g_prime", "value"):
        v = getattr(law, attr, None)
        if v is not None:
            total += abs(v)
    return total


def identity_tolerance(params: ModelParams, law: ControlLaw, dt: float) -> float:
    """Per-sample tolerance 1e-3 * N * rate_scale * dt^2 for the identity suite.

    rate_scale is (3*(mu+omega+sigma+gamma+beta+sum|gains|))^3, a cubed
    characteristic rate sized to dominate central-difference truncation
    on correct trajectories.
    """
    r = (params.mu + params.omega + params.sigma + params.gamma + params.beta
         + _gain_sum(law))
    return 1e-3 * params.N * (3.0 * r) ** 3 * dt * dt


def check_identity_suite(traj: Trajectory, params: ModelParams) -> Check:
    """Finite-difference verification of the control-coupling identity suite.

    At each interior sample the left-hand derivative is estimated by
    central differences and compared against the right-hand side. The
    integrator holds V constant per step, so the node value of V is
    first-order inconsistent with a centered window; identities involving
    V or u therefore use the trailing average (V[i-1]+V[i])/2 (with u
    recomputed from it), which restores second-order agreement.

    Requires at least 3 uniformly spaced samples.
    """
    t = traj.t
    if t.shape[0] < 3:
        raise ValueError("identity suite requires at least 3 samples")
    steps = np.diff(t)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12 * max(1.0, abs(float(t[-1])))):
        raise ValueError("identity suite requires uniform sampling")

    p = params
    mu, om, si, ga, N, bp = p.mu, p.omega, p.sigma, p.gamma, p.N, p.beta_prime
    muN = mu * N
    S, E, I, R, V = traj.S, traj.E, traj.I, traj.R, traj.V

    def cdiff(x: np.ndarray) -> np.ndarray:
        return (x[2:] - x[:-2]) / (2.0 * h)

    Sm, Em, Im, Rm = S[1:-1], E[1:-1], I[1:-1], R[1:-1]
    v_bar = 0.5 * (V[:-2] + V[1:-1])
    u_bar = om * Rm - si * Em - muN * v_bar

    d_ei = cdiff(E + I)
    d_se = cdiff(S + E)
    d_ir = cdiff(I + R)
    d_sr = cdiff(S + R)
    d_sei = cdiff(S + E + I)
    d_r = cdiff(R)

    residuals = {
        "(20) d(E+I)": d_ei - (-mu * (Em + Im) + (bp * Sm - ga) * Im),
        "(21.a) d(S+E)": d_se - (-mu * (Sm + Em) + muN + u_bar),
        "(21.b) d(S+E)": d_se - (mu * (Im + Rm) + u_bar),
        "(22) d(I+R)": d_ir - (-mu * (Im + Rm) - u_bar),
        "(23.a) d(S+R)": d_sr - (-mu * (Sm + Rm) + (ga - bp * Sm) * Im + muN),
        "(23.b) d(S+R)": d_sr - (mu * (Em + Im) + (ga - bp * Sm) * Im),
        "(23.c) d(S+R)": d_sr - (mu * Em + (mu + ga - bp * Sm) * Im),
        "(24.a) d(S+E+I)": d_sei - (-mu * (Sm + Em + Im) + om * Rm - ga * Im
                                    + muN * (1.0 - v_bar)),
        "(24.b) d(S+E+I)": d_sei - (mu * Rm + si * Em - ga * Im + u_bar),
        "(25.a) dR": d_r - (-(mu + om) * Rm + ga * Im + muN * v_bar),
        "(25.b) dR": d_r - (-mu * Rm - si * Em + ga * Im - u_bar),
        "(25.c) dR": d_r - (-d_sei),
    }

    tol = identity_tolerance(params, traj.law, h)
    worst = -1.0
    worst_t: Optional[float] = None
    details: dict[str, float] = {}
    for name, res in residuals.items():
        mag = np.abs(res)
        k = int(np.argmax(mag))
        details[name] = float(mag[k])
        if mag[k] > worst:
            worst = float(mag[k])
            worst_t = float(t[1 + k])
    return Check("identity_suite", worst <= tol, worst, tol, worst_t,
                 details=details)


_SIGNALS = {
    "s_inf": lambda tr: tr.S,
    "e_inf": lambda tr: tr.E,
    "i_inf": lambda tr: tr.I,
    "r_inf": lambda tr: tr.R,
    "s_plus_e_inf": lambda tr: tr.S + tr.E,
    "i_plus_r_inf": lambda tr: tr.I + tr.R,
    "s_plus_e_plus_i_inf": lambda tr: tr.S + tr.E + tr.I,
    "v_inf": lambda tr: tr.V,
}


def check_asymptotics(traj: Trajectory, prediction: AsymptoticPrediction,
                      tail_fraction: float = 0.1,
                      rel_tol: float = 1e-3) -> Check:
    """Tail means of each predicted quantity against the closed-form limits.

    The horizon must satisfy decay_rate*(t_end - t0) >= 10 (refused
    otherwise, reporting the required t_end). Zero limits are compared on
    the natural scale: N for populations, 1 for V.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must be in (0, 1)")
    rate = prediction.decay_rate
    if rate is None or rate <= 0.0:
        raise ValueError("prediction carries no positive decay rate")
    t0, t_end = float(traj.t[0]), float(traj.t[-1])
    if rate * (t_end - t0) < 10.0:
        need = t0 + 10.0 / rate
        raise HorizonError(
            f"horizon too short for asymptotic check: need t_end >= {need:g}",
            required_t_end=need)

    n = len(traj)
    m = max(1, int(math.ceil(tail_fraction * n)))
    N = traj.params.N

    worst_norm = -1.0
    details: dict[str, tuple[float, float, float]] = {}
    for fname, signal in _SIGNALS.items():
        limit = getattr(prediction, fname)
        if limit is None:
            continue
        mean = float(np.mean(signal(traj)[-m:]))
        scale = abs(limit) if limit != 0.0 else (1.0 if fname == "v_inf" else N)
        err = abs(mean - limit)
        details[fname] = (mean, limit, err / scale)
        worst_norm = max(worst_norm, err / scale)
    if worst_norm < 0.0:
        raise ValueError("prediction contains no checkable limits")
    return Check("asymptotics", worst_norm <= rel_tol, worst_norm, rel_tol,
                 t_end, details=details)


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential rate of a positive signal."""

    rate: float
    r_squared: float


def estimate_decay_rate(t: np.ndarray, values: np.ndarray) -> DecayFit:
    """Fit values ~ C*exp(-rate*t) by least squares on log(values).

    Refuses windows containing nonpositive values.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.shape != values.shape or t.size < 2:
        raise ValueError("need matching t/value arrays with at least 2 points")
    if np.any(values <= 0.0):
        raise ValueError("decay fit refused: nonpositive values in window")
    logv = np.log(values)
    slope, intercept = np.polyfit(t, logv, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else (
        0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot)
    return DecayFit(rate=-float(slope), r_squared=r2)


def check_integral_limit(traj: Trajectory, params: ModelParams, g: float,
                         g1: float, rel_tol: float = 0.01) -> Check:
    """Convolution integral of (omega+g)*R against its closed-form limit.

    Evaluates int_0^T exp(-mu*(T-tau))*(omega+g)*R(tau) dtau at the final
    sample by the trapezoid rule and compares with
    g1*(omega+g)*N/(mu*(mu+omega+g)). Requires a horizon of at least
    10/min(mu, mu+omega+g).
    """
    mu, om, N = params.mu, params.omega, params.N
    lam = mu + om + g
    if mu <= 0.0 or lam <= 0.0:
        raise ValueError("integral limit requires mu > 0 and mu+omega+g > 0")
    t0, t_end = float(traj.t[0]), float(traj.t[-1])
    need_span = 10.0 / min(mu, lam)
    if (t_end - t0) < need_span:
        raise HorizonError(
            f"horizon too short for integral limit: need t_end >= {t0 + need_span:g}",
            required_t_end=t0 + need_span)

    weight = np.exp(-mu * (t_end - traj.t)) * (om + g) * traj.R
    dt = np.diff(traj.t)
    integral = float(np.sum(0.5 * dt * (weight[1:] + weight[:-1])))
    limit = g1 * (om + g) * N / (mu * lam)
    scale = abs(limit) if limit != 0.0 else N
    err = abs(integral - limit)
    return Check("integral_limit", err <= rel_tol * scale, err,
                 rel_tol * scale, t_end,
                 details={"integral": integral, "limit": limit})
