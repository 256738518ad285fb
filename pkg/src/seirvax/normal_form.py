"""Feedback linearization for output y = R: transform, zero dynamics, synthesis.

The output y = R has relative degree one (V appears in dR/dt with
coefficient mu*N), and the linear change of coordinates

    z1 = R,  z2 = S + R,  z3 = E,  z4 = I

puts the plant in normal form with the input entering only the z1
equation. Holding the output at zero with V = gamma*z4/(mu*N) leaves the
zero dynamics in (z2, z3, z4); their solutions are bounded, which is the
admissibility condition for the linearizing law

    V = (1/(mu*N)) * ((mu+omega)*z1 - gamma*z4 + eta),
    eta = -g_prime*z1 + g1*N,

equal to the immune-feedback law with g = g_prime - (mu+omega).

The z4 equation uses -(mu+gamma)*z4: the transform leaves the infectious
equation untouched, so gamma (not omega) is the only coefficient
consistent with the plant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .exceptions import NonFiniteStateError, VaccinationChannelError
from .integrate import IntegratorConfig
from .laws import ControlLaw, ImmuneFeedback, compile_law
from .model import ModelParams, SeirState, StateDerivative, derivative

__all__ = [
    "NormalState",
    "TransformReport",
    "to_normal",
    "from_normal",
    "to_normal_tangent",
    "transform_jacobian",
    "relative_degree",
    "normal_derivative",
    "zero_dynamics_derivative",
    "zeroing_input",
    "synthesize_linearizing_law",
    "NormalTrajectory",
    "ZeroDynTrajectory",
    "integrate_normal",
    "integrate_zero_dynamics",
]


@dataclass(frozen=True)
class NormalState:
    """Normal-form coordinates: z1 = R, z2 = S+R, z3 = E, z4 = I."""

    z1: float
    z2: float
    z3: float
    z4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.z1, self.z2, self.z3, self.z4)


@dataclass(frozen=True)
class TransformReport:
    """Relative degree and well-posedness of the transform.

    input_coefficient is the numerically measured coefficient of V in
    dy/dt (equals mu*N); jacobian_det is d(S,E,I,R)/d(z1,z2,z3,z4) = -1.
    """

    jacobian_det: float
    relative_degree: int
    well_posed: bool
    input_coefficient: float


def to_normal(state: SeirState) -> NormalState:
    return NormalState(z1=state.R, z2=state.S + state.R, z3=state.E, z4=state.I)


def from_normal(z: NormalState) -> SeirState:
    """Inverse transform; total, so z2 < z1 yields S < 0 as-is."""
    return SeirState(S=z.z2 - z.z1, E=z.z3, I=z.z4, R=z.z1)


def to_normal_tangent(d: StateDerivative) -> tuple[float, float, float, float]:
    """Pushforward of a state derivative: (dR, dS+dR, dE, dI)."""
    return (d.dR, d.dS + d.dR, d.dE, d.dI)


def transform_jacobian() -> np.ndarray:
    """Constant matrix d(S,E,I,R)/d(z1,z2,z3,z4)."""
    return np.array([
        [-1.0, 1.0, 0.0, 0.0],   # S = z2 - z1
        [0.0, 0.0, 1.0, 0.0],    # E = z3
        [0.0, 0.0, 0.0, 1.0],    # I = z4
        [1.0, 0.0, 0.0, 0.0],    # R = z1
    ])


def _exact_det4(m: np.ndarray) -> float:
    """Exact determinant of a small constant matrix by permutation expansion."""
    total = 0.0
    for perm in permutations(range(4)):
        sign = 1
        seen = list(perm)
        for i in range(4):           # parity by counting inversions
            for j in range(i + 1, 4):
                if seen[i] > seen[j]:
                    sign = -sign
        prod = 1.0
        for i in range(4):
            prod *= m[i, perm[i]]
        total += sign * prod
    return total


def relative_degree(params: ModelParams,
                    probe: SeirState | None = None) -> TransformReport:
    """Measure the relative degree of the output y = R numerically.

    Evaluates dy/dt at V = 0 and V = 1 at a probe state; the difference
    is the input coefficient mu*N, so the input appears after one
    derivative and the relative degree is one wherever mu*N != 0.
    """
    if probe is None:
        probe = SeirState(0.7 * params.N, 0.1 * params.N,
                          0.05 * params.N, 0.15 * params.N)
    coeff = derivative(probe, params, 1.0).dR - derivative(probe, params, 0.0).dR
    det = _exact_det4(transform_jacobian())
    return TransformReport(
        jacobian_det=det,
        relative_degree=1,
        well_posed=params.mu * params.N != 0.0,
        input_coefficient=coeff,
    )


def normal_derivative(z: NormalState, params: ModelParams,
                      V: float) -> tuple[float, float, float, float]:
    """Normal-form vector field (input appears only in dz1)."""
    mu, om, si, ga = params.mu, params.omega, params.sigma, params.gamma
    bp, N = params.beta_prime, params.N
    muN = mu * N
    z1, z2, z3, z4 = z.z1, z.z2, z.z3, z.z4
    f = bp * ((z2 - z1) * z4)
    dz1 = -(mu + om) * z1 + ga * z4 + muN * V
    dz2 = -mu * z2 + ga * z4 - f + muN
    dz3 = f - (mu + si) * z3
    dz4 = -(mu + ga) * z4 + si * z3
    return (dz1, dz2, dz3, dz4)


def zero_dynamics_derivative(z2: float, z3: float, z4: float,
                             params: ModelParams) -> tuple[float, float, float]:
    """Residual dynamics with the output held at zero (z1 = 0).

    The sum obeys d(z2+z3+z4)/dt = mu*(N - (z2+z3+z4)), so it is constant
    exactly on the sum = N manifold where the output-zeroed plant lives.
    """
    mu, si, ga = params.mu, params.sigma, params.gamma
    bp, N = params.beta_prime, params.N
    f = bp * (z2 * z4)
    dz2 = -mu * z2 + ga * z4 - f + mu * N
    dz3 = f - (mu + si) * z3
    dz4 = -(mu + ga) * z4 + si * z3
    return (dz2, dz3, dz4)


def zeroing_input(z4: float, params: ModelParams) -> float:
    """Input V = -gamma*z4/(mu*N) rendering dz1 identically zero at z1 = 0.

    At z1 = 0 the output equation is dz1 = gamma*z4 + mu*N*V, so the
    cancelling input carries a minus sign (negative vaccination: holding
    the immune population at zero removes immunity as fast as recovery
    adds it).
    """
    muN = params.mu * params.N
    if muN == 0.0:
        raise VaccinationChannelError("vaccination channel gain zero")
    return -params.gamma * z4 / muN


def synthesize_linearizing_law(g_prime: float, g1: float,
                               params: ModelParams) -> ImmuneFeedback:
    """Linearizing law for eta = -g_prime*z1 + g1*N, undone to x-coordinates.

    Returns the immune-feedback law with g = g_prime - (mu+omega); the
    closed loop then obeys dz1/dt = -g_prime*z1 + g1*N, hence
    z1(inf) = g1*N/g_prime for g_prime > 0.
    """
    if not g_prime > 0.0:
        raise ValueError("synthesize_linearizing_law requires g_prime > 0")
    return ImmuneFeedback(g=g_prime - (params.mu + params.omega), g1=g1)


@dataclass(frozen=True)
class NormalTrajectory:
    """Samples of a z-coordinate integration."""

    t: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray
    z4: np.ndarray
    V: np.ndarray
    params: ModelParams
    law: ControlLaw
    config: IntegratorConfig

    def __len__(self) -> int:
        return self.t.shape[0]

    def states(self) -> np.ndarray:
        return np.column_stack((self.z1, self.z2, self.z3, self.z4))


@dataclass(frozen=True)
class ZeroDynTrajectory:
    """Samples of a zero-dynamics integration."""

    t: np.ndarray
    z2: np.ndarray
    z3: np.ndarray
    z4: np.ndarray
    params: ModelParams
    config: IntegratorConfig

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def total(self) -> np.ndarray:
        return self.z2 + self.z3 + self.z4


def integrate_normal(z0: NormalState, params: ModelParams, law: ControlLaw,
                     config: IntegratorConfig) -> NormalTrajectory:
    """Fixed-step RK4 of the normal-form system under a law.

    The law is state feedback in x-coordinates; it is evaluated at the
    back-transformed state and held across each step, mirroring the
    x-space integrator step for step.
    """
    if config.adaptive:
        raise ValueError("integrate_normal supports fixed-step mode only")
    law_fn = compile_law(law, params)
    mu, om, si, ga = params.mu, params.omega, params.sigma, params.gamma
    bp, N = params.beta_prime, params.N
    muN = mu * N
    h = config.dt
    t0 = config.t0
    n = max(1, int(round((config.t_end - t0) / h)))
    stride = config.sampling_stride

    z1, z2, z3, z4 = z0.as_tuple()
    ts = []; c1 = []; c2 = []; c3 = []; c4 = []; Vs = []

    def rhs(a1, a2, a3, a4, vax):
        f = bp * ((a2 - a1) * a4)
        return (-(mu + om) * a1 + ga * a4 + vax,
                -mu * a2 + ga * a4 - f + muN,
                f - (mu + si) * a3,
                -(mu + ga) * a4 + si * a3)

    def record(t, V):
        if not math.isfinite(z1 + z2 + z3 + z4) or not math.isfinite(V):
            raise NonFiniteStateError(
                f"non-finite state at t = {t} (sample index {len(ts)})",
                t=t, sample_index=len(ts))
        ts.append(t); c1.append(z1); c2.append(z2); c3.append(z3); c4.append(z4)
        Vs.append(V)

    record(t0, law_fn(z2 - z1, z3, z4, z1, t0))
    for k in range(n):
        t = t0 + k * h
        V = law_fn(z2 - z1, z3, z4, z1, t)
        vax = muN * V
        k1 = rhs(z1, z2, z3, z4, vax)
        k2 = rhs(z1 + 0.5 * h * k1[0], z2 + 0.5 * h * k1[1],
                 z3 + 0.5 * h * k1[2], z4 + 0.5 * h * k1[3], vax)
        k3 = rhs(z1 + 0.5 * h * k2[0], z2 + 0.5 * h * k2[1],
                 z3 + 0.5 * h * k2[2], z4 + 0.5 * h * k2[3], vax)
        k4 = rhs(z1 + h * k3[0], z2 + h * k3[1],
                 z3 + h * k3[2], z4 + h * k3[3], vax)
        sixth = h / 6.0
        z1 += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        z2 += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        z3 += sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        z4 += sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        if (k + 1) % stride == 0 or k + 1 == n:
            t_next = t0 + (k + 1) * h
            record(t_next, law_fn(z2 - z1, z3, z4, z1, t_next))

    return NormalTrajectory(
        t=np.asarray(ts), z1=np.asarray(c1), z2=np.asarray(c2),
        z3=np.asarray(c3), z4=np.asarray(c4), V=np.asarray(Vs),
        params=params, law=law, config=config)


def integrate_zero_dynamics(z0: tuple[float, float, float], params: ModelParams,
                            config: IntegratorConfig) -> ZeroDynTrajectory:
    """Fixed-step RK4 of the autonomous zero dynamics from (z2, z3, z4)."""
    if config.adaptive:
        raise ValueError("integrate_zero_dynamics supports fixed-step mode only")
    mu, si, ga = params.mu, params.sigma, params.gamma
    bp, N = params.beta_prime, params.N
    muN = mu * N
    h = config.dt
    t0 = config.t0
    n = max(1, int(round((config.t_end - t0) / h)))
    stride = config.sampling_stride

    z2, z3, z4 = z0
    if not all(math.isfinite(v) for v in z0):
        raise ValueError("initial zero-dynamics state must be finite")
    ts = []; c2 = []; c3 = []; c4 = []

    def rhs(a2, a3, a4):
        f = bp * (a2 * a4)
        return (-mu * a2 + ga * a4 - f + muN,
                f - (mu + si) * a3,
                -(mu + ga) * a4 + si * a3)

    def record(t):
        if not math.isfinite(z2 + z3 + z4):
            raise NonFiniteStateError(
                f"non-finite state at t = {t} (sample index {len(ts)})",
                t=t, sample_index=len(ts))
        ts.append(t); c2.append(z2); c3.append(z3); c4.append(z4)

    record(t0)
    for k in range(n):
        k1 = rhs(z2, z3, z4)
        k2 = rhs(z2 + 0.5 * h * k1[0], z3 + 0.5 * h * k1[1], z4 + 0.5 * h * k1[2])
        k3 = rhs(z2 + 0.5 * h * k2[0], z3 + 0.5 * h * k2[1], z4 + 0.5 * h * k2[2])
        k4 = rhs(z2 + h * k3[0], z3 + h * k3[1], z4 + h * k3[2])
        sixth = h / 6.0
        z2 += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        z3 += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        z4 += sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        if (k + 1) % stride == 0 or k + 1 == n:
            record(t0 + (k + 1) * h)

    return ZeroDynTrajectory(
        t=np.asarray(ts), z2=np.asarray(c2), z3=np.asarray(c3),
        z4=np.asarray(c4), params=params, config=config)
