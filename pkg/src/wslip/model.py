"""W-SLIP template model: parameters, states, stance and flight dynamics.

Stance configuration is ``q = (x, L, theta)``: wheel horizontal position, leg
length and leg angle from vertical (positive leaning forward).  Inputs are the
wheel torque ``tau_w`` and the series linear-actuator displacement ``delta_L``.
The wheel is treated as a point mass with negligible rotational inertia, and
CoM heights are measured from the wheel contact point (wheel radius ignored).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import kernels


class ModelDomainError(ValueError):
    """State outside the admissible set of the template (e.g. L <= 0)."""


class SingularDynamicsError(np.linalg.LinAlgError):
    """Mass matrix numerically singular."""


@dataclass(frozen=True)
class WSlipParams:
    m_b: float = 9.5
    m_w: float = 3.2
    r: float = 0.10
    K_s: float = 418.0
    L0: float = 0.79
    g: float = 9.81
    tau_w_max: float = 12.0
    F_leg_max: float = 200.0
    u_L_min: float = -0.6
    u_L_max: float = 1.0

    def __post_init__(self):
        for name in ("m_b", "m_w", "r", "K_s", "L0", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        for name in ("tau_w_max", "F_leg_max"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")
        if not self.u_L_min < self.u_L_max:
            raise ValueError("u_L_min must be below u_L_max")

    @property
    def M(self) -> float:
        """Total mass."""
        return self.m_b + self.m_w

    @property
    def body_fraction(self) -> float:
        return self.m_b / (self.m_b + self.m_w)

    @property
    def reduced_mass(self) -> float:
        return self.m_b * self.m_w / (self.m_b + self.m_w)

    def kernel_vector(self) -> tuple:
        return (self.m_b, self.m_w, self.r, self.K_s, self.L0, self.g)

    def replace(self, **changes) -> "WSlipParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StanceState:
    x: float
    L: float
    theta: float
    x_dot: float = 0.0
    L_dot: float = 0.0
    theta_dot: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ModelDomainError(f"leg length must be positive, got L={self.L!r}")

    @classmethod
    def from_array(cls, y) -> "StanceState":
        return cls(*(float(v) for v in y))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.L, self.theta, self.x_dot, self.L_dot, self.theta_dot])

    @property
    def q(self) -> np.ndarray:
        return np.array([self.x, self.L, self.theta])

    @property
    def q_dot(self) -> np.ndarray:
        return np.array([self.x_dot, self.L_dot, self.theta_dot])


@dataclass(frozen=True)
class StanceInput:
    tau_w: float
    delta_L: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tau_w, self.delta_L])


@dataclass(frozen=True)
class FlightState:
    c_x: float
    c_z: float
    c_x_dot: float
    c_z_dot: float
    theta: float
    theta_dot: float
    L: float
    L_dot: float

    @classmethod
    def from_array(cls, y) -> "FlightState":
        return cls(*(float(v) for v in y))

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])


def _stance_vec(state) -> np.ndarray:
    if isinstance(state, StanceState):
        return state.as_array()
    y = np.asarray(state, dtype=float)
    if y.shape != (6,):
        raise ValueError("stance state must be (x, L, theta, x_dot, L_dot, theta_dot)")
    if not y[1] > 0:
        raise ModelDomainError(f"leg length must be positive, got L={y[1]!r}")
    return y


def _input_vec(u) -> tuple[float, float]:
    if isinstance(u, StanceInput):
        return u.tau_w, u.delta_L
    tau, dL = u
    return float(tau), float(dL)


def stance_matrices(state, p: WSlipParams):
    """Return ``(H, C, B)`` of ``H(q) q_ddot + C(q, q_dot) = B u``."""
    _, L, th, _, Ld, thd = _stance_vec(state)
    s, c = math.sin(th), math.cos(th)
    m_b = p.m_b
    H = np.array([
        [m_b + p.m_w, m_b * s, m_b * L * c],
        [m_b * s, m_b, 0.0],
        [m_b * L * c, 0.0, m_b * L * L],
    ])
    C = np.array([
        2.0 * m_b * Ld * thd * c - m_b * L * thd ** 2 * s,
        -m_b * L * thd ** 2 + m_b * p.g * c - p.K_s * (p.L0 - L),
        2.0 * m_b * L * Ld * thd - m_b * p.g * L * s,
    ])
    B = np.array([[1.0 / p.r, 0.0], [0.0, p.K_s], [-1.0, 0.0]])
    return H, C, B


def stance_forward_dynamics(state, u, p: WSlipParams) -> np.ndarray:
    """Stance accelerations ``q_ddot = H^-1 (B u - C)``."""
    y = _stance_vec(state)
    tau, dL = _input_vec(u)
    H, C, B = stance_matrices(y, p)
    if np.linalg.cond(H) > 1e12:
        raise SingularDynamicsError("stance mass matrix is numerically singular")
    return np.linalg.solve(H, B @ np.array([tau, dL]) - C)


def reduced_mass_matrix(L, theta, p: WSlipParams) -> np.ndarray:
    m_b, r = p.m_b, p.r
    return np.array([[m_b, 0.0],
                     [r * m_b * math.sin(theta), m_b * L * L + r * m_b * L * math.cos(theta)]])


def reduced_dynamics(q_hat, u_hat, p: WSlipParams) -> np.ndarray:
    """Accelerations ``(L_ddot, theta_ddot)`` of the reduced, fully actuated model.

    ``q_hat`` is ``(L, theta, L_dot, theta_dot)`` and ``u_hat`` is
    ``(x_ddot, delta_L)``.
    """
    L, th, Ld, thd = (float(v) for v in q_hat)
    ux, uL = (float(v) for v in u_hat)
    if not L > 0:
        raise ModelDomainError(f"leg length must be positive, got L={L!r}")
    Mh = reduced_mass_matrix(L, th, p)
    if np.linalg.cond(Mh) > 1e12:
        raise SingularDynamicsError("reduced mass matrix is numerically singular")
    return np.array(kernels.reduced_accel(L, th, Ld, thd, ux, uL, p.kernel_vector()))


def flat_inputs(L, theta, L_dot, theta_dot, L_ddot, theta_ddot, p: WSlipParams):
    """Invert the reduced dynamics: flat-output derivatives -> ``(x_ddot, delta_L)``.

    Vectorised over array arguments.
    """
    m_b, r = p.m_b, p.r
    s, c = np.sin(theta), np.cos(theta)
    c1 = -m_b * L * theta_dot ** 2 + m_b * p.g * c - p.K_s * (p.L0 - L)
    c2 = 2.0 * m_b * (L + r * c) * L_dot * theta_dot - m_b * L * s * (p.g + r * theta_dot ** 2)
    lhs2 = r * m_b * s * L_ddot + (m_b * L ** 2 + r * m_b * L * c) * theta_ddot + c2
    x_ddot = -lhs2 / (m_b * L * c + r * (m_b + p.m_w))
    delta_L = (m_b * L_ddot + c1 + m_b * s * x_ddot) / p.K_s
    return x_ddot, delta_L


def recover_wheel_torque(L, theta, L_dot, theta_dot, L_ddot, theta_ddot, x_ddot, p: WSlipParams):
    """Wheel torque implied by the first row of the stance dynamics."""
    s, c = np.sin(theta), np.cos(theta)
    return p.r * (p.m_b + p.m_w) * x_ddot + p.r * p.m_b * (
        s * (L_ddot - L * theta_dot ** 2) + c * (L * theta_ddot + 2.0 * L_dot * theta_dot))


def leg_force(L, delta_L, p: WSlipParams):
    """Spring force along the leg, positive when pushing the body away from the wheel."""
    return p.K_s * (p.L0 - L + delta_L)


def total_energy(state, delta_L, p: WSlipParams) -> float:
    """Kinetic + gravity + spring energy, with the spring rest length shifted by ``delta_L``."""
    y = _stance_vec(state)
    H, _, _ = stance_matrices(y, p)
    qd = y[3:]
    return float(0.5 * qd @ H @ qd + p.m_b * p.g * y[1] * math.cos(y[2])
                 + 0.5 * p.K_s * (p.L0 - y[1] + delta_L) ** 2)


def wheel_power(state, tau_w: float, p: WSlipParams) -> float:
    """Mechanical power delivered by the wheel motor."""
    y = _stance_vec(state)
    return tau_w * (y[3] / p.r - y[5])


def flight_inertia(L, p: WSlipParams):
    """Rotational inertia of the two-mass system about its CoM."""
    return p.reduced_mass * np.asarray(L) ** 2


def flight_derivative(s: FlightState, L_ddot: float, p: WSlipParams) -> FlightState:
    """Time derivative of a flight state under a commanded leg acceleration.

    The CoM is ballistic and ``d/dt(I(L) theta_dot) = 0``.
    """
    if not s.c_z > 0:
        raise ModelDomainError("flight requires c_z > 0")
    theta_ddot = -2.0 * s.L_dot * s.theta_dot / s.L
    return FlightState(s.c_x_dot, s.c_z_dot, 0.0, -p.g, s.theta_dot, theta_ddot, s.L_dot, float(L_ddot))


def apex_time(c_z_dot: float, p: WSlipParams) -> float:
    return c_z_dot / p.g


def com_state_from_stance(state, p: WSlipParams) -> FlightState:
    """Map a stance state at take-off to a flight state.

    The wheel is on the ground at the instant of take-off, so the CoM velocity
    is the body-fraction of the body velocity relative to a horizontally moving
    wheel.  Heights are measured from the contact point.
    """
    x, L, th, xd, Ld, thd = _stance_vec(state)
    f = p.body_fraction
    s, c = math.sin(th), math.cos(th)
    return FlightState(
        c_x=x + f * L * s,
        c_z=f * L * c,
        c_x_dot=xd + f * (Ld * s + L * thd * c),
        c_z_dot=f * (Ld * c - L * thd * s),
        theta=th, theta_dot=thd, L=L, L_dot=Ld,
    )


def wheel_from_flight(s: FlightState, p: WSlipParams):
    """Wheel contact-point position and velocity ``(x, z, x_dot, z_dot)`` during flight."""
    f = p.body_fraction
    sn, cs = math.sin(s.theta), math.cos(s.theta)
    x = s.c_x - f * s.L * sn
    z = s.c_z - f * s.L * cs
    xd = s.c_x_dot - f * (s.L_dot * sn + s.L * s.theta_dot * cs)
    zd = s.c_z_dot - f * (s.L_dot * cs - s.L * s.theta_dot * sn)
    return x, z, xd, zd
