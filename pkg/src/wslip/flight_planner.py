"""Flight-phase planning: ballistic timing and a leg-length polynomial.

During flight the CoM follows a parabola and the angular momentum
``mu L^2 theta_dot`` is conserved, so the only free motion is the leg length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import poly, qp
from .model import FlightState, ModelDomainError, WSlipParams

FLIGHT_DEGREE = 5
DEFAULT_L_DES = 0.45
TIE_BREAK = 1e-6
FIXED_POINT_ITERATIONS = 2
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class NoTouchdownError(ValueError):
    """The commanded touchdown CoM height is above the ballistic apex."""


class FlightPlanError(ValueError):
    """Apex time outside the flight interval or invalid take-off state."""


@dataclass(frozen=True)
class FlightTask:
    takeoff: FlightState
    L_des: float = DEFAULT_L_DES
    L_TD: float = 0.79
    L_dot_TD: float = 0.0
    theta_TD: float | None = None

    def __post_init__(self):
        if not self.takeoff.c_z_dot > 0:
            raise FlightPlanError("take-off vertical CoM velocity must be positive")
        if not (self.L_des > 0 and self.L_TD > 0):
            raise ValueError("L_des and L_TD must be positive")


@dataclass(frozen=True, eq=False)
class FlightPlan:
    task: FlightTask
    L: poly.PolyTraj
    T_top: float
    T_f: float
    theta_TD: float
    times: np.ndarray
    theta: np.ndarray
    objective: float
    ground_z: float = 0.0

    def leg(self, t: float) -> tuple[float, float, float]:
        """``(L, L_dot, L_ddot)`` at ``t`` (clamped to the horizon)."""
        t = min(max(float(t), 0.0), self.T_f)
        v, d, a = self.L.eval(t)
        return float(v[0]), float(d[0]), float(a[0])

    def theta_at(self, t: float) -> float:
        s = self.task.takeoff
        return float(predict_flight_theta(self.L, s.theta, s.theta_dot, None, self.T_f,
                                          [min(max(t, 0.0), self.T_f)])[0])


def touchdown_height(L_TD: float, theta_TD: float, p: WSlipParams, ground_z: float = 0.0) -> float:
    """CoM height at which the wheel meets ground at elevation ``ground_z``."""
    return p.body_fraction * L_TD * math.cos(theta_TD) + ground_z


def flight_time(state: FlightState, L_TD: float, theta_TD: float, p: WSlipParams,
                ground_z: float = 0.0) -> float:
    """Closed-form flight duration to the descending touchdown root."""
    vz = state.c_z_dot
    disc = vz * vz - 2.0 * p.g * (touchdown_height(L_TD, theta_TD, p, ground_z) - state.c_z)
    if disc < 0:
        raise NoTouchdownError(f"touchdown CoM height unreachable (discriminant {disc:.4g})")
    return (vz + math.sqrt(disc)) / p.g


def predict_flight_theta(L: poly.PolyTraj, theta0: float, theta_dot0: float, p, T_f: float,
                         ts=None) -> np.ndarray:
    """Leg angle from conserved angular momentum, ``theta_dot = theta_dot0 L0^2 / L^2``.

    Composite 8-point Gauss-Legendre quadrature between consecutive sample
    times.  ``p`` is unused (the reduced mass cancels) and kept for symmetry.
    """
    ts = np.linspace(0.0, T_f, 201) if ts is None else np.asarray(ts, dtype=float)
    if theta_dot0 == 0.0:
        return np.full(ts.shape, float(theta0))
    L0 = float(L.eval(0.0)[0][0])
    order = np.argsort(ts)
    knots = np.concatenate([[0.0], ts[order]])
    a, b = knots[:-1], knots[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    Lv = L.sample(np.clip(nodes, 0.0, L.T))[:, 0]
    if np.any(Lv <= 0):
        raise ModelDomainError("planned leg length not positive during flight")
    vals = (L0 * L0 / (Lv * Lv)).reshape(len(a), -1)
    seg = half * (vals @ _GL_W)
    out = np.empty_like(ts)
    out[order] = theta0 + theta_dot0 * np.cumsum(seg)
    return out


def _solve_leg(s: FlightState, L_des, L_TD, L_dot_TD, T_f, T_top, degree):
    N = degree
    e = poly.basis_row(T_top, N, 0, T_f)
    G = poly.gram_matrix(N, T_f, 2, scale=T_f)
    P = 2.0 * (np.outer(e, e) + TIE_BREAK * G)
    c = -2.0 * L_des * e
    A = np.vstack([poly.basis_row(0.0, N, 0, T_f), poly.basis_row(0.0, N, 1, T_f),
                   poly.basis_row(T_f, N, 0, T_f), poly.basis_row(T_f, N, 1, T_f)])
    b = np.array([s.L, s.L_dot, L_TD, L_dot_TD])
    sol = qp.solve_equality_qp(P, c, A, b)
    L = poly.PolyTraj(sol.z[None, :], T_f, T_f)
    return L, float((e @ sol.z - L_des) ** 2)


def plan_flight(task: FlightTask, p: WSlipParams, degree: int = FLIGHT_DEGREE,
                iterations: int = FIXED_POINT_ITERATIONS, ground=None) -> FlightPlan:
    """Leg-length plan maximising apex clearance between fixed boundary conditions.

    With ``theta_TD=None`` the touchdown angle comes from the momentum
    prediction, fixed-point iterated ``iterations`` times.  ``ground`` maps a
    horizontal position to terrain elevation (flat zero by default).
    """
    s = task.takeoff
    T_top = s.c_z_dot / p.g
    f = p.body_fraction
    th_TD = s.theta if task.theta_TD is None else task.theta_TD

    def ground_at(T, th):
        if ground is None:
            return 0.0
        x_w = s.c_x + s.c_x_dot * T - f * task.L_TD * math.sin(th)
        return float(ground(x_w))

    def solve(th):
        gz = 0.0
        T_f = flight_time(s, task.L_TD, th, p, gz)
        if ground is not None:
            for _ in range(20):
                gz_new = ground_at(T_f, th)
                T_new = flight_time(s, task.L_TD, th, p, gz_new)
                done = abs(T_new - T_f) < 1e-13
                gz, T_f = gz_new, T_new
                if done:
                    break
        if not 0.0 < T_top < T_f:
            raise FlightPlanError(f"apex time {T_top:.4g} s outside (0, {T_f:.4g}) s")
        L, obj = _solve_leg(s, task.L_des, task.L_TD, task.L_dot_TD, T_f, T_top, degree)
        return T_f, gz, L, obj

    T_f, gz, L, obj = solve(th_TD)
    if task.theta_TD is None:
        for _ in range(iterations):
            th_TD = float(predict_flight_theta(L, s.theta, s.theta_dot, p, T_f, [T_f])[0])
            T_f, gz, L, obj = solve(th_TD)
    ts = np.linspace(0.0, T_f, 201)
    theta = predict_flight_theta(L, s.theta, s.theta_dot, p, T_f, ts)
    return FlightPlan(task, L, T_top, T_f, th_TD, ts, theta, obj, gz)
