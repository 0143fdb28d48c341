"""Tracking controllers: TV-LQR wheel law with disturbance observers, and a
task-space QP for the leg actuator.

The wheel subsystem error is ``e_c = (theta - theta*, theta_dot - theta_dot*,
x_dot - x_dot*)``.  The leg is a scalar task ``q_c = L`` whose generalized
force ``tau_c`` is the spring force along the leg.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from . import qp
from .model import WSlipParams, stance_matrices

DEFAULT_Q_LQR = np.diag([50.0, 5.0, 10.0])
DEFAULT_R_LQR = np.array([[1.0]])
QF_SCALE = 10.0
DOB_GAINS = (5.0, 50.0, 5.0, 50.0)
SIGN_EPS = 1e-4
KP_LEG = 400.0
KD_LEG = 40.0
CONTROL_DT = 0.002
RICCATI_LIMIT = 1e9


class RiccatiDivergenceError(ArithmeticError):
    pass


def smooth_sign(e, eps: float = SIGN_EPS):
    e = np.asarray(e, dtype=float)
    return e / (np.abs(e) + eps)


def error_state(state, theta_ref: float, theta_dot_ref: float, x_dot_ref: float) -> np.ndarray:
    """``e_c`` from a stance state ``(x, L, theta, x_dot, L_dot, theta_dot)``."""
    return np.array([state[2] - theta_ref, state[5] - theta_dot_ref, state[3] - x_dot_ref])


def wheel_jacobians(state, tau_w: float, delta_L: float, p: WSlipParams):
    """``(A_c, B_c)`` of the (theta, theta_dot, x_dot) subsystem at one point.

    ``L``, ``L_dot`` and ``delta_L`` are held at their values in ``state``.
    """
    y = np.asarray(state, dtype=float)
    L, th, Ld, thd = y[1], y[2], y[4], y[5]
    H, C, B = stance_matrices(y, p)
    m_b = p.m_b
    s, c = math.sin(th), math.cos(th)
    qdd = np.linalg.solve(H, B @ np.array([tau_w, delta_L]) - C)
    dH = np.array([[0.0, m_b * c, -m_b * L * s], [m_b * c, 0.0, 0.0], [-m_b * L * s, 0.0, 0.0]])
    dC_th = np.array([-2.0 * m_b * Ld * thd * s - m_b * L * thd ** 2 * c,
                      -m_b * p.g * s, -m_b * p.g * L * c])
    dC_thd = np.array([2.0 * m_b * Ld * c - 2.0 * m_b * L * thd * s,
                       -2.0 * m_b * L * thd, 2.0 * m_b * L * Ld])
    rhs = np.column_stack([-dC_th - dH @ qdd, -dC_thd, B[:, 0]])
    d = np.linalg.solve(H, rhs)  # rows (x, L, theta); columns (theta, theta_dot, tau)
    A = np.array([[0.0, 1.0, 0.0],
                  [d[2, 0], d[2, 1], 0.0],
                  [d[0, 0], d[0, 1], 0.0]])
    Bc = np.array([[0.0], [d[2, 2]], [d[0, 2]]])
    return A, Bc


@dataclass(frozen=True, eq=False)
class LinearizedPlan:
    times: np.ndarray
    A: np.ndarray  # (n, 3, 3)
    B: np.ndarray  # (n, 3, 1)

    def at(self, t: float):
        i = _index(self.times, t)
        return self.A[i], self.B[i]


def _index(times, t):
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    return int(min(max(round((t - times[0]) / dt), 0), len(times) - 1))


def linearize_along_plan(plan, p: WSlipParams | None = None, dt: float = CONTROL_DT) -> LinearizedPlan:
    """Wheel-subsystem Jacobians sampled along a stance plan."""
    p = p or plan.params
    ts = plan.sample_times(dt)
    A = np.empty((len(ts), 3, 3))
    B = np.empty((len(ts), 3, 1))
    for i, t in enumerate(ts):
        r = plan.reference(t)
        st = (r.x, r.L, r.theta, r.x_dot, r.L_dot, r.theta_dot)
        A[i], B[i] = wheel_jacobians(st, r.tau_w, r.delta_L, p)
    return LinearizedPlan(ts, A, B)


@dataclass(frozen=True, eq=False)
class GainSchedule:
    times: np.ndarray
    K: np.ndarray  # (n, m, nx)
    P: np.ndarray  # (n, nx, nx)

    def gain(self, t: float) -> np.ndarray:
        """Gain at ``t`` by linear interpolation, held outside the grid."""
        ts = self.times
        if t <= ts[0]:
            return self.K[0]
        if t >= ts[-1]:
            return self.K[-1]
        i = int(np.searchsorted(ts, t, side="right")) - 1
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        return (1 - w) * self.K[i] + w * self.K[i + 1]


def synthesize_tvlqr(times, A, B, Q=None, R=None, Qf=None) -> GainSchedule:
    """Backward integration of the differential Riccati equation from ``P(T) = Qf``.

    On each grid interval ``A`` and ``B`` are frozen at their midpoint value
    and the Riccati flow is propagated exactly through the Hamiltonian matrix
    exponential, ``[X; Y](t - h) = expm(-Ham h) [I; P(t)]``, ``P = Y X^-1``.
    This stays stable when the terminal weight makes the equation stiff.
    ``Qf`` defaults to ``QF_SCALE * Q``.
    """
    times = np.asarray(times, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 2:
        A = np.broadcast_to(A, (len(times),) + A.shape)
        B = np.broadcast_to(B, (len(times),) + B.shape)
    nx = A.shape[1]
    Q = DEFAULT_Q_LQR if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
    R = DEFAULT_R_LQR if R is None else np.atleast_2d(np.asarray(R, dtype=float))
    Qf = QF_SCALE * Q if Qf is None else np.atleast_2d(np.asarray(Qf, dtype=float))
    if np.min(np.linalg.eigvalsh(R)) <= 0:
        raise ValueError("R must be positive definite")
    if np.min(np.linalg.eigvalsh(Q)) < -1e-12:
        raise ValueError("Q must be positive semidefinite")
    Ri = np.linalg.inv(R)
    n = len(times)
    Ps = np.empty((n, nx, nx))
    Ks = np.empty((n, B.shape[2], nx))
    P = Qf.copy()
    Ps[-1] = P
    Ks[-1] = Ri @ B[-1].T @ P
    Ham = np.zeros((2 * nx, 2 * nx))
    for i in range(n - 1, 0, -1):
        h = times[i] - times[i - 1]
        Am, Bm = 0.5 * (A[i] + A[i - 1]), 0.5 * (B[i] + B[i - 1])
        Ham[:nx, :nx] = Am
        Ham[:nx, nx:] = -Bm @ Ri @ Bm.T
        Ham[nx:, :nx] = -Q
        Ham[nx:, nx:] = -Am.T
        E = expm(-h * Ham)
        X = E[:nx, :nx] + E[:nx, nx:] @ P
        Y = E[nx:, :nx] + E[nx:, nx:] @ P
        P = np.linalg.solve(X.T, Y.T).T
        P = 0.5 * (P + P.T)
        if not np.all(np.isfinite(P)) or np.max(np.abs(np.linalg.eigvalsh(P))) > RICCATI_LIMIT:
            raise RiccatiDivergenceError(f"Riccati solution diverged at t={times[i - 1]:.4g}")
        Ps[i - 1] = P
        Ks[i - 1] = Ri @ B[i - 1].T @ P
    return GainSchedule(times, Ks, Ps)


def closed_loop_transition(lin: LinearizedPlan, gains: GainSchedule, substeps: int = 8) -> np.ndarray:
    """State-transition matrix of ``e_dot = (A - B K) e`` over the plan horizon.

    Each grid interval is split into ``substeps`` pieces with ``A``, ``B`` and
    ``K`` interpolated at the piece midpoint and propagated by the matrix
    exponential.
    """
    ts = lin.times
    nx = lin.A.shape[1]
    Phi = np.eye(nx)
    for i in range(len(ts) - 1):
        h = (ts[i + 1] - ts[i]) / substeps
        for j in range(substeps):
            w = (j + 0.5) / substeps
            A = (1 - w) * lin.A[i] + w * lin.A[i + 1]
            B = (1 - w) * lin.B[i] + w * lin.B[i + 1]
            K = (1 - w) * gains.K[i] + w * gains.K[i + 1]
            Phi = expm(h * (A - B @ K)) @ Phi
    return Phi


@dataclass(frozen=True)
class ObserverState:
    """Super-twisting observer pair for the wheel error and the leg rate."""

    xi1: np.ndarray
    xi2: np.ndarray
    int1: np.ndarray
    int2: np.ndarray
    K1: float = DOB_GAINS[0]
    K2: float = DOB_GAINS[1]
    K3: float = DOB_GAINS[2]
    K4: float = DOB_GAINS[3]
    eps: float = SIGN_EPS
    D_w: np.ndarray | None = None
    D_c: np.ndarray | None = None

    def __post_init__(self):
        if min(self.K1, self.K2, self.K3, self.K4) <= 0:
            raise ValueError("observer gains must be positive")

    @classmethod
    def start(cls, e_c, q_dot_c, gains=DOB_GAINS, eps: float = SIGN_EPS) -> "ObserverState":
        e = np.array(e_c, dtype=float).reshape(-1)
        q = np.array(q_dot_c, dtype=float).reshape(-1)
        return cls(e.copy(), q.copy(), np.zeros_like(e), np.zeros_like(q), *gains, eps=eps,
                   D_w=np.zeros_like(e), D_c=np.zeros_like(q))

    def outputs(self, e_c, q_dot_c, dt: float = 0.0):
        """``(D_w, D_c)`` for the current measurements.

        With ``dt`` the integral terms are first advanced by one step, which is
        what ``dob_step`` applies over the coming interval.
        """
        s1 = self.xi1 - np.asarray(e_c, dtype=float).reshape(-1)
        s2 = self.xi2 - np.asarray(q_dot_c, dtype=float).reshape(-1)
        g1, g2 = smooth_sign(s1, self.eps), smooth_sign(s2, self.eps)
        D_w = -self.K1 * np.sqrt(np.abs(s1)) * g1 - self.K2 * (self.int1 + dt * g1)
        D_c = -self.K3 * np.sqrt(np.abs(s2)) * g2 - self.K4 * (self.int2 + dt * g2)
        return D_w, D_c

    def reset_leg(self, q_dot_c) -> "ObserverState":
        q = np.array(q_dot_c, dtype=float).reshape(-1)
        return replace(self, xi2=q, int2=np.zeros_like(q), D_c=np.zeros_like(q))


def dob_step(obs: ObserverState, e_c, A_c, B_c, dtau_w, q_dot_c, tau_c, H_c, G_c,
             dt: float) -> ObserverState:
    """One explicit step of both observers; stores the outputs used this tick.

    The integral accumulators are advanced before the outputs are formed
    (symplectic ordering).  Forming them from the old accumulators lets the
    smoothed sign, whose slope is ``1/eps`` near zero, drive a sustained
    oscillation at 2 ms steps.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    e = np.asarray(e_c, dtype=float).reshape(-1)
    qd = np.asarray(q_dot_c, dtype=float).reshape(-1)
    D_w, D_c = obs.outputs(e, qd, dt)
    Bv = np.asarray(B_c, dtype=float).reshape(len(e), -1)
    xi1 = obs.xi1 + dt * (np.asarray(A_c) @ e + Bv @ np.atleast_1d(dtau_w) + D_w)
    Hc = np.atleast_2d(H_c)
    xi2 = obs.xi2 + dt * (np.linalg.solve(Hc, np.atleast_1d(tau_c) - np.atleast_1d(G_c)) + D_c)
    int1 = obs.int1 + dt * smooth_sign(obs.xi1 - e, obs.eps)
    int2 = obs.int2 + dt * smooth_sign(obs.xi2 - qd, obs.eps)
    return replace(obs, xi1=xi1, xi2=xi2, int1=int1, int2=int2, D_w=D_w, D_c=D_c)


def wheel_torque(tau_ff: float, K, e_c, D_w, B_c, tau_max: float):
    """Composite wheel law; returns ``(tau_w, saturated)``.

    ``tau_w = tau_ff - K e_c - pinv(B_c) D_w``, clipped to ``+-tau_max``.
    """
    Bv = np.asarray(B_c, dtype=float).reshape(-1, 1)
    comp = (np.linalg.pinv(Bv) @ np.asarray(D_w, dtype=float).reshape(-1, 1)).item()
    fb = (np.asarray(K, dtype=float).reshape(1, -1) @ np.asarray(e_c, dtype=float).reshape(-1, 1)).item()
    tau = float(tau_ff) - fb - comp
    if abs(tau) > tau_max:
        return math.copysign(tau_max, tau), True
    return tau, False


def pd_command(p_ref, pd_ref, pdd_ref, p_meas, pd_meas, Kp: float = KP_LEG, Kd: float = KD_LEG):
    """Task acceleration command ``pdd* + Kp (p* - p) + Kd (pd* - pd)``."""
    return pdd_ref + Kp * (p_ref - p_meas) + Kd * (pd_ref - pd_meas)


@dataclass(frozen=True)
class TaskCommand:
    r_dot: np.ndarray
    J: np.ndarray
    J_dot: np.ndarray
    tau_lo: np.ndarray
    tau_hi: np.ndarray
    Q: np.ndarray | None = None

    @classmethod
    def scalar(cls, pdd_c: float, tau_lo: float, tau_hi: float) -> "TaskCommand":
        return cls(np.array([pdd_c]), np.eye(1), np.zeros((1, 1)), np.array([tau_lo]),
                   np.array([tau_hi]))


def task_space_control(cmd: TaskCommand, H_c, G_c, D_c, q_dot_c):
    """Solve the task-space QP over ``(q_ddot, tau_c)``.

    Returns ``(tau_c, q_ddot, solution)``.
    """
    H = np.atleast_2d(np.asarray(H_c, dtype=float))
    n = H.shape[0]
    J = np.atleast_2d(cmd.J)
    Q = np.eye(J.shape[0]) if cmd.Q is None else np.atleast_2d(cmd.Q)
    lo, hi = np.atleast_1d(cmd.tau_lo).astype(float), np.atleast_1d(cmd.tau_hi).astype(float)
    if np.any(lo > hi):
        raise qp.QpError("empty torque bounds")
    target = np.atleast_1d(cmd.r_dot) - np.atleast_2d(cmd.J_dot) @ np.atleast_1d(q_dot_c)
    P = np.zeros((2 * n, 2 * n))
    P[:n, :n] = J.T @ Q @ J
    c = np.concatenate([-J.T @ Q @ target, np.zeros(n)])
    A_eq = np.hstack([H, -np.eye(n)])
    b_eq = -np.atleast_1d(G_c) + H @ np.atleast_1d(D_c)
    A_in = np.vstack([np.hstack([np.zeros((n, n)), np.eye(n)]),
                      np.hstack([np.zeros((n, n)), -np.eye(n)])])
    b_in = np.concatenate([hi, -lo])
    sol = qp.solve(qp.QpProblem(P, c, A_eq, b_eq, A_in, b_in))
    if not sol.ok:
        raise qp.QpError(f"task-space QP {sol.status}", sol)
    return sol.z[n:], sol.z[:n], sol


def leg_force_bounds(L: float, p: WSlipParams, mode: str = "actuator"):
    """Bounds on the spring force implied by the actuator limits."""
    a_lo = max(-p.F_leg_max, p.K_s * p.u_L_min)
    a_hi = min(p.F_leg_max, p.K_s * p.u_L_max)
    if mode == "actuator":
        base = p.K_s * (p.L0 - L)
        return base + a_lo, base + a_hi
    lo = max(-p.F_leg_max, p.K_s * (p.L0 - L + p.u_L_min))
    hi = min(p.F_leg_max, p.K_s * (p.L0 - L + p.u_L_max))
    return lo, hi


def stance_leg_control(L_ref, Ld_ref, Ldd_ref, L, Ld, theta, D_c, p: WSlipParams,
                       Kp: float = KP_LEG, Kd: float = KD_LEG, mode: str = "actuator"):
    """Stance leg command; returns ``(delta_L, spring_force, task_acc)``."""
    pdd = pd_command(L_ref, Ld_ref, Ldd_ref, L, Ld, Kp, Kd)
    lo, hi = leg_force_bounds(L, p, mode)
    F, _, _ = task_space_control(TaskCommand.scalar(pdd, lo, hi), p.m_b,
                                 p.m_b * p.g * math.cos(theta), D_c, Ld)
    F = float(F[0])
    return F / p.K_s - p.L0 + L, F, pdd


def flight_tracking(plan, t: float, L: float, L_dot: float, theta_dot: float, p: WSlipParams,
                    D_c=0.0, Kp: float = KP_LEG, Kd: float = KD_LEG, mode: str = "actuator"):
    """Flight leg command tracking the planned leg length.

    Uses the reduced mass as the reflected inertia and the centrifugal term as
    the bias.  Returns ``(delta_L, spring_force, task_acc)``.
    """
    L_ref, Ld_ref, Ldd_ref = plan.leg(t)
    mu = p.reduced_mass
    pdd = pd_command(L_ref, Ld_ref, Ldd_ref, L, L_dot, Kp, Kd)
    lo, hi = leg_force_bounds(L, p, mode)
    F, _, _ = task_space_control(TaskCommand.scalar(pdd, lo, hi), mu,
                                 -mu * L * theta_dot ** 2, D_c, L_dot)
    F = float(F[0])
    return F / p.K_s - p.L0 + L, F, pdd
