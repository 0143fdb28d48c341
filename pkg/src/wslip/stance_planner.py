"""Flatness-based stance planning for take-off and landing.

The cascade is:

1. a double-integrator QP for the forward acceleration reference ``x_ddot_ref``;
2. a 1-D actuated spring-mass QP for the leg reference ``L_ref`` and ``u_L_ref``;
3. RK4 integration of the reduced ``(L, theta)`` dynamics under those inputs;
4. a polynomial fit of the integrated ``(L_ref, theta_ref)``;
5. the final QP over flat-output coefficients ``gamma = (alpha, beta)``.

Flat-output vectors are ordered ``(L, L_dot, L_ddot, theta, theta_dot, theta_ddot)``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, poly, qp
from .model import ModelDomainError, WSlipParams, flat_inputs, recover_wheel_torque

DEFAULT_Q1 = np.diag([10.0, 1.0, 0.1, 10.0, 1.0, 0.1])
DEFAULT_Q2 = 1e3 * DEFAULT_Q1
TAKEOFF_HORIZON = 0.4
LANDING_HORIZON = 0.5
CONSTRAINT_SAMPLES = 41
STEPS_PER_SAMPLE = 8
DENSE_INTERVALS = 400
LEG_FORCE_MODES = ("actuator", "spring")

# Reference take-off: (L_T, L_dot_T, theta_T, theta_dot_T) from a crouched 0.6 m start.
REFERENCE_TAKEOFF_TARGET = (0.79, 3.42, math.radians(5.0), math.radians(-9.91))
REFERENCE_L_START = 0.6


class PlanRejected(RuntimeError):
    """A plan failed the input-limit post-check; the plan is attached."""

    def __init__(self, plan: "StancePlan"):
        super().__init__("; ".join(plan.violations) or "plan rejected")
        self.plan = plan


@dataclass(frozen=True)
class StanceTask:
    """Boundary data of one stance planning problem.

    ``*_start`` fields describe the measured state at the start of the
    horizon, ``*_T`` fields the target flat output at its end.  ``v0``
    defaults to ``x_dot_start``.
    """

    L_start: float
    theta_start: float
    L_T: float
    theta_T: float
    T: float
    L_dot_start: float = 0.0
    theta_dot_start: float = 0.0
    L_ddot_start: float = 0.0
    theta_ddot_start: float = 0.0
    x_start: float = 0.0
    x_dot_start: float = 0.0
    L_dot_T: float = 0.0
    L_ddot_T: float = 0.0
    theta_dot_T: float = 0.0
    theta_ddot_T: float = 0.0
    v_T: float = 0.0
    v_dot_T: float = 0.0
    v0: float | None = None
    mode: str = "takeoff"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got T={self.T!r}")
        if not (self.L_start > 0 and self.L_T > 0):
            raise ModelDomainError("leg lengths must be positive")
        if self.mode not in ("takeoff", "landing"):
            raise ValueError(f"mode must be 'takeoff' or 'landing', got {self.mode!r}")
        vals = [getattr(self, f) for f in self.__dataclass_fields__ if f != "mode"]
        if not all(v is None or math.isfinite(v) for v in vals):
            raise ValueError("task fields must be finite")

    @property
    def v_start(self) -> float:
        return self.x_dot_start if self.v0 is None else self.v0

    @property
    def y0(self) -> np.ndarray:
        return np.array([self.L_start, self.L_dot_start, self.L_ddot_start,
                         self.theta_start, self.theta_dot_start, self.theta_ddot_start])

    @property
    def y_d(self) -> np.ndarray:
        return np.array([self.L_T, self.L_dot_T, self.L_ddot_T,
                         self.theta_T, self.theta_dot_T, self.theta_ddot_T])

    def replace(self, **changes) -> "StanceTask":
        return replace(self, **changes)

    def mirrored(self) -> "StanceTask":
        """Reflect through the vertical plane: x, theta and their rates flip sign."""
        flip = ("theta_start", "theta_dot_start", "theta_ddot_start", "x_start", "x_dot_start",
                "theta_T", "theta_dot_T", "theta_ddot_T", "v_T", "v_dot_T")
        ch = {k: -getattr(self, k) for k in flip}
        if self.v0 is not None:
            ch["v0"] = -self.v0
        return self.replace(**ch)

    @classmethod
    def takeoff(cls, start, target, T: float = TAKEOFF_HORIZON, v_T: float = 0.0,
                p: WSlipParams | None = None, **kw) -> "StanceTask":
        """Build a take-off task from ``start=(x, L, theta, x_dot, L_dot, theta_dot)``
        and ``target=(L_T, L_dot_T, theta_T, theta_dot_T)``.

        Target accelerations default to the ballistic continuation (zero leg
        force, conserved angular momentum).
        """
        p = p or WSlipParams()
        x, L, th, xd, Ld, thd = (float(v) for v in start)
        L_T, Ld_T, th_T, thd_T = (float(v) for v in target)
        kw.setdefault("L_ddot_T", -p.g * math.cos(th_T) + L_T * thd_T ** 2)
        kw.setdefault("theta_ddot_T", -2.0 * Ld_T * thd_T / L_T)
        return cls(L_start=L, theta_start=th, L_T=L_T, theta_T=th_T, T=T, L_dot_start=Ld,
                   theta_dot_start=thd, x_start=x, x_dot_start=xd, L_dot_T=Ld_T,
                   theta_dot_T=thd_T, v_T=v_T, mode="takeoff", **kw)

    @classmethod
    def landing(cls, start, v_cmd: float, L_T: float, T: float = LANDING_HORIZON,
                **kw) -> "StanceTask":
        """Landing task towards upright rolling at ``v_cmd`` with leg length ``L_T``."""
        x, L, th, xd, Ld, thd = (float(v) for v in start)
        return cls(L_start=L, theta_start=th, L_T=float(L_T), theta_T=0.0, T=T, L_dot_start=Ld,
                   theta_dot_start=thd, x_start=x, x_dot_start=xd, v_T=float(v_cmd),
                   mode="landing", **kw)


@dataclass(frozen=True)
class PlanPoint:
    """Plan reference at one instant."""

    t: float
    x: float
    x_dot: float
    x_ddot: float
    L: float
    L_dot: float
    L_ddot: float
    theta: float
    theta_dot: float
    theta_ddot: float
    tau_w: float
    delta_L: float


@dataclass(frozen=True, eq=False)
class StancePlan:
    task: StanceTask
    params: WSlipParams
    flat: poly.PolyTraj
    y_ref: poly.PolyTraj
    x_ref: poly.PolyTraj
    L_ref: poly.PolyTraj
    u_ref: poly.PolyTraj
    grid: np.ndarray
    x: np.ndarray
    x_dot: np.ndarray
    x_ddot: np.ndarray
    tau_w: np.ndarray
    delta_L: np.ndarray
    leg_force: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    violations: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return self.flat.T

    @property
    def accepted(self) -> bool:
        return not self.violations

    @property
    def max_abs_tau_w(self) -> float:
        return float(np.max(np.abs(self.tau_w)))

    @property
    def max_abs_leg_force(self) -> float:
        return float(np.max(np.abs(self.leg_force)))

    @property
    def gamma(self) -> np.ndarray:
        return self.flat.coeffs.reshape(-1)

    def flat_output(self, t: float) -> np.ndarray:
        """``y(t) = (L, L_dot, L_ddot, theta, theta_dot, theta_ddot)``."""
        v, d, a = self.flat.eval(t)
        return np.array([v[0], d[0], a[0], v[1], d[1], a[1]])

    def _hermite(self, t, f, df):
        g = self.grid
        t = min(max(float(t), 0.0), g[-1])
        i = min(int(np.searchsorted(g, t, side="right")) - 1, len(g) - 2)
        h = g[i + 1] - g[i]
        s = (t - g[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1]

    def reference(self, t: float) -> PlanPoint:
        """Planned state, accelerations and feedforward inputs at ``t``."""
        y = self.flat_output(t)
        L, Ld, Ldd, th, thd, thdd = y
        p = self.params
        xdd, dL = flat_inputs(L, th, Ld, thd, Ldd, thdd, p)
        tau = recover_wheel_torque(L, th, Ld, thd, Ldd, thdd, xdd, p)
        x = self._hermite(t, self.x, self.x_dot)
        xd = self._hermite(t, self.x_dot, self.x_ddot)
        return PlanPoint(float(t), float(x), float(xd), float(xdd), float(L), float(Ld),
                         float(Ldd), float(th), float(thd), float(thdd), float(tau), float(dL))

    def feedforward(self, t: float) -> tuple[float, float]:
        """``(tau_w*, Delta L*)`` at ``t``."""
        r = self.reference(t)
        return r.tau_w, r.delta_L

    def sample_times(self, dt: float) -> np.ndarray:
        n = int(math.floor(self.T / dt + 1e-9))
        return np.arange(n + 1) * dt

    def tau_samples(self, dt: float) -> np.ndarray:
        """Feedforward wheel torque sampled at the control period ``dt``."""
        return np.array([self.reference(t).tau_w for t in self.sample_times(dt)])

    def table(self, dt: float) -> dict:
        """Column-oriented samples for CSV output."""
        ts = self.sample_times(dt)
        pts = [self.reference(t) for t in ts]
        cols = {k: np.array([getattr(pt, k) for pt in pts]) for k in PlanPoint.__dataclass_fields__}
        yr = self.y_ref.sample(ts)
        ur = self.u_ref.sample(ts)
        cols["L_ref"], cols["theta_ref"] = yr[:, 0], yr[:, 1]
        cols["x_ddot_ref"], cols["u_L_ref"] = ur[:, 0], ur[:, 1]
        cols["leg_force"] = _limited_force(cols["L"], cols["delta_L"], self.params,
                                           self.diagnostics.get("leg_force_mode", "actuator"))
        cols["tau_margin"] = self.params.tau_w_max - np.abs(cols["tau_w"])
        cols["force_margin"] = self.params.F_leg_max - np.abs(cols["leg_force"])
        return cols


def _limited_force(L, delta_L, p: WSlipParams, mode: str):
    """Leg force subject to ``F_leg_max`` under the selected reading."""
    if mode == "actuator":
        return p.K_s * np.asarray(delta_L)
    if mode == "spring":
        return p.K_s * (p.L0 - np.asarray(L) + np.asarray(delta_L))
    raise ValueError(f"unknown leg force mode {mode!r}")


def plan_x_reference(v0: float, vT: float, v_dot_T: float, T: float,
                     degree: int = poly.DEFAULT_DEGREE, x0: float = 0.0) -> poly.PolyTraj:
    """Minimum ``int x_ddot^2`` polynomial with the velocity boundary conditions."""
    if not T > 0:
        raise ValueError("horizon must be positive")
    N = degree
    G = poly.gram_matrix(N, T, 2, scale=T)
    A = np.vstack([poly.basis_row(0.0, N, 0, T), poly.basis_row(0.0, N, 1, T),
                   poly.basis_row(T, N, 1, T), poly.basis_row(T, N, 2, T)])
    b = np.array([x0, v0, vT, v_dot_T])
    sol = qp.solve_equality_qp(2.0 * G, np.zeros(N + 1), A, b)
    return poly.PolyTraj(sol.z[None, :], T, T)


def _force_rows(ts, N, T, p: WSlipParams, mode: str, margin: float):
    """Inequality rows bounding u_L and the limited leg force of the spring-mass model."""
    V0 = poly.basis_rows(ts, N, 0, T)
    V2 = poly.basis_rows(ts, N, 2, T)
    # u_L = m_b (L_ddot + g) / K_s - L0 + L
    U = p.m_b / p.K_s * V2 + V0
    u_off = p.m_b * p.g / p.K_s - p.L0
    rows = [U, -U]
    rhs = [np.full(len(ts), p.u_L_max - u_off), np.full(len(ts), -(p.u_L_min - u_off))]
    F = margin * p.F_leg_max
    if mode == "actuator":
        rows += [p.K_s * U, -p.K_s * U]
        rhs += [np.full(len(ts), F - p.K_s * u_off), np.full(len(ts), F + p.K_s * u_off)]
    else:
        # spring force of the 1-D model is m_b (L_ddot + g)
        rows += [p.m_b * V2, -p.m_b * V2]
        rhs += [np.full(len(ts), F - p.m_b * p.g), np.full(len(ts), F + p.m_b * p.g)]
    return np.vstack(rows), np.concatenate(rhs)


def plan_L_reference(task: StanceTask, p: WSlipParams, degree: int = poly.DEFAULT_DEGREE,
                     n_constraint: int = CONSTRAINT_SAMPLES, leg_force_mode: str = "actuator",
                     force_margin: float = 0.9, warm_start=None):
    """Leg-length reference from the actuated spring-mass QP.

    Returns ``(L_ref, u_L_ref, solution)``; ``u_L_ref`` is exact because the
    spring-mass model is linear in the polynomial coefficients.
    Raises ``QpError`` when the bounds cannot be met.
    """
    N, T = degree, task.T
    G = poly.gram_matrix(N, T, 2, scale=T)
    A_eq = np.vstack([poly.basis_row(0.0, N, 0, T), poly.basis_row(0.0, N, 1, T),
                      poly.basis_row(T, N, 0, T), poly.basis_row(T, N, 1, T),
                      poly.basis_row(T, N, 2, T)])
    b_eq = np.array([task.L_start, task.L_dot_start, task.L_T, task.L_dot_T, task.L_ddot_T])
    ts = np.linspace(0.0, T, n_constraint)
    A_in, b_in = _force_rows(ts, N, T, p, leg_force_mode, force_margin)
    sol = qp.solve(qp.QpProblem(2.0 * G, np.zeros(N + 1), A_eq, b_eq, A_in, b_in),
                   warm_start=warm_start)
    if not sol.ok:
        raise qp.QpError(
            f"leg reference QP {sol.status}: leg force limit {force_margin:g} x {p.F_leg_max:g} N and "
            f"stroke [{p.u_L_min:g}, {p.u_L_max:g}] m cannot take L from {task.L_start:.3f} m, "
            f"{task.L_dot_start:.3f} m/s to {task.L_T:.3f} m, {task.L_dot_T:.3f} m/s in {T:.3f} s", sol)
    alpha = sol.z
    # u_L = m_b/K_s * L_ddot + L + const, in the same normalised basis
    u = p.m_b / p.K_s * _second_derivative_coeffs(alpha, T) + alpha
    u[0] += p.m_b * p.g / p.K_s - p.L0
    return poly.PolyTraj(alpha[None, :], T, T), poly.PolyTraj(u[None, :], T, T), sol


def _second_derivative_coeffs(c, T):
    """Coefficients (same normalised basis, same length) of the second derivative."""
    N = len(c) - 1
    out = np.zeros_like(c)
    j = np.arange(2, N + 1)
    out[:N - 1] = c[2:] * j * (j - 1) / T ** 2
    return out


def integrate_reference(x_ref: poly.PolyTraj, u_L_ref: poly.PolyTraj, q_hat0, p: WSlipParams,
                        n_samples: int = poly.FIT_SAMPLES, steps_per_sample: int = STEPS_PER_SAMPLE):
    """RK4 integration of the reduced dynamics under the input references.

    ``x_ref`` is the position polynomial (its second derivative drives the
    model).  Returns ``(times, samples, valid)`` where samples are rows of
    ``(L, theta, L_dot, theta_dot)``.  When the integration leaves the domain
    (|theta| > pi/2 or L <= 0) the remaining samples hold the last valid row
    and ``valid`` is False.
    """
    T = x_ref.T
    cx = x_ref.monomial_coeffs(2)[0]
    cu = u_L_ref.monomial_coeffs(0)[0]
    n_steps = (n_samples - 1) * steps_per_sample
    out, n_valid = kernels.rk4_reduced_poly(np.asarray(q_hat0, dtype=float), cx, cu,
                                            p.kernel_vector(), T, n_steps, steps_per_sample)
    return np.linspace(0.0, T, n_samples), out, n_valid == n_samples


def _flat_qp(y_fit: poly.PolyTraj, task: StanceTask, Q1, Q2, N):
    T = task.T
    q1 = np.diag(Q1)
    if np.any(Q1 - np.diag(q1)):
        raise ValueError("Q1 must be diagonal")
    Gs = [poly.gram_matrix(N, T, k, scale=T) for k in range(3)]
    GL = q1[0] * Gs[0] + q1[1] * Gs[1] + q1[2] * Gs[2]
    Gt = q1[3] * Gs[0] + q1[4] * Gs[1] + q1[5] * Gs[2]
    n = N + 1
    G = np.zeros((2 * n, 2 * n))
    G[:n, :n] = GL
    G[n:, n:] = Gt
    PhiT = poly.block_basis(T, N, T)
    g_ref = y_fit.coeffs.reshape(-1)
    P = 2.0 * (G + PhiT.T @ Q2 @ PhiT)
    c = -2.0 * (G @ g_ref + PhiT.T @ Q2 @ task.y_d)
    Phi0 = poly.block_basis(0.0, N, T)
    sol = qp.solve_equality_qp(P, c, Phi0, task.y0)
    # add the constant part so the reported value is the true cost
    sol.objective += g_ref @ G @ g_ref + task.y_d @ Q2 @ task.y_d
    return sol


class StancePlanner:
    """Stance planning cascade with per-instance warm starts.

    ``leg_force_mode`` selects which force is checked against ``F_leg_max``:
    ``"actuator"`` bounds the series actuator's input force ``K_s * Delta L``,
    ``"spring"`` bounds the total spring force ``K_s (L0 - L + Delta L)``.
    """

    def __init__(self, params: WSlipParams | None = None, Q1=None, Q2=None,
                 degree: int = poly.DEFAULT_DEGREE, n_constraint: int = CONSTRAINT_SAMPLES,
                 fit_samples: int = poly.FIT_SAMPLES, steps_per_sample: int = STEPS_PER_SAMPLE,
                 leg_force_mode: str = "actuator", force_margin: float = 0.9,
                 L_min: float = 0.1, dense_intervals: int = DENSE_INTERVALS):
        self.params = params or WSlipParams()
        self.Q1 = np.array(DEFAULT_Q1 if Q1 is None else Q1, dtype=float)
        self.Q2 = np.array(DEFAULT_Q2 if Q2 is None else Q2, dtype=float)
        if self.Q1.shape != (6, 6) or self.Q2.shape != (6, 6):
            raise ValueError("Q1 and Q2 must be 6x6")
        if leg_force_mode not in LEG_FORCE_MODES:
            raise ValueError(f"leg_force_mode must be one of {LEG_FORCE_MODES}")
        self.degree = degree
        self.n_constraint = n_constraint
        self.fit_samples = fit_samples
        self.steps_per_sample = steps_per_sample
        self.leg_force_mode = leg_force_mode
        self.force_margin = force_margin
        self.L_min = L_min
        self.dense_intervals = dense_intervals
        self._warm = None
        s = np.linspace(0.0, 1.0, 2 * dense_intervals + 1)
        self._unit_grid = s
        self._unit_basis = [poly.basis_rows(s, degree, k, 1.0) for k in range(3)]

    def plan(self, task: StanceTask) -> StancePlan:
        """Run the cascade; the returned plan carries the post-check verdict."""
        t0 = time.perf_counter()
        p, N, T = self.params, self.degree, task.T
        x_ref = plan_x_reference(task.v_start, task.v_T, task.v_dot_T, T, N, task.x_start)
        L_ref, u_L_ref, lsol = plan_L_reference(task, p, N, self.n_constraint,
                                                self.leg_force_mode, self.force_margin,
                                                warm_start=self._warm)
        self._warm = lsol.active_set
        q_hat0 = (task.L_start, task.theta_start, task.L_dot_start, task.theta_dot_start)
        ts, samples, valid = integrate_reference(x_ref, u_L_ref, q_hat0, p, self.fit_samples,
                                                 self.steps_per_sample)
        y_fit = poly.fit_least_squares(ts, samples[:, :2], N, T, scale=T)
        fit_res = float(np.sqrt(np.mean((poly.basis_rows(ts, N, 0, T) @ y_fit.coeffs.T
                                         - samples[:, :2]) ** 2)))
        fsol = _flat_qp(y_fit, task, self.Q1, self.Q2, N)
        n = N + 1
        flat = poly.PolyTraj(fsol.z.reshape(2, n), T, T)
        u_ref = poly.PolyTraj(np.vstack([_second_derivative_coeffs(x_ref.coeffs[0], T),
                                         u_L_ref.coeffs[0]]), T, T)
        plan = self._evaluate(task, flat, y_fit, x_ref, L_ref, u_ref, {
            "x_ref_status": "optimal",
            "L_ref_status": lsol.status,
            "flat_status": fsol.status,
            "flat_objective": float(fsol.objective),
            "fit_residual": fit_res,
            "reference_valid": bool(valid),
            "initial_residual": float(np.max(np.abs(poly.block_basis(0.0, N, T) @ fsol.z - task.y0))),
            "leg_force_mode": self.leg_force_mode,
        })
        plan.diagnostics["solve_time"] = time.perf_counter() - t0
        return plan

    def _evaluate(self, task, flat, y_fit, x_ref, L_ref, u_ref, diag) -> StancePlan:
        p, T = self.params, task.T
        s = self._unit_grid
        grid = s * T
        Y = [(B @ flat.coeffs.T) / T ** k for k, B in enumerate(self._unit_basis)]
        L, th = Y[0][:, 0], Y[0][:, 1]
        Ld, thd = Y[1][:, 0], Y[1][:, 1]
        Ldd, thdd = Y[2][:, 0], Y[2][:, 1]
        with np.errstate(all="ignore"):
            xdd, dL = flat_inputs(L, th, Ld, thd, Ldd, thdd, p)
            tau = recover_wheel_torque(L, th, Ld, thd, Ldd, thdd, xdd, p)
        # x_dot and x on the coarse grid (every other point), RK4 in time with
        # midpoint accelerations; then interpolate midpoints.
        h = 2.0 * (grid[1] - grid[0])
        a0, am, a1 = xdd[0:-1:2], xdd[1::2], xdd[2::2]
        dv = h / 6.0 * (a0 + 4.0 * am + a1)
        v = np.concatenate([[task.x_dot_start], task.x_dot_start + np.cumsum(dv)])
        dx = h * v[:-1] + h * h / 6.0 * (a0 + 2.0 * am)
        x = np.concatenate([[task.x_start], task.x_start + np.cumsum(dx)])
        force = _limited_force(L, dL, p, self.leg_force_mode)
        violations = []
        if not np.all(np.isfinite(tau)) or not np.all(np.isfinite(force)):
            violations.append("non-finite feedforward")
        else:
            if np.max(np.abs(tau)) > p.tau_w_max:
                violations.append(f"wheel torque limit exceeded (|tau_w| = {np.max(np.abs(tau)):.3f} "
                                  f"> {p.tau_w_max} N m)")
            if np.max(np.abs(force)) > p.F_leg_max:
                violations.append(f"leg force limit exceeded (|F| = {np.max(np.abs(force)):.3f} "
                                  f"> {p.F_leg_max} N)")
        if np.min(L) <= self.L_min:
            violations.append(f"leg length below minimum (L = {np.min(L):.3f} <= {self.L_min} m)")
        if np.max(np.abs(th)) >= 0.5 * math.pi:
            violations.append("leg angle beyond horizontal")
        cg = grid[::2]
        return StancePlan(task=task, params=p, flat=flat, y_ref=y_fit, x_ref=x_ref, L_ref=L_ref,
                          u_ref=u_ref, grid=cg, x=x, x_dot=v, x_ddot=xdd[::2], tau_w=tau,
                          delta_L=dL, leg_force=force, Q1=self.Q1, Q2=self.Q2,
                          violations=tuple(violations), diagnostics=diag)


def plan_stance(task: StanceTask, p: WSlipParams | None = None, Q1=None, Q2=None,
                **planner_kw) -> StancePlan:
    """Plan one stance phase; raises ``PlanRejected`` if the post-check fails."""
    plan = StancePlanner(p, Q1, Q2, **planner_kw).plan(task)
    if not plan.accepted:
        raise PlanRejected(plan)
    return plan


@dataclass
class RoaResult:
    """Accept/reject field over ``(theta, theta_dot, L_dot)``; angles in degrees."""

    theta_deg: np.ndarray
    theta_dot_deg_s: np.ndarray
    L_dot: np.ndarray
    accepted: np.ndarray
    max_abs_tau_w: np.ndarray
    max_abs_leg_force: np.ndarray

    def rows(self):
        """Flattened rows in CSV column order, theta slowest."""
        for i, a in enumerate(self.theta_deg):
            for j, b in enumerate(self.theta_dot_deg_s):
                for k, c in enumerate(self.L_dot):
                    yield (float(a), float(b), float(c), int(self.accepted[i, j, k]),
                           float(self.max_abs_tau_w[i, j, k]), float(self.max_abs_leg_force[i, j, k]))

    def slice_fraction(self, theta_deg: float) -> float:
        i = int(np.argmin(np.abs(self.theta_deg - theta_deg)))
        return float(np.mean(self.accepted[i]))


def _roa_slice(args):
    th_deg, thd_degs, L_dots, L_start, target, T, v_T, p, planner_kw = args
    planner = StancePlanner(p, **planner_kw)
    shape = (len(thd_degs), len(L_dots))
    acc = np.zeros(shape, dtype=bool)
    tau = np.full(shape, np.nan)
    force = np.full(shape, np.nan)
    for j, thd in enumerate(thd_degs):
        for k, Ld in enumerate(L_dots):
            start = (0.0, L_start, math.radians(th_deg), 0.0, Ld, math.radians(thd))
            try:
                plan = planner.plan(StanceTask.takeoff(start, target, T=T, v_T=v_T, p=p))
            except (qp.QpError, np.linalg.LinAlgError, ModelDomainError, poly.FitError):
                continue
            acc[j, k] = plan.accepted
            tau[j, k] = plan.max_abs_tau_w
            force[j, k] = plan.max_abs_leg_force
    return acc, tau, force


def roa_sweep(theta_deg, theta_dot_deg_s, L_dot, L_start: float = REFERENCE_L_START,
              target=REFERENCE_TAKEOFF_TARGET, T: float = TAKEOFF_HORIZON, v_T: float = 0.0,
              p: WSlipParams | None = None, jobs: int = 1, planner_kw: dict | None = None) -> RoaResult:
    """Plan from every grid state to ``target`` and record the post-check verdict.

    Failures of any cascade stage count as rejections.  ``jobs > 1`` spreads
    theta slices over worker processes, each with its own planner.
    """
    p = p or WSlipParams()
    th = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    thd = np.atleast_1d(np.asarray(theta_dot_deg_s, dtype=float))
    Ld = np.atleast_1d(np.asarray(L_dot, dtype=float))
    work = [(a, thd, Ld, L_start, tuple(target), T, v_T, p, dict(planner_kw or {})) for a in th]
    if jobs > 1 and len(work) > 1:
        import multiprocessing as mp
        with mp.get_context("fork").Pool(min(jobs, len(work))) as pool:
            parts = pool.map(_roa_slice, work)
    else:
        parts = [_roa_slice(w) for w in work]
    acc, tau, force = (np.stack([pt[i] for pt in parts]) for i in range(3))
    return RoaResult(th, thd, Ld, acc, tau, force)
