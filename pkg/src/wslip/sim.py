"""Closed-loop hybrid simulation of a single jump.

Phases run take-off stance -> flight -> landing stance.  The plant is the
W-SLIP template (optionally with scaled mass/stiffness and an additive wheel
torque disturbance), integrated with fixed-step RK4 and zero-order-hold inputs.
Stance plans are refreshed at the plan rate and tracked at the control rate.

Heights: model coordinates put the wheel axle at ``z = 0`` on the starting
ground, so ground-referenced CoM heights (apex command and metric) add the
wheel radius ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import kernels, tracking
from .flight_planner import FlightTask, plan_flight
from .model import FlightState, WSlipParams, com_state_from_stance
from .stance_planner import PlanRejected, StancePlanner, StanceTask, _limited_force

PHASES = ("stance-takeoff", "flight", "stance-landing")
TRAJECTORY_COLUMNS = ("time_s", "phase", "x", "x_dot", "L", "L_dot", "theta_rad", "theta_dot",
                      "c_x", "c_z", "tau_w_cmd", "u_L_cmd", "tau_w_ff", "D_w_hat", "D_c_hat",
                      "plan_id")
LANDING_SWITCH_TOL = 0.05
EVENT_TOL = 1e-6


class DegenerateJumpError(ValueError):
    """The command needs no flight phase (apex at or below the take-off CoM height)."""


@dataclass(frozen=True)
class Ground:
    """Flat ground at ``height`` that turns into a uniform slope after ``slope_start``."""

    height: float = 0.0
    slope_deg: float = 0.0
    slope_start: float = 0.0

    def __call__(self, x: float) -> float:
        if self.slope_deg == 0.0 or x <= self.slope_start:
            return self.height
        return self.height + math.tan(math.radians(self.slope_deg)) * (x - self.slope_start)


@dataclass(frozen=True)
class ScenarioConfig:
    params: WSlipParams = field(default_factory=WSlipParams)
    # initial stance state
    x0: float = 0.0
    L0_init: float = 0.6
    theta0: float = 0.0
    x_dot0: float | None = None
    L_dot0: float = 0.0
    theta_dot0: float = 0.0
    # commands
    v_cmd: float = 0.0
    apex: float = 1.0
    apex_margin: float = 0.005
    theta_TO: float = 0.0
    theta_dot_TO: float = 0.0
    L_TO: float | None = None
    # planning
    takeoff_horizon: float = 0.4
    takeoff_horizon_max: float = 0.8
    horizon_step: float = 0.1
    landing_horizon: float = 0.5
    landing_duration: float = 1.5
    min_replan_horizon: float = 0.1
    L_des: float = 0.45
    L_TD: float | None = None
    L_dot_TD: float = 0.0
    L_land: float | None = None
    leg_force_mode: str = "actuator"
    force_margin: float = 0.9
    # control
    q_lqr: tuple = (50.0, 5.0, 10.0)
    r_lqr: float = 1.0
    qf_scale: float = 10.0
    dob_gains: tuple = (5.0, 50.0, 5.0, 50.0)
    use_dob: bool = True
    kp_leg: float = 400.0
    kd_leg: float = 40.0
    # rates and integration
    control_dt: float = 0.002
    plan_dt: float = 0.04
    sim_dt: float = 1e-4
    # environment and plant mismatch
    ground_height: float = 0.0
    slope_deg: float = 0.0
    slope_start: float | None = None
    m_b_scale: float = 1.0
    K_s_scale: float = 1.0
    tau_disturbance: float = 0.0
    min_com_height: float = 0.1

    def __post_init__(self):
        for name in ("control_dt", "plan_dt", "sim_dt", "takeoff_horizon", "landing_horizon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for a, b in (("plan_dt", "control_dt"), ("control_dt", "sim_dt")):
            ratio = getattr(self, a) / getattr(self, b)
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ValueError(f"{a} must be an integer multiple of {b}")
        if not self.L0_init > 0:
            raise ValueError("initial leg length must be positive")

    @property
    def ticks_per_plan(self) -> int:
        return int(round(self.plan_dt / self.control_dt))

    @property
    def steps_per_tick(self) -> int:
        return int(round(self.control_dt / self.sim_dt))

    @property
    def plant_params(self) -> WSlipParams:
        p = self.params
        return p.replace(m_b=p.m_b * self.m_b_scale, K_s=p.K_s * self.K_s_scale)

    @property
    def initial_state(self) -> np.ndarray:
        xd = self.v_cmd if self.x_dot0 is None else self.x_dot0
        return np.array([self.x0, self.L0_init, self.theta0, xd, self.L_dot0, self.theta_dot0])

    def ground(self, x_takeoff: float = 0.0) -> Ground:
        start = x_takeoff if self.slope_start is None else self.slope_start
        return Ground(self.ground_height, self.slope_deg, start)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def takeoff_target(self):
        """``(L_TO, L_dot_TO, theta_TO, theta_dot_TO)`` reaching the commanded apex."""
        p = self.params
        L = p.L0 if self.L_TO is None else self.L_TO
        th, thd = self.theta_TO, self.theta_dot_TO
        f = p.body_fraction
        c_z0 = p.r + self.ground_height + f * L * math.cos(th)
        if self.apex <= c_z0:
            raise DegenerateJumpError(
                f"commanded apex {self.apex} m is not above the take-off CoM height {c_z0:.4f} m")
        # the command is a ceiling: aim slightly below so tracking error cannot overshoot it
        vz = math.sqrt(2.0 * p.g * ((1.0 - self.apex_margin) * self.apex - c_z0))
        Ld = (vz / f + L * thd * math.sin(th)) / math.cos(th)
        return L, Ld, th, thd


@dataclass
class HybridTrajectory:
    rows: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""
    t_TO: float | None = None
    t_TD: float | None = None
    takeoff_state: FlightState | None = None
    touchdown_state: np.ndarray | None = None
    flight_plan: object = None
    rejections: list = field(default_factory=list)
    saturations: int = 0
    events: list = field(default_factory=list)
    apex_com: float = float("nan")
    angular_momentum: list = field(default_factory=list)
    leg_force: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def column(self, name: str) -> np.ndarray:
        i = TRAJECTORY_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def phases(self) -> list:
        out = []
        for r in self.rows:
            if not out or out[-1] != r[1]:
                out.append(r[1])
        return out

    def metrics(self, cfg: ScenarioConfig) -> dict:
        tau = np.abs(self.column("tau_w_cmd")) if self.rows else np.zeros(1)
        settle = float("nan")
        if self.t_TD is not None and self.rows:
            t = self.column("time_s")
            xd = self.column("x_dot")
            m = t >= self.t_TD
            bad = np.flatnonzero(m & (np.abs(xd - cfg.v_cmd) >= LANDING_SWITCH_TOL))
            if m.any():
                last_bad = t[bad[-1]] if len(bad) else self.t_TD
                if not len(bad) or bad[-1] < len(t) - 1:
                    settle = float(last_bad - self.t_TD) if len(bad) else 0.0
        return {
            "status": self.status,
            "achieved_apex_m": self.apex_com + cfg.params.r,
            "commanded_apex_m": cfg.apex,
            "flight_duration_s": (self.t_TD - self.t_TO) if self.t_TD is not None else float("nan"),
            "t_takeoff_s": self.t_TO if self.t_TO is not None else float("nan"),
            "t_touchdown_s": self.t_TD if self.t_TD is not None else float("nan"),
            "max_abs_tau_w": float(np.max(tau)),
            "max_abs_leg_force": float(np.max(np.abs(self.leg_force))) if self.leg_force else 0.0,
            "landing_settle_time_s": settle,
            "plan_rejections": len(self.rejections),
            "torque_saturations": self.saturations,
        }


def detect_takeoff(state, delta_L: float, p: WSlipParams) -> bool:
    """True when the spring no longer pushes and the leg is extending."""
    L, Ld = state[1], state[4]
    return p.K_s * (p.L0 - L + delta_L) <= 0.0 and Ld > 0.0


def wheel_height(s: FlightState, p: WSlipParams) -> tuple[float, float, float]:
    """``(x_w, z_w, z_w_dot)`` of the wheel axle during flight."""
    f = p.body_fraction
    sn, cs = math.sin(s.theta), math.cos(s.theta)
    x = s.c_x - f * s.L * sn
    z = s.c_z - f * s.L * cs
    zd = s.c_z_dot - f * (s.L_dot * cs - s.L * s.theta_dot * sn)
    return x, z, zd


def detect_touchdown(s: FlightState, p: WSlipParams, ground=None) -> bool:
    """True when the descending wheel reaches the ground at its horizontal position."""
    ground = ground or Ground()
    x, z, zd = wheel_height(s, p)
    return zd < 0.0 and z <= ground(x)


class LandingSwitch:
    """Latch that fires once the wheel's vertical speed is within tolerance."""

    def __init__(self, tol: float = LANDING_SWITCH_TOL):
        self.tol = tol
        self.on = False

    def __call__(self, wheel_speed: float) -> bool:
        if not self.on and abs(wheel_speed) <= self.tol:
            self.on = True
        return self.on


def landing_switch(wheel_speed: float, latched: bool = False, tol: float = LANDING_SWITCH_TOL) -> bool:
    return latched or abs(wheel_speed) <= tol


def bisect_event(fn, lo: float, hi: float, tol: float = EVENT_TOL) -> float:
    """Smallest time in ``[lo, hi]`` (to ``tol``) at which ``fn`` is true; ``fn(hi)`` must be true."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid):
            hi = mid
        else:
            lo = mid
    return hi


# plant integration -------------------------------------------------------

def _stance_advance(y, tau, dL, prm, dt, h):
    n = max(1, int(math.ceil(dt / h - 1e-9)))
    return kernels.rk4_stance(y, tau, dL, prm, dt / n, n)


def _flight_rhs(z, h_mom, dL, p: WSlipParams):
    th, L, Ld = z
    mu = p.reduced_mass
    thd = h_mom / (mu * L * L)
    F = p.K_s * (p.L0 - L + dL)
    return np.array([thd, Ld, F / mu + L * thd * thd])


def _flight_advance(s: FlightState, h_mom, dL, p: WSlipParams, dt, h) -> FlightState:
    n = max(1, int(math.ceil(dt / h - 1e-9)))
    hs = dt / n
    z = np.array([s.theta, s.L, s.L_dot])
    for _ in range(n):
        k1 = _flight_rhs(z, h_mom, dL, p)
        k2 = _flight_rhs(z + 0.5 * hs * k1, h_mom, dL, p)
        k3 = _flight_rhs(z + 0.5 * hs * k2, h_mom, dL, p)
        k4 = _flight_rhs(z + hs * k3, h_mom, dL, p)
        z = z + hs / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    mu = p.reduced_mass
    return FlightState(
        c_x=s.c_x + s.c_x_dot * dt,
        c_z=s.c_z + s.c_z_dot * dt - 0.5 * p.g * dt * dt,
        c_x_dot=s.c_x_dot, c_z_dot=s.c_z_dot - p.g * dt,
        theta=float(z[0]), theta_dot=h_mom / (mu * z[1] * z[1]), L=float(z[1]), L_dot=float(z[2]))


def touchdown_map(s: FlightState, p: WSlipParams) -> np.ndarray:
    """Stance state after touchdown: wheel vertical velocity zeroed, body velocity kept."""
    f = p.body_fraction
    sn, cs = math.sin(s.theta), math.cos(s.theta)
    dx = s.L_dot * sn + s.L * s.theta_dot * cs
    dz = s.L_dot * cs - s.L * s.theta_dot * sn
    xw, xwd = s.c_x - f * s.L * sn, s.c_x_dot - f * dx
    vb = (s.c_x_dot + (1 - f) * dx, s.c_z_dot + (1 - f) * dz)
    d = (vb[0] - xwd, vb[1])
    Ld = d[0] * sn + d[1] * cs
    thd = (d[0] * cs - d[1] * sn) / s.L
    return np.array([xw, s.L, s.theta, xwd, Ld, thd])


# controller bundle -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PlanBundle:
    """Immutable hand-off unit: plan, linearization and gains, with its start time."""

    plan: object
    lin: tracking.LinearizedPlan
    gains: tracking.GainSchedule
    t0: float
    plan_id: int


def make_bundle(plan, t0: float, plan_id: int, cfg: ScenarioConfig) -> PlanBundle:
    lin = tracking.linearize_along_plan(plan, cfg.params, cfg.control_dt)
    Q = np.diag(cfg.q_lqr)
    gains = tracking.synthesize_tvlqr(lin.times, lin.A, lin.B, Q, np.array([[cfg.r_lqr]]),
                                      cfg.qf_scale * Q)
    return PlanBundle(plan, lin, gains, t0, plan_id)


class StanceController:
    """Composite stance controller: TV-LQR + DOB wheel law and task-space leg law."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.p = cfg.params
        self.obs: tracking.ObserverState | None = None
        self.bundle: PlanBundle | None = None
        self._e_prev = None

    def install(self, bundle: PlanBundle, y):
        """Atomic plan swap; observer estimation error is carried across the switch."""
        e_new = self.error(y, bundle, bundle.t0)
        if self.obs is None:
            self.obs = tracking.ObserverState.start(e_new, [y[4]], self.cfg.dob_gains)
        elif self._e_prev is not None:
            self.obs = replace(self.obs, xi1=self.obs.xi1 + (e_new - self.error(y, self.bundle, bundle.t0)))
        self.bundle = bundle

    def error(self, y, bundle, t):
        r = bundle.plan.reference(min(max(t - bundle.t0, 0.0), bundle.plan.T))
        return tracking.error_state(y, r.theta, r.theta_dot, r.x_dot)

    def step(self, y, t):
        """Return ``(tau_w, delta_L, tau_ff, Dw_hat, Dc_hat, saturated, F)`` at time ``t``."""
        b, cfg, p = self.bundle, self.cfg, self.p
        tp = min(max(t - b.t0, 0.0), b.plan.T)
        r = b.plan.reference(tp)
        e = tracking.error_state(y, r.theta, r.theta_dot, r.x_dot)
        A, B = b.lin.at(tp)
        K = b.gains.gain(tp)
        D_w, D_c = self.obs.outputs(e, [y[4]], cfg.control_dt)
        if not cfg.use_dob:
            D_w, D_c = np.zeros_like(D_w), np.zeros_like(D_c)
        tau, sat = tracking.wheel_torque(r.tau_w, K, e, D_w, B, p.tau_w_max)
        # leg feedforward sampled mid-interval compensates the zero-order hold
        r_mid = b.plan.reference(min(tp + 0.5 * cfg.control_dt, b.plan.T))
        dL, F, _ = tracking.stance_leg_control(r.L, r.L_dot, r_mid.L_ddot, y[1], y[4], y[2], D_c, p,
                                               cfg.kp_leg, cfg.kd_leg, cfg.leg_force_mode)
        self.obs = tracking.dob_step(self.obs, e, A, B, tau - r.tau_w, [y[4]], F, p.m_b,
                                     p.m_b * p.g * math.cos(y[2]), cfg.control_dt)
        self._e_prev = e
        Bv = B.reshape(-1, 1)
        Dw_hat = float((np.linalg.pinv(Bv) @ D_w.reshape(-1, 1)).item())
        return tau, dL, r.tau_w, Dw_hat, float(D_c[0]), sat, F


def _fell(y, p, cfg) -> str | None:
    if abs(y[2]) >= 0.5 * math.pi:
        return "fall: leg angle reached horizontal"
    if y[1] <= 0.05:
        return "fall: leg collapsed"
    if p.body_fraction * y[1] * math.cos(y[2]) < cfg.min_com_height:
        return "fall: CoM below minimum height"
    if not np.all(np.isfinite(y)):
        return "fall: non-finite state"
    return None


def _row(t, phase, y, z_w, p, tau, dL, tau_ff, dw, dc, pid):
    f = p.body_fraction
    c_x = y[0] + f * y[1] * math.sin(y[2])
    c_z = z_w + f * y[1] * math.cos(y[2])
    return (t, phase, y[0], y[3], y[1], y[4], y[2], y[5], c_x, c_z, tau, dL, tau_ff, dw, dc, pid)


def run_jump(cfg: ScenarioConfig) -> HybridTrajectory:
    """Simulate one jump; raises ``DegenerateJumpError`` or ``PlanRejected`` when the
    first take-off plan cannot be made, otherwise failures are recorded in the
    returned trajectory."""
    p, pp = cfg.params, cfg.plant_params
    prm = pp.kernel_vector()
    target = cfg.takeoff_target()
    traj = HybridTrajectory()
    planner = StancePlanner(p, leg_force_mode=cfg.leg_force_mode, force_margin=cfg.force_margin)
    ctrl = StanceController(cfg)
    dt, tpp = cfg.control_dt, cfg.ticks_per_plan
    y = cfg.initial_state
    z_w = cfg.ground_height
    plan_id = -1
    k = 0
    t = 0.0
    T_TO = cfg.takeoff_horizon

    def first_plan(y):
        # lengthen the horizon until the first take-off plan is feasible
        nonlocal T_TO
        T, last = cfg.takeoff_horizon, None
        while T <= cfg.takeoff_horizon_max + 1e-9:
            task = StanceTask.takeoff(y, target, T=T, v_T=cfg.v_cmd, p=p)
            try:
                plan = planner.plan(task)
            except Exception as exc:  # QP failure counts as rejection
                last = exc
            else:
                if plan.accepted:
                    T_TO = T
                    return plan
                last = PlanRejected(plan)
            T = round(T + cfg.horizon_step, 12)
        raise last

    def replan_takeoff(t, y):
        nonlocal plan_id
        prev = ctrl.bundle
        if prev is None:
            plan_id += 1
            ctrl.install(make_bundle(first_plan(y), t, plan_id, cfg), y)
            return
        acc = (0.0, 0.0)
        if prev is not None:
            r = prev.plan.reference(min(t - prev.t0, prev.plan.T))
            acc = (r.L_ddot, r.theta_ddot)
        task = StanceTask.takeoff(y, target, T=T_TO - t, v_T=cfg.v_cmd, p=p,
                                  L_ddot_start=acc[0], theta_ddot_start=acc[1])
        try:
            plan = planner.plan(task)
        except Exception as exc:  # QP failure counts as rejection
            if prev is None:
                raise
            traj.rejections.append((t, f"take-off plan failed: {exc}"))
            return
        if not plan.accepted:
            if prev is None:
                raise PlanRejected(plan)
            traj.rejections.append((t, "; ".join(plan.violations)))
            return
        plan_id += 1
        ctrl.install(make_bundle(plan, t, plan_id, cfg), y)

    # take-off stance --------------------------------------------------------
    while True:
        if k % tpp == 0 and T_TO - t >= cfg.min_replan_horizon - 1e-12:
            replan_takeoff(t, y)
        b = ctrl.bundle
        released = t - b.t0 >= b.plan.T - 1e-9
        tau, dL, tau_ff, dw, dc, sat, F = ctrl.step(y, t)
        if released:
            # plan horizon over: let the spring go slack so the leg can leave the ground
            dL, tau = y[1] - p.L0, 0.0
        traj.saturations += int(sat)
        traj.rows.append(_row(t, PHASES[0], y, z_w, pp, tau, dL, tau_ff, dw, dc, b.plan_id))
        traj.leg_force.append(float(_limited_force(y[1], dL, pp, cfg.leg_force_mode)))
        y_start = y
        u = (tau + cfg.tau_disturbance, dL)
        y = _stance_advance(y_start, u[0], u[1], prm, dt, cfg.sim_dt)
        if detect_takeoff(y, dL, pp):
            s = bisect_event(lambda s: detect_takeoff(
                _stance_advance(y_start, u[0], u[1], prm, s, cfg.sim_dt), dL, pp), 0.0, dt)
            y = _stance_advance(y_start, u[0], u[1], prm, s, cfg.sim_dt) if s > 0 else y_start
            t = t + s
            break
        k += 1
        t = k * dt
        msg = _fell(y, pp, cfg)
        if msg is None and t > T_TO + 0.2:
            msg = "no take-off: leg did not unload"
        if msg:
            traj.status, traj.message = ("fall" if msg.startswith("fall") else "no_takeoff"), msg
            return traj

    # flight -------------------------------------------------------------------
    traj.t_TO = t
    fs = com_state_from_stance(y, pp)
    ground = cfg.ground(y[0])
    fs = replace(fs, c_z=fs.c_z + z_w)
    traj.takeoff_state = fs
    L_TD = p.L0 if cfg.L_TD is None else cfg.L_TD
    # flight planning works in coordinates with the take-off ground at zero
    fplan = plan_flight(FlightTask(replace(fs, c_z=fs.c_z - z_w), cfg.L_des, L_TD, cfg.L_dot_TD), p,
                        ground=lambda x: ground(x) - z_w)
    traj.flight_plan = fplan
    plan_id += 1
    fid = plan_id
    h_mom = pp.reduced_mass * fs.L ** 2 * fs.theta_dot
    obs = ctrl.obs.reset_leg([fs.L_dot]) if ctrl.obs is not None else None
    t_f0 = t
    apex = fs.c_z
    tick_t = (math.floor(t / dt + 1e-9) + 1) * dt  # next control tick
    first = True
    while True:
        # a partial interval up to the next tick right after take-off
        step = (tick_t - t) if first else dt
        first = False
        tf = t - t_f0
        D_c = obs.outputs(np.zeros(3), [fs.L_dot], step)[1] if (obs is not None and cfg.use_dob) else np.zeros(1)
        dL, F, _ = tracking.flight_tracking(fplan, tf, fs.L, fs.L_dot, fs.theta_dot, p, D_c,
                                            cfg.kp_leg, cfg.kd_leg, cfg.leg_force_mode)
        if obs is not None:
            mu = p.reduced_mass
            obs = tracking.dob_step(obs, np.zeros(3), np.zeros((3, 3)), np.zeros((3, 1)), 0.0,
                                    [fs.L_dot], F, mu, -mu * fs.L * fs.theta_dot ** 2, step)
        xw, zw, _ = wheel_height(fs, pp)
        yrow = np.array([xw, fs.L, fs.theta, fs.c_x_dot, fs.L_dot, fs.theta_dot])
        row = list(_row(t, PHASES[1], yrow, zw, pp, 0.0, dL, 0.0, 0.0, float(D_c[0]), fid))
        row[8], row[9] = fs.c_x, fs.c_z
        row[3] = fs.c_x_dot - pp.body_fraction * (fs.L_dot * math.sin(fs.theta)
                                                  + fs.L * fs.theta_dot * math.cos(fs.theta))
        traj.rows.append(tuple(row))
        traj.leg_force.append(float(_limited_force(fs.L, dL, pp, cfg.leg_force_mode)))
        traj.angular_momentum.append(pp.reduced_mass * fs.L ** 2 * fs.theta_dot)
        fs_start = fs
        fs = _flight_advance(fs_start, h_mom, dL, pp, step, cfg.sim_dt)
        if fs_start.c_z_dot > 0 >= fs.c_z_dot:
            t_ap = fs_start.c_z_dot / p.g
            apex = max(apex, fs_start.c_z + fs_start.c_z_dot * t_ap - 0.5 * p.g * t_ap ** 2)
        apex = max(apex, fs.c_z)
        if detect_touchdown(fs, pp, ground):
            s = bisect_event(lambda s: detect_touchdown(
                _flight_advance(fs_start, h_mom, dL, pp, s, cfg.sim_dt), pp, ground), 0.0, step)
            fs = _flight_advance(fs_start, h_mom, dL, pp, s, cfg.sim_dt)
            traj.angular_momentum.append(pp.reduced_mass * fs.L ** 2 * fs.theta_dot)
            t = t + s
            break
        t = t + step
        if fs.L <= 0.05 or not math.isfinite(fs.c_z) or t - t_f0 > 5.0:
            traj.status, traj.message = "fall", "fall: flight did not end in touchdown"
            return traj
    traj.apex_com = apex - cfg.ground_height
    traj.t_TD = t

    # landing stance -----------------------------------------------------------
    y = touchdown_map(fs, pp)
    _, z_w, _ = wheel_height(fs, pp)
    traj.touchdown_state = y.copy()
    switch = LandingSwitch()
    ctrl = StanceController(cfg)
    L_land = p.L0 if cfg.L_land is None else cfg.L_land
    t_end = t + cfg.landing_duration
    k = 0
    t_l0 = t
    held = None

    def replan_landing(t, y):
        nonlocal plan_id, held
        prev = ctrl.bundle
        acc = (0.0, 0.0)
        if prev is not None:
            r = prev.plan.reference(min(t - prev.t0, prev.plan.T))
            acc = (r.L_ddot, r.theta_ddot)
        task = StanceTask.landing(y, cfg.v_cmd, L_land, T=cfg.landing_horizon,
                                  L_ddot_start=acc[0], theta_ddot_start=acc[1])
        try:
            plan = planner.plan(task)
        except Exception as exc:
            traj.rejections.append((t, f"landing plan failed: {exc}"))
            return
        if not plan.accepted:
            traj.rejections.append((t, "; ".join(plan.violations)))
            if prev is not None:
                return
        plan_id += 1
        ctrl.install(make_bundle(plan, t, plan_id, cfg), y)

    while t < t_end - 1e-12:
        # wheel vertical speed is reset to zero by the touchdown map
        if switch(0.0) and k % tpp == 0:
            replan_landing(t, y)
        if ctrl.bundle is None:
            traj.status, traj.message = "fall", "no landing plan available"
            return traj
        tau, dL, tau_ff, dw, dc, sat, F = ctrl.step(y, t)
        traj.saturations += int(sat)
        traj.rows.append(_row(t, PHASES[2], y, z_w, pp, tau, dL, tau_ff, dw, dc, ctrl.bundle.plan_id))
        traj.leg_force.append(float(_limited_force(y[1], dL, pp, cfg.leg_force_mode)))
        step = min(dt, t_end - t) if k else dt
        y = _stance_advance(y, tau + cfg.tau_disturbance, dL, prm, dt, cfg.sim_dt)
        k += 1
        t = t_l0 + k * dt
        msg = _fell(y, pp, cfg)
        if msg:
            traj.status, traj.message = "fall", msg
            return traj
    return traj


def track_stance_plan(plan, cfg: ScenarioConfig, initial_error=(0.0, 0.0, 0.0), use_dob: bool = True):
    """Track one stance plan open-horizon (no replanning) on the configured plant.

    Returns ``(times, errors)`` with ``errors`` rows ``e_c`` at each control tick
    and at the horizon end.
    """
    cfg = cfg.replace(use_dob=use_dob)
    pp = cfg.plant_params
    prm = pp.kernel_vector()
    r0 = plan.reference(0.0)
    y = np.array([r0.x, r0.L, r0.theta + initial_error[0], r0.x_dot + initial_error[2], r0.L_dot,
                  r0.theta_dot + initial_error[1]])
    ctrl = StanceController(cfg)
    ctrl.install(make_bundle(plan, 0.0, 0, cfg), y)
    n = int(round(plan.T / cfg.control_dt))
    ts, es = [], []
    for k in range(n):
        t = k * cfg.control_dt
        ts.append(t)
        es.append(ctrl.error(y, ctrl.bundle, t))
        tau, dL, *_ = ctrl.step(y, t)
        y = _stance_advance(y, tau + cfg.tau_disturbance, dL, prm, cfg.control_dt, cfg.sim_dt)
    ts.append(n * cfg.control_dt)
    es.append(ctrl.error(y, ctrl.bundle, plan.T))
    return np.array(ts), np.array(es)


def config_fields() -> list:
    return [f.name for f in fields(ScenarioConfig)]
