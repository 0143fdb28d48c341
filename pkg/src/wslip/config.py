"""Flat ``key = value`` scenario files.

One key per line, ``#`` starts a comment.  Keys are the fields of
:class:`WSlipParams`, :class:`ScenarioConfig`, :class:`RoaGrid` (prefixed
``roa_``) and the planning-task keys below.  A key ending in ``_deg`` or
``_deg_s`` whose stem is an angle field is given in degrees (or deg/s) and
converted to radians.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .model import WSlipParams
from .sim import ScenarioConfig

_SECTION = "scenario"

UNITS = {
    "m_b": "kg", "m_w": "kg", "r": "m", "K_s": "N/m", "L0": "m", "g": "m/s^2",
    "tau_w_max": "N m", "F_leg_max": "N", "u_L_min": "m", "u_L_max": "m",
    "x0": "m", "L0_init": "m", "theta0": "rad", "x_dot0": "m/s", "L_dot0": "m/s",
    "theta_dot0": "rad/s", "v_cmd": "m/s", "apex": "m (CoM above ground)", "apex_margin": "-",
    "theta_TO": "rad", "theta_dot_TO": "rad/s", "L_TO": "m",
    "takeoff_horizon": "s", "takeoff_horizon_max": "s", "horizon_step": "s",
    "landing_horizon": "s", "landing_duration": "s", "min_replan_horizon": "s",
    "L_des": "m", "L_TD": "m", "L_dot_TD": "m/s", "L_land": "m",
    "leg_force_mode": "actuator | spring", "force_margin": "-",
    "q_lqr": "(rad^-2, (rad/s)^-2, (m/s)^-2)", "r_lqr": "(N m)^-2", "qf_scale": "-",
    "dob_gains": "-", "use_dob": "bool", "kp_leg": "1/s^2", "kd_leg": "1/s",
    "control_dt": "s", "plan_dt": "s", "sim_dt": "s",
    "ground_height": "m", "slope_deg": "deg", "slope_start": "m",
    "m_b_scale": "-", "K_s_scale": "-", "tau_disturbance": "N m", "min_com_height": "m",
    "plan_mode": "takeoff | landing", "target_L": "m", "target_L_dot": "m/s",
    "target_theta": "rad", "target_theta_dot": "rad/s",
    "roa_theta_min_deg": "deg", "roa_theta_max_deg": "deg", "roa_theta_n": "-",
    "roa_theta_dot_min_deg_s": "deg/s", "roa_theta_dot_max_deg_s": "deg/s", "roa_theta_dot_n": "-",
    "roa_L_dot_min": "m/s", "roa_L_dot_max": "m/s", "roa_L_dot_n": "-", "roa_L_start": "m",
}
_ANGLES = {"theta0", "theta_dot0", "theta_TO", "theta_dot_TO", "target_theta", "target_theta_dot"}


class ConfigError(ValueError):
    """Malformed configuration; the message names the line or key."""


@dataclass(frozen=True)
class RoaGrid:
    theta_min_deg: float = -30.0
    theta_max_deg: float = 30.0
    theta_n: int = 31
    theta_dot_min_deg_s: float = -30.0
    theta_dot_max_deg_s: float = 30.0
    theta_dot_n: int = 31
    L_dot_min: float = -2.0
    L_dot_max: float = 1.0
    L_dot_n: int = 16
    L_start: float = 0.6

    def __post_init__(self):
        for n in ("theta_n", "theta_dot_n", "L_dot_n"):
            if getattr(self, n) < 1:
                raise ValueError(f"roa_{n} must be at least 1")

    def axes(self):
        def ax(lo, hi, n):
            return np.array([lo]) if n == 1 else np.linspace(lo, hi, n)
        return (ax(self.theta_min_deg, self.theta_max_deg, self.theta_n),
                ax(self.theta_dot_min_deg_s, self.theta_dot_max_deg_s, self.theta_dot_n),
                ax(self.L_dot_min, self.L_dot_max, self.L_dot_n))


@dataclass(frozen=True)
class AppConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    roa: RoaGrid = field(default_factory=RoaGrid)
    plan_mode: str = "takeoff"
    target_L: float | None = None
    target_L_dot: float | None = None
    target_theta: float | None = None
    target_theta_dot: float | None = None

    def __post_init__(self):
        if self.plan_mode not in ("takeoff", "landing"):
            raise ValueError("plan_mode must be 'takeoff' or 'landing'")

    @property
    def params(self) -> WSlipParams:
        return self.scenario.params

    def takeoff_target(self):
        """Explicit target keys override the apex-derived take-off state."""
        base = self.scenario.takeoff_target() if self.target_L_dot is None else (
            self.scenario.params.L0, self.target_L_dot, 0.0, 0.0)
        over = (self.target_L, self.target_L_dot, self.target_theta, self.target_theta_dot)
        return tuple(b if o is None else float(o) for b, o in zip(base, over))


_TASK_KEYS = ("plan_mode", "target_L", "target_L_dot", "target_theta", "target_theta_dot")


def _defaults():
    """``{key: (group, field, default)}`` for every accepted key."""
    out = {}
    for f in fields(WSlipParams):
        out[f.name] = ("params", f.name, getattr(WSlipParams(), f.name))
    sc = ScenarioConfig()
    for f in fields(ScenarioConfig):
        if f.name != "params":
            out[f.name] = ("scenario", f.name, getattr(sc, f.name))
    rg = RoaGrid()
    for f in fields(RoaGrid):
        out["roa_" + f.name] = ("roa", f.name, getattr(rg, f.name))
    ac = AppConfig()
    for k in _TASK_KEYS:
        out[k] = ("app", k, getattr(ac, k))
    return out


KEYS = _defaults()


def _convert(key: str, text: str, default):
    t = text.strip()
    try:
        if isinstance(default, bool):
            low = t.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(t)
        if isinstance(default, int):
            return int(t)
        if isinstance(default, tuple):
            vals = tuple(float(v) for v in t.strip("()[]").split(",") if v.strip())
            if len(vals) != len(default):
                raise ValueError(f"expected {len(default)} values")
            return vals
        if isinstance(default, str):
            return t.strip("'\"")
        if default is None and t.lower() in ("none", ""):
            return None
        v = float(t)
        if not math.isfinite(v):
            raise ValueError("non-finite")
        return v
    except ValueError as exc:
        raise ConfigError(f"invalid value for key '{key}': {text!r} ({exc})") from None


def _resolve_key(key: str):
    """Map a file key to ``(canonical key, degree conversion)``."""
    if key in KEYS:
        return key, False
    for suffix in ("_deg_s", "_deg"):
        if key.endswith(suffix) and key[: -len(suffix)] in _ANGLES:
            return key[: -len(suffix)], True
    return None, False


def parse_config(text: str, source: str = "<string>") -> AppConfig:
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#", ";"), delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno - 1}: duplicate key '{exc.option}'") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno - 1}: sections are not supported") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno - 1}: cannot parse line {line.strip()!r}") from None
    if cp.sections() != [_SECTION]:
        raise ConfigError(f"{source}: sections are not supported")
    groups = {"params": {}, "scenario": {}, "roa": {}, "app": {}}
    seen = {}
    for raw, val in cp.items(_SECTION, raw=True):
        key, deg = _resolve_key(raw)
        if key is None:
            raise ConfigError(f"{source}: unknown key '{raw}'")
        if key in seen:
            raise ConfigError(f"{source}: key '{raw}' duplicates '{seen[key]}'")
        seen[key] = raw
        group, name, default = KEYS[key]
        v = _convert(raw, val, default)
        if deg and v is not None:
            v = math.radians(v)
        groups[group][name] = v
    try:
        params = WSlipParams(**groups["params"])
        scenario = ScenarioConfig(params=params, **groups["scenario"])
        return AppConfig(scenario=scenario, roa=RoaGrid(**groups["roa"]), **groups["app"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> AppConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: AppConfig) -> str:
    """Every key with its resolved value; reparses to an equal ``AppConfig``."""
    lines = []
    for key, (group, name, _) in KEYS.items():
        src = {"params": cfg.scenario.params, "scenario": cfg.scenario, "roa": cfg.roa, "app": cfg}[group]
        lines.append(f"{key} = {_format(getattr(src, name))}  # {UNITS.get(key, '-')}")
    return "\n".join(lines) + "\n"


def with_scenario(cfg: AppConfig, **changes) -> AppConfig:
    return replace(cfg, scenario=cfg.scenario.replace(**changes))
