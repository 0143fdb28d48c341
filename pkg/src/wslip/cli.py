"""Command-line driver: ``wslip {plan-stance,plan-flight,simulate,roa}``.

Exit codes: 0 ok, 2 plan rejection, 3 configuration error, 4 fall at runtime.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import qp
from .config import AppConfig, ConfigError, dump_config, load_config
from .flight_planner import FlightPlanError, FlightTask, NoTouchdownError, plan_flight
from .model import ModelDomainError, com_state_from_stance
from .poly import FitError
from .sim import TRAJECTORY_COLUMNS, DegenerateJumpError, Ground, run_jump
from .stance_planner import PlanRejected, StancePlanner, StanceTask, roa_sweep

EXIT_OK, EXIT_REJECTED, EXIT_CONFIG, EXIT_FALL = 0, 2, 3, 4
ROA_COLUMNS = ("theta_deg", "theta_dot_deg_s", "L_dot_m_s", "accepted", "max_abs_tau_w",
               "max_abs_leg_force")
ROA_SLICES = (-30.0, -15.0, 0.0, 15.0, 30.0)
PLAN_FAILURES = (qp.QpError, np.linalg.LinAlgError, ModelDomainError, FitError, PlanRejected,
                 DegenerateJumpError, FlightPlanError, NoTouchdownError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return path


def _write_json(path: Path, obj) -> Path:
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, (np.floating, float)):
            v = float(v)
            return v if math.isfinite(v) else None
        if isinstance(v, np.integer):
            return int(v)
        return v

    path.write_text(json.dumps(clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, sub: str, args, cfg: AppConfig | None, files, extra=None) -> Path:
    (out / "config.echo").write_text(dump_config(cfg) if cfg else "", encoding="utf-8")
    files = list(files) + [out / "config.echo"]
    manifest = {
        "subcommand": sub,
        "config": str(args.config) if args.config else None,
        "out": str(out),
        "seed": args.seed,
        "artifacts": [{"path": Path(f).name, "sha256": sha256(f)} for f in files],
    }
    manifest.update(extra or {})
    return _write_json(out / "manifest.json", manifest)


def _stance_task(cfg: AppConfig) -> StanceTask:
    sc = cfg.scenario
    start = sc.initial_state
    if cfg.plan_mode == "landing":
        L_T = sc.params.L0 if sc.L_land is None else sc.L_land
        return StanceTask.landing(start, sc.v_cmd, L_T, T=sc.landing_horizon)
    return StanceTask.takeoff(start, cfg.takeoff_target(), T=sc.takeoff_horizon, v_T=sc.v_cmd,
                              p=sc.params)


def cmd_plan_stance(cfg: AppConfig, out: Path, args) -> int:
    sc = cfg.scenario
    planner = StancePlanner(sc.params, leg_force_mode=sc.leg_force_mode, force_margin=sc.force_margin)
    task = _stance_task(cfg)
    t0 = time.perf_counter()
    try:
        plan = planner.plan(task)
    except PLAN_FAILURES as exc:
        print(f"plan rejected: {exc}", file=sys.stderr)
        write_manifest(out, "plan-stance", args, cfg, [], {"status": "rejected"})
        return EXIT_REJECTED
    elapsed = time.perf_counter() - t0
    table = plan.table(sc.control_dt)
    cols = list(table)
    files = [write_csv(out / "stance_plan.csv", cols, zip(*(table[c] for c in cols)))]
    d = plan.diagnostics
    summary = {
        "mode": task.mode, "horizon_s": plan.T, "accepted": plan.accepted,
        "violations": list(plan.violations), "qp_status": d.get("statuses"),
        "fit_residual": d.get("fit_residual"), "flat_objective": d.get("flat_objective"),
        "max_abs_tau_w": plan.max_abs_tau_w, "max_abs_leg_force": plan.max_abs_leg_force,
        "leg_force_mode": sc.leg_force_mode,
    }
    files.append(_write_json(out / "stance_summary.json", summary))
    write_manifest(out, "plan-stance", args, cfg, files, {"timing_s": elapsed})
    print(f"plan-stance: {'accepted' if plan.accepted else 'rejected'} "
          f"(T={plan.T:.3f} s, {elapsed * 1e3:.1f} ms)")
    if not plan.accepted:
        print("plan rejected: " + "; ".join(plan.violations), file=sys.stderr)
        return EXIT_REJECTED
    return EXIT_OK


def cmd_plan_flight(cfg: AppConfig, out: Path, args) -> int:
    sc = cfg.scenario
    p = sc.params
    try:
        L, Ld, th, thd = cfg.takeoff_target()
        y = np.array([sc.x0, L, th, sc.v_cmd, Ld, thd])
        fs = com_state_from_stance(y, p)
        L_TD = p.L0 if sc.L_TD is None else sc.L_TD
        ground = sc.ground(sc.x0)
        fp = plan_flight(FlightTask(fs, sc.L_des, L_TD, sc.L_dot_TD), p,
                         ground=lambda x: ground(x) - sc.ground_height)
    except PLAN_FAILURES as exc:
        print(f"plan rejected: {exc}", file=sys.stderr)
        write_manifest(out, "plan-flight", args, cfg, [], {"status": "rejected"})
        return EXIT_REJECTED
    ts = np.linspace(0.0, fp.T_f, max(2, int(math.ceil(fp.T_f / sc.control_dt)) + 1))
    legs = [fp.leg(t) for t in ts]
    theta = fp.theta if len(fp.times) == len(ts) else [fp.theta_at(t) for t in ts]
    rows = []
    for t, (Lv, Ldv, Lddv), tv in zip(ts, legs, theta):
        rows.append((t, Lv, Ldv, Lddv, tv, fs.c_x + fs.c_x_dot * t,
                     fs.c_z + sc.ground_height + fs.c_z_dot * t - 0.5 * p.g * t * t))
    files = [write_csv(out / "flight_plan.csv",
                       ("time_s", "L", "L_dot", "L_ddot", "theta_rad", "c_x", "c_z"), rows)]
    files.append(_write_json(out / "flight_summary.json", {
        "T_top_s": fp.T_top, "T_f_s": fp.T_f, "theta_TD_rad": fp.theta_TD,
        "apex_clearance_objective": fp.objective, "ground_z_m": fp.ground_z,
        "apex_com_m": fs.c_z + p.r + sc.ground_height + fs.c_z_dot ** 2 / (2 * p.g)}))
    write_manifest(out, "plan-flight", args, cfg, files)
    print(f"plan-flight: T_f={fp.T_f:.4f} s, theta_TD={fp.theta_TD:.5f} rad")
    return EXIT_OK


def cmd_simulate(cfg: AppConfig, out: Path, args) -> int:
    sc = cfg.scenario
    t0 = time.perf_counter()
    try:
        traj = run_jump(sc)
    except PLAN_FAILURES as exc:
        print(f"jump rejected: {exc}", file=sys.stderr)
        write_manifest(out, "simulate", args, cfg, [], {"status": "rejected"})
        return EXIT_REJECTED
    elapsed = time.perf_counter() - t0
    files = [write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, traj.rows)]
    metrics = traj.metrics(sc)
    metrics["message"] = traj.message
    metrics["rejections"] = [f"{t:.3f}: {m}" for t, m in traj.rejections]
    files.append(_write_json(out / "metrics.json", metrics))
    write_manifest(out, "simulate", args, cfg, files, {"timing_s": elapsed, "status": traj.status})
    print(f"simulate: {traj.status} apex={metrics['achieved_apex_m']:.4f} m "
          f"flight={metrics['flight_duration_s']:.4f} s ({elapsed:.1f} s)")
    if not traj.ok:
        print(f"simulation failed: {traj.message}", file=sys.stderr)
        return EXIT_FALL
    return EXIT_OK


def _slice_name(th: float) -> str:
    return f"roa_slice_theta_{'m' if th < 0 else ''}{abs(th):g}.csv"


def cmd_roa(cfg: AppConfig, out: Path, args) -> int:
    sc = cfg.scenario
    th, thd, Ld = cfg.roa.axes()
    try:
        target = cfg.takeoff_target()
    except DegenerateJumpError as exc:
        print(f"roa: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    kw = dict(L_start=cfg.roa.L_start, target=target, T=sc.takeoff_horizon, v_T=sc.v_cmd,
              p=sc.params, jobs=args.jobs,
              planner_kw={"leg_force_mode": sc.leg_force_mode, "force_margin": sc.force_margin})
    t0 = time.perf_counter()
    res = roa_sweep(th, thd, Ld, **kw)
    rows = list(res.rows())
    files = [write_csv(out / "roa.csv", ROA_COLUMNS, rows)]
    # slices missing from the grid are swept separately on the same (theta_dot, L_dot) axes
    extra = [s for s in ROA_SLICES if not np.any(np.abs(res.theta_deg - s) < 1e-9)]
    extra_rows = list(roa_sweep(extra, thd, Ld, **kw).rows()) if extra else []
    elapsed = time.perf_counter() - t0
    summary = []
    for s in ROA_SLICES:
        sl = [r for r in rows + extra_rows if abs(r[0] - s) < 1e-9]
        files.append(write_csv(out / _slice_name(s), ROA_COLUMNS, sl))
        acc = sum(r[3] for r in sl)
        summary.append((s, len(sl), acc, acc / len(sl), int(s in extra)))
    files.append(write_csv(out / "roa_summary.csv",
                           ("theta_deg", "cells", "accepted_cells", "acceptance_fraction",
                            "off_grid"), summary))
    write_manifest(out, "roa", args, cfg, files, {"timing_s": elapsed, "jobs": args.jobs})
    print(f"roa: {int(res.accepted.sum())}/{res.accepted.size} accepted ({elapsed:.1f} s)")
    for s, n, a, f, _ in summary:
        print(f"  theta={s:+g} deg: {a}/{n} ({f:.3f})")
    return EXIT_OK


COMMANDS = {"plan-stance": cmd_plan_stance, "plan-flight": cmd_plan_flight,
            "simulate": cmd_simulate, "roa": cmd_roa}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wslip", description="W-SLIP jump planning, tracking and simulation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None, help="key = value scenario file")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--seed", type=int, default=0, help="recorded in the manifest")
        if name == "roa":
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else AppConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("config error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[args.command](cfg, args.out, args)


if __name__ == "__main__":
    sys.exit(main())
