import math
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wslip.model import WSlipParams
from wslip.sim import ScenarioConfig, run_jump
from wslip.stance_planner import REFERENCE_L_START, REFERENCE_TAKEOFF_TARGET, StancePlanner, StanceTask

settings.register_profile("wslip", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("wslip")

# criterion label ("1", "10a", ...) -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}

JUMP_SCENARIOS = {
    "apex0.8_v1.5": dict(apex=0.8, v_cmd=1.5),
    "apex1.0_v0.5": dict(apex=1.0, v_cmd=0.5),
    "apex1.2_v1.0": dict(apex=1.2, v_cmd=1.0),
    "slope5_apex1.0_v0.5": dict(apex=1.0, v_cmd=0.5, slope_deg=5.0),
    "tilted_takeoff": dict(apex=1.0, theta_TO=math.radians(5.0), theta_dot_TO=math.radians(-9.91)),
}


def record(label, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[str(label)] = (title, bool(passed), detail)


def _label_key(label: str):
    digits = "".join(ch for ch in label if ch.isdigit())
    return int(digits), label


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE, key=_label_key):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>3}. {title}: {detail}")


@pytest.fixture(scope="session")
def params():
    return WSlipParams()


@pytest.fixture(scope="session")
def reference_task(params):
    start = (0.0, REFERENCE_L_START, 0.0, 0.0, 0.0, 0.0)
    return StanceTask.takeoff(start, REFERENCE_TAKEOFF_TARGET, T=0.4, p=params)


@pytest.fixture(scope="session")
def reference_plan(params, reference_task):
    return StancePlanner(params).plan(reference_task)


@pytest.fixture(scope="session")
def jumps():
    """Closed-loop jumps shared by the simulator and acceptance tests (run lazily)."""
    cache = {}

    def get(name):
        if name not in cache:
            cfg = ScenarioConfig(**JUMP_SCENARIOS[name])
            t0 = time.perf_counter()
            traj = run_jump(cfg)
            get.elapsed[name] = time.perf_counter() - t0
            cache[name] = (cfg, traj)
        return cache[name]

    get.elapsed = {}
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
