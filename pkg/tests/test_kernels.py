import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wslip import _pykernels, kernels
from wslip.model import WSlipParams, reduced_dynamics

PRM = WSlipParams().kernel_vector()
BACKENDS = kernels.backends()
compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")

states = st.tuples(st.floats(-1, 1), st.floats(0.4, 1.0), st.floats(-0.5, 0.5),
                   st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))


def test_fallback_selected_by_environment():
    code = "from wslip import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, WSLIP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "cython")


@compiled
@given(states, st.floats(-5, 5), st.floats(-0.3, 0.5))
def test_stance_backends_agree(y, tau, dL):
    a = BACKENDS["python"].rk4_stance(y, tau, dL, PRM, 1e-3, 50)
    b = BACKENDS["cython"].rk4_stance(y, tau, dL, PRM, 1e-3, 50)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@compiled
@given(states, st.floats(-5, 5), st.floats(-0.3, 0.5))
def test_reduced_accel_backends_agree(y, ux, uL):
    a = BACKENDS["python"].reduced_accel(y[1], y[2], y[4], y[5], ux, uL, PRM)
    b = BACKENDS["cython"].reduced_accel(y[1], y[2], y[4], y[5], ux, uL, PRM)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


@compiled
def test_reduced_poly_backends_agree():
    y0 = [0.6, 0.02, 0.1, -0.1]
    cx = np.array([0.2, -0.5, 0.3, 0.0, 0.1])
    cu = np.array([0.22, 0.3, -0.4, 0.1])
    a, na = BACKENDS["python"].rk4_reduced_poly(y0, cx, cu, PRM, 0.4, 800, 8)
    b, nb = BACKENDS["cython"].rk4_reduced_poly(y0, cx, cu, PRM, 0.4, 800, 8)
    assert na == nb == 101
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_reduced_accel_matches_model():
    for mod in BACKENDS.values():
        got = mod.reduced_accel(0.7, 0.2, 0.3, -0.4, 1.1, 0.25, PRM)
        assert np.allclose(got, reduced_dynamics((0.7, 0.2, 0.3, -0.4), (1.1, 0.25), WSlipParams()),
                           rtol=1e-12)


def test_reduced_poly_reports_domain_exit():
    # a huge forward acceleration tips the leg past horizontal
    out, n_valid = _pykernels.rk4_reduced_poly([0.6, 0.0, 0.0, 0.0], np.array([200.0]),
                                               np.array([0.22]), PRM, 1.0, 400, 4)
    assert n_valid < 101
    assert np.all(out[n_valid:] == out[n_valid - 1])


def test_stance_rk4_fourth_order():
    y = np.array([0.0, 0.7, 0.1, 0.2, 0.3, -0.2])
    ref = np.asarray(kernels.rk4_stance(y, 1.0, 0.2, PRM, 0.2 / 3200, 3200))
    e1 = np.abs(np.asarray(kernels.rk4_stance(y, 1.0, 0.2, PRM, 0.2 / 50, 50)) - ref).max()
    e2 = np.abs(np.asarray(kernels.rk4_stance(y, 1.0, 0.2, PRM, 0.2 / 100, 100)) - ref).max()
    assert 12 < e1 / e2 < 20
