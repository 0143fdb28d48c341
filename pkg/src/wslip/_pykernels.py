"""Pure-Python numerical kernels (fallback for the compiled ``_ckernels``).

Every function here has a twin with the same signature in ``_ckernels.pyx``.
Parameters travel as a flat sequence ``prm = (m_b, m_w, r, K_s, L0, g)``.
Stance state vectors are ``(x, L, theta, x_dot, L_dot, theta_dot)``; reduced
state vectors are ``(L, theta, L_dot, theta_dot)``.
"""
import math

import numpy as np

HALF_PI = 0.5 * math.pi


def stance_accel(L, th, Ld, thd, tau, dL, prm):
    """Closed-form solve of H(q) qdd = B u - C(q, qd)."""
    m_b, m_w, r, K_s, L0, g = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5]
    s = math.sin(th)
    c = math.cos(th)
    r1 = tau / r - (2.0 * m_b * Ld * thd * c - m_b * L * thd * thd * s)
    r2 = K_s * dL - (-m_b * L * thd * thd + m_b * g * c - K_s * (L0 - L))
    r3 = -tau - (2.0 * m_b * L * Ld * thd - m_b * g * L * s)
    # Schur complement of the (2,3) diagonal block collapses to m_w.
    xdd = (r1 - s * r2 - c * r3 / L) / m_w
    Ldd = (r2 - m_b * s * xdd) / m_b
    thdd = (r3 - m_b * L * c * xdd) / (m_b * L * L)
    return xdd, Ldd, thdd


def rk4_stance(y, tau, dL, prm, h, n):
    """Advance a stance state ``n`` RK4 steps of size ``h`` under constant inputs."""
    x, L, th, xd, Ld, thd = (float(v) for v in y)
    for _ in range(n):
        a1 = stance_accel(L, th, Ld, thd, tau, dL, prm)
        hh = 0.5 * h
        L2 = L + hh * Ld
        th2 = th + hh * thd
        xd2 = xd + hh * a1[0]
        Ld2 = Ld + hh * a1[1]
        thd2 = thd + hh * a1[2]
        a2 = stance_accel(L2, th2, Ld2, thd2, tau, dL, prm)
        L3 = L + hh * Ld2
        th3 = th + hh * thd2
        xd3 = xd + hh * a2[0]
        Ld3 = Ld + hh * a2[1]
        thd3 = thd + hh * a2[2]
        a3 = stance_accel(L3, th3, Ld3, thd3, tau, dL, prm)
        L4 = L + h * Ld3
        th4 = th + h * thd3
        xd4 = xd + h * a3[0]
        Ld4 = Ld + h * a3[1]
        thd4 = thd + h * a3[2]
        a4 = stance_accel(L4, th4, Ld4, thd4, tau, dL, prm)
        h6 = h / 6.0
        x += h6 * (xd + 2.0 * xd2 + 2.0 * xd3 + xd4)
        L += h6 * (Ld + 2.0 * Ld2 + 2.0 * Ld3 + Ld4)
        th += h6 * (thd + 2.0 * thd2 + 2.0 * thd3 + thd4)
        xd += h6 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
        Ld += h6 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
        thd += h6 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2])
    return np.array([x, L, th, xd, Ld, thd])


def reduced_accel(L, th, Ld, thd, ux, uL, prm):
    """Reduced (L, theta) dynamics driven by (x_ddot, Delta L)."""
    m_b, m_w, r, K_s, L0, g = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5]
    s = math.sin(th)
    c = math.cos(th)
    c1 = -m_b * L * thd * thd + m_b * g * c - K_s * (L0 - L)
    c2 = 2.0 * m_b * (L + r * c) * Ld * thd - m_b * L * s * (g + r * thd * thd)
    Ldd = (-m_b * s * ux + K_s * uL - c1) / m_b
    rhs2 = (-m_b * L * c - r * (m_b + m_w)) * ux - c2
    thdd = (rhs2 - r * m_b * s * Ldd) / (m_b * L * L + r * m_b * L * c)
    return Ldd, thdd


def _horner(coeffs, t):
    acc = 0.0
    for k in range(len(coeffs) - 1, -1, -1):
        acc = acc * t + coeffs[k]
    return acc


def rk4_reduced_poly(y0, cx, cu, prm, T, n_steps, stride):
    """Integrate the reduced dynamics with polynomial inputs on [0, T].

    ``cx`` and ``cu`` are monomial coefficients (lowest order first) of
    x_ddot(t) and Delta L(t).  Samples are taken every ``stride`` steps,
    including t=0.  Integration stops once |theta| exceeds pi/2; the
    remaining rows repeat the last valid state.  Returns (samples, n_valid).
    """
    cx = [float(v) for v in cx]
    cu = [float(v) for v in cu]
    n_samples = n_steps // stride + 1
    out = np.empty((n_samples, 4))
    L, th, Ld, thd = (float(v) for v in y0)
    out[0] = (L, th, Ld, thd)
    h = T / n_steps
    hh = 0.5 * h
    k = 1
    n_valid = 1
    for i in range(n_steps):
        t = i * h
        ux1 = _horner(cx, t)
        uL1 = _horner(cu, t)
        ux2 = _horner(cx, t + hh)
        uL2 = _horner(cu, t + hh)
        ux4 = _horner(cx, t + h)
        uL4 = _horner(cu, t + h)
        a1 = reduced_accel(L, th, Ld, thd, ux1, uL1, prm)
        a2 = reduced_accel(L + hh * Ld, th + hh * thd, Ld + hh * a1[0],
                           thd + hh * a1[1], ux2, uL2, prm)
        a3 = reduced_accel(L + hh * (Ld + hh * a1[0]), th + hh * (thd + hh * a1[1]),
                           Ld + hh * a2[0], thd + hh * a2[1], ux2, uL2, prm)
        L3d = Ld + hh * a2[0]
        th3d = thd + hh * a2[1]
        a4 = reduced_accel(L + h * L3d, th + h * th3d, Ld + h * a3[0],
                           thd + h * a3[1], ux4, uL4, prm)
        h6 = h / 6.0
        nL = L + h6 * (Ld + 2.0 * (Ld + hh * a1[0]) + 2.0 * L3d + (Ld + h * a3[0]))
        nth = th + h6 * (thd + 2.0 * (thd + hh * a1[1]) + 2.0 * th3d + (thd + h * a3[1]))
        Ld = Ld + h6 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
        thd = thd + h6 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
        L = nL
        th = nth
        if abs(th) > HALF_PI or L <= 0.0 or not math.isfinite(thd):
            break
        if (i + 1) % stride == 0:
            out[k] = (L, th, Ld, thd)
            k += 1
            n_valid = k
    for j in range(k, n_samples):
        out[j] = out[k - 1]
    return out, n_valid
