# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels; mirror of ``_pykernels`` with identical semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs, isfinite, M_PI

cnp.import_array()


cdef struct Prm:
    double m_b, m_w, r, K_s, L0, g


cdef inline Prm _unpack(object prm):
    cdef Prm p
    p.m_b = prm[0]
    p.m_w = prm[1]
    p.r = prm[2]
    p.K_s = prm[3]
    p.L0 = prm[4]
    p.g = prm[5]
    return p


cdef inline void _stance(double L, double th, double Ld, double thd,
                         double tau, double dL, Prm* p, double* out) noexcept nogil:
    cdef double s = sin(th)
    cdef double c = cos(th)
    cdef double m_b = p.m_b
    cdef double r1 = tau / p.r - (2.0 * m_b * Ld * thd * c - m_b * L * thd * thd * s)
    cdef double r2 = p.K_s * dL - (-m_b * L * thd * thd + m_b * p.g * c - p.K_s * (p.L0 - L))
    cdef double r3 = -tau - (2.0 * m_b * L * Ld * thd - m_b * p.g * L * s)
    cdef double xdd = (r1 - s * r2 - c * r3 / L) / p.m_w
    out[0] = xdd
    out[1] = (r2 - m_b * s * xdd) / m_b
    out[2] = (r3 - m_b * L * c * xdd) / (m_b * L * L)


cdef inline void _reduced(double L, double th, double Ld, double thd,
                          double ux, double uL, Prm* p, double* out) noexcept nogil:
    cdef double s = sin(th)
    cdef double c = cos(th)
    cdef double m_b = p.m_b
    cdef double r = p.r
    cdef double c1 = -m_b * L * thd * thd + m_b * p.g * c - p.K_s * (p.L0 - L)
    cdef double c2 = 2.0 * m_b * (L + r * c) * Ld * thd - m_b * L * s * (p.g + r * thd * thd)
    cdef double Ldd = (-m_b * s * ux + p.K_s * uL - c1) / m_b
    cdef double rhs2 = (-m_b * L * c - r * (m_b + p.m_w)) * ux - c2
    out[0] = Ldd
    out[1] = (rhs2 - r * m_b * s * Ldd) / (m_b * L * L + r * m_b * L * c)


cdef inline double _horner(double[::1] coeffs, double t) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t k
    for k in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * t + coeffs[k]
    return acc


def stance_accel(double L, double th, double Ld, double thd, double tau, double dL, prm):
    cdef Prm p = _unpack(prm)
    cdef double out[3]
    _stance(L, th, Ld, thd, tau, dL, &p, out)
    return out[0], out[1], out[2]


def reduced_accel(double L, double th, double Ld, double thd, double ux, double uL, prm):
    cdef Prm p = _unpack(prm)
    cdef double out[2]
    _reduced(L, th, Ld, thd, ux, uL, &p, out)
    return out[0], out[1]


def rk4_stance(y, double tau, double dL, prm, double h, int n):
    cdef Prm p = _unpack(prm)
    cdef double x = y[0], L = y[1], th = y[2], xd = y[3], Ld = y[4], thd = y[5]
    cdef double a1[3]
    cdef double a2[3]
    cdef double a3[3]
    cdef double a4[3]
    cdef double hh = 0.5 * h, h6 = h / 6.0
    cdef double Ld2, thd2, xd2, Ld3, thd3, xd3, Ld4, thd4, xd4
    cdef int i
    for i in range(n):
        _stance(L, th, Ld, thd, tau, dL, &p, a1)
        xd2 = xd + hh * a1[0]
        Ld2 = Ld + hh * a1[1]
        thd2 = thd + hh * a1[2]
        _stance(L + hh * Ld, th + hh * thd, Ld2, thd2, tau, dL, &p, a2)
        xd3 = xd + hh * a2[0]
        Ld3 = Ld + hh * a2[1]
        thd3 = thd + hh * a2[2]
        _stance(L + hh * Ld2, th + hh * thd2, Ld3, thd3, tau, dL, &p, a3)
        xd4 = xd + h * a3[0]
        Ld4 = Ld + h * a3[1]
        thd4 = thd + h * a3[2]
        _stance(L + h * Ld3, th + h * thd3, Ld4, thd4, tau, dL, &p, a4)
        x += h6 * (xd + 2.0 * xd2 + 2.0 * xd3 + xd4)
        L += h6 * (Ld + 2.0 * Ld2 + 2.0 * Ld3 + Ld4)
        th += h6 * (thd + 2.0 * thd2 + 2.0 * thd3 + thd4)
        xd += h6 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
        Ld += h6 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
        thd += h6 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2])
    return np.array([x, L, th, xd, Ld, thd])


def rk4_reduced_poly(y0, cx, cu, prm, double T, int n_steps, int stride):
    cdef Prm p = _unpack(prm)
    cdef double[::1] cxv = np.ascontiguousarray(cx, dtype=np.float64)
    cdef double[::1] cuv = np.ascontiguousarray(cu, dtype=np.float64)
    cdef Py_ssize_t n_samples = n_steps // stride + 1
    out_arr = np.empty((n_samples, 4))
    cdef double[:, ::1] out = out_arr
    cdef double L = y0[0], th = y0[1], Ld = y0[2], thd = y0[3]
    cdef double h = T / n_steps, hh = 0.5 * h, h6 = h / 6.0
    cdef double t, ux1, uL1, ux2, uL2, ux4, uL4, L3d, th3d, nL, nth
    cdef double a1[2]
    cdef double a2[2]
    cdef double a3[2]
    cdef double a4[2]
    cdef Py_ssize_t i, j, k = 1
    cdef double half_pi = 0.5 * M_PI
    out[0, 0] = L
    out[0, 1] = th
    out[0, 2] = Ld
    out[0, 3] = thd
    with nogil:
        for i in range(n_steps):
            t = i * h
            ux1 = _horner(cxv, t)
            uL1 = _horner(cuv, t)
            ux2 = _horner(cxv, t + hh)
            uL2 = _horner(cuv, t + hh)
            ux4 = _horner(cxv, t + h)
            uL4 = _horner(cuv, t + h)
            _reduced(L, th, Ld, thd, ux1, uL1, &p, a1)
            _reduced(L + hh * Ld, th + hh * thd, Ld + hh * a1[0], thd + hh * a1[1],
                     ux2, uL2, &p, a2)
            _reduced(L + hh * (Ld + hh * a1[0]), th + hh * (thd + hh * a1[1]),
                     Ld + hh * a2[0], thd + hh * a2[1], ux2, uL2, &p, a3)
            L3d = Ld + hh * a2[0]
            th3d = thd + hh * a2[1]
            _reduced(L + h * L3d, th + h * th3d, Ld + h * a3[0], thd + h * a3[1],
                     ux4, uL4, &p, a4)
            nL = L + h6 * (Ld + 2.0 * (Ld + hh * a1[0]) + 2.0 * L3d + (Ld + h * a3[0]))
            nth = th + h6 * (thd + 2.0 * (thd + hh * a1[1]) + 2.0 * th3d + (thd + h * a3[1]))
            Ld = Ld + h6 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
            thd = thd + h6 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
            L = nL
            th = nth
            if fabs(th) > half_pi or L <= 0.0 or not isfinite(thd):
                break
            if (i + 1) % stride == 0:
                out[k, 0] = L
                out[k, 1] = th
                out[k, 2] = Ld
                out[k, 3] = thd
                k += 1
        for j in range(k, n_samples):
            out[j, 0] = out[k - 1, 0]
            out[j, 1] = out[k - 1, 1]
            out[j, 2] = out[k - 1, 2]
            out[j, 3] = out[k - 1, 3]
    return out_arr, int(k)
