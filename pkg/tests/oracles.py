"""Independent reference computations shared by the unit and acceptance tests."""
import itertools
import math

import numpy as np

from wslip import qp


def enumerate_qp(prob: qp.QpProblem, tol: float = 1e-9):
    """Exhaustive active-set oracle: best KKT point over every subset of inequalities."""
    n, m = prob.n, prob.A_in.shape[0]
    best = None
    for k in range(m + 1):
        for S in itertools.combinations(range(m), k):
            A = np.vstack([prob.A_eq, prob.A_in[list(S)]])
            b = np.concatenate([prob.b_eq, prob.b_in[list(S)]])
            K = np.block([[prob.P, A.T], [A, np.zeros((len(b), len(b)))]])
            rhs = np.concatenate([-prob.c, b])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.linalg.norm(K @ sol - rhs) > 1e-9 * (1 + np.linalg.norm(rhs)):
                continue
            z, mu = sol[:n], sol[n + prob.A_eq.shape[0]:]
            if m and (prob.A_in @ z - prob.b_in).max() > tol:
                continue
            if len(mu) and mu.min() < -tol:
                continue
            f = prob.objective(z)
            if best is None or f < best[1] - 1e-12:
                best = (z, f)
    return best


def random_qp(rng, n: int, m: int, n_eq: int = 0, psd_rank=None) -> qp.QpProblem:
    """Strictly convex (or rank-limited PSD) QP whose constraints admit a known feasible point."""
    r = n if psd_rank is None else psd_rank
    F = rng.normal(size=(r, n))
    P = F.T @ F + (0.1 * np.eye(n) if psd_rank is None else 0.0)
    c = rng.normal(size=n) * 3
    z0 = rng.normal(size=n)
    A_in = rng.normal(size=(m, n))
    b_in = A_in @ z0 + rng.uniform(0, 1, m) * (rng.uniform(size=m) < 0.7)
    A_eq = rng.normal(size=(n_eq, n))
    b_eq = A_eq @ z0
    return qp.QpProblem(P, c, A_eq, b_eq, A_in, b_in)


class SmoothFlatTrajectory:
    """Random sum-of-sines ``(L(t), theta(t))`` with analytic derivatives."""

    def __init__(self, rng, n_terms: int = 3, max_freq: float = 10.0):
        self.L_c = rng.uniform(0.55, 0.8)
        self.th_c = rng.uniform(-0.15, 0.15)
        self.aL = rng.uniform(0, 0.04, n_terms)
        self.aT = rng.uniform(0, 0.05, n_terms)
        self.wL = rng.uniform(1, max_freq, n_terms)
        self.wT = rng.uniform(1, max_freq, n_terms)
        self.pL = rng.uniform(0, 2 * math.pi, n_terms)
        self.pT = rng.uniform(0, 2 * math.pi, n_terms)
        self.x_dot0 = rng.uniform(-1, 1)

    @staticmethod
    def _eval(c, a, w, ph, t, k):
        t = np.asarray(t, dtype=float)[..., None]
        s = np.sin(w * t + ph + k * math.pi / 2)
        return (c if k == 0 else 0.0) + np.sum(a * w ** k * s, axis=-1)

    def L(self, t, k=0):
        return self._eval(self.L_c, self.aL, self.wL, self.pL, t, k)

    def theta(self, t, k=0):
        return self._eval(self.th_c, self.aT, self.wT, self.pT, t, k)
