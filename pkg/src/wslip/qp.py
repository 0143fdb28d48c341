"""Dense primal active-set solver for small convex QPs.

Problem form::

    minimise    1/2 z' P z + c' z
    subject to  A_eq z  = b_eq
                A_in z <= b_in

Multipliers follow the convention ``P z + c + A_eq' lam + A_in' mu = 0`` with
``mu >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL = 1e-8
MAX_ITER = 200
PSD_TOL = 1e-8
REG = 1e-10


class QpError(RuntimeError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class SingularKKTError(QpError, np.linalg.LinAlgError):
    pass


def _as2d(A, n):
    if A is None:
        return np.zeros((0, n))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, n))
    return A


def _as1d(b, m):
    if b is None:
        return np.zeros(m)
    return np.atleast_1d(np.asarray(b, dtype=float)).reshape(-1)


@dataclass
class QpProblem:
    P: np.ndarray
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        n = self.P.shape[0]
        if self.P.shape != (n, n):
            raise ValueError("P must be square")
        asym = np.max(np.abs(self.P - self.P.T)) if n else 0.0
        if asym > 1e-10 * max(1.0, np.max(np.abs(self.P))):
            raise ValueError(f"P is not symmetric (max asymmetry {asym:.3g})")
        self.P = 0.5 * (self.P + self.P.T)
        self.c = _as1d(self.c, n)
        self.A_eq = _as2d(self.A_eq, n)
        self.b_eq = _as1d(self.b_eq, self.A_eq.shape[0])
        self.A_in = _as2d(self.A_in, n)
        self.b_in = _as1d(self.b_in, self.A_in.shape[0])
        if self.c.shape != (n,):
            raise ValueError("c has the wrong length")
        for A, b, name in ((self.A_eq, self.b_eq, "eq"), (self.A_in, self.b_in, "in")):
            if A.shape[1] != n or b.shape != (A.shape[0],):
                raise ValueError(f"inconsistent dimensions in the {name} constraints")

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.P @ z + self.c @ z)


@dataclass
class QpSolution:
    z: np.ndarray
    status: str
    iterations: int = 0
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ineq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    active_set: tuple = ()
    objective: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _kkt_solve(P, g, A, b):
    """Solve ``[[P, A'], [A, 0]] [z; lam] = [-g; b]``; lstsq fallback for rank loss."""
    n, m = P.shape[0], A.shape[0]
    if m == 0:
        K, rhs = P, -g
    else:
        K = np.empty((n + m, n + m))
        K[:n, :n] = P
        K[:n, n:] = A.T
        K[n:, :n] = A
        K[n:, n:] = 0.0
        rhs = np.concatenate([-g, b])
    try:
        sol = np.linalg.solve(K, rhs)
        ok = np.all(np.isfinite(sol))
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    # backward-error test: large but consistent steps (nearly singular P) are accepted
    res = np.linalg.norm(K @ sol - rhs)
    if res > 1e-9 * (np.linalg.norm(K, 1) * np.linalg.norm(sol) + np.linalg.norm(rhs)) + 1e-12:
        raise SingularKKTError("singular KKT system")
    return sol[:n], sol[n:]


def solve_equality_qp(P, c, A_eq=None, b_eq=None) -> QpSolution:
    """Solve an equality-constrained QP through its KKT system."""
    prob = QpProblem(P, c, A_eq, b_eq)
    z, lam = _kkt_solve(prob.P, prob.c, prob.A_eq, prob.b_eq)
    return QpSolution(z=z, status="optimal", iterations=1, eq_multipliers=lam,
                      objective=prob.objective(z))


def _regularised(P):
    w = np.linalg.eigvalsh(P) if P.size else np.zeros(0)
    if w.size and w.min() < -PSD_TOL * max(1.0, abs(w).max()):
        raise ValueError(f"P is not positive semidefinite (min eigenvalue {w.min():.3g})")
    # Only singular Hessians get the diagonal shift; it would bias strictly convex ones.
    if w.size and w.min() > 1e-9 * max(1.0, abs(w).max()):
        return P
    return P + REG * np.eye(P.shape[0])


def _active_set_loop(P, c, A_eq, b_eq, A_in, b_in, z, W, tol, max_iter):
    """Primal active-set iterations from a feasible ``z`` with working set ``W``."""
    n_eq = A_eq.shape[0]
    for it in range(1, max_iter + 1):
        g = P @ z + c
        A_w = np.vstack([A_eq, A_in[W]]) if W else A_eq
        p, lam = _kkt_solve(P, g, A_w, np.zeros(A_w.shape[0]))
        if np.linalg.norm(p) <= tol * (1.0 + np.linalg.norm(z)):
            z = z + p
            mu = lam[n_eq:]
            if len(mu) == 0 or mu.min() >= -tol:
                return z, W, lam, it, True
            W = [w for k, w in enumerate(W) if k != int(np.argmin(mu))]
            continue
        alpha, blocking = 1.0, None
        Ap = A_in @ p
        slack = b_in - A_in @ z
        for i in np.flatnonzero(Ap > 1e-14 * (1.0 + np.linalg.norm(p))):
            if i in W:
                continue
            a = max(slack[i], 0.0) / Ap[i]
            if a < alpha:
                alpha, blocking = a, int(i)
        z = z + alpha * p
        if blocking is not None:
            W = W + [blocking]
    return z, W, None, max_iter, False


def _feasible_start(P, A_eq, b_eq, A_in, b_in, tol, max_iter):
    """Return a point satisfying the constraints, or None if they are infeasible."""
    n = P.shape[0]
    if A_eq.shape[0]:
        z0, *_ = np.linalg.lstsq(A_eq, b_eq, rcond=None)
        if np.linalg.norm(A_eq @ z0 - b_eq) > tol * (1.0 + np.linalg.norm(b_eq)) * 10:
            return None, 0
    else:
        z0 = np.zeros(n)
    viol = A_in @ z0 - b_in
    if viol.size == 0 or viol.max() <= tol:
        return z0, 0
    # Phase 1 over (z, s): min 1/2 s^2 + REG/2 |z - z0|^2, A_in z - s <= b_in, s >= 0.
    m = A_in.shape[0]
    P1 = np.diag(np.concatenate([np.full(n, REG), [1.0]]))
    c1 = np.concatenate([-REG * z0, [0.0]])
    Aeq1 = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))])
    Ain1 = np.vstack([np.hstack([A_in, -np.ones((m, 1))]), np.append(np.zeros(n), -1.0)])
    bin1 = np.append(b_in, 0.0)
    y0 = np.append(z0, viol.max())
    y, _, _, it, ok = _active_set_loop(P1, c1, Aeq1, b_eq, Ain1, bin1, y0, [], tol, 4 * max_iter)
    if not ok or y[-1] > tol:
        return None, it
    return y[:n], it


def solve(problem: QpProblem, tol: float = TOL, max_iter: int = MAX_ITER,
          warm_start=None) -> QpSolution:
    """Solve a convex QP with a primal active-set method.

    ``warm_start`` is an iterable of inequality indices believed active (e.g.
    the ``active_set`` of a previous solution of a similar problem); it is
    tried first and discarded if it does not verify the KKT conditions.
    """
    P = _regularised(problem.P)
    c, A_eq, b_eq, A_in, b_in = problem.c, problem.A_eq, problem.b_eq, problem.A_in, problem.b_in
    n_eq, m = A_eq.shape[0], A_in.shape[0]

    def finish(z, lam, W, it):
        mu = np.zeros(m)
        mu[list(W)] = lam[n_eq:]
        return QpSolution(z=z, status="optimal", iterations=it, eq_multipliers=lam[:n_eq],
                          ineq_multipliers=mu, active_set=tuple(sorted(W)),
                          objective=problem.objective(z))

    try:
        if m == 0:
            z, lam = _kkt_solve(P, c, A_eq, b_eq)
            return finish(z, lam, [], 1)
        if warm_start:
            W = sorted(set(int(i) for i in warm_start if 0 <= int(i) < m))
            A_w = np.vstack([A_eq, A_in[W]])
            try:
                z, lam = _kkt_solve(P, c, A_w, np.concatenate([b_eq, b_in[W]]))
            except SingularKKTError:
                pass
            else:
                if (A_in @ z - b_in).max() <= tol and (len(W) == 0 or lam[n_eq:].min() >= -tol):
                    return finish(z, lam, W, 1)
        z0, it0 = _feasible_start(P, A_eq, b_eq, A_in, b_in, tol, max_iter)
    except SingularKKTError:
        return QpSolution(z=np.full(problem.n, np.nan), status="infeasible",
                          ineq_multipliers=np.zeros(m))
    if z0 is None:
        return QpSolution(z=np.full(problem.n, np.nan), status="infeasible", iterations=it0,
                          ineq_multipliers=np.zeros(m))
    W = [int(i) for i in np.flatnonzero(np.abs(A_in @ z0 - b_in) <= tol)]
    # Start from an independent subset of the active constraints.
    W_ind = []
    for i in W:
        rows = np.vstack([A_eq, A_in[W_ind + [i]]])
        if np.linalg.matrix_rank(rows) == rows.shape[0]:
            W_ind.append(i)
    z, W, lam, it, ok = _active_set_loop(P, c, A_eq, b_eq, A_in, b_in, z0, W_ind, tol, max_iter)
    if not ok:
        return QpSolution(z=z, status="max_iter", iterations=it0 + it,
                          ineq_multipliers=np.zeros(m), objective=problem.objective(z))
    # Polish: re-solve on the final working set with the unshifted Hessian; this removes
    # drift from an inexact start and the bias of the regularisation when the reduced
    # problem is strictly convex.
    for Pk in (problem.P, P) if P is not problem.P else (P,):
        try:
            zp, lp = _kkt_solve(Pk, c, np.vstack([A_eq, A_in[W]]), np.concatenate([b_eq, b_in[W]]))
        except SingularKKTError:
            continue
        f, fp = problem.objective(z), problem.objective(zp)
        if ((A_in @ zp - b_in).max() <= tol and (not W or lp[n_eq:].min() >= -tol)
                and (Pk is P or fp <= f + 1e-9 * (1.0 + abs(f)))):
            z, lam = zp, lp
            break
    return finish(z, lam, W, it0 + it)


def kkt_residuals(problem: QpProblem, sol: QpSolution) -> dict:
    """Stationarity, primal feasibility, dual feasibility and complementarity residuals."""
    z = sol.z
    grad = problem.P @ z + problem.c
    if problem.A_eq.shape[0]:
        grad = grad + problem.A_eq.T @ sol.eq_multipliers
    if problem.A_in.shape[0]:
        grad = grad + problem.A_in.T @ sol.ineq_multipliers
    slack = problem.b_in - problem.A_in @ z
    return {
        "stationarity": float(np.max(np.abs(grad))) if grad.size else 0.0,
        "equality": float(np.max(np.abs(problem.A_eq @ z - problem.b_eq))) if problem.A_eq.shape[0] else 0.0,
        "inequality": float(max(0.0, -slack.min())) if slack.size else 0.0,
        "dual": float(max(0.0, -sol.ineq_multipliers.min())) if slack.size else 0.0,
        "complementarity": float(np.max(np.abs(sol.ineq_multipliers * slack))) if slack.size else 0.0,
    }
