"""Polynomial trajectories in a shifted monomial basis.

Time is measured from the start of each segment, ``t in [0, T]``.  An optional
``scale`` switches to the normalised basis ``(t / scale)**k``; ``scale=1`` (the
default) is the raw monomial basis.  Conditioning of the raw basis degrades for
degree above about 12 on horizons longer than 1 s.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DEGREE = 9
FIT_SAMPLES = 101


class HorizonError(ValueError):
    """Trajectory queried outside its time horizon."""


class FitError(np.linalg.LinAlgError):
    """Rank-deficient least-squares fit."""


def _falling(j: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(j, dtype=float)
    for i in range(k):
        out = out * (j - i)
    return out


def basis_row(t: float, N: int, deriv_order: int = 0, scale: float = 1.0) -> np.ndarray:
    """k-th derivative of ``[1, t, ..., t**N]`` (divided by ``scale**j``) at ``t``."""
    if deriv_order not in (0, 1, 2):
        raise ValueError("deriv_order must be 0, 1 or 2")
    if N < 2:
        raise ValueError("degree must be at least 2")
    j = np.arange(N + 1)
    coef = _falling(j, deriv_order) / float(scale) ** j
    powers = np.clip(j - deriv_order, 0, None)
    row = coef * np.power(float(t), powers)
    row[j < deriv_order] = 0.0
    return row


def basis_matrix(t: float, N: int, scale: float = 1.0) -> np.ndarray:
    """The 3 x (N+1) stack of value/rate/acceleration rows."""
    return np.vstack([basis_row(t, N, k, scale) for k in range(3)])


def basis_rows(ts, N: int, deriv_order: int = 0, scale: float = 1.0) -> np.ndarray:
    """Vectorised ``basis_row`` over an array of times, shape (len(ts), N+1)."""
    ts = np.asarray(ts, dtype=float)[:, None]
    j = np.arange(N + 1)[None, :]
    coef = _falling(j, deriv_order) / float(scale) ** j
    V = coef * np.power(ts, np.clip(j - deriv_order, 0, None))
    V[:, j[0] < deriv_order] = 0.0
    return V


def block_basis(t: float, N: int, scale: float = 1.0) -> np.ndarray:
    """``blkdiag(Phi(t), Phi(t))`` for a two-channel coefficient vector."""
    P = basis_matrix(t, N, scale)
    Z = np.zeros_like(P)
    return np.block([[P, Z], [Z, P]])


def gram_matrix(N: int, T: float, deriv_order: int, scale: float = 1.0) -> np.ndarray:
    """Exact ``int_0^T phi^(k)(t)^T phi^(k)(t) dt`` for the k-th derivative rows."""
    j = np.arange(N + 1)
    c = _falling(j, deriv_order) / float(scale) ** j
    p = j - deriv_order
    P = p[:, None] + p[None, :]
    valid = (p[:, None] >= 0) & (p[None, :] >= 0)
    expo = np.where(valid, P + 1, 1)
    G = np.where(valid, np.outer(c, c) * np.power(float(T), expo) / expo, 0.0)
    return G


def weighted_gram(N: int, T: float, weights, scale: float = 1.0) -> np.ndarray:
    """``sum_k weights[k] * gram_matrix(N, T, k)`` for k = 0, 1, 2."""
    return sum(w * gram_matrix(N, T, k, scale) for k, w in enumerate(weights) if w != 0.0)


@dataclass(frozen=True)
class PolyTraj:
    """One or more polynomial channels sharing degree and horizon.

    ``coeffs`` has shape (channels, N+1), lowest order first.
    """

    coeffs: np.ndarray
    T: float
    scale: float = 1.0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.shape[1] < 3:
            raise ValueError("degree must be at least 2")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if not self.T > 0:
            raise ValueError("horizon must be positive")

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]

    def _check(self, t) -> None:
        t = np.asarray(t)
        tol = 1e-9 * max(1.0, self.T)
        if np.any(t < -tol) or np.any(t > self.T + tol):
            raise HorizonError(f"t outside [0, {self.T}]")

    def eval(self, t):
        """Return ``(value, rate, acceleration)`` arrays of shape (channels,) at ``t``."""
        self._check(t)
        Phi = basis_matrix(float(t), self.degree, self.scale)
        out = self.coeffs @ Phi.T
        return out[:, 0], out[:, 1], out[:, 2]

    def sample(self, ts, deriv_order: int = 0) -> np.ndarray:
        """Vectorised evaluation, shape (len(ts), channels)."""
        self._check(ts)
        return basis_rows(ts, self.degree, deriv_order, self.scale) @ self.coeffs.T

    def channel(self, i: int) -> "PolyTraj":
        return PolyTraj(self.coeffs[i:i + 1], self.T, self.scale)

    def monomial_coeffs(self, deriv_order: int = 0) -> np.ndarray:
        """Raw monomial coefficients of the k-th derivative, shape (channels, N+1-k)."""
        j = np.arange(self.degree + 1)
        c = self.coeffs / float(self.scale) ** j
        for _ in range(deriv_order):
            c = c[:, 1:] * np.arange(1, c.shape[1])
        return c


def fit_least_squares(ts, values, N: int = DEFAULT_DEGREE, T: float | None = None,
                      constraints=None, scale: float = 1.0) -> PolyTraj:
    """Least-squares polynomial fit, optionally with exact equality constraints.

    ``values`` may be 1-D or (n, channels).  ``constraints`` is a list of
    ``(t, deriv_order, value)`` with ``value`` scalar or per channel; they are
    enforced through the KKT system of the constrained problem.
    """
    ts = np.asarray(ts, dtype=float)
    Y = np.asarray(values, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(ts) < N + 1:
        raise FitError(f"need at least {N + 1} samples for degree {N}, got {len(ts)}")
    if len(np.unique(ts)) != len(ts):
        raise FitError("sample times must be distinct")
    T = float(ts.max()) if T is None else float(T)
    V = basis_rows(ts, N, 0, scale)
    if not constraints:
        coef, _, rank, _ = np.linalg.lstsq(V, Y, rcond=None)
        if rank < N + 1:
            raise FitError("rank-deficient design matrix")
        return PolyTraj(coef.T, T, scale)
    A = np.vstack([basis_row(t, N, k, scale) for t, k, _ in constraints])
    b = np.vstack([np.broadcast_to(np.asarray(v, dtype=float), (Y.shape[1],))
                   for _, _, v in constraints])
    m = A.shape[0]
    K = np.block([[2.0 * V.T @ V, A.T], [A, np.zeros((m, m))]])
    rhs = np.vstack([2.0 * V.T @ Y, b])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular constrained least-squares system") from exc
    if np.linalg.matrix_rank(V) < N + 1:
        raise FitError("rank-deficient design matrix")
    return PolyTraj(sol[:N + 1].T, T, scale)
