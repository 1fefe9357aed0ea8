"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Small dense problems only: determinism and exact reproducibility matter
more here than speed.  The interface loosely follows
``scipy.optimize.linprog`` so the two can be swapped in tests::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lo <= x <= hi        (per-variable ``bounds``)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


class LPError(RuntimeError):
    """Raised by callers when an LP that must solve did not."""


@dataclass(frozen=True)
class LPResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray | None
    fun: float
    nit: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, r: int, k: int) -> None:
    T[r] /= T[r, k]
    col = T[:, k].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _iterate(T, basis, allowed, max_iter, nit):
    """Run Bland-rule pivots on tableau ``T`` in place."""
    m = T.shape[0] - 1
    while True:
        if nit >= max_iter:
            return "iteration_limit", nit
        costs = T[-1, :allowed]
        entering = np.flatnonzero(costs < -PIVOT_TOL)
        if entering.size == 0:
            return "optimal", nit
        k = int(entering[0])
        col = T[:m, k]
        pos = col > PIVOT_TOL
        if not pos.any():
            return "unbounded", nit
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, r, k)
        basis[r] = k
        nit += 1


def _to_standard_form(c, A_ub, b_ub, A_eq, b_eq, bounds):
    """Rewrite bounded variables as nonnegative ones.

    Returns the standard-form data plus an affine map ``x = shift + M @ y``.
    """
    n = len(c)
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif isinstance(bounds, tuple) and len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [bounds] * n
    cols = []  # (original var, sign)
    shift = np.zeros(n)
    extra_ub = []  # (new col index, upper bound)
    for j, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            raise ValueError(f"empty bounds for variable {j}: [{lo}, {hi}]")
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_ub.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for i, (j, s) in enumerate(cols):
        M[j, i] = s

    def transform(A, b):
        if A is None or len(A) == 0:
            return np.zeros((0, len(cols))), np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        return A @ M, b - A @ shift

    Aub, bub = transform(A_ub, b_ub)
    if extra_ub:
        rows = np.zeros((len(extra_ub), len(cols)))
        for r, (i, ub) in enumerate(extra_ub):
            rows[r, i] = 1.0
        Aub = np.vstack([Aub, rows])
        bub = np.concatenate([bub, [ub for _, ub in extra_ub]])
    Aeq, beq = transform(A_eq, b_eq)
    cs = np.asarray(c, dtype=float) @ M
    const = float(np.asarray(c, dtype=float) @ shift)
    return cs, Aub, bub, Aeq, beq, shift, M, const


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, max_iter=50_000) -> LPResult:
    """Minimize ``c @ x``; default bounds are ``x >= 0`` as in linprog."""
    cs, Aub, bub, Aeq, beq, shift, M, const = _to_standard_form(c, A_ub, b_ub, A_eq, b_eq, bounds)
    n = cs.size
    mu, me = Aub.shape[0], Aeq.shape[0]
    m = mu + me
    if m == 0:
        if np.any(cs < -PIVOT_TOL):
            return LPResult("unbounded", None, -np.inf, 0)
        return LPResult("optimal", shift.copy(), const, 0)

    # columns: structural n | slacks mu | artificials m
    A = np.zeros((m, n + mu))
    A[:mu, :n] = Aub
    A[:mu, n:] = np.eye(mu)
    A[mu:, :n] = Aeq
    b = np.concatenate([bub, beq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    ncols = n + mu + m
    T = np.zeros((m + 1, ncols + 1))
    T[:m, : n + mu] = A
    T[:m, n + mu : ncols] = np.eye(m)
    T[:m, -1] = b
    basis = np.arange(n + mu, ncols)
    # slack rows with b >= 0 can start from their slack instead of an artificial
    for i in range(mu):
        if not neg[i]:
            basis[i] = n + i
    art_in_basis = basis >= n + mu
    T[-1, n + mu : ncols] = 1.0
    T[-1, n + mu : ncols][~art_in_basis] = 0.0
    T[-1] -= T[:m][art_in_basis].sum(axis=0)
    # artificials that are not basic are dropped from the start
    T[-1, n + mu : ncols][~art_in_basis] = 0.0

    status, nit = _iterate(T, basis, n + mu, max_iter, 0)
    if status == "iteration_limit":
        return LPResult(status, None, np.nan, nit)
    if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).max()):
        return LPResult("infeasible", None, np.nan, nit)

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = np.ones(m + 1, dtype=bool)
    for r in range(m):
        if basis[r] >= n + mu:
            row = T[r, : n + mu]
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if cand.size:
                _pivot(T, r, int(cand[0]))
                basis[r] = int(cand[0])
            else:
                keep[r] = False
    T = T[keep]
    basis = basis[keep[:m]]
    T = np.delete(T, np.s_[n + mu : ncols], axis=1)

    obj = np.zeros(n + mu + 1)
    obj[:n] = cs
    T[-1] = obj
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]

    status, nit = _iterate(T, basis, n + mu, max_iter, nit)
    if status != "optimal":
        return LPResult(status, None, -np.inf if status == "unbounded" else np.nan, nit)
    y = np.zeros(n + mu)
    y[basis] = T[:-1, -1]
    x = shift + M @ y[:n]
    return LPResult("optimal", x, float(np.asarray(c, dtype=float) @ x), nit)
