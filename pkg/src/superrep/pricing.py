"""Super-replication prices on the truncated dyadic market.

Primal side: the cheapest initial capital ``x`` for which an admissible
strategy with credit line ``c`` dominates the claim on every atom.  Dual
side: the supremum of ``E_Q[h]`` over separating measures, optionally
restricted by a generalized-entropy budget.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dyadic
from .dyadic import DyadicClaim, DyadicMeasure, Strategy
from .entropy import EntropySpec
from .simplex import LPError, solve_lp

PRICE_CAP = 1e6
WEAK_DUALITY_TOL = 1e-9


class UnsupportedEntropy(NotImplementedError):
    pass


class InfeasibleCap(ValueError):
    pass


class WeakDualityViolation(AssertionError):
    pass


@dataclass
class PrimalResult:
    price: float
    witness: Strategy | None
    binding_n: int
    method: str  # closed_form_bisection | lp_oracle
    iterations: int = 0


@dataclass
class DualResult:
    value: float
    argmax_n: int
    attained: bool
    boundary_binding: bool
    measure: DyadicMeasure | None = None
    entropy: float | None = None
    multiplier: float | None = None
    kkt_residual: float | None = None


@dataclass
class GapReport:
    primal: PrimalResult
    dual_M1: DualResult
    dual_MPhi: DualResult
    gap: float
    c: float
    N: int
    phi: str
    claim_kind: str
    k: float = 1.0

    CSV_COLUMNS = ("claim_kind", "k", "c", "N", "phi", "primal", "dual_m1", "dual_mphi", "gap", "binding_n", "argmax_n")

    def row(self) -> dict:
        return {
            "claim_kind": self.claim_kind,
            "k": self.k,
            "c": self.c,
            "N": self.N,
            "phi": self.phi,
            "primal": self.primal.price,
            "dual_m1": self.dual_M1.value,
            "dual_mphi": self.dual_MPhi.value,
            "gap": self.gap,
            "binding_n": self.primal.binding_n,
            "argmax_n": self.dual_M1.argmax_n,
        }

    def to_dict(self) -> dict:
        d = self.row()
        d["primal_method"] = self.primal.method
        d["dual_m1_attained"] = self.dual_M1.attained
        d["dual_mphi_attained"] = self.dual_MPhi.attained
        d["boundary_binding"] = self.dual_M1.boundary_binding
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([format_number(v) for v in self.row().values()])
        return buf.getvalue()


def format_number(v) -> str:
    """17 significant digits so doubles survive a CSV round trip."""
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


# --------------------------------------------------------------------------
# primal


def _levels(N):
    return np.arange(1, N + 1, dtype=float)


def _alpha_interval(h: DyadicClaim, c: float, x: float):
    n = _levels(h.N)
    lo = np.maximum(-c / n, (h.v1 - x) / n)
    hi = np.minimum(c / n**2, (x - h.v2) / n**2)
    return lo, hi


def _feasible(h: DyadicClaim, c: float, x: float) -> bool:
    lo, hi = _alpha_interval(h, c, x)
    return bool(np.all(lo <= hi))


def price_thresholds(h: DyadicClaim, c: float) -> np.ndarray:
    """Per-level smallest feasible capital.

    Level ``n`` alone is feasible iff ``x >= v1 - c/n``,
    ``x >= (n v1 + v2)/(n+1)`` and ``x >= v2 - c n``.
    """
    n = _levels(h.N)
    return np.maximum.reduce([h.v1 - c / n, (n * h.v1 + h.v2) / (n + 1), h.v2 - c * n])


def primal_price(h: DyadicClaim, c: float, N: int | None = None, xtol: float = 1e-12, cap: float = PRICE_CAP) -> PrimalResult:
    """Classical super-replication price with credit line ``c`` by bisection on ``x``.

    Feasibility of ``x`` is monotone, so bisection between a provably
    infeasible and a feasible capital converges to the price.
    """
    if c < 0:
        raise ValueError("credit line must be nonnegative")
    if N is not None and N != h.N:
        h = h.truncate(N) if N < h.N else _mismatch(h, N)
    thresholds = price_thresholds(h, c)
    binding = int(np.argmax(thresholds)) + 1

    lo = float(min(h.v1.min(), h.v2.min())) - 1.0
    hi = float(max(h.v1.max(), h.v2.max(), 0.0))
    if hi > cap:
        if not _feasible(h, c, cap):
            return PrimalResult(math.inf, None, binding, "closed_form_bisection")
        hi = cap
    it = 0
    while hi - lo > xtol and it < 400:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _feasible(h, c, mid):
            hi = mid
        else:
            lo = mid
        it += 1
    lo_a, hi_a = _alpha_interval(h, c, hi)
    n = _levels(h.N)
    alpha = np.clip(lo_a, -c / n, c / n**2)
    return PrimalResult(hi, Strategy(h.N, c, alpha), binding, "closed_form_bisection", it)


def _mismatch(h, N):
    raise dyadic.TruncationMismatch(f"claim has N = {h.N}, asked for N = {N}")


def primal_price_lp(h: DyadicClaim, c: float) -> PrimalResult:
    """Same price from the dense simplex: variables ``(x, alpha_1..alpha_N)``."""
    N = h.N
    n = _levels(N)
    cost = np.zeros(N + 1)
    cost[0] = 1.0
    A = np.zeros((2 * N, N + 1))
    b = np.zeros(2 * N)
    # v1 - x - n alpha <= 0 ; v2 - x + n^2 alpha <= 0
    A[:N, 0] = -1.0
    A[:N, 1:] = np.diag(-n)
    b[:N] = -h.v1
    A[N:, 0] = -1.0
    A[N:, 1:] = np.diag(n**2)
    b[N:] = -h.v2
    bounds = [(None, None)] + [(-c / k, c / k**2) for k in n]
    res = solve_lp(cost, A_ub=A, b_ub=b, bounds=bounds)
    if not res.success:
        raise LPError(f"primal LP ended with status {res.status}")
    alpha = np.clip(res.x[1:], -c / n, c / n**2)
    binding = int(np.argmax(price_thresholds(h, c))) + 1
    return PrimalResult(float(res.x[0]), Strategy(N, c, alpha), binding, "lp_oracle", res.nit)


def superreplication_residual(h: DyadicClaim, result: PrimalResult) -> float:
    """Largest shortfall of ``price + alpha X(1)`` below the claim."""
    payoff = dyadic.strategy_payoff(result.witness)
    s1 = h.v1 - result.price - payoff.v1
    s2 = h.v2 - result.price - payoff.v2
    return float(max(s1.max(), s2.max(), 0.0))


# --------------------------------------------------------------------------
# dual


def dual_ratios(h: DyadicClaim) -> np.ndarray:
    """``r_n = (n v1 + v2)/(n+1)``, the value of the unit measure on ``I_n``."""
    n = _levels(h.N)
    return (n * h.v1 + h.v2) / (n + 1)


def dual_price_M1(h: DyadicClaim, N: int | None = None) -> DualResult:
    """``sup E_Q[h]`` over separating measures: a vertex of the simplex in ``t``."""
    if N is not None and N != h.N:
        h = h.truncate(N) if N < h.N else _mismatch(h, N)
    r = dual_ratios(h)
    i = int(np.argmax(r))  # first maximizer, so ties go to the smallest n
    argmax_n = i + 1
    return DualResult(float(r[i]), argmax_n, True, argmax_n == h.N, dyadic.unit_atom_measure(h.N, argmax_n))


def _power2_weights(N: int) -> np.ndarray:
    """``a_n`` with squared entropy ``sum a_n t_n^2`` in simplex coordinates."""
    n = _levels(N)
    return np.ldexp((n**2 + 1) / (n + 1) ** 2, (np.arange(1, N + 1) + 1))


def min_power2_entropy(N: int) -> float:
    return float(1.0 / np.sum(1.0 / _power2_weights(N)))


def _simplex_weights_for(r, a, s):
    """Solve ``sum max(0, (r - nu) s / a) = 1`` exactly; return ``(t, nu)``.

    Active levels are a prefix of ``r`` sorted descending; the active set is
    the longest prefix whose candidate ``nu`` stays below its last ratio.
    """
    inv = s / a
    order = np.argsort(-r, kind="stable")
    rs, ws = r[order], inv[order]
    cum_rw = np.cumsum(rs * ws)
    cum_w = np.cumsum(ws)
    nus = (cum_rw - 1.0) / cum_w
    active = np.flatnonzero(nus < rs)
    k = int(active[-1]) if active.size else 0  # 1/w below rounding: vertex
    nu = float(nus[k])
    t = np.maximum(0.0, r - nu) * inv
    if not t.sum() > 0:
        t = np.zeros_like(r)
        t[order[0]] = 1.0
    return t / t.sum(), nu


def dual_price_MPhi(h: DyadicClaim, spec: EntropySpec, N: int | None = None, entropy_cap: float | None = None) -> DualResult:
    """``sup E_Q[h]`` over separating measures with finite (or capped) entropy.

    Uncapped: on a truncation every measure has finite entropy when
    ``phi(0) < inf``, so the value is the M1 value.  With ``phi(0) = inf``
    only strictly positive densities qualify; the same value is reached in
    the limit and ``attained`` is false when the M1 vertex has zeros.

    Capped (``power2`` only): maximize ``r . t`` over the simplex subject to
    ``sum a_n t_n^2 <= B`` via bisection on the constraint multiplier.
    """
    if N is not None and N != h.N:
        h = h.truncate(N) if N < h.N else _mismatch(h, N)
    base = dual_price_M1(h)
    if entropy_cap is None:
        if math.isfinite(spec.phi_at_zero):
            ent = base.measure.entropy(spec).value
            return DualResult(base.value, base.argmax_n, True, base.boundary_binding, base.measure, ent)
        attained = h.N == 1
        return DualResult(base.value, base.argmax_n, attained, base.boundary_binding, None, None)

    if not (spec.kind == "power" and spec.p == 2):
        raise UnsupportedEntropy("capped entropy optimization is implemented for power(2) only")
    return _capped_power2(h, float(entropy_cap), base)


def _capped_power2(h: DyadicClaim, B: float, base: DualResult) -> DualResult:
    N = h.N
    a = _power2_weights(N)
    r = dual_ratios(h)
    e_min = 1.0 / np.sum(1.0 / a)
    if B < e_min * (1.0 - 1e-12):
        raise InfeasibleCap(f"entropy cap {B} below the minimal achievable {e_min}")
    vertex_entropy = a[base.argmax_n - 1]
    if B >= vertex_entropy:
        return DualResult(base.value, base.argmax_n, True, base.boundary_binding, base.measure, float(vertex_entropy), 0.0, 0.0)
    if np.ptp(r) == 0.0:
        t = (1.0 / a) / np.sum(1.0 / a)
        Q = dyadic.measure_from_simplex(t)
        return DualResult(float(r[0]), base.argmax_n, True, base.boundary_binding, Q, float(e_min), 0.0, 0.0)

    def entropy_at(log_s):
        t, nu = _simplex_weights_for(r, a, math.exp(log_s))
        return float(np.sum(a * t * t)), t, nu

    lo, hi = -80.0, 80.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e, _, _ = entropy_at(mid)
        if e > B:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13:
            break
    log_s = lo
    e, t, nu = entropy_at(log_s)
    s = math.exp(log_s)
    # KKT for  max r.t - nu (sum t - 1) - (1/(2s)) (sum a t^2 - B)
    pos = t > 0
    scale = float(np.max(a * t))
    stat = np.abs(s * (r[pos] - nu) - a[pos] * t[pos]) / scale
    dual_feas = np.maximum(0.0, s * (r[~pos] - nu)) / scale
    resid = max(
        abs(t.sum() - 1.0),
        max(0.0, e - B) / B,
        float(stat.max(initial=0.0)),
        float(dual_feas.max(initial=0.0)),
        abs(e - B) / B,
    )
    Q = dyadic.measure_from_simplex(t)
    value = float(np.dot(r, t))
    return DualResult(value, int(np.argmax(t)) + 1, True, False, Q, e, 1.0 / (2.0 * s), resid)


def perturbation_path(h: DyadicClaim, eps: list[float]) -> list[float]:
    """``E_Q[h]`` along strictly positive measures ``(1-e) vertex + e uniform``."""
    base = dual_price_M1(h)
    N = h.N
    vertex = np.zeros(N)
    vertex[base.argmax_n - 1] = 1.0
    out = []
    for e in eps:
        t = (1.0 - e) * vertex + e / N
        out.append(dyadic.expectation(dyadic.measure_from_simplex(t), h))
    return out


# --------------------------------------------------------------------------
# gap report


def gap_report(h: DyadicClaim, c: float, N: int | None = None, spec: EntropySpec | None = None) -> GapReport:
    from .entropy import power

    spec = spec or power(2)
    if N is not None and N != h.N:
        h = h.truncate(N) if N < h.N else _mismatch(h, N)
    primal = primal_price(h, c)
    d1 = dual_price_M1(h)
    dphi = dual_price_MPhi(h, spec)
    gap = primal.price - max(d1.value, dphi.value)
    if gap < -WEAK_DUALITY_TOL:
        raise WeakDualityViolation(f"primal {primal.price} below dual {max(d1.value, dphi.value)}")
    return GapReport(primal, d1, dphi, gap, float(c), h.N, spec.label, h.kind, h.k)
