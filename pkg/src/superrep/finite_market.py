"""Polar-cone duality on a finite sample space.

The cone of super-replicable claims is ``G = cone(gains) - R^m_+``.  Its
polar, for the plain dot product with nonnegative vectors, is

    G0 = {z >= 0 : <z, g_j> <= 0 for all j}

and normalizing ``<z, 1> = 1`` gives the separating probability vectors
``N1``.  Super-replication prices are computed twice: on the primal side by
bisection over cone membership of ``f - x 1``, on the dual side as a linear
program over ``N1``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .simplex import LPError, solve_lp

MAX_STATES = 64
MAX_GAINS = 32
MEMBER_TOL = 1e-8
DUALITY_TOL = 1e-7


class EmptyPolar(ValueError):
    """N1 is empty: some gain combination is an arbitrage."""


class MembershipDisagreement(LPError):
    """The direct and the bipolar membership tests gave different answers."""


@dataclass(frozen=True, eq=False)
class FiniteMarket:
    p: np.ndarray
    gains: np.ndarray  # (J, m)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        gains = np.asarray(self.gains, dtype=float).reshape(-1, p.size)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("p must be a nonempty vector")
        if p.size > MAX_STATES or gains.shape[0] > MAX_GAINS:
            raise ValueError(f"market too large (m <= {MAX_STATES}, J <= {MAX_GAINS})")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("p must be strictly positive and sum to 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "gains", gains)

    @property
    def m(self) -> int:
        return self.p.size

    @property
    def J(self) -> int:
        return self.gains.shape[0]

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "gains": self.gains.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteMarket":
        p = np.asarray(d["p"], dtype=float)
        gains = d.get("gains") or []
        return cls(p, np.asarray(gains, dtype=float).reshape(-1, p.size))

    @classmethod
    def load(cls, path) -> "FiniteMarket":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ConeSpec:
    """``cone(generators) - R^m_+`` (the orthant part is always present for markets)."""

    generators: np.ndarray
    minus_orthant: bool = True

    def contains(self, f, tol: float = MEMBER_TOL) -> bool:
        return _direct_member(self.generators, np.asarray(f, dtype=float), tol)


def market_cone(market: FiniteMarket) -> ConeSpec:
    return ConeSpec(market.gains)


def random_market(rng: np.random.Generator, m: int, J: int, arbitrage_free: bool = True) -> FiniteMarket:
    """Random market; arbitrage-free ones have zero-mean gains under a random full-support Q."""
    p = rng.dirichlet(np.ones(m))
    gains = rng.normal(size=(J, m))
    if arbitrage_free and J:
        q = rng.dirichlet(np.ones(m))
        gains -= (gains @ q)[:, None]
    return FiniteMarket(p, gains)


# --------------------------------------------------------------------------
# polar


def _n1_constraints(market: FiniteMarket):
    """``A_ub z <= 0``, ``sum z = 1``, ``z >= 0``."""
    A_ub = market.gains if market.J else None
    b_ub = np.zeros(market.J) if market.J else None
    return A_ub, b_ub, np.ones((1, market.m)), np.ones(1)


def _max_over_n1(market: FiniteMarket, f: np.ndarray):
    A_ub, b_ub, A_eq, b_eq = _n1_constraints(market)
    res = solve_lp(-np.asarray(f, dtype=float), A_ub, b_ub, A_eq, b_eq)
    if res.status == "infeasible":
        raise EmptyPolar("no separating probability vector")
    if not res.success:
        raise LPError(f"dual LP ended with status {res.status}")
    return -res.fun, res.x


@dataclass
class PolarDescription:
    """``G0 = {z >= 0 : gains @ z <= 0}`` and its normalized slice ``N1``."""

    market: FiniteMarket
    n1_empty: bool

    def in_polar(self, z, tol: float = 1e-9) -> bool:
        z = np.asarray(z, dtype=float)
        if np.any(z < -tol):
            return False
        return bool(self.market.J == 0 or np.all(self.market.gains @ z <= tol))

    def in_n1(self, z, tol: float = 1e-9) -> bool:
        return self.in_polar(z, tol) and abs(float(np.sum(z)) - 1.0) <= tol

    def sample_vertices(self, k: int, rng: np.random.Generator) -> list[np.ndarray]:
        """Vertices of ``N1`` found by LPs with random objectives."""
        if self.n1_empty:
            return []
        out = []
        for _ in range(k):
            _, z = _max_over_n1(self.market, rng.normal(size=self.market.m))
            out.append(np.maximum(z, 0.0))
        return out


def polar_elements(market: FiniteMarket) -> PolarDescription:
    A_ub, b_ub, A_eq, b_eq = _n1_constraints(market)
    res = solve_lp(np.zeros(market.m), A_ub, b_ub, A_eq, b_eq)
    return PolarDescription(market, res.status == "infeasible")


# --------------------------------------------------------------------------
# membership


def _direct_member(gains: np.ndarray, f: np.ndarray, tol: float) -> bool:
    """Is ``f <= sum lambda_j g_j`` for some ``lambda >= 0`` (up to ``tol``)?

    Solved as ``min sum s`` subject to ``f - G^T lambda <= s``, ``lambda, s >= 0``.
    """
    m = f.size
    J = gains.shape[0]
    if J == 0:
        return bool(np.all(f <= tol))
    # variables (lambda_1..lambda_J, s_1..s_m)
    cost = np.concatenate([np.zeros(J), np.ones(m)])
    A = np.hstack([-gains.T, -np.eye(m)])
    res = solve_lp(cost, A_ub=A, b_ub=-f)
    if not res.success:
        raise LPError(f"membership LP ended with status {res.status}")
    return bool(res.fun <= tol)


def membership_tests(market: FiniteMarket, f, tol: float = MEMBER_TOL) -> tuple[bool, bool]:
    """(direct, bipolar) answers to ``f in G``.

    The bipolar test checks ``<z, f> <= tol`` on ``N1`` and on the
    normalized directions of ``N0 = {z in G0 : <z, 1> = 0}``.
    """
    f = np.asarray(f, dtype=float)
    direct = _direct_member(market.gains, f, tol)
    try:
        top, _ = _max_over_n1(market, f)
    except EmptyPolar:
        top = -math.inf  # G0 = {0}, every f is in the bipolar
    bipolar = top <= tol and _max_over_n0(market, f) <= tol
    return direct, bipolar


def _max_over_n0(market: FiniteMarket, f: np.ndarray) -> float:
    """``max <z, f>`` over ``z in G0``, ``<z, 1> = 0``, ``z <= 1``."""
    A_ub = market.gains if market.J else None
    b_ub = np.zeros(market.J) if market.J else None
    res = solve_lp(-f, A_ub, b_ub, np.ones((1, market.m)), np.zeros(1), bounds=(0.0, 1.0))
    if not res.success:
        raise LPError(f"N0 LP ended with status {res.status}")
    return -res.fun


def bipolar_membership(market: FiniteMarket, f, tol: float = MEMBER_TOL) -> bool:
    direct, bipolar = membership_tests(market, f, tol)
    if direct != bipolar:
        raise MembershipDisagreement(f"direct test says {direct}, bipolar test says {bipolar}")
    return direct


# --------------------------------------------------------------------------
# prices


@dataclass
class AbstractPriceResult:
    price: float
    maximizer: np.ndarray
    is_minimum: bool
    primal: float
    dual: float
    gap: float


def abstract_price(market: FiniteMarket, f, xtol: float = 1e-10) -> AbstractPriceResult:
    """``inf{x : f - x1 in G}`` and ``max{<z, f> : z in N1}``, checked equal."""
    f = np.asarray(f, dtype=float)
    dual, z = _max_over_n1(market, f)  # raises EmptyPolar when N1 is empty

    lo, hi = float(f.min()) - 1.0, float(f.max())
    while hi - lo > xtol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if _direct_member(market.gains, f - mid, 0.1 * xtol):
            hi = mid
        else:
            lo = mid
    primal = hi
    gap = primal - dual
    if abs(gap) > DUALITY_TOL:
        raise LPError(f"primal {primal} and dual {dual} differ by {gap}")
    attained = bipolar_membership(market, f - primal)
    return AbstractPriceResult(primal, np.maximum(z, 0.0), attained, primal, dual, gap)


# --------------------------------------------------------------------------
# decomposition and equivalent measures


@dataclass
class DecompositionReport:
    samples: int
    decomposed: int
    n0_trivial: bool
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.n0_trivial and not self.failures


def decompose(market: FiniteMarket, z, tol: float = 1e-9):
    """Split ``z in G0`` as ``0`` or ``lambda * (element of N1)``; returns ``(lambda, z1)``."""
    z = np.asarray(z, dtype=float)
    pd = PolarDescription(market, False)
    if not pd.in_polar(z, tol):
        raise ValueError("z is not in the polar cone")
    mass = float(z.sum())
    if mass <= tol:
        if np.max(np.abs(z)) > tol:
            raise ValueError("nonzero polar element with zero mass")
        return 0.0, None
    return mass, z / mass


def n0_decomposition_check(market: FiniteMarket, rng: np.random.Generator | None = None, samples: int = 20) -> DecompositionReport:
    rng = rng or np.random.default_rng(0)
    pd = polar_elements(market)
    elements = [np.zeros(market.m)]
    verts = pd.sample_vertices(max(2, samples // 4), rng)
    for _ in range(samples):
        if not verts:
            break
        w = rng.exponential(size=len(verts)) * rng.exponential(5.0)
        elements.append(sum(wi * v for wi, v in zip(w, verts)))
    failures = []
    ok = 0
    for z in elements:
        try:
            lam, z1 = decompose(market, z)
        except ValueError as exc:
            failures.append(str(exc))
            continue
        if lam == 0.0 or pd.in_n1(z1):
            ok += 1
        else:
            failures.append(f"normalized element outside N1: {z1}")
    n0_trivial = all(_max_over_n0(market, e) <= 1e-12 for e in np.eye(market.m))
    return DecompositionReport(len(elements), ok, n0_trivial, failures)


def strictly_positive_element(market: FiniteMarket):
    """An element of N1 maximizing its smallest coordinate, or ``None``."""
    m = market.m
    # variables (z, s): maximize s with z_i >= s
    cost = np.zeros(m + 1)
    cost[-1] = -1.0
    rows = [np.hstack([-np.eye(m), np.ones((m, 1))])]
    rhs = [np.zeros(m)]
    if market.J:
        rows.append(np.hstack([market.gains, np.zeros((market.J, 1))]))
        rhs.append(np.zeros(market.J))
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    res = solve_lp(cost, np.vstack(rows), np.concatenate(rhs), A_eq, np.ones(1), bounds=[(0, None)] * m + [(None, 1.0)])
    if not res.success or res.x[-1] <= 1e-12:
        return None
    return np.maximum(res.x[:m], 0.0)


def equivalent_sup_path(market: FiniteMarket, f, weights=tuple(10.0 ** -k for k in range(1, 11))) -> list[float]:
    """``<z_x, f>`` for ``z_x = (1-x) z* + x z_pos`` with ``z*`` the maximizer."""
    f = np.asarray(f, dtype=float)
    _, zstar = _max_over_n1(market, f)
    zpos = strictly_positive_element(market)
    if zpos is None:
        raise EmptyPolar("N1 has no strictly positive element")
    return [float(((1 - x) * zstar + x * zpos) @ f) for x in weights]


def write_results_csv(path, rows) -> None:
    """Rows of ``(instance_id, primal, dual, gap, attained)``."""
    from .pricing import format_number

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "primal", "dual", "gap", "attained"])
        for row in rows:
            w.writerow([format_number(v) for v in row])
