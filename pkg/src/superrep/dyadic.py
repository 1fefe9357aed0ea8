"""One-period dyadic market on (0, 1].

``I_n = (2^-n, 2^-(n-1)]`` splits into halves ``J_n^1`` and ``J_n^2``, each of
Lebesgue mass ``2^-(n+1)``.  The price increment is ``X(1) = n`` on ``J_n^1``
and ``-n^2`` on ``J_n^2``; a strategy holds ``alpha_n`` units on ``I_n``.

Everything is truncated at ``N`` atoms pairs.  Arrays are indexed by
``n - 1``.  Separating measures have density ``q1(n) = n q2(n)`` on ``J_n^1``
and ``q2(n)`` on ``J_n^2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .entropy import AnalyticSequence, EntropySpec, ZeroDensity, harmonic_divergence, entropy_of

NORM_TOL = 1e-12


class TruncationMismatch(ValueError):
    pass


class InadmissibleStrategy(ValueError):
    pass


def atom_weight(n: int) -> float:
    """P-mass ``2^-(n+1)`` of each half of ``I_n``."""
    if n < 1:
        raise ValueError("atoms are indexed from n = 1")
    return math.ldexp(1.0, -(n + 1))


def atom_weights(N: int) -> np.ndarray:
    return np.ldexp(1.0, -(np.arange(1, N + 1) + 1))


def _levels(N: int) -> np.ndarray:
    return np.arange(1, N + 1, dtype=float)


# --------------------------------------------------------------------------
# claims


@dataclass(frozen=True, eq=False)
class DyadicClaim:
    N: int
    v1: np.ndarray
    v2: np.ndarray
    kind: str = "custom"
    k: float = 1.0

    def __post_init__(self):
        v1 = np.asarray(self.v1, dtype=float)
        v2 = np.asarray(self.v2, dtype=float)
        if v1.shape != (self.N,) or v2.shape != (self.N,):
            raise ValueError(f"claim values must both have length N = {self.N}")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)

    def scaled(self, k: float) -> "DyadicClaim":
        kind = "kf" if self.kind in ("f", "kf") else self.kind
        return DyadicClaim(self.N, k * self.v1, k * self.v2, kind, self.k * k)

    def truncate(self, N: int) -> "DyadicClaim":
        return DyadicClaim(N, self.v1[:N], self.v2[:N], self.kind, self.k)

    def to_dict(self) -> dict:
        return {"N": self.N, "kind": self.kind, "k": self.k, "v1": self.v1.tolist(), "v2": self.v2.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DyadicClaim":
        return cls(int(d["N"]), np.asarray(d["v1"]), np.asarray(d["v2"]), d.get("kind", "custom"), float(d.get("k", 1.0)))


def claim_f(N: int) -> DyadicClaim:
    n = _levels(N)
    return DyadicClaim(N, np.ones(N), -n, "f")


def claim_kf(k: float, N: int) -> DyadicClaim:
    n = _levels(N)
    return DyadicClaim(N, np.full(N, float(k)), -k * n, "kf", float(k))


def claim_x1(N: int) -> DyadicClaim:
    n = _levels(N)
    return DyadicClaim(N, n.copy(), -(n**2), "X1")


def claim_indicator(n: int, half: int, N: int) -> DyadicClaim:
    if not 1 <= n <= N or half not in (1, 2):
        raise ValueError("indicator needs 1 <= n <= N and half in {1, 2}")
    v1, v2 = np.zeros(N), np.zeros(N)
    (v1 if half == 1 else v2)[n - 1] = 1.0
    return DyadicClaim(N, v1, v2, f"indicator({n},{half})")


def make_claim(kind: str, N: int, k: float = 1.0) -> DyadicClaim:
    if kind == "f":
        return claim_f(N) if k == 1 else claim_kf(k, N)
    if kind == "kf":
        return claim_kf(k, N)
    if kind in ("X1", "x1"):
        return claim_x1(N) if k == 1 else claim_x1(N).scaled(k)
    raise ValueError(f"unknown claim kind {kind!r}")


# --------------------------------------------------------------------------
# measures


@dataclass(frozen=True, eq=False)
class DyadicMeasure:
    """Density ``q2`` on the ``J_n^2`` atoms, ``q1 = n q2`` implied.

    ``tail_q2``, when given, continues ``q2`` for ``n > N``; such measures are
    only used for entropy and integrability diagnostics.
    """

    N: int
    q2: np.ndarray
    tail_q2: Callable[[int], float] | None = field(default=None)

    def __post_init__(self):
        q2 = np.asarray(self.q2, dtype=float)
        if q2.shape != (self.N,):
            raise ValueError(f"q2 must have length N = {self.N}")
        object.__setattr__(self, "q2", q2)

    @property
    def q1(self) -> np.ndarray:
        return _levels(self.N) * self.q2

    def head_mass(self) -> float:
        return math.fsum((_levels(self.N) + 1) * self.q2 * atom_weights(self.N))

    def tail_mass(self, tol: float = 1e-18, max_terms: int = 2000) -> float:
        if self.tail_q2 is None:
            return 0.0
        total, n = [], self.N + 1
        while n <= self.N + max_terms:
            t = (n + 1) * self.tail_q2(n) * atom_weight(n)
            total.append(t)
            if t < tol and n > self.N + 8:
                break
            n += 1
        return math.fsum(total)

    def total_mass(self) -> float:
        return self.head_mass() + self.tail_mass()

    def mixture(self, other: "DyadicMeasure", x: float) -> "DyadicMeasure":
        """``x * other + (1 - x) * self``."""
        if other.N != self.N:
            raise TruncationMismatch("mixture of measures with different N")
        tail = None
        if self.tail_q2 is not None or other.tail_q2 is not None:
            a = self.tail_q2 or (lambda n: 0.0)
            b = other.tail_q2 or (lambda n: 0.0)
            tail = lambda n: x * b(n) + (1.0 - x) * a(n)  # noqa: E731
        return DyadicMeasure(self.N, x * other.q2 + (1.0 - x) * self.q2, tail)

    def density_atoms(self):
        """``(P-mass, density)`` pairs of the head atoms."""
        w = atom_weights(self.N)
        out = []
        for i in range(self.N):
            out.append((w[i], (i + 1) * self.q2[i]))
            out.append((w[i], self.q2[i]))
        return out

    def entropy(self, spec: EntropySpec, max_terms: int = 1000):
        atoms = self.density_atoms()
        tail_mass = math.ldexp(1.0, -self.N)
        if self.tail_q2 is None:
            # zero-density atoms join the tail; weights below double range are
            # still positive, so keep the zero-density mass nonzero
            if any(w == 0.0 and d > 0 for w, d in atoms):
                raise ValueError("positive density on a level beyond double range")
            zero = math.fsum([w for w, d in atoms if d == 0] + [tail_mass])
            atoms = [(w, d) for w, d in atoms if d > 0]
            return entropy_of(atoms, max(zero, math.ulp(0.0)), ZeroDensity(), spec)
        q = self.tail_q2

        def level(n):
            w = atom_weight(n)
            return [(w, n * q(n)), (w, q(n))]

        return entropy_of(atoms, tail_mass, AnalyticSequence(level, start=self.N + 1, max_terms=max_terms), spec)

    def to_dict(self) -> dict:
        return {"N": self.N, "kind": "measure", "q2": self.q2.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DyadicMeasure":
        return cls(int(d["N"]), np.asarray(d["q2"], dtype=float))


def unit_atom_measure(N: int, n: int = 1) -> DyadicMeasure:
    """All Q-mass on ``I_n``: ``q2(n) = 2^(n+1) / (n+1)``."""
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    q2 = np.zeros(N)
    q2[n - 1] = math.ldexp(1.0, n + 1) / (n + 1)
    return DyadicMeasure(N, q2)


def measure_from_simplex(t: np.ndarray) -> DyadicMeasure:
    """Invert ``t_n = (n+1) q2(n) / 2^(n+1)``; ``t`` on the unit simplex gives a valid measure."""
    t = np.asarray(t, dtype=float)
    N = t.size
    return DyadicMeasure(N, t / ((_levels(N) + 1) * atom_weights(N)))


def simplex_weights(Q: DyadicMeasure) -> np.ndarray:
    return (_levels(Q.N) + 1) * Q.q2 * atom_weights(Q.N)


def random_measure(N: int, rng: np.random.Generator, sparsity: float = 0.0) -> DyadicMeasure:
    t = rng.dirichlet(np.ones(N))
    if sparsity > 0:
        t = t * (rng.random(N) >= sparsity)
        if t.sum() == 0:
            t[rng.integers(N)] = 1.0
        t /= t.sum()
    return measure_from_simplex(t)


def heavy_tail_q2(scale: float = 1.0) -> Callable[[int], float]:
    """``q2(n) = scale 2^(n/2) / n``: normalizable, yet infinite squared entropy."""
    return lambda n: scale * 2.0 ** (n / 2.0) / n


def heavy_tail_measure(N: int, rng: np.random.Generator, tail_share: float = 0.5) -> DyadicMeasure:
    """Random head on ``n <= N`` plus a ``2^(n/2)/n`` tail carrying ``tail_share`` of Q."""
    unit = DyadicMeasure(N, np.zeros(N), heavy_tail_q2(1.0)).tail_mass()
    head = random_measure(N, rng)
    return DyadicMeasure(N, (1.0 - tail_share) * head.q2, heavy_tail_q2(tail_share / unit))


def example21_q0(N: int = 1) -> DyadicMeasure:
    """Density ``cst n/e^n`` on ``J_n^1`` and ``cst/e^n`` on ``J_n^2`` (a valid separating measure)."""
    x = 1.0 / (2.0 * math.e)
    cst = 2.0 / (1.0 / (1.0 - x) ** 2 - 1.0)
    q2 = lambda n: cst * math.exp(-n)  # noqa: E731
    head = np.array([q2(n) for n in range(1, N + 1)])
    return DyadicMeasure(N, head, q2)


@dataclass
class MixtureCheck:
    x: float
    finite0: bool
    finite1: bool
    finite_mix: bool
    iff_holds: bool
    convex_ok: bool
    values: tuple


def mixture_entropy_check(Q0: DyadicMeasure, Q1: DyadicMeasure, x: float, spec: EntropySpec) -> MixtureCheck:
    """Finite entropy of ``x Q1 + (1-x) Q0`` iff both ends are finite (``0 < x < 1``).

    When all three are finite, convexity of the entropy is checked as well.
    """
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    e0, e1 = Q0.entropy(spec), Q1.entropy(spec)
    em = Q0.mixture(Q1, x).entropy(spec)
    f0, f1, fm = e0.finite, e1.finite, em.finite
    convex = True
    if f0 and f1 and fm:
        convex = em.value <= x * e1.value + (1.0 - x) * e0.value + 1e-8
    return MixtureCheck(x, f0, f1, fm, fm == (f0 and f1), convex, (e0.value, e1.value, em.value))


# --------------------------------------------------------------------------
# expectations and validation


def expectation(Q: DyadicMeasure, h: DyadicClaim) -> float:
    """``E_Q[h] = sum (q1 v1 + q2 v2) 2^-(n+1)``, summed as ``q2 (n v1 + v2)``."""
    if Q.N != h.N:
        raise TruncationMismatch(f"measure has N = {Q.N}, claim has N = {h.N}")
    if Q.tail_q2 is not None:
        raise ValueError("expectations need a truncated measure without tail")
    n = _levels(h.N)
    return math.fsum(Q.q2 * (n * h.v1 + h.v2) * atom_weights(h.N))


def l1_distance(Q: DyadicMeasure, h: DyadicClaim, g: DyadicClaim) -> float:
    """``E_Q |h - g|``."""
    if not Q.N == h.N == g.N:
        raise TruncationMismatch("truncations differ")
    n = _levels(h.N)
    return math.fsum((n * Q.q2 * np.abs(h.v1 - g.v1) + Q.q2 * np.abs(h.v2 - g.v2)) * atom_weights(h.N))


@dataclass
class ValidationReport:
    valid: bool
    issues: list[str]
    total_mass: float
    strategy_expectations: list[float]


def validate_measure(Q: DyadicMeasure, rng: np.random.Generator | None = None, c: float = 1.0) -> ValidationReport:
    issues = []
    if np.any(Q.q2 < 0):
        issues.append("negative density")
    mass = Q.total_mass()
    if abs(mass - 1.0) > NORM_TOL:
        issues.append(f"normalization {mass!r} != 1")
    exps = []
    if Q.tail_q2 is None and not issues:
        rng = rng or np.random.default_rng(0)
        n = _levels(Q.N)
        for _ in range(3):
            alpha = rng.uniform(-c / n, c / n**2)
            e = expectation(Q, strategy_payoff(Strategy(Q.N, c, alpha)))
            exps.append(e)
            if abs(e) > 1e-12:
                issues.append(f"strategy gain has nonzero expectation {e!r}")
    return ValidationReport(not issues, issues, mass, exps)


def x1_integrability(q2: Callable[[int], float], max_terms: int = 1000, tol: float = 1e-14) -> dict:
    """Partial sums of ``sum n^2 q2(n) / 2^(n+1)`` for a generator-described measure.

    Truncated measures always integrate ``X(1)``; this is the diagnostic that
    shows the non-integrable cases of the untruncated model.
    """
    partial, last = 0.0, 0.0
    history = []
    for n in range(1, max_terms + 1):
        t = n * n * q2(n) * atom_weight(n)
        partial += t
        history.append(t)
        if n > 16 and t < tol * max(1.0, partial):
            return {"converged": True, "value": partial, "terms": n}
        last = t
    # n * term nondecreasing means the terms dominate a multiple of 1/n
    divergent = harmonic_divergence(list(range(1, max_terms + 1)), history) or partial > 1e12
    return {"converged": False, "divergent": divergent, "value": partial if not divergent else math.inf, "last_term": last, "terms": max_terms}


# --------------------------------------------------------------------------
# strategies


@dataclass(frozen=True, eq=False)
class Strategy:
    N: int
    c: float
    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.shape != (self.N,):
            raise ValueError(f"alpha must have length N = {self.N}")
        object.__setattr__(self, "alpha", a)

    def is_admissible(self, tol: float = 1e-12) -> bool:
        n = _levels(self.N)
        lo, hi = -self.c / n, self.c / n**2
        return bool(np.all(self.alpha >= lo - tol * (1 + np.abs(lo))) and np.all(self.alpha <= hi + tol * (1 + np.abs(hi))))


def strategy_payoff(s: Strategy) -> DyadicClaim:
    """Terminal gain ``alpha X(1)``."""
    if not s.is_admissible():
        raise InadmissibleStrategy(f"alpha outside [-c/n, c/n^2] for c = {s.c}")
    n = _levels(s.N)
    return DyadicClaim(s.N, n * s.alpha, -(n**2) * s.alpha, "payoff")


def credit_requirement(alpha: np.ndarray) -> float:
    """Smallest ``c`` making ``alpha`` admissible (worst loss of ``alpha X(1)``)."""
    a = np.asarray(alpha, dtype=float)
    n = _levels(a.size)
    return float(max(0.0, np.max(n**2 * a), np.max(-n * a)))


def harmonic_strategy(N: int, m: int) -> np.ndarray:
    """``alpha_n = 1/n`` for ``n <= m``, zero beyond: approximates ``f`` in L1(Q)."""
    a = np.zeros(N)
    a[:m] = 1.0 / _levels(m)
    return a


def dumps(obj) -> str:
    return json.dumps(obj.to_dict())


def loads(text: str):
    d = json.loads(text)
    if "q2" in d:
        return DyadicMeasure.from_dict(d)
    return DyadicClaim.from_dict(d)
