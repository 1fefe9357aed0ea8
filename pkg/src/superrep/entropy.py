"""Entropy functions, convex conjugates of utilities and generalized entropy.

An entropy function is a convex ``phi: (0, inf) -> R`` together with its
limit at zero.  Generalized entropy of a measure ``Q << P`` is
``E_P[phi(dQ/dP)]``, evaluated here on discrete measures given as a list of
``(P-probability, density)`` atoms plus a tail that is either of zero density
or described by a generator of further atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy.optimize import minimize_scalar

NORMALIZATION_TOL = 1e-12
VALUE_TOL = 1e-8
DIVERGENCE_CAP = 1e12
WITNESS_MARGIN = 1e-3


class DomainError(ValueError):
    pass


class UnboundedConjugateError(ArithmeticError):
    """The supremum defining a conjugate is not attained on any finite bracket."""


class InvalidMeasureError(ValueError):
    pass


# --------------------------------------------------------------------------
# utilities


@dataclass(frozen=True)
class UtilitySpec:
    """A concave nondecreasing utility.

    ``kind`` is ``"exponential"`` (``u(x) = -exp(-rate x) / rate``) or
    ``"custom"``.  A custom utility whose effective domain is a finite set
    of points (value ``-inf`` elsewhere) declares it through ``atoms``.
    """

    kind: str
    rate: float = 1.0
    evaluator: Callable[[float], float] | None = None
    known_concave: bool = False
    atoms: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "exponential":
            if not self.rate > 0:
                raise ValueError("exponential utility needs rate > 0")
        elif self.kind == "custom":
            if self.evaluator is None:
                raise ValueError("custom utility needs an evaluator")
        else:
            raise ValueError(f"unknown utility kind {self.kind!r}")

    def __call__(self, x: float) -> float:
        if self.kind == "exponential":
            return -math.exp(-self.rate * x) / self.rate
        return self.evaluator(x)


def exponential_utility(rate: float = 1.0) -> UtilitySpec:
    return UtilitySpec("exponential", rate=rate, known_concave=True)


def point_utility() -> UtilitySpec:
    """``u(-1) = 0`` and ``u = -inf`` elsewhere; its conjugate is the identity."""
    return UtilitySpec(
        "custom",
        evaluator=lambda x: 0.0 if x == -1.0 else -math.inf,
        known_concave=True,
        atoms=(-1.0,),
    )


def validate_utility(u: UtilitySpec, grid: Iterable[float] | None = None, tol: float = 1e-9) -> list[str]:
    """Midpoint concavity and monotonicity on a grid; returns the problems found."""
    if u.atoms is not None:
        return []
    xs = np.asarray(list(grid) if grid is not None else np.linspace(-20.0, 20.0, 401))
    vals = np.array([u(x) for x in xs])
    issues = []
    if np.any(np.diff(vals) < -tol * (1 + np.abs(vals[:-1]))):
        issues.append("utility decreases somewhere on the grid")
    mids = np.array([u(0.5 * (a + b)) for a, b in zip(xs[:-2], xs[2:])])
    chord = 0.5 * (vals[:-2] + vals[2:])
    if np.any(mids < chord - tol * (1 + np.abs(chord))):
        issues.append("utility fails midpoint concavity on the grid")
    return issues


def _bracket_max(g: Callable[[float], float], x0: float = 0.0, step: float = 1.0, bound: float = 1e8):
    """Expand a bracket ``a < b < c`` with ``g(b) >= max(g(a), g(c))``."""
    a, b = x0, x0 + step
    ga, gb = g(a), g(b)
    if gb < ga:
        a, b, ga, gb = b, a, gb, ga
        step = -step
    c = b + 2.0 * step
    gc = g(c)
    while gc > gb:
        a, ga, b, gb = b, gb, c, gc
        step *= 2.0
        c = b + 2.0 * step
        if abs(c) > bound:
            raise UnboundedConjugateError(f"bracket expansion passed |x| = {bound:g}")
        gc = g(c)
    return (a, b, c) if a < c else (c, b, a)


def conjugate_of_utility(u: UtilitySpec, y: float, xtol: float = 1e-10) -> float:
    """``sup_x u(x) - x y`` by bracket expansion and golden-section search."""
    if not y > 0:
        raise DomainError(f"conjugate needs y > 0, got {y}")
    if u.atoms is not None:
        return max(u(x) - x * y for x in u.atoms)

    def g(x):
        return u(x) - x * y

    a, b, c = _bracket_max(g)
    res = minimize_scalar(lambda x: -g(x), bracket=(a, b, c), method="golden", options={"xtol": xtol})
    return float(-res.fun)


# --------------------------------------------------------------------------
# entropy functions


def _extrapolate_at_zero(phi: Callable[[float], float]) -> float:
    """Limit of ``phi(y)`` along ``y = 1e-2, 1e-4, ...``; ``+inf`` on monotone blow-up."""
    vals = [phi(10.0 ** (-2 * k)) for k in range(1, 9)]
    incs = np.diff(vals)
    if abs(incs[-1]) < 1e-6 * max(1.0, abs(vals[-1])):
        return float(vals[-1])
    if np.all(incs > 0) and incs[-1] >= 0.5 * incs[0]:
        return math.inf
    return float(vals[-1])


def _example21(y: float) -> float:
    if y <= 1.0:
        return -math.log(y)
    return y * y - 3.0 * y + 2.0


@dataclass(frozen=True)
class EntropySpec:
    """A convex entropy function.

    kinds: ``identity``, ``power`` (``y**p``, ``p > 1``), ``example21``
    (``-ln y`` up to 1, then ``y^2 - 3y + 2``), ``conjugate`` of a
    :class:`UtilitySpec`, or ``custom`` with an explicit callable.
    """

    kind: str
    p: float = 2.0
    utility: UtilitySpec | None = None
    func: Callable[[float], float] | None = None
    name: str | None = None
    phi_at_zero: float = field(default=math.nan)

    def __post_init__(self):
        if self.kind == "power" and not self.p > 1:
            raise ValueError("power entropy needs p > 1")
        if self.kind == "conjugate" and self.utility is None:
            raise ValueError("conjugate entropy needs a utility")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom entropy needs func")
        if self.kind not in ("identity", "power", "example21", "conjugate", "custom"):
            raise ValueError(f"unknown entropy kind {self.kind!r}")
        if math.isnan(self.phi_at_zero):
            if self.kind in ("identity", "power"):
                at_zero = 0.0
            elif self.kind == "example21":
                at_zero = math.inf
            else:
                at_zero = _extrapolate_at_zero(lambda y: eval_phi(self, y))
            object.__setattr__(self, "phi_at_zero", at_zero)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "power":
            return f"power{self.p:g}"
        if self.kind == "conjugate":
            return f"conjugate-{self.utility.kind}"
        return self.kind

    def __call__(self, y: float) -> float:
        return eval_phi(self, y)


def identity() -> EntropySpec:
    return EntropySpec("identity")


def power(p: float = 2.0) -> EntropySpec:
    return EntropySpec("power", p=p)


def example21() -> EntropySpec:
    return EntropySpec("example21")


def conjugate(u: UtilitySpec) -> EntropySpec:
    return EntropySpec("conjugate", utility=u)


def custom(func: Callable[[float], float], name: str = "custom", phi_at_zero: float = math.nan) -> EntropySpec:
    return EntropySpec("custom", func=func, name=name, phi_at_zero=phi_at_zero)


def entropy_from_name(name: str) -> EntropySpec:
    """Parse the short names used by the CLI (``identity``, ``power2``, ``example21``, ``exp``)."""
    key = name.strip().lower()
    if key in ("id", "identity"):
        return identity()
    if key.startswith("power"):
        return power(float(key[5:] or 2))
    if key in ("example21", "ex21"):
        return example21()
    if key in ("exp", "exponential", "entropy"):
        return conjugate(exponential_utility())
    raise ValueError(f"unknown entropy function {name!r}")


def eval_phi(spec: EntropySpec, y: float) -> float:
    if not y > 0:
        raise DomainError(f"phi is defined on (0, inf), got {y}")
    kind = spec.kind
    if kind == "identity":
        return float(y)
    if kind == "power":
        try:
            return float(y) ** spec.p
        except OverflowError:
            return math.inf
    if kind == "example21":
        return _example21(y)
    if kind == "conjugate":
        return conjugate_of_utility(spec.utility, y)
    return float(spec.func(y))


def phi_value(spec: EntropySpec, y: float) -> float:
    """``phi`` extended to ``y = 0`` by its limit."""
    if y == 0:
        return spec.phi_at_zero
    return eval_phi(spec, y)


def check_convexity(spec: EntropySpec, lo: float = 1e-6, hi: float = 1e6, num: int = 241, tol: float = 1e-9) -> bool:
    ys = np.geomspace(lo, hi, num)
    vals = np.array([eval_phi(spec, y) for y in ys])
    for i in range(num - 1):
        for j in (i + 1, min(i + 7, num - 1)):
            mid = eval_phi(spec, 0.5 * (ys[i] + ys[j]))
            chord = 0.5 * (vals[i] + vals[j])
            if mid > chord + tol * (1.0 + abs(chord)):
                return False
    return True


# --------------------------------------------------------------------------
# growth condition


@dataclass(frozen=True)
class GrowthCheck:
    """Numeric verdict on ``phi+(l y) <= alpha phi+(y) + beta (y + 1)``.

    A witness on the sampled grid, not a proof for all ``y > 0``.
    """

    holds: bool
    alpha: float | None
    beta: float | None
    y_grid: tuple[float, ...]
    lambda_grid: tuple[float, ...]
    violation: tuple[float, float] | None = None  # (y, lambda) with largest deficit
    deficit: float | None = None


def _phi_or_inf(spec: EntropySpec, y: float) -> float:
    try:
        return eval_phi(spec, y) if math.isfinite(y) else math.inf
    except OverflowError:
        return math.inf


def _phi_plus(spec: EntropySpec, ys: np.ndarray) -> np.ndarray:
    out = np.array([_phi_or_inf(spec, float(y)) for y in ys])
    return np.maximum(out, 0.0)


def _refine(xs: np.ndarray, k: int, geometric: bool = True) -> np.ndarray:
    if k <= 1 or xs.size < 2:
        return xs
    t = np.linspace(0.0, 1.0, k, endpoint=False)
    if geometric:
        lx = np.log(xs)
        pts = np.exp(lx[:-1, None] + t * np.diff(lx)[:, None])
    else:
        pts = xs[:-1, None] + t * np.diff(xs)[:, None]
    return np.concatenate([pts.ravel(), xs[-1:]])


def _with_zero_set_edges(spec: EntropySpec, ys: np.ndarray, iters: int = 80) -> np.ndarray:
    """Add the edges of ``{phi+ = 0}`` between grid neighbours, found by bisection.

    On that set only ``beta`` can absorb ``phi+(l y)``, and the binding
    sample sits at its edge, which a fixed grid generally misses.
    """
    zero = _phi_plus(spec, ys) == 0
    edges = []
    for i in np.flatnonzero(zero[:-1] != zero[1:]):
        lo, hi = float(ys[i]), float(ys[i + 1])
        lo_zero = bool(zero[i])
        for _ in range(iters):
            mid = math.sqrt(lo * hi)
            if (_phi_plus(spec, np.array([mid]))[0] == 0) == lo_zero:
                lo = mid
            else:
                hi = mid
        edges += [lo, hi]
    return np.unique(np.concatenate([ys, edges])) if edges else ys


def check_growth_condition(
    spec: EntropySpec,
    lambda0: float,
    lambda1: float,
    y_grid: Iterable[float],
    n_lambda: int = 9,
    cap: float = 1e6,
    refine: int = 4,
) -> GrowthCheck:
    """Search for ``(alpha, beta)`` making G(phi) hold on the sampled grid.

    ``beta`` ranges over ``{0} U geomspace(1e-6, cap)``; for each ``beta`` the
    smallest admissible ``alpha`` is computed exactly from the samples.  The
    first ``beta`` with ``alpha <= cap`` is returned.  Otherwise the sample
    with the largest deficit at ``alpha = beta = cap`` is reported.

    The samples are the given grids refined ``refine`` times between
    neighbours, and the witness is inflated by ``WITNESS_MARGIN``, so it also
    holds between the user's grid points.
    """
    ys = np.asarray(list(y_grid), dtype=float)
    if ys.size == 0 or np.any(ys <= 0):
        raise DomainError("growth check needs a nonempty grid of positive y")
    if not 0 < lambda0 <= lambda1:
        raise DomainError("need 0 < lambda0 <= lambda1")
    lams = np.unique(np.concatenate([np.linspace(lambda0, lambda1, n_lambda), [lambda0, lambda1]]))
    ys = _refine(np.unique(ys), refine)
    lams = _refine(lams, max(1, refine // 4), geometric=False)
    ys = _with_zero_set_edges(spec, ys)
    base = _phi_plus(spec, ys)
    scaled = np.array([_phi_plus(spec, lam * ys) for lam in lams])  # (n_lambda, n_y)
    betas = np.concatenate([[0.0], np.geomspace(1e-6, cap, 73)])
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        for beta in betas:
            need = scaled - beta * (ys + 1.0)
            if np.any(need[:, base == 0] > 0) or not np.all(np.isfinite(need)):
                continue
            pos = base > 0
            alpha = float(np.max(need[:, pos] / base[pos], initial=0.0))
            if alpha <= cap:
                # small relative margin: the witness must survive finer grids
                m = 1.0 + WITNESS_MARGIN
                return GrowthCheck(True, alpha * m, float(beta) * m, tuple(ys), tuple(lams))
        deficit = scaled - cap * base - cap * (ys + 1.0)
    deficit = np.where(np.isnan(deficit), -math.inf, deficit)
    i, j = np.unravel_index(int(np.argmax(deficit)), deficit.shape)
    return GrowthCheck(
        False, None, None, tuple(ys), tuple(lams), violation=(float(ys[j]), float(lams[i])), deficit=float(deficit[i, j])
    )


def growth_inequality_holds(spec: EntropySpec, alpha: float, beta: float, ys, lams, rtol: float = 1e-9) -> bool:
    """Re-evaluate G(phi) for a given witness on arbitrary grids."""
    ys = np.asarray(ys, dtype=float)
    base = _phi_plus(spec, ys)
    for lam in lams:
        lhs = _phi_plus(spec, lam * ys)
        rhs = alpha * base + beta * (ys + 1.0)
        if np.any(lhs > rhs + rtol * (1.0 + np.abs(rhs))):
            return False
    return True


# --------------------------------------------------------------------------
# generalized entropy


@dataclass(frozen=True)
class ZeroDensity:
    """The tail region carries zero density; contributes ``tail_mass * phi(0)``."""


@dataclass(frozen=True)
class AnalyticSequence:
    """Tail described by a generator of atoms for ``n = start, start+1, ...``.

    ``terms(n)`` returns the list of ``(probability, density)`` atoms at
    level ``n``; their phi-weighted sum is the level's contribution.

    Summation stops once an increment is below ``increment_tol`` and the last
    ``window`` contributions decrease monotonically in absolute value.
    Divergence is certified when partial sums pass ``cap`` or when
    ``n * term`` stays positive and nondecreasing over the second half of the
    terms (comparison with the harmonic series).
    """

    terms: Callable[[int], list[tuple[float, float]]]
    start: int = 1
    max_terms: int = 1000
    increment_tol: float = 1e-12
    window: int = 8
    cap: float = DIVERGENCE_CAP

    def iterate(self) -> Iterator[tuple[int, list[tuple[float, float]]]]:
        for n in range(self.start, self.start + self.max_terms):
            yield n, self.terms(n)


@dataclass(frozen=True)
class EntropyReport:
    value: float
    converged: bool
    tail_bound: float
    exact: bool = True
    terms_used: int = 0

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def entropy_of(density_atoms, tail_mass: float, tail_policy, spec: EntropySpec) -> EntropyReport:
    """``sum p_i phi(d_i)`` plus the tail contribution."""
    atoms = [(float(p), float(d)) for p, d in density_atoms]
    if tail_mass < 0:
        raise InvalidMeasureError("tail mass must be nonnegative")
    if any(p <= 0 for p, _ in atoms) or any(d < 0 for _, d in atoms):
        raise InvalidMeasureError("atoms need positive probability and nonnegative density")
    total = math.fsum(p for p, _ in atoms) + tail_mass
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidMeasureError(f"probabilities sum to {total!r}, not 1")

    head = []
    for p, d in atoms:
        v = phi_value(spec, d)
        if math.isinf(v) and v > 0:
            return EntropyReport(math.inf, True, 0.0, exact=True)
        head.append(p * v)
    head_sum = math.fsum(head)

    if isinstance(tail_policy, ZeroDensity) or tail_mass == 0:
        if tail_mass > 0:
            if math.isinf(spec.phi_at_zero):
                return EntropyReport(math.inf, True, 0.0, exact=True)
            head_sum += tail_mass * spec.phi_at_zero
        return EntropyReport(head_sum, True, 0.0, exact=True, terms_used=len(atoms))

    if not isinstance(tail_policy, AnalyticSequence):
        raise TypeError(f"unsupported tail policy {tail_policy!r}")
    return _sum_sequence(head_sum, tail_policy, spec, len(atoms))


def _sum_sequence(head_sum: float, seq: AnalyticSequence, spec: EntropySpec, n_head: int) -> EntropyReport:
    terms: list[float] = []
    ns: list[int] = []
    partial = head_sum
    for n, level in seq.iterate():
        t = 0.0
        for p, d in level:
            v = phi_value(spec, d)
            if math.isinf(v) and v > 0 and p > 0:
                return EntropyReport(math.inf, True, 0.0, exact=True, terms_used=n_head + len(terms))
            t += p * v
        terms.append(t)
        ns.append(n)
        partial += t
        if partial > seq.cap:
            return EntropyReport(math.inf, True, 0.0, exact=False, terms_used=n_head + len(terms))
        k = len(terms)
        if k >= seq.window and abs(t) < seq.increment_tol:
            recent = np.abs(terms[-seq.window :])
            if np.all(np.diff(recent) <= 0):
                ratio = recent[-1] / recent[-2] if recent[-2] > 0 else 0.0
                bound = abs(t) * ratio / (1.0 - ratio) if ratio < 1 else math.inf
                return EntropyReport(partial, math.isfinite(bound), float(bound), exact=False, terms_used=n_head + k)
        if k >= 64 and k % 16 == 0 and harmonic_divergence(ns, terms):
            return EntropyReport(math.inf, True, 0.0, exact=False, terms_used=n_head + k)
    return EntropyReport(partial, False, math.inf, exact=False, terms_used=n_head + len(terms))


def harmonic_divergence(ns: list[int], terms: list[float]) -> bool:
    half = len(terms) // 2
    nt = np.asarray(ns[half:], dtype=float) * np.asarray(terms[half:])
    return bool(np.all(nt > 0) and np.all(np.diff(nt) >= -1e-12 * np.abs(nt[1:])))
