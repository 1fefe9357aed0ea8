"""Passage times of drifted Brownian motion and the stopped strict local martingale pair.

``T = inf{t : B_t + mu t = b}`` has a defective inverse Gaussian law: an
absolutely continuous part with density

    f(t) = |b| / sqrt(2 pi t^3) * exp(-(b - mu t)^2 / (2 t))

and an atom at infinity of mass ``1 - exp(mu b - |mu b|)``.

The pair: ``L = exp(B - t/2)`` stopped at ``tau`` (``L`` hits ``c1``) and
``N = exp(a W - a^2 t/2)`` stopped at ``sigma`` (``N`` hits ``c2``), both
frozen at ``tau ^ sigma``.  ``X = L`` stopped is a strict local martingale
under ``P``; under ``Q = Y_inf . P`` it is a uniformly integrable martingale,
and square integrable iff ``a^2 >= 8``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special, stats

QUAD_ABS_TOL = 1e-10
ENVELOPE_TOL = 1e-14
RESIDUAL_BUDGET = 1e-4
SIGMA_DROP = 1e-12
Z99 = float(stats.norm.ppf(0.995))


class DomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, msg, level=None):
        super().__init__(msg)
        self.level = level


class HorizonTooShortError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# law of a single passage time


@dataclass(frozen=True)
class PassageSpec:
    """Passage of ``B_t + mu t`` through level ``b``."""

    mu: float
    b: float

    def __post_init__(self):
        if self.b == 0 or not math.isfinite(self.b) or not math.isfinite(self.mu):
            raise DomainError("b must be finite and nonzero, mu finite")

    @property
    def _nu(self) -> float:
        # drift measured towards the barrier
        return self.mu * math.copysign(1.0, self.b)

    def tilted(self, lam: float) -> tuple["PassageSpec", float]:
        """``(spec', c)`` with ``exp(-lam t) f(t) = c f'(t)``; needs ``mu^2 + 2 lam >= 0``."""
        m2 = self.mu**2 + 2.0 * lam
        if m2 < 0:
            raise DomainError("exponential moment is infinite")
        mu2 = math.copysign(math.sqrt(m2), self.mu) if self.mu != 0 else math.sqrt(m2) * math.copysign(1.0, self.b)
        return PassageSpec(mu2, self.b), math.exp((self.mu - mu2) * self.b)


def log_passage_density(spec: PassageSpec, t: float) -> float:
    return math.log(abs(spec.b)) - 0.5 * math.log(2.0 * math.pi * t**3) - (spec.b - spec.mu * t) ** 2 / (2.0 * t)


def passage_density(spec: PassageSpec, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("density is defined for t > 0")
    b, mu = spec.b, spec.mu
    out = abs(b) / np.sqrt(2.0 * np.pi * t_arr**3) * np.exp(-((b - mu * t_arr) ** 2) / (2.0 * t_arr))
    return float(out) if np.ndim(out) == 0 else out


def atom_mass(spec: PassageSpec) -> float:
    mb = spec.mu * spec.b
    return -math.expm1(mb - abs(mb))


def passage_cdf(spec: PassageSpec, t):
    """``P(T <= t)`` in closed form (reflection principle)."""
    t_arr = np.asarray(t, dtype=float)
    beta, nu = abs(spec.b), spec._nu
    with np.errstate(divide="ignore"):
        s = np.sqrt(t_arr)
        first = stats.norm.cdf((nu * t_arr - beta) / s)
        second = np.exp(2.0 * nu * beta + stats.norm.logcdf((-beta - nu * t_arr) / s))
    out = np.where(t_arr > 0, first + second, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def passage_survival(spec: PassageSpec, t):
    """``P(T > t)``, atom included."""
    return 1.0 - passage_cdf(spec, t)


def residual_mass(spec: PassageSpec, T: float) -> float:
    """``P(T_pass in (T, inf))``: crossing mass not yet seen by time ``T``."""
    return max(0.0, (1.0 - atom_mass(spec)) - passage_cdf(spec, T))


def envelope_bound(spec: PassageSpec, eps: float) -> float:
    """Upper bound on the density mass in ``[0, eps]``."""
    return math.exp(spec.mu * spec.b) * math.erfc(abs(spec.b) / math.sqrt(2.0 * eps))


def _small_time_cut(spec: PassageSpec) -> float:
    # erfc(x) < ENVELOPE_TOL * exp(-mu b) for x = |b| / sqrt(2 eps)
    target = ENVELOPE_TOL * min(1.0, math.exp(-spec.mu * spec.b))
    x = special.erfcinv(target) if target > 0 else 30.0
    return spec.b**2 / (2.0 * x * x)


def _quad(fn, lo, hi, abs_tol=QUAD_ABS_TOL, limit=200):
    val, err, info = integrate.quad(fn, lo, hi, epsabs=abs_tol, epsrel=1e-12, limit=limit, full_output=1)[:3]
    if err > 10 * max(abs_tol, 1e-12 * abs(val)):
        raise QuadratureError(f"quad error estimate {err:.3g} on [{lo}, {hi}]", level=info.get("last"))
    return val, err


def _scale_points(spec: PassageSpec):
    """Breakpoints around the bulk of the density and along its power tail.

    The ``t^{-3/2}`` tail lasts until ``mu^2 t / 2`` is large, so small drifts
    get one breakpoint per decade up to there (capped at ``1e30``).
    """
    beta = abs(spec.b)
    drift = abs(spec.mu)
    tail_end = min(1e30, 100.0 / drift**2) if drift > 1e-14 else 1e30
    mode_like = min(beta / drift, tail_end) if drift > 1e-14 else tail_end
    pts = {beta * beta / 6.0, beta * beta, mode_like, 4 * mode_like}
    if tail_end > beta * beta:
        pts.update(np.geomspace(beta * beta, tail_end, int(math.log10(tail_end / (beta * beta))) + 2).tolist())
    return sorted(p for p in pts if p > 0)


def integrate_weighted(spec: PassageSpec, weight, t0: float, t1: float, abs_tol=QUAD_ABS_TOL, log_weight=False):
    """``int_t0^t1 weight(t) f(t) dt`` with an envelope cut below ``eps``.

    Returns ``(value, error_bound)``; the ``[0, eps]`` piece is bounded, not
    integrated, and ``weight`` must be bounded by ``weight(eps)`` there.
    With ``log_weight`` the callable returns the log of the weight, which
    keeps growing weights such as ``e^t`` from overflowing.
    """
    eps = _small_time_cut(spec)
    err = 0.0
    if t0 < eps:
        w_eps = math.exp(weight(eps)) if log_weight else abs(weight(eps))
        err += envelope_bound(spec, eps) * w_eps
        t0 = eps
    if t1 <= t0:
        return 0.0, err
    if log_weight:
        fn = lambda s: math.exp(weight(s) + log_passage_density(spec, s))  # noqa: E731
    else:
        fn = lambda s: weight(s) * passage_density(spec, s)  # noqa: E731
    edges = [t0] + [p for p in _scale_points(spec) if t0 < p < t1] + [t1]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(fn, lo, hi, abs_tol / len(edges))
        total += v
        err += e
    return total, err


def density_integral(spec: PassageSpec, t0: float = 0.0, t1: float = math.inf):
    return integrate_weighted(spec, lambda s: 1.0, t0, t1)


# --------------------------------------------------------------------------
# square integrability criterion


@dataclass
class H2Report:
    a: float
    classification: str  # finite | divergent | marginal
    partial_integrals: list
    T_grid: list
    growth_rate: float
    power: float
    analytic_rate: float
    limit: float | None
    limit_closed_form: float | None
    criterion: bool  # a^2 >= 8

    def to_dict(self):
        return asdict(self)


def sigma_spec(a: float, c2: float = 2.0) -> PassageSpec:
    return PassageSpec(-a / 2.0, math.log(c2) / a)


def h2_criterion(a: float, T_grid=None, c2: float = 2.0, rate_tol: float = 0.05) -> H2Report:
    """Partial integrals ``I(T) = int_0^T e^t f_sigma(t) dt`` and their growth.

    The increments ``dI/dT`` are fitted as ``exp(c + r T) T^p``.  The integral
    is finite iff ``r < 0``, or ``r = 0`` with ``p < -1``.
    """
    if a <= 0:
        raise DomainError("a must be positive")
    spec = sigma_spec(a, c2)
    if T_grid is None:
        T_grid = list(np.linspace(4.0, 40.0, 19))
    T_grid = sorted(float(t) for t in T_grid)
    if len(T_grid) < 4:
        raise DomainError("need at least 4 grid points")
    weight = lambda t: t  # noqa: E731  (log of e^t)
    partial, acc, prev = [], 0.0, 0.0
    for T in T_grid:
        v, _ = integrate_weighted(spec, weight, prev, T, abs_tol=QUAD_ABS_TOL * max(1.0, acc), log_weight=True)
        acc += v
        partial.append(acc)
        prev = T
    inc = np.diff(partial) / np.diff(T_grid)
    mids = 0.5 * (np.asarray(T_grid[1:]) + np.asarray(T_grid[:-1]))
    keep = inc > 0
    A = np.column_stack([np.ones(keep.sum()), mids[keep], np.log(mids[keep])])
    coef, *_ = np.linalg.lstsq(A, np.log(inc[keep]), rcond=None)
    rate, power = float(coef[1]), float(coef[2])
    analytic = 1.0 - a * a / 8.0
    if abs(rate - analytic) > rate_tol:
        raise QuadratureError(f"fitted rate {rate:.4f} far from exponent {analytic:.4f}", level=len(T_grid))

    if abs(rate) <= rate_tol:
        finite = power < -1.0 + 0.25
        marginal = abs(power + 1.0) <= 0.25
        cls = "marginal" if marginal else ("finite" if finite else "divergent")
    else:
        cls = "finite" if rate < 0 else "divergent"

    limit = closed = None
    if cls == "finite":
        tail, _ = integrate_weighted(spec, weight, T_grid[-1], math.inf, abs_tol=QUAD_ABS_TOL, log_weight=True)
        limit = partial[-1] + tail
        if a * a >= 8:
            closed = math.exp(spec.mu * spec.b - abs(spec.b) * math.sqrt(spec.mu**2 - 2.0))
    return H2Report(a, cls, partial, T_grid, rate, power, analytic, limit, closed, a * a >= 8)


# --------------------------------------------------------------------------
# sandwich bound


TILTED_TAU = PassageSpec(1.5, -math.log(2.0))


@dataclass
class SandwichRow:
    t: float
    value: float
    lower: float
    upper: float
    ok: bool


def sandwich_value(t: float, spec: PassageSpec = TILTED_TAU) -> float:
    """``E[exp(tau ^ t)] = int_0^t e^s f(s) ds + e^t P(tau > t)``."""
    if t <= 0:
        return 1.0
    head, _ = integrate_weighted(spec, math.exp, 0.0, t)
    return head + math.exp(t) * passage_survival(spec, t)


def sandwich_check(t_values, tol: float = 1e-8, spec: PassageSpec = TILTED_TAU) -> list[SandwichRow]:
    """``(1 - p_cross) e^t <= E[exp(tau ^ t)] <= e^t`` at each t."""
    atom = atom_mass(spec)
    rows = []
    for t in t_values:
        v = sandwich_value(float(t), spec)
        lo, hi = atom * math.exp(t), math.exp(t)
        rows.append(SandwichRow(float(t), v, lo, hi, lo - tol * hi <= v <= hi * (1 + tol)))
    return rows


# --------------------------------------------------------------------------
# Monte Carlo for the stopped pair


@dataclass(frozen=True)
class StoppedPairSpec:
    a: float
    c1: float = 0.5
    c2: float = 2.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")
        if not 0 < self.c1 < 1 or not self.c2 > 1:
            raise DomainError("need 0 < c1 < 1 < c2")

    @property
    def tau_spec(self) -> PassageSpec:
        return PassageSpec(-0.5, math.log(self.c1))

    @property
    def sigma_spec(self) -> PassageSpec:
        return sigma_spec(self.a, self.c2)


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    paths: int = 100_000
    h: float = 0.01
    T: float = 64.0
    chunk_size: int = 16_384
    workers: int = 1

    def __post_init__(self):
        if self.paths <= 0 or self.chunk_size <= 0 or self.h <= 0 or self.T <= 0:
            raise DomainError("paths, chunk_size, h and T must be positive")
        if self.h > self.T / 1000.0:
            raise DomainError("step h must be at most T/1000")

    def chunks(self):
        n = -(-self.paths // self.chunk_size)
        return [(i, min(self.chunk_size, self.paths - i * self.chunk_size)) for i in range(n)]


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(chunk)]))


def check_horizon(spec: StoppedPairSpec, T: float, budget: float = RESIDUAL_BUDGET) -> float:
    res = residual_mass(spec.tau_spec, T) + residual_mass(spec.sigma_spec, T)
    if res >= budget:
        raise HorizonTooShortError(f"residual passage mass {res:.3g} at T={T} exceeds {budget}")
    return res


def _cross_prob(d0, d1, var):
    # bridge crossing probability for a barrier at distances d0, d1 > 0
    return np.exp(-2.0 * d0 * d1 / var)


def _simulate_chunk(spec: StoppedPairSpec, mc: McConfig, chunk: int, n: int) -> dict:
    rng = chunk_rng(mc.seed, chunk)
    h, a = mc.h, spec.a
    sh = math.sqrt(h)
    lb1, lb2 = math.log(spec.c1), math.log(spec.c2)
    drop = lb2 + math.log(SIGMA_DROP)

    X = np.zeros(n)
    Y = np.zeros(n)
    logmax = np.zeros(n)
    outcome = np.zeros(n, dtype=np.int8)  # 1 tau first, 2 sigma first, 3 alive at T
    sigma_hit = np.zeros(n, dtype=bool)

    idx = np.arange(n)
    logL = np.zeros(n)
    logN = np.zeros(n)
    pair_on = np.ones(n, dtype=bool)
    sig_on = np.ones(n, dtype=bool)
    steps = int(round(mc.T / h))
    for _ in range(steps):
        m = idx.size
        if m == 0:
            break
        z = rng.standard_normal((2, m))
        u = rng.random((4, m))
        L1 = logL + sh * z[0] - 0.5 * h
        N1 = logN + a * sh * z[1] - 0.5 * a * a * h

        d0, d1 = lb2 - logN, lb2 - N1
        s_cross = (d1 <= 0) | (u[1] < _cross_prob(np.maximum(d0, 0), np.maximum(d1, 0), a * a * h))
        s_new = sig_on & s_cross
        sigma_hit[idx[s_new]] = True

        p = pair_on
        e0, e1 = logL - lb1, L1 - lb1
        t_cross = p & ((e1 <= 0) | (u[0] < _cross_prob(np.maximum(e0, 0), np.maximum(e1, 0), h)))
        s_pair = p & s_cross
        both = t_cross & s_pair
        tau_first = t_cross & ~(both & (u[3] < 0.5))
        sig_first = s_pair & ~tau_first

        # running maximum of log L over the step (bridge maximum)
        span = L1 - logL
        bmax = 0.5 * (logL + L1 + np.sqrt(span * span - 2.0 * h * np.log(u[2])))
        gi = idx[p]
        logmax[gi] = np.maximum(logmax[gi], bmax[p])

        ti, si = idx[tau_first], idx[sig_first]
        X[ti], Y[ti], outcome[ti] = spec.c1, np.exp(N1[tau_first]), 1
        X[si], Y[si], outcome[si] = np.exp(L1[sig_first]), spec.c2, 2

        pair_on = p & ~tau_first & ~sig_first
        sig_on = sig_on & ~s_cross & (N1 > drop)
        logL, logN = L1, N1
        live = pair_on | sig_on
        if not live.all():
            idx, logL, logN = idx[live], logL[live], logN[live]
            pair_on, sig_on = pair_on[live], sig_on[live]
    # alive at the horizon
    gi = idx[pair_on]
    X[gi], Y[gi], outcome[gi] = np.exp(logL[pair_on]), np.exp(logN[pair_on]), 3
    return {"X": X, "Y": Y, "w2": np.exp(2.0 * logmax), "outcome": outcome, "sigma_hit": sigma_hit}


def simulate_paths(spec: StoppedPairSpec, mc: McConfig) -> dict:
    """Per-path arrays concatenated in chunk order (independent of worker count)."""
    check_horizon(spec, mc.T)
    chunks = mc.chunks()
    run = lambda c: _simulate_chunk(spec, mc, *c)  # noqa: E731
    if mc.workers > 1:
        with ThreadPoolExecutor(mc.workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


@dataclass
class Estimate:
    mean: float
    se: float

    @property
    def ci99(self) -> tuple[float, float]:
        return (self.mean - Z99 * self.se, self.mean + Z99 * self.se)

    def contains(self, v: float, k: float = Z99) -> bool:
        return abs(self.mean - v) <= k * self.se

    def to_dict(self):
        return {"mean": self.mean, "se": self.se, "ci99": list(self.ci99)}


def _est(v) -> Estimate:
    v = np.asarray(v, dtype=float)
    return Estimate(float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)))


def weighted_hill(x, w, frac: float = 0.002) -> dict:
    """Hill tail index of ``x`` under weights ``w`` using the top ``frac`` of weighted mass."""
    x, w = np.asarray(x, dtype=float), np.asarray(w, dtype=float)
    order = np.argsort(x)[::-1]
    xs, ws = x[order], w[order]
    cw = np.cumsum(ws) / ws.sum()
    k = int(np.searchsorted(cw, frac)) + 1
    if k < 10 or k >= xs.size:
        return {"index": float("nan"), "threshold": float("nan"), "n_tail": k}
    u = xs[k]
    hill = float(np.sum(ws[:k] * np.log(xs[:k] / u)) / ws[:k].sum())
    return {"index": 1.0 / hill if hill > 0 else float("inf"), "threshold": float(u), "n_tail": k}


def w2_tail_index(a: float) -> float:
    """Large-deviation tail index of ``(sup X)^2`` under ``Q``: ``(1 + sqrt(1 + a^2)) / 4``.

    Reaching level ``x`` by time ``t`` costs ``(ln x + t/2)^2 / 2t`` for ``L``
    plus ``a^2 t / 8`` for the weight to survive; optimizing over ``t`` gives
    ``Q(sup X > x) ~ x^{-(1 + sqrt(1 + a^2))/2}``.
    """
    return (1.0 + math.sqrt(1.0 + a * a)) / 4.0


@dataclass
class PairEstimates:
    a: float
    paths: int
    E_P_Xinf: Estimate
    E_Q_Xinf: Estimate
    E_P_Yinf: Estimate
    E_P_f: Estimate
    E_Q_Sinf: Estimate
    E_Q_w2: Estimate
    sigma_hit: Estimate
    tau_first_fraction: float
    alive_fraction: float
    tail_diag_w2: dict = field(default_factory=dict)

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.to_dict() if isinstance(v, Estimate) else v
        return out

    @property
    def standard_errors(self) -> dict:
        return {k: v.se for k, v in self.__dict__.items() if isinstance(v, Estimate)}


def estimates_from_paths(spec: StoppedPairSpec, res: dict) -> PairEstimates:
    X, Y, w2 = res["X"], res["Y"], res["w2"]
    tail = weighted_hill(w2, Y)
    tail["analytic_index"] = w2_tail_index(spec.a)
    tail["integrable"] = bool(tail["index"] > 1.0)
    return PairEstimates(
        a=spec.a,
        paths=int(X.size),
        E_P_Xinf=_est(X),
        E_Q_Xinf=_est(Y * X),
        E_P_Yinf=_est(Y),
        E_P_f=_est(1.0 - X),
        E_Q_Sinf=_est(Y * (1.0 - X)),
        E_Q_w2=_est(Y * w2),
        sigma_hit=_est(res["sigma_hit"].astype(float)),
        tau_first_fraction=float(np.mean(res["outcome"] == 1)),
        alive_fraction=float(np.mean(res["outcome"] == 3)),
        tail_diag_w2=tail,
    )


def simulate_stopped_pair(spec: StoppedPairSpec, mc: McConfig) -> PairEstimates:
    return estimates_from_paths(spec, simulate_paths(spec, mc))


def expected_x_inf(spec: StoppedPairSpec) -> float:
    """``E_P[X_inf]`` by quadrature over the law of ``sigma``.

    ``E[L_s; tau > s]`` is the survival of ``tau`` under the measure with
    density ``L``, where ``B - t/2`` drifts up at rate ``1/2``.
    """
    tau, sig = spec.tau_spec, spec.sigma_spec
    tau_tilt = PassageSpec(0.5, tau.b)
    p_sigma_first, _ = integrate_weighted(sig, lambda s: passage_survival(tau, s), 0.0, math.inf)
    x_sigma_first, _ = integrate_weighted(sig, lambda s: passage_survival(tau_tilt, s), 0.0, math.inf)
    return spec.c1 * (1.0 - p_sigma_first) + x_sigma_first


def simulate_passage_cdf(spec: PassageSpec, mc: McConfig, t_values) -> list[dict]:
    """Empirical ``P(T <= t)`` from bridge-corrected paths against the closed form."""
    t_values = sorted(float(t) for t in t_values)
    steps = int(round(max(t_values) / mc.h))
    hits = []
    for chunk, n in mc.chunks():
        rng = chunk_rng(mc.seed, chunk)
        x = np.zeros(n)
        when = np.full(n, np.inf)
        on = np.ones(n, dtype=bool)
        sgn = math.copysign(1.0, spec.b)
        beta = abs(spec.b)
        for k in range(1, steps + 1):
            z = rng.standard_normal(n)
            u = rng.random(n)
            x1 = x + sgn * (spec.mu * mc.h + math.sqrt(mc.h) * z)  # distance-oriented coordinate
            d0, d1 = beta - x, beta - x1
            cross = on & ((d1 <= 0) | (u < _cross_prob(np.maximum(d0, 0), np.maximum(d1, 0), mc.h)))
            when[cross] = k * mc.h
            on &= ~cross
            x = x1
        hits.append(when)
    when = np.concatenate(hits)
    rows = []
    for t in t_values:
        e = _est(when <= t + 1e-9 * mc.h)
        rows.append({"t": t, "empirical": e.mean, "se": e.se, "exact": passage_cdf(spec, t)})
    return rows


@dataclass
class Example29Report:
    a: float
    E_P_f_positive: bool | None
    fhat_w2_zero_consistent: bool | None
    w1_admissibility_violation: bool | None
    sigma_atom_consistent: bool
    w2_branch_reason: str
    estimates: PairEstimates
    verdict: str

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "estimates"}
        d["estimates"] = self.estimates.to_dict()
        return d


def _sign_verdict(e: Estimate) -> bool | None:
    lo, hi = e.ci99
    if lo > 0:
        return True
    if hi < 0:
        return False
    return None


def example29_report(a: float, mc: McConfig, c1: float = 0.5, c2: float = 2.0) -> Example29Report:
    """Sign and finiteness checks on ``f = S_inf = 1 - X_inf``.

    ``None`` flags mean the 99% interval was inconclusive at this path count.
    """
    spec = StoppedPairSpec(a, c1, c2)
    est = simulate_stopped_pair(spec, mc)
    positive = _sign_verdict(est.E_P_f)
    # E_P[S_inf] > 0 rules out S being a supermartingale under every separating measure
    violation = positive
    if a * a >= 8:
        zero = est.E_Q_Sinf.contains(0.0)
        reason = "a^2 >= 8: w2 integrable under Q"
    else:
        zero = None
        reason = "skipped: a^2 < 8, w2 not integrable under Q"
    atom_ok = est.sigma_hit.contains(1.0 - atom_mass(spec.sigma_spec), 3.0)
    flags = [positive, violation] + ([zero] if a * a >= 8 else [])
    verdict = "inconclusive" if any(f is None for f in flags) else ("pass" if all(flags) else "fail")
    return Example29Report(a, positive, zero, violation, atom_ok, reason, est, verdict)
