"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one ``PASS``/``FAIL`` line (visible even without ``-s``).
"""

import math
import time

import numpy as np
import pytest

from superrep import dyadic as D
from superrep import entropy as E
from superrep import finite_market as F
from superrep import passage as M
from superrep import pricing as P


@pytest.fixture
def report(capsys):
    def emit(criterion, failures, elapsed, budget=None):
        over = budget is not None and elapsed >= budget
        if over:
            failures = failures + [f"runtime {elapsed:.2f}s >= {budget}s"]
        status = "FAIL" if failures else "PASS"
        with capsys.disabled():
            print(f"\n{status} criterion {criterion} ({elapsed:.2f}s)" + ("".join(f"\n    {f}" for f in failures)))
        assert not failures, failures

    return emit


def _check(failures, ok, msg):
    if not ok:
        failures.append(msg)


def test_criterion_1_bounded_claim_gap(report):
    t0 = time.perf_counter()
    fails = []
    prices = []
    for N in (100, 1000, 10_000):
        h = D.claim_f(N)
        p = P.primal_price(h, 10.0, N).price
        prices.append(p)
        _check(fails, abs(p - (1 - 10 / N)) <= 1e-9, f"primal N={N}: {p}")
        d = P.dual_price_M1(h, N).value
        _check(fails, d == 0.0, f"dual N={N}: {d}")
    for N in (20, 50):
        lp = P.primal_price_lp(D.claim_f(N), 10.0).price
        _check(fails, abs(lp - (1 - 10 / N)) <= 1e-7, f"lp oracle N={N}: {lp}")
    _check(fails, prices[0] < prices[1] < prices[2] < 1.0, f"trend {prices}")
    report(1, fails, time.perf_counter() - t0, 1.0)


def test_criterion_2_scaled_claim(report):
    t0 = time.perf_counter()
    fails = []
    N = 1000
    for k in (0.5, 1.0, 2.0, 5.0, 20.0):
        h = D.claim_kf(k, N)
        p = P.primal_price(h, 10.0, N).price
        _check(fails, abs(p - (k - 10 / N)) <= 1e-9, f"primal k={k}: {p}")
        _check(fails, P.dual_price_M1(h, N).value == 0.0, f"dual k={k}")
    _check(fails, abs(P.primal_price(D.claim_kf(5.0, N), 10.0, N).price - 4.99) <= 1e-9, "k=5 value")
    report(2, fails, time.perf_counter() - t0, 1.0)


def test_criterion_3_unbounded_claim_gap(report):
    t0 = time.perf_counter()
    fails = []
    power2 = E.power(2)
    prices = []
    for N in (10, 100, 1000, 10_000):
        h = D.claim_x1(N)
        p = P.primal_price(h, 10.0, N).price
        prices.append(p)
        _check(fails, abs(p - (N - 10 / N)) <= 1e-9, f"primal N={N}: {p}")
        _check(fails, P.dual_price_M1(h, N).value == 0.0, f"dual M1 N={N}")
        _check(fails, P.dual_price_MPhi(h, power2, N).value == 0.0, f"dual MPhi N={N}")
    _check(fails, all(np.diff(prices) > 0), f"divergence trend {prices}")
    report(3, fails, time.perf_counter() - t0, 1.0)


def test_criterion_4_finite_market_duality(report):
    t0 = time.perf_counter()
    fails = []
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(500):
        mk = F.random_market(rng, int(rng.integers(1, 9)), int(rng.integers(0, 5)))
        f = rng.normal(size=mk.m) * rng.exponential(3.0)
        r = F.abstract_price(mk, f)
        worst = max(worst, abs(r.primal - r.dual))
        _check(fails, r.is_minimum, f"instance {i}: minimum not attained")
        _check(fails, F.market_cone(mk).contains(f - r.price), f"instance {i}: f - price not in G")
    _check(fails, worst <= 1e-7, f"worst gap {worst}")
    report(4, fails, time.perf_counter() - t0, 30.0)


def test_criterion_5_entropy_suite(report):
    t0 = time.perf_counter()
    fails = []
    boundary = E.example21()
    q1 = D.unit_atom_measure(1, 1).entropy(boundary)
    _check(fails, math.isinf(q1.value) and q1.exact, f"Q1 entropy {q1}")
    q0 = D.example21_q0().entropy(boundary)
    _check(fails, q0.finite and q0.converged, f"Q0 entropy {q0}")
    _check(fails, abs(q0.value - 0.43050018735241742) <= max(q0.tail_bound, 1e-11), f"Q0 value {q0.value}")

    rng = np.random.default_rng(0)
    power2 = E.power(2)
    n_inf = 0
    for i in range(200):
        N = int(rng.integers(2, 30))
        # force at least one infinite-entropy end every third triple
        heavy = [i % 3 == 0, rng.random() < 0.2]
        ends = [D.heavy_tail_measure(N, rng) if hv else D.random_measure(N, rng, 0.3) for hv in heavy]
        chk = D.mixture_entropy_check(ends[0], ends[1], float(rng.uniform(0.01, 0.99)), power2)
        n_inf += not (chk.finite0 and chk.finite1)
        _check(fails, chk.iff_holds and chk.convex_ok, f"triple {i}: {chk}")
    _check(fails, n_inf >= 60, f"only {n_inf} infinite-entropy instances")
    report(5, fails, time.perf_counter() - t0, 10.0)


def test_criterion_6_passage_law(report):
    t0 = time.perf_counter()
    fails = []
    tau = M.PassageSpec(1.5, -math.log(2.0))
    _check(fails, abs(M.atom_mass(tau) - 0.875) <= 1e-12, "atom mass")
    rng = np.random.default_rng(6)
    for _ in range(20):
        spec = M.PassageSpec(float(rng.uniform(-3, 3)), float(rng.choice([-1, 1]) * rng.uniform(0.05, 3)))
        v, _ = M.density_integral(spec)
        _check(fails, abs(v + M.atom_mass(spec) - 1) <= 1e-8, f"{spec}: {v}")
    for row in M.sandwich_check([0.25, 1.0, 2.0, 5.0]):
        _check(fails, row.ok, f"sandwich {row}")
    report(6, fails, time.perf_counter() - t0, 10.0)


def test_criterion_7_h2_criterion(report):
    t0 = time.perf_counter()
    fails = []
    for a in (1.0, 2.0, 2.5, 2 * math.sqrt(2), 3.0, 4.0):
        rep = M.h2_criterion(a)
        _check(fails, (rep.classification == "finite") == (a * a >= 8), f"a={a}: {rep.classification}")
        if a == 2.0:
            _check(fails, abs(rep.growth_rate - 0.5) <= 0.05, f"rate a=2: {rep.growth_rate}")
    report(7, fails, time.perf_counter() - t0, 30.0)


def test_criterion_8_monte_carlo(report):
    t0 = time.perf_counter()
    fails = []
    spec = M.StoppedPairSpec(3.0)
    mc = M.McConfig(seed=0, paths=100_000)
    paths = M.simulate_paths(spec, mc)
    est = M.estimates_from_paths(spec, paths)
    _check(fails, est.E_P_Xinf.ci99[1] < 1.0, f"E_P[X] {est.E_P_Xinf.ci99}")
    _check(fails, est.E_Q_Xinf.contains(1.0), f"E_Q[X] {est.E_Q_Xinf.ci99}")
    _check(fails, est.E_P_Yinf.contains(1.0), f"E_P[Y] {est.E_P_Yinf.ci99}")
    _check(fails, est.E_Q_Sinf.contains(0.0), f"E_Q[S] {est.E_Q_Sinf.ci99}")
    _check(fails, est.sigma_hit.contains(0.5), f"sigma hit {est.sigma_hit.ci99}")
    for workers in (1, 2, 3):
        again = M.simulate_paths(spec, M.McConfig(seed=0, paths=100_000, workers=workers))
        _check(fails, all(np.array_equal(paths[k], again[k]) for k in paths), f"rerun with {workers} workers differs")
    report(8, fails, time.perf_counter() - t0, 180.0)


def test_criterion_9_weak_duality_and_homogeneity(report):
    t0 = time.perf_counter()
    fails = []
    rng = np.random.default_rng(9)
    for i in range(1000):
        N = int(rng.integers(1, 80))
        h = D.DyadicClaim(N, rng.normal(size=N) * rng.exponential(4), rng.normal(size=N) * rng.exponential(4))
        c = float(rng.uniform(0, 40))
        k = float(rng.exponential(5.0)) + 1e-3
        p, d = P.primal_price(h, c).price, P.dual_price_M1(h).value
        _check(fails, p >= d - 1e-9, f"claim {i}: primal {p} < dual {d}")
        pk, dk = P.primal_price(h.scaled(k), k * c).price, P.dual_price_M1(h.scaled(k)).value
        _check(fails, abs(pk - k * p) <= 1e-9, f"claim {i}: primal homogeneity {pk} vs {k * p}")
        _check(fails, abs(dk - k * d) <= 1e-9, f"claim {i}: dual homogeneity {dk} vs {k * d}")
    report(9, fails[:10], time.perf_counter() - t0)
