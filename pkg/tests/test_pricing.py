import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog, minimize

from superrep import dyadic as D
from superrep import entropy as E
from superrep import pricing as P


def _primal_highs(h, c):
    """Oracle: the same LP solved by scipy's HiGHS."""
    N = h.N
    n = np.arange(1, N + 1, dtype=float)
    A = np.zeros((2 * N, N + 1))
    A[:N, 0] = A[N:, 0] = -1.0
    A[:N, 1:] = np.diag(-n)
    A[N:, 1:] = np.diag(n**2)
    b = np.concatenate([-h.v1, -h.v2])
    bounds = [(None, None)] + [(-c / k, c / k**2) for k in n]
    res = linprog(np.eye(N + 1)[0], A_ub=A, b_ub=b, bounds=bounds, method="highs")
    return res.fun


@pytest.mark.parametrize("N", [100, 1000, 10_000])
def test_primal_f(N):
    assert P.primal_price(D.claim_f(N), 10.0).price == pytest.approx(1 - 10 / N, abs=1e-9)


def test_primal_examples():
    assert P.primal_price(D.claim_kf(5.0, 1000), 10.0).price == pytest.approx(4.99, abs=1e-9)
    assert P.primal_price(D.claim_x1(100), 10.0).price == pytest.approx(99.9, abs=1e-9)
    assert P.primal_price(D.claim_f(1), 0.0).price == pytest.approx(1.0, abs=1e-12)


def test_primal_increases_to_one():
    prices = [P.primal_price(D.claim_f(N), 10.0).price for N in (20, 50, 200, 1000, 5000)]
    assert all(a < b < 1 for a, b in zip(prices, prices[1:]))


def test_witness_superreplicates():
    for h in (D.claim_f(60), D.claim_x1(30), D.claim_kf(3.0, 45)):
        r = P.primal_price(h, 7.0)
        assert r.witness.is_admissible()
        assert P.superreplication_residual(h, r) <= 1e-9 * max(1.0, abs(r.price))


def test_infinite_price_reported():
    r = P.primal_price(D.claim_x1(2000), 0.0, cap=1e3)
    assert math.isinf(r.price) and r.binding_n == 2000


@given(st.integers(1, 50), st.floats(0.0, 30.0), st.integers(0, 2**32 - 1))
def test_bisection_matches_lp(N, c, seed):
    rng = np.random.default_rng(seed)
    h = D.DyadicClaim(N, rng.normal(size=N) * 3, rng.normal(size=N) * 3)
    bis = P.primal_price(h, c).price
    assert abs(bis - P.primal_price_lp(h, c).price) <= 1e-7
    assert abs(bis - _primal_highs(h, c)) <= 1e-7


@given(st.integers(2, 60), st.floats(0.1, 20.0), st.floats(0.1, 5.0), st.integers(0, 2**32 - 1))
def test_monotone_in_c_and_N(N, c, dc, seed):
    rng = np.random.default_rng(seed)
    h = D.DyadicClaim(N, rng.normal(size=N), rng.normal(size=N))
    p = P.primal_price(h, c).price
    assert P.primal_price(h, c + dc).price <= p + 1e-9
    assert P.primal_price(h.truncate(N - 1), c).price <= p + 1e-9


def test_dual_m1_examples():
    for N in (1, 10, 500):
        r = P.dual_price_M1(D.claim_f(N))
        assert r.value == 0.0 and np.all(P.dual_ratios(D.claim_f(N)) == 0.0) and r.argmax_n == 1
        assert P.dual_price_M1(D.claim_x1(N)).value == 0.0
    r = P.dual_price_M1(D.claim_indicator(1, 1, 10))
    assert r.value == 0.5 and r.argmax_n == 1


def test_dual_m1_reported_measure_achieves_value():
    rng = np.random.default_rng(5)
    for _ in range(20):
        h = D.DyadicClaim(15, rng.normal(size=15), rng.normal(size=15))
        r = P.dual_price_M1(h)
        assert D.validate_measure(r.measure).valid
        assert D.expectation(r.measure, h) == pytest.approx(r.value, abs=1e-12)


def test_dual_m1_dominates_random_measures():
    # brute force over random valid measures never beats the vertex value
    rng = np.random.default_rng(6)
    h = D.claim_indicator(1, 1, 8)
    best = max(D.expectation(D.random_measure(8, rng, 0.5), h) for _ in range(2000))
    assert best <= 0.5 + 1e-12 and best > 0.4


def test_dual_mphi_uncapped_equals_m1():
    for h in (D.claim_f(30), D.claim_indicator(2, 2, 30), D.claim_x1(30)):
        assert P.dual_price_MPhi(h, E.power(2)).value == P.dual_price_M1(h).value


def test_dual_mphi_infinite_phi0_not_attained():
    r = P.dual_price_MPhi(D.claim_f(20), E.example21())
    assert r.value == 0.0 and not r.attained
    # strictly positive measures approach the vertex value
    path = P.perturbation_path(D.claim_indicator(1, 1, 20), [1e-1, 1e-2, 1e-4, 1e-6])
    assert all(a < b for a, b in zip(path, path[1:])) and path[-1] == pytest.approx(0.5, abs=1e-6)


def _capped_oracle(h, B):
    """Oracle: SLSQP in the scaled coordinates ``u = sqrt(a) t`` where the cap is a ball."""
    N = h.N
    n = np.arange(1, N + 1, dtype=float)
    r = P.dual_ratios(h)
    sa = np.sqrt(2.0 ** (n + 1) * (n**2 + 1) / (n + 1) ** 2)
    cons = [
        {"type": "eq", "fun": lambda u: (u / sa).sum() - 1.0, "jac": lambda u: 1.0 / sa},
        {"type": "ineq", "fun": lambda u: B - u @ u, "jac": lambda u: -2.0 * u},
    ]
    u0 = (1 / sa) / np.sum(1 / sa**2)
    res = minimize(lambda u: -(r / sa) @ u, u0, jac=lambda u: -r / sa, constraints=cons, bounds=[(0, None)] * N, method="SLSQP", options={"ftol": 1e-15, "maxiter": 1000})
    assert res.x @ res.x <= B * (1 + 1e-9)
    return -res.fun


@pytest.mark.parametrize("B", [1.2, 1.5, 1.9, 1.99])
def test_capped_power2_matches_oracle(B):
    h = D.claim_indicator(1, 1, 20)
    r = P.dual_price_MPhi(h, E.power(2), entropy_cap=B)
    assert r.value == pytest.approx(_capped_oracle(h, B), abs=1e-6)
    assert r.kkt_residual <= 1e-8
    assert r.entropy <= B * (1 + 1e-9)


def test_capped_values_increase_to_vertex():
    h = D.claim_indicator(1, 1, 20)
    e_min = P.min_power2_entropy(20)
    caps = [e_min * 1.0001, 1.2, 1.5, 1.9, 1.99, 2.0, 5.0]
    vals = [P.dual_price_MPhi(h, E.power(2), entropy_cap=B).value for B in caps]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(0.5, abs=1e-12)


def test_capped_errors():
    h = D.claim_f(10)
    with pytest.raises(P.InfeasibleCap):
        P.dual_price_MPhi(h, E.power(2), entropy_cap=0.5 * P.min_power2_entropy(10))
    with pytest.raises(P.UnsupportedEntropy):
        P.dual_price_MPhi(h, E.identity(), entropy_cap=3.0)


def test_gap_reports():
    g = P.gap_report(D.claim_f(1000), 10.0, spec=E.power(2))
    assert g.gap == pytest.approx(0.99, abs=1e-9)
    g = P.gap_report(D.claim_kf(20.0, 1000), 10.0)
    assert g.gap == pytest.approx(19.99, abs=1e-9)
    row = g.to_csv_row().strip().split(",")
    assert len(row) == len(P.GapReport.CSV_COLUMNS) and row[0] == "kf"


def test_bounded_claims_have_no_gap():
    rng = np.random.default_rng(8)
    for _ in range(50):
        N = int(rng.integers(1, 40))
        h = D.DyadicClaim(N, rng.uniform(0, 1, N), rng.uniform(0, 1, N))
        assert P.gap_report(h, 50.0).gap <= 1e-6


@given(st.integers(1, 80), st.floats(0.0, 40.0), st.floats(0.01, 50.0), st.integers(0, 2**32 - 1))
def test_weak_duality_and_homogeneity(N, c, k, seed):
    rng = np.random.default_rng(seed)
    h = D.DyadicClaim(N, rng.normal(size=N) * 4, rng.normal(size=N) * 4)
    p = P.primal_price(h, c).price
    d = P.dual_price_M1(h).value
    assert p >= d - 1e-9
    assert P.primal_price(h.scaled(k), k * c).price == pytest.approx(k * p, abs=1e-9 * max(1.0, k * abs(p)))
    assert P.dual_price_M1(h.scaled(k)).value == pytest.approx(k * d, abs=1e-12 * max(1.0, k * abs(d)))


def test_format_number_round_trips():
    for v in (0.1, 1 / 3, 1e-300, 12345.678901234567):
        assert float(P.format_number(v)) == v
