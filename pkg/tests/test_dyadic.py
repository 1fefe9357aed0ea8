import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superrep import dyadic as D


def test_atom_weight_examples():
    assert D.atom_weight(1) == 0.25
    assert D.atom_weight(2) == 0.125
    assert D.atom_weight(10) == 2.0**-11
    # closed form, never accumulated: exact even deep in the hierarchy
    assert D.atom_weights(10_000)[-1] == math.ldexp(1.0, -10_001)


def test_claim_definitions():
    N = 6
    n = np.arange(1, N + 1)
    f, kf, x1 = D.claim_f(N), D.claim_kf(3.0, N), D.claim_x1(N)
    assert np.array_equal(f.v1, np.ones(N)) and np.array_equal(f.v2, -n)
    assert np.array_equal(kf.v1, np.full(N, 3.0)) and np.array_equal(kf.v2, -3.0 * n)
    assert np.array_equal(x1.v1, n) and np.array_equal(x1.v2, -(n**2))


def test_custom_claim_requires_both_halves():
    with pytest.raises(ValueError):
        D.DyadicClaim(3, [1, 2, 3], [1, 2])


def test_expectation_examples():
    Q = D.unit_atom_measure(5, 1)
    assert D.expectation(Q, D.claim_indicator(1, 1, 5)) == 0.5
    rng = np.random.default_rng(0)
    for _ in range(20):
        Q = D.random_measure(12, rng)
        assert D.expectation(Q, D.claim_f(12)) == pytest.approx(0.0, abs=1e-14)
        assert D.expectation(Q, D.claim_x1(12)) == pytest.approx(0.0, abs=1e-12)


def test_expectation_truncation_mismatch():
    with pytest.raises(D.TruncationMismatch):
        D.expectation(D.unit_atom_measure(3), D.claim_f(4))


def test_validate_measure():
    assert D.validate_measure(D.unit_atom_measure(4)).valid
    assert not D.validate_measure(D.DyadicMeasure(3, np.zeros(3))).valid
    bad = D.unit_atom_measure(3).q2.copy()
    bad[0] = -1.0
    rep = D.validate_measure(D.DyadicMeasure(3, bad))
    assert not rep.valid and any("negative" in s for s in rep.issues)


def test_strategy_payoff_examples():
    N = 8
    n = np.arange(1, N + 1)
    long = D.strategy_payoff(D.Strategy(N, 1.0, 1.0 / n**2))
    assert np.allclose(long.v2, -1.0)
    assert not np.any(D.strategy_payoff(D.Strategy(N, 1.0, np.zeros(N))).v1)
    short = D.strategy_payoff(D.Strategy(N, 1.0, -1.0 / n))
    assert np.allclose(short.v1, -1.0)
    with pytest.raises(D.InadmissibleStrategy):
        D.strategy_payoff(D.Strategy(N, 1.0, 2.0 / n**2))


@given(st.integers(1, 40), st.floats(0.0, 50.0), st.integers(0, 2**32 - 1))
def test_measure_free_pricing(N, c, seed):
    rng = np.random.default_rng(seed)
    n = np.arange(1, N + 1)
    s = D.Strategy(N, c, rng.uniform(-c / n, c / n**2))
    Q = D.random_measure(N, rng, 0.5)
    scale = max(1.0, float(np.max(np.abs(Q.q2 * n**2 * s.alpha))))
    assert abs(D.expectation(Q, D.strategy_payoff(s))) <= 1e-12 * scale


def test_harmonic_strategy_approximates_f():
    N = 40
    rng = np.random.default_rng(1)
    Q = D.random_measure(N, rng)
    f = D.claim_f(N)
    dists = []
    for m in (5, 10, 20, 40):
        alpha = D.harmonic_strategy(N, m)
        assert D.credit_requirement(alpha) == pytest.approx(m)
        dists.append(D.l1_distance(Q, f, D.strategy_payoff(D.Strategy(N, m, alpha))))
    assert all(a >= b for a, b in zip(dists, dists[1:]))
    assert dists[-1] == pytest.approx(0.0, abs=1e-12)


def test_json_round_trip():
    Q = D.random_measure(7, np.random.default_rng(2))
    Q2 = D.loads(D.dumps(Q))
    assert np.array_equal(Q.q2, Q2.q2)
    h = D.claim_kf(2.5, 9)
    h2 = D.loads(D.dumps(h))
    assert h2.kind == "kf" and np.array_equal(h.v2, h2.v2)


def test_x1_integrability_diagnostic():
    assert D.x1_integrability(lambda n: math.exp(-n))["converged"]
    # q2 = 2^(n/2)/n makes n^2 q2 / 2^(n+1) summable, q2 = 2^n / n^3 does not
    heavy = D.x1_integrability(lambda n: 2.0**n / n**3, max_terms=400)
    assert heavy["divergent"]


def test_mixture_of_measures_is_valid():
    rng = np.random.default_rng(4)
    A, B = D.random_measure(9, rng), D.random_measure(9, rng)
    assert D.validate_measure(A.mixture(B, 0.3)).valid


def test_heavy_tail_measure_normalized():
    Q = D.heavy_tail_measure(6, np.random.default_rng(0), tail_share=0.25)
    assert Q.total_mass() == pytest.approx(1.0, abs=1e-12)
    assert Q.tail_mass() == pytest.approx(0.25, abs=1e-12)
