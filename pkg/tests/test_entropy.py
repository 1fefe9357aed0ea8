import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superrep import dyadic
from superrep import entropy as E

# Q0 of the log/quadratic example, summed independently with mpmath.nsum at 40 digits
Q0_ENTROPY_ORACLE = 0.43050018735241742


@pytest.mark.parametrize(
    "spec,y,expected",
    [(E.identity(), 2.0, 2.0), (E.example21(), 1.0, 0.0), (E.example21(), 2.0, 0.0), (E.power(2), 3.0, 9.0)],
)
def test_eval_phi_examples(spec, y, expected):
    assert E.eval_phi(spec, y) == pytest.approx(expected, abs=1e-15)


def test_eval_phi_rejects_nonpositive():
    with pytest.raises(E.DomainError):
        E.eval_phi(E.power(2), 0.0)


def test_phi_at_zero():
    assert E.power(2).phi_at_zero == 0.0
    assert E.identity().phi_at_zero == 0.0
    assert math.isinf(E.example21().phi_at_zero)
    # extrapolated for conjugates: exp utility gives y ln y - y -> 0
    assert E.conjugate(E.exponential_utility()).phi_at_zero == pytest.approx(0.0, abs=1e-6)


def test_boundary_entropy_continuous_at_one():
    s = E.example21()
    assert E.eval_phi(s, 1 - 1e-9) == pytest.approx(0.0, abs=1e-8)
    assert E.eval_phi(s, 1 + 1e-9) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("spec", [E.identity(), E.power(2), E.power(3.5), E.example21(), E.conjugate(E.exponential_utility())])
def test_convexity(spec):
    assert E.check_convexity(spec)


def test_conjugate_examples():
    u = E.exponential_utility(1.0)
    assert E.conjugate_of_utility(u, 1.0) == pytest.approx(-1.0, abs=1e-9)
    assert E.conjugate_of_utility(u, math.e) == pytest.approx(0.0, abs=1e-9)
    assert E.conjugate_of_utility(E.point_utility(), 2.0) == 2.0


def test_conjugate_matches_closed_form():
    u = E.exponential_utility(1.0)
    for y in np.geomspace(1e-3, 1e3, 41):
        assert abs(E.conjugate_of_utility(u, y) - (y * math.log(y) - y)) <= 1e-8


@given(st.floats(0.1, 5.0), st.floats(1e-2, 1e2))
def test_conjugate_closed_form_any_rate(rate, y):
    u = E.exponential_utility(rate)
    assert E.conjugate_of_utility(u, y) == pytest.approx((y * math.log(y) - y) / rate, abs=1e-8 * max(1, abs(y)))


def test_unbounded_conjugate():
    u = E.UtilitySpec("custom", evaluator=lambda x: 2.0 * x, known_concave=True)
    with pytest.raises(E.UnboundedConjugateError):
        E.conjugate_of_utility(u, 1.0)


def test_point_utility_conjugate_is_identity():
    spec = E.conjugate(E.point_utility())
    for y in (0.5, 1.0, 7.0):
        assert E.eval_phi(spec, y) == y


def test_validate_utility():
    assert E.validate_utility(E.exponential_utility()) == []
    bad = E.UtilitySpec("custom", evaluator=lambda x: x**3)
    assert E.validate_utility(bad)


def test_growth_power2():
    g = E.check_growth_condition(E.power(2), 0.5, 2.0, np.geomspace(1e-3, 1e3, 61))
    assert g.holds and g.alpha == pytest.approx(4.0, rel=2e-3) and g.beta == 0.0


def test_growth_identity():
    g = E.check_growth_condition(E.identity(), 0.5, 3.0, np.geomspace(1e-3, 1e3, 61))
    assert g.holds and g.alpha == pytest.approx(3.0, rel=2e-3) and g.beta == 0.0


def test_growth_counterexample():
    spec = E.custom(lambda y: math.exp(y * y), "exp_sq", 1.0)
    g = E.check_growth_condition(spec, 1.0, 2.0, np.linspace(0.5, 20, 60))
    assert not g.holds
    assert g.violation[0] > 5 and g.deficit > 0


@given(st.floats(0.2, 1.0), st.floats(1.0, 4.0), st.sampled_from(["identity", "power2", "example21", "exp"]))
def test_growth_witness_survives_finer_grid(l0, l1, name):
    spec = E.entropy_from_name(name)
    g = E.check_growth_condition(spec, l0, l1, np.geomspace(1e-2, 1e2, 41))
    if g.holds:
        fine_y = np.geomspace(1e-2, 1e2, 401)
        fine_l = np.linspace(l0, l1, 37)
        assert E.growth_inequality_holds(spec, g.alpha, g.beta, fine_y, fine_l, rtol=1e-6)


def test_entropy_unit_atom_power2():
    r = dyadic.unit_atom_measure(1, 1).entropy(E.power(2))
    assert r.value == pytest.approx(2.0, abs=1e-15) and r.exact


def test_boundary_entropy_unit_atom_infinite_exact():
    r = dyadic.unit_atom_measure(1, 1).entropy(E.example21())
    assert math.isinf(r.value) and r.exact and r.converged


def test_boundary_entropy_exponential_tail_matches_oracle():
    r = dyadic.example21_q0().entropy(E.example21())
    assert r.finite and r.converged
    assert r.value == pytest.approx(Q0_ENTROPY_ORACLE, abs=max(r.tail_bound, 1e-11))


def test_heavy_tail_divergence_certified():
    Q = dyadic.heavy_tail_measure(5, np.random.default_rng(0))
    assert Q.total_mass() == pytest.approx(1.0, abs=1e-12)
    r = Q.entropy(E.power(2))
    assert math.isinf(r.value) and r.converged and not r.exact


def test_normalization_error():
    with pytest.raises(E.InvalidMeasureError):
        E.entropy_of([(0.5, 1.0)], 0.0, E.ZeroDensity(), E.power(2))


def test_zero_density_tail_finite_phi0():
    r = E.entropy_of([(0.5, 2.0)], 0.5, E.ZeroDensity(), E.power(2))
    assert r.value == pytest.approx(2.0)


def _random_end(rng):
    N = int(rng.integers(2, 25))
    return N, rng


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99), st.booleans(), st.booleans())
def test_mixture_finiteness_iff(seed, x, heavy0, heavy1):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 25))
    Q0 = dyadic.heavy_tail_measure(N, rng) if heavy0 else dyadic.random_measure(N, rng, 0.3)
    Q1 = dyadic.heavy_tail_measure(N, rng) if heavy1 else dyadic.random_measure(N, rng, 0.3)
    chk = dyadic.mixture_entropy_check(Q0, Q1, x, E.power(2))
    assert chk.finite0 == (not heavy0) and chk.finite1 == (not heavy1)
    assert chk.iff_holds
    assert chk.convex_ok
