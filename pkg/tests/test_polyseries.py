import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadgap.polyseries import (GapSeries, GapTerm, Polynomial, SeriesDomainError, ZonalPolynomial,
                               cauchy_coefficient_bound, cauchy_constant, check_hadamard,
                               eval_series, eval_zonal, lacunary_family, membership_profile,
                               patched_coefficient_constant, sup_norm, weighted_grid_sup,
                               zonal_sum_bound)
from hadgap.sphere import maximal_separated_set, random_sphere
from hadgap.weights import NormalWeight

E1 = np.array([[1, 0]], dtype=complex)
E2 = np.array([[0, 1]], dtype=complex)


def bers():
    return NormalWeight.power(0.5, 0.4, 0.6, 0.7)


def direct_zonal_sum(n, x, terms=400):
    with mpmath.workdps(40):
        s = mpmath.fsum((m + 2) ** (2 * n - 2) * mpmath.exp(-m * m * x / 2) for m in range(1, terms))
        return float(1 + s)


def test_eval_examples():
    assert math.isclose(eval_zonal(ZonalPolynomial(3, E1), [0.5, 0.5]).real, 0.125)
    P = ZonalPolynomial(2, np.vstack([E1, E2]))
    assert math.isclose(eval_zonal(P, [0.7, 0]).real, 0.49)
    assert eval_zonal(P, [0, 0]) == 0
    assert eval_zonal(ZonalPolynomial(0, np.vstack([E1, E2])), [0.1, 0.2]) == 2


def test_eval_outside_ball():
    with pytest.raises(SeriesDomainError):
        eval_zonal(ZonalPolynomial(1, E1), [1.0, 0.5])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_homogeneity(seed, k):
    rng = np.random.default_rng(seed)
    P = ZonalPolynomial(k, random_sphere(rng, 4, 3), rng.normal(size=4) + 1j * rng.normal(size=4))
    z = random_sphere(rng, 1, 3)[0] * rng.uniform(0, 1)
    lam = complex(*rng.normal(size=2))
    lam = lam / abs(lam) * rng.uniform(0, 1)
    assert abs(P(lam * z) - lam**k * P(z)) <= 1e-12 * max(1.0, abs(P(z)))


def test_sup_single_center():
    zeta = random_sphere(np.random.default_rng(4), 1, 3)
    val, arg = sup_norm(ZonalPolynomial(5, zeta), 200, 20)
    assert math.isclose(val, 1.0, abs_tol=1e-12)
    assert abs(abs(np.vdot(zeta[0], arg)) - 1) < 1e-9


def test_sup_two_powers():
    # max over t in [0,1] of t^2 + (1-t)^2 with |z1|^2 = t: dense-scan oracle
    t = np.linspace(0, 1, 10001)
    oracle = float((t**2 + (1 - t) ** 2).max())
    val, _ = sup_norm(ZonalPolynomial(4, np.vstack([E1, E2])), 500, 30)
    assert math.isclose(val, oracle, abs_tol=1e-9)


def test_sup_monomial():
    val, arg = sup_norm(Polynomial({(1, 1): 1}, 2), 500, 50)
    assert math.isclose(val, 0.5, abs_tol=1e-9)
    assert np.allclose(np.abs(arg), 1 / math.sqrt(2), atol=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_sup_lower_bound_below_coefficients(seed, k):
    rng = np.random.default_rng(seed)
    P = ZonalPolynomial(k, random_sphere(rng, 5, 2), rng.normal(size=5) + 0j)
    val, arg = sup_norm(P, 200, 10, seed=seed)
    assert val <= P.coefficient_bound() + 1e-12
    # the value is attained at the returned point
    assert math.isclose(val, abs(P(arg)), rel_tol=1e-12)


@pytest.mark.parametrize("n,x", [(2, 1 / 0.09), (1, 2.0), (3, 0.5), (2, 30.0)])
def test_zonal_sum_bound_matches_direct_sum(n, x):
    got = zonal_sum_bound(n, math.sqrt(x), 1)
    ref = direct_zonal_sum(n, x)
    assert got >= ref * (1 - 1e-15)
    assert math.isclose(got, ref, rel_tol=1e-13)


def test_zonal_sum_bound_values():
    assert abs(zonal_sum_bound(2, 1 / 0.3, 1) - 1.0347933) < 1e-7
    assert abs(zonal_sum_bound(1, 1.0, 2) - 1.3863186) < 1e-7
    assert zonal_sum_bound(3, 100.0, 1) == 1.0


def test_separated_zonal_bounded_by_sum():
    A = 0.3
    g = maximal_separated_set(2, 0.25, 3, 3000)
    k = math.ceil(1 / (A * A * 0.25**2))
    P = ZonalPolynomial(k, g.points)
    pts = random_sphere(np.random.default_rng(9), 20000, 2)
    sampled = max(np.abs(P(pts)).max(), np.abs(P(g.points)).max())
    assert sampled <= zonal_sum_bound(2, 0.25, k)


def test_hadamard_examples():
    def series(degs):
        return GapSeries(tuple(GapTerm(d, ZonalPolynomial(d, E1)) for d in degs))

    assert check_hadamard(series([2**k for k in range(8)])) == (True, 2.0)
    assert check_hadamard(series([3**k for k in range(6)])) == (True, 3.0)
    ok, c = check_hadamard(series(range(1, 11)))
    assert ok and math.isclose(c, 10 / 9)
    assert math.isclose(check_hadamard(series(range(1, 12)))[1], 1.1)
    assert check_hadamard(series([5])) == (True, math.inf)


def pow2_series(terms, continuation=None):
    return GapSeries(tuple(GapTerm(2**k, ZonalPolynomial(2**k, E1)) for k in range(terms)),
                     gap_ratio=2.0, continuation_sup=continuation)


def test_eval_series_small_radius():
    val, tail = eval_series(pow2_series(6), np.array([0.5, 0]), 1e-9)
    oracle = math.fsum(0.5 ** (2**k) for k in range(5))
    assert val.real == oracle
    assert tail < 1e-9
    full = math.fsum(0.5 ** (2**k) for k in range(6))
    assert abs(full - val.real) <= tail


def test_eval_series_honest_tail():
    f = pow2_series(6, continuation=1.0)
    val, tail = eval_series(f, np.array([0.99, 0]), 1e-3)
    assert tail > 1e-3
    more = math.fsum(0.99 ** (2**k) for k in range(40))
    assert abs(more - val.real) <= tail


def test_single_term_series():
    f = pow2_series(1)
    val, tail = eval_series(f, np.array([0.3, 0.1]), 1e-12)
    assert val == eval_zonal(f.terms[0].poly, [0.3, 0.1]) and tail == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.floats(0.0, 0.97), st.floats(0, 2 * math.pi))
def test_tail_bound_covers_later_terms(K, r, theta):
    z = r * np.array([math.cos(theta), math.sin(theta)]) + 0j
    val_k, tail = eval_series(pow2_series(K, continuation=1.0), z, 0.0)
    val_more, _ = eval_series(pow2_series(K + 5, continuation=1.0), z, 0.0)
    assert abs(val_more - val_k) <= tail + 1e-15


def test_membership_verdicts():
    w = bers()
    one = membership_profile(lacunary_family(20, w), w)
    assert (one.in_Hmu, one.in_little) == ("yes", "no")
    assert all(abs(lo - 1) < 1e-9 and abs(hi - 1) < 1e-9 for lo, hi in zip(one.a_lower, one.a_upper))
    assert membership_profile(lacunary_family(20, w, profile="damped"), w).in_little == "yes"
    assert membership_profile(lacunary_family(20, w, profile="amplified"), w).in_Hmu == "no"


def test_membership_sampled_brackets():
    w = bers()
    terms = tuple(GapTerm(2**k, ZonalPolynomial(2**k, np.vstack([E1, E2]))) for k in range(6))
    prof = membership_profile(GapSeries(terms), w, samples=300, polish_iters=30)
    for lo, hi in zip(prof.a_lower, prof.a_upper):
        assert lo <= hi
    assert prof.bound_source[0] == "sampled/coefficients"


def test_series_validation():
    with pytest.raises(ValueError):
        GapSeries((GapTerm(2, ZonalPolynomial(2, E1)), GapTerm(3, ZonalPolynomial(3, E1))),
                  gap_ratio=2.0)
    with pytest.raises(ValueError):
        GapSeries((GapTerm(3, ZonalPolynomial(3, E1)), GapTerm(3, ZonalPolynomial(3, E1))))


def test_grid_sup_stable():
    w = bers()
    f = lacunary_family(20, w)
    a = weighted_grid_sup(f, w, 2)
    b = weighted_grid_sup(f, w, 2, radial=400, directions=400, seed=1)
    assert math.isfinite(a) and abs(a - b) <= 0.05 * b


def test_cauchy_bounds():
    w = bers()
    assert math.isclose(cauchy_coefficient_bound(1.0, w, 2, 0.5), 1 / (0.25 * math.sqrt(0.75)))
    assert cauchy_constant(2) == 4.0
    k = np.arange(2, 10**6 + 1)
    c = cauchy_constant(k)
    assert np.all(c[1:] < 4.0) and np.all(np.diff(c) < 0)
    assert abs(c[-1] - math.e) < 1e-3
    assert patched_coefficient_constant(1.0, w, 10.0) == 10.0
    with pytest.raises(SeriesDomainError):
        cauchy_coefficient_bound(1.0, w, 2, 1.0)
