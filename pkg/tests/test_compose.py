import math

import numpy as np
import pytest
from scipy.integrate import quad

from hadgap.compose import (Constant, LinearMap, MixedNormParams, PolyMap, RangeError, ScaleMap,
                            SymbolPair, boundedness_integral, identity_map, mixed_norm,
                            operator_verdict, sphere_mean, symbols_from_config, tail_integral)
from hadgap.polyseries import Polynomial, ZonalPolynomial
from hadgap.sphere import random_sphere
from hadgap.weights import NormalWeight

Z1 = Polynomial({(1, 0): 1}, 2)


def gap_power(c):
    return NormalWeight.tabulate(lambda r: (1 - r) ** c, 0.8 * c, 1.2 * c + 0.1, 0.5, interp="loglog")


def bers_table():
    return NormalWeight.tabulate(lambda r: (1 - r * r) ** 0.5, 0.4, 0.6, 0.7, interp="loglog")


def integral_oracle(c, gamma=0.5, p=2):
    return quad(lambda r: (1 - r * r) ** (-gamma * p) * (1 - r) ** (c * p - 1), 0, 1, limit=400)[0]


def test_sphere_mean_constant():
    assert sphere_mean(Constant(-3.0), 0.7, 3.0, 100, 0) == (3.0, 0.0)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
def test_sphere_mean_coordinate(n, r):
    f = Polynomial({tuple([1] + [0] * (n - 1)): 1}, n)
    val, se = sphere_mean(f, r, 2, 20000, 1, dim=n)
    assert abs(val - r / math.sqrt(n)) <= 3 * se


def test_sphere_mean_against_denser_run():
    rng = np.random.default_rng(3)
    P = ZonalPolynomial(3, random_sphere(rng, 4, 2))
    a, sa = sphere_mean(P, 0.9, 2, 4000, 10)
    b, sb = sphere_mean(P, 0.9, 2, 40000, 99)
    assert abs(a - b) <= 3 * math.hypot(sa, sb)


def test_sphere_mean_monotone():
    rng = np.random.default_rng(0)
    P = ZonalPolynomial(2, random_sphere(rng, 3, 2))
    small = lambda z: 0.5 * P(z)
    for q in (1.0, 2.0, 3.5):
        assert sphere_mean(small, 0.8, q, 500, 4)[0] <= sphere_mean(P, 0.8, q, 500, 4)[0]


def test_sphere_mean_domain():
    with pytest.raises(ValueError):
        sphere_mean(Z1, 1.0, 2, 10, 0)


def test_mixed_norm_constant():
    for c, p in ((0.5, 2.0), (0.3, 1.5), (1.0, 3.0)):
        mp = MixedNormParams(p, 2.0, gap_power(c))
        assert math.isclose(mixed_norm(Constant(1), mp, 16, 1e-4), (1 / (c * p)) ** (1 / p), rel_tol=0.01)


def test_mixed_norm_coordinate():
    mp = MixedNormParams(2, 2, gap_power(0.5))
    assert math.isclose(mixed_norm(Z1, mp, 16, 1e-4, mc_samples=20000), math.sqrt(1 / 6), rel_tol=0.01)
    assert mixed_norm(Constant(0), mp, 8, 1e-3) == 0.0


def test_mixed_norm_homogeneous():
    mp = MixedNormParams(2, 3, gap_power(0.5))
    base = mixed_norm(Z1, mp, 12, 1e-3)
    for lam in (2.5, -0.3, 1e-3):
        scaled = mixed_norm(lambda z: lam * Z1(z), mp, 12, 1e-3)
        assert math.isclose(scaled, abs(lam) * base, rel_tol=1e-12)


def test_mixed_norm_argument_checks():
    mp = MixedNormParams(2, 2, gap_power(0.5))
    with pytest.raises(ValueError):
        mixed_norm(Z1, mp, 4, 1e-3)
    with pytest.raises(ValueError):
        mixed_norm(Z1, mp, 8, 0.7)


def test_threshold_finite_and_divergent():
    mu = bers_table()
    sym = SymbolPair(Constant(1), identity_map(), 2)
    fin = boundedness_integral(sym, mu, MixedNormParams(2, 2, gap_power(0.75)), 500, 16, 0)
    assert fin.verdict == "finite"
    assert math.isclose(fin.value, integral_oracle(0.75), rel_tol=0.05)
    div = boundedness_integral(sym, mu, MixedNormParams(2, 2, gap_power(0.25)), 500, 16, 0)
    assert div.verdict == "divergent" and div.growth >= 10


def test_zero_symbol():
    sym = SymbolPair(Constant(0), identity_map(), 2)
    v = operator_verdict(sym, bers_table(), MixedNormParams(2, 2, gap_power(0.25)))
    assert v.verdict == "bounded AND compact" and v.integral.value == 0.0


def test_contraction_bounded_and_compact():
    mu = bers_table()
    mp = MixedNormParams(2, 2, gap_power(0.5))
    sym = SymbolPair(Constant(1), ScaleMap(0.5), 2)
    v = operator_verdict(sym, mu, mp, {"mc_samples": 500})
    assert v.verdict == "bounded AND compact" and v.consistent
    # inner integrand is 1/mu(r/2)^2: refined deterministic oracle
    ref = quad(lambda r: (1 - r * r / 4) ** -1 * (1 - r) ** 0.0, 0, 1)[0]
    assert math.isclose(v.integral.value, ref, rel_tol=0.05)
    for t in (0.51, 0.6, 0.9):
        assert tail_integral(sym, mu, mp, t, 500, 16, 0) == 0.0


def test_tail_monotone_and_bounded():
    mu = bers_table()
    mp = MixedNormParams(2, 2, gap_power(0.75))
    sym = SymbolPair(Polynomial({(0, 1): 1}, 2), ScaleMap(0.95), 2)
    full = boundedness_integral(sym, mu, mp, 400, 16, 2)
    vals = [tail_integral(sym, mu, mp, t, 400, 16, 2) for t in (0.1, 0.5, 0.8, 0.9, 0.94)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[0] <= full.ladder[-1]["integral"] * (1 + 1e-12)


def test_tail_ladder_decreases():
    mu = bers_table()
    mp = MixedNormParams(2, 2, gap_power(0.75))
    sym = SymbolPair(Constant(1), identity_map(), 2)
    vals = [tail_integral(sym, mu, mp, t, 200, 32, 0) for t in (0.9, 0.99, 0.999)]
    assert vals[0] > vals[1] > vals[2] > 0
    # refined-quadrature oracle for the truncated tail pieces
    for t, v in zip((0.9, 0.99), vals):
        ref = quad(lambda r: (1 - r * r) ** -1 * (1 - r) ** 0.5, t, 1 - 1e-4, limit=200)[0]
        assert math.isclose(v, ref, rel_tol=0.05)


def test_scale_continuity():
    mu = bers_table()
    mp = MixedNormParams(2, 2, gap_power(0.5))
    vals = [boundedness_integral(SymbolPair(Constant(1), ScaleMap(s), 2), mu, mp, 200, 16, 0).value
            for s in np.linspace(0.3, 0.7, 9)]
    jumps = np.abs(np.diff(vals)) / np.array(vals[:-1])
    assert np.all(np.diff(vals) > 0) and jumps.max() < 0.1


def test_refinement_stable():
    mu = bers_table()
    sym = SymbolPair(Constant(1), identity_map(), 2)
    res = boundedness_integral(sym, mu, MixedNormParams(2, 2, gap_power(0.75)), 200, 16, 0)
    assert res.refinement["relative_change"] < 0.05


def test_range_checks():
    with pytest.raises(RangeError):
        ScaleMap(1.2)
    with pytest.raises(RangeError):
        LinearMap(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(RangeError):
        PolyMap((Polynomial({(2, 0): 1}, 2), Polynomial({(0, 1): 1}, 2)))
    ok = PolyMap((Polynomial({(2, 0): 0.5}, 2), Polynomial({(1, 1): 0.5}, 2)))
    assert ok.radius_bound <= 1


def test_linear_symbol_runs():
    mu = bers_table()
    mp = MixedNormParams(2, 2, gap_power(0.75))
    rot = LinearMap(np.array([[0, 1], [1, 0]], dtype=complex))
    a = boundedness_integral(SymbolPair(Constant(1), rot, 2), mu, mp, 200, 16, 0)
    b = boundedness_integral(SymbolPair(Constant(1), identity_map(), 2), mu, mp, 200, 16, 0)
    assert math.isclose(a.value, b.value, rel_tol=1e-9)


def test_symbol_config():
    sym = symbols_from_config({"u": {"kind": "const", "value": 1}, "phi": {"kind": "scale", "s": 0.5}}, 2)
    assert isinstance(sym.phi_map, ScaleMap) and sym.phi_map.s == 0.5
    sym = symbols_from_config({"u": {"kind": "poly", "terms": [{"exps": [1, 0], "coeff": 1}]},
                               "phi": {"kind": "identity"}}, 2)
    assert sym.u([0.5, 0]) == 0.5


def test_thread_independent():
    mu = bers_table()
    mp = MixedNormParams(2, 2, gap_power(0.75))
    sym = SymbolPair(Polynomial({(1, 1): 1}, 2), ScaleMap(0.9), 2)
    a = boundedness_integral(sym, mu, mp, 300, 16, 5)
    b = boundedness_integral(sym, mu, mp, 300, 16, 5, threads=4)
    assert a.to_dict() == b.to_dict()
