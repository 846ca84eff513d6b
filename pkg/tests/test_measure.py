import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import centered_measures
from sepwalk.errors import InfiniteFirstMoment, MassDeficit, MeasureError, NonCentered
from sepwalk.measure import (
    NEG_INF,
    AtomMeasure,
    CasinoCPT,
    MixedGeometric,
    atoms,
    barycenter,
    casino_tail_sum,
    hl_bound,
    inverse_barycenter,
    measure_from_dict,
    pmf,
    truncate,
    validate,
)

GEOM = MixedGeometric(Fraction(5, 12), Fraction(5, 12), Fraction(13, 24), Fraction(13, 24))

# sum_{k >= j} ((k^0.6 - (k-1)^0.6)^(10/3)), mpmath Euler-Maclaurin at 30 digits
CASINO_D2 = 0.54301651310272599893519121201
CASINO_D50 = 0.149356933908490558036131456957


def test_three_point_is_valid(three_point):
    rep = validate(three_point)
    assert rep.ok
    assert rep.total_mass == 1 and rep.mean == 0


def test_non_centered_rejected():
    rep = validate(atoms({-1: 0.5, 3: 0.5}))
    assert not rep.ok
    with pytest.raises(NonCentered):
        rep.raise_for_status()


def test_mass_deficit_rejected():
    with pytest.raises(MassDeficit):
        validate(atoms({-1: Fraction(1, 4), 1: Fraction(1, 4)})).raise_for_status()


def test_negative_mass_rejected():
    with pytest.raises(MeasureError):
        atoms({-1: Fraction(3, 2), 1: Fraction(-1, 2)})


def test_divergent_geometric_tail_rejected():
    rep = validate(MixedGeometric(0.5, 0.0, 0.5, 0.0))
    assert any(cls is InfiniteFirstMoment for cls, _ in rep.problems)


def test_geometric_example_valid_and_exactly_centered():
    rep = validate(GEOM)
    assert rep.ok and rep.mean == 0 and rep.total_mass == 1


def test_casino_as_printed_within_tolerance():
    rep = validate(CasinoCPT())
    assert rep.ok
    assert abs(rep.total_mass - 1) < 2e-3
    assert abs(rep.mean) <= 1e-3


def test_casino_recentered_exactly_centered():
    rep = validate(CasinoCPT("recentered"))
    assert rep.ok
    assert abs(rep.total_mass - 1) < 1e-14 and abs(rep.mean) < 1e-14


def test_casino_pmf_values():
    c = CasinoCPT()
    d = lambda n: (n ** 0.6 - (n - 1) ** 0.6) ** (10 / 3)
    assert pmf(c, 1) == 0.3297 and pmf(c, -1) == 0.6216
    assert pmf(c, 0) == 0 and pmf(c, -2) == 0
    for n in (2, 3, 10, 100):
        assert pmf(c, n) == pytest.approx(0.4465 * (d(n) - d(n + 1)), rel=1e-12)


def test_casino_masses_match_pmf():
    c = CasinoCPT()
    assert np.allclose(c.masses(-2, 30), [pmf(c, i) for i in range(-2, 31)], rtol=1e-13, atol=0)


def test_casino_tail_sum_against_high_precision():
    assert casino_tail_sum(2) == pytest.approx(CASINO_D2, abs=1e-13)
    assert casino_tail_sum(50) == pytest.approx(CASINO_D50, abs=1e-13)


def test_casino_as_printed_horizon():
    c = CasinoCPT()
    lat = c.table()
    assert lat.hi == c.horizon
    mass, moment = lat.above
    assert mass > 0 and moment > (lat.hi + 1) * mass
    # the closure makes the table an exactly normalized, centered law
    assert lat.total == pytest.approx(1.0, abs=1e-15)
    assert lat.moment_from[0] == pytest.approx(0.0, abs=1e-15)


def test_geometric_pmf_middle_branch():
    assert pmf(GEOM, 0) == Fraction(1, 24)
    assert pmf(GEOM, 1) == Fraction(5, 12) * Fraction(5, 12)
    assert pmf(GEOM, -2) == Fraction(13, 24) * Fraction(13, 24) * Fraction(11, 24)


def test_geometric_remainders_exact():
    lat = GEOM.table()
    hi_mass, hi_mom = GEOM.upper_remainder(lat.hi + 1)
    # brute-force partial sums converge to the closed form
    sites = range(lat.hi + 1, lat.hi + 400)
    assert float(hi_mass) == pytest.approx(math.fsum(float(pmf(GEOM, i)) for i in sites), rel=1e-12)
    assert float(hi_mom) == pytest.approx(math.fsum(i * float(pmf(GEOM, i)) for i in sites),
                                          rel=1e-12)
    assert lat.total == 1


def test_table_tail_functionals(three_point):
    lat = three_point.table()
    assert lat.tail(0) == Fraction(1, 2)
    assert lat.upper_moment(0) == Fraction(1, 2)
    assert lat.cdf(0) == Fraction(3, 4)
    assert lat.tail(-5) == 1 and lat.tail(7) == 0


def test_barycenter_three_point(three_point):
    t = barycenter(three_point)
    assert t.psi(-1) == 0
    assert t.psi(0) == 1
    assert t.psi(1) == 2 and t.psi(2) == 2
    assert t.psi(3) == 3


def test_inverse_barycenter_three_point(three_point):
    t = barycenter(three_point)
    assert inverse_barycenter(t, 0) == -1
    assert inverse_barycenter(t, Fraction(1, 2)) == -1
    assert inverse_barycenter(t, 1) == 0
    assert inverse_barycenter(t, 2) == 2
    assert inverse_barycenter(t, 5) == 5


def test_inverse_sentinel_for_unbounded_below():
    t = barycenter(GEOM)
    assert inverse_barycenter(t, 0) == NEG_INF
    assert math.isinf(NEG_INF) and NEG_INF < 0


def test_inverse_rejects_negative_argument(three_point):
    with pytest.raises(ValueError):
        barycenter(three_point).inverse(-1)


def test_geometric_barycenter_right_tail():
    # memoryless tail: psi(x) = x + (1 - q)/q for x >= 1
    t = barycenter(GEOM)
    for x in range(1, 10):
        assert t.psi(x) == x + Fraction(7, 5)


def test_hl_bound_three_point(three_point):
    t = barycenter(three_point)
    assert [hl_bound(t, n) for n in range(4)] == [1, Fraction(1, 2), Fraction(1, 4), 0]


def test_hl_bound_geometric_nonincreasing():
    t = barycenter(GEOM)
    vals = [hl_bound(t, n) for n in range(40)]
    assert vals[0] == 1
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_truncate_geometric_n3_rational_oracle():
    tm = truncate(GEOM, 3)
    masses = dict(tm.masses)
    assert sum(masses.values()) == 1
    assert sum(i * w for i, w in masses.items()) == 0
    a = tm.a_n
    assert masses[a] > 0 and masses[3] > 0
    for i in range(a + 1, 3):
        assert masses.get(i, 0) == pmf(GEOM, i)
    # recompute the endpoint masses from the defining sums in plain Fractions
    k = -a
    inner = [i for i in range(-k + 1, 3)]
    mass_in = sum(pmf(GEOM, i) for i in inner)
    mom_in = sum(i * pmf(GEOM, i) for i in inner)
    assert masses[3] == (k * (1 - mass_in) - mom_in) / (3 + k)
    assert masses[a] == (3 * (1 - mass_in) + mom_in) / (3 + k)
    # k is the least admissible left endpoint
    j = k - 1
    inner_j = range(-j + 1, 3)
    assert j * (1 - sum(pmf(GEOM, i) for i in inner_j)) - sum(i * pmf(GEOM, i) for i in inner_j) <= 0


def test_truncate_bounded_inside_is_identity(three_point):
    tm = truncate(three_point, 5)
    assert tm.identity
    assert dict(tm.masses) == dict(three_point.atoms)


def test_truncate_mirrors_when_bounded_above():
    m = CasinoCPT("recentered").reflect()
    assert m.upper == 1 and m.lower == NEG_INF
    tm = truncate(m, 4)
    masses = dict(tm.masses)
    assert tm.a_n == -4 and tm.n >= 1
    assert math.fsum(masses.values()) == pytest.approx(1.0, abs=1e-12)
    assert math.fsum(i * w for i, w in masses.items()) == pytest.approx(0.0, abs=1e-12)
    # the far endpoint -4 and the top atom 1 absorb the outside mass
    assert masses[-4] > 0 and masses[1] > 0
    for i in range(-3, 1):
        assert masses.get(i, 0.0) == pytest.approx(m.pmf(i), abs=1e-15)


def test_reflection_round_trip():
    r = GEOM.reflect()
    assert r.pmf(3) == GEOM.pmf(-3)
    assert r.reflect() == GEOM
    c = CasinoCPT().reflect()
    assert c.pmf(1) == CasinoCPT().pmf(-1)
    assert c.upper == 1 and c.lower == -math.inf


def test_measure_json_round_trip():
    for m in (GEOM, CasinoCPT("recentered"), atoms({-1: Fraction(1, 3), 2: Fraction(1, 6),
                                                    0: Fraction(1, 2)})):
        assert measure_from_dict(m.to_dict()) == m


def test_measure_from_decimal_json():
    m = measure_from_dict({"type": "atoms", "atoms": [[-1, 0.5], [0, 0.25], [2, 0.25]]})
    assert isinstance(m, AtomMeasure) and not m.exact
    assert validate(m).ok


@settings(max_examples=150, deadline=None)
@given(centered_measures())
def test_barycenter_properties(m):
    t = barycenter(m)
    xbar, xlow = m.upper, m.lower
    assert inverse_barycenter(t, 0) == xlow
    for x in range(xlow - 1, xbar):
        assert t.psi(x) > x
    for y in (xbar, xbar + Fraction(1, 3), xbar + 2):
        assert inverse_barycenter(t, y) == y
    # b is nondecreasing and every value below xbar is an atom
    ys = [Fraction(i, 7) for i in range(7 * xbar)]
    bs = [inverse_barycenter(t, y) for y in ys]
    assert all(a <= b for a, b in zip(bs, bs[1:]))
    assert all(b < y or y == 0 for b, y in zip(bs, ys))
    assert all(m.pmf(b) > 0 for b in bs)


@settings(max_examples=150, deadline=None)
@given(centered_measures())
def test_hl_bound_properties(m):
    t = barycenter(m)
    vals = [hl_bound(t, n) for n in range(m.upper + 2)]
    assert vals[0] == 1
    assert vals[m.upper] == m.pmf(m.upper)
    assert vals[-1] == 0
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@settings(max_examples=100, deadline=None)
@given(centered_measures())
def test_truncate_properties(m):
    n = max(1, m.upper // 2)
    tm = truncate(m, n)
    masses = dict(tm.masses)
    assert sum(masses.values()) == 1
    assert sum(i * w for i, w in masses.items()) == 0
    if not tm.identity:
        assert masses[tm.a_n] > 0 and masses[tm.n] > 0
        for i in range(tm.a_n + 1, tm.n):
            assert masses.get(i, 0) == m.pmf(i)
