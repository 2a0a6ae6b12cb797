import math
from fractions import Fraction

import pytest
from flint import fmpq
from hypothesis import given, settings, strategies as st

from stpart.catalog import INTERSECTION_PAIRS, PROJECTIONS, ST_CATALOG, UNBOUNDED_LOCI
from stpart.exact_algebra import FieldElem
from stpart.grammar import parse_formula, parse_term
from stpart.semialgebraic import (complement, difference, intersection, product, sa_empty, sa_equal,
                                  union)
from stpart.st_operator import (StError, hull_member, is_bounded, st_intersection_witness, st_onevar,
                                st_project_bounded, st_set, st_unbounded_locus, strong_bound)


def F(text, vs=("x",)):
    return parse_formula(text, vs)


def subset(a, b):
    return sa_empty(difference(a, b))


@pytest.mark.parametrize("case", ST_CATALOG, ids=lambda c: c.name)
def test_catalog(case):
    S = st_set(F(case.formula, case.vars))
    assert sa_equal(S.formula, F(case.st, case.vars))


@pytest.mark.parametrize("case", [c for c in ST_CATALOG if len(c.vars) == 2], ids=lambda c: c.name)
def test_box_route_agrees(case):
    X = F(case.formula, case.vars)
    assert sa_equal(st_set(X, method="box").formula, st_set(X).formula)


def test_examples():
    assert str(st_set(F("eps < x & x < 1 - eps")).formula) == "0 <= x & x <= 1"
    assert st_set(F("x > 1/eps")).is_empty()
    arc = st_set(F("x*y = eps & eps <= x & x <= 1", ("x", "y")))
    assert sa_equal(arc.formula, F("x = 0 & 0 <= y & y <= 1 | 0 <= x & x <= 1 & y = 0", ("x", "y")))
    assert arc.dim() == 1
    with pytest.raises(StError):
        st_set(F("x < y & y < z", ("x", "y", "z")))


def test_onevar_examples():
    pieces = st_onevar(F("eps < x & x < 1 - eps | x = 2 + eps"))
    assert [str(p) for p in pieces] == ["[0, 1]", "[2, 2]"]
    assert [p.is_point() for p in pieces] == [False, True]
    (p,) = st_onevar(F("x^2 < eps"))
    assert p.is_point() and p.approx() == (0.0, 0.0)
    assert st_onevar(F("1/eps < x & x < 2/eps")) == []


def test_boundedness():
    assert is_bounded(F("eps*x^2 < 1 & x > 0"))
    assert strong_bound(F("eps*x^2 < 1 & x > 0")) is None
    assert not is_bounded(F("x^3 - eps^2*x > 0"))
    assert strong_bound(F("x^2 + y^2 < 1 + eps", ("x", "y"))) >= 1


@pytest.mark.parametrize("name", sorted(PROJECTIONS))
def test_projection_commutes(name):
    case = next(c for c in ST_CATALOG if c.name == name)
    S = st_set(F(case.formula, case.vars))
    P, cert = st_project_bounded(S, 1)
    assert cert.ok
    assert sa_equal(P.formula, F(PROJECTIONS[name]))


def test_projection_needs_bounded():
    S = st_set(F("0 < x & 0 < y & y < eps", ("x", "y")))
    with pytest.raises(StError):
        st_project_bounded(S, 1)


@pytest.mark.parametrize("a,b,meet", INTERSECTION_PAIRS)
def test_intersection_witness(a, b, meet):
    Z, m, cert = st_intersection_witness(F(a), F(b))
    assert cert.ok and Z is not None and 1 <= m <= 4
    # st X meet st Y is the hand value
    assert sa_equal(intersection(st_set(F(a)).formula, st_set(F(b)).formula), F(meet))


@pytest.mark.parametrize("domain,term,side,locus", UNBOUNDED_LOCI)
def test_unbounded_locus(domain, term, side, locus):
    num, den = parse_term(term, ("x",))
    S = st_unbounded_locus(F(domain), num, den, side)
    assert sa_equal(S.formula, F(locus))


def test_unbounded_locus_rejects_poles():
    num, den = parse_term("1/x", ("x",))
    with pytest.raises(StError):
        st_unbounded_locus(F("-1 < x & x < 1"), num, den, 1)


def test_hull_member():
    C = F("0 <= x & x <= 1")
    eps = FieldElem.eps()
    assert hull_member([FieldElem.rational(1) + eps], C)
    assert hull_member([FieldElem.rational(0) - eps], C)
    assert not hull_member([FieldElem.rational(fmpq(11, 10))], C)
    D = F("x^2 + y^2 <= 1", ("x", "y"))
    assert hull_member([FieldElem.rational(1) + eps, eps], D)
    assert not hull_member([FieldElem.rational(1), FieldElem.rational(1)], D)


# random subsets of R over Q(eps): unions of intervals with infinitesimally
# perturbed or infinitely large endpoints
ends = st.sampled_from(["-1", "0", "1/2", "1", "eps", "1 - eps", "1 + eps", "-eps", "eps^2",
                        "1/2 + eps", "1/eps", "-1/eps"])


@st.composite
def pieces(draw):
    a, b = draw(ends), draw(ends)
    kind = draw(st.sampled_from(["open", "closed", "point"]))
    if kind == "point":
        return f"x = {a}"
    lt = "<" if kind == "open" else "<="
    return f"{a} {lt} x & x {lt} {b}"


@st.composite
def sets(draw):
    ps = draw(st.lists(pieces(), min_size=1, max_size=2))
    return F(" | ".join(f"({p})" for p in ps))


props = settings(max_examples=25)


@props
@given(sets())
def test_st_is_closed(X):
    S = st_set(X).formula
    assert sa_equal(st_set(S).formula, S)
    # the complement of st X is open: st of the complement's closure adds nothing
    C = complement(S)
    assert subset(st_set(C).formula, union(C, S))


@props
@given(sets(), sets())
def test_union_commutes(X, Y):
    assert sa_equal(st_set(union(X, Y)).formula, union(st_set(X).formula, st_set(Y).formula))


@props
@given(sets(), sets())
def test_intersection_contained(X, Y):
    assert subset(st_set(intersection(X, Y)).formula,
                  intersection(st_set(X).formula, st_set(Y).formula))


@props
@given(sets(), sets())
def test_monotone(X, Y):
    assert subset(st_set(X).formula, st_set(union(X, Y)).formula)


@settings(max_examples=10)
@given(sets(), sets())
def test_product_rule(X, Y):
    Yy = parse_formula(str(Y).replace("x", "y"), ("y",))
    P = product(X, Yy)
    assert sa_equal(st_set(P).formula, product(st_set(X).formula, st_set(Yy).formula))


@props
@given(sets())
def test_onevar_matches_cells(X):
    from stpart.semialgebraic import contains_point
    S = st_set(X)
    for p in st_onevar(X):
        lo, hi = p.approx()
        if p.is_point() or not (math.isfinite(lo) and math.isfinite(hi)):
            continue
        mid = Fraction((lo + hi) / 2).limit_denominator(10**6)
        assert contains_point(S.formula, [fmpq(mid.numerator, mid.denominator)])
