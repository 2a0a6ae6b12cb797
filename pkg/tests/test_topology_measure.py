import math
from fractions import Fraction

import pytest
from flint import fmpq
from hypothesis import given, settings, strategies as st

from stpart.catalog import CONNECTED, DISCONNECTED, NULL_CASES
from stpart.good_cells import cell_at, good_decomposition_box
from stpart.grammar import parse_formula, parse_term
from stpart.semialgebraic import sa_equal
from stpart.st_operator import StError, st_set
from stpart.topology_measure import (Density, IsomorphismError, IsoMap, check_isomorphism, closure_as_st,
                                     contains_qbox, image_of, is_connected_st, measure_extension, measure_st,
                                     shrink_family, st_derivative_commutes, volume_I)

X1 = ("x",)
XY = ("x", "y")


def F(text, vs=X1):
    return parse_formula(text, vs)


def cell(dec_input, point, vs=X1):
    dec = good_decomposition_box([F(dec_input, vs)], certify=False)
    return cell_at(dec, [fmpq(Fraction(p).numerator, Fraction(p).denominator) for p in point])


# closures of good cells

@pytest.mark.parametrize("dec_input,point,vs,closure", [
    ("0 < x & x < 1", ["1/2"], X1, "0 <= x & x <= 1"),
    ("0 < x & x < 1 & 0 < y & y < 1", ["1/2", "1/2"], XY, "0 <= x & x <= 1 & 0 <= y & y <= 1"),
    ("y = x^2 & 0 <= x & x <= 1", ["1/2", "1/4"], XY, "y = x^2 & 0 <= x & x <= 1"),
])
def test_closure_as_st(dec_input, point, vs, closure):
    C = cell(dec_input, point, vs)
    X, cert = closure_as_st(C)
    assert cert.ok
    assert sa_equal(st_set(X).formula, F(closure, vs))
    assert shrink_family(C).monotone_certificate().ok


# connectedness

@pytest.mark.parametrize("text,vs", CONNECTED)
def test_connected(text, vs):
    assert is_connected_st(F(text, vs)).connected


@pytest.mark.parametrize("text,vs", DISCONNECTED)
def test_disconnected(text, vs):
    res = is_connected_st(F(text, vs))
    assert not res.connected
    assert all(c.ok for c in res.certificates)


def test_disconnection_witness():
    res = is_connected_st(F("x = eps | x = 1"))
    A, B = res.witness
    assert {str(A), str(B)} == {"x = 0", "x = 1"}


def test_connectedness_needs_strong_bound():
    with pytest.raises(StError):
        is_connected_st(F("0 < x & x < 1/eps"))


# measure

def test_measure_examples():
    m = measure_st(F("eps < x & x < 1 - eps"))
    assert m.exact and m.rational == 1
    disk = measure_st(F("x^2 + y^2 < 1 + eps", XY))
    assert abs(disk.value - math.pi) <= 1e-6 and disk.radius <= 1e-6
    seg = measure_st(F("0 <= x & x <= 1 & y = 0", XY))
    assert seg.exact and seg.rational == 0


@pytest.mark.parametrize("text,vs", NULL_CASES)
def test_null_sets(text, vs):
    assert measure_st(F(text, vs)).value == 0


# random finite unions of disjoint intervals in R with endpoints q + k*eps
@st.composite
def disjoint_intervals(draw):
    cuts = sorted(draw(st.sets(st.integers(-8, 8), min_size=4, max_size=6)))
    shifts = draw(st.lists(st.sampled_from(["", " + eps", " - eps", " + eps^2"]),
                           min_size=len(cuts), max_size=len(cuts)))
    ends = [f"{c}/8{s}" for c, s in zip(cuts, shifts)]
    pieces = [f"{a} < x & x < {b}" for a, b in zip(ends[0::2], ends[1::2])]
    exact = sum(Fraction(b - a, 8) for a, b in zip(cuts[0::2], cuts[1::2]))
    return pieces, exact


@settings(max_examples=25)
@given(disjoint_intervals())
def test_additivity(case):
    pieces, exact = case
    total = Fraction(0)
    for p in pieces:
        m = measure_st(F(p))
        assert m.exact
        total += m.rational
    union = measure_st(F(" | ".join(f"({p})" for p in pieces)))
    assert union.rational == total == exact


@settings(max_examples=15)
@given(st.integers(-4, 4), st.integers(1, 4), st.sampled_from(["x = {a}/4 + eps", "x^2 < eps",
                                                               "{a}/4 < x & x < {a}/4 + eps"]))
def test_null_property(a, b, form):
    m = measure_st(F(form.format(a=a)))
    assert m.exact and m.rational == 0


def test_translation_invariance():
    X = F("x^2 + y^2 < 1", XY)
    Y = image_of(IsoMap.parse(["x - 1/3 + eps", "y + 2*eps"], XY), X)
    assert measure_st(X).agrees(measure_st(Y), 2.0)


# rational boxes

def test_qbox_examples():
    res = contains_qbox(F("(x - 1/2)^2 < 1/4 + eps"))
    assert res.verdict == "box" and res.box == ((fmpq(1, 4), fmpq(3, 4)),)
    assert contains_qbox(F("0 <= x & x <= 1 & y = 0", XY)).verdict == "interior empty"
    square = contains_qbox(F("-1 <= x & x <= 1 & -1 <= y & y <= 1", XY))
    assert square.verdict == "box" and square.level == 0


# volumes

def test_volume_examples():
    one = volume_I(Density.indicator(F("eps < x & x < 1 - eps")))
    assert one.exact and one.rational == 1
    para = volume_I(Density.parse("1 - x^2 + eps", F("-1 < x & x < 1")))
    assert abs(para.value - 4 / 3) <= 1e-9
    null = volume_I(Density.indicator(F("0 <= x & x <= 1 & y = 0", XY)))
    assert null.value == 0


@settings(max_examples=15)
@given(st.integers(-7, 0), st.integers(1, 7), st.integers(0, 3))
def test_volume_additive_over_refinement(a, b, k):
    f = Density.parse(f"{k}*x^2 + 1 + eps*x", F(f"{a}/8 < x & x < {b}/8"))
    whole = volume_I(f)
    split = volume_I(f, refine=[fmpq(0)])
    assert whole.agrees(split, 2.0)
    lo, hi = Fraction(a, 8), Fraction(b, 8)
    assert abs(whole.value - float(k * (hi ** 3 - lo ** 3) / 3 + hi - lo)) <= 1e-9


# isomorphisms

def test_translation():
    f = Density.indicator(F("0 < x & x < 1"))
    g = Density.indicator(F("-eps < x & x < 1 - eps"))
    rep = check_isomorphism(IsoMap.parse(["x - eps"], X1), f, g)
    assert rep.ok and [v.value for v in rep.volumes] == [1.0, 1.0]
    assert not check_isomorphism(IsoMap.parse(["x + eps"], X1), f, g).ok
    assert check_isomorphism(IsoMap.parse(["x + eps"], X1), g, f).ok


def test_shear():
    sq = Density.indicator(F("0 < x & x < 1 & 0 < y & y < 1", XY))
    par = Density.indicator(F("0 < x & x < 1 & x < y & y < x + 1", XY))
    rep = check_isomorphism(IsoMap.parse(["x", "y + x"], XY), sq, par)
    assert rep.ok and rep.volumes[0].agrees(rep.volumes[1])


def test_scaling_rejected():
    f = Density.indicator(F("0 < x & x < 1"))
    g = Density.indicator(F("0 < x & x < 2"))
    rep = check_isomorphism(IsoMap.parse(["2*x"], X1), f, g)
    assert not rep.ok
    assert any("|J psi|" in c.claim and not c.ok for c in rep.certificates)


# measure extension

def test_extension_strongly_bounded():
    m = measure_extension(F("eps < x & x < 1 - eps"))
    assert m.rational == 1 and m.note == "identity witness"


def test_extension_with_witness():
    m = measure_extension(F("0 < x & x < 1 - eps"), (IsoMap.parse(["x + eps"], X1), F("eps < x & x < 1")))
    assert m.rational == 1
    wedge = F("0 < x & x < 1/eps & 0 < y & y < eps", XY)
    psi = IsoMap.parse(["eps*x", "y/eps"], XY)
    m = measure_extension(wedge, (psi, F("0 < x & x < 1 & 0 < y & y < 1", XY)))
    assert m.rational == 1 and m.note == "via witness"
    assert math.isinf(measure_extension(wedge).value)


def test_extension_rejects_bad_witness():
    psi = IsoMap.parse(["2*x"], X1)
    with pytest.raises(IsomorphismError):
        measure_extension(F("0 < x & x < 1/(2 - eps)"), (psi, F("0 < x & x < 2/(2 - eps)")))


# derivatives

@pytest.mark.parametrize("term,dom,vs,point,g", [
    ("x^2 + eps*x", "-1 < x & x < 1", X1, ["1/2"], "x^2"),
    ("x*y + eps*(x - y)", "-1 < x & x < 1 & -1 < y & y < 1", XY, ["0", "0"], "x*y"),
    ("eps/x", "eps < x & x < 1", X1, ["1/2"], "0"),
])
def test_derivatives(term, dom, vs, point, g):
    D = cell(dom, point, vs)
    rep = st_derivative_commutes(Density.parse(term, F(dom, vs)), D, points=30)
    assert rep.ok and all(c.ok for c in rep.certificates)
    assert rep.max_error <= 1e-4
    # g = num/den as rational functions, compared at sample points
    num, den = rep.g
    want, one = parse_term(g, vs)
    for k in range(1, 4):
        at = {v: fmpq(k, 5 + j) for j, v in enumerate(vs)}
        assert rat_at(num, at) / rat_at(den, at) == rat_at(want, at) / rat_at(one, at)


def rat_at(P, values):
    c = P.subs({k: v for k, v in values.items() if k in P.context().names()})
    return c.coeffs()[0] if not c.is_zero() else fmpq(0)
