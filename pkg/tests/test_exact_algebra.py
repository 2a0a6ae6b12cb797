import numpy as np
import pytest
from flint import fmpq, fmpq_poly
from hypothesis import assume, given, strategies as st

from stpart.exact_algebra import (EPS, FieldElem, convert, discriminant, fe_is_bounded, fe_is_infinitesimal,
                                  fe_sign, fe_st, fe_str, isolate_roots, resultant, ring, sturm_count, to_upoly)
from stpart.grammar import parse_term

eps = FieldElem.eps()
one = FieldElem.rational(1)


def q(a, b=1):
    return FieldElem.rational(fmpq(a, b))


small = st.integers(-6, 6)


@st.composite
def field_elems(draw, nonzero=False):
    num = draw(st.lists(small, min_size=1, max_size=4))
    den = draw(st.lists(small, min_size=1, max_size=3))
    assume(den[0] != 0)
    if nonzero:
        assume(any(num))
    k = draw(st.integers(0, 2))
    return FieldElem.make(fmpq_poly([0] * k + num), fmpq_poly(den))


@st.composite
def bounded_elems(draw):
    x = draw(field_elems())
    assume(fe_is_bounded(x))
    return x


def test_sign_examples():
    assert fe_sign(eps) == 1
    assert fe_sign((2 * eps - eps * eps) / (3 + eps)) == 1
    assert fe_sign(q(0)) == 0


def test_boundedness_examples():
    assert fe_is_bounded(q(5))
    assert not fe_is_bounded((1 + eps) / eps)
    assert fe_is_bounded(eps ** 3 / (1 - eps))


def test_standard_part_examples():
    assert fe_st(one / (1 + eps)) == 1
    assert fe_st((1 + 2 * eps) / (1 - eps)) == 1
    assert fe_st(eps * (7 + eps)) == 0
    with pytest.raises(ValueError, match="not in O"):
        fe_st(one / eps)


def test_text_rendering():
    assert fe_str(eps ** 2 * (3 + eps) / (1 - 2 * eps)) == "eps^2*(3 + eps)/(1 - 2*eps)"


def _ex():
    ctx = ring((EPS, "x"))
    return ctx.gens()


def test_sturm_examples():
    e, x = _ex()
    assert sturm_count(x ** 2 + 1) == 0
    assert sturm_count(x, q(-1), one) == 1
    assert sturm_count(x ** 2 - e, q(0), one) == 1


def test_isolation_examples():
    e, x = _ex()
    roots = isolate_roots(x ** 2 - e)
    assert len(roots) == 2
    # both roots are infinitesimal: refining below any rational width keeps them in (-w, w)
    for r in roots:
        r = r.refine(q(1, 1000))
        assert q(-1, 1000) < r.lo and r.hi < q(1, 1000)
    (xr,) = ring(("x",)).gens()
    assert len(isolate_roots(xr ** 3)) == 1
    assert [str(r) for r in isolate_roots(xr ** 2 - 1)] == ["-1", "1"]


def test_resultant_examples():
    ctx = ring((EPS, "x", "a", "b"))
    e, x, a, b = ctx.gens()
    assert resultant(x - a, x - b, "x") == a - b
    assert resultant(x ** 2 - e, x, "x") == -e
    assert discriminant(x ** 2 - e, "x") == 4 * e


@given(field_elems(), field_elems(), field_elems())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(field_elems(nonzero=True))
def test_inverses(a):
    assert a * (one / a) == one


@given(field_elems(), field_elems())
def test_sign_is_multiplicative(a, b):
    assert fe_sign(a * b) == fe_sign(a) * fe_sign(b)


@given(field_elems(nonzero=True), st.fractions(min_value="1/1000000", max_value=100))
def test_infinitesimals_below_every_rational(x, bound):
    y = x * eps if fe_sign(x) > 0 else -x * eps
    assume(fe_is_infinitesimal(y))
    assert q(0) < y < q(bound.numerator, bound.denominator)


@given(bounded_elems(), bounded_elems())
def test_standard_part_is_a_ring_map(a, b):
    assert fe_st(a + b) == fe_st(a) + fe_st(b)
    assert fe_st(a * b) == fe_st(a) * fe_st(b)


# univariate polynomials over Q(eps): count roots in (-2, 2) exactly, and numerically at small eps
STURM_CATALOG = [
    "x^2 - eps", "x^2 + eps", "x^3 - eps*x", "x^2 - 1", "x*(x - 1) - eps", "(x - eps)*(x + eps)*(x - 1/2)",
    "x^4 - 3*x^2 + 1", "eps*x^2 - 1", "x^3 - 2*eps*x^2 + eps^2*x - 1/8", "x - eps",
    "x^2 - 2*eps*x - 1/4", "(x^2 - 1/4)*(x - eps^2)", "x^4 - eps", "x^3 + x + eps", "(x - 1)^2 - eps^2",
    "x^2 + x + eps", "x^4 - 5/4*x^2 + 1/4", "eps*x^3 - x", "(2*x - 1)^2 + eps", "x^3 - x^2 - eps*x + eps",
]


@pytest.mark.parametrize("text", STURM_CATALOG)
def test_sturm_count_matches_numeric_counts(text):
    num, _ = parse_term(text, ("x",))
    P = convert(num, ring((EPS, "x")))
    exact = sturm_count(P, q(-2), q(2))
    for e in (1e-3, 1e-4, 1e-5):
        u = to_upoly(P.subs({EPS: fmpq(1, int(round(1 / e)))}), "x")
        coeffs = [float(c) for c in u.coeffs()][::-1]
        roots = np.roots(coeffs) if len(coeffs) > 1 else []
        real = sorted(r.real for r in roots if abs(r.imag) < 1e-6 and -2 < r.real < 2)
        distinct = [r for i, r in enumerate(real) if i == 0 or abs(r - real[i - 1]) > 1e-9]
        assert len(distinct) == exact, (text, e, real)
