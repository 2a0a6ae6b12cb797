import math

import numpy as np
import pytest
from flint import fmpq
from hypothesis import given, settings, strategies as st

from stpart.cad import CAD, Budget, ResourceError
from stpart.exact_algebra import EPS, ring
from stpart.formula import And, Atom, Const, Not, Or, SAFormula, substitute
from stpart.grammar import parse_formula
from stpart.raster import axes, pixel_image, slice_at
from stpart.semialgebraic import (cells_to_formula, complement, decide, difference, eliminate_quantifiers,
                                  intersection, product, projection, sa_dim, sa_empty, sa_equal, union)


def F(text, vs=("x",)):
    return parse_formula(text, vs)


def truth_at(node, values):
    """Exact truth of a quantifier-free formula over Q at a rational point."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Atom):
        P, rel = node.normal()
        c = P.subs({k: v for k, v in values.items() if k in P.context().names()})
        v = c.coeffs()[0] if not c.is_zero() else 0
        s = (v > 0) - (v < 0)
        return {"<": s < 0, "<=": s <= 0, "=": s == 0, "!=": s != 0, ">=": s >= 0, ">": s > 0}[rel]
    if isinstance(node, Not):
        return not truth_at(node.arg, values)
    if isinstance(node, And):
        return all(truth_at(a, values) for a in node.args)
    if isinstance(node, Or):
        return any(truth_at(a, values) for a in node.args)
    raise TypeError(node)


def test_cad_cell_counts():
    x, y = ring(("x", "y")).gens()
    assert len(CAD([x ** 2 + y ** 2 - 1], ["x", "y"]).cells) == 13
    (u,) = ring(("x",)).gens()
    assert len(CAD([u], ["x"]).cells) == 3
    e, v = ring((EPS, "x")).gens()
    cad = CAD([v ** 2 - e], ["x"])
    assert len(cad.cells) == 5
    assert sum(c.is_section() for c in cad.cells) == 2


def test_budget_is_enforced():
    names = ("x", "y", "z", "w", "v")
    gens = ring(names).gens()
    with pytest.raises(ResourceError):
        CAD([sum(gens)], list(names), budget=Budget(max_vars=3))


def test_quantifier_elimination_examples():
    assert decide(F("exists x. x^2 = eps", ()))
    assert sa_equal(eliminate_quantifiers(F("exists y. y > x & y < x + 1")), F("true"))
    assert sa_equal(eliminate_quantifiers(F("exists x. x^2 + y^2 < eps", ("y",))), F("y^2 < eps", ("y",)))


def test_decision_examples():
    assert decide(F("eps < 1/1000", ()))
    assert not decide(F("exists x. x^2 = -1", ()))
    assert decide(F("forall x. !(0 < x & x < 1) | eps*x < eps", ()))


def test_set_operations():
    assert sa_equal(difference(F("0 <= x & x <= 1"), F("x = 1")), F("0 <= x & x < 1"))
    disk = F("x^2 + y^2 <= 1", ("x", "y"))
    assert sa_equal(eliminate_quantifiers(projection(disk, ("x",))), F("-1 <= x & x <= 1"))
    strip = product(F("0 <= x & x <= 1"), F("true", ("y",)))
    band = product(F("true"), F("0 <= y & y <= 1", ("y",)))
    square = F("0 <= x & x <= 1 & 0 <= y & y <= 1", ("x", "y"))
    assert strip.free == ("x", "y")
    assert sa_equal(intersection(strip, band), square)
    assert sa_equal(union(F("x <= 0"), F("x >= 0")), F("true"))
    assert sa_empty(intersection(F("x < 0"), complement(F("x <= 0"))))


def test_dimension_examples():
    assert sa_dim(F("x^2 + y^2 = 1", ("x", "y"))) == 1
    assert sa_dim(F("false")) == -1
    assert sa_dim(F("y = eps*x & 0 < x & x < 1", ("x", "y"))) == 1


def test_equality_and_emptiness_examples():
    assert sa_equal(F("x^2 >= 0"), F("true"))
    assert sa_empty(F("x < x"))


CAD_INPUTS = [
    ("x^2 + y^2 - 1",),
    ("y - x^2", "y - 1/2"),
    ("x*y - 1", "x - y"),
    ("y^2 - x^3", "x - 1"),
]


def _polys(texts):
    vs = ("x", "y")
    return [parse_formula(f"{t} = 0", vs).node.normal()[0] for t in texts]


@pytest.mark.parametrize("texts", CAD_INPUTS)
def test_cells_partition_the_plane(texts):
    cad = CAD(_polys(texts), ["x", "y"], thom=True)
    regions = [cells_to_formula(cad, 2, {id(c)}) for c in cad.cells]
    rng = np.random.default_rng(7)
    # small denominators so that points land on sections as well
    pts = [(fmpq(int(a), 4), fmpq(int(b), 4)) for a, b in rng.integers(-8, 9, size=(1000, 2))]
    for p in pts:
        hits = sum(truth_at(R, {"x": p[0], "y": p[1]}) for R in regions)
        assert hits == 1, p


@pytest.mark.parametrize("texts", CAD_INPUTS)
def test_cylindricity(texts):
    cad = CAD(_polys(texts), ["x", "y"], thom=True)
    for c in cad.cells:
        region = SAFormula(cells_to_formula(cad, 2, {id(c)}), ("x", "y"))
        base = SAFormula(cells_to_formula(cad, 1, {id(c.parent)}), ("x",))
        assert sa_equal(eliminate_quantifiers(projection(region, ("x",))), base)


QE_CASES = [
    ("exists x. x^2 + a*x + b = 0", ("a", "b")),
    ("exists x. x^2 + a^2 < b + eps", ("a", "b")),
    ("forall x. a*x^2 + b*x + 1 > 0", ("a", "b")),
    ("exists x. x > a & x < b & x^2 < eps", ("a", "b")),
]
_qe_cache = {}


def _eliminated(text, vs):
    key = (text, vs)
    if key not in _qe_cache:
        _qe_cache[key] = eliminate_quantifiers(parse_formula(text, vs))
    return _qe_cache[key]


@settings(max_examples=200)
@given(st.sampled_from(QE_CASES), st.fractions(-3, 3, max_denominator=4), st.fractions(-3, 3, max_denominator=4))
def test_quantifier_elimination_is_sound(case, a, b):
    text, vs = case
    vals = {"a": fmpq(a.numerator, a.denominator), "b": fmpq(b.numerator, b.denominator)}
    original = substitute(parse_formula(text, vs).node, vals)
    reduced = substitute(_eliminated(text, vs).node, vals)
    assert decide(original) == decide(reduced)


# sets whose eps-features are either absent or far above the grid scale
DIM_CATALOG = [
    ("x^2 + y^2 < 1 + eps", 2), ("x^2 + y^2 = 1 + eps", 1), ("x = eps & y = 0", 0), ("false", -1),
    ("y = eps*x & 0 < x & x < 1", 1), ("0 < x & x < 1 & 0 < y & y < 1", 2), ("x*y = 1/2 & x > 0", 1),
    ("y = x^2 & -1 < x & x < 1", 1), ("x^2 + y^2 <= 1 & y >= 0", 2), ("x = 1/2 | y = 1/2", 1),
    ("(x^2 + y^2 - 1)*(x - 1/4) = 0 & y > 0", 1), ("x^2 = 1/4 & y^2 = 1/4", 0),
    ("y^2 = x^3 + eps & x < 1", 1), ("x < y", 2), ("x^2 + y^2 < 1 & x + y > 1/2 + eps", 2),
]


def _box_dimension(text):
    X = parse_formula(text, ("x", "y"))
    S = slice_at(X, fmpq(1, 10000))
    counts = [pixel_image(S.node, S.free, axes(1.28, h)).sum() for h in (0.02, 0.01)]
    if counts[1] == 0:
        return -1
    return int(round(math.log2(counts[1] / counts[0])))


@pytest.mark.parametrize("text,dim", DIM_CATALOG)
def test_dimension_agrees_with_box_counting(text, dim):
    assert sa_dim(parse_formula(text, ("x", "y"))) == dim
    assert _box_dimension(text) == dim
