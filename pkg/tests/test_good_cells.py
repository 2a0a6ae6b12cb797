from functools import reduce

import pytest
from flint import fmpq

from stpart.catalog import EXPRESSIONS
from stpart.good_cells import (Difference, GoodCellError, StAtom, Union, cell_at, compose_projection, degenerate_projection, evaluate,
                               good_cell_as_difference, good_decomposition_box, good_decomposition_Rn,
                               make_induced_fn, normal_form_ind, point_cell, project_st_over_degenerate,
                               union_of_differences)
from stpart.grammar import parse_expression, parse_formula
from stpart.semialgebraic import sa_empty, sa_equal

XY = ("x", "y")


def F(text, vs=("x",)):
    return parse_formula(text, vs)


@pytest.fixture(scope="module")
def unit():
    """Decomposition of I with (0, 1) as a cell."""
    return good_decomposition_box([F("0 < x & x < 1")])


@pytest.fixture(scope="module")
def square():
    return good_decomposition_box([F("0 < x & x < 1 & 0 < y & y < 1", XY)])


@pytest.fixture(scope="module")
def strip():
    return good_decomposition_box([F("0 < x & x < 1 & 0 < y & y < eps", XY)])


def test_one_dimensional_box():
    dec = good_decomposition_box([F("eps < x & x < 1 - eps")])
    assert dec.ok()
    regions = [c.region for c in dec.cells]
    expected = ["x = -1", "-1 < x & x < 0", "x = 0", "0 < x & x < 1", "x = 1"]
    assert len(regions) == len(expected)
    for r, e in zip(regions, expected):
        assert sa_equal(r, F(e))
    assert [c.itype for c in dec.cells] == [(0,), (1,), (0,), (1,), (0,)]


def test_cells_partition_and_refine(strip):
    assert strip.ok()
    assert all(c.is_open() == all(c.itype) for c in strip.cells)
    # the segment [0,1] x {0} is a union of cells, containing the graph of 0 over (0,1)
    seg = cell_at(strip, [fmpq(1, 2), 0])
    assert seg.itype == (1, 0) and seg.shape == "graph"
    assert sa_equal(seg.region, F("0 < x & x < 1 & y = 0", XY))
    # projections of the cells are exactly the base cells
    assert {id(c.base) for c in strip.cells} == {id(c) for c in strip.base.cells}


def test_disk_refines_closed_disk():
    dec = good_decomposition_box([F("x^2 + y^2 < 1 - eps", XY)])
    assert dec.ok()
    disk = F("x^2 + y^2 <= 1", XY)
    for c in dec.cells:
        inside = sa_empty(parse_formula(f"({c.region}) & x^2 + y^2 > 1", XY))
        outside = sa_empty(parse_formula(f"({c.region}) & x^2 + y^2 <= 1", XY))
        assert inside or outside
    assert sa_equal(dec.st_sets[0], disk)


def test_input_outside_box():
    with pytest.raises(GoodCellError):
        good_decomposition_box([F("0 < x & x < 2")])


@pytest.mark.parametrize("text,st", [("x = x", "x = x"), ("x > 1/eps", "false"), ("x > 0", "x >= 0")])
def test_decomposition_of_R(text, st):
    dec = good_decomposition_Rn([F(text)])
    assert dec.ok()
    assert sa_equal(dec.st_sets[0], F(st))
    covered = [c for c in dec.cells if sa_empty(parse_formula(f"({c.region}) & !({st})", ("x",)))]
    assert sa_equal(F(" | ".join(f"({c.region})" for c in covered) or "false"), F(st))


def test_induced_perturbation_vanishes():
    C = cell_at(good_decomposition_box([F("-1 < x & x < 1")]), [0])
    g = make_induced_fn(F("t = x^2 + eps*x & -1 <= x & x <= 1", ("x", "t")), C)
    assert sa_equal(g.graph_st, F("t = x^2 & -1 < x & x < 1", ("x", "t")))
    for k in range(-9, 10):
        a = fmpq(k, 10)
        assert abs(g.value_at([a]) - float(a) ** 2) < 1e-12


def test_induced_zero(unit):
    C = cell_at(unit, [fmpq(1, 2)])
    g = make_induced_fn(F("x*t = eps & eps < x & x < 1", ("x", "t")), C)
    assert sa_equal(g.graph_st, F("t = 0 & 0 < x & x < 1", ("x", "t")))


def test_induced_reciprocal(unit):
    # every point of the monad of (0,1) has 1/x finite, so 1/x is induced
    C = cell_at(unit, [fmpq(1, 2)])
    g = make_induced_fn(F("x*t = 1 & eps < x & x < 1", ("x", "t")), C)
    assert sa_equal(g.graph_st, F("x*t = 1 & 0 < x & x < 1", ("x", "t")))


def test_not_induced(unit):
    C = cell_at(unit, [fmpq(1, 2)])
    # a jump of infinitesimal width at 1/2 makes the fibre there a segment
    with pytest.raises(GoodCellError, match="not induced"):
        make_induced_fn(F("eps*t = x - 1/2 & -eps <= t & t <= 1 & 0 <= x & x <= 1 | "
                          "t = 1 & x - 1/2 > eps^2 & x <= 1 | t = -eps & 0 <= x & x - 1/2 < -eps^2",
                          ("x", "t")), C)
    with pytest.raises(GoodCellError, match="precondition"):
        make_induced_fn(F("t = x & 1/2 < x & x < 1", ("x", "t")), C)


def test_compose_projection(unit, square):
    C = cell_at(square, [fmpq(1, 2), fmpq(1, 2)])
    assert C.itype == (1, 1)
    g = make_induced_fn(F("t = x^2 & 0 <= x & x <= 1", ("x", "t")), C.base)
    h = compose_projection(g, C, [0])
    vs = h.graph_st.free
    assert sa_equal(h.graph_st, F(f"{vs[2]} = x^2 & 0 < x & x < 1 & 0 < y & y < 1", vs))
    with pytest.raises(GoodCellError):
        compose_projection(g, C, [2])


def test_cell_as_difference_one_dim(unit):
    for C in unit.cells:
        X, Y, cert = good_cell_as_difference(C)
        assert cert.ok
    X, Y, cert = good_cell_as_difference(point_cell())
    assert cert.ok and str(Y) == "false"


def test_cell_as_difference_graph():
    dec = good_decomposition_box([F("y = x^2 & 0 <= x & x <= 1", XY)])
    C = cell_at(dec, [fmpq(1, 2), fmpq(1, 4)])
    assert C.itype == (1, 0)
    X, Y, cert = good_cell_as_difference(C)
    assert cert.ok


def test_degenerate_projection_graph(strip):
    C = cell_at(strip, [fmpq(1, 2), 0])
    E = cell_at(good_decomposition_box([F("0 < x & x < 1/2")]), [fmpq(1, 4)])
    D = degenerate_projection(C, 1, E)
    assert D.itype == (1, 0)
    assert sa_equal(D.region, F("0 < x & x < 1/2 & y = 0", XY))


def test_degenerate_projection_vertical():
    dec = good_decomposition_box([F("x = 0 & 0 < y & y < 1", XY)])
    C = cell_at(dec, [0, fmpq(1, 2)])
    assert C.itype == (0, 1)
    E = cell_at(good_decomposition_box([F("0 < x & x < 1/2")]), [fmpq(1, 4)])
    D = degenerate_projection(C, 0, E)
    assert sa_equal(D.region, F("x = 0 & 0 < y & y < 1/2", XY))
    with pytest.raises(GoodCellError):
        degenerate_projection(C, 1, E)


def test_project_over_degenerate(strip):
    C = cell_at(good_decomposition_box([F("x = 0")]), [0])
    # X = graph of eps*x over I(R); over C = {0}, pi drops x
    A, B, cert = project_st_over_degenerate(F("y = eps*x & -1 <= x & x <= 1", XY), C, 0)
    assert cert.ok
    empty = project_st_over_degenerate(F("false", XY), C, 0)
    assert empty[0].is_empty() and empty[1].is_empty()


@pytest.mark.parametrize("text,expected", [
    ('(not (st "0 <= x & x <= 1"))', "x < 0 | x > 1"),
    ('(minus (st "0 <= x & x <= 1") (st "x = 1"))', "0 <= x & x < 1"),
])
def test_normal_form_examples(text, expected):
    pairs, cert = normal_form_ind(parse_expression(text))
    assert cert.ok
    assert sa_equal(union_of_differences(pairs, ("x",)), F(expected))


@pytest.mark.parametrize("text,hand,arity", EXPRESSIONS[:6])
def test_normal_form_fixpoint(text, hand, arity):
    expr = parse_expression(text)
    vs = ("x", "y")[:arity]
    assert sa_equal(evaluate(expr), F(hand, vs))
    pairs, cert = normal_form_ind(expr, shrink=arity == 1)
    assert cert.ok
    # normalizing the normal form, read as an expression, gives the same set
    again = union_of_differences(pairs, vs)
    terms = [Difference(StAtom(X), StAtom(Y)) for X, Y in pairs]
    pairs2, cert2 = normal_form_ind(reduce(Union, terms))
    assert cert2.ok
    assert sa_equal(union_of_differences(pairs2, vs), again)
