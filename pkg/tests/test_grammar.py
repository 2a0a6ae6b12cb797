import numpy as np
import pytest
from hypothesis import given, strategies as st

from stpart.formula import Quant, float_mask
from stpart.grammar import ParseError, parse_expression, parse_formula, parse_term
from stpart.good_cells import Complement, Difference, Project, ProductR, StAtom

CORPUS = [
    "0 < x & x < 1 - eps",
    "exists y. x*y = eps & 0 < x",
    "x^2 + y^2 < 1 + eps",
    "x = 0 | x = 1",
    "!(x < 0)",
    "forall x. x^2 >= 0",
    "eps*x^2 < 1 & 0 < x",
    "x^3 - eps^2*x > 0",
    "x*y = 1",
    "y = x/eps & 0 <= x & x <= eps",
    "x^2 - x + 1/4 < 1/4 + eps",
    "x != 0",
    "true",
    "false",
    "x <= 1 | y >= 2 & z = 3",
    "exists x. forall y. x*y <= x",
    "2*x + 3/4*y = 1",
    "x - y = 0 & !(x = 1 | y = 2)",
    "x*y = eps & eps <= x & x <= 1",
    "0 < x & x < 1 & 0 < y & y < eps",
    "0 < x & x < 1/eps & 0 < y & y < eps*x",
    "x^2 + y^2 < eps^2",
    "y^2 = x^3 + eps^2 & 0 <= x & x <= 1",
    "1 - eps < x^2 + y^2 & x^2 + y^2 < 1 + eps",
    "x^2 + eps*y^2 < 1",
    "eps*x = 1 | 0 < x & x < 1/2",
    "-1 <= x & x <= 1 & -1 <= y & y <= 1",
    "x^2 != eps^2 & -1 < x & x < 1",
    "exists x. x^2 + y^2 < eps",
    "forall y. !(0 < y & y < 1) | eps*y < eps",
    "exists y. exists z. x = y + z & y*z = 1",
    "1/2*x + 1/3*y <= 1",
    "x^4 - 3*x^2 < -1",
    "!(x = 0) & !(y = 0)",
    "(x < 0 | y < 0) & x + y > -1",
    "x < y & y < z",
    "eps^3*x > 1",
    "x*y*z = eps",
    "x = 1/3 & y = -2/7",
    "-x < 1",
    "x^2*y - y^3 = 0",
    "!(x < 1 & 0 < y)",
    "exists x. x^2 = eps",
    "eps < 1/1000",
    "x + eps*y + eps^2*z = 0",
    "forall x. exists y. y > x",
    "(x - y)/(1 + eps) < 1",
    "x^2 < eps | 1 < x & x < 3/2",
    "x^2 - x = eps",
    "0 <= x & x <= 1 & 0 <= y & y <= 1 & x^2 + y^2 - x - y + 1/2 > eps",
]


def squash(text):
    return "".join(text.split())


def test_corpus_size():
    assert len(CORPUS) == 50


@pytest.mark.parametrize("text", CORPUS)
def test_printer_inverts_parser(text):
    printed = str(parse_formula(text))
    assert squash(printed) == squash(text)
    assert str(parse_formula(printed)) == printed


NORMALIZED = [
    ("x > 0", "0 < x"),
    ("(x - 1/2)^2 < 1/4 + eps", "x^2 - x + 1/4 < 1/4 + eps"),
    ("x/2 + y/3 <= 1", "1/2*x + 1/3*y <= 1"),
    ("!(!(x < 1))", "x < 1"),
    ("x*(x - 1) = eps", "x^2 - x = eps"),
]


@pytest.mark.parametrize("text,printed", NORMALIZED)
def test_printer_normalizes(text, printed):
    assert str(parse_formula(text)) == printed
    assert str(parse_formula(printed)) == printed


def test_parse_examples():
    f = parse_formula("0 < x & x < 1 - eps", 1)
    assert f.free == ("x",)
    assert str(f) == "0 < x & x < 1 - eps"
    g = parse_formula("exists y. x*y = eps & 0 < x", ("x",))
    assert isinstance(g.node, Quant) and g.node.var == "y"


def test_syntax_error_position():
    with pytest.raises(ParseError) as err:
        parse_formula("x <")
    assert err.value.column == 4


def test_undeclared_variable():
    with pytest.raises(ParseError, match="undeclared"):
        parse_formula("x + y < 1", ("x",))


def test_precedence():
    # ! binds tighter than &, which binds tighter than |
    f = parse_formula("!x < 0 & y = 1 | z = 2", ("x", "y", "z"))
    assert str(f) == "!(x < 0) & y = 1 | z = 2"
    # a quantifier extends to the end of the enclosing parenthesis
    g = parse_formula("(exists y. x < y & y < 1) | x = 5", ("x",))
    assert str(g) == "(exists y. x < y & y < 1) | x = 5"


def test_terms():
    num, den = parse_term("(x^2 + eps)/(1 + eps*x)", ("x",))
    assert str(num) == "e + x^2"
    assert str(den) == "e*x + 1"


def test_expressions():
    e = parse_expression('(minus (times-r (st "-1 <= x & x <= 1")) (st "x^2 + y^2 < 1"))')
    assert isinstance(e, Difference) and isinstance(e.left, ProductR)
    p = parse_expression('(proj (st "x^2 + y^2 < 1 + eps") 1)')
    assert isinstance(p, Project)
    assert isinstance(parse_expression('(not (st "x^2 < eps"))'), Complement)
    assert isinstance(parse_expression('(st "x = eps")'), StAtom)
    with pytest.raises(ParseError):
        parse_expression('(bogus (st "x = 1"))')


# random quantifier-free formulas in x, y without eps
coef = st.integers(-3, 3)
mono = st.sampled_from(["x", "y", "x^2", "x*y", "y^2", "x^3"])


@st.composite
def polys(draw):
    terms = draw(st.lists(st.tuples(coef, mono), min_size=1, max_size=3))
    c0 = draw(coef)
    return " + ".join(f"{c}*{m}" for c, m in terms) + f" + {c0}"


@st.composite
def formulas(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        rel = draw(st.sampled_from(["<", "<=", "=", "!=", ">=", ">"]))
        return f"{draw(polys())} {rel} {draw(polys())}"
    op = draw(st.sampled_from(["&", "|", "!"]))
    if op == "!":
        return f"!({draw(formulas(depth - 1))})"
    return f"({draw(formulas(depth - 1))}) {op} ({draw(formulas(depth - 1))})"


@given(formulas())
def test_round_trip_on_random_formulas(text):
    f = parse_formula(text, ("x", "y"))
    printed = str(f)
    g = parse_formula(printed, ("x", "y"))
    assert str(g) == printed
    rng = np.random.default_rng(0)
    pts = [rng.integers(-3, 4, 200).astype(float) / 2 for _ in range(2)]
    assert (float_mask(f.node, f.free, pts) == float_mask(g.node, g.free, pts)).all()
