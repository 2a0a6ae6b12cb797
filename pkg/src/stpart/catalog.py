"""Reference sets over Q(eps) with hand-derived standard parts and companions.

Each entry is plain text in the formula grammar so that the same data feeds
the verify suites, the command line and the tests.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class StCase:
    name: str
    formula: str
    vars: tuple
    st: str                     # closed formula over Q, written by hand
    box: float = 1.5            # half-width of the window for numeric checks
    bounded: bool = True        # bounded in R (not nec. strongly)


ST_CATALOG = [
    StCase("open interval", "eps < x & x < 1 - eps", ("x",), "0 <= x & x <= 1"),
    StCase("quadratic interval", "(x - 1/2)^2 < 1/4 + eps", ("x",), "0 <= x & x <= 1"),
    StCase("infinitesimal ball", "x^2 < eps", ("x",), "x = 0"),
    StCase("ray below 1/sqrt(eps)", "eps*x^2 < 1 & x > 0", ("x",), "x >= 0", bounded=True),
    StCase("perturbed roots", "x*(x - 1) = eps", ("x",), "x = 0 | x = 1"),
    StCase("far point and interval", "eps*x = 1 | 0 < x & x < 1/2", ("x",), "0 <= x & x <= 1/2"),
    StCase("cubic with close roots", "x^3 - eps^2*x > 0", ("x",), "x >= 0", bounded=False),
    StCase("punctured interval", "x^2 - eps^2 != 0 & -1 < x & x < 1", ("x",), "-1 <= x & x <= 1"),
    StCase("disk", "x^2 + y^2 < 1 + eps", ("x", "y"), "x^2 + y^2 <= 1"),
    StCase("circle", "x^2 + y^2 = 1 + eps", ("x", "y"), "x^2 + y^2 = 1"),
    StCase("hyperbolic arc", "x*y = eps & eps <= x & x <= 1", ("x", "y"),
           "x = 0 & 0 <= y & y <= 1 | 0 <= x & x <= 1 & y = 0"),
    StCase("thin strip", "0 < x & x < 1 & 0 < y & y < eps", ("x", "y"), "0 <= x & x <= 1 & y = 0"),
    StCase("flat wedge", "0 < x & x < 1/eps & 0 < y & y < eps*x", ("x", "y"), "x >= 0 & y = 0", bounded=True),
    StCase("square with a pinhole",
           "0 <= x & x <= 1 & 0 <= y & y <= 1 & (x - 1/2)^2 + (y - 1/2)^2 > eps", ("x", "y"),
           "0 <= x & x <= 1 & 0 <= y & y <= 1"),
    StCase("infinitesimal disk", "x^2 + y^2 < eps^2", ("x", "y"), "x = 0 & y = 0"),
    StCase("hyperbola", "x*y = 1", ("x", "y"), "x*y = 1", bounded=False),
    StCase("steep segment", "y = x/eps & 0 <= x & x <= eps", ("x", "y"), "x = 0 & 0 <= y & y <= 1"),
    StCase("smoothed cusp", "y^2 = x^3 + eps^2 & 0 <= x & x <= 1", ("x", "y"), "y^2 = x^3 & 0 <= x & x <= 1"),
    StCase("thin annulus", "1 - eps < x^2 + y^2 & x^2 + y^2 < 1 + eps", ("x", "y"), "x^2 + y^2 = 1"),
    StCase("long ellipse", "x^2 + eps*y^2 < 1", ("x", "y"), "-1 <= x & x <= 1", bounded=True),
]


# projections onto the first coordinate of bounded planar entries: st(pi X) by hand
PROJECTIONS = {
    "disk": "-1 <= x & x <= 1",
    "circle": "-1 <= x & x <= 1",
    "hyperbolic arc": "0 <= x & x <= 1",
    "thin strip": "0 <= x & x <= 1",
    "square with a pinhole": "0 <= x & x <= 1",
    "infinitesimal disk": "x = 0",
    "steep segment": "x = 0",
    "smoothed cusp": "0 <= x & x <= 1",
    "thin annulus": "-1 <= x & x <= 1",
}


# pairs X, Y in R with st X meet st Y by hand
INTERSECTION_PAIRS = [
    ("x = eps", "x = 2*eps", "x = 0"),
    ("0 < x & x < 1", "1 < x & x < 2", "x = 1"),
    ("x^2 < eps", "x > 0", "x = 0"),
    ("x = eps", "x = -eps", "x = 0"),
    ("eps < x & x < 1 - eps", "1/2 <= x & x <= 2", "1/2 <= x & x <= 1"),
    ("x*(x - 1) = eps", "x = 1", "x = 1"),
    ("x = 1 + eps", "x = 1 - eps^2", "x = 1"),
    ("0 < x & x < eps", "-eps < x & x < 0", "x = 0"),
    ("-1 < x & x < 0", "0 < x & x < 1", "x = 0"),
    ("x^2 = eps", "x^2 = 4*eps", "x = 0"),
]


# st of {x in X : f(x) > Q} (side +1) or {x in X : f(x) < Q} (side -1)
UNBOUNDED_LOCI = [
    ("0 < x & x < 1", "1/x", 1, "x = 0"),
    ("-1 < x & x < 1", "x/eps", 1, "0 <= x & x <= 1"),
    ("-1 < x & x < 1", "x/eps", -1, "-1 <= x & x <= 0"),
    ("0 < x & x < 2 & x != 1", "1/(x - 1)", 1, "x = 1"),
    ("0 < x & x < 1", "x + 1", 1, "false"),
    ("-1 < x & x < 1", "1/(x^2 + eps)", 1, "x = 0"),
]


# inputs in I(R)^n for good decompositions
GOOD_INPUTS = [
    (("eps < x & x < 1 - eps",), ("x",)),
    (("x^2 < eps", "-1/2 <= x & x <= 1/2"), ("x",)),
    (("x*(2*x - 1) = eps",), ("x",)),
    (("x^2 + y^2 < 1 + eps & -1 <= x & x <= 1 & -1 <= y & y <= 1",), ("x", "y")),
    (("0 < x & x < 1 & 0 < y & y < eps",), ("x", "y")),
    (("x*y = eps & eps <= x & x <= 1",), ("x", "y")),
    (("y = x^2 & 0 <= x & x <= 1", "0 <= y & y <= 1/2 & -1 <= x & x <= 1"), ("x", "y")),
    (("y = x/eps & 0 <= x & x <= eps",), ("x", "y")),
    (("0 <= x & x <= 1 & 0 <= y & y <= 1 & (x - 1/2)^2 + (y - 1/2)^2 > eps",), ("x", "y")),
    (("0 < x & x < 1 & 0 < y & y < x",), ("x", "y")),
]


# set expressions, in the prefix syntax of the command line
EXPRESSIONS = [
    ('(st "eps < x & x < 1 - eps")', "0 <= x & x <= 1", 1),
    ('(not (st "x^2 < eps"))', "x != 0", 1),
    ('(minus (st "0 <= x & x <= 1") (st "x = eps"))', "0 < x & x <= 1", 1),
    ('(times-r (st "x*(x - 1) = eps"))', "x = 0 | x = 1", 2),
    ('(proj (st "x^2 + y^2 < 1 + eps") 1)', "-1 <= x & x <= 1", 1),
    ('(or (st "x = eps") (st "x = 1 + eps"))', "x = 0 | x = 1", 1),
    ('(and (st "x^2 + y^2 <= 1 + eps") (not (st "0 < x & x < 1 & 0 < y & y < eps")))',
     "x^2 + y^2 <= 1 & !(0 <= x & x <= 1 & y = 0)", 2),
    ('(proj (st "x*y = eps & eps <= x & x <= 1") 1)', "0 <= x & x <= 1", 1),
    ('(minus (times-r (st "-1 <= x & x <= 1")) (st "x^2 + y^2 < 1"))', "-1 <= x & x <= 1 & x^2 + y^2 > 1", 2),
    ('(not (proj (st "y = x/eps & 0 <= x & x <= eps") 1))', "x != 0", 1),
]


CONNECTED = [
    ("x^2 + y^2 = 1", ("x", "y")),
    ("x*y = eps & eps <= x & x <= 1", ("x", "y")),
    ("eps < x & x < 1 - eps", ("x",)),
    ("0 < x & x < 1 & 0 < y & y < eps", ("x", "y")),
    ("y^2 = x^3 + eps^2 & 0 <= x & x <= 1", ("x", "y")),
]

DISCONNECTED = [
    ("x = eps | x = 1", ("x",)),
    ("x*(x - 1) = eps", ("x",)),
    ("(x^2 + y^2 - 1)*((x - 3)^2 + y^2 - 1) = 0 & x^2 <= 16", ("x", "y")),
]


# measure suite
MEASURE_CASES = [
    ("eps < x & x < 1 - eps", ("x",), "1"),
    ("x^2 + y^2 < 1 + eps", ("x", "y"), "pi"),
    ("0 <= x & x <= 1 & y = 0", ("x", "y"), "0"),
    ("(x - 1/2)^2 < 1/4 + eps", ("x",), "1"),
    ("0 < x & x < 1 & 0 < y & y < x^2 + eps", ("x", "y"), "1/3"),
    ("x^2/4 + y^2 < 1", ("x", "y"), "2*pi"),
]

# disjoint pairs (their union is the first formula or'ed with the second)
ADDITIVITY_PAIRS = [
    ("0 < x & x < 1/2", "1/2 + eps < x & x < 1", ("x",)),
    ("x^2 + y^2 < 1 & y > 0", "x^2 + y^2 < 1 & y < -eps", ("x", "y")),
    ("0 < x & x < 1 & 0 < y & y < x", "0 < x & x < 1 & x < y & y < 1", ("x", "y")),
    ("x^2 + y^2 < 1/4", "1/4 < x^2 + y^2 & x^2 + y^2 < 1", ("x", "y")),
    ("0 < x & x < 1 & 0 < y & y < x^2", "0 < x & x < 1 & x^2 + eps < y & y < 1", ("x", "y")),
]

# measure-preserving maps (components in the grammar) and sets to move
INVARIANCE_CASES = [
    (("x + eps",), ("x",), "0 < x & x < 1"),
    (("x - 1/3 + eps", "y + 2*eps"), ("x", "y"), "x^2 + y^2 < 1"),
    (("x + y", "y"), ("x", "y"), "0 < x & x < 1 & 0 < y & y < 1"),
    (("x", "y - 2*x"), ("x", "y"), "x^2 + y^2 < 1 + eps"),
    (("x + 3*y", "y"), ("x", "y"), "0 < x & x < 1 & 0 < y & y < x^2"),
]


# functions for derivative commutation: (term, domain, variables, point inside the cell)
DERIVATIVE_CASES = [
    ("x^2 + eps*x", "-1 < x & x < 1", ("x",), ("1/2",)),
    ("eps/x", "eps < x & x < 1", ("x",), ("1/2",)),
    ("x^3 - 2*x + eps", "-1 < x & x < 1", ("x",), ("1/2",)),
    ("1/(x + 2) + eps*x^2", "-1 < x & x < 1", ("x",), ("1/2",)),
    ("(x^2 + eps)/(1 + eps*x)", "-1 < x & x < 1", ("x",), ("1/2",)),
    ("x/(x^2 + 1)", "-1 < x & x < 1", ("x",), ("1/2",)),
    ("x*y + eps*(x - y)", "-1 < x & x < 1 & -1 < y & y < 1", ("x", "y"), ("0", "0")),
    ("x^2 - y^2 + eps*x*y", "-1 < x & x < 1 & -1 < y & y < 1", ("x", "y"), ("0", "0")),
    ("(x + y)/(2 + x*y)", "-1 < x & x < 1 & -1 < y & y < 1", ("x", "y"), ("0", "0")),
    ("x^3*y + eps/(1 + x^2)", "-1 < x & x < 1 & -1 < y & y < 1", ("x", "y"), ("0", "0")),
]


QBOX_CASES = [
    ("(x - 1/2)^2 < 1/4 + eps", ("x",), ("1/4", "3/4")),
    ("-1 <= x & x <= 1 & -1 <= y & y <= 1", ("x", "y"), None),
    ("x^2 + y^2 < 1 + eps", ("x", "y"), None),
    ("eps < x & x < 1 - eps & eps < y & y < x", ("x", "y"), None),
    ("x^2 < eps | 1 < x & x < 3/2", ("x",), None),
]

NULL_CASES = [
    ("0 <= x & x <= 1 & y = 0", ("x", "y")),
    ("x^2 < eps", ("x",)),
    ("x^2 + y^2 = 1 + eps", ("x", "y")),
]
