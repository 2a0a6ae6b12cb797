"""Closures, connectedness and measure of standard parts.

Closed good cells are realised as st of a shrinking family at r = eps,
connectedness of st X is read off cell adjacency, and the measure of a
strongly bounded X is the Lebesgue measure of st X, integrated over the open
cells of the Q-CAD of st X. Volumes of nonnegative functions integrate the
induced functions over the open cells of a decomposition; isomorphisms are
checked through the dimension of their failure locus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from typing import Sequence

import mpmath
from flint import fmpq, fmpq_poly

from .adjacency import closure_formula, components
from .cad import DEFAULT_BUDGET, Budget, Cell
from .certificate import Certificate, check
from .exact_algebra import EPS, FieldElem, Poly, coeffs_in, convert, degree_in, fe_st, names_of, ring, to_upoly, used_vars
from .formula import (
    FALSE, TRUE, Node, Quant, SAFormula, atoms, conj, disj, float_mask, make_atom, map_atoms, neg, poly_ring,
    rename,
)
from .good_cells import GoodCell, GoodCellError, make_induced_fn, shrink_formula
from .realalg import RealAlg, real_roots
from .semialgebraic import (
    cells_to_formula, contains_point, decide, eliminate_quantifiers, sa_dim, sa_empty, sa_equal, simplify,
)
from .st_operator import StError, StSet, cell_coord, is_bounded, st_set, strong_bound

PREC = 40  # decimal digits for quadrature


class IsomorphismError(ValueError):
    """A supplied witness failed verification."""

    def __init__(self, report: "IsoReport"):
        bad = [c.claim for c in report.certificates if not c.ok]
        super().__init__(f"witness rejected: {bad}")
        self.report = report


# ---------------------------------------------------------------------------
# closed cells as standard parts


@dataclass
class ShrinkFamily:
    """A definable family X_r (0 < r < r0), decreasing in r, inside a cell."""

    param: str
    formula: SAFormula      # free variables: the cell's, then param
    r0: fmpq = fmpq(1)

    def at(self, value=None) -> SAFormula:
        """X_value for a rational value, or X_eps when value is None."""
        vs = self.formula.free[:-1]
        if value is None:
            return SAFormula(rename(self.formula.node, {self.param: EPS}), vs)
        from .formula import substitute

        return SAFormula(substitute(self.formula.node, {self.param: fmpq(value)}), vs)

    def monotone_certificate(self, budget: Budget = DEFAULT_BUDGET) -> Certificate:
        """Decide that X_s is inside X_r whenever 0 < r < s < r0."""
        vs = self.formula.free[:-1]
        r, s = self.param, self.param + "_"
        Xs = rename(self.formula.node, {r: s})
        ctx = poly_ring((r, s))
        gr, gs = ctx.gens()[1], ctx.gens()[2]
        guard = conj([make_atom(gr, ">"), make_atom(gs - gr, ">"), make_atom(gs - self.r0, "<")])
        body = neg(conj([guard, Xs, neg(self.formula.node)]))
        for v in reversed(tuple(vs) + (r, s)):
            body = Quant("forall", v, body)
        return check("the family decreases in r", "decide", decide(body, budget))


def shrink_family(C: GoodCell) -> ShrinkFamily:
    X = shrink_formula(C)
    vs = C.variables
    return ShrinkFamily("r", SAFormula(rename(X.node, {EPS: "r"}), tuple(vs) + ("r",)))


def closure_as_st(C: GoodCell, budget: Budget = DEFAULT_BUDGET) -> tuple[SAFormula, Certificate]:
    """X over Q(eps) with st X equal to the closure of C."""
    if C.n == 0:
        return SAFormula(TRUE, ()), check("point cell", "trivial", True)
    X = simplify(shrink_family(C).at(), budget)
    got = st_set(X, budget).formula
    want = closure_formula(C.region, budget)
    cert = check("st X equals the closure of the cell", "st_set + sa_equal", sa_equal(got, want, budget),
                 X=str(X), closure=str(want))
    return X, cert


# ---------------------------------------------------------------------------
# connectedness


@dataclass
class Connectivity:
    connected: bool
    st: StSet
    parts: list                         # one formula per component
    witness: tuple | None = None        # (A, B) separating clopen pair
    certificates: list = field(default_factory=list)

    def record(self) -> dict:
        return {
            "connected": self.connected,
            "st": str(self.st.formula),
            "components": [str(p) for p in self.parts],
            "witness": [str(w) for w in self.witness] if self.witness else None,
            "certificates": [c.record() for c in self.certificates],
        }


def is_connected_st(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> Connectivity:
    """Whether st X is connected, for strongly bounded X.

    Cells of st X are joined when one meets the closure of the other; a
    disconnection comes with a separating pair (A, B) whose properties are
    each decided.
    """
    if strong_bound(X, budget) is None:
        raise StError("X is not strongly bounded")
    S = st_set(X, budget)
    n, vs = X.arity, X.free
    comps = components(S.cad, S.members)
    parts = [SAFormula(cells_to_formula(S.cad, n, {id(c) for c in comp}), vs) for comp in comps]
    if len(comps) <= 1:
        return Connectivity(True, S, parts)
    A = parts[0]
    B = SAFormula(cells_to_formula(S.cad, n, {id(c) for comp in comps[1:] for c in comp}), vs)
    certs = [
        check("A is nonempty", "sa_empty", not sa_empty(A, budget)),
        check("B is nonempty", "sa_empty", not sa_empty(B, budget)),
        check("A and B are disjoint", "sa_empty", sa_empty(SAFormula(conj([A.node, B.node]), vs), budget)),
        check("A union B is st X", "sa_equal", sa_equal(SAFormula(disj([A.node, B.node]), vs), S.formula, budget)),
        check("A is closed", "closure + sa_equal", sa_equal(closure_formula(A, budget), A, budget)),
        check("B is closed", "closure + sa_equal", sa_equal(closure_formula(B, budget), B, budget)),
    ]
    return Connectivity(False, S, parts, (A, B), certs)


# ---------------------------------------------------------------------------
# measure values


@dataclass
class MeasureValue:
    value: float
    radius: float = 0.0
    exact: bool = False
    method: str = ""
    rational: Fraction | None = None    # the exact value when exact
    note: str = ""

    def __add__(self, other: "MeasureValue") -> "MeasureValue":
        exact = self.exact and other.exact
        rat = self.rational + other.rational if exact else None
        value = float(rat) if exact else self.value + other.value
        return MeasureValue(value, 0.0 if exact else self.radius + other.radius, exact,
                            self.method if self.method == other.method else "sum", rat)

    def agrees(self, other: "MeasureValue", factor: float = 1.0) -> bool:
        """|a - b| within factor times the summed radii (plus float rounding)."""
        if math.isinf(self.value) or math.isinf(other.value):
            return self.value == other.value
        if self.exact and other.exact:
            return self.rational == other.rational
        slack = 1e-12 * max(1.0, abs(self.value))
        return abs(self.value - other.value) <= factor * (self.radius + other.radius) + slack

    def record(self) -> dict:
        out = {"value": self.value, "radius": self.radius, "exact": self.exact, "method": self.method}
        if self.rational is not None:
            out["rational"] = str(self.rational)
        if self.note:
            out["note"] = self.note
        return out


def _exact(q) -> MeasureValue:
    q = Fraction(int(q.p), int(q.q)) if isinstance(q, fmpq) else Fraction(q)
    return MeasureValue(float(q), 0.0, True, "exact", q)


def _frac(q: fmpq) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _mp(r: RealAlg):
    if r.value is not None:
        return mpmath.mpf(int(r.value.p)) / int(r.value.q)
    r.refine_to(fmpq(1, 2 ** (4 * PREC)))
    m = (r.lo + r.hi) / 2
    return mpmath.mpf(int(m.p)) / int(m.q)


# ---------------------------------------------------------------------------
# sections of a CAD of the plane as functions of x


@dataclass
class SectionFn:
    """y = the k-th of m real roots of g(x, .) over a base sector."""

    g: Poly
    x: str
    y: str
    k: int
    m: int

    def linear(self):
        """(c, h) with g = c*y + h(x), c rational, or None."""
        if degree_in(self.g, self.y) != 1:
            return None
        cs = coeffs_in(self.g, self.y)
        if used_vars(cs[1]):
            return None
        return cs[1], cs[0]

    def __call__(self, xv):
        cs = coeffs_in(self.g, self.y)
        vals = []
        for c in reversed(cs):
            u = to_upoly(c, self.x) if used_vars(c) else fmpq_poly([c.coeffs()[0] if not c.is_zero() else 0])
            acc = mpmath.mpf(0)
            for a in reversed(u.coeffs()):
                acc = acc * xv + mpmath.mpf(int(a.p)) / int(a.q)
            vals.append(acc)
        while len(vals) > 1 and vals[0] == 0:
            vals.pop(0)
        if len(vals) == 2:
            return -vals[1] / vals[0]
        roots = mpmath.polyroots(vals, maxsteps=200, extraprec=4 * PREC)
        roots = sorted(roots, key=lambda z: abs(mpmath.im(z)))[: self.m]
        reals = sorted(mpmath.re(z) for z in roots)
        return reals[self.k]


def section_fn(cad, sec: Cell) -> SectionFn:
    """The section cell sec over a base sector as a root function."""
    base = sec.parent
    q = base.rational_coords()[0]
    x, y = cad.variables[0], cad.variables[1]
    target = cell_coord(sec)
    for g, s in zip(cad.levels[1], sec.signs):
        if s != 0:
            continue
        u = g.subs({x: q})
        rts = real_roots(to_upoly(u, y))
        for k, r in enumerate(rts):
            if r.cmp(target) == 0:
                return SectionFn(g, x, y, k, len(rts))
    raise RuntimeError("no vanishing factor found for a section")


def _poly_integral(h: Poly, x: str, c, a: fmpq, b: fmpq) -> fmpq:
    """Exact integral over [a, b] of -h(x)/c."""
    u = to_upoly(h, x) if used_vars(h) else fmpq_poly([h.coeffs()[0] if not h.is_zero() else 0])
    U = u.integral()
    return -(U(b) - U(a)) / c


def integrate_between(lo: SectionFn | None, hi: SectionFn | None, a: RealAlg, b: RealAlg,
                      radius: float) -> MeasureValue:
    """Integral over [a, b] of hi - lo (a missing function is 0)."""
    fns = [f for f in (lo, hi) if f is not None]
    lins = [f.linear() for f in fns]
    if all(l is not None for l in lins) and a.is_rational() and b.is_rational():
        total = fmpq(0)
        for f, (c, h) in zip(fns, lins):
            cq = c.coeffs()[0]
            val = _poly_integral(h, f.x, cq, a.value, b.value)
            total += val if f is hi else -val
        return _exact(total)
    with mpmath.workdps(PREC):
        am, bm = _mp(a), _mp(b)

        def integrand(t):
            top = hi(t) if hi is not None else 0
            bot = lo(t) if lo is not None else 0
            return top - bot

        val, err = mpmath.quad(integrand, [am, bm], error=True, maxdegree=8)
        if err > radius / 10:
            mid = (am + bm) / 2
            val, err = mpmath.quad(integrand, [am, mid, bm], error=True, maxdegree=10)
        # endpoint enclosures are far below the quadrature error; add float rounding
        err = float(err) + abs(float(val)) * 2.0 ** -52 + 1e-30
        return MeasureValue(float(val), err, False, "quadrature")


def _sum(values: list[MeasureValue], method: str) -> MeasureValue:
    out = _exact(0)
    for v in values:
        out = out + v
    out.method = method if not out.exact else "exact"
    return out


# ---------------------------------------------------------------------------
# measure of standard parts


def measure_of_st(S: StSet, radius: float = 1e-9) -> MeasureValue:
    """Lebesgue measure of st X given as an StSet."""
    n = S.arity
    if S.dim() < n:
        return MeasureValue(0.0, 0.0, True, "dimension", Fraction(0))
    if n == 1:
        vals = []
        for piece in S.intervals:
            if piece.lo is None or piece.hi is None:
                return MeasureValue(math.inf, 0.0, False, "unbounded")
            if piece.lo.is_rational() and piece.hi.is_rational():
                vals.append(_exact(piece.hi.value - piece.lo.value))
            else:
                with mpmath.workdps(PREC):
                    vals.append(MeasureValue(float(_mp(piece.hi) - _mp(piece.lo)), 1e-30, False, "algebraic ends"))
        return _sum(vals, "intervals")
    if n != 2:
        raise StError("measure is implemented for n = 1, 2")
    cad = S.cad
    bases = cad.cells_by_level[0]
    pos = {id(b): i for i, b in enumerate(bases)}
    vals = []
    for c in S.members:
        if c.dim != 2:
            continue
        base = c.parent
        i = pos[id(base)]
        if i == 0 or i == len(bases) - 1:
            return MeasureValue(math.inf, 0.0, False, "unbounded")
        kids = base.children
        j = kids.index(c)
        if j == 0 or j == len(kids) - 1:
            return MeasureValue(math.inf, 0.0, False, "unbounded")
        lo, hi = section_fn(cad, kids[j - 1]), section_fn(cad, kids[j + 1])
        a, b = cell_coord(bases[i - 1]), cell_coord(bases[i + 1])
        vals.append(integrate_between(lo, hi, a, b, radius))
    return _sum(vals, "quadrature")


def measure_st(X: SAFormula, radius: float = 1e-9, budget: Budget = DEFAULT_BUDGET) -> MeasureValue:
    """lambda(st X) for strongly bounded X in R^1 or R^2."""
    if strong_bound(X, budget) is None:
        raise StError("X is not strongly bounded")
    return measure_of_st(st_set(X, budget), radius)


# ---------------------------------------------------------------------------
# rational boxes


@dataclass
class QBoxResult:
    verdict: str                    # "box", "interior empty", "violated"
    box: tuple | None = None        # ((lo, hi), ...) with rational ends
    level: int | None = None
    certificates: list = field(default_factory=list)

    def record(self) -> dict:
        return {
            "verdict": self.verdict,
            "box": [[str(a), str(b)] for a, b in self.box] if self.box else None,
            "level": self.level,
            "certificates": [c.record() for c in self.certificates],
        }


def box_formula(variables, box) -> Node:
    ctx = poly_ring(variables)
    parts = []
    for j, (a, b) in enumerate(box, start=1):
        g = ctx.gens()[j]
        parts += [make_atom(g - a, ">="), make_atom(g - b, "<=")]
    return conj(parts)


def _corners(a: fmpq, h: fmpq) -> list[fmpq]:
    """Lower corners k*h/2 of intervals [c, c+h] containing a, increasing."""
    step = h / 2
    k0 = math.ceil(_frac(a - h) / _frac(step))
    k1 = math.floor(_frac(a) / _frac(step))
    return [step * k for k in range(k0, k1 + 1)]


def contains_qbox(X: SAFormula, depth: int = 12, budget: Budget = DEFAULT_BUDGET) -> QBoxResult:
    """A closed rational box inside X and inside the interior of st X.

    Boxes of side 2^-L with corners on the grid of step 2^-(L+1) are tried
    around a sample point of every open cell of st X, level by level, in
    lexicographic order of the corners.
    """
    S = st_set(X, budget)
    n, vs = X.arity, X.free
    if S.dim() < n:
        return QBoxResult("interior empty")
    outside = closure_formula(SAFormula(neg(S.formula.node), vs), budget)
    anchors = [c.rational_coords() for c in S.members if c.dim == n]
    seen = set()
    for L in range(depth + 1):
        h = fmpq(1, 2 ** L)
        for anchor in anchors:
            for corner in cartesian(*[_corners(a, h) for a in anchor]):
                key = (L, tuple(corner))
                if key in seen:
                    continue
                seen.add(key)
                box = tuple((c, c + h) for c in corner)
                B = box_formula(vs, box)
                if not sa_empty(SAFormula(conj([B, outside.node]), vs), budget):
                    continue
                if sa_empty(SAFormula(conj([B, neg(X.node)]), vs), budget):
                    certs = [
                        check("box lies in the interior of st X", "closure of complement + sa_empty", True),
                        check("box lies in X", "sa_empty over Q(eps)", True, box=[[str(a), str(b)] for a, b in box]),
                    ]
                    return QBoxResult("box", box, L, certs)
    cert = check("st X has interior but no grid box lies in X", "grid search", False, depth=depth)
    return QBoxResult("violated", None, None, [cert])


# ---------------------------------------------------------------------------
# densities and volumes


@dataclass
class Density:
    """f = num/den on domain and 0 off it; num, den in eps and the domain variables."""

    domain: SAFormula
    num: Poly
    den: Poly

    @staticmethod
    def indicator(X: SAFormula) -> "Density":
        ctx = poly_ring(X.free)
        one = ctx.from_dict({(0,) * len(ctx.names()): 1})
        return Density(X, one, one)

    @staticmethod
    def parse(term: str, domain: SAFormula) -> "Density":
        from .grammar import parse_term

        num, den = parse_term(term, domain.free)
        return Density(domain, num, den)

    @property
    def variables(self) -> tuple:
        return self.domain.free

    def ctx(self):
        return poly_ring(self.variables)

    def is_constant(self) -> bool:
        return not ((used_vars(self.num) | used_vars(self.den)) - {EPS})

    def value_at(self, point: Sequence) -> FieldElem:
        """f at a rational point inside the domain, in Q(eps)."""
        vals = {v: fmpq(p) for v, p in zip(self.variables, point)}
        n = self.num.subs({k: v for k, v in vals.items() if k in names_of(self.num)})
        d = self.den.subs({k: v for k, v in vals.items() if k in names_of(self.den)})
        return FieldElem.make(_eps_upoly(n), _eps_upoly(d))

    def graph(self, t: str = "t") -> SAFormula:
        vs = self.variables + (t,)
        ctx = poly_ring(vs)
        tv = ctx.gens()[-1]
        n, d = convert(self.num, ctx), convert(self.den, ctx)
        node = conj([self.domain.node, make_atom(tv * d - n, "="), make_atom(d, "!=")])
        return SAFormula(node, vs)

    def subgraph(self, t: str = "t") -> SAFormula:
        """(0, f) = {(x, t): 0 < t < f(x)}."""
        vs = self.variables + (t,)
        ctx = poly_ring(vs)
        tv = ctx.gens()[-1]
        n, d = convert(self.num, ctx), convert(self.den, ctx)
        node = conj([self.domain.node, make_atom(tv, ">"), make_atom((n - tv * d) * d, ">")])
        return SAFormula(node, vs)

    def support(self) -> SAFormula:
        return SAFormula(conj([self.domain.node, make_atom(self.num, "!=")]), self.variables)


def _eps_upoly(p: Poly) -> fmpq_poly:
    if p.is_zero():
        return fmpq_poly([0])
    if used_vars(p) - {EPS}:
        raise ValueError("value depends on a free variable")
    if EPS in used_vars(p):
        return to_upoly(p, EPS)
    return fmpq_poly([p.coeffs()[0]])


def _check_density(f: Density, budget: Budget) -> None:
    vs = f.variables
    if not sa_empty(SAFormula(conj([f.domain.node, make_atom(f.den, "=")]), vs), budget):
        raise StError("the denominator of the function vanishes on its domain")
    if not sa_empty(SAFormula(conj([f.domain.node, make_atom(f.num * f.den, "<")]), vs), budget):
        raise StError("the function takes negative values")


def volume_I(f: Density, refine: Sequence = (), radius: float = 1e-9,
             budget: Budget = DEFAULT_BUDGET) -> MeasureValue:
    """Sum over the open cells D of the integral of the function induced on D.

    For one variable the cells are those of the Q-CAD of st(graph f); over
    each open cell st(graph f) is empty or one section, which is integrated.
    refine lists extra rational split points (the result does not depend on
    them). Constant densities in any dimension give st(c) * measure.
    """
    _check_density(f, budget)
    n = len(f.variables)
    if f.is_constant():
        c = FieldElem.make(_eps_upoly(f.num), _eps_upoly(f.den))
        if c.order < 0 and not c.is_zero():
            raise StError("the subgraph is not strongly bounded")
        m = measure_st(f.domain, radius, budget)
        s = _frac(fe_st(c))
        if m.exact:
            return MeasureValue(float(s * m.rational), 0.0, True, "constant density", s * m.rational)
        return MeasureValue(float(s) * m.value, abs(float(s)) * m.radius, False, "constant density")
    if n != 1:
        raise StError("volumes of non-constant functions are implemented for n = 1")
    G = f.graph()
    if strong_bound(G, budget) is None:
        raise StError("the subgraph is not strongly bounded")
    S = st_set(G, budget)
    cad = S.cad
    members = {id(c) for c in S.members}
    bases = cad.cells_by_level[0]
    cuts = sorted({fmpq(p) for p in refine})
    vals = []
    for i, D in enumerate(bases):
        if D.is_section():
            continue
        hits = [ch for ch in D.children if id(ch) in members]
        if not hits:
            continue
        if i == 0 or i == len(bases) - 1:
            raise StError("st of the graph is unbounded")
        if len(hits) != 1 or not hits[0].is_section():
            raise GoodCellError(f"f does not induce a function on open cell {i}")
        fn = section_fn(cad, hits[0])
        a, b = cell_coord(bases[i - 1]), cell_coord(bases[i + 1])
        ends = [a] + [RealAlg.rational(q) for q in cuts if a.cmp_rat(q) < 0 and b.cmp_rat(q) > 0] + [b]
        for lo, hi in zip(ends, ends[1:]):
            vals.append(integrate_between(None, fn, lo, hi, radius))
    return _sum(vals, "induced functions")


# ---------------------------------------------------------------------------
# isomorphisms


def compose(P: Poly, src: Sequence[str], comps: Sequence[tuple], ctx) -> tuple[Poly, Poly]:
    """(A, B) with P(psi) = A/B, psi_i = num_i/den_i in ctx; B is a product of
    powers of the den_i."""
    names = list(names_of(P))
    degs = {v: (degree_in(P, v) if v in names else 0) for v in src}
    B = ctx.from_dict({(0,) * len(ctx.names()): 1})
    for v, (_, d) in zip(src, comps):
        B *= d ** degs[v]
    e_gen = ctx.gens()[list(ctx.names()).index(EPS)]
    A = ctx.from_dict({})
    for mon, c in P.to_dict().items():
        term = ctx.from_dict({(0,) * len(ctx.names()): c})
        for name, k in zip(names, mon):
            if name == EPS:
                term *= e_gen ** k
        for v, (nu, d) in zip(src, comps):
            k = mon[names.index(v)] if v in names else 0
            term *= nu ** k * d ** (degs[v] - k)
        A += term
    return A, B


def pull_formula(node: Node, src: Sequence[str], comps: Sequence[tuple], ctx) -> Node:
    """The formula phi(psi(x)) for a quantifier-free phi in the variables src."""
    def on_atom(a):
        P, rel = a.normal()
        A, B = compose(P, src, comps, ctx)
        return make_atom(A * B, rel)

    return map_atoms(node, on_atom)


@dataclass
class IsoMap:
    """psi = (num_i/den_i) from U (variables) to V (codomain variables)."""

    components: tuple               # ((num, den), ...) in poly_ring(variables)
    variables: tuple
    U: SAFormula
    V: SAFormula

    @staticmethod
    def parse(terms: Sequence[str], variables: Sequence[str], U: SAFormula | None = None,
              V: SAFormula | None = None) -> "IsoMap":
        from .grammar import parse_term

        vs = tuple(variables)
        comps = tuple(parse_term(t, vs) for t in terms)
        U = U or SAFormula(TRUE, vs)
        V = V or SAFormula(TRUE, vs)
        return IsoMap(comps, vs, U, V)

    @property
    def n(self) -> int:
        return len(self.variables)

    def ctx(self):
        return poly_ring(self.variables)

    def jacobian(self) -> tuple[Poly, Poly]:
        """det of the Jacobian as (num, den)."""
        ctx = self.ctx()
        rows = []
        for nu, d in self.components:
            nu, d = convert(nu, ctx), convert(d, ctx)
            row = []
            for v in self.variables:
                row.append((nu.derivative(v) * d - nu * d.derivative(v), d * d))
            rows.append(row)
        if self.n == 1:
            return rows[0][0]
        if self.n == 2:
            (a, ad), (b, bd) = rows[0]
            (c, cd), (e, ed) = rows[1]
            return a * e * bd * cd - b * c * ad * ed, ad * ed * bd * cd
        raise StError("isomorphisms are implemented for n = 1, 2")

    def affine(self):
        """(A, b, d): psi_i = (sum_j A_ij x_j + b_i)/d_i with A_ij, b_i, d_i in Q[eps], or None."""
        A, bs, ds = [], [], []
        for nu, d in self.components:
            if used_vars(d) - {EPS}:
                return None
            if any(degree_in(nu, v) > 1 for v in self.variables):
                return None
            row = []
            rest = nu
            for v in self.variables:
                cs = coeffs_in(nu, v)
                c = cs[1] if len(cs) > 1 else nu.context().from_dict({})
                if used_vars(c) - {EPS}:
                    return None
                row.append(c)
                rest = rest - c * nu.context().gens()[list(nu.context().names()).index(v)]
            if used_vars(rest) - {EPS}:
                return None
            A.append(row)
            bs.append(rest)
            ds.append(d)
        return A, bs, ds

    def record(self) -> dict:
        from .formula import poly_text

        return {"components": [f"({poly_text(n)})/({poly_text(d)})" for n, d in self.components],
                "U": str(self.U), "V": str(self.V)}


@dataclass
class IsoReport:
    ok: bool
    certificates: list
    volumes: tuple | None = None
    note: str = ""

    def record(self) -> dict:
        return {
            "isomorphism": self.ok,
            "certificates": [c.record() for c in self.certificates],
            "volumes": [v.record() for v in self.volumes] if self.volumes else None,
            "note": self.note,
        }


def _inverse_affine(psi: IsoMap, aff, ctx_v, vs_v):
    """Components of psi^-1 (n <= 2) as (num, den) in ctx_v."""
    A, bs, ds = aff
    conv = lambda p: convert(p, ctx_v)
    gens = [ctx_v.gens()[list(ctx_v.names()).index(v)] for v in vs_v]
    r = [conv(d) * g - conv(b) for d, b, g in zip(ds, bs, gens)]
    if psi.n == 1:
        return [(r[0], conv(A[0][0]))]
    a11, a12, a21, a22 = (conv(A[0][0]), conv(A[0][1]), conv(A[1][0]), conv(A[1][1]))
    det = a11 * a22 - a12 * a21
    return [(r[0] * a22 - a12 * r[1], det), (a11 * r[1] - a21 * r[0], det)]


def check_isomorphism(psi: IsoMap, f: Density, g: Density, compare_volumes: bool = True,
                      budget: Budget = DEFAULT_BUDGET) -> IsoReport:
    """Decide that psi: U -> V is an isomorphism f -> g.

    Checked: psi is defined and C^1 with nonzero Jacobian on U, injective,
    psi(U) = V, supp f and supp g lie in U and V up to sets of dimension < n,
    and f = |J psi| (g o psi) off a set of dimension < n. Then the volumes
    are compared when both functions have strongly bounded subgraphs.
    """
    n, xs = psi.n, psi.variables
    ys = g.variables
    ctx = psi.ctx()
    comps = [(convert(a, ctx), convert(b, ctx)) for a, b in psi.components]
    U = psi.U
    certs = []

    def empty(node) -> bool:
        return sa_empty(SAFormula(node, xs), budget)

    def small(node, vars_=xs) -> bool:
        return sa_dim(SAFormula(node, vars_), budget) < n

    certs.append(check("psi is defined on U", "sa_empty",
                       all(empty(conj([U.node, make_atom(d, "=")])) for _, d in comps)))
    Jn, Jd = psi.jacobian()
    certs.append(check("Jacobian of psi vanishes nowhere on U", "sa_empty",
                       empty(conj([U.node, make_atom(Jn, "=")]))))
    aff = psi.affine()
    Vq = eliminate_quantifiers(psi.V, budget)
    if aff is not None:
        certs.append(check("psi is injective", "affine map with nonzero determinant", True))
        ctx_v = poly_ring(ys)
        inv = _inverse_affine(psi, aff, ctx_v, ys)
        Uq = eliminate_quantifiers(U, budget)
        back = pull_formula(Uq.node, xs, inv, ctx_v)
        certs.append(check("V lies in psi(U)", "inverse map + sa_empty",
                           sa_empty(SAFormula(conj([Vq.node, neg(back)]), ys), budget)))
    else:
        if n != 1:
            raise StError("injectivity of non-affine maps is implemented for n = 1")
        (x,) = xs
        x2 = x + "_"
        ctx2 = poly_ring((x, x2))
        (nu, d) = comps[0]
        nu1, d1 = convert(nu, ctx2), convert(d, ctx2)
        nu2 = convert(rename_poly(nu, {x: x2}), ctx2)
        d2 = convert(rename_poly(d, {x: x2}), ctx2)
        gx, gx2 = ctx2.gens()[1], ctx2.gens()[2]
        U2 = rename(U.node, {x: x2})
        body = neg(conj([U.node, U2, make_atom(nu1 * d2 - nu2 * d1, "="), make_atom(gx - gx2, "!=")]))
        certs.append(check("psi is injective", "decide",
                           decide(Quant("forall", x, Quant("forall", x2, body)), budget)))
        (y,) = ys
        ctx3 = poly_ring((y, x))
        gy = ctx3.gens()[1]
        hit = conj([U.node, make_atom(convert(nu, ctx3) - gy * convert(d, ctx3), "=")])
        onto = neg(conj([Vq.node, neg(Quant("exists", x, hit))]))
        certs.append(check("V lies in psi(U)", "decide", decide(Quant("forall", y, onto), budget)))
    Vx = pull_formula(Vq.node, ys, comps, ctx)
    certs.append(check("psi(U) lies in V", "sa_empty", empty(conj([U.node, neg(Vx)]))))
    certs.append(check("supp f lies in U up to dimension < n", "sa_dim",
                       small(conj([f.support().node, neg(U.node)]))))
    certs.append(check("supp g lies in V up to dimension < n", "sa_dim",
                       small(conj([g.support().node, neg(Vq.node)]), ys)))
    # failure locus of f = |J| (g o psi): compare squares, both sides are >= 0
    fdom = eliminate_quantifiers(f.domain, budget).node
    gdom = pull_formula(eliminate_quantifiers(g.domain, budget).node, ys, comps, ctx)
    Fn, Fd = convert(f.num, ctx), convert(f.den, ctx)
    An, Bn = compose(g.num, ys, comps, ctx)
    Ad, Bd = compose(g.den, ys, comps, ctx)
    Gn, Gd = An * Bd, Bn * Ad
    diff = Jn ** 2 * Gn ** 2 * Fd ** 2 - Fn ** 2 * Jd ** 2 * Gd ** 2
    fail = disj([
        conj([fdom, gdom, make_atom(diff, "!=")]),
        conj([fdom, neg(gdom), make_atom(Fn, "!=")]),
        conj([neg(fdom), gdom, make_atom(Gn, "!=")]),
    ])
    certs.append(check("f = |J psi| (g o psi) almost everywhere on U", "sa_dim of the failure locus",
                       small(conj([U.node, fail]))))
    ok = all(c.ok for c in certs)
    volumes = None
    note = ""
    if ok and compare_volumes:
        sb = lambda h: strong_bound(h.domain, budget) is not None
        if sb(f) and sb(g):
            vf, vg = volume_I(f, budget=budget), volume_I(g, budget=budget)
            volumes = (vf, vg)
            certs.append(check("I(f) = I(g)", "volume_I within summed radii", vf.agrees(vg)))
            ok = certs[-1].ok
        else:
            note = "volumes not compared: a subgraph is not strongly bounded"
    return IsoReport(ok, certs, volumes, note)


def image_of(psi: IsoMap, X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    """psi(X) for an affine psi, as {y : psi^-1(y) in X}."""
    aff = psi.affine()
    if aff is None:
        raise StError("images are implemented for affine maps")
    vs = psi.variables
    ctx = poly_ring(vs)
    inv = _inverse_affine(psi, aff, ctx, vs)
    Xq = eliminate_quantifiers(X, budget)
    return SAFormula(pull_formula(Xq.node, vs, inv, ctx), vs)


def rename_poly(p: Poly, mapping: dict) -> Poly:
    names = [mapping.get(v, v) for v in names_of(p)]
    ctx = poly_ring(names)
    dst = list(ctx.names())
    terms = {}
    for mon, c in p.to_dict().items():
        out = [0] * len(dst)
        for name, k in zip(names_of(p), mon):
            out[dst.index(mapping.get(name, name))] += k
        terms[tuple(out)] = c
    return ctx.from_dict(terms)


def measure_extension(X: SAFormula, witness: tuple | None = None, radius: float = 1e-9,
                      budget: Budget = DEFAULT_BUDGET) -> MeasureValue:
    """mu*(X) for bounded X: measure_st of an isomorphic strongly bounded Y.

    witness is (psi, Y) with psi: X -> Y. Strongly bounded X uses the
    identity; without a witness the value is infinity, flagged.
    """
    if strong_bound(X, budget) is not None and witness is None:
        m = measure_st(X, radius, budget)
        m.note = "identity witness"
        return m
    if not is_bounded(X, budget):
        raise StError("X is not bounded")
    if witness is None:
        return MeasureValue(math.inf, 0.0, False, "mu*", note="no witness supplied")
    psi, Y = witness
    if strong_bound(Y, budget) is None:
        raise StError("the witness image is not strongly bounded")
    rep = check_isomorphism(psi, Density.indicator(X), Density.indicator(Y), compare_volumes=False,
                            budget=budget)
    if not rep.ok:
        raise IsomorphismError(rep)
    m = measure_st(Y, radius, budget)
    m.note = "via witness"
    return m


# ---------------------------------------------------------------------------
# derivatives of induced functions


def standard_rational(num: Poly, den: Poly, variables) -> tuple[Poly, Poly] | None:
    """(N0, D0) over Q with num/den = (N0 + eps*...)/(D0 + eps*...) after
    dividing by the lowest power of eps in den; None when num has a lower
    power of eps than den."""
    ctx = ring(tuple(variables))
    cn, cd = coeffs_in(num, EPS), coeffs_in(den, EPS)
    v = next(k for k, c in enumerate(cd) if not c.is_zero())
    if any(not c.is_zero() for c in cn[:v]):
        return None
    N0 = cn[v] if v < len(cn) else num.context().from_dict({})
    return convert(N0, ctx), convert(cd[v], ctx)


def _deriv(num: Poly, den: Poly, v: str) -> tuple[Poly, Poly]:
    return num.derivative(v) * den - num * den.derivative(v), den * den


@dataclass
class DerivReport:
    ok: bool
    g: tuple                        # (N0, D0) over Q
    partials: list                  # (N0, D0) per variable
    certificates: list = field(default_factory=list)
    max_error: float = 0.0
    points: int = 0
    failures: list = field(default_factory=list)

    def record(self) -> dict:
        from .formula import poly_text

        fr = lambda nd: f"({poly_text(nd[0])})/({poly_text(nd[1])})"
        return {
            "ok": self.ok,
            "g": fr(self.g),
            "partials": [fr(p) for p in self.partials],
            "certificates": [c.record() for c in self.certificates],
            "max_error": self.max_error,
            "points": self.points,
            "failures": self.failures,
        }


def _grid_points(D: GoodCell, count: int, h: fmpq, budget: Budget) -> list[tuple]:
    """count rational points of D whose h-neighbours along each axis stay in D."""
    import numpy as np

    vs = D.variables
    n = len(vs)
    q = strong_bound(SAFormula(D.region.node, vs), budget)
    R = float(q) if q is not None else 2.0
    per = max(8, int(math.ceil(count ** (1 / n))) * 2)
    while True:
        ticks = [fmpq(int(round((-R + 2 * R * (k + 0.5) / per) * 4096)), 4096) for k in range(per)]
        pts = list(cartesian(ticks, repeat=n))
        arr = [np.array([float(p[j]) for p in pts]) for j in range(n)]
        ok = float_mask(D.region.node, vs, arr)
        hf = float(h) * 2
        for j in range(n):
            for s in (1, -1):
                shifted = [a + (s * hf if k == j else 0) for k, a in enumerate(arr)]
                ok &= float_mask(D.region.node, vs, shifted)
        cand = [p for p, good in zip(pts, ok) if good]
        if len(cand) >= count or per > 4000:
            break
        per *= 2
    if len(cand) > count:
        idx = [int(i * len(cand) / count) for i in range(count)]
        cand = [cand[i] for i in idx]
    return cand


def st_derivative_commutes(f: Density, D: GoodCell, points: int = 100, step: fmpq = fmpq(1, 1000),
                           tol: float = 1e-4, budget: Budget = DEFAULT_BUDGET) -> DerivReport:
    """Check that the functions induced by the partials of f are the partials
    of the function g induced by f, on the open cell D.

    Induction of h = N/Dn on D is certified by the sufficient condition
    D0 != 0 on D (with D0 the lowest eps-coefficient of Dn) together with the
    monad of D lying in the domain of f. Symbolic check: the rational
    identity g_i = dg/dx_i; for n = 1 also st(graph f') against the implicit
    derivative of st(graph f). Numeric check: central differences of exact
    standard parts at grid points.
    """
    vs = f.variables
    n = len(vs)
    if D.n != n or not D.is_open():
        raise GoodCellError("D must be an open cell of the same dimension")
    Dr = SAFormula(rename(D.region.node, dict(zip(D.variables, vs))), vs)
    certs = []
    dom = eliminate_quantifiers(f.domain, budget)
    out_st = st_set(SAFormula(neg(dom.node), vs), budget).formula
    certs.append(check("the monad of D lies in the domain of f", "st of the complement + sa_empty",
                       sa_empty(SAFormula(conj([Dr.node, out_st.node]), vs), budget)))
    failures = []

    def induced(num, den, label):
        sr = standard_rational(num, den, vs)
        if sr is None:
            failures.append(label)
            certs.append(check(f"{label} induces a function on D", "lowest eps-coefficients", False))
            return None
        N0, D0 = sr
        good = sa_empty(SAFormula(conj([Dr.node, make_atom(D0, "=")]), vs), budget)
        certs.append(check(f"{label} induces a function on D", "denominator standard part nonzero on D", good))
        if not good:
            failures.append(label)
        return sr

    g = induced(f.num, f.den, "f")
    partials = []
    for v in vs:
        dn, dd = _deriv(f.num, f.den, v)
        partials.append(induced(dn, dd, f"df/d{v}"))
    if g is None or any(p is None for p in partials) or failures:
        return DerivReport(False, g or (f.num, f.den), [p or (f.num, f.den) for p in partials], certs,
                           failures=failures)
    N0, D0 = g
    for v, (Pn, Pd) in zip(vs, partials):
        dn, dd = _deriv(N0, D0, v)
        certs.append(check(f"g_{v} = dg/d{v}", "rational identity", (Pn * dd - dn * Pd).is_zero()))
    if n == 1:
        certs.extend(_graph_route(f, D, budget))
    # numeric: central differences of exact standard parts
    h = fmpq(step)
    pts = _grid_points(D, points, h, budget)
    worst = 0.0
    checked = 0
    for p in pts:
        if not contains_point(Dr, p, budget):
            continue
        checked += 1
        for j, v in enumerate(vs):
            up = tuple(c + (h if k == j else 0) for k, c in enumerate(p))
            dn_ = tuple(c - (h if k == j else 0) for k, c in enumerate(p))
            gu, gd = fe_st(f.value_at(up)), fe_st(f.value_at(dn_))
            dnum, dden = _deriv(f.num, f.den, v)
            gi = fe_st(Density(f.domain, dnum, dden).value_at(p))
            err = abs(float(gi - (gu - gd) / (2 * h)))
            worst = max(worst, err)
    certs.append(check(f"|g_i - central difference| <= {tol}", "finite differences",
                       worst <= tol and checked > 0, points=checked, step=str(h), max_error=worst))
    ok = all(c.ok for c in certs)
    return DerivReport(ok, g, partials, certs, worst, checked, failures)


def _graph_route(f: Density, D: GoodCell, budget: Budget) -> list[Certificate]:
    """n = 1: st(graph f') equals the implicit derivative of st(graph f) over D."""
    (x,) = f.variables
    try:
        g = make_induced_fn(f.graph("t"), D, budget)
        dn, dd = _deriv(f.num, f.den, x)
        g1 = make_induced_fn(Density(f.domain, dn, dd).graph("s"), D, budget)
    except (GoodCellError, StError) as exc:
        return [check("graphs of g and g' are induced", "make_induced_fn", False, error=str(exc))]
    G = g.graph_st
    vs = G.free
    t = vs[-1]
    eqs = [a.normal()[0] for a in atoms(G.node) if a.normal()[1] == "=" and t in used_vars(a.normal()[0])]
    if not eqs:
        return [check("graph of g has a defining equation", "atoms", False)]
    P = eqs[0]
    ctx = poly_ring((vs[0], t, "s"))
    P = convert(P, ctx)
    if not sa_empty(SAFormula(conj([G.node, make_atom(P, "!=")]), vs), budget) or \
            not sa_empty(SAFormula(conj([G.node, make_atom(P.derivative(t), "=")]), vs), budget):
        return [check("graph of g is a smooth branch of P = 0", "sa_empty", False, P=str(P))]
    s = ctx.gens()[-1]
    body = conj([G.node, make_atom(P.derivative(t) * s + P.derivative(vs[0]), "=")])
    implicit = SAFormula(Quant("exists", t, body), (vs[0], "s"))
    G1 = SAFormula(rename(g1.graph_st.node, dict(zip(g1.graph_st.free, (vs[0], "s")))), (vs[0], "s"))
    return [check("st(graph f') = graph of the implicit derivative of st(graph f)",
                  "st_set + sa_equal", sa_equal(G1, implicit, budget))]
