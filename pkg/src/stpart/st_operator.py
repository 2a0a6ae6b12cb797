"""The standard-part operator on sets definable over Q(eps).

For X in R^n (n <= 2) the standard part st X is a closed semialgebraic set
over Q. It is computed as a union of cells of a Q-CAD adapted to the
"limit polynomials" S of X:

* lowest eps-coefficients of the polynomials of X,
* lowest eps-coefficients of the polynomials of their projections to
  each single coordinate axis.

Over a one-dimensional base (x in R) the st of a set is read off directly:
every root of X's polynomials either lies in a rational window around a
root of the limit polynomials (and has that standard part) or is
unbounded. Windows are added as extra polynomials so that the CAD slice
at e* orders roots against them exactly as at eps.

In the plane, cells over base sectors are classified by the 1-D procedure
applied to the fibre at the rational sample, and the remaining cells by a
single exact decision ``X meets B`` for a rational box B around the cell
whose closure meets only cells adjacent to it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Sequence

from flint import fmpq, fmpq_poly

from .cad import CAD, DEFAULT_BUDGET, Budget, Cell, project
from .exact_algebra import (
    EPS, FieldElem, Poly, convert, fe_sign, factor_basis, initial_form, names_of, rat,
    ring, to_upoly, used_vars,
)
from .formula import (
    FALSE, TRUE, Node, Quant, SAFormula, atoms, conj, disj, has_quantifiers, make_atom, neg,
    substitute,
)
from .realalg import KRoot, RealAlg, real_roots, simplest_between
from .semialgebraic import (
    cells_to_formula, eliminate_quantifiers, free_level_cells, holds, prenex, sa_empty,
)


class StError(ValueError):
    """The input is outside the supported fragment."""


# ---------------------------------------------------------------------------
# helpers on real algebraic coordinates


def to_realalg(c) -> RealAlg:
    """A RealAlg for a rational K-element, a KRoot over Q, or a RealAlg."""
    if isinstance(c, RealAlg):
        return c
    if isinstance(c, fmpq):
        return RealAlg.rational(c)
    if isinstance(c, fmpq_poly):
        if c.degree() > 0:
            raise StError("coordinate is not rational")
        return RealAlg.rational(c.coeffs()[0] if not c.is_zero() else fmpq(0))
    if isinstance(c, KRoot):
        if c.value is not None:
            return RealAlg.rational(c.value)
        if c.K.nf is not None:
            raise StError("coordinate lies over a number field")
        u = fmpq_poly([k.coeffs()[0] if not k.is_zero() else 0 for k in c.poly])
        for r in real_roots(u):
            while True:
                if r.value is not None:
                    if c.lo < r.value < c.hi:
                        return r
                    break
                if r.hi <= c.lo or r.lo >= c.hi:
                    break
                if c.lo <= r.lo and r.hi <= c.hi:
                    return r
                r.refine()
        raise RuntimeError("lost a root while converting")
    raise TypeError(c)


def _cmp(a: RealAlg | None, b: RealAlg | None, a_inf: int = -1, b_inf: int = -1) -> int:
    """Compare with None standing for -inf (a_inf=-1) or +inf (a_inf=1)."""
    if a is None and b is None:
        return (a_inf > b_inf) - (a_inf < b_inf)
    if a is None:
        return a_inf
    if b is None:
        return -b_inf
    return a.cmp(b)


@dataclass
class Interval:
    """Closed interval [lo, hi]; None marks an infinite end. lo == hi is a point."""

    lo: RealAlg | None
    hi: RealAlg | None

    def contains(self, x: RealAlg) -> bool:
        return _cmp(self.lo, x, -1) <= 0 and _cmp(x, self.hi, 0, 1) <= 0

    def is_point(self) -> bool:
        return self.lo is not None and self.hi is not None and self.lo.cmp(self.hi) == 0

    def approx(self) -> tuple[float, float]:
        lo = float("-inf") if self.lo is None else self.lo.approx()
        hi = float("inf") if self.hi is None else self.hi.approx()
        return lo, hi

    def __str__(self):
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        return f"[{lo}, {hi}]"


def normalize_intervals(pieces: Sequence[Interval]) -> list[Interval]:
    """Sorted, merged list of closed intervals."""
    items = sorted(pieces, key=cmp_to_key(lambda p, q: _cmp(p.lo, q.lo, -1, -1)))
    out: list[Interval] = []
    for p in items:
        if out and _cmp(p.lo, out[-1].hi, -1, 1) <= 0:
            if _cmp(p.hi, out[-1].hi, 1, 1) > 0:
                out[-1] = Interval(out[-1].lo, p.hi)
        else:
            out.append(Interval(p.lo, p.hi))
    return out


def _initial_poly(f: Poly, variables: Sequence[str]) -> Poly:
    """Lowest eps-coefficient of f as a polynomial over Q in variables."""
    _, f0 = initial_form(f)
    return convert(f0, ring(tuple(variables)))


def _window_around(r: RealAlg, others: list[RealAlg]) -> tuple[fmpq, fmpq]:
    """Rational (a, b) around r with the closed window free of the other roots."""
    if r.value is not None:
        h = fmpq(1, 2)
        while True:
            a, b = r.value - h, r.value + h
            if all(o.cmp_rat(a) != 0 and o.cmp_rat(b) != 0 and not (o.cmp_rat(a) > 0 and o.cmp_rat(b) < 0)
                   for o in others):
                return a, b
            h /= 2
    while True:
        a, b = r.lo, r.hi
        if all(not (o.cmp_rat(a) >= 0 and o.cmp_rat(b) <= 0) for o in others):
            return a, b
        r.refine()


# ---------------------------------------------------------------------------
# one variable


def _atom_polys(node: Node) -> list[Poly]:
    return [a.normal()[0] for a in atoms(node)]


@dataclass
class OneVarAnalysis:
    """Cells of a one-variable set at eps, each section tagged with its standard part."""

    cad: CAD
    cells: list
    member: list            # bool per cell
    st: list                # per section: (0, RealAlg) finite, (+-1, None) infinite
    markers: list

    def pieces(self) -> list[Interval]:
        out: list[Interval] = []
        cells = self.cells
        for i, c in enumerate(cells):
            if not self.member[i]:
                continue
            if c.is_section():
                kind, val = self.st[i]
                if kind == 0:
                    out.append(Interval(val, val))
                continue
            lo = self.st[i - 1] if i > 0 else (-1, None)
            hi = self.st[i + 1] if i + 1 < len(cells) else (1, None)
            if lo[0] == hi[0] and lo[0] != 0:
                continue
            out.append(Interval(lo[1], hi[1]))
        return normalize_intervals(out)

    def bounded(self) -> bool:
        """X is bounded in R (no member unbounded sector)."""
        return not (self.member[0] or self.member[-1])

    def strongly_bounded(self) -> bool:
        """X is contained in [-q, q] for a rational q."""
        if not self.bounded():
            return False
        for i, c in enumerate(self.cells):
            if self.member[i]:
                for j in (i - 1, i, i + 1):
                    if 0 <= j < len(self.cells) and self.cells[j].is_section() and self.st[j][0] != 0:
                        return False
        return True

    def rational_bound(self) -> fmpq:
        """A rational q with X inside [-q, q] (strongly bounded X)."""
        return max(abs(m) for m in self.markers) + 1


def analyse_onevar(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> OneVarAnalysis:
    if X.arity != 1:
        raise StError("one free variable expected")
    if has_quantifiers(X.node):
        X = eliminate_quantifiers(X, budget)
    (v,) = X.free
    node = X.node
    polys = [P for P in _atom_polys(node) if v in used_vars(P)]
    limits = factor_basis(_initial_poly(P, [v]) for P in polys)
    centers: list[RealAlg] = []
    for g in limits:
        if used_vars(g):
            centers.extend(real_roots(to_upoly(g, v)))
    centers.sort(key=cmp_to_key(lambda a, b: a.cmp(b)))
    windows = [_window_around(c, [o for o in centers if o is not c]) for c in centers]
    markers = sorted({q for w in windows for q in w}) or [fmpq(0)]
    ctx = ring((EPS, v))
    lines = [ctx.gens()[1] - ctx.from_dict({(0, 0): q}) for q in markers]
    cad = CAD([convert(P, ctx) for P in _atom_polys(node)] + lines, [v], budget=budget)
    cells = cad.cells

    def st_of(cell: Cell):
        r = cell_coord(cell)
        if r.value is not None and r.value in markers:
            return 0, r
        for c, (a, b) in zip(centers, windows):
            if r.cmp_rat(a) > 0 and r.cmp_rat(b) < 0:
                return 0, c
        if r.cmp_rat(markers[-1]) > 0:
            return 1, None
        if r.cmp_rat(markers[0]) < 0:
            return -1, None
        raise RuntimeError("a bounded root escaped every window")

    sts = [st_of(c) if c.is_section() else None for c in cells]
    member = [holds(cad, c, node) for c in cells]
    return OneVarAnalysis(cad, cells, member, sts, markers)


def st_onevar(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> list[Interval]:
    """st X for X in R^1 as a sorted list of disjoint closed intervals."""
    return analyse_onevar(X, budget).pieces()


def cell_coord(cell: Cell) -> RealAlg:
    """Last coordinate of a cell lying over a rational point, as a RealAlg."""
    return to_realalg(_coord_obj(cell))


def _coord_obj(cell: Cell):
    """Last coordinate as a refinable object (RealAlg, KRoot) or a constant."""
    last = cell.coords[-1]
    if isinstance(last, KRoot):
        return last
    if last.degree() >= 1:
        if cell.K.nf is not None and last == fmpq_poly([0, 1]):
            return cell.K.nf.theta
        raise StError("coordinate is not a generator of its field")
    return last


# ---------------------------------------------------------------------------
# the limit polynomial family


def limit_polynomials(X: SAFormula) -> list[Poly]:
    """Irreducible factors over Q of the limit family S of X."""
    variables = list(X.free)
    node = X.node
    polys = _atom_polys(node)
    ctx = ring((EPS,) + tuple(variables))
    polys = [convert(P, ctx) for P in polys if used_vars(P) - {EPS}]
    out = [_initial_poly(P, variables) for P in polys]
    if len(variables) == 2:
        x, y = variables
        for order in ([EPS, x, y], [EPS, y, x]):
            table = project(polys, order)
            for P in table[1]:
                out.append(_initial_poly(P, variables))
    elif len(variables) > 2:
        raise StError("st is implemented for sets in R^1 and R^2")
    return factor_basis(out)


# ---------------------------------------------------------------------------
# boxes


def _box_formula(variables, a, b, c, d) -> Node:
    ctx = ring(tuple(variables))
    x, y = ctx.gens()
    k = lambda q: ctx.from_dict({(0, 0): q})
    return conj([make_atom(x - k(a), ">"), make_atom(x - k(b), "<"),
                 make_atom(y - k(c), ">"), make_atom(y - k(d), "<")])


def meets_box(X: SAFormula, box, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Exact test of X(R) meeting the open rational box (a,b) x (c,d).

    Only the base cells inside (a, b) are lifted.
    """
    a, b, c, d = box
    node = conj([X.node, _box_formula(X.free, a, b, c, d)])
    if has_quantifiers(node):
        return not sa_empty(SAFormula(node, X.free), budget)
    polys = _atom_polys(node)

    def inside(cell: Cell) -> bool:
        r = cell_coord(cell)
        return r.cmp_rat(a) > 0 and r.cmp_rat(b) < 0

    cad = CAD(polys, list(X.free), budget=budget, base_filter=inside)
    return any(holds(cad, cell, node) for cell in cad.cells)


def _fiber_roots(scad: CAD, base: Cell) -> list:
    """The section coordinates in the cylinder over base (level-2 cells)."""
    return [_coord_obj(ch) for ch in base.children if ch.is_section()]


def _y_bracket(coord):
    """(lo, hi) rational bracket of a fibre coordinate (refinable)."""
    if isinstance(coord, (KRoot, RealAlg)):
        return (coord.value, coord.value) if coord.value is not None else (coord.lo, coord.hi)
    q = coord.coeffs()[0] if not coord.is_zero() else fmpq(0)
    return q, q


def _separate(roots: list) -> None:
    """Refine fibre roots until their closed brackets are pairwise disjoint."""
    while True:
        ok = True
        for r, s in zip(roots, roots[1:]):
            if _y_bracket(r)[1] >= _y_bracket(s)[0]:
                ok = False
                for t in (r, s):
                    if isinstance(t, (KRoot, RealAlg)):
                        t.refine()
        if ok:
            return


def _x_window(scad: CAD, base: Cell, lines: list[Poly]) -> tuple[fmpq, fmpq]:
    """Rational (a, b) around the base coordinate with no other base root and
    no root of the given univariate polynomials in [a, b]."""
    x = scad.variables[0]
    others = []
    for c in free_level_cells(scad, 1):
        if c.is_section() and c is not base:
            others.append(cell_coord(c))
    bad = []
    for g in lines:
        if used_vars(g):
            bad.extend(real_roots(to_upoly(g, x)))
    avoid = others + bad
    if base.is_section():
        r = cell_coord(base).copy()
        if r.value is not None:
            h = fmpq(1, 2)
            while True:
                a, b = r.value - h, r.value + h
                if all(not (o.cmp_rat(a) >= 0 and o.cmp_rat(b) <= 0) for o in avoid):
                    return a, b
                h /= 2
        while True:
            a, b = r.lo, r.hi
            if all(not (o.cmp_rat(a) >= 0 and o.cmp_rat(b) <= 0) for o in avoid):
                return a, b
            r.refine()
    q = base.rational_coords()[0]
    h = fmpq(1, 2)
    while True:
        a, b = q - h, q + h
        if all(not (o.cmp_rat(a) >= 0 and o.cmp_rat(b) <= 0) for o in avoid):
            return a, b
        h /= 2


def cell_box(scad: CAD, cell: Cell) -> tuple[fmpq, fmpq, fmpq, fmpq]:
    """Open rational box around a level-2 cell whose closure meets only
    cells having this cell in their closure."""
    base = cell.parent
    roots = _fiber_roots(scad, base)
    _separate(roots)
    j = cell.index[-1]
    if cell.is_section():
        k = j // 2 - 1
        lo_b, hi_b = _y_bracket(roots[k])
        if lo_b == hi_b:
            prev_hi = _y_bracket(roots[k - 1])[1] if k > 0 else lo_b - 2
            next_lo = _y_bracket(roots[k + 1])[0] if k + 1 < len(roots) else hi_b + 2
            c = simplest_between(prev_hi, lo_b)
            d = simplest_between(hi_b, next_lo)
        else:
            c, d = lo_b, hi_b
    else:
        k = (j - 1) // 2
        below = _y_bracket(roots[k - 1])[1] if k > 0 else None
        above = _y_bracket(roots[k])[0] if k < len(roots) else None
        ys = cell.coords[-1]
        ystar = ys.coeffs()[0] if not ys.is_zero() else fmpq(0)
        lo = below if below is not None else ystar - 2
        hi = above if above is not None else ystar + 2
        c = simplest_between(lo, ystar) if below is not None else ystar - 1
        d = simplest_between(ystar, hi) if above is not None else ystar + 1
    G = scad.levels[1]
    y = scad.variables[1]
    lines = [g.subs({y: c}) for g in G] + [g.subs({y: d}) for g in G]
    a, b = _x_window(scad, base, lines)
    return a, b, c, d


# ---------------------------------------------------------------------------
# the set object


@dataclass
class StSet:
    """st X as a union of cells of a Q-CAD, with its defining formula."""

    formula: SAFormula
    cad: CAD
    members: list
    source: SAFormula
    intervals: list | None = None   # one-variable case

    @property
    def arity(self) -> int:
        return self.formula.arity

    def dim(self) -> int:
        return max((c.dim for c in self.members), default=-1)

    def is_empty(self) -> bool:
        return not self.members

    def __str__(self) -> str:
        return str(self.formula)

    def __repr__(self) -> str:
        return f"StSet({self.formula})"


def _member_of_intervals(x: RealAlg, pieces: list[Interval]) -> bool:
    return any(p.contains(x) for p in pieces)


def st_set(X: SAFormula, budget: Budget = DEFAULT_BUDGET, method: str = "fiber") -> StSet:
    """st X for X in R^1 or R^2.

    method "fiber" classifies cells over base sectors through the fibre at a
    rational sample; "box" uses a box decision for every cell.
    """
    n = X.arity
    if n == 0:
        raise StError("st of a sentence is not defined")
    if n > 2:
        raise StError("st is implemented for sets in R^1 and R^2")
    if has_quantifiers(X.node):
        X = eliminate_quantifiers(X, budget)
    S = limit_polynomials(X)
    scad = CAD(S, list(X.free), thom=True, budget=budget)
    if n == 1:
        pieces = st_onevar(X, budget)
        members = [c for c in scad.cells if _member_of_intervals(cell_coord(c), pieces)]
        node = cells_to_formula(scad, 1, {id(c) for c in members})
        return StSet(SAFormula(node, X.free), scad, members, X, pieces)
    members = []
    x = X.free[0]
    for base in scad.cells_by_level[0]:
        if not base.is_section() and method == "fiber":
            q = base.rational_coords()[0]
            fib = SAFormula(substitute(X.node, {x: q}), (X.free[1],))
            pieces = st_onevar(fib, budget)
            for ch in base.children:
                if _member_of_intervals(cell_coord(ch), pieces):
                    members.append(ch)
            continue
        # open cells of the cylinder first; a section of the fibre adjacent
        # to a member open cell is in the closure, hence a member
        kids = base.children
        inside = [False] * len(kids)
        for i in list(range(0, len(kids), 2)) + list(range(1, len(kids), 2)):
            ch = kids[i]
            if i % 2 == 1 and (inside[i - 1] or inside[i + 1]):
                inside[i] = True
            else:
                inside[i] = meets_box(X, cell_box(scad, ch), budget)
        members.extend(ch for ch, m in zip(kids, inside) if m)
    node = cells_to_formula(scad, 2, {id(c) for c in members})
    return StSet(SAFormula(node, X.free), scad, members, X)


def st(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    """Quantifier-free formula over Q for st X."""
    return st_set(X, budget).formula


def standard_set(F: SAFormula, budget: Budget = DEFAULT_BUDGET) -> StSet:
    """Wrap a formula over Q (read as a set of reals) as an StSet."""
    if F.field != "Q":
        raise StError("standard_set expects a formula over Q")
    from .semialgebraic import truth_on_cells

    cad, truth = truth_on_cells(F.node, F.free, thom=True, budget=budget)
    members = [c for c in free_level_cells(cad, len(F.free)) if truth[id(c)]]
    node = cells_to_formula(cad, len(F.free), {id(c) for c in members})
    return StSet(SAFormula(node, F.free), cad, members, F)


# ---------------------------------------------------------------------------
# boundedness


def coordinate_shadows(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> list[OneVarAnalysis]:
    """One-variable analyses of the images of X on each coordinate axis."""
    out = []
    for v in X.free:
        node = X.node
        for w in reversed([w for w in X.free if w != v]):
            node = Quant("exists", w, node)
        out.append(analyse_onevar(SAFormula(node, (v,)), budget))
    return out


def is_bounded(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> bool:
    return all(a.bounded() for a in coordinate_shadows(X, budget))


def strong_bound(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> fmpq | None:
    """A rational q with X inside [-q, q]^n, or None when X is not strongly bounded."""
    shadows = coordinate_shadows(X, budget)
    if not all(a.strongly_bounded() for a in shadows):
        return None
    return max(a.rational_bound() for a in shadows)


# ---------------------------------------------------------------------------
# projections, intersections, unbounded loci, hulls


def _exists(node: Node, variables) -> Node:
    for w in reversed(list(variables)):
        node = Quant("exists", w, node)
    return node


def st_project_bounded(S: StSet, m: int, budget: Budget = DEFAULT_BUDGET):
    """st of the projection of a bounded X onto its first m coordinates.

    Returns (StSet, Certificate) certifying that projecting st X gives the
    same set.
    """
    from .certificate import CertificateError, check
    from .semialgebraic import sa_equal

    X = S.source
    if not 1 <= m < X.arity:
        raise StError("projection dimension out of range")
    if not is_bounded(X, budget):
        raise StError("X is not bounded, so projection need not commute with st")
    keep, drop = X.free[:m], X.free[m:]
    pX = SAFormula(_exists(X.node, drop), keep)
    st_p = st_set(pX, budget)
    p_st = eliminate_quantifiers(SAFormula(_exists(S.formula.node, drop), keep), budget)
    cert = check("projection of st X equals st of the projection", "sa_equal",
                 sa_equal(p_st, st_p.formula, budget))
    if not cert.ok:
        raise CertificateError(cert)
    return st_p, cert


def st_intersection_witness(phi: SAFormula, psi: SAFormula, budget: Budget = DEFAULT_BUDGET,
                            depth: int = 4):
    """A set Z in X x Y whose st projects onto st X meet st Y.

    Z = {(x, y) in X x Y : |x - y| < w} where w = eps^(1/m) for m = 1..depth
    (realized by the substitution eps := eta^m, w = eta). Returns
    (Z, m, Certificate). One-variable X and Y only.
    """
    from .certificate import Certificate, check
    from .formula import reparametrize, rename
    from .semialgebraic import intersection, sa_equal, difference, union

    if phi.arity != 1 or psi.arity != 1:
        raise StError("intersection witnesses are implemented for subsets of R")
    (x,) = phi.free
    yname = x + "_"
    target = intersection(st_set(phi, budget).formula, st_set(psi, budget).formula)
    ctx = ring((EPS, x, yname))
    e, xv, yv = ctx.gens()
    residual = None
    for m in range(1, depth + 1):
        xs = reparametrize(phi.node, m)
        ys = rename(reparametrize(psi.node, m), {psi.free[0]: yname})
        near = conj([make_atom(xv - yv - e, "<"), make_atom(yv - xv - e, "<")])
        Z = SAFormula(conj([xs, ys, near]), (x, yname))
        stZ = st_set(Z, budget)
        proj = eliminate_quantifiers(SAFormula(Quant("exists", yname, stZ.formula.node), (x,)), budget)
        if sa_equal(proj, target, budget):
            return Z, m, check("st of the witness projects onto st X meet st Y", "sa_equal", True,
                               width=f"eps^(1/{m})")
        residual = union(difference(proj, target), difference(target, proj))
    cert = Certificate("st of the witness projects onto st X meet st Y", "sa_equal", "violated",
                       {"residual": str(residual), "depth": depth})
    return None, None, cert


def st_unbounded_locus(phi: SAFormula, num: Poly, den: Poly, side: int,
                       budget: Budget = DEFAULT_BUDGET) -> StSet:
    """st of {x in X : f(x) > Q} (side=+1) or {x in X : f(x) < Q} (side=-1), f = num/den.

    Uses Y = {(x, y) : x in X, sign f(x) = side, f(x) y = 1}; the locus is
    st Y meet {y = 0}, projected to x. X must lie in R.
    """
    from .semialgebraic import sa_empty

    if phi.arity != 1:
        raise StError("the reciprocal construction is implemented for subsets of R")
    (x,) = phi.free
    yname = "_r"
    ctx = ring((EPS, x, yname))
    num = convert(num, ctx)
    den = convert(den, ctx)
    zero_den = SAFormula(conj([phi.node, make_atom(den, "=")]), phi.free)
    if not sa_empty(zero_den, budget):
        raise StError("the term is undefined somewhere on X")
    y = ctx.gens()[2]
    Y = SAFormula(conj([phi.node, make_atom(num * den, ">" if side > 0 else "<"),
                        make_atom(num * y - den, "=")]), (x, yname))
    stY = st_set(Y, budget)
    on_axis = substitute(stY.formula.node, {yname: fmpq(0)})
    return standard_set(SAFormula(on_axis, (x,)), budget)


def hull_member(point: Sequence[FieldElem], C: SAFormula, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Whether a point of R^n lies in the hull st^-1(C) of a closed set C over Q."""
    from .exact_algebra import fe_st
    from .semialgebraic import contains_point

    coords = []
    for a in point:
        if not isinstance(a, FieldElem):
            a = FieldElem.rational(a)
        coords.append(fe_st(a))
    return contains_point(C, coords, budget)
