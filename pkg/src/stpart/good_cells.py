"""Good cells, induced functions and good decompositions.

A good cell is described recursively over its projection: a graph of an
induced function (type bit 0), or a cylinder, half-cylinder or band bounded
by induced functions (type bit 1). Every cell carries a quantifier-free
region formula over Q; induced functions carry the formula of their graph.

Decompositions are read off a derivative-closed CAD over Q whose polynomial
family contains the limit data of every input, so each st(X_i) and each
st(graph f) is a union of cells. Certificates are independent decisions on
the emitted formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from flint import fmpq

from .adjacency import closure_formula
from .cad import CAD, DEFAULT_BUDGET, Budget, Cell
from .certificate import Certificate, check
from .exact_algebra import EPS, Poly, convert, ring, used_vars
from .formula import (
    FALSE, TRUE, And, Node, Quant, SAFormula, atoms, conj, disj, make_atom, map_atoms, neg,
    rename, shift, to_text,
)
from .semialgebraic import (
    cells_to_formula, decide, eliminate_quantifiers, projection, sa_empty, sa_equal, simplify,
    truth_on_cells,
)
from .st_operator import StError, StSet, _atom_polys, st_onevar, st_set

DEFAULT_NAMES = ("x", "y", "z")


class GoodCellError(ValueError):
    """A construction precondition failed or a certificate was violated."""


@dataclass(eq=False)
class InducedFn:
    """g: C -> R induced by a function f over Q(eps), given by graph formulas."""

    domain: "GoodCell"
    source: SAFormula
    graph_st: SAFormula
    label: str = ""

    def value_at(self, point: Sequence) -> float:
        """Numeric value of g at a rational point of the domain."""
        from .formula import substitute

        vals = {v: fmpq(p) for v, p in zip(self.graph_st.free, point)}
        fib = SAFormula(substitute(self.graph_st.node, vals), self.graph_st.free[-1:])
        pieces = st_onevar(fib)
        if len(pieces) != 1 or not pieces[0].is_point():
            raise GoodCellError(f"fibre of {self.label or 'g'} at {tuple(point)} is not a point")
        return pieces[0].lo.approx()

    def __repr__(self) -> str:
        return f"InducedFn({self.graph_st})"


@dataclass(eq=False)
class GoodCell:
    itype: tuple
    shape: str                      # point, graph, cylinder, below, band, above
    base: "GoodCell | None"
    fns: tuple = ()
    region: SAFormula = field(default_factory=lambda: SAFormula(TRUE, ()))
    index: tuple = ()

    @property
    def n(self) -> int:
        return len(self.itype)

    @property
    def dim(self) -> int:
        return sum(self.itype)

    def is_open(self) -> bool:
        return all(self.itype)

    @property
    def variables(self) -> tuple:
        return self.region.free

    def __repr__(self) -> str:
        return f"GoodCell({self.itype}, {self.shape}, {self.region})"


def point_cell() -> GoodCell:
    """The unique good cell of R^0."""
    return GoodCell((), "point", None)


@dataclass(eq=False)
class GoodDecomposition:
    ambient: str                    # "box" (I^n) or "R" (R^n)
    variables: tuple
    cells: list
    base: "GoodDecomposition | None" = None
    certificates: list = field(default_factory=list)
    induced: list = field(default_factory=list)
    st_sets: list = field(default_factory=list)
    cad: CAD | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.variables)

    def open_cells(self) -> list:
        return [c for c in self.cells if c.is_open()]

    def ok(self) -> bool:
        b = self.base.ok() if self.base is not None else True
        return b and all(c.ok for c in self.certificates)

    def to_record(self) -> dict:
        """Tree-shaped record, one entry per cell, stable across runs."""
        base_pos = {}
        if self.base is not None:
            base_pos = {id(c): i for i, c in enumerate(self.base.cells)}
        cells = []
        for c in self.cells:
            cells.append({
                "type": list(c.itype),
                "shape": c.shape,
                "region": str(c.region),
                "functions": [str(f.graph_st) for f in c.fns],
                "base": base_pos.get(id(c.base)) if c.base is not None else None,
            })
        return {
            "ambient": self.ambient,
            "variables": list(self.variables),
            "cells": cells,
            "induced": [dict(r) for r in self.induced],
            "certificates": [cert.record() for cert in self.certificates],
            "base": self.base.to_record() if self.base is not None else None,
        }


# ---------------------------------------------------------------------------
# reading good cells off a CAD


def _region(cad: CAD, cell: Cell) -> SAFormula:
    k = cell.level
    return SAFormula(cells_to_formula(cad, k, {id(cell)}), tuple(cad.variables[:k]))


def _linear(variables, v: str, c: int) -> Poly:
    ctx = ring(tuple(variables))
    g = ctx.gens()[list(variables).index(v)]
    return g - c


def _in_box(cad: CAD, cell: Cell, strict: bool = False) -> bool:
    vs = cad.variables
    for v in vs[:cell.level]:
        hi = cad.sign(cell, _linear(vs, v, 1))
        lo = cad.sign(cell, _linear(vs, v, -1))
        if strict and (hi >= 0 or lo <= 0):
            return False
        if hi > 0 or lo < 0:
            return False
    return True


def _on_box_line(cad: CAD, cell: Cell) -> bool:
    v = cad.variables[cell.level - 1]
    vs = cad.variables
    return cad.sign(cell, _linear(vs, v, 1)) == 0 or cad.sign(cell, _linear(vs, v, -1)) == 0


def cells_of_cad(cad: CAD, keep, pull=None, open_box: bool = False) -> list[list[GoodCell]]:
    """GoodCells for the CAD cells accepted by keep, level by level.

    With open_box the sections on the lines v = +-1 are the ends of each
    fibre (used when the box is the image of R^n); pull maps a region
    formula of level k to the ambient actually described.
    """
    root = point_cell()
    made = {id(cad.root): root}
    levels: list[list[GoodCell]] = []

    def region(c: Cell) -> SAFormula:
        r = _region(cad, c)
        return pull(r) if pull else r

    for k in range(len(cad.variables)):
        out = []
        parents = [cad.root] if k == 0 else cad.cells_by_level[k - 1]
        for p in parents:
            B = made.get(id(p))
            if B is None:
                continue
            kids = p.children
            fns = {}

            def fn(i):
                if i not in fns:
                    ch = kids[i]
                    g = region(ch)
                    fns[i] = InducedFn(B, g, g, label=f"h{ch.index}")
                return fns[i]

            for i, ch in enumerate(kids):
                if not keep(ch):
                    continue
                if ch.is_section():
                    g = fn(i)
                    gc = GoodCell(B.itype + (0,), "graph", B, (g,), g.graph_st, ch.index)
                else:
                    lo = i - 1 if i > 0 else None
                    hi = i + 1 if i + 1 < len(kids) else None
                    if open_box:
                        if lo is not None and _on_box_line(cad, kids[lo]):
                            lo = None
                        if hi is not None and _on_box_line(cad, kids[hi]):
                            hi = None
                    if lo is None and hi is None:
                        shape, fs = "cylinder", ()
                    elif lo is None:
                        shape, fs = "below", (fn(hi),)
                    elif hi is None:
                        shape, fs = "above", (fn(lo),)
                    else:
                        shape, fs = "band", (fn(lo), fn(hi))
                    gc = GoodCell(B.itype + (1,), shape, B, fs, region(ch), ch.index)
                made[id(ch)] = gc
                out.append(gc)
        levels.append(out)
    return levels


def _decomposition_tree(levels, variables, ambient, cad) -> GoodDecomposition:
    dec = None
    for k, cells in enumerate(levels):
        dec = GoodDecomposition(ambient, tuple(variables[:k + 1]), cells, dec, cad=cad)
    return dec


# ---------------------------------------------------------------------------
# certificates on decompositions


def _ambient_formula(variables, ambient: str) -> Node:
    if ambient == "R":
        return TRUE
    parts = []
    for v in variables:
        parts.append(make_atom(_linear(variables, v, 1), "<="))
        parts.append(make_atom(_linear(variables, v, -1), ">="))
    return conj(parts)


def certify_partition(dec: GoodDecomposition, budget: Budget = DEFAULT_BUDGET) -> list[Certificate]:
    """Disjointness, covering and projection compatibility, level by level."""
    certs = []
    vs = dec.variables
    # cells over different base cells are disjoint once the base is a partition
    groups: dict[int, list] = {}
    for c in dec.cells:
        groups.setdefault(id(c.base), []).append(c)
    bad = []
    for cs in groups.values():
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                both = SAFormula(conj([cs[i].region.node, cs[j].region.node]), vs)
                if not sa_empty(both, budget):
                    bad.append((str(cs[i].region), str(cs[j].region)))
    certs.append(check(f"cells of {dec.ambient}^{dec.n} pairwise disjoint", "sa_empty per cylinder",
                       not bad, overlaps=bad[:3]))
    union = SAFormula(disj([c.region.node for c in dec.cells]), vs)
    amb = SAFormula(_ambient_formula(vs, dec.ambient), vs)
    certs.append(check(f"cells cover {dec.ambient}^{dec.n}", "sa_equal", sa_equal(union, amb, budget)))
    if dec.base is not None:
        wrong = []
        for c in dec.cells:
            if not sa_equal(projection(c.region, vs[:-1]), c.base.region, budget):
                wrong.append(str(c.region))
        certs.append(check("projection of every cell is a base cell", "sa_equal", not wrong,
                           mismatches=wrong[:3]))
    return certs


def certify_refines(dec: GoodDecomposition, sets: Sequence[SAFormula], budget: Budget = DEFAULT_BUDGET) -> list[Certificate]:
    """Every given standard set is a union of cells."""
    certs = []
    vs = dec.variables
    for S in sets:
        S = SAFormula(rename(S.node, dict(zip(S.free, vs))), vs)
        split = []
        for c in dec.cells:
            meets = not sa_empty(SAFormula(conj([c.region.node, S.node]), vs), budget)
            inside = sa_empty(SAFormula(conj([c.region.node, neg(S.node)]), vs), budget)
            if meets and not inside:
                split.append(str(c.region))
        certs.append(check(f"decomposition partitions {S}", "sa_empty per cell", not split,
                           split_cells=split[:3]))
    return certs


# ---------------------------------------------------------------------------
# induced functions


def _fresh(name: str, taken) -> str:
    k = 1
    while f"{name}{k}" in taken:
        k += 1
    return f"{name}{k}"


def fibre_certificates(graph: SAFormula, domain: SAFormula, budget: Budget = DEFAULT_BUDGET) -> list[Certificate]:
    """Totality and uniqueness of the fibres of graph over domain, by decision."""
    xs, y = graph.free[:-1], graph.free[-1]
    G = rename(graph.node, dict(zip(graph.free[:-1], domain.free))) if xs != domain.free else graph.node
    xs = domain.free
    total = neg(conj([domain.node, neg(Quant("exists", y, G))]))
    for v in reversed(xs):
        total = Quant("forall", v, total)
    y2 = _fresh("_y", set(xs) | {y})
    G2 = rename(G, {y: y2})
    ctx = ring(tuple(xs) + (y, y2))
    gy, gy2 = ctx.gens()[len(xs)], ctx.gens()[len(xs) + 1]
    uniq = neg(conj([domain.node, G, G2, make_atom(gy - gy2, "!=")]))
    for v in reversed(tuple(xs) + (y, y2)):
        uniq = Quant("forall", v, uniq)
    return [
        check("every fibre over the domain is nonempty", "decide", decide(total, budget)),
        check("every fibre over the domain has at most one point", "decide", decide(uniq, budget)),
    ]


def make_induced_fn(f: SAFormula, C: GoodCell, budget: Budget = DEFAULT_BUDGET) -> InducedFn:
    """The function induced on C by f, given as the graph of f over Q(eps).

    f's last variable is the value. The domain condition C^h inside the
    domain X of f is decided exactly as C meeting st of the complement of X.
    """
    n = C.n
    if f.arity != n + 1:
        raise GoodCellError("graph arity does not match the cell")
    vs = f.free
    Cr = SAFormula(rename(C.region.node, dict(zip(C.region.free, vs[:-1]))), vs[:-1])
    if n >= 1:
        dom = projection(f, vs[:-1])
        outside = SAFormula(neg(eliminate_quantifiers(dom, budget).node), vs[:-1])
        st_out = st_set(outside, budget).formula
        if not sa_empty(SAFormula(conj([Cr.node, st_out.node]), vs[:-1]), budget):
            raise GoodCellError("precondition: the domain of f does not contain the monad of C")
        G = st_set(f, budget).formula
    else:
        G = st_set(f, budget).formula
    graph = SAFormula(conj([G.node, Cr.node]), vs)
    graph = simplify(graph, budget)
    if n >= 1:
        certs = fibre_certificates(graph, Cr, budget)
        for c in certs:
            if not c.ok:
                raise GoodCellError(f"not induced: {c.claim} fails for the st of the graph, {graph}")
    else:
        if not _single_point(graph, budget):
            raise GoodCellError(f"not induced: st of the value set is {graph}")
    return InducedFn(C, f, graph, label=str(f))


def _single_point(F: SAFormula, budget: Budget) -> bool:
    pieces = st_onevar(F, budget)
    return len(pieces) == 1 and pieces[0].is_point()


def compose_projection(g: InducedFn, C: GoodCell, keep: Sequence[int], budget: Budget = DEFAULT_BUDGET) -> InducedFn:
    """g o pi restricted to C, where pi keeps the coordinates keep (0-based, increasing)."""
    keep = list(keep)
    if any(k < 0 or k >= C.n for k in keep) or keep != sorted(set(keep)) or len(keep) != g.domain.n:
        raise GoodCellError(f"projection spec {keep} is out of range for a cell in R^{C.n}")
    vs = C.variables if C.n else ()
    out = _fresh("_t", set(vs))
    gm = dict(zip(g.graph_st.free[:-1], [vs[k] for k in keep]))
    gm[g.graph_st.free[-1]] = out
    graph = SAFormula(conj([C.region.node, rename(g.graph_st.node, gm)]), tuple(vs) + (out,))
    sm = dict(zip(g.source.free[:-1], [vs[k] for k in keep]))
    sm[g.source.free[-1]] = out
    source = SAFormula(rename(g.source.node, sm), tuple(vs) + (out,))
    return InducedFn(C, source, graph, label=f"{g.label} o pi{tuple(keep)}")


# ---------------------------------------------------------------------------
# shrinking families and differences


def shrink_formula(C: GoodCell) -> SAFormula:
    """X_eps of a family {X_r} with X_r inside C and st X_eps = closure of C.

    Sections are restricted to the shrunk base; sectors keep a margin eps to
    both bounding functions (by shifting the last variable) and, when
    unbounded, stay below 1/eps in absolute value.
    """
    if C.n == 0:
        return SAFormula(TRUE, ())
    vs = C.variables
    base = shrink_formula(C.base).node if C.base is not None and C.base.n else TRUE
    base = rename(base, dict(zip(C.base.variables, vs[:-1]))) if C.base is not None and C.base.n else base
    v = vs[-1]
    if C.shape == "graph":
        return SAFormula(conj([base, C.region.node]), vs)
    parts = [base, shift(C.region.node, v, -1), shift(C.region.node, v, 1)]
    if C.shape != "band":
        ctx = ring((EPS,) + tuple(vs))
        e, t = ctx.gens()[0], ctx.gens()[1 + len(vs) - 1]
        parts.append(make_atom(e * t - 1, "<="))
        parts.append(make_atom(e * t + 1, ">="))
    return SAFormula(conj(parts), vs)


def frontier_formula(C: GoodCell, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    """closure(C) minus C, computed from CAD adjacency."""
    cl = closure_formula(C.region, budget)
    return simplify(SAFormula(conj([cl.node, neg(C.region.node)]), C.variables), budget)


def good_cell_as_difference(C: GoodCell, budget: Budget = DEFAULT_BUDGET):
    """(X, Y, certificate) with st X minus st Y equal to C."""
    if C.n == 0:
        return SAFormula(TRUE, ()), SAFormula(FALSE, ()), check("point cell", "trivial", True)
    X = simplify(shrink_formula(C), budget)
    Y = frontier_formula(C, budget)
    sx = st_set(X, budget).formula
    sy = st_set(Y, budget).formula
    got = SAFormula(conj([sx.node, neg(sy.node)]), C.variables)
    cert = check("st X minus st Y equals the cell", "st_set + sa_equal", sa_equal(got, C.region, budget),
                 X=str(X), Y=str(Y))
    return X, Y, cert


# ---------------------------------------------------------------------------
# degenerate coordinates


def _const_fn(domain: GoodCell, value_formula: SAFormula, out: str) -> InducedFn:
    vs = domain.variables + (out,)
    g = SAFormula(conj([domain.region.node, rename(value_formula.node, {value_formula.free[0]: out})]), vs)
    return InducedFn(domain, g, g, label=str(value_formula))


def degenerate_projection(C: GoodCell, k: int, E: GoodCell, budget: Budget = DEFAULT_BUDGET) -> GoodCell:
    """The inverse image of E under the projection dropping coordinate k (0-based)
    of C, where C has type bit 0 at k; it is again a good cell."""
    if not 0 <= k < C.n or C.itype[k] != 0:
        raise GoodCellError("coordinate k is not a degenerate coordinate of C")
    vs = C.variables
    kept = tuple(v for i, v in enumerate(vs) if i != k)
    E_here = SAFormula(rename(E.region.node, dict(zip(E.variables, kept))), kept)
    piC = eliminate_quantifiers(projection(C.region, kept), budget)
    if not sa_empty(SAFormula(conj([E_here.node, neg(piC.node)]), kept), budget):
        raise GoodCellError("E is not contained in the projection of C")
    region = simplify(SAFormula(conj([C.region.node, E_here.node]), vs), budget)
    return _inverse(C, k, E, region, budget)


def _inverse(C: GoodCell, k: int, E: GoodCell, region: SAFormula, budget: Budget) -> GoodCell:
    n = C.n
    vs = C.variables
    if k == n - 1:
        # C is the graph of h over its base; E lives in the base
        h = C.fns[0]
        E_r = SAFormula(rename(E.region.node, dict(zip(E.variables, vs[:-1]))), vs[:-1])
        base = E if E.n == 0 else GoodCell(E.itype, E.shape, E.base, E.fns, E_r, E.index)
        g = InducedFn(base, h.source, SAFormula(conj([h.graph_st.node, E_r.node]), h.graph_st.free), h.label)
        return GoodCell(base.itype + (0,), "graph", base, (g,), region)
    # k lies in the base: recurse on the base, the last coordinate keeps its role
    Bk = C.base
    Ebase = E.base
    base_region = simplify(projection(region, vs[:-1]), budget)
    B = _inverse(Bk, k, Ebase, base_region, budget) if Bk.n else Bk
    fns = []
    for f in E.fns:
        # E's functions are functions of the kept base coordinates; read them on B
        kept = tuple(v for i, v in enumerate(vs[:-1]) if i != k)
        m = dict(zip(f.graph_st.free[:-1], kept))
        m[f.graph_st.free[-1]] = vs[-1]
        g = SAFormula(conj([B.region.node, rename(f.graph_st.node, m)]), vs)
        fns.append(InducedFn(B, g, g, label=f.label))
    return GoodCell(B.itype + (E.itype[-1],), E.shape, B, tuple(fns), region)


def project_st_over_degenerate(X: SAFormula, C: GoodCell, k: int, budget: Budget = DEFAULT_BUDGET,
                               depth: int = 4):
    """(A, B, certificate) with A minus B = pi(st X meet C x R), pi dropping coordinate k.

    C lives in R^n with type bit 0 at k; X lives in R^(n+1). A is st of the
    fattened projection pi{(x, y) in X : |x_k - h| <= eta} with eps := eta^m,
    m taken from the schedule 1..depth until it matches the direct slice.
    """
    from .formula import reparametrize

    n = C.n
    if X.arity != n + 1:
        raise GoodCellError("X must live in R^(n+1)")
    if not 0 <= k < n or C.itype[k] != 0:
        raise GoodCellError("coordinate k is not degenerate in C")
    vs = X.free
    kept = tuple(v for i, v in enumerate(vs) if i != k)
    Cx = rename(C.region.node, dict(zip(C.variables, vs[:-1])))
    S = st_set(X, budget).formula
    direct = eliminate_quantifiers(projection(SAFormula(conj([S.node, Cx]), vs), kept), budget)
    empty = SAFormula(FALSE, kept)
    if sa_empty(direct, budget):
        A = StSet(empty, None, [], empty)
        return A, StSet(empty, None, [], empty), check("projection of st X over C is empty", "sa_empty", True)
    # fatten around the graph of the degenerate coordinate
    t = _fresh("_h", set(vs))
    ctx = ring((EPS,) + tuple(vs) + (t,))
    gens = ctx.gens()
    e, xk, tt = gens[0], gens[1 + k], gens[-1]
    hk = C.region
    kdrop = tuple(v for i, v in enumerate(C.variables) if i != k)
    # graph of h: C itself, reading coordinate k as t
    near = make_atom((xk - tt) ** 2 - e ** 2, "<=")
    graph_h = rename(hk.node, {C.variables[i]: (t if i == k else vs[i]) for i in range(n)})
    for m in range(1, depth + 1):
        Xm = reparametrize(X.node, m)
        body = conj([Xm, Quant("exists", t, conj([graph_h, near]))])
        fat = projection(SAFormula(body, vs), kept)
        fat = eliminate_quantifiers(fat, budget)
        A = st_set(fat, budget)
        # restrict to the part lying over pi(C)
        piC = rename(eliminate_quantifiers(projection(SAFormula(Cx, vs[:-1]), kdrop), budget).node,
                     dict(zip(kdrop, kept[:-1])))
        got = SAFormula(conj([A.formula.node, piC]), kept)
        if sa_equal(got, direct, budget):
            outside = SAFormula(conj([A.formula.node, neg(piC)]), kept)
            outside = simplify(outside, budget)
            B = st_set(outside, budget) if not sa_empty(outside, budget) else StSet(empty, None, [], empty)
            diff = SAFormula(conj([A.formula.node, neg(B.formula.node)]), kept)
            cert = check("A minus B equals pi(st X meet C x R)", f"fattening with eps = eta^{m}",
                         sa_equal(diff, direct, budget), m=m)
            return A, B, cert
    raise GoodCellError(f"fattening schedule exhausted after depth {depth}; residual {direct}")


# ---------------------------------------------------------------------------
# decompositions


def _align(X: SAFormula, vs) -> SAFormula:
    return X if X.free == tuple(vs) else SAFormula(rename(X.node, dict(zip(X.free, vs))), tuple(vs))


def section_graphs(X: SAFormula, budget: Budget = DEFAULT_BUDGET) -> list[SAFormula]:
    """Graphs over Q(eps) of the top-level sections of a CAD of X that lie in X
    or bound a piece of X in their fibre."""
    vs = X.free
    cad, truth = truth_on_cells(X.node, vs, thom=True, budget=budget)
    n = len(vs)
    out = []
    parents = [cad.root] if n == 1 else cad.cells_by_level[n - 2]
    for p in parents:
        kids = p.children
        for i, ch in enumerate(kids):
            if not ch.is_section():
                continue
            near = [truth[id(kids[j])] for j in (i - 1, i, i + 1) if 0 <= j < len(kids)]
            if any(near):
                out.append(SAFormula(cells_to_formula(cad, n, {id(ch)}), vs))
    return out


def _coordinate_map(node: Node, vs, s_den: int, box: bool) -> Node:
    """Substitute v -> v/(1 + s_den*|v|) in every coordinate, clearing the
    (positive) denominators; box adds |v| < 1."""
    ctx = ring((EPS,) + tuple(vs))
    out = node
    for j, v in enumerate(vs, start=1):
        pieces = []
        for s in (1, -1):
            xv = ctx.gens()[j]
            den = 1 + s_den * s * xv

            def on_atom(a, xv=xv, den=den, j=j):
                P, rel = a.normal()
                P = convert(P, ctx)
                d = max((mon[j] for mon in P.to_dict()), default=0)
                num = ctx.from_dict({})
                for mon, c in P.to_dict().items():
                    mon = list(mon)
                    kv = mon[j]
                    mon[j] = 0
                    num += ctx.from_dict({tuple(mon): c}) * xv ** kv * den ** (d - kv)
                return make_atom(num, rel)

            part = [make_atom(xv, ">=" if s == 1 else "<")]
            if box:
                part += [make_atom(xv - 1, "<"), make_atom(xv + 1, ">")]
            pieces.append(conj(part + [map_atoms(out, on_atom)]))
        out = disj(pieces)
    return out


def _sigma_pull(node: Node, vs) -> Node:
    """Inverse image under x -> x/(1+|x|) of a formula describing part of the open box."""
    return _coordinate_map(node, vs, 1, False)


def _sigma_push(X: SAFormula) -> SAFormula:
    """Image of X under x -> x/(1+|x|) coordinatewise."""
    return SAFormula(_coordinate_map(X.node, X.free, -1, True), X.free)


def _decompose(sets_polys: list, vs, ambient: str, budget: Budget, open_box=False, pull=None,
               box: bool = True):
    lines = []
    if box:
        for v in vs:
            lines += [_linear(vs, v, 1), _linear(vs, v, -1)]
    polys = [p for p in sets_polys if used_vars(p) - {EPS}] + lines
    cad = CAD(polys, list(vs), thom=True, budget=budget)
    keep = (lambda c: _in_box(cad, c, strict=open_box)) if box else (lambda c: True)
    levels = cells_of_cad(cad, keep, pull=pull, open_box=open_box)
    return _decomposition_tree(levels, vs, ambient, cad)


def _all_certificates(dec: GoodDecomposition, budget: Budget) -> None:
    d = dec
    while d is not None:
        d.certificates.extend(certify_partition(d, budget))
        d = d.base


def good_decomposition_box(inputs: Sequence[SAFormula], budget: Budget = DEFAULT_BUDGET,
                           certify: bool = True, variables=None) -> GoodDecomposition:
    """A good decomposition of I^n (I = [-1, 1]) partitioning every st X_i.

    Each X_i must lie in I(R)^n. The sections of a CAD of each X_i give the
    functions f of the induction; over every open cell D of the base the set
    st(graph f) meets D x R either nowhere or in the graph of an induced
    function, and this is certified.
    """
    if not inputs:
        raise GoodCellError("no input sets")
    n = inputs[0].arity
    if n < 1 or n > 2:
        raise StError("good decompositions are implemented for n = 1, 2")
    vs = tuple(variables or DEFAULT_NAMES[:n])
    Xs = [_align(X, vs) for X in inputs]
    box = _ambient_formula(vs, "box")
    for X in Xs:
        if not sa_empty(SAFormula(conj([X.node, neg(box)]), vs), budget):
            raise GoodCellError(f"input {X} is not contained in I(R)^{n}")
    sts = [st_set(X, budget).formula for X in Xs]
    graphs = []
    for X in Xs:
        graphs.extend(section_graphs(X, budget))
    gsts = [st_set(G, budget).formula for G in graphs]
    polys = []
    for S in sts + gsts:
        polys.extend(_atom_polys(S.node))
    dec = _decompose(polys, vs, "box", budget)
    dec.st_sets = sts
    if certify:
        _all_certificates(dec, budget)
        dec.certificates.extend(certify_refines(dec, sts, budget))
        _induced_certificates(dec, graphs, gsts, budget)
    return dec


def _induced_certificates(dec: GoodDecomposition, graphs, gsts, budget: Budget) -> None:
    """Over each open base cell, st(graph f) is empty or an induced graph."""
    vs = dec.variables
    bases = dec.base.open_cells() if dec.base is not None else [dec.cells[0].base]
    for G, S in zip(graphs, gsts):
        for D in bases:
            over = [c for c in dec.cells if c.base is D]
            hits = [c for c in over if not sa_empty(SAFormula(conj([c.region.node, S.node]), vs), budget)]
            rec = {"function": str(G), "cell": str(D.region)}
            if not hits:
                rec["verdict"] = "empty"
                dec.induced.append(rec)
                continue
            good = len(hits) == 1 and hits[0].itype[-1] == 0
            if good:
                part = SAFormula(conj([S.node, hits[0].region.node]), vs)
                good = sa_equal(part, hits[0].region, budget)
            if good and D.n:
                good = all(c.ok for c in fibre_certificates(hits[0].region, D.region, budget))
            rec["verdict"] = "induced" if good else "violated"
            if good:
                rec["graph"] = str(hits[0].region)
            dec.induced.append(rec)
            dec.certificates.append(check(f"{G} induces a function on {D.region}", "cell count + decide", good))


def good_decomposition_Rn(inputs: Sequence[SAFormula], budget: Budget = DEFAULT_BUDGET,
                          certify: bool = True, variables=None, route: str | None = None) -> GoodDecomposition:
    """A good decomposition of R^n partitioning every st X_i.

    The sets are carried into the open box by x -> x/(1+|x|) in each
    coordinate, decomposed there, and the cells inside the open box pulled
    back; the homeomorphism is piecewise rational over Q and preserves the
    cylindrical structure. Inside the open box st of the image of X equals
    the image of st X; route "image" uses the latter, route "push" takes st
    of the pushed set over Q(eps). Route "direct" decomposes R^n with a CAD
    of the st sets themselves (default for n = 2, where the pushed
    polynomials double in degree).
    """
    if not inputs:
        raise GoodCellError("no input sets")
    n = inputs[0].arity
    if n < 1 or n > 2:
        raise StError("good decompositions are implemented for n = 1, 2")
    vs = tuple(variables or DEFAULT_NAMES[:n])
    Xs = [_align(X, vs) for X in inputs]
    sts = [st_set(X, budget).formula for X in Xs]
    route = route or ("image" if n == 1 else "direct")
    if route == "direct":
        polys = []
        for S in sts:
            polys.extend(_atom_polys(S.node))
        dec = _decompose(polys, vs, "R", budget, box=False)
        dec.st_sets = sts
        if certify:
            _all_certificates(dec, budget)
            dec.certificates.extend(certify_refines(dec, sts, budget))
        return dec
    if route == "push":
        boxed = [st_set(_sigma_push(X), budget).formula for X in Xs]
    elif route == "image":
        boxed = [simplify(_sigma_push(S), budget) for S in sts]
    else:
        raise ValueError(f"unknown route {route}")
    polys = []
    for S in boxed:
        polys.extend(_atom_polys(S.node))

    def pull(r: SAFormula) -> SAFormula:
        return simplify(SAFormula(_sigma_pull(r.node, r.free), r.free), budget)

    dec = _decompose(polys, vs, "R", budget, open_box=True, pull=pull)
    dec.st_sets = sts
    if certify:
        _all_certificates(dec, budget)
        dec.certificates.extend(certify_refines(dec, sts, budget))
    return dec


# ---------------------------------------------------------------------------
# normal form of expressions built from st sets


@dataclass(frozen=True)
class StAtom:
    X: SAFormula


@dataclass(frozen=True)
class Complement:
    arg: object


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class Intersection:
    left: object
    right: object


@dataclass(frozen=True)
class Difference:
    left: object
    right: object


@dataclass(frozen=True)
class ProductR:
    """arg x R (a new last coordinate)."""

    arg: object


@dataclass(frozen=True)
class Project:
    """Image under the projection onto the first m coordinates."""

    arg: object
    m: int


def evaluate(expr, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    """Quantifier-free formula over Q of a set expression (variables x, y, ...)."""
    if isinstance(expr, StAtom):
        vs = DEFAULT_NAMES[:expr.X.arity]
        return _align(st_set(_align(expr.X, vs), budget).formula, vs)
    if isinstance(expr, Complement):
        a = evaluate(expr.arg, budget)
        return SAFormula(neg(a.node), a.free)
    if isinstance(expr, (Union, Intersection, Difference)):
        a, b = evaluate(expr.left, budget), evaluate(expr.right, budget)
        if a.free != b.free:
            raise GoodCellError("operands live in different dimensions")
        if isinstance(expr, Union):
            node = disj([a.node, b.node])
        elif isinstance(expr, Intersection):
            node = conj([a.node, b.node])
        else:
            node = conj([a.node, neg(b.node)])
        return simplify(SAFormula(node, a.free), budget)
    if isinstance(expr, ProductR):
        a = evaluate(expr.arg, budget)
        return SAFormula(a.node, DEFAULT_NAMES[:a.arity + 1])
    if isinstance(expr, Project):
        a = evaluate(expr.arg, budget)
        if not 0 <= expr.m <= a.arity:
            raise GoodCellError("projection onto more coordinates than available")
        return eliminate_quantifiers(projection(a, a.free[:expr.m]), budget)
    if isinstance(expr, SAFormula):
        return evaluate(StAtom(expr), budget)
    raise TypeError(expr)


def normal_form_ind(expr, budget: Budget = DEFAULT_BUDGET, shrink: bool = False):
    """Pairs (X_j, Y_j) over Q(eps) whose union of st X_j minus st Y_j is the set.

    The set is split into the good cells of a CAD; each cell C gives the pair
    (closure C, frontier C), or with shrink the pair of good_cell_as_difference.
    Returns (pairs, certificate).
    """
    E = evaluate(expr, budget)
    vs = E.free
    if not vs:
        pairs = [(SAFormula(TRUE, ()), SAFormula(FALSE, ()))] if decide(E.node, budget) else []
        return pairs, check("normal form of a sentence", "decide", True)
    cad, truth = truth_on_cells(E.node, vs, thom=True, budget=budget)
    mem = {k for k, v in truth.items() if v}
    levels = cells_of_cad(cad, lambda c: True)
    pairs = []
    for C in levels[-1]:
        ch = [c for c in cad.cells if c.index == C.index][0]
        if id(ch) not in mem:
            continue
        if shrink:
            X, Y, _ = good_cell_as_difference(C, budget)
        else:
            X = closure_formula(C.region, budget)
            Y = frontier_formula(C, budget)
        pairs.append((X, Y))
    cert = check("union of st X_j minus st Y_j equals the expression", "st_set + sa_equal",
                 sa_equal(union_of_differences(pairs, vs, budget), E, budget), pairs=len(pairs))
    return pairs, cert


def union_of_differences(pairs, vs, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    parts = []
    for X, Y in pairs:
        sx = _st_any(_align(X, vs), budget)
        sy = _st_any(_align(Y, vs), budget)
        parts.append(conj([sx.node, neg(sy.node)]))
    return SAFormula(disj(parts), tuple(vs))


def _st_any(X: SAFormula, budget: Budget) -> SAFormula:
    """st X; for a formula over Q this is its closure."""
    if X.field == "Q":
        return closure_formula(X, budget)
    return st_set(X, budget).formula


def cell_at(dec: GoodDecomposition, point: Sequence) -> GoodCell:
    """The cell of a decomposition containing a rational point."""
    from .semialgebraic import contains_point

    for c in dec.cells:
        if contains_point(c.region, point):
            return c
    raise GoodCellError(f"no cell contains {tuple(point)}")
