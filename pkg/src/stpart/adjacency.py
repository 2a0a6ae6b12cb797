"""Closures and adjacency of cells in CADs of R^1 and R^2 over Q.

At a base section x0 the fibre roots b_1 < ... < b_m get disjoint rational
windows (c_j, d_j). A rational a left of x0 is chosen so that no polynomial
G(x, c_j), G(x, d_j) vanishes on [a, x0); then each root of G(a, .) lies in
the window of its limit b_j, or beyond all windows (limit -inf or +inf).
The same on the right. This gives the closure of every cell exactly.
"""
from __future__ import annotations

from functools import cmp_to_key

from flint import fmpq, fmpq_poly

from .cad import CAD, Cell
from .exact_algebra import to_upoly, used_vars
from .realalg import KRoot, RealAlg, real_roots, simplest_between


def _coord_obj(cell: Cell):
    last = cell.coords[-1]
    if isinstance(last, KRoot):
        return last
    if last.degree() >= 1:
        return cell.K.nf.theta
    q = last.coeffs()[0] if not last.is_zero() else fmpq(0)
    return RealAlg.rational(q)


def _bracket(r):
    return (r.value, r.value) if r.value is not None else (r.lo, r.hi)


def _windows(roots: list) -> list[tuple[fmpq, fmpq]]:
    """Disjoint rational windows (c, d), c < root < d, one per fibre root."""
    while True:
        ok = True
        for r, s in zip(roots, roots[1:]):
            if _bracket(r)[1] >= _bracket(s)[0]:
                ok = False
                r.refine()
                s.refine()
        if ok:
            break
    out = []
    for j, r in enumerate(roots):
        lo, hi = _bracket(r)
        if lo == hi:
            prev = _bracket(roots[j - 1])[1] if j > 0 else lo - 2
            nxt = _bracket(roots[j + 1])[0] if j + 1 < len(roots) else hi + 2
            out.append((simplest_between(prev, lo), simplest_between(hi, nxt)))
        else:
            out.append((lo, hi))
    return out


def _side_point(cad: CAD, base: Cell, lines: list, direction: int) -> fmpq:
    """Rational point strictly on one side of the base section x0 with no root of
    the lines or other base roots in between."""
    x = cad.variables[0]
    r = _coord_obj(base)
    r = r.copy() if isinstance(r, RealAlg) else r
    others = [_coord_obj(c) for c in cad.cells_by_level[0] if c.is_section() and c is not base]
    bad = []
    for g in lines:
        if used_vars(g):
            bad.extend(real_roots(to_upoly(g, x)))
    avoid = others + bad
    h = fmpq(1, 2)
    while True:
        lo, hi = _bracket(r)
        if direction < 0:
            a = lo - h if lo == hi else lo
            seg = (a, hi)
        else:
            a = hi + h if lo == hi else hi
            seg = (lo, a)
        if all(not (o.cmp_rat(seg[0]) >= 0 and o.cmp_rat(seg[1]) <= 0) for o in avoid):
            return a
        if lo == hi:
            h /= 2
        else:
            r.refine()


def _limits(cad: CAD, base: Cell, side_cell: Cell, direction: int) -> list:
    """For each section over side_cell (in order), the index (0-based) of its
    limit among the sections over base, or -inf/+inf as None with a sign."""
    roots = [_coord_obj(ch) for ch in base.children if ch.is_section()]
    wins = _windows(roots)
    y = cad.variables[1]
    G = cad.levels[1]
    lines = []
    for c, d in wins:
        for g in G:
            lines.append(g.subs({y: c}))
            lines.append(g.subs({y: d}))
    a = _side_point(cad, base, lines, direction)
    x = cad.variables[0]
    rts = []
    for g in G:
        u = g.subs({x: a})
        if not u.is_zero():
            rts.extend(real_roots(to_upoly(u, y)))
    rts.sort(key=cmp_to_key(lambda p, q: p.cmp(q)))
    dedup = []
    for r in rts:
        if not dedup or dedup[-1].cmp(r) != 0:
            dedup.append(r)
    n_side = sum(1 for ch in side_cell.children if ch.is_section())
    if len(dedup) != n_side:
        raise RuntimeError("section count changed inside a sector")
    out = []
    for r in dedup:
        tag = None
        for j, (c, d) in enumerate(wins):
            if r.cmp_rat(c) > 0 and r.cmp_rat(d) < 0:
                tag = ("fin", j)
                break
        if tag is None:
            if not wins or r.cmp_rat(wins[-1][1]) >= 0:
                tag = ("inf", 1)
            elif r.cmp_rat(wins[0][0]) <= 0:
                tag = ("inf", -1)
            else:
                raise RuntimeError("a bounded section has no limit root")
        out.append(tag)
    return out


def closure_map(cad: CAD) -> dict[int, set[int]]:
    """id(cell) -> ids of the top-level cells in its closure (itself included)."""
    n = len(cad.variables)
    cl: dict[int, set[int]] = {}
    if n == 1:
        cells = cad.cells
        for i, c in enumerate(cells):
            s = {id(c)}
            if not c.is_section():
                for j in (i - 1, i + 1):
                    if 0 <= j < len(cells):
                        s.add(id(cells[j]))
            cl[id(c)] = s
        return cl
    if n != 2:
        raise ValueError("closures are implemented for CADs of R^1 and R^2")
    bases = cad.cells_by_level[0]
    for b in bases:
        kids = b.children
        for i, c in enumerate(kids):
            s = {id(c)}
            if not c.is_section():
                for j in (i - 1, i + 1):
                    if 0 <= j < len(kids):
                        s.add(id(kids[j]))
            cl[id(c)] = s
    for k, b in enumerate(bases):
        if not b.is_section():
            continue
        fibre = b.children
        pts = [ch for ch in fibre if ch.is_section()]
        for side_idx, direction in ((k - 1, -1), (k + 1, 1)):
            if not 0 <= side_idx < len(bases):
                continue
            side = bases[side_idx]
            lims = _limits(cad, b, side, direction)
            # fibre positions: point j has child index 2j+1 (0-based), sectors even
            def pos(tag, lower: bool):
                if tag[0] == "fin":
                    return 2 * tag[1] + 1
                return 0 if tag[1] < 0 else len(fibre) - 1

            sk = side.children
            for i, c in enumerate(sk):
                if c.is_section():
                    t = lims[i // 2]
                    if t[0] == "fin":
                        cl[id(c)].add(id(pts[t[1]]))
                else:
                    j = i // 2
                    lo = lims[j - 1] if j > 0 else ("inf", -1)
                    hi = lims[j] if j < len(lims) else ("inf", 1)
                    p0, p1 = pos(lo, True), pos(hi, False)
                    if lo[0] == "inf" and hi[0] == "inf" and lo[1] == hi[1]:
                        continue
                    for q in range(p0, p1 + 1):
                        cl[id(c)].add(id(fibre[q]))
    # close transitively
    changed = True
    while changed:
        changed = False
        for key, s in cl.items():
            extra = set()
            for t in s:
                extra |= cl.get(t, set())
            if not extra <= s:
                s |= extra
                changed = True
    return cl


def closure_of(cad: CAD, members) -> list[Cell]:
    """Top-level cells forming the closure of a union of cells."""
    cl = closure_map(cad)
    ids = set()
    for c in members:
        ids |= cl[id(c)]
    return [c for c in cad.cells if id(c) in ids]


def components(cad: CAD, members) -> list[list[Cell]]:
    """Connected components of a union of cells (closure-intersection adjacency)."""
    cl = closure_map(cad)
    members = list(members)
    ids = {id(c) for c in members}
    parent = {id(c): id(c) for c in members}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for c in members:
        for t in cl[id(c)]:
            if t in ids:
                ra, rb = find(id(c)), find(t)
                if ra != rb:
                    parent[ra] = rb
    groups: dict[int, list[Cell]] = {}
    for c in members:
        groups.setdefault(find(id(c)), []).append(c)
    return list(groups.values())


def closure_formula(F, budget=None):
    """Quantifier-free formula over Q of the topological closure of F (n <= 2)."""
    from .cad import DEFAULT_BUDGET
    from .formula import SAFormula
    from .semialgebraic import cells_to_formula, eliminate_quantifiers, free_level_cells, truth_on_cells

    budget = budget or DEFAULT_BUDGET
    if F.arity == 0:
        return F
    F = eliminate_quantifiers(F, budget)
    cad, truth = truth_on_cells(F.node, F.free, thom=True, budget=budget)
    mem = [c for c in free_level_cells(cad, F.arity) if truth[id(c)]]
    ids = {id(c) for c in closure_of(cad, mem)}
    return SAFormula(cells_to_formula(cad, F.arity, ids), F.free)
