"""Cylindrical algebraic decomposition over Q and over Q(eps).

Over Q(eps) the infinitesimal is handled by transfer: the projection is
carried all the way down to the reserved variable ``e``; any rational e*
below the smallest positive root of the e-level polynomials gives a real
slice with the same cell structure and sign conditions as eps itself.
Lifting then runs over Q at e = e*.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from itertools import combinations
from typing import Sequence

from flint import fmpq, fmpq_poly

from .exact_algebra import (
    EPS, Poly, coeffs_in, convert, degree_in, irreducible_factors, names_of,
    primitive_part, ring, to_upoly, used_vars,
)
from .realalg import (
    QQ, Field, KRoot, NumberField, RealAlg, eval_to_kpoly, extend_field, k_isolate,
    kp_eval_rat, real_roots, simplest_between,
)


class ResourceError(RuntimeError):
    """A configured budget (variables, degree) was exceeded."""


@dataclass
class Budget:
    max_vars: int = 3
    max_degree: int = 4


DEFAULT_BUDGET = Budget()


def main_var(p: Poly, order: Sequence[str]) -> int:
    """Index in order of the highest variable of p (-1 for constants)."""
    used = used_vars(p)
    best = -1
    for i, v in enumerate(order):
        if v in used:
            best = i
    return best


def _key(p: Poly) -> str:
    return str(p)


def _add(table: dict, p: Poly, order: Sequence[str]) -> None:
    for f in irreducible_factors(p):
        lvl = main_var(f, order)
        if lvl >= 0:
            table[lvl].setdefault(_key(f), f)


def derivative_closure(fs: dict, var: str, order, table) -> None:
    """Close a level's factor set under differentiation in its main variable."""
    stack = list(fs.values())
    while stack:
        f = stack.pop()
        if degree_in(f, var) >= 2:
            d = f.derivative(var)
            for g in irreducible_factors(d):
                lvl = main_var(g, order)
                if lvl < 0:
                    continue
                if order[lvl] == var:
                    if _key(g) not in fs:
                        fs[_key(g)] = g
                        stack.append(g)
                else:
                    table[lvl].setdefault(_key(g), g)


def project(polys: Sequence[Poly], order: Sequence[str], thom_levels: Sequence[int] = ()) -> list[list[Poly]]:
    """Projection factor sets per level (level i has main variable order[i]).

    The operator uses all coefficients, discriminants and pairwise resultants
    of the irreducible factors; levels listed in thom_levels are first closed
    under differentiation in their main variable.
    """
    table: list[dict] = [dict() for _ in order]
    for p in polys:
        _add(table, p, order)
    for lvl in range(len(order) - 1, 0, -1):
        v = order[lvl]
        if lvl in thom_levels:
            derivative_closure(table[lvl], v, order, table)
        fs = [table[lvl][k] for k in sorted(table[lvl])]
        for f in fs:
            for c in coeffs_in(f, v):
                _add(table, c, order)
            if degree_in(f, v) >= 2:
                _add(table, f.discriminant(v), order)
        for f, g in combinations(fs, 2):
            _add(table, f.resultant(g, v), order)
    if 0 in thom_levels:
        derivative_closure(table[0], order[0], order, table)
    return [[t[k] for k in sorted(t)] for t in table]


# ---------------------------------------------------------------------------
# cells


@dataclass(eq=False)
class Cell:
    index: tuple
    K: Field
    coords: list            # K elements (fmpq_poly), last entry may be a KRoot
    signs: tuple            # signs of the lifting factors of this level
    parent: "Cell | None" = field(default=None, repr=False)
    children: list = field(default_factory=list, repr=False)
    _field_cache: tuple | None = field(default=None, repr=False)

    @property
    def level(self) -> int:
        return len(self.index)

    @property
    def dim(self) -> int:
        return sum(i % 2 for i in self.index)

    def is_section(self) -> bool:
        return self.index[-1] % 2 == 0

    def ancestors(self) -> list["Cell"]:
        out, c = [], self
        while c is not None and c.level > 0:
            out.append(c)
            c = c.parent
        return out[::-1]

    def in_field(self):
        """(K, coords) with every coordinate an element of K."""
        if self._field_cache is None:
            if self.coords and isinstance(self.coords[-1], KRoot):
                pk, pc = self.parent.in_field() if self.parent.level > 0 else (QQ, [])
                K2, c2, beta = extend_field(pk, list(pc), self.coords[-1])
                self._field_cache = (K2, c2 + [beta])
            else:
                self._field_cache = (self.K, list(self.coords))
        return self._field_cache

    def approx(self) -> list[float]:
        from .realalg import kelem_approx

        out = []
        for c in self.coords:
            out.append(c.approx() if isinstance(c, KRoot) else kelem_approx(self.K, c))
        return out

    def rational_coords(self):
        """Coordinates as fmpq when all are rational, else None."""
        out = []
        for c in self.coords:
            if isinstance(c, KRoot):
                if c.value is None:
                    return None
                out.append(c.value)
            elif c.degree() <= 0:
                out.append(c.coeffs()[0] if not c.is_zero() else fmpq(0))
            else:
                return None
        return out


class CAD:
    """A CAD of R^n (n = len(variables)) sign-invariant for the given polynomials.

    ``polys`` may involve the reserved variable ``e`` (eps); the decomposition
    then describes the real closure of Q(eps) via the slice e = e_star.
    """

    def __init__(self, polys: Sequence[Poly], variables: Sequence[str], thom: bool | Sequence[int] = False,
                 budget: Budget = DEFAULT_BUDGET, extra_e: Sequence[Poly] = (),
                 base_filter=None):
        self.variables = list(variables)
        self.base_filter = base_filter
        n = len(self.variables)
        if n > budget.max_vars + 1:
            raise ResourceError(f"CAD in {n} variables exceeds the budget of {budget.max_vars}")
        polys = [p for p in polys if not p.is_zero()]
        for p in polys:
            if p.total_degree() > 2 * budget.max_degree + 2:
                raise ResourceError(f"input degree {p.total_degree()} exceeds the budget")
        self.has_eps = any(EPS in used_vars(p) for p in polys) or bool(extra_e)
        order = ([EPS] if self.has_eps else []) + self.variables
        self.order = order
        ctx = ring(tuple(order))
        self.ctx = ctx
        polys = [convert(p, ctx) for p in polys]
        off = 1 if self.has_eps else 0
        if thom is True:
            thom_levels = list(range(off, len(order)))
        else:
            thom_levels = [t + off for t in (thom or [])]
        table = project(polys + [convert(p, ctx) for p in extra_e], order, thom_levels)
        self.e_star = None
        if self.has_eps:
            self.e_polys = table[0]
            self.e_star = choose_e_star(table[0])
            table = table[1:]
        self.orig_levels = table
        # lifting factor sets: substitute e* and refactor
        self.lctx = ring(tuple(self.variables)) if self.variables else None
        self.levels: list[list[Poly]] = [[] for _ in self.variables]
        self.orig_split: list[dict] = [dict() for _ in self.variables]
        seen: list[dict] = [dict() for _ in self.variables]
        for lvl, fs in enumerate(table):
            for f in fs:
                g = self._at_e_star(f)
                parts = []
                for h in irreducible_factors(g):
                    j = main_var(h, self.variables)
                    if j < 0:
                        continue
                    k = _key(h)
                    if k not in seen[j]:
                        seen[j][k] = len(self.levels[j])
                        self.levels[j].append(h)
                    parts.append((j, seen[j][k]))
                self.orig_split[lvl][_key(f)] = (g, parts)
        self.factor_index = seen
        self.root = Cell((), QQ, [], ())
        self._sign_cache: dict = {}
        if self.variables:
            self._lift(self.root, 0)
        self.cells_by_level = [[] for _ in self.variables]
        self._collect(self.root)

    # -- construction -----------------------------------------------------
    def _at_e_star(self, f: Poly) -> Poly:
        if self.has_eps:
            f = f.subs({EPS: self.e_star})
        if self.lctx is None:
            if not f.is_constant():
                raise ValueError("polynomial is not constant in a zero-variable CAD")
            return f
        return convert(f, self.lctx)

    def _collect(self, c: Cell) -> None:
        for ch in c.children:
            self.cells_by_level[ch.level - 1].append(ch)
            self._collect(ch)

    def _lift(self, cell: Cell, lvl: int) -> None:
        var = self.variables[lvl]
        fs = self.levels[lvl]
        if cell.K.nf is None and all(not isinstance(c, KRoot) for c in cell.coords):
            cells = self._lift_rational(cell, lvl, fs)
        else:
            K, coords = cell.in_field()
            prev = self.variables[:lvl]
            kps = [eval_to_kpoly(f, prev, coords, var, K) for f in fs]
            roots, rsigns = k_isolate(kps, K)
            samples = _sector_samples_kroot(roots)
            cells = []
            for i in range(2 * len(roots) + 1):
                if i % 2 == 0:
                    q = samples[i // 2]
                    pt = list(coords) + [fmpq_poly([q])]
                    signs = tuple(K.sign(kp_eval_rat(kp, q, K)) if kp else 0 for kp in kps)
                    cells.append(Cell(cell.index + (i + 1,), K, pt, signs, cell))
                else:
                    r = roots[i // 2]
                    last = fmpq_poly([r.value]) if r.value is not None else r
                    signs = tuple(rsigns[i // 2])
                    cells.append(Cell(cell.index + (i + 1,), K, list(coords) + [last], signs, cell))
        cell.children = cells
        if lvl + 1 < len(self.variables):
            for ch in cells:
                if lvl == 0 and self.base_filter is not None and not self.base_filter(ch):
                    continue
                self._lift(ch, lvl + 1)

    def _lift_rational(self, cell: Cell, lvl: int, fs: list) -> list:
        """Lift over a point with rational coordinates using rational root isolation."""
        var = self.variables[lvl]
        prev = self.variables[:lvl]
        qs = [c.coeffs()[0] if not c.is_zero() else fmpq(0) for c in cell.coords]
        vals = dict(zip(prev, qs))
        roots = []
        for f in fs:
            g = f.subs(vals) if vals else f
            if not g.is_zero():
                roots.extend(real_roots(to_upoly(g, var)))
        roots.sort(key=cmp_to_key(lambda a, b: a.cmp(b)))
        dedup = []
        for r in roots:
            if not dedup or dedup[-1].cmp(r) != 0:
                dedup.append(r)
        samples = _sector_samples_realalg(dedup)
        names = self.variables[:lvl + 1]
        cells = []
        for i in range(2 * len(dedup) + 1):
            if i % 2 == 0:
                K, last = QQ, fmpq_poly([samples[i // 2]])
            else:
                r = dedup[i // 2]
                if r.is_rational():
                    K, last = QQ, fmpq_poly([r.value])
                else:
                    K, last = Field(NumberField(r.copy())), fmpq_poly([0, 1])
            coords = [fmpq_poly([q]) for q in qs] + [last]
            signs = tuple(_kp_sign(K, eval_to_kpoly(f, names, coords, None, K)) for f in fs)
            cells.append(Cell(cell.index + (i + 1,), K, coords, signs, cell))
        return cells

    # -- queries ----------------------------------------------------------
    @property
    def cells(self) -> list[Cell]:
        """Top-level cells in canonical (lexicographic index) order."""
        return self.cells_by_level[-1] if self.variables else [self.root]

    def level_sign(self, cell: Cell, lvl: int, k: int) -> int:
        anc = cell.ancestors()[lvl]
        return anc.signs[k]

    def sign(self, cell: Cell, p: Poly) -> int:
        """Sign of an arbitrary polynomial at the sample point of cell."""
        key = (id(cell), _key(p))
        hit = self._sign_cache.get(key)
        if hit is not None:
            return hit
        s = self._sign_direct(cell, p)
        self._sign_cache[key] = s
        return s

    def _sign_direct(self, cell: Cell, p: Poly) -> int:
        ctx_all = ring(tuple(self.order))
        p = convert(p, ctx_all)
        g = self._at_e_star(p)
        if g.is_zero():
            return 0
        if g.is_constant():
            c = fmpq(list(g.to_dict().values())[0])
            return 1 if c > 0 else -1
        # product of known factor signs when possible
        sgn = 1
        const, facs = g.factor()
        sgn = 1 if const > 0 else -1
        for f, m in facs:
            if f.is_constant():
                continue
            h = primitive_part(f)
            mon = next(iter(h.to_dict()))
            scale = fmpq(f.to_dict()[mon]) / fmpq(h.to_dict()[mon])
            if scale < 0 and m % 2 == 1:
                sgn = -sgn
            j = main_var(h, self.variables)
            if j >= cell.level:
                raise ValueError("polynomial involves variables above the cell level")
            idx = self.factor_index[j].get(_key(h))
            if idx is not None:
                s = cell.ancestors()[j].signs[idx]
            else:
                s = self._eval_at(cell.ancestors()[j], h)
            if s == 0:
                return 0
            if m % 2 == 1:
                sgn *= s
        return sgn

    def _eval_at(self, cell: Cell, h: Poly) -> int:
        lvl = cell.level
        vars_ = self.variables[:lvl]
        last = cell.coords[-1]
        if isinstance(last, KRoot):
            kp = eval_to_kpoly(h, vars_[:-1], cell.coords[:-1], vars_[-1], cell.K)
            return last.sign_of(kp)
        K = cell.K
        return _kp_sign(K, eval_to_kpoly(h, vars_, cell.coords, None, K))

    def orig_sign(self, cell: Cell, lvl: int, f: Poly) -> int:
        """Sign on cell of an original (possibly eps-dependent) level factor."""
        g, parts = self.orig_split[lvl][_key(f)]
        return self.sign(cell, g) if parts else (1 if not g.is_zero() and list(g.to_dict().values())[0] > 0 else 0)


def _kp_sign(K: Field, kp: list) -> int:
    return K.sign(kp[0]) if kp else 0


def _sector_samples_realalg(roots: list[RealAlg]) -> list[fmpq]:
    if not roots:
        return [fmpq(0)]
    out = []
    first = roots[0]
    out.append(_below(first.lo if not first.is_rational() else first.value))
    for a, b in zip(roots, roots[1:]):
        out.append(a.rational_between(b))
    last = roots[-1]
    out.append(_above(last.hi if not last.is_rational() else last.value))
    return out


def _below(x: fmpq) -> fmpq:
    from math import floor

    return fmpq(floor(x) - 1) if x > 0 else fmpq(floor(x) - 1)


def _above(x: fmpq) -> fmpq:
    from math import floor

    return fmpq(floor(x) + 1)


def _sector_samples_kroot(roots: list[KRoot]) -> list[fmpq]:
    if not roots:
        return [fmpq(0)]
    out = [_below(roots[0].lo)]
    for a, b in zip(roots, roots[1:]):
        while True:
            ha = a.value if a.value is not None else a.hi
            lb = b.value if b.value is not None else b.lo
            if ha < lb:
                out.append(simplest_between(ha, lb))
                break
            a.refine()
            b.refine()
    out.append(_above(roots[-1].hi))
    return out


def choose_e_star(e_polys: Sequence[Poly]) -> fmpq:
    """A rational e* in (0, r1), r1 the least positive root of the e-level set."""
    bound = None
    for p in e_polys:
        for r in real_roots(to_upoly(p, EPS)):
            if r.sign() > 0 and (bound is None or r.cmp(bound) < 0):
                bound = r
    e = fmpq(1, 2)
    while bound is not None and bound.cmp_rat(e) <= 0:
        e /= 2
    return e
