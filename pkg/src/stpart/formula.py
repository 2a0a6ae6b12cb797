"""First-order formulas over the ordered-ring language with eps.

Atoms keep their two sides as written (each side a polynomial divided by a
polynomial in eps) so that printing reproduces the parsed text; semantic
routines use ``Atom.normal()``, which clears denominators and moves
everything to the left-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from flint import fmpq, fmpq_poly

from .exact_algebra import (
    EPS, FieldElem, Poly, convert, fe_sign, names_of, rat_str, ring, used_vars,
)

RELS = ("<", "<=", "=", "!=", ">=", ">")
FLIP = {"<": ">", "<=": ">=", "=": "=", "!=": "!=", ">=": "<=", ">": "<"}
NEGATE = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">=": "<", ">": "<="}


def rel_holds(rel: str, s: int) -> bool:
    return {"<": s < 0, "<=": s <= 0, "=": s == 0, "!=": s != 0, ">=": s >= 0, ">": s > 0}[rel]


def poly_ring(names: Iterable[str]):
    names = tuple(n for n in names if n != EPS)
    return ring((EPS,) + names)


@dataclass(frozen=True, eq=False)
class Term:
    """num / den with num a polynomial and den a nonzero polynomial in eps."""

    num: Poly
    den: fmpq_poly = field(default_factory=lambda: fmpq_poly([1]))

    def convert(self, ctx) -> "Term":
        return Term(convert(self.num, ctx), self.den)


class Node:
    def variables(self) -> set[str]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Atom(Node):
    lhs: Term
    rel: str
    rhs: Term

    def normal(self) -> tuple[Poly, str]:
        """(P, rel) with the atom equivalent to ``P rel 0``."""
        a, d1 = self.lhs.num, self.lhs.den
        b, d2 = self.rhs.num, self.rhs.den
        ctx = a.context()
        b = convert(b, ctx)
        e_idx = list(ctx.names()).index(EPS)
        P = a * _upoly_in(d2, ctx, e_idx) - b * _upoly_in(d1, ctx, e_idx)
        s = fe_sign(FieldElem.make(d1 * d2))
        rel = self.rel if s > 0 else FLIP[self.rel]
        return P, rel

    def variables(self) -> set[str]:
        return (used_vars(self.lhs.num) | used_vars(self.rhs.num)) - {EPS}

    def uses_eps(self) -> bool:
        return (EPS in used_vars(self.lhs.num) or EPS in used_vars(self.rhs.num)
                or self.lhs.den.degree() > 0 or self.rhs.den.degree() > 0)


def _upoly_in(u: fmpq_poly, ctx, e_idx: int) -> Poly:
    n = len(ctx.names())
    terms = {}
    for k, c in enumerate(u.coeffs()):
        if c != 0:
            mon = [0] * n
            mon[e_idx] = k
            terms[tuple(mon)] = c
    return ctx.from_dict(terms)


@dataclass(frozen=True, eq=False)
class Const(Node):
    value: bool

    def variables(self):
        return set()


@dataclass(frozen=True, eq=False)
class And(Node):
    args: tuple

    def variables(self):
        return set().union(*[a.variables() for a in self.args]) if self.args else set()


@dataclass(frozen=True, eq=False)
class Or(Node):
    args: tuple

    def variables(self):
        return set().union(*[a.variables() for a in self.args]) if self.args else set()


@dataclass(frozen=True, eq=False)
class Not(Node):
    arg: Node

    def variables(self):
        return self.arg.variables()


@dataclass(frozen=True, eq=False)
class Quant(Node):
    kind: str  # "exists" | "forall"
    var: str
    body: Node

    def variables(self):
        return self.body.variables() | {self.var}


TRUE = Const(True)
FALSE = Const(False)


def conj(args) -> Node:
    args = [a for a in args if not (isinstance(a, Const) and a.value)]
    if any(isinstance(a, Const) and not a.value for a in args):
        return FALSE
    flat = []
    for a in args:
        flat.extend(a.args if isinstance(a, And) else [a])
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(args) -> Node:
    args = [a for a in args if not (isinstance(a, Const) and not a.value)]
    if any(isinstance(a, Const) and a.value for a in args):
        return TRUE
    flat = []
    for a in args:
        flat.extend(a.args if isinstance(a, Or) else [a])
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def free_vars(node: Node) -> set[str]:
    if isinstance(node, Atom):
        return node.variables()
    if isinstance(node, Const):
        return set()
    if isinstance(node, (And, Or)):
        return set().union(*[free_vars(a) for a in node.args]) if node.args else set()
    if isinstance(node, Not):
        return free_vars(node.arg)
    if isinstance(node, Quant):
        return free_vars(node.body) - {node.var}
    raise TypeError(node)


def atoms(node: Node) -> list[Atom]:
    out: list[Atom] = []

    def walk(n):
        if isinstance(n, Atom):
            out.append(n)
        elif isinstance(n, (And, Or)):
            for a in n.args:
                walk(a)
        elif isinstance(n, Not):
            walk(n.arg)
        elif isinstance(n, Quant):
            walk(n.body)

    walk(node)
    return out


def has_quantifiers(node: Node) -> bool:
    if isinstance(node, Quant):
        return True
    if isinstance(node, (And, Or)):
        return any(has_quantifiers(a) for a in node.args)
    if isinstance(node, Not):
        return has_quantifiers(node.arg)
    return False


@dataclass(frozen=True, eq=False)
class SAFormula:
    """A formula together with its ordered free-variable list."""

    node: Node
    free: tuple[str, ...]

    @property
    def field(self) -> str:
        return "Q(eps)" if any(a.uses_eps() for a in atoms(self.node)) else "Q"

    @property
    def arity(self) -> int:
        return len(self.free)

    def __str__(self) -> str:
        return to_text(self.node)

    def __repr__(self) -> str:
        return f"SAFormula({to_text(self.node)!r}, {self.free})"


def make_atom(P: Poly, rel: str) -> Atom:
    """Atom ``P rel 0``."""
    P = convert(P, poly_ring(n for n in names_of(P) if n != EPS))
    zero = P.context().from_dict({})
    return Atom(Term(P), rel, Term(zero))


# ---------------------------------------------------------------------------
# printing


def _mono_sort_key(mon, names):
    e_i = names.index(EPS) if EPS in names else None
    others = [k for i, k in enumerate(mon) if i != e_i]
    e_deg = mon[e_i] if e_i is not None else 0
    return (-sum(others), tuple(-k for k in others), e_deg)


def poly_text(p: Poly) -> str:
    if p.is_zero():
        return "0"
    names = list(names_of(p))
    items = sorted(p.to_dict().items(), key=lambda kv: _mono_sort_key(kv[0], names))
    # eps printed first inside a monomial
    order = ([names.index(EPS)] if EPS in names else []) + [i for i, n in enumerate(names) if n != EPS]
    out = ""
    for j, (mon, c) in enumerate(items):
        c = fmpq(c)
        factors = []
        for i in order:
            k = mon[i]
            if k:
                nm = "eps" if names[i] == EPS else names[i]
                factors.append(nm if k == 1 else f"{nm}^{k}")
        mag = abs(c)
        if factors:
            body = "*".join(factors) if mag == 1 else rat_str(mag) + "*" + "*".join(factors)
        else:
            body = rat_str(mag)
        if j == 0:
            out = ("-" if c < 0 else "") + body
        else:
            out += (" - " if c < 0 else " + ") + body
    return out


def _den_text(d: fmpq_poly) -> str:
    fe = FieldElem.make(d)
    s = str(fe)
    return s


def term_text(t: Term) -> str:
    body = poly_text(t.num)
    if t.den.is_one():
        return body
    ntext = body if len(t.num.to_dict()) <= 1 else f"({body})"
    den_terms = [c for c in t.den.coeffs() if c != 0]
    d = t.den
    if len(den_terms) == 1 and d.degree() == 0:
        return f"{ntext}/{rat_str(d.coeffs()[0])}"
    from .exact_algebra import _upoly_text

    dt = _upoly_text(d)
    if len(den_terms) > 1:
        dt = f"({dt})"
    return f"{ntext}/{dt}"


def _split_constant(P: Poly) -> tuple[Poly, Poly]:
    """(variable part, minus the part that only involves eps)."""
    names = list(names_of(P))
    e_i = names.index(EPS) if EPS in names else None
    var_part, const_part = {}, {}
    for mon, c in P.to_dict().items():
        if any(k for i, k in enumerate(mon) if i != e_i):
            var_part[mon] = c
        else:
            const_part[mon] = -c
    ctx = P.context()
    return ctx.from_dict(var_part), ctx.from_dict(const_part)


def _bound_text(P: Poly, rel: str) -> str | None:
    """Render a one-variable linear atom as a bound, e.g. '0 <= x', 'x < 1 - eps'."""
    lhs, rhs = _split_constant(P)
    vs = used_vars(lhs)
    if len(vs) != 1 or EPS in vs or lhs.total_degree() != 1 or len(lhs.to_dict()) != 1:
        return None
    v = next(iter(vs))
    a = fmpq(next(iter(lhs.to_dict().values())))
    c = rhs * (1 / a)
    r = rel if a > 0 else FLIP[rel]
    cs = poly_text(c)
    if r in (">", ">="):
        return f"{cs} {FLIP[r]} {v}"
    return f"{v} {r} {cs}"


def atom_text(a: Atom) -> str:
    if a.rhs.num.is_zero() and a.rhs.den.is_one() and a.lhs.den.is_one():
        b = _bound_text(a.lhs.num, a.rel)
        if b is not None:
            return b
        lhs, rhs = _split_constant(a.lhs.num)
        if not lhs.is_zero():
            return f"{poly_text(lhs)} {a.rel} {poly_text(rhs)}"
    return f"{term_text(a.lhs)} {a.rel} {term_text(a.rhs)}"


def to_text(node: Node, top: bool = True) -> str:
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Atom):
        return atom_text(node)
    if isinstance(node, Not):
        inner = node.arg
        if isinstance(inner, Const):
            return "!" + to_text(inner, False)
        return "!(" + to_text(inner) + ")"
    if isinstance(node, And):
        parts = []
        for a in node.args:
            t = to_text(a, False)
            if isinstance(a, (Or, Quant)):
                t = f"({t})"
            parts.append(t)
        return " & ".join(parts)
    if isinstance(node, Or):
        parts = []
        for a in node.args:
            t = to_text(a, False)
            if isinstance(a, Quant):
                t = f"({t})"
            parts.append(t)
        return " | ".join(parts)
    if isinstance(node, Quant):
        return f"{node.kind} {node.var}. {to_text(node.body)}"
    raise TypeError(node)


# ---------------------------------------------------------------------------
# structural helpers


def map_atoms(node: Node, fn) -> Node:
    if isinstance(node, Atom):
        return fn(node)
    if isinstance(node, Const):
        return node
    if isinstance(node, And):
        return conj([map_atoms(a, fn) for a in node.args])
    if isinstance(node, Or):
        return disj([map_atoms(a, fn) for a in node.args])
    if isinstance(node, Not):
        return neg(map_atoms(node.arg, fn))
    if isinstance(node, Quant):
        return Quant(node.kind, node.var, map_atoms(node.body, fn))
    raise TypeError(node)


def rename(node: Node, mapping: dict[str, str]) -> Node:
    """Rename variables (free and bound) according to mapping."""
    if not mapping:
        return node

    def fix(t: Term, ctx) -> Term:
        src = list(names_of(t.num))
        terms = {}
        dst = list(ctx.names())
        for mon, c in t.num.to_dict().items():
            out = [0] * len(dst)
            for n, k in zip(src, mon):
                if k:
                    out[dst.index(mapping.get(n, n))] += k
            terms[tuple(out)] = c
        return Term(ctx.from_dict(terms), t.den)

    def on_atom(a: Atom) -> Atom:
        names = set(names_of(a.lhs.num)) | set(names_of(a.rhs.num))
        new = sorted({mapping.get(n, n) for n in names} - {EPS})
        ctx = poly_ring(new)
        return Atom(fix(a.lhs, ctx), a.rel, fix(a.rhs, ctx))

    def walk(n):
        if isinstance(n, Quant):
            return Quant(n.kind, mapping.get(n.var, n.var), walk(n.body))
        if isinstance(n, Atom):
            return on_atom(n)
        if isinstance(n, And):
            return And(tuple(walk(a) for a in n.args))
        if isinstance(n, Or):
            return Or(tuple(walk(a) for a in n.args))
        if isinstance(n, Not):
            return Not(walk(n.arg))
        return n

    return walk(node)


def substitute(node: Node, values: dict[str, fmpq]) -> Node:
    """Substitute rational values for free variables."""

    def on_atom(a: Atom) -> Node:
        P, rel = a.normal()
        vals = {k: v for k, v in values.items() if k in names_of(P)}
        Q = P.subs(vals) if vals else P
        return make_atom(Q, rel)

    return map_atoms(node, on_atom)


def reparametrize(node: Node, m: int) -> Node:
    """Replace eps by eps^m throughout (eps then plays the role of eps^(1/m))."""
    if m == 1:
        return node

    def fix_term(t: Term) -> Term:
        p = t.num
        names = list(names_of(p))
        if EPS in names:
            i = names.index(EPS)
            d = {}
            for mon, c in p.to_dict().items():
                mon = list(mon)
                mon[i] *= m
                d[tuple(mon)] = c
            p = p.context().from_dict(d)
        den = t.den
        if den.degree() > 0:
            cs = den.coeffs()
            new = [0] * (m * (len(cs) - 1) + 1)
            for k, c in enumerate(cs):
                new[m * k] = c
            den = fmpq_poly(new)
        return Term(p, den)

    return map_atoms(node, lambda a: Atom(fix_term(a.lhs), a.rel, fix_term(a.rhs)))


def shift(node: Node, var: str, k) -> Node:
    """Replace the free variable var by var + k*eps (k rational)."""
    k = fmpq(k)

    def on_atom(a: Atom) -> Node:
        P, rel = a.normal()
        ctx = P.context()
        names = list(ctx.names())
        if var not in names:
            return a
        gens = list(ctx.gens())
        i, j = names.index(var), names.index(EPS)
        gens[i] = gens[i] + k * gens[j]
        return make_atom(P.compose(*gens), rel)

    return map_atoms(node, on_atom)


def scale_var(node: Node, var: str, k) -> Node:
    """Replace the free variable var by k*var (k rational, nonzero)."""
    k = fmpq(k)

    def on_atom(a: Atom) -> Node:
        P, rel = a.normal()
        ctx = P.context()
        names = list(ctx.names())
        if var not in names:
            return a
        gens = list(ctx.gens())
        gens[names.index(var)] = k * gens[names.index(var)]
        return make_atom(P.compose(*gens), rel)

    return map_atoms(node, on_atom)


def float_mask(node: Node, free: Sequence[str], arrays):
    """Vectorised truth of a quantifier-free formula over Q at float points.

    arrays holds one numpy array per free variable; eps must not occur.
    """
    import numpy as np

    env = dict(zip(free, arrays))
    shape = np.shape(arrays[0]) if arrays else ()

    def poly_value(P):
        names = list(names_of(P))
        out = np.zeros(shape)
        for mon, c in P.to_dict().items():
            term = np.full(shape, float(fmpq(c)))
            for name, k in zip(names, mon):
                if k:
                    if name == EPS:
                        raise ValueError("float evaluation of a formula with eps")
                    term = term * env[name] ** int(k)
            out = out + term
        return out

    def walk(n):
        if isinstance(n, Const):
            return np.full(shape, n.value)
        if isinstance(n, Atom):
            P, rel = n.normal()
            v = poly_value(P)
            s = np.sign(v)
            return {"<": s < 0, "<=": s <= 0, "=": s == 0, "!=": s != 0, ">=": s >= 0, ">": s > 0}[rel]
        if isinstance(n, And):
            out = np.full(shape, True)
            for a in n.args:
                out &= walk(a)
            return out
        if isinstance(n, Or):
            out = np.full(shape, False)
            for a in n.args:
                out |= walk(a)
            return out
        if isinstance(n, Not):
            return ~walk(n.arg)
        raise ValueError("float evaluation needs a quantifier-free formula")

    return walk(node)
