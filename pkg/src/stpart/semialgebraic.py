"""Decision, quantifier elimination and set algebra for semialgebraic sets.

Everything is reduced to one CAD: a formula in prenex form is evaluated on
the top cells, quantifiers are folded level by level, and the surviving
free-level cells are turned back into a quantifier-free formula using the
sign conditions of the (derivative-closed) projection factors.
"""
from __future__ import annotations

from itertools import count
from typing import Sequence

from flint import fmpq

from .cad import CAD, DEFAULT_BUDGET, Budget, Cell
from .exact_algebra import EPS, Poly, convert, names_of, ring, used_vars
from .formula import (
    FALSE, FLIP, TRUE, And, Atom, Const, Node, Not, Or, Quant, SAFormula, atoms, conj,
    disj, free_vars, has_quantifiers, make_atom, neg, poly_text, rel_holds, rename,
)


# ---------------------------------------------------------------------------
# prenex form

def prenex(node: Node, avoid: Sequence[str] = ()) -> tuple[list[tuple[str, str]], Node]:
    """(prefix, matrix) with the matrix quantifier-free and negations on atoms.

    Bound variables are renamed apart so that the blocks can be concatenated.
    """
    fresh = (f"_q{i}" for i in count())
    taken = set(avoid) | free_vars(node)

    def new_name() -> str:
        while True:
            n = next(fresh)
            if n not in taken:
                taken.add(n)
                return n

    def go(n: Node, negated: bool):
        if isinstance(n, Const):
            return [], Const(n.value != negated)
        if isinstance(n, Atom):
            return [], (Not(n) if negated else n)
        if isinstance(n, Not):
            return go(n.arg, not negated)
        if isinstance(n, (And, Or)):
            prefix, parts = [], []
            for a in n.args:
                p, m = go(a, negated)
                prefix += p
                parts.append(m)
            is_and = isinstance(n, And) != negated
            return prefix, (conj(parts) if is_and else disj(parts))
        if isinstance(n, Quant):
            v = new_name()
            body = rename(n.body, {n.var: v})
            kind = n.kind if not negated else ("forall" if n.kind == "exists" else "exists")
            p, m = go(body, negated)
            return [(kind, v)] + p, m
        raise TypeError(n)

    return go(node, False)


# ---------------------------------------------------------------------------
# evaluation on cells

def atom_sign_rel(a: Atom) -> tuple[Poly, str]:
    return a.normal()


def holds(cad: CAD, cell: Cell, node: Node) -> bool:
    """Truth of a quantifier-free formula at the sample point of cell."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Atom):
        P, rel = node.normal()
        return rel_holds(rel, cad.sign(cell, P))
    if isinstance(node, Not):
        return not holds(cad, cell, node.arg)
    if isinstance(node, And):
        return all(holds(cad, cell, a) for a in node.args)
    if isinstance(node, Or):
        return any(holds(cad, cell, a) for a in node.args)
    raise TypeError(f"quantifier in matrix: {node}")


def _polys(nodes: Sequence[Node]) -> list[Poly]:
    out = []
    for n in nodes:
        for a in atoms(n):
            P, _ = a.normal()
            out.append(P)
    return out


def truth_on_cells(node: Node, free: Sequence[str], thom: bool = False,
                   budget: Budget = DEFAULT_BUDGET, extra: Sequence[Poly] = ()) -> tuple[CAD, dict]:
    """CAD over free (+ bound) variables and the truth value on free-level cells."""
    prefix, matrix = prenex(node, free)
    bound = [v for _, v in prefix]
    variables = list(free) + bound
    polys = _polys([matrix]) + list(extra)
    nf = len(free)
    cad = CAD(polys, variables, thom=list(range(nf)) if thom else False, budget=budget)
    if not variables:
        return cad, {id(cad.root): holds(cad, cad.root, matrix)}
    truth = {id(c): holds(cad, c, matrix) for c in cad.cells}
    for lvl in range(len(variables) - 1, nf - 1, -1):
        kind = prefix[lvl - nf][0]
        parents = cad.cells_by_level[lvl - 1] if lvl > 0 else [cad.root]
        for p in parents:
            vals = [truth[id(ch)] for ch in p.children]
            truth[id(p)] = any(vals) if kind == "exists" else all(vals)
    level_cells = cad.cells_by_level[nf - 1] if nf else [cad.root]
    return cad, {id(c): truth[id(c)] for c in level_cells}


def free_level_cells(cad: CAD, nf: int) -> list[Cell]:
    return cad.cells_by_level[nf - 1] if nf else [cad.root]


# ---------------------------------------------------------------------------
# formula construction from cells

def _literal_sort_key(P: Poly, lvl: int):
    vs = used_vars(P) - {EPS}
    if P.total_degree() == 1 and len(vs) == 1 and EPS not in used_vars(P):
        names = list(names_of(P))
        i = names.index(next(iter(vs)))
        a = b = fmpq(0)
        for mon, c in P.to_dict().items():
            if mon[i]:
                a = fmpq(c)
            else:
                b = fmpq(c)
        return (lvl, 0, float(-b / a), "")
    return (lvl, 1, 0.0, poly_text(P))


def _normalize_literal(P: Poly, rel: str) -> Atom:
    """Flip sign so the first printed term is positive."""
    from .formula import _mono_sort_key

    names = list(names_of(P))
    lead = min(P.to_dict().items(), key=lambda kv: _mono_sort_key(kv[0], names))[1]
    if lead < 0:
        return make_atom(-P, FLIP[rel])
    return make_atom(P, rel)


_REL_OF = {
    frozenset({1}): ">", frozenset({-1}): "<", frozenset({0}): "=",
    frozenset({0, 1}): ">=", frozenset({0, -1}): "<=", frozenset({1, -1}): "!=",
}


def cells_to_formula(cad: CAD, nf: int, members: set[int], simplify: bool = True) -> Node:
    """Quantifier-free formula true exactly on the member cells at level nf.

    Requires the factor sets of levels < nf to be derivative-closed so that
    cells are separated by their sign vectors.
    """
    cells = free_level_cells(cad, nf)
    mem = [c for c in cells if id(c) in members]
    if not mem:
        return FALSE
    if len(mem) == len(cells):
        return TRUE
    lits = [(lvl, f) for lvl in range(nf) for f in cad.orig_levels[lvl]]
    lits.sort(key=lambda t: _literal_sort_key(t[1], t[0]))

    def signature(c: Cell) -> tuple:
        return tuple(cad.orig_sign(c, lvl, f) for lvl, f in lits)

    sig = {id(c): signature(c) for c in cells}
    pos = {sig[id(c)] for c in mem}
    negs = {sig[id(c)] for c in cells if id(c) not in members}
    if pos & negs:
        raise RuntimeError("cells are not separated by the projection factor signs")

    # bitmasks: neg_mask[i][v] has bit j set when the j-th excluded signature
    # has value v at literal i; likewise for member signatures
    negl, posl = sorted(negs), sorted(pos)
    L = len(lits)

    def masks(sigs):
        m = [{-1: 0, 0: 0, 1: 0} for _ in range(L)]
        for j, s in enumerate(sigs):
            for i, v in enumerate(s):
                m[i][v] |= 1 << j
        return m

    nmask, pmask = masks(negl), masks(posl)
    full_n, full_p = (1 << len(negl)) - 1, (1 << len(posl)) - 1

    def covered(imp, m, full) -> int:
        acc = full
        for i, allowed in enumerate(imp):
            acc &= sum(m[i][v] for v in allowed)
            if not acc:
                break
        return acc

    def valid(imp) -> bool:
        return covered(imp, nmask, full_n) == 0

    implicants = []
    for s in posl:
        imp = [frozenset({v}) for v in s]
        if simplify:
            for i in reversed(range(len(imp))):
                trial = imp[:i] + [frozenset({-1, 0, 1})] + imp[i + 1:]
                if valid(trial):
                    imp = trial
            for i in range(len(imp)):
                if len(imp[i]) == 1:
                    v = next(iter(imp[i]))
                    for extra in ((0,) if v != 0 else (1, -1)):
                        trial = imp[:i] + [imp[i] | {extra}] + imp[i + 1:]
                        if valid(trial):
                            imp = trial
                            break
        implicants.append(tuple(imp))
    # greedy cover of the member signatures
    uniq = list(dict.fromkeys(implicants))
    cov = [covered(imp, pmask, full_p) for imp in uniq]
    uncovered = full_p
    chosen = []
    while uncovered:
        k = max(range(len(uniq)), key=lambda k: (bin(cov[k] & uncovered).count("1"), -_cost(uniq[k])))
        chosen.append(uniq[k])
        uncovered &= ~cov[k]
    terms = []
    for imp in chosen:
        parts = []
        for (lvl, f), allowed in zip(lits, imp):
            if len(allowed) == 3:
                continue
            parts.append(_normalize_literal(f, _REL_OF[frozenset(allowed)]))
        terms.append(conj(parts))
    return disj(terms)


def _cost(imp) -> int:
    return sum(1 for a in imp if len(a) < 3)


# ---------------------------------------------------------------------------
# public operations

def eliminate_quantifiers(f: SAFormula, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    if not has_quantifiers(f.node):
        return f
    cad, truth = truth_on_cells(f.node, f.free, thom=True, budget=budget)
    members = {k for k, v in truth.items() if v}
    return SAFormula(cells_to_formula(cad, len(f.free), members), f.free)


def simplify(f: SAFormula, budget: Budget = DEFAULT_BUDGET) -> SAFormula:
    """Equivalent quantifier-free formula rebuilt from a Thom-closed CAD."""
    cad, truth = truth_on_cells(f.node, f.free, thom=True, budget=budget)
    members = {k for k, v in truth.items() if v}
    return SAFormula(cells_to_formula(cad, len(f.free), members), f.free)


def decide(node: Node | SAFormula, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Truth of a sentence (no free variables) over the real closure of Q(eps)."""
    if isinstance(node, SAFormula):
        node = node.node
    fv = free_vars(node)
    if fv:
        raise ValueError(f"decide needs a sentence; free variables {sorted(fv)}")
    _, truth = truth_on_cells(node, (), budget=budget)
    return next(iter(truth.values()))


def sa_empty(f: SAFormula, budget: Budget = DEFAULT_BUDGET) -> bool:
    _, truth = truth_on_cells(f.node, f.free, budget=budget)
    return not any(truth.values())


def member_cells(f: SAFormula, budget: Budget = DEFAULT_BUDGET) -> tuple[CAD, list[Cell]]:
    cad, truth = truth_on_cells(f.node, f.free, budget=budget)
    return cad, [c for c in free_level_cells(cad, len(f.free)) if truth[id(c)]]


def sa_dim(f: SAFormula, budget: Budget = DEFAULT_BUDGET) -> int:
    """Dimension of the set, -1 when empty."""
    _, cells = member_cells(f, budget)
    return max((c.dim for c in cells), default=-1)


def _aligned(f: SAFormula, g: SAFormula) -> SAFormula:
    if f.free == g.free:
        return g
    if len(f.free) != len(g.free):
        raise ValueError("formulas have different arity")
    return SAFormula(rename(g.node, dict(zip(g.free, f.free))), f.free)


def union(f: SAFormula, g: SAFormula) -> SAFormula:
    return SAFormula(disj([f.node, _aligned(f, g).node]), f.free)


def intersection(f: SAFormula, g: SAFormula) -> SAFormula:
    return SAFormula(conj([f.node, _aligned(f, g).node]), f.free)


def complement(f: SAFormula) -> SAFormula:
    return SAFormula(neg(f.node), f.free)


def difference(f: SAFormula, g: SAFormula) -> SAFormula:
    return SAFormula(conj([f.node, neg(_aligned(f, g).node)]), f.free)


def product(f: SAFormula, g: SAFormula) -> SAFormula:
    mapping, names = {}, list(f.free)
    for v in g.free:
        w = v
        k = 1
        while w in names:
            w = f"{v}{k}"
            k += 1
        mapping[v] = w
        names.append(w)
    return SAFormula(conj([f.node, rename(g.node, mapping)]), tuple(names))


def projection(f: SAFormula, keep: Sequence[str]) -> SAFormula:
    """Image under the coordinate projection onto the variables in keep."""
    node = f.node
    for v in reversed([v for v in f.free if v not in keep]):
        node = Quant("exists", v, node)
    return SAFormula(node, tuple(keep))


def sa_equal(f: SAFormula, g: SAFormula, budget: Budget = DEFAULT_BUDGET) -> bool:
    g = _aligned(f, g)
    fq = eliminate_quantifiers(f, budget)
    gq = eliminate_quantifiers(g, budget)
    xor = disj([conj([fq.node, neg(gq.node)]), conj([gq.node, neg(fq.node)])])
    return sa_empty(SAFormula(xor, f.free), budget)


def contains_point(f: SAFormula, point: Sequence, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Membership of a rational point."""
    from .formula import substitute

    vals = {v: fmpq(p) if not isinstance(p, fmpq) else p for v, p in zip(f.free, point)}
    prefix, matrix = prenex(f.node, f.free)
    m = substitute(matrix, vals)
    node = m
    for kind, v in reversed(prefix):
        node = Quant(kind, v, node)
    return decide(node, budget)
