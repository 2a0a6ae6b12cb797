"""Verification suites over the reference catalog.

Every suite returns a list of records {suite, case, claim, method, verdict,
detail} in a fixed order, so that two runs can be compared byte for byte.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

from flint import fmpq

from . import catalog
from .cad import DEFAULT_BUDGET, Budget
from .certificate import Certificate, CertificateError, check
from .formula import SAFormula, conj, disj, make_atom, poly_ring
from .good_cells import (GoodCellError, cell_at, good_decomposition_box, normal_form_ind,
                         union_of_differences)
from .grammar import parse_expression, parse_formula, parse_term
from .semialgebraic import sa_equal
from .st_operator import (StError, st_intersection_witness, st_onevar, st_project_bounded, st_set,
                          st_unbounded_locus)
from .topology_measure import (Density, IsoMap, closure_as_st, contains_qbox, image_of, is_connected_st,
                               measure_st, st_derivative_commutes)


def _rec(suite: str, case: str, cert: Certificate) -> dict:
    return {"suite": suite, "case": case, "claim": cert.claim, "method": cert.method,
            "verdict": cert.verdict, "detail": dict(cert.detail)}


def _guard(suite: str, case: str, claim: str, fn: Callable[[], list]) -> list:
    """Run one case; a construction that raises is recorded as violated."""
    try:
        return fn()
    except CertificateError as err:
        return [_rec(suite, case, err.certificate)]
    except (StError, GoodCellError, ValueError, RuntimeError) as err:
        return [_rec(suite, case, Certificate(claim, "exception", "violated",
                                              {"error": f"{type(err).__name__}: {err}"}))]


def suite_st(budget: Budget = DEFAULT_BUDGET) -> list:
    out = []
    for c in catalog.ST_CATALOG:
        def run(c=c):
            S = st_set(parse_formula(c.formula, c.vars), budget)
            same = sa_equal(S.formula, parse_formula(c.st, c.vars), budget)
            return [_rec("st", c.name, check("st X equals the hand formula", "st_set + sa_equal", same,
                                             st=str(S.formula)))]
        out += _guard("st", c.name, "st X equals the hand formula", run)
    return out


def suite_projection(budget: Budget = DEFAULT_BUDGET) -> list:
    out = []
    by_name = {c.name: c for c in catalog.ST_CATALOG}
    for name, hand in catalog.PROJECTIONS.items():
        c = by_name[name]

        def run(c=c, hand=hand):
            S = st_set(parse_formula(c.formula, c.vars), budget)
            P, cert = st_project_bounded(S, 1, budget)
            oracle = check("st of the projection equals the hand formula", "sa_equal",
                           sa_equal(P.formula, parse_formula(hand, c.vars[:1]), budget), st=str(P.formula))
            return [_rec("projection", name, cert), _rec("projection", name, oracle)]
        out += _guard("projection", name, "projection commutes with st", run)
    return out


def suite_witness(budget: Budget = DEFAULT_BUDGET, reparam_depth: int = 4) -> list:
    out = []
    for a, b, hand in catalog.INTERSECTION_PAIRS:
        case = f"{a} ; {b}"

        def run(a=a, b=b, hand=hand, case=case):
            X, Y = parse_formula(a, ("x",)), parse_formula(b, ("x",))
            Z, m, cert = st_intersection_witness(X, Y, budget, reparam_depth)
            target = conj([st_set(X, budget).formula.node, st_set(Y, budget).formula.node])
            oracle = check("st X meet st Y equals the hand formula", "sa_equal",
                           sa_equal(SAFormula(target, ("x",)), parse_formula(hand, ("x",)), budget))
            return [_rec("witness", case, cert), _rec("witness", case, oracle)]
        out += _guard("witness", case, "st of the witness projects onto st X meet st Y", run)
    return out


def suite_locus(budget: Budget = DEFAULT_BUDGET) -> list:
    out = []
    for dom, term, side, hand in catalog.UNBOUNDED_LOCI:
        case = f"{term} {'above' if side > 0 else 'below'} every rational on {dom}"

        def run(dom=dom, term=term, side=side, hand=hand, case=case):
            num, den = parse_term(term, ("x",))
            L = st_unbounded_locus(parse_formula(dom, ("x",)), num, den, side, budget)
            same = sa_equal(L.formula, parse_formula(hand, ("x",)), budget)
            return [_rec("locus", case, check("unbounded locus equals the hand formula", "st_set + sa_equal",
                                               same, locus=str(L.formula)))]
        out += _guard("locus", case, "unbounded locus equals the hand formula", run)
    return out


def _intervals_formula(pieces) -> SAFormula | None:
    """Formula of a union of closed intervals with rational (or infinite) ends."""
    ctx = poly_ring(("x",))
    x = ctx.gens()[1]
    parts = []
    for p in pieces:
        ends = [p.lo, p.hi]
        if any(e is not None and not e.is_rational() for e in ends):
            return None
        atoms = []
        if p.lo is not None:
            atoms.append(make_atom(x - p.lo.value, ">="))
        if p.hi is not None:
            atoms.append(make_atom(x - p.hi.value, "<="))
        parts.append(conj(atoms))
    return SAFormula(disj(parts), ("x",))


def suite_intervals(budget: Budget = DEFAULT_BUDGET) -> list:
    out = []
    for c in catalog.ST_CATALOG:
        if len(c.vars) != 1:
            continue

        def run(c=c):
            X = parse_formula(c.formula, c.vars)
            pieces = st_onevar(X, budget)
            ordered = all(p.lo is None or p.hi is None or p.lo.cmp(p.hi) <= 0 for p in pieces)
            F = _intervals_formula(pieces)
            if F is None:
                return [_rec("intervals", c.name, Certificate("st X is a finite union of closed intervals",
                                                          "interval list", "conservative",
                                                          {"pieces": [str(p) for p in pieces]}))]
            same = sa_equal(F, parse_formula(c.st, c.vars), budget)
            return [_rec("intervals", c.name, check("st X is a finite union of closed intervals", "interval list + sa_equal",
                                                ordered and same, pieces=[str(p) for p in pieces]))]
        out += _guard("intervals", c.name, "st X is a finite union of closed intervals", run)
    return out


def _decompositions(budget: Budget, cache: dict | None):
    """(case, variables, maker) per input; cache shares decompositions
    between the suites of one run."""
    cache = {} if cache is None else cache
    for formulas, vs in catalog.GOOD_INPUTS:
        def make(f=formulas, v=vs):
            if f not in cache:
                cache[f] = good_decomposition_box([parse_formula(t, v) for t in f], budget)
            return cache[f]
        yield " ; ".join(formulas), vs, make


def suite_good(budget: Budget = DEFAULT_BUDGET, cache: dict | None = None) -> list:
    out = []
    for case, vs, make in _decompositions(budget, cache):
        def run(case=case, make=make):
            dec = make()
            recs = []
            d = dec
            while d is not None:
                recs += [_rec("good", case, c) for c in d.certificates]
                d = d.base
            recs.append(_rec("good", case, check("decomposition has cells", "count", bool(dec.cells),
                                                 cells=len(dec.cells))))
            return recs
        out += _guard("good", case, "good decomposition is certified", run)
    return out


def suite_closed(budget: Budget = DEFAULT_BUDGET, cache: dict | None = None) -> list:
    out = []
    for case, vs, make in _decompositions(budget, cache):
        def run(case=case, make=make):
            dec = make()
            recs = []
            for i, C in enumerate(dec.cells):
                _, cert = closure_as_st(C, budget)
                cert.detail["cell"] = i
                recs.append(_rec("closed", case, cert))
            return recs
        out += _guard("closed", case, "st of the shrinking family is the closure", run)
    return out


def suite_normal_form(budget: Budget = DEFAULT_BUDGET) -> list:
    out = []
    for text, hand, k in catalog.EXPRESSIONS:
        def run(text=text, hand=hand, k=k):
            expr = parse_expression(text)
            pairs, cert = normal_form_ind(expr, budget)
            vs = ("x", "y", "z")[:k]
            U = union_of_differences(pairs, vs, budget)
            oracle = check("union of differences equals the hand formula", "sa_equal",
                           sa_equal(U, parse_formula(hand, vs), budget), pairs=len(pairs))
            return [_rec("normal-form", text, cert), _rec("normal-form", text, oracle)]
        out += _guard("normal-form", text, "normal form round trip", run)
    return out


def suite_connected(budget: Budget = DEFAULT_BUDGET) -> list:
    out = []
    for expect, cases in ((True, catalog.CONNECTED), (False, catalog.DISCONNECTED)):
        for text, vs in cases:
            def run(text=text, vs=vs, expect=expect):
                res = is_connected_st(parse_formula(text, vs), budget)
                recs = [_rec("connected", text, check("st X is connected" if expect else "st X is disconnected",
                                                      "adjacency components", res.connected == expect,
                                                      components=len(res.parts)))]
                recs += [_rec("connected", text, c) for c in res.certificates]
                return recs
            out += _guard("connected", text, "connectedness", run)
    return out


def _expected(text: str) -> float:
    return {"pi": math.pi, "2*pi": 2 * math.pi}.get(text) or float(Fraction(text))


def suite_measure(budget: Budget = DEFAULT_BUDGET, radius: float = 1e-9) -> list:
    out = []
    for text, vs, want in catalog.MEASURE_CASES:
        def run(text=text, vs=vs, want=want):
            m = measure_st(parse_formula(text, vs), radius, budget)
            if "pi" in want:
                good = abs(m.value - _expected(want)) <= 1e-6 and m.radius <= 1e-6
            else:
                good = m.exact and m.rational == Fraction(want)
            return [_rec("measure", text, check(f"measure equals {want}", m.method, good, measure=m.record()))]
        out += _guard("measure", text, "measure value", run)
    for a, b, vs in catalog.ADDITIVITY_PAIRS:
        case = f"{a} ; {b}"

        def run(a=a, b=b, vs=vs, case=case):
            A, B = parse_formula(a, vs), parse_formula(b, vs)
            ma, mb = measure_st(A, radius, budget), measure_st(B, radius, budget)
            mu = measure_st(SAFormula(disj([A.node, B.node]), vs), radius, budget)
            return [_rec("measure", case, check("mu(A) + mu(B) = mu(A union B)", "measure_st within summed radii",
                                                (ma + mb).agrees(mu), sum=(ma + mb).value, union=mu.value))]
        out += _guard("measure", case, "additivity", run)
    for terms, vs, text in catalog.INVARIANCE_CASES:
        case = f"({', '.join(terms)}) on {text}"

        def run(terms=terms, vs=vs, text=text, case=case):
            X = parse_formula(text, vs)
            Y = image_of(IsoMap.parse(terms, vs), X, budget)
            mx, my = measure_st(X, radius, budget), measure_st(Y, radius, budget)
            return [_rec("measure", case, check("mu(psi X) = mu(X)", "measure_st within 2x radius",
                                                mx.agrees(my, 2.0), before=mx.value, after=my.value))]
        out += _guard("measure", case, "invariance", run)
    return out


def suite_deriv(budget: Budget = DEFAULT_BUDGET, points: int = 100) -> list:
    out = []
    for term, dom, vs, point in catalog.DERIVATIVE_CASES:
        case = f"{term} on {dom}"

        def run(term=term, dom=dom, vs=vs, point=point, case=case):
            D = parse_formula(dom, vs)
            dec = good_decomposition_box([D], budget, certify=False)
            cell = cell_at(dec, [fmpq(Fraction(p).numerator, Fraction(p).denominator) for p in point])
            rep = st_derivative_commutes(Density.parse(term, D), cell, points=points, budget=budget)
            return [_rec("deriv", case, c) for c in rep.certificates]
        out += _guard("deriv", case, "derivative commutes with st", run)
    return out


def suite_qbox(budget: Budget = DEFAULT_BUDGET, depth: int = 12) -> list:
    out = []
    for text, vs, want in catalog.QBOX_CASES:
        def run(text=text, vs=vs, want=want):
            res = contains_qbox(parse_formula(text, vs), depth, budget)
            recs = [_rec("qbox", text, c) for c in res.certificates]
            if want is not None:
                got = [str(v) for v in res.box[0]] if res.box else None
                recs.append(_rec("qbox", text, check("box equals the expected one", "grid order",
                                                     got == list(want), box=got)))
            recs.append(_rec("qbox", text, check("a rational box is found", "contains_qbox", res.verdict == "box")))
            return recs
        out += _guard("qbox", text, "rational box", run)
    for text, vs in catalog.NULL_CASES:
        def run(text=text, vs=vs):
            res = contains_qbox(parse_formula(text, vs), depth, budget)
            return [_rec("qbox", text, check("interior of st X is empty", "st dimension",
                                             res.verdict == "interior empty"))]
        out += _guard("qbox", text, "interior empty", run)
    return out


SUITES = {
    "st": suite_st,
    "projection": suite_projection,
    "witness": suite_witness,
    "locus": suite_locus,
    "intervals": suite_intervals,
    "good": suite_good,
    "normal-form": suite_normal_form,
    "closed": suite_closed,
    "connected": suite_connected,
    "measure": suite_measure,
    "deriv": suite_deriv,
    "qbox": suite_qbox,
}


def run_suite(name: str, budget: Budget = DEFAULT_BUDGET, radius: float = 1e-9, grid_depth: int = 12,
              reparam_depth: int = 4) -> list:
    """Records of one suite, or of every suite in order for "all"."""
    if name != "all" and name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(['all', *SUITES])}")
    options = {"measure": {"radius": radius}, "qbox": {"depth": grid_depth},
               "witness": {"reparam_depth": reparam_depth}}
    cache: dict = {}
    for key in ("good", "closed"):
        options[key] = {"cache": cache}
    keys = list(SUITES) if name == "all" else [name]
    return [r for key in keys for r in SUITES[key](budget, **options.get(key, {}))]
