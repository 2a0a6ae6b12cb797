"""Text syntax for formulas.

    formula := ("exists" | "forall") var "." formula | disj
    disj    := conj ("|" conj)*
    conj    := lit ("&" lit)*
    lit     := "!" lit | "(" formula ")" | atom | quantified formula
    atom    := term rel term        rel in  < <= = != >= >
    term    := polynomial in the variables and eps, divided only by
               polynomials in eps

A quantifier binds to the end of the enclosing parenthesis. ``&`` binds
tighter than ``|``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from flint import fmpq, fmpq_poly

from .exact_algebra import EPS
from .formula import (
    RELS, And, Atom, Const, Not, Or, Quant, SAFormula, Term, conj, disj, free_vars, neg, poly_ring,
)

KEYWORDS = {"exists", "forall", "true", "false", "eps"}
DEFAULT_NAMES = ("x", "y", "z", "w", "u", "v")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|!=|==|[<>=!&|()+\-*/^.,]))"
)


class ParseError(ValueError):
    def __init__(self, message: str, column: int):
        super().__init__(f"syntax error at column {column}: {message}")
        self.column = column


@dataclass
class Tok:
    kind: str
    text: str
    col: int  # 1-based


def tokenize(text: str) -> list[Tok]:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        val = m.group(kind)
        col = m.start(kind) + 1
        if val == "==":
            val = "="
        out.append(Tok(kind, val, col))
        pos = m.end()
    out.append(Tok("end", "", len(text) + 1))
    return out


class _Expr:
    """Intermediate polynomial expression: dict mon->coef over variable names."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict):
        self.terms = {k: v for k, v in terms.items() if v != 0}

    @staticmethod
    def const(c) -> "_Expr":
        return _Expr({(): fmpq(c)})

    @staticmethod
    def var(name: str) -> "_Expr":
        return _Expr({((name, 1),): fmpq(1)})

    def __add__(self, o):
        t = dict(self.terms)
        for k, v in o.terms.items():
            t[k] = t.get(k, 0) + v
        return _Expr(t)

    def __neg__(self):
        return _Expr({k: -v for k, v in self.terms.items()})

    def __mul__(self, o):
        t: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in o.terms.items():
                d = dict(k1)
                for n, e in k2:
                    d[n] = d.get(n, 0) + e
                k = tuple(sorted(d.items()))
                t[k] = t.get(k, 0) + v1 * v2
        return _Expr(t)

    def names(self) -> set[str]:
        return {n for k in self.terms for n, _ in k}

    def to_poly(self, ctx):
        names = list(ctx.names())
        d = {}
        for k, v in self.terms.items():
            mon = [0] * len(names)
            for n, e in k:
                mon[names.index(n)] += e
            d[tuple(mon)] = v
        return ctx.from_dict(d)

    def eps_upoly(self) -> fmpq_poly:
        coeffs: dict[int, fmpq] = {}
        for k, v in self.terms.items():
            e = dict(k).get(EPS, 0)
            coeffs[e] = coeffs.get(e, 0) + v
        top = max(coeffs) if coeffs else 0
        return fmpq_poly([coeffs.get(i, 0) for i in range(top + 1)])


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def take(self) -> Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if self.tok.text != text or self.tok.kind == "end":
            self.fail(f"expected {text!r}")
        return self.take()

    def fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.col)

    # formulas
    def formula(self):
        if self.tok.kind == "name" and self.tok.text in ("exists", "forall"):
            kind = self.take().text
            if self.tok.kind != "name" or self.tok.text in KEYWORDS:
                self.fail("expected a variable name")
            var = self.take().text
            self.expect(".")
            return Quant(kind, var, self.formula())
        return self.disj()

    def disj(self):
        parts = [self.conj()]
        while self.tok.text == "|":
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else disj(parts)

    def conj(self):
        parts = [self.lit()]
        while self.tok.text == "&":
            self.take()
            parts.append(self.lit())
        return parts[0] if len(parts) == 1 else conj(parts)

    def lit(self):
        t = self.tok
        if t.text == "!" and t.kind == "op":
            self.take()
            return neg(self.lit())
        if t.kind == "name" and t.text in ("exists", "forall"):
            return self.formula()
        if t.kind == "name" and t.text in ("true", "false"):
            self.take()
            return Const(t.text == "true")
        if t.text == "(":
            save = self.i
            try:
                self.take()
                f = self.formula()
                self.expect(")")
                if self.tok.text not in RELS + ("+", "-", "*", "/", "^"):
                    return f
            except ParseError:
                pass
            self.i = save
        return self.atom()

    def atom(self):
        lhs = self.term()
        if self.tok.text not in RELS:
            self.fail("expected a relation")
        rel = self.take().text
        rhs = self.term()
        return ("atom", lhs, rel, rhs)

    # terms: returns (numerator _Expr, denominator fmpq_poly in eps)
    def term(self):
        num, den = self.product()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            n2, d2 = self.product()
            n2 = -n2 if op == "-" else n2
            if den == d2:
                num = num + n2
            else:
                num = num * _Expr.from_upoly(d2) + n2 * _Expr.from_upoly(den)
                den = den * d2
        return num, den

    def product(self):
        num, den = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.take()
            n2, d2 = self.unary()
            if op.text == "*":
                num, den = num * n2, den * d2
            else:
                if n2.names() - {EPS}:
                    raise ParseError("division by a non-constant", op.col)
                u = n2.eps_upoly()
                if u.is_zero():
                    raise ParseError("division by zero", op.col)
                if u.degree() == 0:
                    num = num * _Expr.from_upoly(d2) * _Expr.const(1 / u.coeffs()[0])
                else:
                    num, den = num * _Expr.from_upoly(d2), den * u
        return num, den

    def unary(self):
        if self.tok.text == "-":
            self.take()
            n, d = self.unary()
            return -n, d
        if self.tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.text == "^":
            self.take()
            t = self.tok
            if t.kind != "num" or "." in t.text:
                self.fail("expected a non-negative integer exponent")
            self.take()
            k = int(t.text)
            n, d = _Expr.const(1), fmpq_poly([1])
            for _ in range(k):
                n, d = n * base[0], d * base[1]
            return n, d
        return base

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            if "." in t.text:
                a, b = t.text.split(".")
                return _Expr.const(fmpq(int(a + b), 10 ** len(b))), fmpq_poly([1])
            return _Expr.const(int(t.text)), fmpq_poly([1])
        if t.kind == "name":
            if t.text in ("exists", "forall", "true", "false"):
                self.fail("expected a term")
            self.take()
            name = EPS if t.text == "eps" else t.text
            return _Expr.var(name), fmpq_poly([1])
        if t.text == "(":
            self.take()
            v = self.term()
            self.expect(")")
            return v
        self.fail("expected a term")


def _from_upoly(u: fmpq_poly) -> _Expr:
    return _Expr({(((EPS, k),) if k else ()): c for k, c in enumerate(u.coeffs()) if c != 0})


_Expr.from_upoly = staticmethod(_from_upoly)


def _build(node):
    """Convert raw atoms to Atom nodes with polynomial sides."""
    if isinstance(node, tuple) and node[0] == "atom":
        _, (ln, ld), rel, (rn, rd) = node
        names = sorted((ln.names() | rn.names()) - {EPS})
        ctx = poly_ring(names)
        return Atom(Term(ln.to_poly(ctx), ld), rel, Term(rn.to_poly(ctx), rd))
    if isinstance(node, Quant):
        return Quant(node.kind, node.var, _build(node.body))
    if isinstance(node, And):
        return And(tuple(_build(a) for a in node.args))
    if isinstance(node, Or):
        return Or(tuple(_build(a) for a in node.args))
    if isinstance(node, Not):
        return Not(_build(node.arg))
    return node


def parse_formula(text: str, variables: tuple[str, ...] | int | None = None) -> SAFormula:
    """Parse text into an SAFormula.

    ``variables`` fixes the ordered free-variable list: an int k selects the
    first k default names (x, y, z, ...), a tuple gives names explicitly.
    Free variables outside the declared list are an error. With None the
    free variables are ordered by first occurrence.
    """
    p = _Parser(text)
    raw = p.formula()
    if p.tok.kind != "end":
        p.fail("unexpected input")
    node = _build(raw)
    fv = free_vars(node)
    if isinstance(variables, int):
        declared = DEFAULT_NAMES[:variables]
    elif variables is None:
        declared = tuple(_first_occurrence(text, fv))
    else:
        declared = tuple(variables)
    extra = fv - set(declared)
    if extra:
        name = sorted(extra)[0]
        col = _find_col(text, name)
        raise ParseError(f"undeclared variable {name!r}", col)
    return SAFormula(node, declared)


def _first_occurrence(text: str, names: set[str]) -> list[str]:
    out = []
    for m in re.finditer(r"[A-Za-z_][A-Za-z_0-9]*", text):
        if m.group() in names and m.group() not in out:
            out.append(m.group())
    return out


def _find_col(text: str, name: str) -> int:
    m = re.search(rf"\b{re.escape(name)}\b", text)
    return m.start() + 1 if m else 1


class _TermParser(_Parser):
    """Rational-function terms: values are (numerator, denominator) _Expr pairs."""

    def term(self):
        a = self.product()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            b = self.product()
            if op == "-":
                b = (-b[0], b[1])
            a = (a[0] * b[1] + b[0] * a[1], a[1] * b[1])
        return a

    def product(self):
        a = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.take()
            b = self.unary()
            if op.text == "*":
                a = (a[0] * b[0], a[1] * b[1])
            else:
                if not b[0].terms:
                    raise ParseError("division by zero", op.col)
                a = (a[0] * b[1], a[1] * b[0])
        return a

    def unary(self):
        if self.tok.text == "-":
            self.take()
            n, d = self.unary()
            return -n, d
        if self.tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.text == "^":
            self.take()
            t = self.tok
            if t.kind != "num" or "." in t.text:
                self.fail("expected a non-negative integer exponent")
            self.take()
            n, d = _Expr.const(1), _Expr.const(1)
            for _ in range(int(t.text)):
                n, d = n * base[0], d * base[1]
            return n, d
        return base

    def primary(self):
        t = self.tok
        if t.text == "(":
            self.take()
            v = self.term()
            self.expect(")")
            return v
        n, d = super().primary()
        return n, _from_upoly(d)


def parse_term(text: str, variables: tuple[str, ...]):
    """Parse a rational function term; returns (num, den) polynomials in
    the ring with eps and the given variables."""
    p = _TermParser(text)
    num, den = p.term()
    if p.tok.kind != "end":
        p.fail("unexpected input")
    extra = (num.names() | den.names()) - {EPS} - set(variables)
    if extra:
        name = sorted(extra)[0]
        raise ParseError(f"undeclared variable {name!r}", _find_col(text, name))
    ctx = poly_ring(variables)
    return num.to_poly(ctx), den.to_poly(ctx)


# ---------------------------------------------------------------------------
# set expressions built from st atoms

_EXPR_OPS = {"st": 1, "not": 1, "or": 2, "and": 2, "minus": 2, "times-r": 1, "proj": 2}


def parse_expression(text: str, variables: tuple[str, ...] = ("x", "y", "z")):
    """Parse a prefix set expression such as
    ``(minus (st "0 <= x & x <= 1") (st "x = eps"))``.

    Operators: st, not, or, and, minus, times-r (product with R), proj (onto
    the first m coordinates). Atoms of arity k use the first k variables.
    """
    import shlex

    from .good_cells import Complement, Difference, Intersection, ProductR, Project, StAtom, Union

    lex = shlex.shlex(text.replace("(", " ( ").replace(")", " ) "), posix=True)
    lex.whitespace_split = True
    lex.quotes = '"'
    toks = list(lex)
    pos = 0

    def fail(msg):
        raise ParseError(msg, pos + 1)

    def take():
        nonlocal pos
        if pos >= len(toks):
            fail("unexpected end of expression")
        pos += 1
        return toks[pos - 1]

    def expr():
        if take() != "(":
            fail("expected '('")
        op = take()
        if op not in _EXPR_OPS:
            fail(f"unknown operator {op!r}")
        if op == "st":
            body = take()
            out = StAtom(parse_formula(body, tuple(variables[:_arity_hint(body, variables)])))
        elif op == "proj":
            arg = expr()
            out = Project(arg, int(take()))
        elif _EXPR_OPS[op] == 1:
            arg = expr()
            out = Complement(arg) if op == "not" else ProductR(arg)
        else:
            a, b = expr(), expr()
            out = {"or": Union, "and": Intersection, "minus": Difference}[op](a, b)
        if take() != ")":
            fail("expected ')'")
        return out

    out = expr()
    if pos != len(toks):
        fail("trailing input")
    return out


def _arity_hint(body: str, variables) -> int:
    """Number of leading default variables needed to cover those used."""
    used = set(re.findall(r"[A-Za-z_][A-Za-z_0-9]*", body)) - KEYWORDS
    k = 0
    for i, v in enumerate(variables):
        if v in used:
            k = i + 1
    return k
