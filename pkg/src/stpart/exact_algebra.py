"""Exact arithmetic in Q and Q(eps), polynomial helpers and root counting.

Rationals are flint ``fmpq`` values.  Multivariate polynomials are flint
``fmpq_mpoly`` objects; a polynomial over Q(eps) is an ``fmpq_mpoly`` that
uses the reserved variable ``e`` for eps (denominators are always cleared).
Elements of Q(eps) itself are ``FieldElem`` values in the canonical form
``eps^k * num(eps) / den(eps)`` with ``num(0) != 0`` and ``den(0) = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from flint import fmpq, fmpq_mpoly, fmpq_mpoly_ctx, fmpq_poly, fmpz

EPS = "e"

Rat = fmpq
Poly = fmpq_mpoly


def rat(value, den=1) -> fmpq:
    """Coerce ints, Fractions, strings like '3/4' or fmpq to an fmpq."""
    if isinstance(value, fmpq) and den == 1:
        return value
    if isinstance(value, Fraction):
        return fmpq(value.numerator, value.denominator) / den
    if isinstance(value, str):
        f = Fraction(value)
        return fmpq(f.numerator, f.denominator) / den
    if isinstance(value, float):
        f = Fraction(value)
        return fmpq(f.numerator, f.denominator) / den
    return fmpq(value) / den


def rat_to_fraction(q: fmpq) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def rat_str(q: fmpq) -> str:
    return str(q.p) if q.q == 1 else f"{q.p}/{q.q}"


# ---------------------------------------------------------------------------
# polynomial rings


@lru_cache(maxsize=None)
def ring(names: tuple[str, ...]) -> fmpq_mpoly_ctx:
    """Lex-ordered polynomial ring over Q with the given variable names."""
    return fmpq_mpoly_ctx.get(tuple(names), "lex")


def names_of(p: Poly) -> tuple[str, ...]:
    return tuple(p.context().names())


def convert(p: Poly, ctx: fmpq_mpoly_ctx) -> Poly:
    """Re-express p in ctx; every variable p actually uses must exist in ctx."""
    src = names_of(p)
    if src == tuple(ctx.names()):
        return p
    dst = list(ctx.names())
    pos = {n: i for i, n in enumerate(dst)}
    terms = {}
    for mon, c in p.to_dict().items():
        out = [0] * len(dst)
        for n, k in zip(src, mon):
            if k:
                if n not in pos:
                    raise ValueError(f"variable {n} not in target ring {dst}")
                out[pos[n]] = k
        terms[tuple(out)] = c
    return ctx.from_dict(terms)


def used_vars(p: Poly) -> set[str]:
    names = names_of(p)
    return {names[i] for i, d in enumerate(p.degrees()) if d > 0}


def degree_in(p: Poly, var: str) -> int:
    names = names_of(p)
    if var not in names or p.is_zero():
        return 0 if not p.is_zero() else -1
    return p.degrees()[names.index(var)]


def coeffs_in(p: Poly, var: str) -> list[Poly]:
    """Coefficients of p viewed as a polynomial in var, lowest degree first."""
    ctx = p.context()
    names = names_of(p)
    i = names.index(var)
    d = degree_in(p, var)
    buckets: list[dict] = [dict() for _ in range(max(d, 0) + 1)]
    for mon, c in p.to_dict().items():
        k = mon[i]
        m = list(mon)
        m[i] = 0
        buckets[k][tuple(m)] = c
    return [ctx.from_dict(b) if b else ctx.from_dict({}) for b in buckets]


def from_coeffs(cs: Sequence[Poly], var: str) -> Poly:
    ctx = cs[0].context()
    v = ctx.gens()[list(ctx.names()).index(var)]
    out = ctx.from_dict({})
    for k, c in enumerate(cs):
        if not c.is_zero():
            out += c * v**k
    return out


def subs_values(p: Poly, values: dict[str, fmpq]) -> Poly:
    """Substitute rational values for some variables (result in same ring)."""
    if not values:
        return p
    vals = {k: rat(v) for k, v in values.items() if k in names_of(p)}
    return p.subs(vals) if vals else p


def to_upoly(p: Poly, var: str) -> fmpq_poly:
    """Univariate fmpq_poly from an mpoly that only involves var."""
    extra = used_vars(p) - {var}
    if extra:
        raise ValueError(f"polynomial {p} involves {sorted(extra)} besides {var}")
    if p.is_zero():
        return fmpq_poly([])
    names = names_of(p)
    i = names.index(var) if var in names else None
    d = 0 if i is None else p.degrees()[i]
    cs = [fmpq(0)] * (d + 1)
    for mon, c in p.to_dict().items():
        cs[0 if i is None else mon[i]] = fmpq(c)
    return fmpq_poly(cs)


def from_upoly(u: fmpq_poly, var: str, ctx: fmpq_mpoly_ctx) -> Poly:
    i = list(ctx.names()).index(var)
    terms = {}
    n = len(ctx.names())
    for k, c in enumerate(u.coeffs()):
        if c != 0:
            mon = [0] * n
            mon[i] = k
            terms[tuple(mon)] = c
    return ctx.from_dict(terms)


def primitive_part(p: Poly) -> Poly:
    """p scaled to integer coprime coefficients with positive leading term."""
    if p.is_zero():
        return p
    d = p.to_dict()
    den = fmpz(1)
    for c in d.values():
        c = fmpq(c)
        den = den * c.q // den.gcd(c.q)
    nums = [int(fmpq(c) * den) for c in d.values()]
    from math import gcd

    g = 0
    for n in nums:
        g = gcd(g, n)
    out = p * fmpq(int(den), g)
    lead = max(out.to_dict().items())[1]
    return out if lead > 0 else -out


def irreducible_factors(p: Poly) -> list[Poly]:
    """Distinct non-constant irreducible factors, normalized by primitive_part."""
    if p.is_zero() or p.is_constant():
        return []
    _, facs = p.factor()
    return [primitive_part(f) for f, _ in facs if not f.is_constant()]


def factor_basis(polys: Iterable[Poly]) -> list[Poly]:
    """Sorted, deduplicated irreducible factors of a family of polynomials."""
    seen: dict[str, Poly] = {}
    for p in polys:
        for f in irreducible_factors(p):
            seen.setdefault(str(f), f)
    return [seen[k] for k in sorted(seen, key=lambda s: (len(s), s))]


def resultant(p: Poly, q: Poly, var: str) -> Poly:
    """Sylvester resultant eliminating var."""
    if degree_in(p, var) <= 0 and degree_in(q, var) <= 0:
        raise ValueError("resultant: both polynomials are constant in " + var)
    if degree_in(p, var) == 0:
        return p ** degree_in(q, var)
    if degree_in(q, var) == 0:
        return q ** degree_in(p, var)
    return p.resultant(q, var)


def discriminant(p: Poly, var: str) -> Poly:
    """Discriminant in var, normalized as res(p, dp/dvar)/(+-lc): b^2-4ac for quadratics."""
    if degree_in(p, var) < 1:
        raise ValueError("discriminant: polynomial is constant in " + var)
    return p.discriminant(var)


def initial_form(p: Poly, var: str = EPS) -> tuple[int, Poly]:
    """Split p = var^k * (p0 + var*...) and return (k, p0) with p0 free of var."""
    cs = coeffs_in(p, var) if var in names_of(p) else [p]
    for k, c in enumerate(cs):
        if not c.is_zero():
            return k, c
    raise ValueError("initial_form of zero polynomial")


def content_in(p: Poly, var: str) -> Poly:
    """gcd of the coefficients of p with respect to var."""
    cs = [c for c in coeffs_in(p, var) if not c.is_zero()]
    g = cs[0]
    for c in cs[1:]:
        g = g.gcd(c)
    return g


# ---------------------------------------------------------------------------
# Q(eps)


def _val(u: fmpq_poly) -> int:
    for k, c in enumerate(u.coeffs()):
        if c != 0:
            return k
    raise ZeroDivisionError("valuation of zero")


def _shift_down(u: fmpq_poly, k: int) -> fmpq_poly:
    return fmpq_poly(u.coeffs()[k:]) if k else u


@dataclass(frozen=True, eq=False)
class FieldElem:
    """eps^order * num(eps)/den(eps) in canonical form (den(0) = 1)."""

    order: int
    num: fmpq_poly
    den: fmpq_poly

    @staticmethod
    def make(num, den=None) -> "FieldElem":
        num = num if isinstance(num, fmpq_poly) else fmpq_poly([rat(num)])
        den = fmpq_poly([1]) if den is None else (den if isinstance(den, fmpq_poly) else fmpq_poly([rat(den)]))
        if den.is_zero():
            raise ZeroDivisionError("FieldElem with zero denominator")
        if num.is_zero():
            return ZERO
        g = num.gcd(den)
        if g.degree() > 0:
            num, den = num // g, den // g
        k = _val(num) - _val(den)
        num, den = _shift_down(num, _val(num)), _shift_down(den, _val(den))
        d0 = den.coeffs()[0]
        return FieldElem(k, num / d0, den / d0)

    @staticmethod
    def rational(q) -> "FieldElem":
        return FieldElem.make(fmpq_poly([rat(q)]))

    @staticmethod
    def eps(power: int = 1) -> "FieldElem":
        return FieldElem(power, fmpq_poly([1]), fmpq_poly([1]))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _poly_pair(self) -> tuple[fmpq_poly, fmpq_poly]:
        if self.order >= 0:
            return self.num * fmpq_poly([0] * self.order + [1]), self.den
        return self.num, self.den * fmpq_poly([0] * (-self.order) + [1])

    def __add__(self, other):
        other = _fe(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        a, b = self._poly_pair()
        c, d = other._poly_pair()
        return FieldElem.make(a * d + c * b, b * d)

    __radd__ = __add__

    def __neg__(self):
        return self if self.is_zero() else FieldElem(self.order, -self.num, self.den)

    def __sub__(self, other):
        return self + (-_fe(other))

    def __rsub__(self, other):
        return _fe(other) - self

    def __mul__(self, other):
        other = _fe(other)
        if self.is_zero() or other.is_zero():
            return ZERO
        return FieldElem.make_raw(self.order + other.order, self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    @staticmethod
    def make_raw(order: int, num: fmpq_poly, den: fmpq_poly) -> "FieldElem":
        x = FieldElem.make(num, den)
        return FieldElem(x.order + order, x.num, x.den)

    def inverse(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(eps)")
        return FieldElem.make_raw(-self.order, self.den, self.num)

    def __truediv__(self, other):
        return self * _fe(other).inverse()

    def __rtruediv__(self, other):
        return _fe(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        for _ in range(k):
            out = out * self
        return out

    def sign(self) -> int:
        return fe_sign(self)

    def __eq__(self, other):
        try:
            other = _fe(other)
        except TypeError:
            return NotImplemented
        return self.order == other.order and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.order, str(self.num), str(self.den)))

    def __lt__(self, other):
        return fe_sign(self - _fe(other)) < 0

    def __le__(self, other):
        return fe_sign(self - _fe(other)) <= 0

    def __gt__(self, other):
        return fe_sign(self - _fe(other)) > 0

    def __ge__(self, other):
        return fe_sign(self - _fe(other)) >= 0

    def evaluate(self, e: fmpq) -> fmpq:
        """Value at a real parameter e (transfer to a real slice)."""
        e = rat(e)
        return e**self.order * self.num(e) / self.den(e) if self.order >= 0 else self.num(e) / (self.den(e) * e ** (-self.order))

    def __float__(self):
        return float(self.evaluate(fmpq(1, 10**6)))

    def __str__(self):
        return fe_str(self)

    __repr__ = __str__


def _fe(x) -> FieldElem:
    if isinstance(x, FieldElem):
        return x
    if isinstance(x, (int, fmpq, Fraction, fmpz)):
        return FieldElem.rational(x)
    raise TypeError(f"cannot coerce {type(x)} to FieldElem")


ZERO = FieldElem(0, fmpq_poly([]), fmpq_poly([1]))
ONE = FieldElem(0, fmpq_poly([1]), fmpq_poly([1]))


def fe_sign(x: FieldElem) -> int:
    """Sign in the ordering where 0 < eps < q for every rational q > 0."""
    if x.is_zero():
        return 0
    s = x.num.coeffs()[0]
    return 1 if s > 0 else -1


def fe_is_bounded(x: FieldElem) -> bool:
    return x.is_zero() or x.order >= 0


def fe_is_infinitesimal(x: FieldElem) -> bool:
    return x.is_zero() or x.order >= 1


def fe_st(x: FieldElem) -> fmpq:
    """Standard part of a bounded element."""
    if not fe_is_bounded(x):
        raise ValueError(f"{x} is not in O (order {x.order} < 0): no standard part")
    if x.is_zero() or x.order >= 1:
        return fmpq(0)
    return x.num.coeffs()[0]


def _upoly_text(u: fmpq_poly) -> str:
    terms = []
    for k, c in enumerate(u.coeffs()):
        if c == 0:
            continue
        mag = abs(c)
        if k == 0:
            body = rat_str(mag)
        else:
            mon = "eps" if k == 1 else f"eps^{k}"
            body = mon if mag == 1 else f"{rat_str(mag)}*{mon}"
        terms.append((c < 0, body))
    out = ("-" if terms[0][0] else "") + terms[0][1]
    for neg, body in terms[1:]:
        out += (" - " if neg else " + ") + body
    return out


def fe_str(x: FieldElem) -> str:
    """Render as e.g. ``eps^2*(3 + eps)/(1 - 2*eps)``."""
    if x.is_zero():
        return "0"
    k = x.order
    den = x.den * fmpq_poly([0] * (-k) + [1]) if k < 0 else x.den
    has_den = not den.is_one()
    epow = "" if k <= 0 else ("eps" if k == 1 else f"eps^{k}")
    if x.num.degree() == 0:
        c = x.num.coeffs()[0]
        if epow:
            head = epow if c == 1 else ("-" + epow if c == -1 else f"{rat_str(c)}*{epow}")
        else:
            head = rat_str(c)
    else:
        body = _upoly_text(x.num)
        if epow:
            head = f"{epow}*({body})"
        else:
            head = f"({body})" if has_den else body
    if not has_den:
        return head
    terms = [c for c in den.coeffs() if c != 0]
    if len(terms) == 1:
        return head + "/" + _upoly_text(den)
    return head + "/(" + _upoly_text(den) + ")"


def fe_from_poly(u: fmpq_poly, v: fmpq_poly | None = None) -> FieldElem:
    return FieldElem.make(u, v)


def fe_from_mpoly(p: Poly) -> FieldElem:
    """A polynomial in e alone as an element of Q(eps)."""
    return FieldElem.make(to_upoly(p, EPS) if not p.is_zero() else fmpq_poly([]))


# ---------------------------------------------------------------------------
# univariate polynomials over Q(eps): lists of FieldElem, lowest degree first

UPolyE = list


def upe_from_mpoly(p: Poly, var: str) -> UPolyE:
    """Coefficients in var of a polynomial in (e, var) as FieldElems."""
    extra = used_vars(p) - {var, EPS}
    if extra:
        raise ValueError(f"not univariate over Q(eps): extra variables {sorted(extra)}")
    if var not in names_of(p):
        return [fe_from_mpoly(p)]
    return [fe_from_mpoly(c) for c in coeffs_in(p, var)]


def upe_trim(p: UPolyE) -> UPolyE:
    p = list(p)
    while p and p[-1].is_zero():
        p.pop()
    return p


def upe_eval(p: UPolyE, x: FieldElem) -> FieldElem:
    out = ZERO
    for c in reversed(p):
        out = out * x + c
    return out


def upe_deriv(p: UPolyE) -> UPolyE:
    return upe_trim([c * k for k, c in enumerate(p)][1:])


def upe_rem(a: UPolyE, b: UPolyE) -> UPolyE:
    a, b = upe_trim(a), upe_trim(b)
    if not b:
        raise ZeroDivisionError("polynomial remainder by zero")
    lb = b[-1].inverse()
    while len(a) >= len(b):
        q = a[-1] * lb
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[i + shift] = a[i + shift] - q * c
        a = upe_trim(a)
    return a


def upe_divexact(a: UPolyE, b: UPolyE) -> UPolyE:
    a, b = upe_trim(a), upe_trim(b)
    out = [ZERO] * max(len(a) - len(b) + 1, 0)
    lb = b[-1].inverse()
    a = list(a)
    while len(a) >= len(b):
        q = a[-1] * lb
        shift = len(a) - len(b)
        out[shift] = q
        for i, c in enumerate(b):
            a[i + shift] = a[i + shift] - q * c
        a = upe_trim(a)
    if a:
        raise ArithmeticError("inexact polynomial division over Q(eps)")
    return out


def upe_gcd(a: UPolyE, b: UPolyE) -> UPolyE:
    a, b = upe_trim(a), upe_trim(b)
    while b:
        a, b = b, upe_rem(a, b)
    lc = a[-1].inverse()
    return [c * lc for c in a]


def upe_squarefree(p: UPolyE) -> UPolyE:
    p = upe_trim(p)
    if len(p) <= 1:
        return p
    g = upe_gcd(p, upe_deriv(p))
    return upe_divexact(p, g) if len(g) > 1 else p


def sturm_chain(p: UPolyE) -> list[UPolyE]:
    p = upe_trim(p)
    chain = [p, upe_deriv(p)]
    while chain[-1]:
        r = upe_rem(chain[-2], chain[-1])
        chain.append([-c for c in r])
    return [c for c in chain if c]


def _sign_at(p: UPolyE, x) -> int:
    if x == "-inf" or x == "+inf":
        lead = fe_sign(p[-1])
        deg = len(p) - 1
        return lead * ((-1) ** deg if x == "-inf" else 1)
    return fe_sign(upe_eval(p, x))


def _variations(signs: Iterable[int]) -> int:
    s = [x for x in signs if x != 0]
    return sum(1 for a, b in zip(s, s[1:]) if a != b)


NEG_INF = "-inf"
POS_INF = "+inf"


def _as_upe(p) -> UPolyE:
    if isinstance(p, list):
        return upe_trim([_fe(c) for c in p])
    names = [n for n in names_of(p) if n != EPS]
    used = used_vars(p) - {EPS}
    var = next(iter(used)) if used else (names[0] if names else "x")
    return upe_trim(upe_from_mpoly(p, var))


def sturm_count(p, lo=NEG_INF, hi=POS_INF) -> int:
    """Number of distinct roots in (lo, hi) in the real closure of Q(eps).

    p is a univariate polynomial over Q(eps), given either as an fmpq_mpoly in
    (e, x) or as a list of FieldElem coefficients (lowest degree first).
    """
    q = _as_upe(p)
    if not q:
        raise ValueError("sturm_count of the zero polynomial")
    lo = lo if lo in (NEG_INF, POS_INF) else _fe(lo)
    hi = hi if hi in (NEG_INF, POS_INF) else _fe(hi)
    if lo not in (NEG_INF,) and hi not in (POS_INF,) and not (lo < hi):
        raise ValueError("sturm_count needs lo < hi")
    for x in (lo, hi):
        if x not in (NEG_INF, POS_INF) and upe_eval(q, x).is_zero():
            raise ValueError(f"sturm_count: endpoint {x} is a root")
    chain = sturm_chain(upe_squarefree(q))
    return _variations(_sign_at(c, lo) for c in chain) - _variations(_sign_at(c, hi) for c in chain)


@dataclass(frozen=True)
class AlgElem:
    """A real root of a squarefree polynomial isolated in an open interval.

    ``defining`` is a list of coefficients (FieldElem, lowest first); the
    interval endpoints are FieldElem.  Over Q the coefficients are constant
    FieldElems.
    """

    defining: tuple
    lo: FieldElem
    hi: FieldElem

    def count(self) -> int:
        return sturm_count(list(self.defining), self.lo, self.hi)

    def is_rational_point(self) -> bool:
        return False

    def refine(self, width: FieldElem) -> "AlgElem":
        """Shrink the interval until hi - lo < width."""
        cur = self
        while not (cur.hi - cur.lo < width):
            nxt = _split_one(list(cur.defining), cur.lo, cur.hi, keep_single=True)
            if nxt is None:
                raise ArithmeticError(
                    "cannot refine below this width inside Q(eps): the root has a "
                    "non-integer eps-order (reparametrize eps := eta^m)")
            cur = AlgElem(cur.defining, *nxt)
        return cur

    def __str__(self):
        return f"root of {_upe_str(self.defining)} in ({self.lo}, {self.hi})"


def _upe_str(p) -> str:
    parts = []
    for k, c in enumerate(p):
        if not c.is_zero():
            parts.append(f"({c})*x^{k}")
    return " + ".join(parts) or "0"


def _candidates(lo: FieldElem, hi: FieldElem):
    """Split points inside (lo, hi): midpoint, then eps-scaled offsets."""
    yield (lo + hi) / 2
    width = hi - lo
    mults = [fmpq(1), fmpq(1, 2), fmpq(3, 2), fmpq(2), fmpq(1, 4), fmpq(3, 4), fmpq(3), fmpq(4), fmpq(5, 2)]
    for k in range(0, 7):
        for r in mults:
            off = width * FieldElem.eps(k) * r if k else width * r / 8
            for pt in (lo + off, hi - off):
                if lo < pt < hi:
                    yield pt
    for k in range(1, 7):
        for r in mults:
            for s in (1, -1):
                pt = FieldElem.eps(k) * r * s
                if lo < pt < hi:
                    yield pt


def _split_one(p: UPolyE, lo, hi, keep_single=False):
    """Find a sub-interval split of (lo, hi); returns the part holding a root."""
    total = sturm_count(p, lo, hi)
    for pt in _candidates(lo, hi):
        if upe_eval(p, pt).is_zero():
            continue
        left = sturm_count(p, lo, pt)
        if keep_single:
            if total == 1:
                return (lo, pt) if left == 1 else (pt, hi)
        elif 0 < left < total:
            return pt
    return None


def _cauchy_bound(p: UPolyE) -> FieldElem:
    lead = p[-1]
    b = ONE
    for c in p[:-1]:
        r = c / lead
        b = b + (r if fe_sign(r) >= 0 else -r)
    return b + 1


def isolate_roots(p) -> list:
    """Isolate all real roots of a nonzero univariate polynomial.

    Over Q (no eps) the result is a list of ``RealAlg`` (see realalg); over
    Q(eps) a list of ``AlgElem`` with FieldElem endpoints, ascending.
    """
    if not isinstance(p, list) and EPS not in used_vars(p):
        from .realalg import real_roots

        used = used_vars(p)
        if p.is_zero():
            raise ValueError("isolate_roots of the zero polynomial")
        if not used:
            return []
        return real_roots(to_upoly(p, next(iter(used))))
    q = upe_squarefree(_as_upe(p))
    if not q:
        raise ValueError("isolate_roots of the zero polynomial")
    if len(q) == 1:
        return []
    b = _cauchy_bound(q)
    work = [(-b, b)]
    done = []
    while work:
        lo, hi = work.pop()
        n = sturm_count(q, lo, hi)
        if n == 0:
            continue
        if n == 1:
            done.append(AlgElem(tuple(q), lo, hi))
            continue
        pt = _split_one(q, lo, hi)
        if pt is None:
            raise ArithmeticError(
                "roots share a non-integer eps-order; isolation needs eps := eta^m")
        work.extend([(lo, pt), (pt, hi)])
    done.sort(key=lambda a: _sort_key(a.lo))
    return done


def _sort_key(x: FieldElem):
    from functools import cmp_to_key

    return cmp_to_key(lambda a, b: fe_sign(a - b))(x)
