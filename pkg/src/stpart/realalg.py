"""Real algebraic numbers over Q and arithmetic in real number fields Q(theta).

Everything here is exact: signs of algebraic quantities are found by exact
rational interval arithmetic on isolating intervals, combined with exact
zero tests (reduction modulo an irreducible minimal polynomial, or Sturm
counts of a gcd).
"""
from __future__ import annotations

from functools import cmp_to_key
from typing import Sequence

from flint import fmpq, fmpq_mpoly, fmpq_poly

from .exact_algebra import coeffs_in, names_of, ring

# ---------------------------------------------------------------------------
# exact interval arithmetic on rationals


def _imul(a, b):
    ps = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return (min(ps), max(ps))


def _upoly_interval(u: fmpq_poly, lo: fmpq, hi: fmpq):
    acc = (fmpq(0), fmpq(0))
    for c in reversed(u.coeffs()):
        acc = _imul(acc, (lo, hi))
        acc = (acc[0] + c, acc[1] + c)
    return acc


def _fmpq_of_arf(x) -> fmpq:
    m, e = x.man_exp()
    return fmpq(int(m)) * (fmpq(2) ** int(e)) if int(e) >= 0 else fmpq(int(m), 2 ** (-int(e)))


class RealAlg:
    """A real algebraic number: a rational, or the unique root of an
    irreducible polynomial in an open rational interval."""

    __slots__ = ("poly", "lo", "hi", "value")

    def __init__(self, poly: fmpq_poly | None, lo: fmpq | None = None, hi: fmpq | None = None, value: fmpq | None = None):
        self.poly = poly
        self.lo = lo
        self.hi = hi
        self.value = value

    @staticmethod
    def rational(q) -> "RealAlg":
        q = fmpq(q) if not isinstance(q, fmpq) else q
        return RealAlg(None, q, q, q)

    def is_rational(self) -> bool:
        return self.value is not None

    def refine(self, steps: int = 1) -> None:
        if self.value is not None:
            return
        for _ in range(steps):
            mid = (self.lo + self.hi) / 2
            s = self.poly(mid)
            if s == 0:  # impossible for irreducible degree >= 2, kept for safety
                self.value = mid
                self.lo = self.hi = mid
                return
            if (s > 0) == (self.poly(self.lo) > 0):
                self.lo = mid
            else:
                self.hi = mid

    def refine_to(self, width: fmpq) -> None:
        while self.value is None and self.hi - self.lo > width:
            self.refine()

    def interval(self):
        return (self.lo, self.hi)

    def approx(self) -> float:
        if self.value is not None:
            return float(self.value.p) / float(self.value.q)
        self.refine_to(fmpq(1, 2**60))
        m = (self.lo + self.hi) / 2
        return float(m.p) / float(m.q)

    def cmp_rat(self, q: fmpq) -> int:
        if self.value is not None:
            return (self.value > q) - (self.value < q)
        while self.lo <= q <= self.hi:
            if self.poly(q) == 0:
                return 0
            self.refine()
            if self.value is not None:
                return (self.value > q) - (self.value < q)
        return 1 if self.lo > q else -1

    def cmp(self, other: "RealAlg") -> int:
        if other.value is not None:
            return self.cmp_rat(other.value)
        if self.value is not None:
            return -other.cmp_rat(self.value)
        if self.poly == other.poly:
            # same irreducible polynomial: equal iff the intervals share a root
            lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
            if lo < hi and _sign_changes_between(self.poly, lo, hi):
                return 0
        while not (self.hi < other.lo or other.hi < self.lo):
            self.refine()
            other.refine()
        return -1 if self.hi < other.lo else 1

    def __eq__(self, other):
        return isinstance(other, RealAlg) and self.cmp(other) == 0

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __hash__(self):
        return hash(self.value) if self.value is not None else hash(str(self.poly))

    def sign(self) -> int:
        return self.cmp_rat(fmpq(0))

    def rational_between(self, other: "RealAlg") -> fmpq:
        """A simple rational strictly between self < other."""
        assert self.cmp(other) < 0
        while True:
            a = self.hi if self.value is None else self.value
            b = other.lo if other.value is None else other.value
            if a < b:
                return simplest_between(a, b)
            self.refine()
            other.refine()

    def __str__(self):
        if self.value is not None:
            q = self.value
            return str(q.p) if q.q == 1 else f"{q.p}/{q.q}"
        return f"root({self.poly}; {self.lo}, {self.hi})"

    __repr__ = __str__

    def copy(self) -> "RealAlg":
        return RealAlg(self.poly, self.lo, self.hi, self.value)


def _sign_changes_between(u: fmpq_poly, lo: fmpq, hi: fmpq) -> bool:
    a, b = u(lo), u(hi)
    return a != 0 and b != 0 and (a > 0) != (b > 0)


def simplest_between(a: fmpq, b: fmpq) -> fmpq:
    """A rational of small height in the open interval (a, b)."""
    assert a < b
    if a < 0 < b:
        return fmpq(0)
    from math import floor

    # try dyadic rationals with increasing denominator
    k = 0
    while True:
        d = 2**k
        n = floor(a * d) + 1
        cand = fmpq(n, d)
        if a < cand < b:
            return cand
        k += 1


def real_roots(u: fmpq_poly) -> list[RealAlg]:
    """All distinct real roots of a nonzero univariate rational polynomial."""
    if u.is_zero():
        raise ValueError("real_roots of zero polynomial")
    if u.degree() <= 0:
        return []
    out: list[RealAlg] = []
    _, facs = u.factor()
    for f, _ in facs:
        if f.degree() == 1:
            c = f.coeffs()
            out.append(RealAlg.rational(-c[0] / c[1]))
            continue
        for r, _ in f.complex_roots():
            if not r.imag.is_zero():
                continue
            lo = _fmpq_of_arf(r.real.lower())
            hi = _fmpq_of_arf(r.real.upper())
            while not _sign_changes_between(f, lo, hi):
                # widen slightly if rounding left an endpoint on the wrong side
                w = (hi - lo) if hi > lo else fmpq(1, 2**60)
                lo, hi = lo - w, hi + w
            out.append(RealAlg(f, lo, hi))
    out.sort(key=cmp_to_key(lambda a, b: a.cmp(b)))
    return out


# ---------------------------------------------------------------------------
# real number fields


class NumberField:
    """Q(theta) for a real algebraic theta of degree >= 2 (elements are
    fmpq_poly reduced modulo the minimal polynomial)."""

    def __init__(self, theta: RealAlg):
        assert not theta.is_rational()
        self.theta = theta
        self.m = theta.poly
        self.degree = theta.poly.degree()

    def reduce(self, a: fmpq_poly) -> fmpq_poly:
        return a % self.m if a.degree() >= self.degree else a

    def inv(self, a: fmpq_poly) -> fmpq_poly:
        g, s, _ = a.xgcd(self.m)
        if g.is_zero() or g.degree() > 0:
            raise ZeroDivisionError("non-invertible number field element")
        return self.reduce(s / g.coeffs()[0])

    def sign(self, a: fmpq_poly) -> int:
        a = self.reduce(a)
        if a.is_zero():
            return 0
        if a.degree() == 0:
            c = a.coeffs()[0]
            return 1 if c > 0 else -1
        th = self.theta
        while True:
            lo, hi = _upoly_interval(a, th.lo, th.hi)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            th.refine(4)

    def bounds(self, a: fmpq_poly):
        return _upoly_interval(self.reduce(a), self.theta.lo, self.theta.hi)

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.m == other.m and self.theta.cmp(other.theta) == 0

    def __hash__(self):
        return hash(str(self.m))


class Field:
    """Uniform wrapper: the rationals (nf=None) or a real number field."""

    def __init__(self, nf: NumberField | None = None):
        self.nf = nf

    def elem(self, q) -> fmpq_poly:
        return fmpq_poly([q])

    def mul(self, a, b):
        return self.nf.reduce(a * b) if self.nf else a * b

    def inv(self, a):
        if self.nf:
            return self.nf.inv(a)
        c = a.coeffs()[0] if not a.is_zero() else fmpq(0)
        if c == 0:
            raise ZeroDivisionError("inverse of zero")
        return fmpq_poly([1 / c])

    def sign(self, a) -> int:
        if self.nf:
            return self.nf.sign(a)
        if a.is_zero():
            return 0
        return 1 if a.coeffs()[0] > 0 else -1

    def is_zero(self, a) -> bool:
        return (self.nf.reduce(a) if self.nf else a).is_zero()

    def bounds(self, a):
        if self.nf:
            return self.nf.bounds(a)
        c = a.coeffs()[0] if not a.is_zero() else fmpq(0)
        return (c, c)


QQ = Field(None)

# K-polynomials: lists of field elements (fmpq_poly), lowest degree first.


def kp_trim(p: list, K: Field) -> list:
    p = [K.nf.reduce(c) if K.nf else c for c in p]
    while p and p[-1].is_zero():
        p.pop()
    return p


def kp_eval_rat(p: list, x: fmpq, K: Field) -> fmpq_poly:
    acc = fmpq_poly([])
    for c in reversed(p):
        acc = acc * x + c
    return K.nf.reduce(acc) if K.nf else acc


def kp_deriv(p: list, K: Field) -> list:
    return kp_trim([c * k for k, c in enumerate(p)][1:], K)


def kp_rem(a: list, b: list, K: Field) -> list:
    a, b = kp_trim(a, K), kp_trim(b, K)
    if not b:
        raise ZeroDivisionError("K-polynomial remainder by zero")
    lb = K.inv(b[-1])
    while len(a) >= len(b):
        q = K.mul(a[-1], lb)
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[i + shift] = a[i + shift] - K.mul(q, c)
        a = kp_trim(a, K)
    return a


def kp_monic(a: list, K: Field) -> list:
    lc = K.inv(a[-1])
    return [K.mul(c, lc) for c in a]


def kp_gcd(a: list, b: list, K: Field) -> list:
    a, b = kp_trim(a, K), kp_trim(b, K)
    while b:
        a, b = b, kp_rem(a, b, K)
    return kp_monic(a, K) if a else a


def kp_divexact(a: list, b: list, K: Field) -> list:
    a, b = kp_trim(a, K), kp_trim(b, K)
    out = [fmpq_poly([])] * max(len(a) - len(b) + 1, 0)
    lb = K.inv(b[-1])
    while len(a) >= len(b):
        q = K.mul(a[-1], lb)
        shift = len(a) - len(b)
        out[shift] = q
        for i, c in enumerate(b):
            a[i + shift] = a[i + shift] - K.mul(q, c)
        a = kp_trim(a, K)
    if a:
        raise ArithmeticError("inexact K-polynomial division")
    return out


def kp_mul(a: list, b: list, K: Field) -> list:
    if not a or not b:
        return []
    out = [fmpq_poly([])] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return kp_trim(out, K)


def kp_squarefree(p: list, K: Field) -> list:
    p = kp_trim(p, K)
    if len(p) <= 2:
        return p
    g = kp_gcd(p, kp_deriv(p, K), K)
    return kp_divexact(p, g, K) if len(g) > 1 else p


def kp_sturm(p: list, K: Field) -> list:
    chain = [p, kp_deriv(p, K)]
    while chain[-1]:
        r = kp_rem(chain[-2], chain[-1], K)
        chain.append([-c for c in r])
    return [c for c in chain if c]


def _kp_sign_at(p: list, x, K: Field) -> int:
    if x == "-inf" or x == "+inf":
        s = K.sign(p[-1])
        return s * ((-1) ** (len(p) - 1) if x == "-inf" else 1)
    return K.sign(kp_eval_rat(p, x, K))


def _var(signs) -> int:
    s = [x for x in signs if x != 0]
    return sum(1 for a, b in zip(s, s[1:]) if a != b)


def kp_count(chain: list, lo, hi, K: Field) -> int:
    """Distinct roots in (lo, hi) from a precomputed Sturm chain (endpoints not roots)."""
    return _var(_kp_sign_at(c, lo, K) for c in chain) - _var(_kp_sign_at(c, hi, K) for c in chain)


def kp_root_bound(p: list, K: Field) -> fmpq:
    lo, hi = K.bounds(p[-1])
    while lo <= 0 <= hi:
        K.nf.theta.refine(4)
        lo, hi = K.bounds(p[-1])
    lead = min(abs(lo), abs(hi))
    b = fmpq(1)
    for c in p[:-1]:
        clo, chi = K.bounds(c)
        b += max(abs(clo), abs(chi)) / lead
    return b + 1


class KRoot:
    """The unique root of a squarefree K-polynomial in an open rational interval,
    or an exact rational root (value set)."""

    __slots__ = ("K", "poly", "chain", "lo", "hi", "value")

    def __init__(self, K: Field, poly: list, chain: list, lo: fmpq, hi: fmpq, value: fmpq | None = None):
        self.K, self.poly, self.chain, self.lo, self.hi, self.value = K, poly, chain, lo, hi, value

    def refine(self) -> None:
        if self.value is not None:
            return
        mid = (self.lo + self.hi) / 2
        v = kp_eval_rat(self.poly, mid, self.K)
        if self.K.is_zero(v):
            self.value = mid
            self.lo = self.hi = mid
            return
        if kp_count(self.chain, self.lo, mid, self.K) == 1:
            self.hi = mid
        else:
            self.lo = mid

    def approx(self) -> float:
        if self.value is not None:
            return float(self.value.p) / float(self.value.q)
        while self.hi - self.lo > fmpq(1, 2**50):
            self.refine()
            if self.value is not None:
                return self.approx()
        m = (self.lo + self.hi) / 2
        return float(m.p) / float(m.q)

    def sign_of(self, p: list) -> int:
        """Sign of the K-polynomial p at this root."""
        K = self.K
        p = kp_trim(p, K)
        if not p:
            return 0
        if self.value is not None:
            return K.sign(kp_eval_rat(p, self.value, K))
        if len(p) == 1:
            return K.sign(p[0])
        g = kp_gcd(p, self.poly, K)
        if len(g) > 1 and kp_count(kp_sturm(g, K), self.lo, self.hi, K) == 1:
            return 0
        sq = kp_squarefree(p, K)
        ch = kp_sturm(sq, K)
        while True:
            lo_v = kp_eval_rat(sq, self.lo, K)
            hi_v = kp_eval_rat(sq, self.hi, K)
            if not K.is_zero(lo_v) and not K.is_zero(hi_v) and kp_count(ch, self.lo, self.hi, K) == 0:
                return K.sign(kp_eval_rat(p, self.lo, K))
            self.refine()
            if self.value is not None:
                return K.sign(kp_eval_rat(p, self.value, K))

    def cmp_rat(self, q: fmpq) -> int:
        while True:
            if self.value is not None:
                return (self.value > q) - (self.value < q)
            if q <= self.lo:
                return 1
            if q >= self.hi:
                return -1
            if self.K.is_zero(kp_eval_rat(self.poly, q, self.K)):
                return 0
            self.refine()


def k_isolate(polys: Sequence[list], K: Field):
    """Isolate the real roots of a family of K-polynomials.

    Returns (roots, signs) where roots is the ascending list of distinct roots
    (KRoot) of the product and signs[j][i] is the sign of polys[i] at roots[j].
    """
    sq = []
    for p in polys:
        p = kp_trim(p, K)
        if len(p) >= 2:
            sq.append(kp_squarefree(p, K))
    if not sq:
        return [], []
    # squarefree part of the product
    G = sq[0]
    for p in sq[1:]:
        g = kp_gcd(G, p, K)
        G = kp_mul(G, kp_divexact(p, g, K) if len(g) > 1 else p, K)
    G = kp_monic(G, K)
    chain = kp_sturm(G, K)
    B = kp_root_bound(G, K)
    roots: list[KRoot] = []
    work = [(-B, B)]
    while work:
        lo, hi = work.pop()
        n = kp_count(chain, lo, hi, K)
        if n == 0:
            continue
        if n == 1:
            roots.append(KRoot(K, G, chain, lo, hi))
            continue
        mid = (lo + hi) / 2
        if K.is_zero(kp_eval_rat(G, mid, K)):
            roots.append(KRoot(K, G, chain, mid, mid, mid))
            # shrink so the neighbours exclude mid
            d = (hi - lo) / 4
            while True:
                a, b = mid - d, mid + d
                if (not K.is_zero(kp_eval_rat(G, a, K)) and not K.is_zero(kp_eval_rat(G, b, K))
                        and kp_count(chain, a, b, K) == 1):
                    break
                d /= 2
            work.extend([(lo, a), (b, hi)])
        else:
            work.extend([(lo, mid), (mid, hi)])
    roots.sort(key=lambda r: r.lo)
    signs = [[r.sign_of(p) for p in polys] for r in roots]
    return roots, signs


# ---------------------------------------------------------------------------
# evaluation of rational polynomials at points with number field coordinates


def eval_to_kpoly(P: fmpq_mpoly, coord_vars: Sequence[str], coords: Sequence[fmpq_poly], var: str | None, K: Field) -> list:
    """Substitute coordinate values (elements of K) into P.

    Returns the K-polynomial in var (or a one-element list if var is None).
    """
    names = names_of(P)
    idx = {n: i for i, n in enumerate(names)}
    vi = idx.get(var) if var else None
    powers: dict = {}

    def pw(j, k):
        key = (j, k)
        if key not in powers:
            if k == 0:
                powers[key] = fmpq_poly([1])
            else:
                powers[key] = K.mul(pw(j, k - 1), coords[j])
        return powers[key]

    out: dict[int, fmpq_poly] = {}
    for mon, c in P.to_dict().items():
        term = fmpq_poly([c])
        for j, n in enumerate(coord_vars):
            k = mon[idx[n]] if n in idx else 0
            if k:
                term = K.mul(term, pw(j, k))
        for n, i in idx.items():
            if mon[i] and n not in coord_vars and n != var:
                raise ValueError(f"unassigned variable {n} in evaluation")
        d = mon[vi] if vi is not None else 0
        out[d] = out.get(d, fmpq_poly([])) + term
    deg = max(out) if out else 0
    return kp_trim([out.get(k, fmpq_poly([])) for k in range(deg + 1)], K)


# ---------------------------------------------------------------------------
# primitive elements


def extend_field(K: Field, coords: list, root: KRoot):
    """Return (K2, coords2, beta) with K2 = K(root) and coords re-expressed in K2."""
    if root.value is not None:
        return K, coords, fmpq_poly([root.value])
    h = root.poly
    if K.nf is None:
        u = fmpq_poly([c.coeffs()[0] if not c.is_zero() else 0 for c in h])
        _, facs = u.factor()
        for f, _ in facs:
            lo, hi = root.lo, root.hi
            while True:
                if f.degree() == 1:
                    r = -f.coeffs()[0] / f.coeffs()[1]
                    if lo < r < hi:
                        return K, coords, fmpq_poly([r])
                    break
                fl, fh = f(lo), f(hi)
                if fl != 0 and fh != 0 and (fl > 0) != (fh > 0):
                    beta = RealAlg(f, lo, hi)
                    K2 = Field(NumberField(beta))
                    return K2, coords, fmpq_poly([0, 1])
                if f(lo) != 0 and f(hi) != 0:
                    break
                root.refine()
                lo, hi = root.lo, root.hi
        raise ArithmeticError("could not identify the minimal polynomial of a root")
    nf = K.nf
    R = ring(("x", "t"))
    x, t = R.gens()
    mx = sum((c * x**i for i, c in enumerate(nf.m.coeffs())), R.from_dict({}))
    for k in range(1, 20):
        H = R.from_dict({})
        for j, c in enumerate(h):
            cx = sum((a * x**i for i, a in enumerate(c.coeffs())), R.from_dict({}))
            H += cx * (t - k * x) ** j
        N = mx.resultant(H, "x")
        Nt = fmpq_poly([0])
        for mon, c in N.to_dict().items():
            Nt += fmpq_poly([0] * mon[1] + [c])
        cands = []
        for f, _ in Nt.factor()[1]:
            cands.extend(real_roots(f))
        # locate theta2 = beta + k*theta among candidates
        while True:
            lo = root.lo + k * nf.theta.lo
            hi = root.hi + k * nf.theta.hi
            inside = [c for c in cands if c.cmp_rat(lo) > 0 and c.cmp_rat(hi) < 0]
            touching = [c for c in cands if not (c.cmp_rat(hi) > 0 or c.cmp_rat(lo) < 0)]
            if len(inside) == 1 and len(touching) == 1:
                theta2 = inside[0]
                break
            root.refine()
            nf.theta.refine(2)
        if theta2.is_rational():
            continue
        K2 = Field(NumberField(theta2))
        # gcd over K2 of m(x) and h(x, theta2 - k x) as polynomials in x
        m_k = [fmpq_poly([c]) for c in nf.m.coeffs()]
        T = fmpq_poly([0, 1])
        hx: list = [fmpq_poly([])]
        for j, c in enumerate(h):
            # c(x) * (T - k x)^j as a K2-polynomial in x
            lin = [T, fmpq_poly([-k])]
            pw = [fmpq_poly([1])]
            for _ in range(j):
                pw = kp_mul(pw, lin, K2)
            cpoly = [fmpq_poly([a]) for a in c.coeffs()] or [fmpq_poly([])]
            term = kp_mul(cpoly, pw, K2)
            n = max(len(hx), len(term))
            hx = [(hx[i] if i < len(hx) else fmpq_poly([])) + (term[i] if i < len(term) else fmpq_poly([])) for i in range(n)]
        g = kp_gcd(m_k, kp_trim(hx, K2), K2)
        if len(g) != 2:
            continue
        a_theta = K2.nf.reduce(-g[0] * K2.inv(g[1]))  # theta as an element of K2
        def lift(c):
            acc = fmpq_poly([])
            for a in reversed(c.coeffs()):
                acc = K2.nf.reduce(acc * a_theta + a)
            return acc
        new_coords = [lift(c) for c in coords]
        beta = K2.nf.reduce(T - k * a_theta)
        return K2, new_coords, beta
    raise ArithmeticError("primitive element search failed")


def kelem_approx(K: Field, a: fmpq_poly) -> float:
    lo, hi = K.bounds(a)
    while K.nf and hi - lo > fmpq(1, 2**40):
        K.nf.theta.refine(8)
        lo, hi = K.bounds(a)
    m = (lo + hi) / 2
    return float(m.p) / float(m.q)


def coeff_upoly(P: fmpq_mpoly, var: str) -> list[fmpq_mpoly]:
    return coeffs_in(P, var)
