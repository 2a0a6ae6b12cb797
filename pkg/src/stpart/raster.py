"""Pixel images of real sets on a uniform grid, and Hausdorff distances.

A set in the plane is scanned along every grid row and every grid column.
On each line the fibre is a finite union of points and intervals, found in
floating point from the roots of the atom polynomials and the truth value
between them. A pixel is marked when a fibre meets it, so any piece wider
than one grid step shows up, however thin it is.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from flint import fmpq
from scipy import ndimage

from .exact_algebra import EPS
from .formula import And, Atom, Const, Node, Not, Or, SAFormula, atoms, has_quantifiers, names_of, substitute

_REL = {"<": lambda s: s < 0, "<=": lambda s: s <= 0, "=": lambda s: s == 0,
        "!=": lambda s: s != 0, ">=": lambda s: s >= 0, ">": lambda s: s > 0}


def axes(box: float, step: float) -> np.ndarray:
    k = int(round(box / step))
    return np.arange(-k, k + 1) * step


def slice_at(X: SAFormula, value) -> SAFormula:
    """The real set X at eps = value."""
    if has_quantifiers(X.node):
        raise ValueError("slices need a quantifier-free formula")
    return SAFormula(substitute(X.node, {EPS: fmpq(value)}), X.free)


class _Compiled:
    """A quantifier-free formula prepared for scanning along lines."""

    def __init__(self, node: Node, free: Sequence[str]):
        self.free = tuple(free)
        self.atoms = atoms(node)
        self.rels = [_REL[a.normal()[1]] for a in self.atoms]
        self.polys = [a.normal()[0] for a in self.atoms]
        index = {id(a): j for j, a in enumerate(self.atoms)}
        self.truth = self._compile(node, index)

    def _compile(self, node: Node, index: dict):
        if isinstance(node, Const):
            return lambda s, v=node.value: v
        if isinstance(node, Atom):
            j = index[id(node)]
            rel = self.rels[j]
            return lambda s: rel(s[j])
        if isinstance(node, Not):
            f = self._compile(node.arg, index)
            return lambda s: not f(s)
        if isinstance(node, (And, Or)):
            fs = [self._compile(a, index) for a in node.args]
            if isinstance(node, And):
                return lambda s: all(f(s) for f in fs)
            return lambda s: any(f(s) for f in fs)
        raise ValueError("pixel images need a quantifier-free formula")

    def coefficients(self, line: int, fixed: np.ndarray) -> list[np.ndarray]:
        """Per atom, the array (lines, degree + 1) of coefficients, lowest first,
        of the atom polynomial on each line through the values fixed."""
        out = []
        for P in self.polys:
            names = list(names_of(P))
            table = {}
            for mon, c in P.to_dict().items():
                k, e = 0, 0
                for name, d in zip(names, mon):
                    d = int(d)
                    if not d:
                        continue
                    if name not in self.free:
                        raise ValueError(f"unexpected variable {name!r}")
                    if name == self.free[line]:
                        k = d
                    else:
                        e = d
                table[(k, e)] = table.get((k, e), 0.0) + float(fmpq(c))
            deg = max(k for k, _ in table) if table else 0
            cs = np.zeros((len(fixed), deg + 1))
            for (k, e), w in table.items():
                cs[:, k] += w * fixed ** e
            out.append(cs)
        return out


def _horner(c: np.ndarray, t: float) -> float:
    v = 0.0
    for a in c[::-1]:
        v = v * t + a
    return v


def _fibre(F: _Compiled, coeffs: list[np.ndarray], lo: float, hi: float):
    """The set on one line as (points, open intervals); coeffs lowest first."""
    roots = []
    for j, c in enumerate(coeffs):
        nz = np.nonzero(c)[0]
        if len(nz) == 0 or nz[-1] == 0:
            continue
        c = c[: nz[-1] + 1]
        if len(c) == 2:
            rs = [-c[0] / c[1]]
        else:
            rs = [r.real for r in np.roots(c[::-1]) if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
        roots.extend((float(r), j) for r in rs if lo - 1 <= r <= hi + 1)
    roots.sort()
    clusters: list[tuple[float, set]] = []
    for r, j in roots:
        if clusters and abs(r - clusters[-1][0]) <= 1e-10 * max(1.0, abs(r)):
            clusters[-1][1].add(j)
        else:
            clusters.append((r, {j}))

    def signs(t: float, zero: set) -> list:
        return [0 if j in zero else int(np.sign(_horner(c, t))) for j, c in enumerate(coeffs)]

    pts = [r for r, z in clusters if F.truth(signs(r, z))]
    cuts = [lo - 1] + [r for r, _ in clusters] + [hi + 1]
    spans = [(a, b) for a, b in zip(cuts, cuts[1:]) if b > a and F.truth(signs((a + b) / 2, set()))]
    return pts, spans


def _mark(row: np.ndarray, ax: np.ndarray, pts, spans) -> None:
    h = ax[1] - ax[0] if len(ax) > 1 else 1.0
    for r in pts:
        k = int(np.floor((r - ax[0]) / h + 0.5))
        if 0 <= k < len(ax):
            row[k] = True
    for a, b in spans:
        row |= (ax + h / 2 > a) & (ax - h / 2 < b)


def pixel_image(node: Node, free: Sequence[str], ax: np.ndarray) -> np.ndarray:
    """Boolean image of a quantifier-free set over Q on the grid ax^n (n <= 2)."""
    n = len(free)
    F = _Compiled(node, free)
    lo, hi = float(ax[0]), float(ax[-1])
    if n == 1:
        out = np.zeros(len(ax), bool)
        cs = F.coefficients(0, np.zeros(1))
        _mark(out, ax, *_fibre(F, [c[0] for c in cs], lo, hi))
        return out
    if n != 2:
        raise ValueError("pixel images are implemented for n <= 2")
    out = np.zeros((len(ax), len(ax)), bool)
    rows = F.coefficients(1, ax)
    cols = F.coefficients(0, ax)
    for i in range(len(ax)):
        _mark(out[i], ax, *_fibre(F, [c[i] for c in rows], lo, hi))
        col = np.zeros(len(ax), bool)
        _mark(col, ax, *_fibre(F, [c[i] for c in cols], lo, hi))
        out[:, i] |= col
    return out


def hausdorff(a: np.ndarray, b: np.ndarray, step: float) -> float:
    """Hausdorff distance between two pixel sets of the same grid."""
    if not a.any() and not b.any():
        return 0.0
    if not a.any() or not b.any():
        return float("inf")
    to_b = ndimage.distance_transform_edt(~b) * step
    to_a = ndimage.distance_transform_edt(~a) * step
    return float(max(to_b[a].max(), to_a[b].max()))
