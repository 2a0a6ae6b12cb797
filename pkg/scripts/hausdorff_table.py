"""Hausdorff distance between the slice X_e and st X for every catalog set.

Prints one row per set and one column per value of e. The hyperbolic arc
shrinks like sqrt(2e); most other sets like e or sqrt(e).

    python3 scripts/hausdorff_table.py --eps 1e-3 1e-4 5e-5 --step 1e-3
"""
import argparse
import math
import time
from fractions import Fraction

from flint import fmpq

from stpart.catalog import ST_CATALOG
from stpart.grammar import parse_formula
from stpart.raster import axes, hausdorff, pixel_image, slice_at
from stpart.st_operator import st_set


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-3, 1e-4, 5e-5])
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--tol", type=float, default=1e-2)
    args = ap.parse_args()

    width = max(len(c.name) for c in ST_CATALOG)
    print(f"{'set':<{width}}  " + "  ".join(f"e={e:<8.0e}" for e in args.eps))
    t0 = time.perf_counter()
    for case in ST_CATALOG:
        X = parse_formula(case.formula, case.vars)
        S = st_set(X).formula
        ax = axes(case.box, args.step)
        target = pixel_image(S.node, S.free, ax)
        cells = []
        for e in args.eps:
            q = Fraction(e).limit_denominator(10 ** 9)
            num = slice_at(X, fmpq(q.numerator, q.denominator))
            d = hausdorff(pixel_image(num.node, num.free, ax), target, args.step)
            cells.append(f"{d:.5f}{'*' if d > args.tol else ' '}   ")
        print(f"{case.name:<{width}}  " + "  ".join(cells))
    print(f"\n* above {args.tol}; sqrt(2e) = " + ", ".join(f"{math.sqrt(2 * e):.5f}" for e in args.eps))
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
