"""Write an SVG of st X for every catalog set, and of the good decomposition
of every decomposition input, into a directory.

    python3 scripts/plot_catalog.py --out plots
"""
import argparse
import re
from pathlib import Path

from stpart.catalog import GOOD_INPUTS, ST_CATALOG
from stpart.good_cells import good_decomposition_box
from stpart.grammar import parse_formula
from stpart.plot import Layer, decomposition_layers, svg
from stpart.raster import slice_at
from stpart.st_operator import st_set


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="plots")
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--eps", default="1/20", help="slice drawn under st X")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for case in ST_CATALOG:
        X = parse_formula(case.formula, case.vars)
        layers = [Layer(slice_at(X, args.eps), "#ff7f0e", f"X at e = {args.eps}", 0.5),
                  Layer(st_set(X).formula, "#1f77b4", "st X", 0.6)]
        path = out / f"st-{slug(case.name)}.svg"
        path.write_text(svg(layers, len(case.vars), case.box, args.step, title=case.formula))
        print(path)
    for formulas, vs in GOOD_INPUTS:
        dec = good_decomposition_box([parse_formula(t, vs) for t in formulas], certify=False)
        title = " ; ".join(formulas)
        path = out / f"cells-{slug(title)[:60]}.svg"
        path.write_text(svg(decomposition_layers(dec, dec.st_sets), len(vs), 1.5, args.step, title=title))
        print(path)


if __name__ == "__main__":
    main()
