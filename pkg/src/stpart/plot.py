"""SVG drawings of sets and good decompositions in R^1 and R^2.

Sets over Q are rasterized with raster.pixel_image and emitted as runs of
rectangles, so a drawing depends only on its input and is byte-stable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formula import SAFormula
from .raster import axes, pixel_image

SIZE = 480
MARGIN = 24

# fill per type vector of a good cell
TYPE_COLORS = {
    (0,): "#d62728", (1,): "#1f77b4",
    (0, 0): "#d62728", (0, 1): "#ff7f0e", (1, 0): "#2ca02c", (1, 1): "#aec7e8",
}


@dataclass
class Layer:
    formula: SAFormula          # quantifier-free, over Q
    fill: str
    label: str
    opacity: float = 1.0


def _runs(row: np.ndarray) -> list[tuple[int, int]]:
    out = []
    k = 0
    n = len(row)
    while k < n:
        if row[k]:
            j = k
            while j + 1 < n and row[j + 1]:
                j += 1
            out.append((k, j))
            k = j + 1
        else:
            k += 1
    return out


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def svg(layers: Sequence[Layer], n: int, box: float = 1.5, step: float = 0.01, title: str = "") -> str:
    """One SVG document with the layers drawn in order over [-box, box]^n."""
    if n not in (1, 2):
        raise ValueError("plots are implemented for n = 1, 2")
    ax = axes(box, step)
    k = len(ax)
    scale = SIZE / k
    height = SIZE if n == 2 else 60
    W, H = SIZE + 2 * MARGIN, height + 2 * MARGIN
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    if title:
        out.append(f"<title>{_escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
    # axes through the origin
    mid = MARGIN + (k // 2 + 0.5) * scale
    out.append(f'<g class="axes" stroke="#888888" stroke-width="0.5">')
    if n == 2:
        out.append(f'<line x1="{MARGIN}" y1="{_fmt(mid)}" x2="{MARGIN + SIZE}" y2="{_fmt(mid)}"/>')
        out.append(f'<line x1="{_fmt(mid)}" y1="{MARGIN}" x2="{_fmt(mid)}" y2="{MARGIN + SIZE}"/>')
    else:
        y = MARGIN + height / 2
        out.append(f'<line x1="{MARGIN}" y1="{_fmt(y)}" x2="{MARGIN + SIZE}" y2="{_fmt(y)}"/>')
    out.append("</g>")
    for layer in layers:
        img = pixel_image(layer.formula.node, layer.formula.free, ax)
        out.append(f'<g class="layer" data-label="{_escape(layer.label)}" fill="{layer.fill}" '
                   f'fill-opacity="{_fmt(layer.opacity)}">')
        if n == 1:
            y = MARGIN + height / 2 - 4
            for a, b in _runs(img):
                out.append(f'<rect x="{_fmt(MARGIN + a * scale)}" y="{_fmt(y)}" '
                           f'width="{_fmt(max((b - a + 1) * scale, 2))}" height="8"/>')
        else:
            # row j of the picture is y = ax[k - 1 - j]; column i is x = ax[i]
            for j in range(k):
                for a, b in _runs(img[:, k - 1 - j]):
                    out.append(f'<rect x="{_fmt(MARGIN + a * scale)}" y="{_fmt(MARGIN + j * scale)}" '
                               f'width="{_fmt((b - a + 1) * scale)}" height="{_fmt(scale)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def decomposition_layers(dec, st_sets: Sequence[SAFormula] = ()) -> list[Layer]:
    """Cells colored by type vector (open cells first), then st sets on top."""
    cells = sorted(enumerate(dec.cells), key=lambda ic: (-ic[1].dim, ic[0]))
    layers = [Layer(c.region, TYPE_COLORS[tuple(c.itype)], f"cell {i} type {''.join(map(str, c.itype))}")
              for i, c in cells]
    layers += [Layer(S, "#000000", f"st set {i}", 0.35) for i, S in enumerate(st_sets)]
    return layers


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
