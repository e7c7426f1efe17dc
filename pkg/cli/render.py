"""
SVG snapshots of Laguerre tessellations.

Coordinates are written in domain units: the viewBox is the bounding box of
the domain with a 5% margin, and y is negated so the picture is upright.
Cells are coloured by area along a blue-to-yellow ramp.
"""

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from logging import getLogger
from pathlib import Path
from typing import Optional

import numpy as np
from matplotlib import colormaps
from matplotlib.colors import to_hex

from engine.geom2d import ConvexPolygon, square
from engine.laguerre import DiscreteMeasure, LaguerreDiagram, build_diagram
from storage import read_seeds_csv

logger = getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
MARGIN = 0.05
XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>\n'


@dataclass(frozen=True)
class RenderStyle:
    width_px: int = 800
    colormap: str = "viridis"
    stroke: str = "black"
    # relative to the domain diameter
    stroke_width: float = 1e-3
    seed_radius: float = 4e-3
    centroid_radius: float = 6e-3
    show_centroids: bool = True


def _num(value: float) -> str:
    return format(float(value), ".10g")


def _points(vertices) -> str:
    return " ".join(f"{_num(x)},{_num(-y)}" for x, y in vertices)


def area_colours(areas, colormap: str = "viridis") -> list[str]:
    """Hex colours for cell areas, smallest at the low end of the colormap."""
    areas = np.asarray(areas, dtype=float)
    cmap = colormaps[colormap]
    if len(areas) == 0:
        return []
    lo, hi = float(areas.min()), float(areas.max())
    if hi - lo <= 1e-12 * max(abs(hi), 1.0):
        scaled = np.full(len(areas), 0.5)
    else:
        scaled = (areas - lo) / (hi - lo)
    return [to_hex(cmap(s)) for s in scaled]


def render_svg(
    domain: ConvexPolygon,
    diagram: LaguerreDiagram,
    measure: DiscreteMeasure,
    style: Optional[RenderStyle] = None,
) -> str:
    """
    Render cells, seeds (filled dots), cell centroids (open circles) and the
    domain outline as a standalone SVG document.
    """
    style = style or RenderStyle()
    xmin, ymin, xmax, ymax = domain.bounding_box
    width, height = xmax - xmin, ymax - ymin
    pad = MARGIN * max(width, height)
    view = (xmin - pad, -(ymax + pad), width + 2 * pad, height + 2 * pad)
    scale = domain.diameter

    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "viewBox": " ".join(_num(v) for v in view),
            "width": str(style.width_px),
            "height": str(int(round(style.width_px * view[3] / view[2]))),
        },
    )
    stroke_width = _num(style.stroke_width * scale)

    cells = ET.SubElement(root, "g", {"id": "cells"})
    colours = area_colours(diagram.areas, style.colormap)
    for i, cell in enumerate(diagram.cells):
        if cell.is_empty:
            continue
        ET.SubElement(
            cells,
            "polygon",
            {
                "class": "cell",
                "data-index": str(i),
                "points": _points(cell.vertices),
                "fill": colours[i],
                "stroke": style.stroke,
                "stroke-width": stroke_width,
            },
        )

    ET.SubElement(
        root,
        "polygon",
        {
            "class": "domain",
            "points": _points(domain.vertices),
            "fill": "none",
            "stroke": style.stroke,
            "stroke-width": _num(2 * style.stroke_width * scale),
        },
    )

    seeds = ET.SubElement(root, "g", {"id": "seeds"})
    for x, y in measure.seeds:
        ET.SubElement(
            seeds,
            "circle",
            {
                "class": "seed",
                "cx": _num(x),
                "cy": _num(-y),
                "r": _num(style.seed_radius * scale),
                "fill": style.stroke,
            },
        )

    if style.show_centroids:
        centroids = ET.SubElement(root, "g", {"id": "centroids"})
        for x, y in diagram.centroids[~diagram.empty_cells]:
            ET.SubElement(
                centroids,
                "circle",
                {
                    "class": "centroid",
                    "cx": _num(x),
                    "cy": _num(-y),
                    "r": _num(style.centroid_radius * scale),
                    "fill": "none",
                    "stroke": style.stroke,
                    "stroke-width": stroke_width,
                },
            )

    return XML_DECLARATION + ET.tostring(root, encoding="unicode")


def render_seeds_file(seeds_csv, out_svg, domain: Optional[ConvexPolygon] = None) -> Path:
    """Render a stored seeds CSV with its stored weights; the unit square by default."""
    measure, weights = read_seeds_csv(seeds_csv)
    domain = domain or square(0.0, 1.0)
    diagram = build_diagram(domain, measure, weights)
    out_svg = Path(out_svg)
    out_svg.write_text(render_svg(domain, diagram, measure), encoding="utf-8")
    logger.info(f"Rendered {measure.n} cells from {seeds_csv} to {out_svg}")
    return out_svg
