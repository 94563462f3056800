"""Pictures of a finished run: the successor square tiled by prisms.

Prisms shown to contain no minimizing orbits are dark; prisms skipped
as mirror images are light.  The same picture is written as SVG and as
PostScript.
"""
from __future__ import annotations

import os

from .prism import Status

SIZE = 512
MARGIN = 16
FILLS = {Status.NO_TORI: (0.25, "#404040"), Status.SYMMTRC: (0.8, "#cccccc")}


def _rects(prisms, region):
    """(status, x0, y0, x1, y1) in [0, 1]^2 coordinates of the region."""
    (c0, h0), (c1, h1) = ((float(c), float(h)) for c, h in region)
    out = []
    for s in prisms:
        if s.status not in FILLS:
            continue
        r0 = sum(abs(float(x)) for x in s.matrix[5])
        r1 = sum(abs(float(x)) for x in s.matrix[6])
        v0, v1 = float(s.center[5]), float(s.center[6])
        out.append((s.status,
                    (v0 - r0 - (c0 - h0)) / (2 * h0), (v1 - r1 - (c1 - h1)) / (2 * h1),
                    (v0 + r0 - (c0 - h0)) / (2 * h0), (v1 + r1 - (c1 - h1)) / (2 * h1)))
    return out


def to_svg(prisms, region) -> str:
    side = SIZE + 2 * MARGIN
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" '
             f'viewBox="0 0 {side} {side}">',
             f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="white" stroke="black"/>']
    for status, x0, y0, x1, y1 in _rects(prisms, region):
        # SVG's y axis points down
        px, py = MARGIN + x0 * SIZE, MARGIN + (1 - y1) * SIZE
        parts.append(f'<rect x="{px:.3f}" y="{py:.3f}" width="{(x1 - x0) * SIZE:.3f}" '
                     f'height="{(y1 - y0) * SIZE:.3f}" fill="{FILLS[status][1]}" '
                     f'stroke="black" stroke-width="0.3"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def to_postscript(prisms, region) -> str:
    side = SIZE + 2 * MARGIN
    lines = ["%!PS-Adobe-3.0 EPSF-3.0", f"%%BoundingBox: 0 0 {side} {side}",
             "/box { 4 dict begin /y1 exch def /x1 exch def /y0 exch def /x0 exch def",
             "  newpath x0 y0 moveto x1 y0 lineto x1 y1 lineto x0 y1 lineto closepath end } def",
             "0.3 setlinewidth",
             f"{MARGIN} {MARGIN} {MARGIN + SIZE} {MARGIN + SIZE} box stroke"]
    for status, x0, y0, x1, y1 in _rects(prisms, region):
        coords = " ".join(f"{MARGIN + t * SIZE:.3f}" for t in (x0, y0, x1, y1))
        lines.append(f"{coords} box gsave {FILLS[status][0]} setgray fill grestore 0 setgray stroke")
    lines += ["showpage", "%%EOF"]
    return "\n".join(lines) + "\n"


def emit_graphics(prisms, region, path: str) -> tuple[str, str]:
    """Write ``<base>.svg`` and ``<base>.ps``; returns both paths."""
    base, ext = os.path.splitext(path)
    if ext.lower() not in (".svg", ".ps", ".eps"):
        base = path
    svg, ps = base + ".svg", base + ".ps"
    with open(svg, "w") as fh:
        fh.write(to_svg(prisms, region))
    with open(ps, "w") as fh:
        fh.write(to_postscript(prisms, region))
    return svg, ps


__all__ = ["emit_graphics", "to_svg", "to_postscript"]
