"""Deterministic SVG drawings of Newton polygons, subdivisions, and tropical
curves.

Output depends only on the input object: fixed scale, fixed palette, sorted
iteration, no timestamps.  Coordinates are formatted with two decimals, which
is plenty at 40 pixels per lattice unit.
"""

from fractions import Fraction
from math import gcd

from .newton import NewtonPolygon, NewtonPolytope3, TropicalCurve

SCALE = 40
PAD = 30
RAY_UNITS = 2  # rays are drawn this many primitive steps long


class _Canvas:
    """Maps math coordinates to SVG pixels (y axis flipped)."""

    def __init__(self, xs, ys):
        self.xmin, self.xmax = min(xs), max(xs)
        self.ymin, self.ymax = min(ys), max(ys)
        self.width = float((self.xmax - self.xmin) * SCALE + 2 * PAD)
        self.height = float((self.ymax - self.ymin) * SCALE + 2 * PAD)
        self.parts = [
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{self.width:.0f}" height="{self.height:.0f}" '
            f'viewBox="0 0 {self.width:.0f} {self.height:.0f}">',
            f'<rect width="{self.width:.0f}" height="{self.height:.0f}" '
            'fill="white"/>',
        ]

    def pt(self, x, y):
        sx = float((Fraction(x) - self.xmin) * SCALE) + PAD
        sy = float((self.ymax - Fraction(y)) * SCALE) + PAD
        return sx, sy

    def line(self, p, q, color="black", width=2, dash=None):
        (x1, y1), (x2, y2) = self.pt(*p), self.pt(*q)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def dot(self, p, r=4, color="black"):
        x, y = self.pt(*p)
        self.parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')

    def text(self, p, s, dx=6, dy=-6, size=12, color="black"):
        x, y = self.pt(*p)
        self.parts.append(
            f'<text x="{x + dx:.2f}" y="{y + dy:.2f}" font-size="{size}" '
            f'font-family="monospace" fill="{color}">{s}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _label(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _lattice(canvas: _Canvas):
    x = canvas.xmin
    while x <= canvas.xmax:
        y = canvas.ymin
        while y <= canvas.ymax:
            canvas.dot((x, y), r=1.5, color="#bbbbbb")
            y += 1
        x += 1


def newton_polygon_svg(NP: NewtonPolygon) -> str:
    vs = NP.vertices
    xs = [i for i, _ in vs]
    ys = [d for _, d in vs]
    canvas = _Canvas(xs, [min(ys), max(ys) + 1])
    _lattice(canvas)
    for p, q in zip(vs, vs[1:]):
        canvas.line(p, q)
    for i, d in (vs[0], vs[-1]) if len(vs) > 1 else (vs[0],):
        canvas.line((i, d), (i, canvas.ymax), dash="6,4")
    for i, d in vs:
        canvas.dot((i, d))
        canvas.text((i, d), f"({_label(i)}, {_label(d)})")
    return canvas.render()


def subdivision_svg(NT: NewtonPolytope3) -> str:
    proj = {(i, j) for i, j, _ in NT.points}
    xs = [i for i, _ in proj]
    ys = [j for _, j in proj]
    canvas = _Canvas(xs, ys)
    _lattice(canvas)
    for cell in NT.cells:
        poly = cell.polygon
        for p, q in zip(poly, poly[1:] + poly[:1]):
            canvas.line(p, q, color="#3366cc", width=1.5)
    hull = NT.projection
    for p, q in zip(hull, hull[1:] + hull[:1]):
        if len(hull) > 1:
            canvas.line(p, q, width=2.5)
    for p in sorted(proj):
        canvas.dot(p, r=3)
    return canvas.render()


def tropical_svg(TC: TropicalCurve) -> str:
    xs = [x for x, _ in TC.vertices] or [Fraction(0)]
    ys = [y for _, y in TC.vertices] or [Fraction(0)]
    for v, (dx, dy), _ in TC.rays:
        g = gcd(abs(dx), abs(dy))
        xs.append(TC.vertices[v][0] + Fraction(RAY_UNITS * dx, g))
        ys.append(TC.vertices[v][1] + Fraction(RAY_UNITS * dy, g))
    canvas = _Canvas(xs, ys)
    _lattice(canvas)
    for a, b, mult in TC.edges:
        va, vb = TC.vertices[a], TC.vertices[b]
        canvas.line(va, vb, width=2 if mult == 1 else 3)
        if mult > 1:
            mid = ((va[0] + vb[0]) / 2, (va[1] + vb[1]) / 2)
            canvas.text(mid, str(mult), color="#cc3333")
    for v, (dx, dy), mult in TC.rays:
        base = TC.vertices[v]
        g = gcd(abs(dx), abs(dy))
        tip = (
            base[0] + Fraction(RAY_UNITS * dx, g),
            base[1] + Fraction(RAY_UNITS * dy, g),
        )
        canvas.line(base, tip, width=2 if mult == 1 else 3)
        if mult > 1:
            mid = ((base[0] + tip[0]) / 2, (base[1] + tip[1]) / 2)
            canvas.text(mid, str(mult), color="#cc3333")
    for x, y in TC.vertices:
        canvas.dot((x, y), r=4)
        canvas.text((x, y), f"({_label(x)}, {_label(y)})")
    return canvas.render()
