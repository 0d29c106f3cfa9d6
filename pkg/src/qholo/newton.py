"""Newton polygons, Newton polytopes, and dual tropical curves of operators.

An operator's support lives in three dimensions (L-power i, M-power j,
q-power k).  Looking at it from below in different directions produces the
objects of this module:

* the Newton polygon, the lower hull of (i, least M-degree of a_i);
* the 3D Newton polytope of the full support, its 2D projection, and the
  subdivision of that projection induced by using k as a lifting function;
* the tropical curve, the locus where F(x, y) = min over the support of
  (i*x + j*y + k) fails to be differentiable, which is dual to the
  subdivision.

Everything is exact: hulls use integer cross products, tropical vertices are
rational points, and balancing is verified with integer arithmetic before a
curve is returned.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import Iterable, Sequence, Union

from .errors import NotASlope, RangeTooShort
from .lpoly import LPoly
from .operators import PolyOperator
from .series import ZERO, monomial

Triple = tuple[int, int, int]
Point = tuple[Fraction, Fraction]


def _support(source: Union[PolyOperator, Iterable[Triple]]) -> list[Triple]:
    if isinstance(source, PolyOperator):
        pts = list(source.support)
    else:
        pts = [(int(i), int(j), int(k)) for i, j, k in source]
    if not pts:
        raise ValueError("empty support")
    return sorted(set(pts))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(points) -> list:
    """Strict lower convex hull, left to right; collinear points dropped."""
    best: dict = {}
    for x, y in points:
        if x not in best or y < best[x]:
            best[x] = y
    pts = sorted(best.items())
    hull: list = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def convex_hull(points) -> list:
    """Full convex hull in counterclockwise order, strict vertices only."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lo: list = []
    for p in pts:
        while len(lo) >= 2 and _cross(lo[-2], lo[-1], p) <= 0:
            lo.pop()
        lo.append(p)
    hi: list = []
    for p in reversed(pts):
        while len(hi) >= 2 and _cross(hi[-2], hi[-1], p) <= 0:
            hi.pop()
        hi.append(p)
    return lo[:-1] + hi[:-1]


def _primitive(dx, dy) -> tuple[int, int]:
    dx, dy = Fraction(dx), Fraction(dy)
    scale = dx.denominator * dy.denominator // gcd(dx.denominator, dy.denominator)
    nx, ny = int(dx * scale), int(dy * scale)
    g = gcd(abs(nx), abs(ny))
    return (nx // g, ny // g)


# ---------------------------------------------------------------------------
# Newton polygon


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower hull of (i, least M-degree of a_i), with vertical rays implied
    above the first and last vertex."""

    vertices: tuple[tuple[int, int], ...]


def newton_polygon(P: PolyOperator) -> NewtonPolygon:
    if P.is_zero():
        raise ValueError("zero operator has no Newton polygon")
    lows: dict[int, int] = {}
    for i, j, _ in P.support:
        if i not in lows or j < lows[i]:
            lows[i] = j
    return NewtonPolygon(tuple(lower_hull(lows.items())))


def slopes(NP: NewtonPolygon) -> list[tuple[Fraction, int]]:
    """Multiset of (slope, length) pairs, one per hull segment."""
    out = []
    for (i0, d0), (i1, d1) in zip(NP.vertices, NP.vertices[1:]):
        out.append((Fraction(d1 - d0, i1 - i0), i1 - i0))
    return out


def edge_polynomial(P: PolyOperator, s) -> LPoly:
    """Polynomial in L along the slope-s edge of the Newton polygon.

    The coefficient at L^(i - i_min) is the least-q-degree term of the
    coefficient of M^(d_i) in a_i, where d_i is the height of the edge at
    abscissa i; positions where the edge leaves the lattice or where the
    operator has no such monomial contribute zero.
    """
    s = Fraction(s)
    NP = newton_polygon(P)
    for (i0, d0), (i1, d1) in zip(NP.vertices, NP.vertices[1:]):
        if Fraction(d1 - d0, i1 - i0) == s:
            break
    else:
        raise NotASlope(f"{s} is not a slope of the Newton polygon")
    coeffs = []
    for i in range(i0, i1 + 1):
        d = d0 + s * (i - i0)
        lead = None
        if d.denominator == 1:
            ks = [(k, c) for ti, tj, k, c in P.terms() if ti == i and tj == int(d)]
            if ks:
                k, c = min(ks)
                lead = monomial(c, k)
        coeffs.append(lead if lead is not None else ZERO)
    return LPoly(coeffs)


def is_regular_singular(P: PolyOperator) -> bool:
    """True when the Newton polygon is a single horizontal segment (or point)."""
    vs = newton_polygon(P).vertices
    return all(d == vs[0][1] for _, d in vs)


# ---------------------------------------------------------------------------
# 3D Newton polytope and its induced subdivision


@dataclass(frozen=True)
class Cell:
    """One 2-cell of the subdivision: a face of the lower hull, projected."""

    points: tuple[tuple[int, int], ...]
    polygon: tuple[tuple[int, int], ...]
    plane: tuple[Fraction, Fraction, Fraction]  # face lies on k = a*i + b*j + c


@dataclass(frozen=True)
class NewtonPolytope3:
    points: tuple[Triple, ...]
    projection: tuple[tuple[int, int], ...]  # counterclockwise hull of (i, j)
    cells: tuple[Cell, ...]


def _plane_through(p1, k1, p2, k2, p3, k3):
    d = _cross(p1, p2, p3)
    a = Fraction((k2 - k1) * (p3[1] - p1[1]) - (k3 - k1) * (p2[1] - p1[1]), d)
    b = Fraction((p2[0] - p1[0]) * (k3 - k1) - (p3[0] - p1[0]) * (k2 - k1), d)
    c = k1 - a * p1[0] - b * p1[1]
    return a, b, c


def _lower_faces(pts3: list[Triple]) -> dict[tuple, tuple]:
    """Map each lower-hull face to its plane, keyed by projected point set."""
    lift: dict[tuple[int, int], int] = {}
    for i, j, k in pts3:
        if (i, j) not in lift or k < lift[(i, j)]:
            lift[(i, j)] = k
    base = sorted(lift)
    faces: dict[tuple, tuple] = {}
    for p1, p2, p3 in combinations(base, 3):
        if _cross(p1, p2, p3) == 0:
            continue
        a, b, c = _plane_through(p1, lift[p1], p2, lift[p2], p3, lift[p3])
        members = []
        for p in base:
            diff = lift[p] - (a * p[0] + b * p[1] + c)
            if diff < 0:
                break
            if diff == 0:
                members.append(p)
        else:
            faces[tuple(members)] = (a, b, c)
    return faces


def newton_polytope3(P: Union[PolyOperator, Iterable[Triple]]) -> NewtonPolytope3:
    pts3 = _support(P)
    proj = sorted({(i, j) for i, j, _ in pts3})
    hull2 = tuple(convex_hull(proj))
    cells = tuple(
        Cell(members, tuple(convex_hull(members)), plane)
        for members, plane in sorted(_lower_faces(pts3).items())
    )
    return NewtonPolytope3(tuple(pts3), hull2, cells)


def lemma_N2N1_check(P: PolyOperator) -> bool:
    """Lower hull of the 2D projection agrees with the Newton polygon."""
    proj = {(i, j) for i, j, _ in P.support}
    return tuple(lower_hull(proj)) == newton_polygon(P).vertices


# ---------------------------------------------------------------------------
# tropical curves


@dataclass(frozen=True)
class TropicalCurve:
    """Non-differentiability locus of F(x, y) = min over support of ix+jy+k.

    ``edges`` are (vertex index, vertex index, multiplicity) with the first
    index smaller; ``rays`` are (base vertex index, primitive integer
    direction, multiplicity).  An unbounded line component (which occurs when
    the support projects onto a line) is represented as a base vertex with a
    pair of opposite rays.
    """

    vertices: tuple[Point, ...]
    edges: tuple[tuple[int, int, int], ...]
    rays: tuple[tuple[int, tuple[int, int], int], ...]
    support: tuple[Triple, ...]

    def F(self, x, y) -> Fraction:
        x, y = Fraction(x), Fraction(y)
        return min(i * x + j * y + k for i, j, k in self.support)

    def is_balanced(self) -> bool:
        sums = [[Fraction(0), Fraction(0)] for _ in self.vertices]

        def push(v, direction, mult):
            dx, dy = _primitive(*direction)
            sums[v][0] += mult * dx
            sums[v][1] += mult * dy

        for a, b, mult in self.edges:
            va, vb = self.vertices[a], self.vertices[b]
            push(a, (vb[0] - va[0], vb[1] - va[1]), mult)
            push(b, (va[0] - vb[0], va[1] - vb[1]), mult)
        for v, direction, mult in self.rays:
            push(v, direction, mult)
        return all(sx == 0 and sy == 0 for sx, sy in sums)


def _collinear_curve(pts3: list[Triple]) -> TropicalCurve:
    # support projects onto a line: every dual cell is a full line in the
    # plane, encoded as a vertex with two opposite rays
    lift: dict[tuple[int, int], int] = {}
    for i, j, k in pts3:
        if (i, j) not in lift or k < lift[(i, j)]:
            lift[(i, j)] = k
    base = sorted(lift)
    p0 = base[0]
    u = _primitive(base[-1][0] - p0[0], base[-1][1] - p0[1])
    lifted = []
    for p in base:
        t = (p[0] - p0[0]) // u[0] if u[0] else (p[1] - p0[1]) // u[1]
        lifted.append((t, lift[p]))
    hull = lower_hull(lifted)
    vertices: list[Point] = []
    rays: list[tuple[int, tuple[int, int], int]] = []
    side = (-u[1], u[0])
    for (t1, k1), (t2, k2) in zip(hull, hull[1:]):
        # tie line of the two lifted endpoints: di*x + dj*y + dk = 0
        di, dj = (t2 - t1) * u[0], (t2 - t1) * u[1]
        dk = k2 - k1
        if di:
            point = (Fraction(-dk, di), Fraction(0))
        else:
            point = (Fraction(0), Fraction(-dk, dj))
        idx = len(vertices)
        vertices.append(point)
        rays.append((idx, side, t2 - t1))
        rays.append((idx, (-side[0], -side[1]), t2 - t1))
    order = sorted(range(len(vertices)), key=vertices.__getitem__)
    rank = {old: new for new, old in enumerate(order)}
    return TropicalCurve(
        tuple(vertices[i] for i in order),
        (),
        tuple(sorted((rank[v], d, m) for v, d, m in rays)),
        tuple(pts3),
    )


def tropical_curve(P: Union[PolyOperator, Iterable[Triple]]) -> TropicalCurve:
    pts3 = _support(P)
    proj = sorted({(i, j) for i, j, _ in pts3})
    if len(proj) == 1:
        curve = TropicalCurve((), (), (), tuple(pts3))
    elif all(_cross(proj[0], proj[1], p) == 0 for p in proj[2:]):
        curve = _collinear_curve(pts3)
    else:
        curve = _full_dimensional_curve(pts3, proj)
    if not curve.is_balanced():
        raise RuntimeError("tropical curve failed the balancing check")
    return curve


def _full_dimensional_curve(pts3: list[Triple], proj) -> TropicalCurve:
    faces = _lower_faces(pts3)
    cells = sorted(faces.items())
    vertices = [(-a, -b) for _, (a, b, _) in cells]
    polygon_edges: dict[tuple, list[int]] = {}
    for idx, (members, _) in enumerate(cells):
        poly = convex_hull(list(members))
        for p, r in zip(poly, poly[1:] + poly[:1]):
            key = (p, r) if p < r else (r, p)
            polygon_edges.setdefault(key, []).append(idx)
    edges = []
    rays = []
    for (p, r), owners in sorted(polygon_edges.items()):
        mult = gcd(abs(r[0] - p[0]), abs(r[1] - p[1]))
        if len(owners) == 2:
            a, b = sorted(owners)
            edges.append((a, b, mult))
        else:
            (idx,) = owners
            members = cells[idx][0]
            inner = next(w for w in members if _cross(p, r, w) != 0)
            v = _primitive(r[1] - p[1], p[0] - r[0])
            if v[0] * (inner[0] - p[0]) + v[1] * (inner[1] - p[1]) < 0:
                v = (-v[0], -v[1])
            rays.append((idx, v, mult))
    order = sorted(range(len(vertices)), key=vertices.__getitem__)
    rank = {old: new for new, old in enumerate(order)}
    return TropicalCurve(
        tuple(vertices[i] for i in order),
        tuple(sorted(tuple(sorted((rank[a], rank[b]))) + (m,) for a, b, m in edges)),
        tuple(sorted((rank[v], d, m) for v, d, m in rays)),
        tuple(pts3),
    )


# ---------------------------------------------------------------------------
# the tropical equation for degree sequences


def tropical_degree_check(
    delta: Sequence,
    A: Union[PolyOperator, Iterable[Triple]],
    start: int = 0,
) -> bool:
    """Check that min over the support of delta(n+i) - delta(n) + j*n + k is
    achieved at least twice, for every n from ``start`` for which the window
    delta(n)..delta(n + max i) is available."""
    pts3 = _support(A)
    max_i = max(i for i, _, _ in pts3)
    last = len(delta) - 1 - max_i
    if last < start:
        raise RangeTooShort(
            f"need delta up to n={start + max_i}, have {len(delta) - 1}"
        )
    for n in range(start, last + 1):
        vals = [
            Fraction(delta[n + i]) - Fraction(delta[n]) + j * n + k
            for i, j, k in pts3
        ]
        low = min(vals)
        if sum(1 for v in vals if v == low) < 2:
            return False
    return True


def candidate_c1c2(
    A: Union[PolyOperator, Iterable[Triple]],
) -> set[tuple[Fraction, Fraction]]:
    """All (c1, c2) with c2*i + j and c2/2*i^2 + c1*i + k each agreeing on a
    pair of distinct support points; candidate coefficients for a quadratic
    quasi-polynomial degree c2/2*n^2 + c1*n + c0."""
    pts3 = _support(A)
    out: set[tuple[Fraction, Fraction]] = set()
    for (i1, j1, k1), (i2, j2, k2) in combinations(pts3, 2):
        if i1 == i2:
            continue
        c2 = Fraction(j2 - j1, i1 - i2)
        c1 = (Fraction(c2 * (i2 * i2 - i1 * i1), 2) + k2 - k1) / (i1 - i2)
        out.add((c1, c2))
    return out
