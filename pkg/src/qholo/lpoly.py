"""Commutative polynomials in the shift symbol over truncated q-series.

At the M-constant level the shift symbol commutes with everything, so
slim parts, eigenvalue equations and the per-level lifting systems all
live in an ordinary polynomial ring over QSeries.  This module supplies
that ring plus the two nontrivial algorithms on it: the Sylvester-style
Bezout solver used by coprime-factor lifting, and a rational Puiseux
root finder used to extract eigenvalues.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Optional, Sequence

from .errors import (
    FactorsNotCoprime,
    NonRationalEigenvalue,
    PrecisionRequired,
    SingularSystem,
)
from .linalg import solve_series_system
from .series import (
    Number,
    ONE,
    QSeries,
    ZERO,
    divide,
    monomial,
    q_power,
    qdegree,
    qs,
)


def _as_qseries(x) -> QSeries:
    if isinstance(x, QSeries):
        return x
    return qs(x)


class LPoly:
    """Polynomial sum(c_i * L**i) with QSeries coefficients, L central."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable) -> None:
        cs = [_as_qseries(c) for c in coeffs]
        while cs and cs[-1].is_exact_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("LPoly is immutable")

    # -- structure ---------------------------------------------------------

    @property
    def degree(self) -> Optional[int]:
        """Index of the last coefficient that is not exactly zero."""
        return len(self.coeffs) - 1 if self.coeffs else None

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, i: int) -> QSeries:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return ZERO

    def leading(self) -> QSeries:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == ONE

    def __eq__(self, other) -> bool:
        if not isinstance(other, LPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(("LPoly", self.coeffs))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "LPoly(0)"
        parts = [f"({c.to_text()})*L^{i}" for i, c in enumerate(self.coeffs)]
        return "LPoly(" + " + ".join(parts) + ")"

    # -- ring operations ---------------------------------------------------

    def __add__(self, other: "LPoly") -> "LPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return LPoly(self.coefficient(i) + other.coefficient(i) for i in range(n))

    def __neg__(self) -> "LPoly":
        return LPoly(-c for c in self.coeffs)

    def __sub__(self, other: "LPoly") -> "LPoly":
        return self + (-other)

    def __mul__(self, other: "LPoly") -> "LPoly":
        if self.is_zero() or other.is_zero():
            return LPoly(())
        out: list[QSeries] = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_exact_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_exact_zero():
                    continue
                out[i + j] = out[i + j] + a * b
        return LPoly(out)

    def scale(self, c) -> "LPoly":
        c = _as_qseries(c)
        return LPoly(a * c for a in self.coeffs)

    def twist(self, m: Number) -> "LPoly":
        """Substitute L -> q**m * L."""
        m = Fraction(m)
        return LPoly(c * q_power(m * i) for i, c in enumerate(self.coeffs))

    def derivative(self) -> "LPoly":
        return LPoly(self.coeffs[i].scaled(i) for i in range(1, len(self.coeffs)))

    def taylor_shift(self, x0: Fraction) -> "LPoly":
        """Substitute L -> x0 + L for a rational shift x0."""
        n = len(self.coeffs)
        pows = [Fraction(1)]
        for _ in range(n):
            pows.append(pows[-1] * x0)
        out = []
        for j in range(n):
            acc = ZERO
            for i in range(j, n):
                c = self.coeffs[i]
                if not c.is_exact_zero():
                    acc = acc + c.scaled(comb(i, j) * pows[i - j])
            out.append(acc)
        return LPoly(out)

    def evaluate(self, z: QSeries) -> QSeries:
        """Horner evaluation at a series point."""
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def truncated(self, theta: Number) -> "LPoly":
        return LPoly(c.truncated(theta) for c in self.coeffs)

    def make_monic(self, prec: Optional[Number] = None) -> "LPoly":
        lead = self.leading()
        return LPoly(divide(c, lead, prec) for c in self.coeffs)


def lp(*coeffs) -> LPoly:
    """Shorthand constructor from scalar or QSeries coefficients."""
    return LPoly(coeffs)


L_UNIT = LPoly((ONE,))


def solve_bezout(
    a: LPoly,
    b: LPoly,
    d: LPoly,
    prec: Optional[Number] = None,
) -> tuple[LPoly, LPoly]:
    """Solve u*a + v*b = d with deg u < deg b and deg v < deg a.

    The linear system in the unknown coefficients is the Sylvester matrix
    of (a, b); it is invertible exactly when the factors are coprime, so a
    singular elimination is reported as FactorsNotCoprime.
    """
    da, db = a.degree, b.degree
    if da is None or db is None:
        raise ValueError("Bezout factors must be nonzero")
    size = da + db
    if not d.is_zero() and d.degree >= size > 0:
        raise ValueError("right-hand side degree too large for a Bezout solve")
    if size == 0:
        if d.is_zero():
            return LPoly(()), LPoly(())
        raise FactorsNotCoprime("two constants admit no degree-bounded solution")
    rows: list[list[QSeries]] = []
    rhs: list[QSeries] = []
    # unknowns: u_0..u_{db-1}, v_0..v_{da-1}; row t is the L^t coefficient
    for row in range(size):
        entries = []
        for s in range(db):
            entries.append(a.coefficient(row - s))
        for s in range(da):
            entries.append(b.coefficient(row - s))
        rows.append(entries)
        rhs.append(d.coefficient(row))
    try:
        sol = solve_series_system(rows, rhs, prec)
    except SingularSystem as exc:
        raise FactorsNotCoprime(str(exc)) from exc
    return LPoly(sol[:db]), LPoly(sol[db:])


# ---------------------------------------------------------------------------
# rational Puiseux roots


def _hull_points(p: LPoly) -> list[tuple[int, Fraction]]:
    """Certified (i, q-valuation) points, or PrecisionRequired if a
    truncated-to-zero coefficient could sit on or under the hull."""
    certain: list[tuple[int, Fraction]] = []
    unknown: list[tuple[int, Fraction]] = []  # (i, threshold)
    for i, c in enumerate(p.coeffs):
        if c.is_exact_zero():
            continue
        if c.has_leading_term():
            certain.append((i, qdegree(c)))
        else:
            theta = c.threshold
            unknown.append((i, theta if theta is not None else Fraction(0)))
    if len(certain) >= 2:
        hull = _lower_hull(certain)
        for i, theta in unknown:
            if theta <= _hull_height(hull, i):
                raise PrecisionRequired(
                    f"coefficient of L^{i} is zero only up to q^{theta}; "
                    "it may touch the Newton polygon"
                )
    elif unknown:
        raise PrecisionRequired("not enough certified coefficients for a Newton polygon")
    return certain


def _lower_hull(points: Sequence[tuple[int, Fraction]]) -> list[tuple[int, Fraction]]:
    pts = sorted(points)
    best: dict[int, Fraction] = {}
    for x, y in pts:
        if x not in best or y < best[x]:
            best[x] = y
    pts = sorted(best.items())
    hull: list[tuple[int, Fraction]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it bends the chain strictly upward
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def _hull_height(hull: Sequence[tuple[int, Fraction]], x: int) -> Fraction:
    if x <= hull[0][0]:
        return hull[0][1]
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= x <= x2:
            return y1 + Fraction(y2 - y1, x2 - x1) * (x - x1)
    return hull[-1][1]


def _rational_roots(poly: Sequence[Fraction]) -> tuple[list[tuple[Fraction, int]], int]:
    """All rational roots with multiplicity, plus the leftover degree."""
    coeffs = list(poly)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return [], 0
    den = 1
    for c in coeffs:
        den = den * c.denominator // _gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for x in ints:
        g = _gcd(g, abs(x))
    if g > 1:
        ints = [x // g for x in ints]
    work = [Fraction(x) for x in ints]

    roots: list[tuple[Fraction, int]] = []
    nzero = 0
    while len(work) > 1 and work[0] == 0:
        work = work[1:]
        nzero += 1
    if nzero:
        roots.append((Fraction(0), nzero))
    if len(work) <= 1:
        return roots, 0

    def divide_out(cands: Sequence[Fraction], root: Fraction) -> Optional[list[Fraction]]:
        acc = Fraction(0)
        out = []
        for c in reversed(cands):
            acc = acc * root + c
            out.append(acc)
        if acc != 0:
            return None
        rest = out[:-1]
        rest.reverse()
        return rest

    lead = abs(int(work[-1]))
    const = abs(int(work[0]))
    seen: set[Fraction] = set()
    for pnum in _divisors(const):
        for sden in _divisors(lead):
            for sign in (1, -1):
                cand = Fraction(sign * pnum, sden)
                if cand in seen:
                    continue
                seen.add(cand)
                mult = 0
                while len(work) > 1:
                    quo = divide_out(work, cand)
                    if quo is None:
                        break
                    work = quo
                    mult += 1
                if mult:
                    roots.append((cand, mult))
    return roots, len(work) - 1


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _divisors(n: int) -> list[int]:
    if n == 0:
        return [1]
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)


def _edge_polynomial(
    p: LPoly, x1: int, y1: Fraction, x2: int, slope: Fraction
) -> list[Fraction]:
    out = []
    for i in range(x1, x2 + 1):
        c = p.coefficient(i)
        e = y1 + slope * (i - x1)
        if (not c.is_exact_zero()) and c.has_leading_term() and qdegree(c) == e:
            out.append(c.coefficient(e))
        else:
            out.append(Fraction(0))
    return out


def _newton_lift(p: LPoly, z0: QSeries, target: Fraction) -> QSeries:
    """Quadratic lifting of a simple root from a separating initial segment."""
    dp = p.derivative()
    z = z0
    for _ in range(64):
        pv = p.evaluate(z)
        if pv.is_exact_zero():
            if z.exact:
                return z
            break
        vb = pv.valuation_bound()
        if vb is not None and vb >= target:
            break
        dv = dp.evaluate(z)
        if not dv.has_leading_term():
            raise PrecisionRequired("derivative vanishes up to truncation during lifting")
        z = (z - divide(pv, dv, target)).capped(target)
    else:
        raise PrecisionRequired("root lifting did not reach the requested window")
    return z.truncated(target)


def puiseux_roots(p: LPoly, prec: Number) -> list[tuple[QSeries, int]]:
    """Roots of p in the rational Puiseux field, expanded below ``prec``.

    Simple branches are lifted quadratically against p itself.  Branches
    whose edge root repeats are expanded term by term; a cluster that has
    not separated below the cutoff is reported as one root carrying the
    cluster multiplicity.  An edge polynomial with a rational-root deficit
    raises NonRationalEigenvalue.
    """
    prec = Fraction(prec)
    if p.is_zero():
        raise ValueError("zero polynomial")
    out: list[tuple[QSeries, int]] = []

    def rec(cur: LPoly, prefix: QSeries, shift: Fraction, inner: bool) -> None:
        low = 0
        while low < len(cur.coeffs) and cur.coeffs[low].is_exact_zero():
            low += 1
        if low > 0:
            # the substituted variable divides exactly: the expansion ends here
            out.append((prefix, low) if inner else (ZERO, low))
        if not cur.coeffs or low >= len(cur.coeffs) - 1:
            return
        points = _hull_points(LPoly(cur.coeffs[low:]))
        points = [(i + low, v) for i, v in points]
        if len(points) < 2:
            return
        hull = _lower_hull(points)
        for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
            slope = Fraction(y2 - y1, x2 - x1)
            mu = -slope
            if inner and mu <= 0:
                continue
            epoly = _edge_polynomial(cur, x1, y1, x2, slope)
            roots, leftover = _rational_roots(epoly)
            if leftover > 0:
                raise NonRationalEigenvalue(
                    "edge polynomial has a factor without rational roots"
                )
            for x0, m0 in roots:
                if x0 == 0:
                    continue
                head = prefix + monomial(x0, shift + mu)
                if shift + mu >= prec:
                    out.append((head.truncated(prec), m0))
                    continue
                if m0 == 1:
                    out.append((_newton_lift(p, head, prec), 1))
                    continue
                scaled = LPoly(c * q_power(mu * i) for i, c in enumerate(cur.coeffs))
                rec(scaled.taylor_shift(x0), head, shift + mu, True)

    rec(p, ZERO, Fraction(0), False)
    return out
