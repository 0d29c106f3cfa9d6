"""q-Hensel lifting for local operators.

Splits a monic operator along a partition of its Newton-polygon slopes,
splits a regular-singular operator along a coprime factorization of its
slim part, and chains the two (through gauge transforms) into an ordered
product of monic first-order factors, each certified to a requested
M-adic truncation.

Conventions.  Monic means the leading coefficient is the constant 1, so
every Newton polygon here is anchored with its right endpoint at height
zero and positive slopes force Laurent coefficients.  A truncation order
t_m counts steps on the operator's own M^(1/r) lattice; the certified
exponent window is t_m / r.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Iterable, Optional, Union

from .errors import (
    NotMonic,
    ResonantEigenvalues,
    SingularSystem,
    SlimPartMismatch,
    SlopesNotPartition,
    TruncationUnderflow,
)
from .linalg import solve_series_system
from .lpoly import LPoly, L_UNIT, puiseux_roots, solve_bezout
from .newton import lower_hull
from .operators import (
    LocalOperator,
    MSeries,
    M_ONE,
    gauge_transform,
    slim_part,
)
from .series import ONE, QSeries, ZERO, divide, q_power, qdegree

Number = Union[int, Fraction]

# fallback q-expansion depth for lifting steps whose divisions have no
# exact result; exact divisions are never truncated by it
_Q_DEPTH = Fraction(20)

__all__ = [
    "FactorizationResult",
    "factor_first_order",
    "hensel_split_eigen",
    "hensel_split_slopes",
]


# -- Newton polygon bookkeeping -------------------------------------------------


def _check_monic(P: LocalOperator) -> None:
    if P.is_zero() or P.order < 1:
        raise NotMonic("splitting needs a monic operator of positive order")
    if P.coeffs[-1] != M_ONE:
        raise NotMonic(
            "leading coefficient must be the constant 1; divide it out first"
        )


def _heights(P: LocalOperator) -> dict[int, Fraction]:
    """Lower Newton-polygon height l(i) for every i in 0..order."""
    pts = []
    for i, a in enumerate(P.coeffs):
        if not a.is_exact_zero():
            pts.append((i, a.m_valuation()))
    if pts[0][0] != 0:
        raise ValueError(
            "constant coefficient is zero; divide by a power of L first"
        )
    hull = lower_hull(pts)
    ell: dict[int, Fraction] = {}
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        s = Fraction(y1 - y0, x1 - x0)
        for i in range(x0, x1 + 1):
            ell[i] = y0 + s * (i - x0)
    if len(hull) == 1:
        ell[hull[0][0]] = Fraction(hull[0][1])
    return ell


def _edges(ell: dict[int, Fraction]) -> list[tuple[Fraction, int, int]]:
    """Hull edges as (slope, left index, right index), slopes ascending."""
    idx = sorted(ell)
    out: list[tuple[Fraction, int, int]] = []
    for i0, i1 in zip(idx, idx[1:]):
        s = ell[i1] - ell[i0]
        if out and out[-1][0] == s:
            out[-1] = (s, out[-1][1], i1)
        else:
            out.append((s, i0, i1))
    return out


def _slice(P: LocalOperator, i: int, e: Fraction) -> QSeries:
    return P.coefficient(i).m_coefficient(e)


def _weight_window(
    P: LocalOperator, ell: dict[int, Fraction], target: Fraction
) -> None:
    """Certify that every coefficient reaches ``target`` above the hull."""
    for i, a in enumerate(P.coeffs):
        theta = a.threshold
        if theta is None:
            continue
        have = theta - ell.get(i, theta)
        if have < target:
            raise TruncationUnderflow(
                f"coefficient of L^{i} is certified to weight {have} above "
                f"the Newton polygon; the split needs weight {target}"
            )


# -- shared lifting core --------------------------------------------------------


def _lift_pair(
    P: LocalOperator,
    ell: dict[int, Fraction],
    ell1: dict[int, Fraction],
    ell2: dict[int, Fraction],
    x0: dict[int, QSeries],
    y0: dict[int, QSeries],
    window: Fraction,
    prec: Optional[Number],
) -> tuple[LocalOperator, LocalOperator]:
    """Lift seed hull data to monic factors P1, P2 with P = P1 P2 + higher.

    Unknown corrections live at positive weights above the factor hulls;
    each weight step solves one exact linear system.  The leading
    coefficients stay pinned to 1, which is the normalization that makes
    the factor pair unique.
    """
    d = P.order
    d1, d2 = max(ell1), max(ell2)

    def gap(i1: int, i2: int) -> Fraction:
        return ell1[i1] + ell2[i2] - ell[i1 + i2]

    r_w = 1
    for v in list(ell.values()) + list(ell1.values()) + list(ell2.values()):
        r_w = lcm(r_w, v.denominator)
    for a in P.coeffs:
        r_w = lcm(r_w, a.r)
    r_w = lcm(r_w, window.denominator)

    slices1: dict[tuple[int, Fraction], QSeries] = {
        (i, Fraction(0)): c for i, c in x0.items()
    }
    slices2: dict[tuple[int, Fraction], QSeries] = {
        (i, Fraction(0)): c for i, c in y0.items()
    }

    cols = [("x", i1) for i1 in range(d1)] + [("y", i2) for i2 in range(d2)]
    t = 0
    while True:
        t += 1
        w = Fraction(t, r_w)
        if w >= window:
            break
        cross: dict[int, QSeries] = {}
        for (i1, w1), xv in slices1.items():
            for (i2, w2), yv in slices2.items():
                if w1 + w2 + gap(i1, i2) == w:
                    i = i1 + i2
                    term = xv * yv * q_power(i1 * (ell2[i2] + w2))
                    cross[i] = cross.get(i, ZERO) + term
        matrix: list[list[QSeries]] = []
        rhs: list[QSeries] = []
        for i in range(d + 1):
            row = []
            for side, j in cols:
                if side == "x":
                    k = i - j
                    if 0 <= k <= d2 and gap(j, k) == 0:
                        row.append(y0.get(k, ZERO) * q_power(j * ell2[k]))
                    else:
                        row.append(ZERO)
                else:
                    k = i - j
                    if 0 <= k <= d1 and gap(k, j) == 0:
                        row.append(x0.get(k, ZERO) * q_power(k * (ell2[j] + w)))
                    else:
                        row.append(ZERO)
            target = _slice(P, i, ell[i] + w) - cross.get(i, ZERO)
            if all(c.is_exact_zero() for c in row):
                if not target.is_tracked_zero():
                    raise SingularSystem(
                        f"weight-{w} level has no unknowns but a nonzero target"
                    )
                continue
            matrix.append(row)
            rhs.append(target)
        if len(matrix) < len(cols):
            raise SingularSystem(f"weight-{w} level is underdetermined")
        sol = solve_series_system(matrix, rhs, prec)
        for (side, j), v in zip(cols, sol):
            if v.is_exact_zero():
                continue
            if side == "x":
                slices1[(j, w)] = v
            else:
                slices2[(j, w)] = v

    def assemble(
        slices: dict[tuple[int, Fraction], QSeries],
        heights: dict[int, Fraction],
        top: int,
    ) -> LocalOperator:
        out = []
        for i in range(top):
            entries = [
                (heights[i] + w, v) for (j, w), v in slices.items() if j == i
            ]
            entries.sort(key=lambda e: e[0])
            out.append(
                MSeries.from_entries(entries, truncation=heights[i] + window)
            )
        out.append(M_ONE)
        return LocalOperator(out)

    return assemble(slices1, ell1, d1), assemble(slices2, ell2, d2)


# -- slope split ----------------------------------------------------------------


def _seed_slopes(
    P: LocalOperator,
    ell: dict[int, Fraction],
    s1: frozenset,
    prec: Optional[Number],
) -> tuple[dict, dict, dict, dict]:
    """Peel the hull-level coefficients into the two factor seeds.

    Walks the polygon edges right to left; along an edge owned by one
    factor the other factor's index is parked at a polygon vertex, whose
    seed value is a unit, so each step is a single exact division.
    """
    edges = _edges(ell)
    d1 = sum(i1 - i0 for s, i0, i1 in edges if s in s1)
    d2 = max(ell) - d1
    i1, i2 = d1, d2
    ell1 = {d1: Fraction(0)}
    ell2 = {d2: Fraction(0)}
    x0: dict[int, QSeries] = {d1: ONE}
    y0: dict[int, QSeries] = {d2: ONE}
    for s, lo, hi in reversed(edges):
        mine = s in s1
        for i in range(hi - 1, lo - 1, -1):
            p = _slice(P, i, ell[i])
            if mine:
                i1 -= 1
                ell1[i1] = ell1[i1 + 1] - s
                v = p * q_power(-i1 * ell2[i2])
                if not v.is_exact_zero():
                    v = divide(v, y0[i2], prec)
                x0[i1] = v
            else:
                i2 -= 1
                ell2[i2] = ell2[i2 + 1] - s
                v = p * q_power(-i1 * ell2[i2])
                if not v.is_exact_zero():
                    v = divide(v, x0[i1], prec)
                y0[i2] = v
    for seeds in (x0, y0):
        for i in [i for i, v in seeds.items() if v.is_exact_zero()]:
            del seeds[i]
    return ell1, ell2, x0, y0


def hensel_split_slopes(
    P: LocalOperator,
    s1: Iterable[Number],
    s2: Iterable[Number],
    t_m: Number,
    prec: Optional[Number] = None,
) -> tuple[LocalOperator, LocalOperator]:
    """Split monic P into monic factors carrying the slopes s1 and s2.

    The two slope sets must partition the Newton-polygon slopes of P.
    The recomposed product agrees with P through t_m lattice steps in
    M^(1/r); the factor pair with this property is unique.  ``prec``
    bounds q-expansion depth when a lifting step divides by a series.
    """
    _check_monic(P)
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    set1 = frozenset(Fraction(s) for s in s1)
    set2 = frozenset(Fraction(s) for s in s2)
    ell = _heights(P)
    slopes = frozenset(s for s, _, _ in _edges(ell))
    if not set1 or not set2 or set1 & set2 or (set1 | set2) != slopes:
        raise SlopesNotPartition(
            f"slope sets {sorted(set1)} and {sorted(set2)} do not partition "
            f"the polygon slopes {sorted(slopes)}"
        )
    window = Fraction(t_m) / P.m_ramification() - min(ell.values())
    if window <= 0:
        raise ValueError("truncation order lies below the Newton polygon")
    _weight_window(P, ell, window)
    ell1, ell2, x0, y0 = _seed_slopes(P, ell, set1, prec)
    return _lift_pair(P, ell, ell1, ell2, x0, y0, window, prec)


# -- eigenvalue split -----------------------------------------------------------


def _split_slim(p: LPoly, root: QSeries) -> LPoly:
    """Exact quotient of p by (L - root); the remainder must vanish."""
    d = p.degree
    out = [ZERO] * d
    carry = p.coefficient(d)
    for i in range(d - 1, -1, -1):
        out[i] = carry
        carry = p.coefficient(i) + root * carry
    if not carry.is_tracked_zero():
        raise ValueError("requested eigenvalue is not a slim-part root")
    return LPoly(out)


def hensel_split_eigen(
    P: LocalOperator,
    a: LPoly,
    b: LPoly,
    t_m: Number,
    prec: Optional[Number] = None,
) -> tuple[LocalOperator, LocalOperator]:
    """Split regular-singular monic P along slim part S(P) = a * b.

    a and b must be monic and coprime; the factors returned satisfy
    S(P1) = a and S(P2) = b with P1 P2 = P through t_m lattice steps.
    A level made singular by an exact q-power ratio of eigenvalues
    raises ResonantEigenvalues.
    """
    _check_monic(P)
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    slim = slim_part(P)
    if not (a.is_monic() and b.is_monic()):
        raise NotMonic("slim-part factors must be monic in L")
    if a.degree + b.degree != P.order:
        raise SlimPartMismatch(
            f"factor degrees {a.degree} + {b.degree} do not reach the "
            f"operator order {P.order}"
        )
    mismatch = slim - a * b
    if not all(
        mismatch.coefficient(i).is_tracked_zero()
        for i in range(P.order + 1)
    ):
        raise SlimPartMismatch("the given factors do not multiply to S(P)")
    solve_bezout(a, b, L_UNIT, prec)
    ell = {i: Fraction(0) for i in range(P.order + 1)}
    ell1 = {i: Fraction(0) for i in range(a.degree + 1)}
    ell2 = {i: Fraction(0) for i in range(b.degree + 1)}
    x0 = {
        i: a.coefficient(i)
        for i in range(a.degree + 1)
        if not a.coefficient(i).is_exact_zero()
    }
    y0 = {
        i: b.coefficient(i)
        for i in range(b.degree + 1)
        if not b.coefficient(i).is_exact_zero()
    }
    window = Fraction(t_m) / P.m_ramification()
    if window <= 0:
        raise ValueError("truncation order lies below the Newton polygon")
    _weight_window(P, ell, window)
    try:
        return _lift_pair(P, ell, ell1, ell2, x0, y0, window, prec)
    except SingularSystem as exc:
        raise ResonantEigenvalues(
            f"eigenvalues collide under a q-power shift: {exc}"
        ) from exc


# -- ordered first-order factorization -------------------------------------------


@dataclass(frozen=True)
class FactorizationResult:
    """Ordered monic first-order factors with their certification record.

    ``residual`` is the input minus the recomposed product, truncated at
    the certified window; all of its coefficients are tracked zeros.
    """

    factors: tuple[LocalOperator, ...]
    t_m: Fraction
    residual: LocalOperator

    def recompose(self) -> LocalOperator:
        out = LocalOperator((M_ONE,))
        for f in self.factors:
            out = out * f
        return out


def _root_key(root: QSeries):
    return (qdegree(root), tuple(root.terms()))


def _eigen_chain(
    P: LocalOperator, window: Fraction, prec: Optional[Number]
) -> list[LocalOperator]:
    """Peel a flat (single horizontal edge) monic operator into L - rho factors."""
    root_prec = _Q_DEPTH if prec is None else Fraction(prec)
    out: list[LocalOperator] = []
    cur = P
    while cur.order >= 2:
        slim = slim_part(cur)
        roots = puiseux_roots(slim, root_prec)
        for root, mult in roots:
            if mult > 1:
                raise ResonantEigenvalues(
                    f"slim-part eigenvalue {root.to_text()} has "
                    f"multiplicity {mult}"
                )
        # eigenvalues whose ratio is an exact q-power form one resonance
        # class; refusing them keeps every emitted factor certified
        for (r1, _), (r2, _) in combinations(roots, 2):
            e = qdegree(r1) - qdegree(r2)
            if (r1 - q_power(e) * r2).is_tracked_zero():
                raise ResonantEigenvalues(
                    f"eigenvalues {r1.to_text()} and {r2.to_text()} differ "
                    f"by the exact q-power q^({e})"
                )
        root = min((r for r, _ in roots), key=_root_key)
        head = LPoly((-root, ONE))
        first, cur = hensel_split_eigen(
            cur, head, _split_slim(slim, root), cur.m_ramification() * window,
            prec,
        )
        out.append(first)
    out.append(cur)
    return out


def _first_order_factors(
    P: LocalOperator, window: Fraction, prec: Optional[Number], chain=None
) -> list[LocalOperator]:
    peel = _eigen_chain if chain is None else chain
    if P.order == 1:
        return [P]
    ell = _heights(P)
    edges = _edges(ell)
    if len(edges) > 1:
        low = {edges[0][0]}
        rest = {s for s, _, _ in edges[1:]}
        t_m = P.m_ramification() * (window + min(ell.values()))
        left, right = hensel_split_slopes(P, low, rest, t_m, prec)
        return _first_order_factors(
            left, window, prec, chain
        ) + _first_order_factors(right, window, prec, chain)
    s = edges[0][0] if edges else Fraction(0)
    if s == 0:
        return peel(P, window, prec)
    d = P.order
    r_m = lcm(P.m_ramification(), s.denominator)
    flat = gauge_transform(P, -s / 2, 0, r_m=r_m)
    lift = MSeries.from_entries([(s * d, q_power(Fraction(s * d * d, 2)))])
    flat = flat.scale(lift)
    pieces = peel(flat, window, prec)
    back = [gauge_transform(F, s / 2, 0, r_m=r_m) for F in pieces]
    out: list[LocalOperator] = []
    scalar = MSeries.from_entries([(-s * d, q_power(-Fraction(s * d * d, 2)))])
    for F in back:
        G = F.scale(scalar)
        scalar = G.coefficient(1).twist(-1)
        out.append(
            LocalOperator([G.coefficient(0).divide(scalar, None, prec), M_ONE])
        )
    if not scalar.agrees(M_ONE):
        raise RuntimeError("normalization left a non-unit trailing scalar")
    return out


def factor_first_order(
    P: LocalOperator, t_m: Number, prec: Optional[Number] = None
) -> FactorizationResult:
    """Factor monic P into an ordered product of monic L - a_i(M, q).

    Slope blocks are peeled in ascending slope order, each block is
    gauge-flattened and peeled along its distinct slim-part eigenvalues,
    and the results are re-normalized into monic first-order factors.
    The M-valuation multiset of the a_i is the negated slope multiset of
    the Newton polygon.  An eigenvalue class of multiplicity above 1
    raises ResonantEigenvalues; those operators need the resonant
    series solver instead.
    """
    _check_monic(P)
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    ell = _heights(P)
    thr = Fraction(t_m) / P.m_ramification()
    window = thr - min(ell.values())
    if window <= 0:
        raise ValueError("truncation order lies below the Newton polygon")
    _weight_window(P, ell, window)
    factors = _first_order_factors(P, window, prec)
    recomposed = LocalOperator((M_ONE,))
    for f in factors:
        recomposed = recomposed * f
    residual = (P - recomposed).truncated_m(thr)
    return FactorizationResult(tuple(factors), Fraction(t_m), residual)
