"""Recurrence guessing and verification for sequences of exact q-polynomials.

Given initial terms f_0, f_1, ... this module finds operators
sum_{i,j,k} a_{ijk} q^k M^j L^i inside a prescribed degree box that
annihilate every supplied term, certifies homogeneous and inhomogeneous
recurrences over explicit index ranges, normalizes operators to a
content-reduced form, and specializes q = 1 to the characteristic
(L, M)-polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Optional, Sequence

from .errors import FailsAt, NoOperatorInBox
from .linalg import integer_nullspace
from .operators import PolyOperator
from .series import QSeries

__all__ = [
    "AnnihilatorCertificate",
    "guess_operator",
    "verify_annihilator",
    "verify_inhomogeneous",
    "reduce_operator",
    "characteristic_specialize",
]

_F0 = Fraction(0)


# --- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class AnnihilatorCertificate:
    """Witness that apply(operator, f, n) = b(q^n, q) for all n in a range.

    b is an M-and-q polynomial (an operator without L); None means the
    homogeneous case b = 0.
    """

    operator: PolyOperator
    n_lo: int
    n_hi: int
    b: Optional[PolyOperator] = None

    def __post_init__(self):
        if self.n_lo > self.n_hi:
            raise ValueError("empty verification range")
        if self.b is not None and self.b.l_support() not in ([], [0]):
            raise ValueError("the inhomogeneous part must not involve L")

    def to_json(self) -> dict:
        payload = {
            "operator": self.operator.to_text(),
            "n_lo": self.n_lo,
            "n_hi": self.n_hi,
        }
        if self.b is not None:
            payload["b"] = self.b.to_text()
        return payload


# --- guessing ---------------------------------------------------------------


def _integer_rows(acc: dict) -> list[dict[int, int]]:
    """Clear denominators and drop empty rows; deterministic exponent order."""
    rows: list[dict[int, int]] = []
    for key in sorted(acc):
        row = acc[key]
        den = 1
        for v in row.values():
            den = lcm(den, v.denominator)
        ieq = {c: int(v * den) for c, v in row.items() if v}
        if ieq:
            rows.append(ieq)
    return rows


def _window_rows(terms, n, d, j_max, k_max, col_of) -> list[dict[int, int]]:
    """Equations stating sum a_{ijk} q^{k+jn} f_{n+i} = 0, one per q-power."""
    acc: dict[Fraction, dict[int, Fraction]] = {}
    for i in range(d + 1):
        support = [(int(e) if e.denominator == 1 else e, c)
                   for e, c in terms[n + i].terms()]
        for j in range(j_max + 1):
            base = j * n
            for k in range(k_max + 1):
                col = col_of.get((i, j, k))
                if col is None:
                    continue
                off = base + k
                for e, c in support:
                    key = e + off
                    row = acc.setdefault(key, {})
                    row[col] = row.get(col, _F0) + c
    return _integer_rows(acc)


def _combination_space(basis, cols, d_sel, j_sel, k_sel, extra_rows):
    """Nullspace combinations of `basis` supported inside the sub-box."""
    s = len(basis)
    rows: list[dict[int, int]] = []
    for idx, (i, j, k) in enumerate(cols):
        if i > d_sel or j > j_sel or k > k_sel:
            row = {b: basis[b][idx] for b in range(s) if basis[b][idx]}
            if row:
                rows.append(row)
    rows.extend(extra_rows)
    return integer_nullspace(rows, s)


def guess_operator(f, d_max: int, j_max: int, k_max: int) -> PolyOperator:
    """Smallest operator in the (d_max, j_max, k_max) box annihilating f.

    f is a sequence of exact QSeries terms indexed from 0.  The linear
    system in the a_{ijk} is solved exactly over the rationals; among all
    solutions the order d is minimized first, then the M-degree, then the
    q-degree, and ties are broken by the lexicographically least reduced
    form.  Raises NoOperatorInBox when the box contains no solution.
    """
    terms: Sequence[QSeries] = list(f)
    for t in terms:
        if not t.exact:
            raise ValueError("guessing requires exact terms")
    n_top = len(terms) - 1
    if n_top < d_max:
        raise ValueError("need at least d_max + 1 terms")

    cols = [(i, j, k)
            for i in range(d_max + 1)
            for j in range(j_max + 1)
            for k in range(k_max + 1)]
    col_of = {key: idx for idx, key in enumerate(cols)}

    rows: list[dict[int, int]] = []
    for n in range(n_top - d_max + 1):
        rows.extend(_window_rows(terms, n, d_max, j_max, k_max, col_of))
    basis = integer_nullspace(rows, len(cols))
    if not basis:
        raise NoOperatorInBox(
            f"no operator in the ({d_max}, {j_max}, {k_max}) box "
            f"annihilates the {len(terms)} supplied terms")

    # Lower-order solutions must also hold on the deeper window positions
    # that an order-d_max ansatz cannot reach; those appear as extra rows
    # expressed in combination space.
    def extra_rows_for(d_sel: int) -> list[dict[int, int]]:
        out: list[dict[int, int]] = []
        for n in range(n_top - d_max + 1, n_top - d_sel + 1):
            for eq in _window_rows(terms, n, d_sel, j_max, k_max, col_of):
                row = {}
                for b, vec in enumerate(basis):
                    acc = 0
                    for col, coeff in eq.items():
                        if vec[col]:
                            acc += coeff * vec[col]
                    if acc:
                        row[b] = acc
                out.append(row)
        return out

    d_sel = d_max
    extras: list[dict[int, int]] = []
    for d in range(d_max + 1):
        trial = extra_rows_for(d)
        if _combination_space(basis, cols, d, j_max, k_max, trial):
            d_sel, extras = d, trial
            break
    j_sel = j_max
    for j in range(j_max + 1):
        if _combination_space(basis, cols, d_sel, j, k_max, extras):
            j_sel = j
            break
    k_sel = k_max
    for k in range(k_max + 1):
        combos = _combination_space(basis, cols, d_sel, j_sel, k, extras)
        if combos:
            k_sel = k
            break

    candidates = []
    for cvec in combos:
        raw = [
            sum(cvec[b] * basis[b][idx] for b in range(len(basis)))
            for idx in range(len(cols))
        ]
        op = PolyOperator.from_term_list(
            (i, j, k, raw[idx]) for idx, (i, j, k) in enumerate(cols)
            if raw[idx])
        if not op.is_zero():
            candidates.append(reduce_operator(op))
    if not candidates:
        raise NoOperatorInBox("the combination space collapsed to zero")
    return min(candidates, key=lambda op: tuple(op.terms()))


# --- verification -----------------------------------------------------------


def verify_annihilator(P: PolyOperator, f, n_lo: int, n_hi: int,
                       ) -> AnnihilatorCertificate:
    """Check apply(P, f, n) = 0 exactly on [n_lo, n_hi]; f must be exact."""
    for n in range(n_lo, n_hi + 1):
        if not P.apply(f, n).is_exact_zero():
            raise FailsAt(n, "the operator does not annihilate f here")
    return AnnihilatorCertificate(P, n_lo, n_hi)


def verify_inhomogeneous(P: PolyOperator, b: PolyOperator, f,
                         n_lo: int, n_hi: int) -> AnnihilatorCertificate:
    """Check apply(P, f, n) = b(q^n, q) exactly on [n_lo, n_hi]."""
    if b.l_support() not in ([], [0]):
        raise ValueError("the right-hand side must not involve L")
    for n in range(n_lo, n_hi + 1):
        residual = P.apply(f, n) - b.eval_coefficient(0, n)
        if not residual.is_exact_zero():
            raise FailsAt(n, "apply(P, f, n) differs from b(q^n, q)")
    return AnnihilatorCertificate(P, n_lo, n_hi, b)


# --- normalization ----------------------------------------------------------


def reduce_operator(P: PolyOperator) -> PolyOperator:
    """Content-1 integer form without common q/M monomial, lex lead positive."""
    terms = P.terms()
    if not terms:
        return P
    den = 1
    for _, _, _, c in terms:
        den = lcm(den, c.denominator)
    nums = [int(c * den) for _, _, _, c in terms]
    g = 0
    for v in nums:
        g = gcd(g, v)
    j_min = min(j for _, j, _, _ in terms)
    k_min = min(k for _, _, k, _ in terms)
    sign = 1 if nums[-1] > 0 else -1  # terms() sorts ascending by (i, j, k)
    return PolyOperator({
        (i, j - j_min, k - k_min): sign * v // g
        for (i, j, k, _), v in zip(terms, nums)
    })


def characteristic_specialize(P: PolyOperator) -> PolyOperator:
    """Collect at q = 1: the (L, M)-polynomial sum_{i,j} (sum_k a_{ijk}) M^j L^i."""
    acc: dict[tuple[int, int, int], Fraction] = {}
    for i, j, k, c in P.terms():
        key = (i, j, 0)
        acc[key] = acc.get(key, _F0) + c
    return PolyOperator(acc)
