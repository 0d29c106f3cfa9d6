"""Exact linear algebra helpers.

Two flavours are needed: Gaussian elimination over the truncated-series
"field" (pivots must be units up to truncation, and precision loss follows
the series division rules), and an incremental integer nullspace used by
operator guessing, where thousands of sparse integer equations cut down a
few hundred unknowns.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

from .errors import SingularSystem
from .series import QSeries, divide, qdegree


def solve_series_system(
    matrix: Sequence[Sequence[QSeries]],
    rhs: Sequence[QSeries],
    prec: Optional[Fraction] = None,
) -> list[QSeries]:
    """Solve A x = b over truncated q-series by exact elimination.

    Pivots are chosen with minimal q-valuation among rows whose candidate
    entry has a nonzero tracked coefficient (dividing by a pivot of
    valuation d costs 2d of certified window).  ``prec`` is forwarded to
    divisions that would otherwise need an explicit expansion target.
    """
    n = len(matrix)
    if n == 0:
        return []
    m = len(matrix[0])
    if any(len(row) != m for row in matrix) or len(rhs) != n:
        raise ValueError("inconsistent system shape")
    if n < m:
        raise SingularSystem("underdetermined system")
    rows = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    where: list[int] = []
    for col in range(m):
        pivot_row = None
        pivot_val = None
        for r in range(len(where), n):
            entry = rows[r][col]
            if entry.has_leading_term():
                val = qdegree(entry)
                if pivot_val is None or val < pivot_val:
                    pivot_val = val
                    pivot_row = r
        if pivot_row is None:
            raise SingularSystem(f"no usable pivot in column {col}")
        r0 = len(where)
        rows[r0], rows[pivot_row] = rows[pivot_row], rows[r0]
        pivot = rows[r0][col]
        for r in range(n):
            if r == r0:
                continue
            entry = rows[r][col]
            if entry.is_exact_zero() or entry.is_tracked_zero():
                continue
            factor = divide(entry, pivot, prec)
            for c in range(col, m + 1):
                rows[r][c] = rows[r][c] - factor * rows[r0][c]
        where.append(r0)
    return [divide(rows[i][m], rows[i][col], prec) for col, i in enumerate(where)]


def solve_fraction_system(
    matrix: Sequence[Sequence[Fraction]],
    rhs: Sequence[Fraction],
) -> list[Fraction]:
    """Solve a small square rational system exactly; SingularSystem if not unique."""
    n = len(matrix)
    rows = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]
    m = len(rows[0]) - 1
    if n < m:
        raise SingularSystem("underdetermined system")
    piv_of_col: list[int] = []
    for col in range(m):
        pivot_row = next((r for r in range(len(piv_of_col), n) if rows[r][col] != 0), None)
        if pivot_row is None:
            raise SingularSystem(f"no pivot in column {col}")
        r0 = len(piv_of_col)
        rows[r0], rows[pivot_row] = rows[pivot_row], rows[r0]
        pivot = rows[r0][col]
        for r in range(n):
            if r != r0 and rows[r][col] != 0:
                f = rows[r][col] / pivot
                for c in range(col, m + 1):
                    rows[r][c] -= f * rows[r0][c]
        piv_of_col.append(r0)
    for r in range(m, n):  # leftover rows must be consistent
        if rows[r][m] != 0:
            raise SingularSystem("inconsistent system")
    return [rows[r][m] / rows[r][col] for col, r in enumerate(piv_of_col)]


def _reduce_column(col: list[int]) -> None:
    g = 0
    for x in col:
        if x:
            g = gcd(g, abs(x))
            if g == 1:
                return
    if g > 1:
        for idx, x in enumerate(col):
            col[idx] = x // g


def integer_nullspace(
    equations: Iterable[dict[int, int]],
    ncols: int,
) -> list[list[int]]:
    """Common nullspace of sparse integer equations over Q.

    Maintains a basis of the running solution space as integer columns and
    cuts it by one dimension per independent equation; gcd reduction keeps
    entries small.  Returns primitive integer basis vectors.
    """
    basis: list[list[int]] = []
    for u in range(ncols):
        col = [0] * ncols
        col[u] = 1
        basis.append(col)
    for eq in equations:
        if not basis:
            break
        if not eq:
            continue
        values = []
        for col in basis:
            acc = 0
            for u, coeff in eq.items():
                cu = col[u]
                if cu:
                    acc += coeff * cu
            values.append(acc)
        pivot_idx = None
        pivot_val = 0
        for idx, val in enumerate(values):
            if val != 0 and (pivot_idx is None or abs(val) < abs(pivot_val)):
                pivot_idx = idx
                pivot_val = val
        if pivot_idx is None:
            continue
        pivot_col = basis.pop(pivot_idx)
        pivot_v = values.pop(pivot_idx)
        for idx, col in enumerate(basis):
            v = values[idx]
            if v == 0:
                continue
            for row in range(ncols):
                col[row] = pivot_v * col[row] - v * pivot_col[row]
            _reduce_column(col)
    for col in basis:
        _reduce_column(col)
        for x in col:
            if x:
                if x < 0:
                    for idx, y in enumerate(col):
                        col[idx] = -y
                break
    return basis
