"""Formal WKB solution bases of q-difference operators at q = 0.

A WKB series is the data tau = (gamma, lambda, A) standing for

    f_n = q^(gamma n^2) * lambda(q)^n * A(n, u, q),    u = q^n,

where A = sum_{i,k} phi_{i,k}(q) n^i u^(k/r) and phi_{0,0} = 1.  The
solvers factor the operator into monic first-order pieces, ordered left
to right by ascending Newton-polygon slope, take the pure series
solution of each rightmost piece and lift the previously built members
through it, solving the inhomogeneous first-order equation column by
column in u and row by row in n.  A resonant eigenvalue pair shows up
as a column whose diagonal coefficient vanishes; that column raises the
polynomial degree in n by one instead of dividing, which is how the
degree < multiplicity shape of resonant bases arises.

Evaluation substitutes u = q^n.  Certification rests on the growth
bound qdegree(phi_{i,k}) >= c*k: the first omitted column sits at
q-exponent at least t_u * (c + n/r), so a member refuses to evaluate at
any n with c + n/r <= 0 rather than emit uncertified terms.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb, floor, lcm
from typing import Callable, Optional, Union

from .errors import (
    EvaluationBelowThreshold,
    FailsAt,
    PrecisionRequired,
    Resonant,
    SingularMatch,
    SingularSystem,
    TruncationUnderflow,
)
from .factorization import (
    _Q_DEPTH,
    _edges,
    _first_order_factors,
    _heights,
    _root_key,
    _weight_window,
)
from .linalg import solve_series_system
from .lpoly import puiseux_roots
from .operators import (
    LocalOperator,
    MSeries,
    M_ONE,
    M_ZERO,
    PolyOperator,
    embed,
    slim_part,
    unroll,
)
from .series import ONE, QSeries, ZERO, divide, q_power, qdegree

Number = Union[int, Fraction]

__all__ = [
    "WKBSeries",
    "WKBSum",
    "evaluate",
    "match_solution",
    "solve_first_order",
    "solve_full",
    "solve_nonresonant",
    "solve_resonant",
]


def _zeroish(s: QSeries) -> bool:
    return s.is_exact_zero() or s.is_tracked_zero()


# -- the two domain types -------------------------------------------------------


def _table_bound(
    rows: "list[list[QSeries]] | tuple[tuple[QSeries, ...], ...]",
) -> Optional[Fraction]:
    """Largest c with qdegree(entry of column k) >= c*k over the table.

    Tracked-zero entries contribute their truncation threshold, the best
    available lower bound on their degree.  None when every column past
    the first is exactly zero.
    """
    best: Optional[Fraction] = None
    for row in rows:
        for k, entry in enumerate(row):
            if k == 0 or entry.is_exact_zero():
                continue
            if entry.has_leading_term():
                ratio = qdegree(entry) / k
            else:
                ratio = entry.threshold / k
            if best is None or ratio < best:
                best = ratio
    return best


@dataclass(frozen=True)
class WKBSeries:
    """One formal WKB series q^(gamma n^2) lambda^n sum phi_{i,k} n^i u^(k/r).

    ``phi[i][k]`` is the coefficient of n^i u^(k/r); row 0 column 0 is
    pinned to 1.  The table is a finite certified window: ``len(phi[0])``
    columns on the lattice 1/r, every row the same width.  ``bound`` is
    an optional growth constant the solver measured on a wider internal
    window than the table it returned.
    """

    gamma: Fraction
    lam: QSeries
    r: int
    phi: tuple[tuple[QSeries, ...], ...]
    bound: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(
            self, "phi", tuple(tuple(row) for row in self.phi)
        )
        if self.bound is not None:
            object.__setattr__(self, "bound", Fraction(self.bound))
        if self.r < 1:
            raise ValueError("ramification must be a positive integer")
        if not self.lam.has_leading_term():
            raise ValueError("lambda needs a certified nonzero leading term")
        if not self.phi or not self.phi[0]:
            raise ValueError("coefficient table must be nonempty")
        width = len(self.phi[0])
        if any(len(row) != width for row in self.phi):
            raise ValueError("coefficient rows must have equal width")
        if not _zeroish(self.phi[0][0] - ONE):
            raise ValueError("phi_{0,0} must equal 1")

    @property
    def degree(self) -> int:
        """Polynomial degree in n."""
        return len(self.phi) - 1

    @property
    def t_u(self) -> int:
        """Number of certified u-columns on the 1/r lattice."""
        return len(self.phi[0])

    def growth_bound(self) -> Optional[Fraction]:
        """Largest known c with qdegree(phi_{i,k}) >= c*k.

        The solver-provided ``bound`` wins when present, since it was
        measured over a wider window; otherwise the table itself is
        measured.  None means every column past the first is exactly
        zero, in which case evaluation is exact and needs no threshold.
        """
        if self.bound is not None:
            return self.bound
        return _table_bound(self.phi)

    def to_json(self) -> dict:
        """JSON-ready description: exponent, base, lattice, table."""
        c = self.growth_bound()
        return {
            "gamma": str(self.gamma),
            "lambda": self.lam.to_text(),
            "r": self.r,
            "degree": self.degree,
            "columns": self.t_u,
            "growth_bound": None if c is None else str(c),
            "phi": [[entry.to_text() for entry in row] for row in self.phi],
        }

    def to_text(self) -> str:
        parts = []
        if self.gamma:
            parts.append(f"q^(({self.gamma})*n^2)")
        parts.append(f"({self.lam.to_text()})^n")
        lines = [" * ".join(parts) + " * A(n, q^n)   with"]
        for i, row in enumerate(self.phi):
            label = "A[1]" if i == 0 else f"A[n^{i}]"
            cells = ", ".join(entry.to_text() for entry in row)
            lines.append(f"  {label} columns u^(k/{self.r}): {cells}")
        return "\n".join(lines)


@dataclass(frozen=True)
class WKBSum:
    """Finite combination sum_i c_i(q) * member_i of WKB series."""

    members: tuple[tuple[QSeries, WKBSeries], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "members", tuple((c, w) for c, w in self.members)
        )

    def normalized(self, prec: Optional[Number] = None) -> "WKBSum":
        """Merge members that share (gamma, lambda) into single series.

        Tables combine linearly; the merged series is rescaled so that
        phi_{0,0} = 1 and the scale moves into the coefficient.  A group
        whose combined leading entry has no certified leading term is
        kept unmerged, since no normalization is certified there.
        """
        prec = _Q_DEPTH if prec is None else Fraction(prec)
        groups: list[list[tuple[QSeries, WKBSeries]]] = []
        for c, w in self.members:
            for g in groups:
                w0 = g[0][1]
                if w0.gamma == w.gamma and _zeroish(w0.lam - w.lam):
                    g.append((c, w))
                    break
            else:
                groups.append([(c, w)])
        out: list[tuple[QSeries, WKBSeries]] = []
        for g in groups:
            if len(g) == 1:
                out.append(g[0])
                continue
            merged = _sum_members(
                [(c, _thaw(w)) for c, w in g]
            )
            lead = merged.rows[0][0]
            if not lead.has_leading_term():
                out.extend(g)
                continue
            merged.rows = [
                [divide(entry, lead, prec) for entry in row]
                for row in merged.rows
            ]
            bounds = [
                b for b in (w.growth_bound() for _, w in g) if b is not None
            ]
            if bounds:
                merged.bound = min(bounds)
            out.append((lead, merged.freeze()))
        return WKBSum(tuple(out))

    def to_json(self) -> dict:
        return {
            "members": [
                {"coefficient": c.to_text(), "series": w.to_json()}
                for c, w in self.members
            ]
        }


# -- internal working form -------------------------------------------------------


@dataclass
class _Member:
    """Mutable WKB data while a basis is under construction."""

    gamma: Fraction
    lam: QSeries
    r: int
    rows: list[list[QSeries]]
    bound: Optional[Fraction] = None

    def freeze(self) -> WKBSeries:
        return WKBSeries(
            self.gamma, self.lam, self.r,
            tuple(tuple(row) for row in self.rows),
            self.bound,
        )


def _thaw(w: WKBSeries) -> _Member:
    return _Member(w.gamma, w.lam, w.r, [list(row) for row in w.phi])


def _trim_guard(m: _Member, theta: Fraction) -> _Member:
    """Record the growth estimate of the full table, keep theta columns.

    The recursion runs on a wider guard window than the requested one so
    that the growth constant used by evaluation is measured beyond the
    columns it will extrapolate past.
    """
    m.bound = _table_bound(m.rows)
    keep = min(ceil(theta * m.r), len(m.rows[0]))
    m.rows = [row[:keep] for row in m.rows]
    return m


def _sum_members(parts: list[tuple[Optional[QSeries], _Member]]) -> _Member:
    """Linear combination of members sharing (gamma, lambda).

    A None coefficient means 1.  The result keeps the most certified of
    the lambdas; merging is only sound up to the least certified one, so
    every entry is truncated there.
    """
    members = [m for _, m in parts]
    R = 1
    for m in members:
        R = lcm(R, m.r)
    width = min(len(m.rows[0]) * (R // m.r) for m in members)
    depth = max(len(m.rows) for m in members)
    theta_min: Optional[Fraction] = None
    lam = members[0].lam
    for m in members:
        th = m.lam.threshold
        if th is not None and (theta_min is None or th < theta_min):
            theta_min = th
        if lam.threshold is not None and (
            m.lam.threshold is None or m.lam.threshold > lam.threshold
        ):
            lam = m.lam
    rows: list[list[QSeries]] = []
    for i in range(depth):
        row: list[QSeries] = []
        for k in range(width):
            acc = ZERO
            for c, m in parts:
                if i >= len(m.rows) or (k * m.r) % R:
                    continue
                entry = m.rows[i][k * m.r // R]
                acc = acc + (entry if c is None else c * entry)
            if theta_min is not None:
                acc = acc.truncated(theta_min)
            row.append(acc)
        rows.append(row)
    return _Member(members[0].gamma, lam, R, rows)


# -- first order, spec'd standalone ----------------------------------------------


def _first_order_product(
    a: MSeries, count: int, prec: Fraction
) -> MSeries:
    """Expansion of 1 / prod_{i>=0} a(M q^i, q) to ``count`` columns.

    Factor i differs from 1 at q-order at least v_min + i/r, so the
    product is cut once that passes ``prec`` and the result carries the
    matching q-truncation.
    """
    R = a.r
    vals = []
    for e, c in a.entries():
        if e <= 0:
            continue
        vals.append(qdegree(c) if c.has_leading_term() else c.threshold)
    v_min = min(vals) if vals else prec
    i_max = max(0, ceil(R * (prec - v_min)))
    window = Fraction(count, R)
    prod = M_ONE
    for i in range(i_max + 1):
        prod = (prod * a.twist(i)).truncated(window)
    inv = M_ONE.divide(prod, window, prec)
    return inv.truncated_q(prec)


def solve_first_order(
    a: MSeries, t_u: int, prec: Optional[Number] = None
) -> WKBSeries:
    """Solve f(uq, q) = a(u, q) f(u, q) with a(0, q) = 1.

    The coefficients come from the column recursion
    (q^(k/r) - 1) phi_k = sum_{m>=1} a_m phi_{k-m}; the independent
    product expansion 1/prod a(M q^i) is computed alongside and the two
    must agree on their shared window.
    """
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    if t_u < 1:
        raise ValueError("t_u must be at least 1")
    if a.is_exact_zero() or a.m_valuation() != 0:
        raise ValueError("a(0, q) must equal 1")
    c0 = a.m_coefficient(0)
    if not _zeroish(c0 - ONE):
        raise ValueError("a(0, q) must equal 1")
    R = a.r
    K = 2 * t_u
    if a.threshold is not None:
        K = min(K, ceil(a.threshold * R))
    if K < 1:
        raise TruncationUnderflow("a is certified to no u-columns")
    coeffs = [a.m_coefficient(Fraction(m, R)) for m in range(K)]
    phis = [ONE]
    for k in range(1, K):
        num = ZERO
        for m in range(1, k + 1):
            num = num + coeffs[m] * phis[k - m]
        beta = q_power(Fraction(k, R)) - c0
        phis.append(divide(num, beta, prec))
    mine = MSeries.from_entries(
        [(Fraction(k, R), phis[k]) for k in range(K)],
        truncation=Fraction(K, R),
    )
    oracle = _first_order_product(a, K, prec)
    if not mine.agrees(oracle):
        raise RuntimeError(
            "recursion and product expansions of the first-order solution "
            "disagree"
        )
    member = _Member(Fraction(0), ONE, R, [phis])
    return _trim_guard(member, Fraction(t_u, R)).freeze()


# -- direct route for distinct, non-resonant eigenvalues --------------------------


def _phi_recursion(
    c_fn: Callable[[int, int], QSeries],
    count: int,
    prec: Optional[Number] = None,
) -> list[QSeries]:
    """phi_0 = 1 and c(0,k) phi_k = -sum_{i=1..k} c(i, k-i) phi_{k-i}."""
    phis = [ONE]
    for k in range(1, count):
        num = ZERO
        for i in range(1, k + 1):
            num = num + c_fn(i, k - i) * phis[k - i]
        den = c_fn(0, k)
        if not den.has_leading_term():
            raise PrecisionRequired(
                f"diagonal coefficient c(0,{k}) has no certified leading term"
            )
        phis.append(divide(-num, den, prec))
    return phis


def _column_cap(P: LocalOperator, R: int, K: int, base: Fraction) -> int:
    for a in P.coeffs:
        th = a.threshold
        if th is not None:
            K = min(K, ceil((th - base) * R))
    return K


def _coefficient_columns(
    P: LocalOperator, R: int, K: int, base: Fraction
) -> list[list[QSeries]]:
    """cols[t][m] = coefficient of M^(base + m/R) in a_t."""
    return [
        [P.coefficient(t).m_coefficient(base + Fraction(m, R)) for m in range(K)]
        for t in range(P.order + 1)
    ]


def _chi_at(cols: list[list[QSeries]], m: int, x: QSeries) -> QSeries:
    acc = cols[-1][m]
    for t in range(len(cols) - 2, -1, -1):
        acc = acc * x + cols[t][m]
    return acc


def solve_nonresonant(
    P, t_u: int, prec: Optional[Number] = None
) -> list[WKBSeries]:
    """Series basis of a regular-singular operator, one per eigenvalue.

    Eigenvalues must be simple and no quotient of two of them may be an
    exact power of q; otherwise some diagonal coefficient c(0,k)
    vanishes and the column recursion has no solution of this shape.
    This is a direct route: no factorization, just the per-eigenvalue
    recursion, plus a degree-bound check derived from the weighted
    homogeneity of psi_k = phi_k prod_j c(0,j).
    """
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    if t_u < 1:
        raise ValueError("t_u must be at least 1")
    L = _as_local(P)
    slim = slim_part(L)
    base = L.coeffs[-1].m_valuation()
    roots = puiseux_roots(slim, prec)
    for r1, mult in roots:
        if mult > 1:
            raise Resonant(
                f"eigenvalue {r1.to_text()} has multiplicity {mult}"
            )
    for idx, (r1, _) in enumerate(roots):
        for r2, _ in roots[idx + 1:]:
            e = qdegree(r1) - qdegree(r2)
            hi, lo = (r1, r2) if e >= 0 else (r2, r1)
            if _zeroish(hi - q_power(abs(e)) * lo):
                raise Resonant(
                    f"eigenvalues {r1.to_text()} and {r2.to_text()} differ "
                    f"by the exact q-power q^({abs(e)})"
                )
    R = L.m_ramification()
    for root, _ in roots:
        R = lcm(R, root.r)
    theta = Fraction(t_u, L.m_ramification())
    K = ceil(2 * theta * R)
    K = _column_cap(L, R, K, base)
    if K < 1:
        raise TruncationUnderflow("operator is certified to no u-columns")
    cols = _coefficient_columns(L, R, K, base)
    out = []
    for root, _ in roots:
        table: dict[tuple[int, int], QSeries] = {}

        def c_fn(i: int, j: int, root=root, table=table) -> QSeries:
            if (i, j) not in table:
                table[i, j] = _chi_at(cols, i, root.shifted(Fraction(j, R)))
            return table[i, j]

        phis = _phi_recursion(c_fn, K, prec)
        _assert_degree_bound(phis, table, R)
        member = _Member(Fraction(0), root, R, [phis])
        out.append(_trim_guard(member, theta).freeze())
    out.sort(key=_basis_key)
    return out


def _assert_degree_bound(
    phis: list[QSeries], table: dict[tuple[int, int], QSeries], R: int
) -> None:
    """Check qdegree(phi_k) against the weighted-homogeneity bound.

    psi_k = phi_k prod_{j<=k} c(0,j) is homogeneous of degree k(k+1)/2
    when c(i,j) carries weight i+j, so qdegree(psi_k) is at least that
    times the smallest degree-per-weight ratio among the tracked c(i,j).
    """
    m0: Optional[Fraction] = None
    for (i, j), entry in table.items():
        if i + j == 0 or entry.is_exact_zero():
            continue
        d = qdegree(entry) if entry.has_leading_term() else entry.threshold
        ratio = d / (i + j)
        if m0 is None or ratio < m0:
            m0 = ratio
    if m0 is None:
        return
    diag = Fraction(0)
    for k in range(1, len(phis)):
        diag += qdegree(table[0, k])
        if not phis[k].has_leading_term():
            continue
        bound = Fraction(k * (k + 1), 2) * m0 - diag
        if qdegree(phis[k]) < bound:
            raise RuntimeError(
                f"phi_{k} violates the weighted-homogeneity degree bound"
            )


# -- chain construction: pure members and lifts ------------------------------------


def _pure_member(b: MSeries, theta: Fraction, prec: Fraction) -> _Member:
    """Solution of (L - b) f = 0 as a single-row member.

    b = A_0 u^mu (1 + ...) gives gamma = mu/2 and lambda = A_0 q^(-mu/2);
    the column recursion divides by A_0 (q^(k/r) - 1), never resonant.
    """
    mu = b.m_valuation()
    R = b.r
    gamma = mu / 2
    a0 = b.m_coefficient(mu)
    K = ceil(theta * R)
    if b.threshold is not None:
        K = min(K, ceil((b.threshold - mu) * R))
    if K < 1:
        raise TruncationUnderflow("factor is certified to no u-columns")
    coeffs = [b.m_coefficient(mu + Fraction(m, R)) for m in range(K)]
    phis = [ONE]
    for k in range(1, K):
        num = ZERO
        for m in range(1, k + 1):
            num = num + coeffs[m] * phis[k - m]
        beta = a0.shifted(Fraction(k, R)) - a0
        phis.append(divide(num, beta, prec))
    return _Member(gamma, a0.shifted(-gamma), R, [phis])


def _g_entry(g: _Member, i: int, k: int, R: int) -> QSeries:
    if i >= len(g.rows):
        return ZERO
    num = k * g.r
    if num % R:
        return ZERO
    return g.rows[i][num // R]


def _lift_through(
    b: MSeries, g: _Member, theta: Fraction, prec: Fraction
) -> _Member:
    """Solve (L - b) f = g for a member g with 2 gamma_g >= m-val(b).

    The ansatz keeps gamma and replaces lambda by lambda_g q^(-mu).
    Writing Delta = (2 gamma_g - mu) r, column k couples to column
    k - Delta of the shifted rows; Delta = 0 columns divide by
    beta_k = q^gamma lambda q^(k/r) - A_0, and a vanishing beta_k is the
    resonant case: the n-degree escalates by one, row 0 of that column
    is a free slot pinned to 0 here and restored by normalization.
    """
    mu = b.m_valuation()
    gap = 2 * g.gamma - mu
    if gap < 0:
        raise RuntimeError("factor chain is out of slope order")
    R = lcm(g.r, b.r, gap.denominator)
    delta = int(gap * R)
    lam = g.lam.shifted(-mu)
    K = min(ceil(theta * R), len(g.rows[0]) * (R // g.r))
    if b.threshold is not None:
        K = min(K, ceil((b.threshold - mu) * R))
    if K < 1:
        raise TruncationUnderflow("factor is certified to no u-columns")
    coeffs = [b.m_coefficient(mu + Fraction(m, R)) for m in range(K)]
    rows: list[list[QSeries]] = [[] for _ in g.rows]
    for k in range(K):
        depth = len(rows)
        history = [ZERO] * depth
        for i in range(depth):
            acc = _g_entry(g, i, k, R)
            for m in range(1, k + 1):
                acc = acc + coeffs[m] * rows[i][k - m]
            history[i] = acc
        if delta > 0:
            column = []
            for i in range(depth):
                rhs = -history[i]
                if k >= delta:
                    carry = ZERO
                    for ip in range(i, depth):
                        carry = carry + rows[ip][k - delta].scaled(comb(ip, i))
                    rhs = rhs + lam.shifted(
                        g.gamma + Fraction(k - delta, R)
                    ) * carry
                column.append(divide(rhs, coeffs[0], prec))
        else:
            w = lam.shifted(g.gamma + Fraction(k, R))
            beta = w - coeffs[0]
            if beta.has_leading_term():
                column = [ZERO] * depth
                for i in range(depth - 1, -1, -1):
                    carry = ZERO
                    for ip in range(i + 1, depth):
                        carry = carry + column[ip].scaled(comb(ip, i))
                    column[i] = divide(history[i] - w * carry, beta, prec)
            else:
                # resonant column: w phi_{i+1..} carries the load and the
                # top row must balance, escalating the degree if it does not
                if history[depth - 1].has_leading_term():
                    rows.append([ZERO] * k)
                    history.append(ZERO)
                    depth += 1
                column = [ZERO] * depth
                for i in range(depth - 2, -1, -1):
                    carry = ZERO
                    for ip in range(i + 2, depth):
                        carry = carry + column[ip].scaled(comb(ip, i))
                    column[i + 1] = divide(
                        history[i] - w * carry, w.scaled(i + 1), prec
                    )
        for i in range(len(rows)):
            rows[i].append(column[i])
    return _Member(g.gamma, lam, R, rows)


def _normalize_member(
    m: _Member, peers: list[_Member], prec: Fraction
) -> _Member:
    """Pin phi_{0,0} to 1.

    Leading all-zero columns move into lambda as exact q-powers.  A
    certified leading entry rescales the whole table.  A free-slot zero
    (resonant lift) borrows an already normalized member with the same
    (gamma, lambda); their difference spans the same line.
    """
    width = len(m.rows[0])
    k0 = 0
    while k0 < width and all(row[k0].is_exact_zero() for row in m.rows):
        k0 += 1
    if k0 == width:
        raise RuntimeError("member is exactly zero")
    if k0:
        m = _Member(
            m.gamma,
            m.lam.shifted(Fraction(k0, m.r)),
            m.r,
            [row[k0:] for row in m.rows],
        )
    lead = m.rows[0][0]
    if not lead.has_leading_term():
        if not any(row[0].has_leading_term() for row in m.rows[1:]):
            raise RuntimeError("member has no certified leading column")
        peer = None
        for p in peers:
            if p.gamma == m.gamma and _zeroish(p.lam - m.lam):
                peer = p
                break
        if peer is None:
            raise RuntimeError(
                "resonant member has no normalized partner to borrow from"
            )
        m = _sum_members([(None, m), (None, peer)])
        lead = m.rows[0][0]
        if not lead.has_leading_term():
            raise RuntimeError("normalization left no certified leading term")
    rows = [[divide(entry, lead, prec) for entry in row] for row in m.rows]
    return _Member(m.gamma, m.lam, m.r, rows)


# -- factor chains for resonant flat operators ------------------------------------


def _maximal_root(roots: list[tuple[QSeries, int]]) -> QSeries:
    """A root with no partner sitting an exact q-power above it.

    For such a root every diagonal pivot chi(root q^(k/R)) keeps a
    certified leading term, so its pure series solution is unobstructed.
    """
    tops = []
    for idx, (r1, _) in enumerate(roots):
        above = False
        for jdx, (r2, _) in enumerate(roots):
            if jdx == idx:
                continue
            e = qdegree(r2) - qdegree(r1)
            if e > 0 and _zeroish(r2 - q_power(e) * r1):
                above = True
                break
        if not above:
            tops.append(r1)
    return min(tops, key=_root_key)


def _right_factor(
    P: LocalOperator, root: QSeries, window: Fraction, prec: Fraction
) -> MSeries:
    """Dressed eigenvalue a with (L - a) a right factor of flat monic P.

    a = lambda B(uq)/B(u) for the pure series solution f = lambda^n B(u)
    attached to ``root``, computed columnwise to the requested window.
    """
    base = P.coeffs[-1].m_valuation()
    R = lcm(P.m_ramification(), root.r)
    K = max(1, ceil(window * R))
    K = _column_cap(P, R, K, base)
    if K < 1:
        raise TruncationUnderflow("operator is certified to no u-columns")
    cols = _coefficient_columns(P, R, K, base)
    phis = [ONE]
    for k in range(1, K):
        num = ZERO
        for m in range(1, k + 1):
            num = num + _chi_at(
                cols, m, root.shifted(Fraction(k - m, R))
            ) * phis[k - m]
        den = _chi_at(cols, 0, root.shifted(Fraction(k, R)))
        if not den.has_leading_term():
            raise PrecisionRequired(
                f"pivot chi(root*q^({Fraction(k, R)})) has no certified "
                "leading term"
            )
        phis.append(divide(-num, den, prec))
    window_m = Fraction(K, R)
    num_ms = MSeries.from_entries(
        [(Fraction(k, R), (root * phis[k]).shifted(Fraction(k, R)))
         for k in range(K)],
        truncation=window_m,
    )
    den_ms = MSeries.from_entries(
        [(Fraction(k, R), phis[k]) for k in range(K)],
        truncation=window_m,
    )
    return num_ms.divide(den_ms, None, prec)


def _peel_right(
    P: LocalOperator, a: MSeries
) -> tuple[LocalOperator, MSeries]:
    """Right-divide P by L - a: P = Q (L - a) + remainder."""
    d = P.order
    qs_: list[MSeries] = [M_ZERO] * d
    qs_[d - 1] = P.coefficient(d)
    for i in range(d - 1, 0, -1):
        qs_[i - 1] = P.coefficient(i) + qs_[i] * a.twist(i)
    rem = P.coefficient(0) + qs_[0] * a
    return LocalOperator(qs_), rem


def _flat_chain_ops(
    P: LocalOperator, window: Fraction, prec: Optional[Number]
) -> list[LocalOperator]:
    """Chain a flat monic operator into first-order factors.

    Unlike the coprime-eigenvalue split, this peels one dressed
    eigenvalue at a time by right division, so resonant classes (shared
    roots, or roots an exact q-power apart) come through as repeated or
    laddered factors instead of raising an error.  Each step peels a
    class-maximal root; the remainder of the division must be zero on
    its certified window.
    """
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    tail: list[LocalOperator] = []
    cur = P
    while cur.order >= 2:
        roots = puiseux_roots(slim_part(cur), prec)
        root = _maximal_root(roots)
        a = _right_factor(cur, root, window, prec)
        quot, rem = _peel_right(cur, a)
        if not rem.agrees(M_ZERO):
            raise RuntimeError(
                "peeled factor leaves a certified nonzero remainder"
            )
        tail.append(LocalOperator((-a, M_ONE)))
        cur = quot
    tail.append(cur)
    tail.reverse()
    return tail


# -- assembling bases --------------------------------------------------------------


def _as_local(P) -> LocalOperator:
    if isinstance(P, PolyOperator):
        return embed(P)
    if isinstance(P, LocalOperator):
        return P
    raise TypeError("expected a PolyOperator or a LocalOperator")


def _monic_for(L: LocalOperator, t_u: int, prec: Fraction) -> LocalOperator:
    """Divide out the leading coefficient with enough M-window to spare.

    The window is sized so the later hull-weight certification passes:
    every post-division coefficient needs its threshold to clear its
    hull height plus the working window.
    """
    if L.coeffs[-1] == M_ONE:
        return L
    theta = Fraction(2 * t_u, L.m_ramification())
    ell = _heights(L)
    v_d = L.coeffs[-1].m_valuation()
    window = theta + 1 - (min(ell.values()) - v_d)
    spread = max(
        c.m_valuation() - v_d
        for c in L.coeffs
        if not c.is_exact_zero()
    )
    return L.make_monic(window + max(spread, 0) + 1, prec)


def _local_basis(
    P: LocalOperator, t_u: int, prec: Fraction
) -> list[_Member]:
    """Basis members of a monic local operator via its factor chain.

    Construction runs on a doubled guard window; the caller-visible
    width is restored by _trim_guard, which keeps the growth estimate
    measured on the wide table.
    """
    theta = Fraction(t_u, P.m_ramification())
    guard = 2 * theta
    ell = _heights(P)
    window = guard + 1 - min(ell.values())
    _weight_window(P, ell, window)
    factors = _first_order_factors(P, window, prec, chain=_flat_chain_ops)
    members: list[_Member] = []
    for F in factors:
        if F.order != 1:
            raise RuntimeError("factor chain contains a non-first-order piece")
        b = -F.coefficient(0)
        lifted = [_lift_through(b, g, guard, prec) for g in members]
        members = [_pure_member(b, guard, prec)] + lifted
        normalized: list[_Member] = []
        for m in members:
            normalized.append(_normalize_member(m, normalized, prec))
        members = normalized
    return [_trim_guard(m, theta) for m in members]


def _basis_key(w: WKBSeries):
    return (
        w.gamma,
        -qdegree(w.lam),
        tuple((e, c) for e, c in w.lam.terms()),
        len(w.phi),
    )


def solve_resonant(
    P, t_u: int, prec: Optional[Number] = None
) -> list[WKBSeries]:
    """Basis of a regular-singular operator, resonance allowed.

    The operator is made monic, chained into first-order factors by
    repeated right division, and the basis is built factor by factor:
    the pure solution of the rightmost factor plus lifts of the earlier
    basis through it.  Coefficients are polynomials in n whose degree
    stays below the eigenvalue multiplicity.
    """
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    if t_u < 1:
        raise ValueError("t_u must be at least 1")
    L = _monic_for(_as_local(P), t_u, prec)
    slim_part(L)
    members = _local_basis(L, t_u, prec)
    if any(m.gamma for m in members):
        raise RuntimeError("regular-singular basis acquired a nonzero gamma")
    out = [m.freeze() for m in members]
    out.sort(key=_basis_key)
    return out


def solve_full(
    P, t_u: int, prec: Optional[Number] = None
) -> list[WKBSeries]:
    """WKB basis of any nonzero operator with nonzero constant coefficient.

    Pipeline: embed, make monic, split the Newton polygon by slopes,
    gauge-flatten each slope block, chain it into first-order factors,
    and build members by pure-plus-lift along the full chain.  The
    multiset {2 gamma_i} must come out equal to the negated slope
    multiset of the polygon, counted with edge multiplicity.
    """
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    if t_u < 1:
        raise ValueError("t_u must be at least 1")
    L = _as_local(P)
    if L.is_zero():
        raise ValueError("the zero operator has no solution basis")
    if L.order == 0:
        return []
    L = _monic_for(L, t_u, prec)
    members = _local_basis(L, t_u, prec)
    neg_slopes: list[Fraction] = []
    for s, i0, i1 in _edges(_heights(L)):
        neg_slopes.extend([-s] * (i1 - i0))
    if sorted(2 * m.gamma for m in members) != sorted(neg_slopes):
        raise RuntimeError(
            "exponent multiset does not match the negated slope multiset"
        )
    out = [m.freeze() for m in members]
    out.sort(key=_basis_key)
    return out


# -- evaluation and matching -------------------------------------------------------


def evaluate(w, n: int, t_q: Number) -> QSeries:
    """Value of a WKB series or sum at u = q^n, truncated at t_q.

    The certified window is min(t_q, t_u (c + n/r)) with c the growth
    bound; members with no u-tail evaluate exactly.  n with
    c + n/r <= 0 raises EvaluationBelowThreshold.
    """
    t_q = Fraction(t_q)
    if isinstance(w, WKBSum):
        total = ZERO
        for c, member in w.members:
            total = total + c * evaluate(member, n, t_q)
        return total.capped(t_q)
    if not isinstance(w, WKBSeries):
        raise TypeError("expected a WKBSeries or a WKBSum")
    if n < 0:
        raise ValueError("n must be a natural number")
    c = w.growth_bound()
    acc = ZERO
    for k in range(w.t_u):
        col = ZERO
        for i, row in enumerate(w.phi):
            entry = row[k]
            if not entry.is_exact_zero():
                col = col + entry.scaled(n ** i)
        if col.is_exact_zero():
            continue
        acc = acc + col.shifted(Fraction(n * k, w.r))
    if c is not None:
        margin = c + Fraction(n, w.r)
        if margin <= 0:
            raise EvaluationBelowThreshold(n)
        acc = acc.truncated(w.t_u * margin)
    val = (acc * w.lam ** n).shifted(w.gamma * n * n)
    return val.capped(t_q)


def match_solution(
    P: PolyOperator,
    init,
    basis,
    t_q: Optional[Number] = None,
    prec: Optional[Number] = None,
) -> list[QSeries]:
    """Coordinates c_i(q) of the sequence unroll(P, init) in the basis.

    Rows start at the first n where every member both admits evaluation
    and reaches the requested truncation through its tail bound; the
    square system is solved over truncated series and three further rows
    re-check the combination against the unrolled sequence.
    """
    prec = _Q_DEPTH if prec is None else Fraction(prec)
    t_q = Fraction(prec if t_q is None else t_q)
    if isinstance(basis, WKBSum):
        members = [w for _, w in basis.members]
    else:
        members = list(basis)
    if not members:
        raise ValueError("empty basis")
    n0 = 0
    for w in members:
        c = w.growth_bound()
        if c is None:
            continue
        admissible = max(0, floor(-w.r * c) + 1)
        reach = ceil(w.r * (t_q / w.t_u - c))
        n0 = max(n0, admissible, reach)
    d = len(members)
    values = unroll(P, init, n0 + d + 2)
    grid = [
        [evaluate(w, n0 + t, t_q) for w in members] for t in range(d + 3)
    ]
    try:
        coords = solve_series_system(grid[:d], values[n0:n0 + d], prec=prec)
    except SingularSystem as exc:
        raise SingularMatch(str(exc)) from exc
    for t in range(d, d + 3):
        combo = ZERO
        for c, cell in zip(coords, grid[t]):
            combo = combo + c * cell
        if (combo - values[n0 + t]).has_leading_term():
            raise FailsAt(
                n0 + t,
                "matched combination disagrees with the unrolled sequence",
            )
    return coords
