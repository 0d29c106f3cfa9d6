"""Degree quasi-polynomials and constant-coefficient leading-term recurrences.

A q-holonomic sequence has a degree sequence that is eventually a quadratic
quasi-polynomial, and its leading coefficients eventually satisfy a linear
recurrence with constant coefficients.  This module extracts both facts from
finite data windows: every fit is exact rational interpolation followed by
verification on all remaining points, never an approximation.  A WKB
combination can be fed in directly (:func:`wkb_asymptotics`); its branch
data then supplies the window.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import InconclusiveTruncation, NoFit, NoRecurrence, WindowTooSmall
from .linalg import SingularSystem, solve_fraction_system
from .series import ONE, QSeries, max_degree, qdegree
from .wkb import WKBSum

Number = Union[int, Fraction]


def _fractions(values: Iterable) -> list[Fraction]:
    return [Fraction(v) for v in values]


# ---------------------------------------------------------------------------
# degree sequences


def degree_sequence(f, n_range: Iterable[int], side: str = "min") -> list[Fraction]:
    """Degrees of f_n for n in ``n_range``.

    side="min" reads the least exponent (works on truncated series with a
    certified leading term); side="max" reads the top exponent and therefore
    needs exact polynomials.
    """
    if side not in ("min", "max"):
        raise ValueError(f"side must be 'min' or 'max', got {side!r}")
    fam: Callable[[int], QSeries] = f if callable(f) else lambda n: f[n]
    pick = qdegree if side == "min" else max_degree
    return [pick(fam(n)) for n in n_range]


# ---------------------------------------------------------------------------
# quadratic quasi-polynomial fitting


@dataclass(frozen=True)
class QuasiPolynomial:
    """Per-residue quadratics: value at n is (c2/2)n^2 + c1*n + c0 where
    (c0, c1, c2) belongs to the class of n mod period; valid from threshold."""

    period: int
    coefficients: tuple[tuple[Fraction, Fraction, Fraction], ...]
    threshold: int

    def __post_init__(self):
        if len(self.coefficients) != self.period:
            raise ValueError("need one coefficient triple per residue class")

    def evaluate(self, n: int) -> Fraction:
        c0, c1, c2 = self.coefficients[n % self.period]
        return Fraction(c2 * n * n, 2) + c1 * n + c0

    def to_text(self) -> str:
        lines = []
        for rho, (c0, c1, c2) in enumerate(self.coefficients):
            lines.append(
                f"n = {rho} (mod {self.period}): ({c2}/2) n^2 + ({c1}) n + ({c0})"
            )
        return "\n".join(lines)


def fit_quasi_polynomial(
    values: Sequence, max_period: int = 12, max_skip: int = 8
) -> QuasiPolynomial:
    """Smallest-period quadratic quasi-polynomial matching the data.

    Tries periods 1..max_period and thresholds 0..max_skip in order; each
    residue class must contain at least three points at or past the threshold
    (to pin down a quadratic) and the fit must then reproduce every remaining
    point exactly.
    """
    vals = _fractions(values)
    for period in range(1, max_period + 1):
        for skip in range(0, max_skip + 1):
            fit = _try_fit(vals, period, skip)
            if fit is not None:
                return fit
    raise NoFit(
        f"no quadratic quasi-polynomial with period <= {max_period} and "
        f"threshold <= {max_skip} fits {len(vals)} values"
    )


def _try_fit(
    vals: list[Fraction], period: int, skip: int
) -> Optional[QuasiPolynomial]:
    triples = []
    for rho in range(period):
        ns = [n for n in range(skip, len(vals)) if n % period == rho]
        if len(ns) < 3:
            return None
        head = ns[:3]
        c0, c1, c2 = solve_fraction_system(
            [[Fraction(1), Fraction(n), Fraction(n * n, 2)] for n in head],
            [vals[n] for n in head],
        )
        for n in ns[3:]:
            if Fraction(c2 * n * n, 2) + c1 * n + c0 != vals[n]:
                return None
        triples.append((c0, c1, c2))
    return QuasiPolynomial(period, tuple(triples), skip)


# ---------------------------------------------------------------------------
# minimal constant-coefficient recurrences


@dataclass(frozen=True)
class LinearRecurrence:
    """a(n+d) = s[0] a(n+d-1) + ... + s[d-1] a(n), d = order."""

    s: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.s)

    def extend(self, initial: Sequence, count: int) -> list[Fraction]:
        """First ``count`` values from ``initial`` (length >= order)."""
        d = self.order
        if len(initial) < d:
            raise ValueError(f"need {d} initial values")
        out = _fractions(initial)[:d]
        while len(out) < count:
            nxt = sum(self.s[i] * out[-1 - i] for i in range(d)) if d else Fraction(0)
            out.append(nxt)
        return out[:count]

    def satisfied_by(self, values: Sequence) -> bool:
        vals = _fractions(values)
        d = self.order
        for n in range(len(vals) - d):
            if sum(self.s[i] * vals[n + d - 1 - i] for i in range(d)) != vals[n + d]:
                return False
        return True

    def characteristic_text(self) -> str:
        """The polynomial s(x) = 1 - s1 x - ... - sd x^d as text."""
        parts = ["1"]
        for i, c in enumerate(self.s, start=1):
            if c:
                parts.append(f"- ({c}) x^{i}")
        return " ".join(parts)


def min_linear_recurrence(values: Sequence, max_order: int = 12) -> LinearRecurrence:
    """Minimal-order recurrence satisfied by every supplied value, found by
    exact elimination on the shift-aligned linear system."""
    vals = _fractions(values)
    if all(v == 0 for v in vals):
        return LinearRecurrence(())
    for d in range(1, max_order + 1):
        rows = len(vals) - d
        if rows < d + 1:
            break
        matrix = [[vals[n + d - 1 - i] for i in range(d)] for n in range(rows)]
        rhs = [vals[n + d] for n in range(rows)]
        try:
            sol = solve_fraction_system(matrix, rhs)
        except SingularSystem:
            continue
        return LinearRecurrence(tuple(sol))
    raise NoRecurrence(
        f"no constant-coefficient recurrence of order <= {max_order} fits "
        f"{len(vals)} values"
    )


# ---------------------------------------------------------------------------
# generalized power sums


@dataclass(frozen=True)
class GeneralizedPowerSum:
    """a(n) = sum over terms of A_i(n) * alpha_i^n.

    ``terms`` is the explicit form: (root alpha_i, coefficients of the
    polynomial A_i in ascending powers of n).  The implicit form is a
    recurrence plus initial values.  At least one form must be present;
    either can be derived from the explicit one.
    """

    terms: Optional[tuple[tuple[Fraction, tuple[Fraction, ...]], ...]] = None
    recurrence: Optional[LinearRecurrence] = None
    initial: Optional[tuple[Fraction, ...]] = None

    @staticmethod
    def explicit(terms) -> "GeneralizedPowerSum":
        cleaned = []
        seen = set()
        for alpha, coeffs in terms:
            alpha = Fraction(alpha)
            if alpha == 0:
                raise ValueError("roots must be nonzero")
            if alpha in seen:
                raise ValueError("roots must be distinct")
            seen.add(alpha)
            poly = tuple(_fractions(coeffs))
            if not poly or all(c == 0 for c in poly):
                raise ValueError("term polynomials must be nonzero")
            cleaned.append((alpha, poly))
        return GeneralizedPowerSum(terms=tuple(cleaned))

    @staticmethod
    def implicit(recurrence: LinearRecurrence, initial) -> "GeneralizedPowerSum":
        init = tuple(_fractions(initial))
        if len(init) < recurrence.order:
            raise ValueError("need as many initial values as the order")
        return GeneralizedPowerSum(recurrence=recurrence, initial=init)

    def to_implicit(self) -> "GeneralizedPowerSum":
        """Companion form: s(x) = prod (1 - alpha_i x)^(deg A_i + 1)."""
        if self.recurrence is not None:
            return self
        sx = [Fraction(1)]
        for alpha, coeffs in self.terms:
            for _ in range(len(coeffs)):
                sx = [
                    (sx[t] if t < len(sx) else Fraction(0))
                    - alpha * (sx[t - 1] if t >= 1 else Fraction(0))
                    for t in range(len(sx) + 1)
                ]
        rec = LinearRecurrence(tuple(-c for c in sx[1:]))
        init = tuple(self.evaluate(n) for n in range(rec.order))
        return GeneralizedPowerSum(
            terms=self.terms, recurrence=rec, initial=init
        )

    def evaluate(self, n: int) -> Fraction:
        if self.terms is not None:
            total = Fraction(0)
            for alpha, coeffs in self.terms:
                aofn = sum(c * n**t for t, c in enumerate(coeffs))
                total += aofn * alpha**n
            return total
        rec, init = self.recurrence, self.initial
        if n < len(init):
            return init[n]
        return rec.extend(init, n + 1)[n]


def gps_evaluate(g: GeneralizedPowerSum, n: int) -> Fraction:
    return g.evaluate(n)


# ---------------------------------------------------------------------------
# zero patterns of recurrent sequences


def zero_pattern(
    values: Sequence, max_period: int = 12
) -> tuple[set[int], list[tuple[int, int]]]:
    """Empirical split of the zero set into full arithmetic progressions
    (first index, period) and sporadic zeros, within the data window only.

    The split has the shape the Skolem-Mahler-Lech theorem guarantees, but it
    is a window-scale observation, not a decision procedure.
    """
    vals = _fractions(values)
    if len(vals) < 2 * max_period:
        raise WindowTooSmall(
            f"need at least {2 * max_period} values to probe period {max_period}"
        )
    zeros = {n for n, v in enumerate(vals) if v == 0}
    covered: set[int] = set()
    progressions: list[tuple[int, int]] = []
    for period in range(1, max_period + 1):
        for rho in range(period):
            members = list(range(rho, len(vals), period))
            # longest zero suffix of the residue class; progressions may start late
            first = len(members)
            while first > 0 and members[first - 1] in zeros:
                first -= 1
            suffix = set(members[first:])
            if len(suffix) < 3 or suffix <= covered:
                continue
            progressions.append((members[first], period))
            covered |= suffix
    sporadic = zeros - covered
    return sporadic, progressions


# ---------------------------------------------------------------------------
# asymptotics of WKB combinations

# Coefficient polynomials in n are tuples of Fractions, ascending powers.


def _pstrip(p: Iterable[Fraction]) -> tuple[Fraction, ...]:
    q = list(p)
    while q and q[-1] == 0:
        q.pop()
    return tuple(q)


def _padd(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Fraction, ...]:
    out = [Fraction(0)] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return _pstrip(out)


def _pconv(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[Fraction, ...]:
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pstrip(out)


def _pscale(a: Sequence[Fraction], c: Fraction) -> tuple[Fraction, ...]:
    return _pstrip([x * c for x in a])


def _peval(a: Sequence[Fraction], n: int) -> Fraction:
    total = Fraction(0)
    for c in reversed(a):
        total = total * n + c
    return total


def _ps_val(entries: dict, theta: Optional[Fraction]) -> Optional[Fraction]:
    """Sound valuation lower bound of an {offset: polynomial} table;
    None stands for +infinity (the exact zero)."""
    if entries:
        return min(entries)
    return theta


def _ps_mul(
    a: dict, ta: Optional[Fraction], b: dict, tb: Optional[Fraction]
) -> tuple[dict, Optional[Fraction]]:
    """Multiply {offset: polynomial} tables with threshold propagation."""
    va, vb = _ps_val(a, ta), _ps_val(b, tb)
    if va is None or vb is None:
        return {}, None
    cands = []
    if ta is not None:
        cands.append(ta + vb)
    if tb is not None:
        cands.append(tb + va)
    theta = min(cands) if cands else None
    out: dict[Fraction, tuple[Fraction, ...]] = {}
    for ea, pa in a.items():
        for eb, pb in b.items():
            e = ea + eb
            if theta is not None and e >= theta:
                continue
            prod = _pconv(pa, pb)
            if prod:
                out[e] = _padd(out.get(e, ()), prod)
    return {e: p for e, p in out.items() if p}, theta


def _power_levels(
    base: QSeries, depth: Fraction
) -> tuple[dict, Optional[Fraction]]:
    """Coefficients of base^n below ``depth`` as {offset: polynomial in n}.

    ``base`` must have leading term 1 at exponent 0; the level at offset e
    collects n^m [q^e] log(base)^m / m!.  The returned threshold is None
    only when base is exactly 1: otherwise levels at or past it are either
    uncertified or simply not enumerated.
    """
    eps = base - ONE
    if eps.is_exact_zero():
        return {Fraction(0): (Fraction(1),)}, None
    theta = eps.threshold
    bound = depth if theta is None else min(theta, depth)
    levels: dict[Fraction, tuple[Fraction, ...]] = {Fraction(0): (Fraction(1),)}
    vb = eps.valuation_bound()
    if vb is None or vb >= bound:
        return levels, bound
    if vb <= 0:
        raise ValueError("power levels need a base of the form 1 + higher order")
    eps_c = eps.capped(bound)
    log_s = eps_c
    power = eps_c
    m = 1
    while True:
        m += 1
        power = (power * eps_c).capped(bound)
        pv = power.valuation_bound()
        if pv is None or pv >= bound:
            break
        log_s = log_s + power.scaled(Fraction((-1) ** (m + 1), m))
    pw = log_s
    m, fact = 1, 1
    while True:
        for e, c in pw.terms():
            if e < bound:
                mono = (Fraction(0),) * m + (c / fact,)
                levels[e] = _padd(levels.get(e, ()), mono)
        m += 1
        fact *= m
        pw = (pw * log_s).capped(bound)
        pv = pw.valuation_bound()
        if pv is None or pv >= bound:
            break
    return levels, bound


@dataclass(frozen=True)
class _Branch:
    """One candidate exponent level contributed by one member."""

    key: tuple[int, int, Fraction]  # (member, column, offset) identity
    gamma: Fraction
    slope: Fraction  # n-coefficient of the exponent: qdegree(lambda) + k/r
    offset: Fraction  # constant part of the exponent
    root: Fraction  # leading coefficient of lambda
    poly: tuple[Fraction, ...]  # coefficient polynomial in n


def _wkb_branches(combo: WKBSum, peel: Fraction):
    """Candidate levels plus certification floors of a combination.

    Floors are quadratics in n below which every omitted or uncertified
    contribution is known to sit; tail floors additionally carry the
    growth-bound margin condition of the member's omitted columns.
    """
    branches: list[_Branch] = []
    quad_floors: list[tuple[Fraction, Fraction, Fraction]] = []
    tail_floors: list[tuple[Fraction, Fraction, Fraction, Fraction, int]] = []
    for idx, (cq, s) in enumerate(combo.members):
        v_c = qdegree(cq)
        eta = qdegree(s.lam)
        mu = s.lam.coeffs[0]
        lam_tail = s.lam.shifted(-eta).scaled(Fraction(1) / mu)
        levels, lth = _power_levels(lam_tail, peel)
        cdict = {e - v_c: (c,) for e, c in cq.terms()}
        cth = None if cq.threshold is None else cq.threshold - v_c
        base, bth = _ps_mul(cdict, cth, levels, lth)
        for k in range(s.t_u):
            colth = None
            for row in s.phi:
                th = row[k].threshold
                if th is not None:
                    colth = th if colth is None else min(colth, th)
            coldict: dict[Fraction, tuple[Fraction, ...]] = {}
            for d, row in enumerate(s.phi):
                for e, c in row[k].terms():
                    if colth is not None and e >= colth:
                        continue
                    mono = (Fraction(0),) * d + (c,)
                    coldict[e] = _padd(coldict.get(e, ()), mono)
            coldict = {e: p for e, p in coldict.items() if p}
            slope = eta + Fraction(k, s.r)
            prod, pth = _ps_mul(base, bth, coldict, colth)
            for x, poly in prod.items():
                branches.append(
                    _Branch((idx, k, x), s.gamma, slope, v_c + x, mu, poly)
                )
            if pth is not None:
                quad_floors.append((s.gamma, slope, v_c + pth))
        cg = s.growth_bound()
        if cg is not None:
            kk = s.t_u
            tail_floors.append(
                (s.gamma, eta + Fraction(kk, s.r), v_c + kk * cg, cg, s.r)
            )
    return branches, quad_floors, tail_floors


def _floor_at(n: int, quad_floors, tail_floors):
    """Least exponent not certified at n (None when everything is); the
    flag marks an uncontrolled tail, where nothing at all is certified."""
    vals = [A * n * n + B * n + C for A, B, C in quad_floors]
    for A, B, C, cg, r in tail_floors:
        if cg + Fraction(n, r) <= 0:
            return None, True
        vals.append(A * n * n + B * n + C)
    return (min(vals) if vals else None), False


def _resolve_at(n: int, branches, floor_n):
    """Least level with a nonvanishing combined coefficient at n.

    Returns ((exponent, value, keys, group), first_level) where first_level
    is the least level regardless of vanishing; the first slot is None when
    the answer is not certified below the floor.
    """
    pool = sorted(
        ((b.gamma * n * n + b.slope * n + b.offset, b) for b in branches),
        key=lambda item: item[0],
    )
    first = None
    i = 0
    while i < len(pool):
        e = pool[i][0]
        if floor_n is not None and e >= floor_n:
            return None, first
        group = []
        while i < len(pool) and pool[i][0] == e:
            group.append(pool[i][1])
            i += 1
        if first is None:
            first = (frozenset(b.key for b in group), tuple(group))
        total = Fraction(0)
        for b in group:
            total += b.root**n * _peval(b.poly, n)
        if total != 0:
            return (e, total, frozenset(b.key for b in group), tuple(group)), first
    return None, first


def _fit_with_floor(
    deltas, max_period: int, max_skip: int, min_skip: int
) -> QuasiPolynomial:
    # Unresolved entries sit below min_skip and are never read by the fit.
    vals = [Fraction(0) if d is None else d for d in deltas]
    for period in range(1, max_period + 1):
        for skip in range(min_skip, max_skip + 1):
            fit = _try_fit(vals, period, skip)
            if fit is not None:
                return fit
    raise InconclusiveTruncation(
        f"no quadratic quasi-polynomial with period <= {max_period} matches "
        "the resolved degree window; competing branches may tie beyond the "
        "tracked precision"
    )


def _terms_by_root(group) -> dict[Fraction, tuple[Fraction, ...]]:
    acc: dict[Fraction, tuple[Fraction, ...]] = {}
    for b in group:
        acc[b.root] = _padd(acc.get(b.root, ()), b.poly)
    return {mu: p for mu, p in acc.items() if p}


def _parity_merge(even_terms: dict, odd_terms: dict) -> dict:
    """Combine per-parity power sums with the selector (1 +- (-1)^n)/2,
    which splits by parity while keeping every root rational."""
    total: dict[Fraction, tuple[Fraction, ...]] = {}
    for rho, terms in ((0, even_terms), (1, odd_terms)):
        for mu, poly in terms.items():
            half = _pscale(poly, Fraction(1, 2))
            total[mu] = _padd(total.get(mu, ()), half)
            flip = half if rho == 0 else _pscale(half, Fraction(-1))
            total[-mu] = _padd(total.get(-mu, ()), flip)
    return {mu: p for mu, p in total.items() if p}


def wkb_asymptotics(
    w: WKBSum,
    *,
    window: Optional[int] = None,
    max_period: int = 12,
    max_skip: int = 8,
    peel: Number = 2,
) -> tuple[QuasiPolynomial, GeneralizedPowerSum]:
    """Degree quasi-polynomial and leading-term power sum of a WKB combination.

    Each member of the (normalized) combination contributes candidate
    exponent levels gamma*n^2 + (eta + k/r)*n + x, where eta is the degree
    of its base lambda, k a table column and x a certified q-offset of
    coefficient * (lambda/lt(lambda))^n * column.  For every n in the probe
    window the least level whose combined coefficient does not vanish gives
    the degree, and that coefficient, a sum of mu^n times a rational
    polynomial over the tying members (mu = lt(lambda)), gives the leading
    term.  A vanishing combination pushes the competition one level deeper;
    the set of n where that happens must match an arithmetic-progression
    pattern (:func:`zero_pattern`), which is what lets the window answer
    stand for all large n.

    Returns (QuasiPolynomial, GeneralizedPowerSum).  The power sum has
    rational roots and reproduces the leading term from the first index
    where the winning branches settle (at most ``max_skip`` past the
    quasi-polynomial threshold, verified across the window).  ``peel``
    bounds how deep past each branch's own leading level cancellations may
    be chased.  Raises InconclusiveTruncation whenever the competition
    cannot be decided from the certified data.
    """
    if not isinstance(w, WKBSum):
        raise TypeError("wkb_asymptotics expects a WKBSum")
    peel = Fraction(peel)
    if peel <= 0:
        raise ValueError("peel depth must be positive")
    combo = w.normalized()
    if not combo.members:
        raise ValueError("an empty combination has no asymptotics")
    for cq, _ in combo.members:
        if cq.is_exact_zero():
            raise ValueError("member coefficients must be nonzero")
        if not cq.has_leading_term():
            raise InconclusiveTruncation(
                "a member coefficient is zero up to its truncation; the "
                "branch cannot be placed"
            )
    for a in range(len(combo.members)):
        for b in range(a + 1, len(combo.members)):
            sa, sb = combo.members[a][1], combo.members[b][1]
            if sa.gamma == sb.gamma and (sa.lam - sb.lam).is_tracked_zero():
                raise InconclusiveTruncation(
                    "two members share gamma and agree in lambda to the "
                    "tracked precision; their branches cannot be separated"
                )
    count = window if window is not None else 3 * max_period + max_skip + 4
    branches, quad_floors, tail_floors = _wkb_branches(combo, peel)
    deltas: list[Optional[Fraction]] = []
    values: list[Optional[Fraction]] = []
    wins: list = []
    firsts: list = []
    for n in range(count):
        floor_n, dead = _floor_at(n, quad_floors, tail_floors)
        res, first = (None, None) if dead else _resolve_at(n, branches, floor_n)
        if res is None:
            deltas.append(None)
            values.append(None)
            wins.append(None)
            firsts.append(first)
        else:
            e, total, sig, group = res
            deltas.append(e)
            values.append(total)
            wins.append((sig, group))
            firsts.append((first[0], first[1]))
    unresolved = [n for n, d in enumerate(deltas) if d is None]
    min_skip = max(unresolved) + 1 if unresolved else 0
    if min_skip > max_skip:
        raise InconclusiveTruncation(
            f"degree undecidable at n = {max(unresolved)} from the certified "
            f"data (allowed skip {max_skip})"
        )
    qp = _fit_with_floor(deltas, max_period, max_skip, min_skip)

    def _stable(ns) -> Optional[str]:
        w_sigs = {wins[n][0] for n in ns}
        if len(w_sigs) == 1:
            return "const"
        evens = {wins[n][0] for n in ns if n % 2 == 0}
        odds = {wins[n][0] for n in ns if n % 2 == 1}
        if len(evens) == 1 and len(odds) == 1:
            return "parity"
        return None

    start = mode = None
    for s in range(qp.threshold, min(qp.threshold + max_skip, count - 1) + 1):
        if count - s < 2 * max_period:
            break
        mode = _stable(range(s, count))
        if mode is not None:
            start = s
            break
    if start is None:
        raise InconclusiveTruncation(
            "winning branches do not settle into a residue pattern inside "
            "the probe window"
        )
    tail = range(start, count)
    deeper = [n for n in tail if wins[n][0] != firsts[n][0]]
    if deeper:
        if len({firsts[n][0] for n in tail}) != 1:
            raise InconclusiveTruncation(
                "the least-level branches cross inside the probe window; "
                "enlarge the window to separate them"
            )
        group0 = firsts[tail.start][1]
        vals0 = [
            sum(b.root**n * _peval(b.poly, n) for b in group0)
            for n in range(count)
        ]
        try:
            zero_pattern(vals0, max_period)
        except WindowTooSmall as exc:
            raise InconclusiveTruncation(
                "the cancellation pattern needs a larger window than supplied"
            ) from exc
        if {n for n in tail if vals0[n] == 0} != set(deeper):
            raise RuntimeError(
                "cancellation bookkeeping diverged from the level sums"
            )
    if mode == "const":
        terms = _terms_by_root(wins[tail.start][1])
    else:
        halves = []
        for rho in (0, 1):
            pick = next(n for n in tail if n % 2 == rho)
            halves.append(_terms_by_root(wins[pick][1]))
        terms = _parity_merge(halves[0], halves[1])
    if not terms:
        raise RuntimeError("no leading-term contributions survived grouping")
    gps = GeneralizedPowerSum.explicit(sorted(terms.items()))
    for n in tail:
        if gps.evaluate(n) != values[n]:
            raise RuntimeError(
                "the leading-term power sum failed its own window check"
            )
    return qp, gps


# ---------------------------------------------------------------------------
# the monomial-sequence criterion


def monomial_sequence_check(a: Sequence, b: Sequence) -> bool:
    """Criterion for (a_n q^(b_n)) to be q-holonomic at desk scale: the
    exponents must fit a quadratic quasi-polynomial and the coefficients must
    satisfy a constant-coefficient linear recurrence."""
    try:
        fit_quasi_polynomial(b)
        min_linear_recurrence(a)
    except (NoFit, NoRecurrence, WindowTooSmall):
        return False
    return True
