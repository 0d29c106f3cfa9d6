"""Noncommutative shift-operator algebra on q-sequences.

Operators are finite sums c * q^k * M^j * L^i acting on sequences by
(L f)_n = f_{n+1} and (M f)_n = q^n f_n, subject to L M = q M L.  The
normal form keeps M-powers to the left of L-powers.

Two representations coexist.  PolyOperator is the exact, file-facing
form: integer exponents, rational coefficients.  LocalOperator is the
analysis form: each L-power carries a truncated Laurent-Puiseux series
in M whose coefficients are QSeries, which is what slope splitting and
gauge changes need.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    LeadingCoefficientVanishes,
    NotRegularSingular,
    PrecisionRequired,
    RamificationError,
    TruncationUnderflow,
    ZeroOrTruncated,
)
from .lpoly import LPoly
from .series import (
    Number,
    ONE,
    QSeries,
    ZERO,
    divide,
    q_power,
    qs,
)

Term = tuple[int, int, int]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def _as_qseries(x) -> QSeries:
    if isinstance(x, QSeries):
        return x
    return qs(_as_fraction(x))


# ---------------------------------------------------------------------------
# exact operators


class PolyOperator:
    """Exact operator sum over a finite support of (i, j, k) triples."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Term, Number]):
        store: dict[Term, Fraction] = {}
        for (i, j, k), c in terms.items():
            if i < 0 or j < 0 or k < 0:
                raise ValueError("operator exponents must be naturals")
            c = _as_fraction(c)
            if c != 0:
                store[(int(i), int(j), int(k))] = c
        object.__setattr__(self, "_terms", store)

    def __setattr__(self, name, value):
        raise AttributeError("PolyOperator is immutable")

    @staticmethod
    def from_term_list(items: Iterable[tuple[int, int, int, Number]]) -> "PolyOperator":
        acc: dict[Term, Fraction] = {}
        for i, j, k, c in items:
            key = (i, j, k)
            acc[key] = acc.get(key, Fraction(0)) + _as_fraction(c)
        return PolyOperator(acc)

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def order(self) -> int:
        if not self._terms:
            raise ValueError("the zero operator has no order")
        return max(i for (i, _, _) in self._terms)

    @property
    def support(self) -> frozenset[Term]:
        return frozenset(self._terms)

    def terms(self) -> list[tuple[int, int, int, Fraction]]:
        return [(i, j, k, self._terms[(i, j, k)])
                for (i, j, k) in sorted(self._terms)]

    def l_support(self) -> list[int]:
        return sorted({i for (i, _, _) in self._terms})

    def coefficient(self, i: int, j: int, k: int) -> Fraction:
        return self._terms.get((i, j, k), Fraction(0))

    def coefficient_poly(self, i: int) -> dict[tuple[int, int], Fraction]:
        """The (M, q)-polynomial a_i as a {(j, k): c} mapping."""
        return {(j, k): c for (ii, j, k), c in self._terms.items() if ii == i}

    def eval_coefficient(self, i: int, n: int) -> QSeries:
        """a_i(q^n, q) as an exact polynomial in q."""
        return QSeries.from_terms(
            (k + j * n, c) for (j, k), c in self.coefficient_poly(i).items()
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyOperator):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"PolyOperator({self.to_text()!r})"

    # -- algebra -------------------------------------------------------------

    def __add__(self, other: "PolyOperator") -> "PolyOperator":
        acc = dict(self._terms)
        for key, c in other._terms.items():
            acc[key] = acc.get(key, Fraction(0)) + c
        return PolyOperator(acc)

    def __neg__(self) -> "PolyOperator":
        return PolyOperator({key: -c for key, c in self._terms.items()})

    def __sub__(self, other: "PolyOperator") -> "PolyOperator":
        return self + (-other)

    def __mul__(self, other: "PolyOperator") -> "PolyOperator":
        # (q^k1 M^j1 L^i1)(q^k2 M^j2 L^i2): L^i1 passes M^j2 at cost q^(i1*j2)
        acc: dict[Term, Fraction] = {}
        for (i1, j1, k1), c1 in self._terms.items():
            for (i2, j2, k2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2, k1 + k2 + i1 * j2)
                acc[key] = acc.get(key, Fraction(0)) + c1 * c2
        return PolyOperator(acc)

    def scale(self, c: Number) -> "PolyOperator":
        c = _as_fraction(c)
        return PolyOperator({key: c * v for key, v in self._terms.items()})

    # -- action --------------------------------------------------------------

    def apply(self, f, n: int) -> QSeries:
        """sum_i a_i(q^n, q) f_{n+i}, with f a callable or a sequence."""
        fam = _as_family(f)
        acc = ZERO
        for i in self.l_support():
            acc = acc + self.eval_coefficient(i, n) * fam(n + i)
        return acc

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "terms": [
                {"i": i, "j": j, "k": k, "c": f"{c.numerator}/{c.denominator}"}
                for i, j, k, c in self.terms()
            ]
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: Union[str, dict]) -> "PolyOperator":
        data = json.loads(text) if isinstance(text, str) else text
        return PolyOperator.from_term_list(
            (int(t["i"]), int(t["j"]), int(t["k"]), Fraction(t["c"]))
            for t in data["terms"]
        )

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts: list[str] = []
        for i, j, k in sorted(self._terms, reverse=True):
            c = self._terms[(i, j, k)]
            factors: list[str] = []
            if k:
                factors.append("q" if k == 1 else f"q^{k}")
            if j:
                factors.append("M" if j == 1 else f"M^{j}")
            if i:
                factors.append("L" if i == 1 else f"L^{i}")
            mag = abs(c)
            if mag != 1 or not factors:
                factors.insert(0, str(mag))
            body = " ".join(factors)
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(("+ " if c > 0 else "- ") + body)
        return " ".join(parts)


_FACTOR = re.compile(r"^(?:(?P<num>\d+(?:/\d+)?)|(?P<sym>[qML])(?:\^(?P<exp>\d+))?)$")


def parse_operator(text: str) -> PolyOperator:
    """Parse the human text form, e.g. ``q^4 M^3 L^2 - 2 M L + 1``.

    Factors within a term may appear in any order, separated by spaces
    or '*'; exponents are naturals.
    """
    text = text.strip()
    if text == "0":
        return PolyOperator({})
    items: list[tuple[int, int, int, Fraction]] = []
    for chunk in re.split(r"(?=[+-])", text):
        chunk = chunk.strip()
        if not chunk:
            continue
        sign = Fraction(1)
        while chunk and chunk[0] in "+-":
            if chunk[0] == "-":
                sign = -sign
            chunk = chunk[1:].strip()
        if not chunk:
            raise ValueError("dangling sign in operator text")
        coeff = sign
        expos = {"q": 0, "M": 0, "L": 0}
        for atom in re.split(r"[\s*]+", chunk):
            m = _FACTOR.match(atom)
            if not m:
                raise ValueError(f"cannot parse operator factor {atom!r}")
            if m.group("num"):
                coeff *= Fraction(m.group("num"))
            else:
                sym = m.group("sym")
                expos[sym] += int(m.group("exp")) if m.group("exp") else 1
        items.append((expos["L"], expos["M"], expos["q"], coeff))
    return PolyOperator.from_term_list(items)


L_OP = PolyOperator({(1, 0, 0): 1})
M_OP = PolyOperator({(0, 1, 0): 1})
ONE_OP = PolyOperator({(0, 0, 0): 1})


def _as_family(f) -> Callable[[int], QSeries]:
    if callable(f):
        return lambda n: _as_qseries(f(n))
    seq = f

    def fam(n: int) -> QSeries:
        if n < 0 or n >= len(seq):
            raise IndexError(f"sequence term {n} not supplied")
        return _as_qseries(seq[n])

    return fam


def unroll(
    P: PolyOperator,
    init: Sequence,
    N: int,
    prec: Optional[Number] = None,
) -> list[QSeries]:
    """Terms f_0..f_N of the sequence determined by P f = 0 and d seeds.

    With ``prec=None`` every division must be exact (polynomial
    solutions); otherwise terms are expanded below ``prec``.
    """
    d = P.order
    if len(init) != d:
        raise ValueError(f"need exactly {d} initial terms, got {len(init)}")
    out: list[QSeries] = [_as_qseries(x) for x in init]
    for n in range(0, N - d + 1):
        lead = P.eval_coefficient(d, n)
        if lead.is_exact_zero():
            raise LeadingCoefficientVanishes(n)
        num = ZERO
        for i in range(d):
            coeff = P.eval_coefficient(i, n)
            if not coeff.is_exact_zero():
                num = num + coeff * out[n + i]
        out.append(divide(-num, lead, prec))
    return out[: N + 1]


def reverse_operator(P: PolyOperator) -> PolyOperator:
    """Annihilator of n -> f_n(1/q), renormalized to natural exponents.

    Substituting q -> 1/q in sum c q^(k+jn) f_{n+i} = 0 and clearing
    q^(K+Jn) with J = max j, K = max k flips the support inside its
    bounding box.
    """
    if P.is_zero():
        return P
    J = max(j for (_, j, _) in P.support)
    K = max(k for (_, _, k) in P.support)
    return PolyOperator({(i, J - j, K - k): c for (i, j, k), c in P._terms.items()})


# ---------------------------------------------------------------------------
# Laurent-Puiseux series in M over QSeries


class MSeries:
    """Truncated series in M^(1/r) whose coefficients are QSeries.

    Mirrors the QSeries layout: ``coeffs[t]`` sits at M-exponent
    (v + t)/r; ``exact`` distinguishes a finite Laurent polynomial from a
    window that ends at the M-threshold (v + len)/r.  Entries that are
    exact zeros certify absence; entries that are tracked zeros carry
    their own q-side uncertainty.
    """

    __slots__ = ("r", "v", "coeffs", "exact")

    def __init__(self, r: int, v: int, coeffs: Iterable, exact: bool):
        if r < 1:
            raise ValueError("ramification must be >= 1")
        cs = [_as_qseries(c) for c in coeffs]
        if exact:
            while cs and cs[-1].is_exact_zero():
                cs.pop()
        lead = 0
        while lead < len(cs) and cs[lead].is_exact_zero():
            lead += 1
        if lead:
            v += lead
            cs = cs[lead:]
        if exact and not cs:
            object.__setattr__(self, "r", 1)
            object.__setattr__(self, "v", 0)
            object.__setattr__(self, "coeffs", ())
            object.__setattr__(self, "exact", True)
            return
        g = r
        for t, c in enumerate(cs):
            if not c.is_exact_zero():
                g = gcd(g, v + t)
        if not exact:
            g = gcd(g, v + len(cs))
        elif cs:
            g = gcd(g, v)
        if g > 1:
            cs = [cs[t] for t in range(0, len(cs), g)]
            v //= g
            r //= g
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, name, value):
        raise AttributeError("MSeries is immutable")

    @staticmethod
    def from_entries(
        entries: Iterable[tuple[Number, Union[QSeries, Number]]],
        truncation: Optional[Number] = None,
    ) -> "MSeries":
        items = [(_as_fraction(e), _as_qseries(c)) for e, c in entries]
        theta = None if truncation is None else _as_fraction(truncation)
        if theta is not None:
            items = [(e, c) for e, c in items if e < theta]
        r = 1
        for e, _ in items:
            r = lcm(r, e.denominator)
        if theta is not None:
            r = lcm(r, theta.denominator)
        if not items:
            if theta is None:
                return MSeries(1, 0, (), True)
            return MSeries(r, int(theta * r), (), False)
        numerators = [int(e * r) for e, _ in items]
        v = min(numerators)
        top = int(theta * r) if theta is not None else max(numerators) + 1
        arr: list[QSeries] = [ZERO] * (top - v)
        for num, (_, c) in zip(numerators, items):
            arr[num - v] = arr[num - v] + c
        return MSeries(r, v, arr, theta is None)

    @staticmethod
    def from_qseries(c: QSeries, exp: Number = 0) -> "MSeries":
        return MSeries.from_entries([(exp, c)])

    # -- inspection ----------------------------------------------------------

    @property
    def threshold(self) -> Optional[Fraction]:
        if self.exact:
            return None
        return Fraction(self.v + len(self.coeffs), self.r)

    def is_exact_zero(self) -> bool:
        return self.exact and not self.coeffs

    def has_certified_term(self) -> bool:
        return any(c.has_leading_term() for c in self.coeffs)

    def m_valuation(self) -> Optional[Fraction]:
        """Exponent of the first certainly-nonzero entry.

        None when exactly zero; PrecisionRequired when a leading entry is
        zero only up to its q-truncation, so the valuation is uncertain.
        """
        for t, c in enumerate(self.coeffs):
            if c.is_exact_zero():
                continue
            if c.has_leading_term():
                return Fraction(self.v + t, self.r)
            raise PrecisionRequired(
                f"entry at M^{Fraction(self.v + t, self.r)} is zero only up to "
                "its q-truncation; M-valuation uncertain"
            )
        if self.exact:
            return None
        raise PrecisionRequired("series is zero up to its M-truncation")

    def valuation_bound(self) -> Optional[Fraction]:
        for t, c in enumerate(self.coeffs):
            if not c.is_exact_zero():
                return Fraction(self.v + t, self.r)
        if self.exact:
            return None
        return self.threshold

    def entries(self):
        """Yield (M-exponent, QSeries) for entries that are not exact zeros."""
        for t, c in enumerate(self.coeffs):
            if not c.is_exact_zero():
                yield Fraction(self.v + t, self.r), c

    def m_coefficient(self, e: Number) -> QSeries:
        e = _as_fraction(e)
        theta = self.threshold
        if theta is not None and e >= theta:
            raise ZeroOrTruncated(f"M-coefficient at {e} is beyond the threshold {theta}")
        num = e * self.r
        if num.denominator != 1:
            return ZERO
        t = int(num) - self.v
        if 0 <= t < len(self.coeffs):
            return self.coeffs[t]
        return ZERO

    def __eq__(self, other) -> bool:
        if not isinstance(other, MSeries):
            return NotImplemented
        return (self.r, self.v, self.coeffs, self.exact) == (
            other.r, other.v, other.coeffs, other.exact,
        )

    def __hash__(self) -> int:
        return hash((self.r, self.v, self.coeffs, self.exact))

    def __repr__(self) -> str:
        return f"MSeries({self.to_text()!r})"

    def to_text(self) -> str:
        parts = [f"({c.to_text()})*M^({Fraction(self.v + t, self.r)})"
                 for t, c in enumerate(self.coeffs) if not c.is_exact_zero()]
        theta = self.threshold
        if theta is not None:
            parts.append(f"O(M^({theta}))")
        return " + ".join(parts) if parts else "0"

    # -- lattice management ----------------------------------------------------

    def shifted(self, e: Number) -> "MSeries":
        """Multiply by M**e, widening the lattice if the shift needs it."""
        e = _as_fraction(e)
        num = e * self.r
        if num.denominator == 1:
            return MSeries(self.r, self.v + int(num), self.coeffs, self.exact)
        theta = self.threshold
        return MSeries.from_entries(
            ((exp + e, c) for exp, c in self.entries()),
            truncation=None if theta is None else theta + e,
        )

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other: "MSeries") -> "MSeries":
        thetas = [t for t in (self.threshold, other.threshold) if t is not None]
        theta = min(thetas) if thetas else None
        return MSeries.from_entries(
            list(self.entries()) + list(other.entries()), truncation=theta
        )

    def __neg__(self) -> "MSeries":
        return MSeries(self.r, self.v, tuple(-c for c in self.coeffs), self.exact)

    def __sub__(self, other: "MSeries") -> "MSeries":
        return self + (-other)

    def __mul__(self, other: "MSeries") -> "MSeries":
        if self.is_exact_zero() or other.is_exact_zero():
            return MSeries(1, 0, (), True)
        # windows: theta(ab) = min(theta_a + v(b), theta_b + v(a))
        theta = None
        ta, vb = self.threshold, other.valuation_bound()
        if ta is not None:
            theta = ta + (vb if vb is not None else Fraction(0))
        tb, va = other.threshold, self.valuation_bound()
        if tb is not None:
            cand = tb + (va if va is not None else Fraction(0))
            theta = cand if theta is None else min(theta, cand)
        acc: dict[Fraction, QSeries] = {}
        for e1, c1 in self.entries():
            for e2, c2 in other.entries():
                e = e1 + e2
                if theta is not None and e >= theta:
                    continue
                prod = c1 * c2
                acc[e] = acc[e] + prod if e in acc else prod
        return MSeries.from_entries(acc.items(), truncation=theta)

    def scale_q(self, c: Union[QSeries, Number]) -> "MSeries":
        c = _as_qseries(c)
        if c.is_exact_zero():
            return MSeries(1, 0, (), True) if self.exact else MSeries(
                self.r, self.v + len(self.coeffs), (), False
            )
        return MSeries(
            self.r, self.v, tuple(x * c for x in self.coeffs), self.exact
        )

    def twist(self, w: Number) -> "MSeries":
        """Substitute M -> q^w M (the conjugation by L^w)."""
        w = _as_fraction(w)
        if w == 0:
            return self
        return MSeries(
            self.r,
            self.v,
            tuple(
                c * q_power(w * Fraction(self.v + t, self.r))
                for t, c in enumerate(self.coeffs)
            ),
            self.exact,
        )

    def truncated(self, theta: Number) -> "MSeries":
        theta = _as_fraction(theta)
        own = self.threshold
        if own is not None and own <= theta:
            return self
        return MSeries.from_entries(self.entries(), truncation=theta)

    def capped(self, theta: Number) -> "MSeries":
        theta = _as_fraction(theta)
        if self.exact:
            if not self.coeffs:
                return self
            if Fraction(self.v + len(self.coeffs) - 1, self.r) < theta:
                return self
        return self.truncated(theta)

    def truncated_q(self, theta: Number) -> "MSeries":
        return MSeries(
            self.r, self.v, tuple(c.truncated(theta) for c in self.coeffs), self.exact
        )

    def agrees(self, other: "MSeries") -> bool:
        """Equality on the shared certified window (M-side and q-side)."""
        thetas = [t for t in (self.threshold, other.threshold) if t is not None]
        theta = min(thetas) if thetas else None
        exps = {e for e, _ in self.entries()} | {e for e, _ in other.entries()}
        for e in sorted(exps):
            if theta is not None and e >= theta:
                continue
            if not _qs_agree(self.m_coefficient(e), other.m_coefficient(e)):
                return False
        return True

    # -- evaluation ------------------------------------------------------------

    def eval_at_qn(self, n: int) -> QSeries:
        """Substitute M = q^n.

        The M-tail beyond the threshold contributes unknown q-terms from
        exponent n*theta_M + floor on, where floor is the least q-valuation
        bound seen among tracked entries (assumed to bound the tail too;
        exact series need no such assumption).
        """
        acc = ZERO
        floor = Fraction(0)
        for t, c in enumerate(self.coeffs):
            e = Fraction(self.v + t, self.r)
            vb = c.valuation_bound()
            if vb is not None:
                floor = min(floor, vb)
            acc = acc + c * q_power(n * e)
        theta = self.threshold
        if theta is not None:
            acc = acc.truncated(n * theta + floor)
        return acc

    # -- division ----------------------------------------------------------------

    def divide(
        self,
        other: "MSeries",
        m_prec: Optional[Number] = None,
        q_prec: Optional[Number] = None,
    ) -> "MSeries":
        """Long division in M; q-side divisions degrade per series rules."""
        if other.is_exact_zero():
            raise ZeroDivisionError("division by the exact zero series")
        vb = other.m_valuation()
        if vb is None:
            raise ZeroDivisionError("division by the exact zero series")
        b0 = other.m_coefficient(vb)
        if self.is_exact_zero():
            return self
        if self.exact and other.exact and m_prec is not None:
            # m_prec is a fallback depth, not a forced truncation: exact
            # quotients are returned whenever they exist
            try:
                return self.divide(other, None, q_prec)
            except PrecisionRequired:
                pass
        va = self.valuation_bound()
        cands = []
        ta = self.threshold
        if ta is not None:
            cands.append(ta - vb)
        tbt = other.threshold
        if tbt is not None and va is not None:
            cands.append(tbt - 2 * vb + va)
        if m_prec is not None:
            cands.append(_as_fraction(m_prec))
        theta = min(cands) if cands else None

        quotient: dict[Fraction, QSeries] = {}
        rem = self
        guard = 0
        limit_exact = None
        if theta is None:
            # fully exact operands: the quotient exponent cannot exceed this
            top_a = Fraction(self.v + len(self.coeffs) - 1, self.r)
            limit_exact = top_a - vb

        def drop_slot(series: "MSeries", exp: Fraction) -> "MSeries":
            return MSeries.from_entries(
                ((e2, c2) for e2, c2 in series.entries() if e2 != exp),
                truncation=series.threshold,
            )

        while True:
            guard += 1
            if guard > 10000:
                raise RuntimeError("M-division failed to terminate")
            slot = next(iter(rem.entries()), None)
            if slot is None:
                break
            e, c = slot
            qexp = e - vb
            if theta is not None and qexp >= theta:
                break
            if limit_exact is not None and qexp > limit_exact:
                raise PrecisionRequired(
                    "exact M-division leaves a remainder; pass m_prec for an expansion"
                )
            if not c.has_leading_term():
                # unknown q-content here limits the quotient at this M-slot
                if qexp not in quotient:
                    b0v = b0.valuation_bound() or Fraction(0)
                    quotient[qexp] = ZERO.truncated(c.threshold - b0v)
                rem = drop_slot(rem, e)
                continue
            qc = divide(c, b0, q_prec)
            quotient[qexp] = qc
            rem = rem - other * MSeries.from_entries([(qexp, qc)])
        return MSeries.from_entries(quotient.items(), truncation=theta)


def _qs_agree(a: QSeries, b: QSeries) -> bool:
    thetas = [t for t in (a.threshold, b.threshold) if t is not None]
    if not thetas:
        return a == b
    t = min(thetas)
    return a.truncated(t) == b.truncated(t)


M_ZERO = MSeries(1, 0, (), True)
M_ONE = MSeries(1, 0, (ONE,), True)


# ---------------------------------------------------------------------------
# truncated local operators


class LocalOperator:
    """Operator sum a_i(M, q) L^i with MSeries coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[MSeries]):
        cs = list(coeffs)
        for c in cs:
            if not isinstance(c, MSeries):
                raise TypeError("LocalOperator coefficients must be MSeries")
        while cs and cs[-1].is_exact_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("LocalOperator is immutable")

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def order(self) -> int:
        if not self.coeffs:
            raise ValueError("the zero operator has no order")
        return len(self.coeffs) - 1

    def coefficient(self, i: int) -> MSeries:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return M_ZERO

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalOperator):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "LocalOperator(0)"
        parts = [f"[{c.to_text()}] L^{i}" for i, c in enumerate(self.coeffs)]
        return "LocalOperator(" + " + ".join(parts) + ")"

    def agrees(self, other: "LocalOperator") -> bool:
        n = max(len(self.coeffs), len(other.coeffs))
        return all(
            self.coefficient(i).agrees(other.coefficient(i)) for i in range(n)
        )

    # -- algebra -----------------------------------------------------------------

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        n = max(len(self.coeffs), len(other.coeffs))
        return LocalOperator(
            self.coefficient(i) + other.coefficient(i) for i in range(n)
        )

    def __neg__(self) -> "LocalOperator":
        return LocalOperator(-c for c in self.coeffs)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        return self + (-other)

    def __mul__(self, other: "LocalOperator") -> "LocalOperator":
        if self.is_zero() or other.is_zero():
            return LocalOperator(())
        out = [M_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_exact_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_exact_zero():
                    continue
                out[i + j] = out[i + j] + a * b.twist(i)
        result = LocalOperator(out)
        if not result.is_zero() and not any(
            c.has_certified_term() for c in result.coeffs
        ):
            raise TruncationUnderflow(
                "operator product retains no certified coefficients"
            )
        return result

    def scale(self, m: Union[MSeries, QSeries, Number]) -> "LocalOperator":
        if not isinstance(m, MSeries):
            m = MSeries.from_qseries(_as_qseries(m))
        return LocalOperator(m * c for c in self.coeffs)

    # -- action ------------------------------------------------------------------

    def apply(self, f, n: int) -> QSeries:
        fam = _as_family(f)
        acc = ZERO
        for i, a in enumerate(self.coeffs):
            if not a.is_exact_zero():
                acc = acc + a.eval_at_qn(n) * fam(n + i)
        return acc

    # -- normalization -----------------------------------------------------------

    def make_monic(
        self,
        m_prec: Optional[Number] = None,
        q_prec: Optional[Number] = None,
    ) -> "LocalOperator":
        if self.is_zero():
            raise ValueError("cannot normalize the zero operator")
        lead = self.coeffs[-1]
        return LocalOperator(
            c.divide(lead, m_prec, q_prec) for c in self.coeffs
        )

    def m_ramification(self) -> int:
        r = 1
        for c in self.coeffs:
            r = lcm(r, c.r)
        return r

    def truncated_m(self, theta: Number) -> "LocalOperator":
        return LocalOperator(c.truncated(theta) for c in self.coeffs)

    def truncated_q(self, theta: Number) -> "LocalOperator":
        return LocalOperator(c.truncated_q(theta) for c in self.coeffs)


def embed(P: PolyOperator) -> LocalOperator:
    """Lossless PolyOperator -> LocalOperator conversion."""
    if P.is_zero():
        return LocalOperator(())
    out = []
    for i in range(P.order + 1):
        poly = P.coefficient_poly(i)
        out.append(
            MSeries.from_entries(
                (j, QSeries.from_terms([(k, c)]))
                for (j, k), c in sorted(poly.items())
            )
        )
    return LocalOperator(out)


def gauge_transform(
    P: Union[PolyOperator, LocalOperator],
    gamma: Number,
    eta: Number,
    lam: QSeries = ONE,
    r_m: Optional[int] = None,
) -> LocalOperator:
    """Coefficients of the equation satisfied by g when f_n = q^(γn²+ηn) λ^n g_n.

    Each a_i picks up q^(γi²+ηi) λ^i M^(2γi); the shift 2γ must land on
    the M-lattice (the operator's own unless a wider ``r_m`` is passed
    explicitly) or RamificationError is raised.
    """
    gamma, eta = _as_fraction(gamma), _as_fraction(eta)
    if not isinstance(lam, QSeries):
        lam = _as_qseries(lam)
    if not lam.has_leading_term():
        raise ValueError("gauge scale must have a certified nonzero leading term")
    op = embed(P) if isinstance(P, PolyOperator) else P
    if op.is_zero():
        return op
    if r_m is None:
        r_m = op.m_ramification()
    if (2 * gamma * r_m).denominator != 1:
        raise RamificationError(
            f"gauge shift M^{2 * gamma} leaves the M-lattice 1/{r_m}; "
            "pass a compatible r_m to authorize the finer lattice"
        )
    out = []
    lam_pow = ONE
    for i, a in enumerate(op.coeffs):
        if i:
            lam_pow = lam_pow * lam
        if a.is_exact_zero():
            out.append(a)
            continue
        shift = 2 * gamma * i
        factor = q_power(gamma * i * i + eta * i) * lam_pow
        out.append(a.scale_q(factor).shifted(shift))
    return LocalOperator(out)


def slim_part(P: LocalOperator) -> LPoly:
    """Constant-M-level content of a regular-singular operator.

    Extracts the common M-valuation coefficient of every a_i after
    checking the Newton polygon is a single horizontal edge.
    """
    if P.is_zero():
        raise NotRegularSingular("the zero operator has no slim part")
    vals: list[Optional[Fraction]] = []
    for a in P.coeffs:
        vals.append(a.m_valuation() if not a.is_exact_zero() else None)
    if vals[0] is None or vals[-1] is None:
        raise NotRegularSingular("Newton polygon endpoints are missing")
    h = vals[0]
    if vals[-1] != h or any(v is not None and v < h for v in vals):
        raise NotRegularSingular(
            f"M-valuations {vals} do not form a single horizontal edge"
        )
    return LPoly(
        a.m_coefficient(h) if v is not None and v == h else ZERO
        for a, v in zip(P.coeffs, vals)
    )
