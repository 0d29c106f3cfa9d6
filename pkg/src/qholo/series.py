"""Truncated Puiseux series in q over exact rationals.

This module is the arithmetic bedrock of the toolkit.  A :class:`QSeries`
stores finitely many exact rational coefficients on the exponent lattice
(1/r)*Z together with either an exactness flag (the series is a polynomial,
fully known) or a truncation threshold theta: coefficients at exponents
below theta are known exactly, everything at or beyond theta is *unknown* --
not zero.  Every arithmetic operation propagates the tightest threshold that
is actually guaranteed:

* ``a + b`` is certified below ``min(theta_a, theta_b)``;
* ``a * b`` is certified below ``min(theta_a + val(b), theta_b + val(a))``;
* ``1 / a`` (unit ``a``) is certified below ``theta_a - 2*val(a)``.

A series whose tracked window is all zero ("zero up to truncation") is a
distinct observable state from the exact zero polynomial, and degree queries
on either raise :class:`~qholo.errors.ZeroOrTruncated` rather than guess.

No floating point is used anywhere.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Iterator, Optional, Union

from .errors import (
    NotDivisible,
    NotPolynomial,
    PrecisionRequired,
    TruncationUnderflow,
    ZeroOrTruncated,
)

#: Exact rational scalar type used throughout the toolkit.
Rational = Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)

Number = Union[int, Fraction]


def _as_fraction(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class QSeries:
    """A truncated Puiseux series in q with exact rational coefficients.

    Attributes
    ----------
    r:
        Ramification index; exponents live on the lattice (1/r)*Z.
    v:
        Exponent numerator of the first stored coefficient (valuation
        numerator when the series has a nonzero tracked term).
    coeffs:
        Tuple of Fractions; ``coeffs[k]`` is the coefficient of
        ``q**((v + k)/r)``.
    exact:
        True for a fully known polynomial.  False means coefficients at
        exponents >= (v + len(coeffs))/r are unknown.
    """

    __slots__ = ("r", "v", "coeffs", "exact")

    def __init__(self, r: int, v: int, coeffs: Iterable[Number], exact: bool):
        if r < 1:
            raise ValueError("ramification must be >= 1")
        cs = [_as_fraction(c) for c in coeffs]
        if exact:
            while cs and cs[-1] == 0:
                cs.pop()
        lead = 0
        while lead < len(cs) and cs[lead] == 0:
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
        # Reduce the ramification so equal series compare equal structurally.
        g = r
        for k, c in enumerate(cs):
            if c != 0:
                g = gcd(g, v + k)
        if not exact:
            g = gcd(g, v + len(cs))
        elif cs:
            g = gcd(g, v)  # v is a nonzero-coefficient exponent already
        if g > 1:
            cs = [cs[k] for k in range(0, len(cs), g)]
            if not exact:
                # window length is divisible by g (both endpoints are)
                pass
            v //= g
            r //= g
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "exact", exact)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("QSeries is immutable")

    # --- constructors ------------------------------------------------------

    @staticmethod
    def from_terms(
        terms: Iterable[tuple[Number, Number]],
        truncation: Optional[Number] = None,
    ) -> "QSeries":
        """Build a series from (exponent, coefficient) pairs.

        ``truncation=None`` yields an exact polynomial; otherwise terms at
        exponents >= truncation are discarded and the result carries that
        threshold.
        """
        items = [(_as_fraction(e), _as_fraction(c)) for e, c in terms]
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
                return QSeries(1, 0, (), True)
            return QSeries(r, int(theta * r), (), False)
        numerators = [int(e * r) for e, _ in items]
        v = min(numerators)
        top = int(theta * r) if theta is not None else max(numerators) + 1
        arr = [_ZERO] * (top - v)
        for num, (_, c) in zip(numerators, items):
            arr[num - v] += c
        return QSeries(r, v, arr, theta is None)

    # --- inspection ----------------------------------------------------------

    @property
    def threshold(self) -> Optional[Fraction]:
        """First unknown exponent, or None for an exact polynomial."""
        if self.exact:
            return None
        return Fraction(self.v + len(self.coeffs), self.r)

    def is_exact_zero(self) -> bool:
        return self.exact and not self.coeffs

    def is_tracked_zero(self) -> bool:
        """True when no tracked coefficient is nonzero (zero up to truncation)."""
        return not self.coeffs

    def has_leading_term(self) -> bool:
        return bool(self.coeffs)

    def valuation_bound(self) -> Optional[Fraction]:
        """A sound lower bound for the valuation; None means +infinity."""
        if self.coeffs:
            return Fraction(self.v, self.r)
        if self.exact:
            return None
        return self.threshold

    def terms(self) -> Iterator[tuple[Fraction, Fraction]]:
        """Yield (exponent, coefficient) for nonzero tracked terms, ascending."""
        for k, c in enumerate(self.coeffs):
            if c != 0:
                yield Fraction(self.v + k, self.r), c

    def coefficient(self, e: Number) -> Fraction:
        """Coefficient of q**e; raises ZeroOrTruncated beyond the threshold."""
        e = _as_fraction(e)
        theta = self.threshold
        if theta is not None and e >= theta:
            raise ZeroOrTruncated(f"coefficient of q^({e}) is beyond the threshold")
        num = e * self.r
        if num.denominator != 1:
            return _ZERO
        k = int(num) - self.v
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return _ZERO

    # --- lattice utilities ---------------------------------------------------

    def _stretched(self, r2: int) -> tuple[int, list[Fraction]]:
        """Return (v, coeffs) of this series on the finer lattice (1/r2)Z."""
        m = r2 // self.r
        if m == 1:
            return self.v, list(self.coeffs)
        out = [_ZERO] * ((len(self.coeffs) - 1) * m + 1 if self.coeffs else 0)
        for k, c in enumerate(self.coeffs):
            out[k * m] = c
        return self.v * m, out

    def with_ramification(self, r2: int) -> "QSeries":
        if r2 % self.r:
            raise ValueError("new ramification must be a multiple of the old")
        v2, cs = self._stretched(r2)
        if self.exact:
            return QSeries(r2, v2, cs, True)
        pad = int(self.threshold * r2) - (v2 + len(cs))
        return QSeries(r2, v2, cs + [_ZERO] * pad, False)

    # --- ring operations -------------------------------------------------------

    def _coerce(self, other) -> Optional["QSeries"]:
        if isinstance(other, QSeries):
            return other
        if isinstance(other, (int, Fraction)):
            return QSeries(1, 0, (other,), True)
        return None

    def __add__(self, other) -> "QSeries":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_exact_zero():
            return o
        if o.is_exact_zero():
            return self
        R = lcm(self.r, o.r)
        va, ca = self._stretched(R)
        vb, cb = o._stretched(R)
        tops = []
        if not self.exact:
            tops.append(int(self.threshold * R))
        if not o.exact:
            tops.append(int(o.threshold * R))
        ends = []
        if ca:
            ends.append(va + len(ca))
        if cb:
            ends.append(vb + len(cb))
        top = min(tops) if tops else (max(ends) if ends else 0)
        starts = [w for w, arr in ((va, ca), (vb, cb)) if arr]
        if not starts:
            if tops:
                return QSeries(R, top, (), False)
            return QSeries(1, 0, (), True)
        start = min(starts + [top])
        out = [_ZERO] * (top - start)
        for w, arr in ((va, ca), (vb, cb)):
            for k, c in enumerate(arr):
                pos = w + k - start
                if 0 <= pos < len(out):
                    out[pos] += c
        return QSeries(R, start, out, not tops)

    __radd__ = __add__

    def __neg__(self) -> "QSeries":
        return QSeries(self.r, self.v, [-c for c in self.coeffs], self.exact)

    def __sub__(self, other) -> "QSeries":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "QSeries":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other) -> "QSeries":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_exact_zero() or o.is_exact_zero():
            return QSeries(1, 0, (), True)
        # threshold of the product: min over (theta_a + val(b), theta_b + val(a))
        theta = None
        for s, t in ((self, o), (o, self)):
            if s.exact:
                continue
            bound = s.threshold + t.valuation_bound() if t.valuation_bound() is not None else None
            if bound is not None and (theta is None or bound < theta):
                theta = bound
        R = lcm(self.r, o.r)
        va, ca = self._stretched(R)
        vb, cb = o._stretched(R)
        if not ca or not cb:
            # at least one factor is zero up to truncation
            if theta is None:
                return QSeries(1, 0, (), True)
            tn = theta * R
            return QSeries(R, int(tn), (), False)
        v = va + vb
        if theta is None:
            width = len(ca) + len(cb) - 1
        else:
            width = int(theta * R) - v
            if width <= 0:
                return QSeries(R, v + width, (), False)
        out = [_ZERO] * width
        # iterate over the sparser factor's nonzero entries
        if sum(1 for c in ca if c) > sum(1 for c in cb if c):
            ca, cb = cb, ca
        for i, ci in enumerate(ca):
            if ci == 0 or i >= width:
                continue
            stop = min(len(cb), width - i)
            for j in range(stop):
                cj = cb[j]
                if cj != 0:
                    out[i + j] += ci * cj
        return QSeries(R, v, out, theta is None)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QSeries":
        if not isinstance(n, int) or n < 0:
            raise ValueError("QSeries power expects a nonnegative integer")
        result = QSeries(1, 0, (_ONE,), True)
        base = self
        while n:
            if n & 1:
                result = result * base
            base_needed = n >> 1
            if base_needed:
                base = base * base
            n >>= 1
        return result

    def __truediv__(self, other) -> "QSeries":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return divide(self, o)

    # --- division family ---------------------------------------------------

    def inverse(self, prec: Optional[Number] = None) -> "QSeries":
        return divide(QSeries(1, 0, (_ONE,), True), self, prec)

    def exact_div(self, other: "QSeries") -> "QSeries":
        """Exact polynomial division; raises NotDivisible on a remainder."""
        o = self._coerce(other)
        if not (self.exact and o.exact):
            raise NotPolynomial("exact_div needs exact polynomials")
        if o.is_exact_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_exact_zero():
            return self
        R = lcm(self.r, o.r)
        va, A = self._stretched(R)
        vb, B = o._stretched(R)
        if len(A) < len(B):
            raise NotDivisible("denominator has higher degree")
        rem = list(A)
        b0 = B[0]
        qlen = len(A) - len(B) + 1
        quot = [_ZERO] * qlen
        for k in range(qlen):
            c = rem[k]
            if c == 0:
                continue
            c /= b0
            quot[k] = c
            for j, bj in enumerate(B):
                if bj != 0:
                    rem[k + j] -= c * bj
        if any(c != 0 for c in rem[qlen:]):
            raise NotDivisible("nonzero remainder")
        return QSeries(R, va - vb, quot, True)

    # --- truncation management -----------------------------------------------

    def truncated(self, theta: Number) -> "QSeries":
        """Forget everything at exponents >= theta (result is inexact)."""
        theta = _as_fraction(theta)
        own = self.threshold
        if own is not None and own <= theta:
            return self
        return QSeries.from_terms(self.terms(), truncation=theta)

    def capped(self, theta: Number) -> "QSeries":
        """Like :meth:`truncated`, but an exact polynomial that fits below
        theta is returned unchanged (exactness is strictly more information)."""
        theta = _as_fraction(theta)
        if self.exact:
            if not self.coeffs:
                return self
            if Fraction(self.v + len(self.coeffs) - 1, self.r) < theta:
                return self
        return self.truncated(theta)

    def shifted(self, e: Number) -> "QSeries":
        """Multiply by q**e."""
        e = _as_fraction(e)
        R = lcm(self.r, e.denominator)
        v, cs = self._stretched(R)
        if not self.exact:
            pad = int(self.threshold * R) - (v + len(cs))
            cs = cs + [_ZERO] * pad
        return QSeries(R, v + int(e * R), cs, self.exact)

    def scaled(self, c: Number) -> "QSeries":
        c = _as_fraction(c)
        if c == 0:
            if self.exact:
                return QSeries(1, 0, (), True)
            return QSeries(self.r, self.v, [_ZERO] * len(self.coeffs), False)
        return QSeries(self.r, self.v, [c * x for x in self.coeffs], self.exact)

    def reverse(self) -> "QSeries":
        """q -> 1/q followed by multiplication by q**maxdeg (exact only)."""
        if not self.exact:
            raise NotPolynomial("reverse needs an exact polynomial")
        if self.is_exact_zero():
            return self
        return QSeries(self.r, 0, list(reversed(self.coeffs)), True)

    # --- comparisons ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (
            self.r == o.r
            and self.v == o.v
            and self.coeffs == o.coeffs
            and self.exact == o.exact
        )

    def __hash__(self):
        return hash((self.r, self.v, self.coeffs, self.exact))

    # --- text form -------------------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form, e.g. ``2 - 1*q^(2) + O(q^(7/2))``."""
        pieces: list[str] = []
        for e, c in self.terms():
            body = str(abs(c)) if e == 0 else f"{abs(c)}*q^({e})"
            if not pieces:
                pieces.append(body if c > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if c > 0 else f"- {body}")
        theta = self.threshold
        if theta is not None:
            pieces.append(f"+ O(q^({theta}))" if pieces else f"O(q^({theta}))")
        if not pieces:
            return "0"
        return " ".join(pieces)

    def __repr__(self) -> str:
        return f"QSeries[{self.to_text()}]"


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def divide(a: QSeries, b: QSeries, prec: Optional[Number] = None) -> QSeries:
    """Series division a/b.

    ``b`` must be a unit up to truncation (nonzero leading tracked
    coefficient).  When both operands are exact, either the division is
    exact (polynomial quotient) or an explicit ``prec`` threshold is
    required to decide how far to expand the power series.
    """
    if b.is_tracked_zero():
        raise ZeroOrTruncated("division by a series with no tracked leading term")
    if a.exact and b.exact:
        # prec is a fallback depth, not a forced truncation: an exact
        # quotient is returned whenever one exists
        try:
            return a.exact_div(b)
        except NotDivisible:
            if prec is None:
                raise PrecisionRequired(
                    "exact operands do not divide; pass prec for a series "
                    "quotient"
                ) from None
    cands = []
    delta_b = Fraction(b.v, b.r)
    if not a.exact:
        cands.append(a.threshold - delta_b)
    if not b.exact:
        va = a.valuation_bound()
        if va is None:
            return QSeries(1, 0, (), True) if a.is_exact_zero() else a
        cands.append(b.threshold - 2 * delta_b + va)
    if prec is not None:
        cands.append(_as_fraction(prec))
    theta = min(cands)
    if a.is_exact_zero():
        return QSeries(1, 0, (), True)
    R = lcm(lcm(a.r, b.r), theta.denominator)
    va, A = a._stretched(R)
    vb, B = b._stretched(R)
    if not A:
        # numerator zero up to its own window: quotient zero up to theta
        return QSeries(R, int(theta * R), (), False)
    vq = va - vb
    width = int(theta * R) - vq
    if width <= 0:
        return QSeries(R, vq + width, (), False)
    A = A + [_ZERO] * max(0, width - len(A))
    out = [_ZERO] * width
    b0 = B[0]
    for k in range(width):
        c = A[k]
        if c != 0:
            c /= b0
            out[k] = c
            stop = min(len(B), width - k)
            for j in range(1, stop):
                bj = B[j]
                if bj != 0:
                    A[k + j] -= c * bj
    return QSeries(R, vq, out, False)


def qdegree(s: QSeries) -> Fraction:
    """Minimal exponent with a nonzero coefficient."""
    if not s.coeffs:
        raise ZeroOrTruncated("degree undecidable: no nonzero tracked coefficient")
    return Fraction(s.v, s.r)


def leading_term(s: QSeries) -> tuple[Fraction, Fraction]:
    """(coefficient, exponent) of the minimal-exponent term."""
    if not s.coeffs:
        raise ZeroOrTruncated("leading term undecidable: no nonzero tracked coefficient")
    return s.coeffs[0], Fraction(s.v, s.r)


def max_degree(s: QSeries) -> Fraction:
    """Maximal exponent of an exact polynomial."""
    if not s.exact:
        raise NotPolynomial("max degree needs an exact polynomial")
    if not s.coeffs:
        raise ZeroOrTruncated("max degree of the zero polynomial is undefined")
    return Fraction(s.v + len(s.coeffs) - 1, s.r)


def trailing_term(s: QSeries) -> tuple[Fraction, Fraction]:
    """(coefficient, exponent) of the maximal-exponent term (exact only)."""
    if not s.exact:
        raise NotPolynomial("trailing term needs an exact polynomial")
    if not s.coeffs:
        raise ZeroOrTruncated("trailing term of the zero polynomial is undefined")
    return s.coeffs[-1], Fraction(s.v + len(s.coeffs) - 1, s.r)


def specialize_q1(s: QSeries) -> Fraction:
    """Evaluate an exact integer-exponent polynomial at q = 1."""
    if not s.exact:
        raise NotPolynomial("specialization at q=1 needs an exact polynomial")
    for e, _ in s.terms():
        if e.denominator != 1:
            raise NotPolynomial("specialization at q=1 needs integer exponents")
    return sum((c for _, c in s.terms()), _ZERO)


# friendly constructors ------------------------------------------------------


def qs(x: Number) -> QSeries:
    """Constant polynomial."""
    return QSeries(1, 0, (x,), True)


def q_power(e: Number) -> QSeries:
    """The monomial q**e."""
    e = _as_fraction(e)
    return QSeries(e.denominator, e.numerator, (_ONE,), True)


def monomial(c: Number, e: Number) -> QSeries:
    e = _as_fraction(e)
    return QSeries(e.denominator, e.numerator, (c,), True)


ZERO = QSeries(1, 0, (), True)
ONE = QSeries(1, 0, (_ONE,), True)


# ---------------------------------------------------------------------------
# fixture sequences
# ---------------------------------------------------------------------------


def q_pochhammer(n: int, truncation: Optional[Number] = None) -> QSeries:
    """The finite product prod_{k=1..n} (1 - q**k); (q)_0 = 1."""
    if n < 0:
        raise ValueError("q_pochhammer needs n >= 0")
    result = ONE
    for k in range(1, n + 1):
        result = result * QSeries.from_terms([(0, 1), (k, -1)])
    if truncation is not None:
        result = result.capped(truncation)
    return result


def euler_inverse(truncation: int) -> QSeries:
    """The partition generating series 1 / prod_{m>=1} (1 - q**m).

    Returned truncated at the given integer threshold; the coefficient of
    q**m is the number of partitions of m.
    """
    T = int(truncation)
    if T < 1:
        raise ValueError("euler_inverse needs a positive truncation")
    p = [0] * T
    p[0] = 1
    for part in range(1, T):
        for m in range(part, T):
            p[m] += p[m - part]
    return QSeries(1, 0, [Fraction(x) for x in p], False)


def example_sequence(n: int, truncation: Optional[Number] = None) -> QSeries:
    """The running knot-theoretic sequence sum_k (q)_{n+k} / ((q)_{n-k} (q)_k).

    Each summand is a polynomial; successive summands are built by the exact
    ratio t_k = t_{k-1} * (1-q^{n+k})(1-q^{n-k+1})/(1-q^k), so the whole value
    is an exact polynomial whenever the truncation allows.
    """
    if n < 0:
        raise ValueError("example_sequence needs n >= 0")
    term = ONE
    total = ONE
    for k in range(1, n + 1):
        term = term * QSeries.from_terms([(0, 1), (n + k, -1)])
        term = term * QSeries.from_terms([(0, 1), (n - k + 1, -1)])
        term = term.exact_div(QSeries.from_terms([(0, 1), (k, -1)]))
        total = total + term
    if truncation is not None:
        total = total.capped(truncation)
    return total


# ---------------------------------------------------------------------------
# text form parsing
# ---------------------------------------------------------------------------

_TERM_RE = re.compile(
    r"^(?P<coeff>[+-]?\d+(?:/\d+)?)?"
    r"(?:\*?q(?:\^\((?P<exp>[+-]?\d+(?:/\d+)?)\)|\^(?P<exp2>[+-]?\d+))?)?$"
)
_OTAIL_RE = re.compile(r"^O\(q\^\((?P<theta>[+-]?\d+(?:/\d+)?)\)\)$")


def _split_top_level(text: str) -> list[str]:
    """Split on top-level + and - (binary), keeping signs with the pieces."""
    pieces: list[str] = []
    depth = 0
    current = ""
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and i > 0 and text[i - 1] not in "(^*/+-eE":
            pieces.append(current)
            current = ch
        else:
            current += ch
    if current:
        pieces.append(current)
    return pieces


def parse_qseries(text: str) -> QSeries:
    """Parse the :meth:`QSeries.to_text` grammar back into a series."""
    compact = text.replace(" ", "")
    if compact in ("", "0"):
        return ZERO
    theta: Optional[Fraction] = None
    terms: list[tuple[Fraction, Fraction]] = []
    for piece in _split_top_level(compact):
        if not piece:
            continue
        sign = 1
        body = piece
        if body[0] in "+-":
            sign = -1 if body[0] == "-" else 1
            body = body[1:]
        m = _OTAIL_RE.match(body)
        if m:
            theta = Fraction(m.group("theta"))
            continue
        if body == "0":
            continue
        m = _TERM_RE.match(body)
        if not m or (m.group("coeff") is None and "q" not in body):
            raise ValueError(f"cannot parse series term {piece!r}")
        coeff = Fraction(m.group("coeff")) if m.group("coeff") else _ONE
        if "q" in body:
            exp_text = m.group("exp") or m.group("exp2")
            exp = Fraction(exp_text) if exp_text else _ONE
        else:
            exp = _ZERO
        terms.append((exp, sign * coeff))
    return QSeries.from_terms(terms, truncation=theta)
