"""Shared fixtures: the frozen order-2 annihilator of example_sequence
and window-comparison helpers used across the suite."""

import random
from fractions import Fraction

import pytest

from qholo.operators import LocalOperator, MSeries, M_ONE, PolyOperator, parse_operator
from qholo.series import QSeries, qs

A2_TEXT = "q^4 M^3 + q^3 M^2 - q^2 M^2 - q^2 M - q M + 1"
A1_TEXT = (
    "M^6 q^9 + M^5 q^8 + M^5 q^7 - M^4 q^7 - M^4 q^6 - M^4 q^5 - 2 M^3 q^5 "
    "- 2 M^3 q^4 + 2 M^2 q^4 + M^2 q^3 + 2 M^2 q^2 + M q^2 + M q - 2"
)
A0_TEXT = "1 - q^2 M - q^4 M^2"


def build_example_annihilator() -> PolyOperator:
    a2 = parse_operator(A2_TEXT)
    a1 = parse_operator(A1_TEXT)
    a0 = parse_operator(A0_TEXT)
    L2 = PolyOperator({(2, 0, 0): 1})
    L1 = PolyOperator({(1, 0, 0): 1})
    return a2 * L2 + a1 * L1 + a0


@pytest.fixture(scope="session")
def example_annihilator() -> PolyOperator:
    return build_example_annihilator()


def window_equal(a: QSeries, b: QSeries) -> bool:
    """Equality of two series on their shared certified window."""
    thetas = [t for t in (a.threshold, b.threshold) if t is not None]
    if not thetas:
        return a == b
    t = min(thetas)
    return a.truncated(t) == b.truncated(t)


def qp(d) -> QSeries:
    """Exact polynomial from an {exponent: coefficient} dict."""
    return QSeries.from_terms((e, c) for e, c in d.items())


def random_poly_operator(
    rng: random.Random, max_i: int = 2, max_j: int = 2, max_k: int = 3
) -> PolyOperator:
    terms = {}
    for _ in range(rng.randint(1, 6)):
        key = (rng.randint(0, max_i), rng.randint(0, max_j), rng.randint(0, max_k))
        terms[key] = terms.get(key, 0) + rng.randint(-3, 3)
    return PolyOperator({k: v for k, v in terms.items() if v})


def random_rational(rng: random.Random, nonzero: bool = True) -> Fraction:
    while True:
        v = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
        if v or not nonzero:
            return v


def random_short_qseries(rng: random.Random) -> QSeries:
    """Exact series c0 + c1*q with small rational coefficients, often just c0."""
    c0 = random_rational(rng, nonzero=False)
    c1 = random_rational(rng, nonzero=False) if rng.random() < 0.4 else Fraction(0)
    return QSeries.from_terms([(Fraction(0), c0), (Fraction(1), c1)])


def random_single_slope_local(
    rng: random.Random, slope: Fraction, order: int, tail: int = 2
) -> LocalOperator:
    """Monic operator whose Newton polygon is one edge of the given slope.

    Every hull coefficient is a nonzero rational, so the edge is honest;
    random short series sit up to ``tail`` lattice steps above it.
    """
    coeffs = []
    for i in range(order):
        ell = slope * (i - order)
        entries = [(ell, qs(random_rational(rng)))]
        for t in range(1, tail + 1):
            v = random_short_qseries(rng)
            if not v.is_exact_zero():
                entries.append((ell + t, v))
        coeffs.append(MSeries.from_entries(entries))
    coeffs.append(M_ONE)
    return LocalOperator(coeffs)


def random_regular_singular_local(
    rng: random.Random, eigenvalues, tail: int = 2
) -> LocalOperator:
    """Monic flat operator with the given slim-part roots plus random tails."""
    slim = [qs(1)]
    for lam in eigenvalues:
        nxt = [qs(0)] * (len(slim) + 1)
        for i, c in enumerate(slim):
            nxt[i + 1] = nxt[i + 1] + c
            nxt[i] = nxt[i] - qs(lam) * c
        slim = nxt
    coeffs = []
    for base in slim[:-1]:
        entries = [] if base.is_exact_zero() else [(Fraction(0), base)]
        for t in range(1, tail + 1):
            v = random_short_qseries(rng)
            if not v.is_exact_zero():
                entries.append((Fraction(t), v))
        coeffs.append(MSeries.from_entries(entries))
    coeffs.append(M_ONE)
    return LocalOperator(coeffs)


def monic_first_order(c: Fraction, m: Fraction) -> LocalOperator:
    """The operator L - c*M^m."""
    return LocalOperator(
        [MSeries.from_entries([(Fraction(m), qs(-Fraction(c)))]), M_ONE]
    )
