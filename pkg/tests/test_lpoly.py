import random
from fractions import Fraction

import pytest

from qholo.errors import FactorsNotCoprime, NonRationalEigenvalue, PrecisionRequired
from qholo.lpoly import LPoly, lp, puiseux_roots, solve_bezout
from qholo.series import ONE, QSeries, ZERO, q_power

F = Fraction


def qp(d):
    return QSeries.from_terms((e, c) for e, c in d.items())


def window_equal(a: QSeries, b: QSeries) -> bool:
    thetas = [t for t in (a.threshold, b.threshold) if t is not None]
    if not thetas:
        return a == b
    t = min(thetas)
    return a.truncated(t) == b.truncated(t)


class TestRing:
    def test_product_expansion(self):
        p = lp(-1, 1) * lp(-2, 1)
        assert p == lp(2, -3, 1)

    def test_zero_absorbs(self):
        assert (lp(1, 2) * LPoly(())).is_zero()

    def test_degree_drops_on_cancellation(self):
        p = lp(0, 0, 1) - lp(1, 0, 1)
        assert p.degree == 0

    def test_twist_scales_by_power(self):
        p = lp(1, 1, 1).twist(2)
        assert p.coefficient(0) == ONE
        assert p.coefficient(1) == q_power(2)
        assert p.coefficient(2) == q_power(4)

    def test_taylor_shift_matches_evaluation(self):
        rng = random.Random(3)
        for _ in range(20):
            p = lp(*[rng.randint(-4, 4) for _ in range(4)])
            x0 = F(rng.randint(-3, 3), rng.randint(1, 3))
            z = qp({0: rng.randint(-2, 2), 1: rng.randint(-2, 2)})
            lhs = p.taylor_shift(x0).evaluate(z)
            rhs = p.evaluate(z + QSeries.from_terms([(0, x0)]))
            assert lhs == rhs

    def test_evaluate_horner(self):
        p = lp(1, -2, 1)
        assert p.evaluate(ONE).is_exact_zero()
        assert p.evaluate(qp({0: 3})) == qp({0: 4})


class TestBezout:
    def test_constant_combination(self):
        u, v = solve_bezout(lp(-1, 1), lp(-2, 1), lp(1))
        assert u * lp(-1, 1) + v * lp(-2, 1) == lp(1)

    def test_random_coprime_pairs(self):
        rng = random.Random(17)
        hits = 0
        while hits < 15:
            r1, r2 = rng.randint(-5, 5), rng.randint(-5, 5)
            if r1 == r2 or r1 == 0 or r2 == 0:
                continue
            hits += 1
            a, b = lp(-r1, 1), lp(-r2, 1)
            d = lp(rng.randint(-3, 3), rng.randint(-3, 3))
            if d.is_zero():
                d = lp(1)
            u, v = solve_bezout(a, b, d, prec=F(10))
            got = u * a + v * b
            for i in range(2):
                assert window_equal(got.coefficient(i), d.coefficient(i))
            assert u.is_zero() or u.degree < 1
            assert v.is_zero() or v.degree < 1

    def test_shared_root_rejected(self):
        with pytest.raises(FactorsNotCoprime):
            solve_bezout(lp(-1, 1), lp(-1, 1), lp(1), prec=F(8))

    def test_degree_bound_enforced(self):
        with pytest.raises(ValueError):
            solve_bezout(lp(-1, 1), lp(-2, 1), lp(0, 0, 1), prec=F(8))


class TestPuiseuxRoots:
    def test_distinct_rational_roots(self):
        got = puiseux_roots(lp(6, -5, 1), 10)
        assert {z.coefficient(0) for z, _ in got} == {F(2), F(3)}
        assert all(m == 1 for _, m in got)

    def test_exact_double_root(self):
        got = puiseux_roots(lp(1, -2, 1), 10)
        assert len(got) == 1
        z, m = got[0]
        assert m == 2 and z == ONE

    def test_series_double_root_terminates_exactly(self):
        root = qp({0: 1, 1: 1})
        factor = lp(0, 1) - lp(root)
        p = factor * factor
        got = puiseux_roots(p, 8)
        assert got == [(root, 2)]

    def test_mixed_valuations(self):
        p = (lp(0, 1) - lp(q_power(1))) * (lp(0, 1) - lp(2))
        got = {z.to_text() for z, _ in puiseux_roots(p, 8)}
        assert got == {"1*q^(1)", "2"}

    def test_late_separation_resolved(self):
        r1, r2 = qp({0: 1, 1: 1}), qp({0: 1, 1: 1, 3: 1})
        p = (lp(0, 1) - lp(r1)) * (lp(0, 1) - lp(r2))
        got = sorted(z.to_text() for z, _ in puiseux_roots(p, 10))
        assert got == sorted([r1.to_text(), r2.to_text()])
        assert all(m == 1 for _, m in puiseux_roots(p, 10))

    def test_cluster_reported_at_cutoff(self):
        # separation at q^6 is invisible below a q^3 window
        r1, r2 = qp({0: 1, 1: 1}), qp({0: 1, 1: 1, 6: 1})
        p = (lp(0, 1) - lp(r1)) * (lp(0, 1) - lp(r2))
        got = puiseux_roots(p, 3)
        assert sum(m for _, m in got) == 2

    def test_ramified_pair(self):
        p = lp(q_power(1).scaled(-1), 0, 1)
        got = {z.to_text() for z, _ in puiseux_roots(p, 6)}
        assert got == {"1*q^(1/2)", "-1*q^(1/2)"}

    def test_irrational_root_raises(self):
        with pytest.raises(NonRationalEigenvalue):
            puiseux_roots(lp(-2, 0, 1), 6)

    def test_truncated_constant_term_raises(self):
        blur = ZERO.truncated(F(1))
        with pytest.raises(PrecisionRequired):
            puiseux_roots(LPoly((blur, ONE, ONE)), 6)

    def test_random_products_recovered(self):
        rng = random.Random(23)
        trials = 0
        while trials < 15:
            vals = rng.sample(range(-6, 7), 3)
            if 0 in vals:
                continue
            trials += 1
            p = lp(1)
            for v in vals:
                p = p * lp(-v, 1)
            got = puiseux_roots(p, 8)
            assert sorted(z.coefficient(0) for z, _ in got) == sorted(
                F(v) for v in vals
            )
            assert all(m == 1 for _, m in got)
