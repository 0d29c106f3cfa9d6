import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qholo.asymptotics import (
    GeneralizedPowerSum,
    LinearRecurrence,
    QuasiPolynomial,
    degree_sequence,
    fit_quasi_polynomial,
    gps_evaluate,
    min_linear_recurrence,
    monomial_sequence_check,
    zero_pattern,
)
from qholo.errors import NoFit, NoRecurrence, NotPolynomial, WindowTooSmall
from qholo.series import example_sequence, leading_term, qs, trailing_term

F = Fraction

TOP_DEGREES = [0, 2, 7, 15, 26, 40, 57, 77, 100]


def example_values(n_max):
    return [example_sequence(n) for n in range(n_max + 1)]


class TestDegreeSequence:
    def test_example_min_degrees_vanish(self):
        assert degree_sequence(example_sequence, range(9)) == [0] * 9

    def test_example_max_degrees(self):
        got = degree_sequence(example_sequence, range(9), side="max")
        assert got == TOP_DEGREES

    def test_constant_sequence(self):
        assert degree_sequence(lambda n: qs(1), range(5)) == [0] * 5

    def test_accepts_list_input(self):
        assert degree_sequence(example_values(4), range(5), side="max") == [
            0,
            2,
            7,
            15,
            26,
        ]

    def test_max_side_needs_exact_polynomials(self):
        with pytest.raises(NotPolynomial):
            degree_sequence(lambda n: qs(1).truncated(3), range(2), side="max")

    def test_leading_coefficients_of_example(self):
        # low-end coefficient n+1, top coefficient (-1)^n
        for n in range(9):
            f = example_sequence(n)
            assert leading_term(f)[0] == n + 1
            assert trailing_term(f)[0] == (-1) ** n


class TestQuasiPolynomialFit:
    def test_example_top_degree_fit(self):
        fit = fit_quasi_polynomial(TOP_DEGREES)
        assert fit.period == 1
        assert fit.threshold == 0
        assert fit.coefficients == ((F(0), F(1, 2), F(3)),)
        for n in range(9):
            assert fit.evaluate(n) == TOP_DEGREES[n]

    def test_all_zero_fit(self):
        fit = fit_quasi_polynomial([0] * 10)
        assert fit.period == 1
        assert fit.coefficients == ((F(0), F(0), F(0)),)

    def test_two_residue_classes(self):
        values = [F(n * n, 2) if n % 2 == 0 else F(n * n) for n in range(14)]
        fit = fit_quasi_polynomial(values)
        assert fit.period == 2
        assert fit.coefficients[0][2] == 1
        assert fit.coefficients[1][2] == 2

    def test_skip_handles_irregular_head(self):
        values = [99, -5] + [F(n * n, 2) for n in range(2, 16)]
        fit = fit_quasi_polynomial(values)
        assert fit.threshold == 2
        for n in range(2, 16):
            assert fit.evaluate(n) == values[n]

    def test_cubic_data_has_no_fit(self):
        with pytest.raises(NoFit):
            fit_quasi_polynomial([n**3 for n in range(40)], max_period=3)

    def test_printed_form_lists_residues(self):
        fit = QuasiPolynomial(2, ((F(0), F(0), F(1)), (F(1), F(0), F(2))), 0)
        text = fit.to_text()
        assert "n = 0 (mod 2)" in text and "n = 1 (mod 2)" in text

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**30))
    def test_fit_reproduces_generated_data(self, seed):
        rng = random.Random(seed)
        period = rng.randint(1, 4)
        source = QuasiPolynomial(
            period,
            tuple(
                (F(rng.randint(-5, 5)), F(rng.randint(-5, 5)), F(rng.randint(-5, 5)))
                for _ in range(period)
            ),
            0,
        )
        skip = rng.randint(0, 3)
        values = [F(rng.randint(50, 60)) for _ in range(skip)]
        values += [source.evaluate(n) for n in range(skip, 3 * 4 + 12)]
        fit = fit_quasi_polynomial(values, max_period=4, max_skip=4)
        for n in range(skip, len(values)):
            assert fit.evaluate(n) == values[n]


class TestMinLinearRecurrence:
    def test_low_coefficients_of_example(self):
        rec = min_linear_recurrence([n + 1 for n in range(12)])
        assert rec.s == (F(2), F(-1))

    def test_alternating_signs(self):
        rec = min_linear_recurrence([(-1) ** n for n in range(12)])
        assert rec.s == (F(-1),)

    def test_zero_sequence(self):
        assert min_linear_recurrence([0] * 8).order == 0

    def test_fibonacci(self):
        fib = [1, 1]
        while len(fib) < 15:
            fib.append(fib[-1] + fib[-2])
        assert min_linear_recurrence(fib).s == (F(1), F(1))

    def test_minimality_and_extension(self):
        values = [F(n + 1) for n in range(12)]
        rec = min_linear_recurrence(values)
        assert rec.order == 2
        assert rec.extend(values[:2], 12) == values
        assert rec.satisfied_by(values)
        # no order-1 recurrence fits: ratios of consecutive terms differ
        assert not LinearRecurrence((F(2),)).satisfied_by(values)

    def test_doubly_exponential_has_none(self):
        with pytest.raises(NoRecurrence):
            min_linear_recurrence([2 ** (2**n) for n in range(12)])

    def test_characteristic_text(self):
        rec = LinearRecurrence((F(2), F(-1)))
        assert rec.characteristic_text() == "1 - (2) x^1 - (-1) x^2"


class TestGeneralizedPowerSums:
    def test_pure_power(self):
        g = GeneralizedPowerSum.explicit([(2, [1])])
        assert gps_evaluate(g, 5) == 32

    def test_polynomial_times_one_plus_alternating(self):
        g = GeneralizedPowerSum.explicit([(1, [0, 1]), (-1, [1])])
        assert gps_evaluate(g, 3) == 2

    def test_companion_polynomial_reconstruction(self):
        g = GeneralizedPowerSum.explicit([(2, [1]), (1, [3, 1])])
        rec = g.to_implicit().recurrence
        # s(x) = (1-2x)(1-x)^2 = 1 - 4x + 5x^2 - 2x^3
        assert rec.s == (F(4), F(-5), F(2))

    def test_implicit_evaluation(self):
        rec = LinearRecurrence((F(1), F(1)))
        g = GeneralizedPowerSum.implicit(rec, [1, 1])
        assert gps_evaluate(g, 6) == 13

    def test_rejects_zero_or_repeated_roots(self):
        with pytest.raises(ValueError):
            GeneralizedPowerSum.explicit([(0, [1])])
        with pytest.raises(ValueError):
            GeneralizedPowerSum.explicit([(2, [1]), (2, [1])])

    def test_explicit_implicit_agree_on_randoms(self):
        rng = random.Random(61)
        for _ in range(100):
            nroots = rng.randint(1, 3)
            roots = rng.sample([-3, -2, -1, 1, 2, 3, F(1, 2), F(-1, 2)], nroots)
            terms = [
                (alpha, [F(rng.randint(-4, 4)) for _ in range(rng.randint(1, 3))])
                for alpha in roots
            ]
            terms = [(a, c) for a, c in terms if any(x != 0 for x in c)]
            if not terms:
                continue
            g = GeneralizedPowerSum.explicit(terms)
            h = g.to_implicit()
            implicit_only = GeneralizedPowerSum(
                recurrence=h.recurrence, initial=h.initial
            )
            for n in rng.sample(range(41), 6):
                assert g.evaluate(n) == implicit_only.evaluate(n)


class TestZeroPattern:
    def test_even_zeros(self):
        values = [1 - (-1) ** n for n in range(30)]
        sporadic, progressions = zero_pattern(values)
        assert sporadic == set()
        assert progressions == [(0, 2)]

    def test_single_sporadic_zero(self):
        values = [(n - 3) * 2**n for n in range(30)]
        sporadic, progressions = zero_pattern(values)
        assert sporadic == {3}
        assert progressions == []

    def test_no_zeros(self):
        fib = [1, 1]
        while len(fib) < 30:
            fib.append(fib[-1] + fib[-2])
        assert zero_pattern(fib) == (set(), [])

    def test_late_starting_progression(self):
        values = [0 if (n % 2 == 1 and n >= 3) else 1 for n in range(31)]
        sporadic, progressions = zero_pattern(values)
        assert sporadic == set()
        assert progressions == [(3, 2)]

    def test_window_guard(self):
        with pytest.raises(WindowTooSmall):
            zero_pattern([0] * 10)


class TestMonomialSequenceCheck:
    def test_example_low_end(self):
        assert monomial_sequence_check([n + 1 for n in range(30)], [0] * 30)

    def test_example_top_end(self):
        a = [(-1) ** n for n in range(30)]
        b = [F(n * (3 * n + 1), 2) for n in range(30)]
        assert monomial_sequence_check(a, b)

    def test_doubly_exponential_fails(self):
        a = [2 ** (2**n) for n in range(12)]
        assert not monomial_sequence_check(a, [0] * 12)
