import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import qp, random_poly_operator, window_equal
from qholo.errors import (
    LeadingCoefficientVanishes,
    NotRegularSingular,
    PrecisionRequired,
    RamificationError,
    TruncationUnderflow,
)
from qholo.lpoly import LPoly
from qholo.operators import (
    L_OP,
    LocalOperator,
    M_ONE,
    M_OP,
    M_ZERO,
    MSeries,
    ONE_OP,
    PolyOperator,
    embed,
    gauge_transform,
    parse_operator,
    reverse_operator,
    slim_part,
    unroll,
)
from qholo.series import (
    ONE,
    QSeries,
    ZERO,
    divide,
    example_sequence,
    max_degree,
    q_power,
    qs,
)

F = Fraction


class TestMultiplication:
    def test_commutation_rule(self):
        assert (L_OP * M_OP).to_text() == "q M L"
        assert (M_OP * L_OP).to_text() == "M L"

    def test_difference_of_squares_picks_up_q(self):
        got = (L_OP - M_OP) * (L_OP + M_OP)
        want = PolyOperator({(2, 0, 0): 1, (1, 1, 1): 1, (1, 1, 0): -1, (0, 2, 0): -1})
        assert got == want

    def test_associative_and_distributive(self):
        rng = random.Random(5)
        for _ in range(25):
            A = random_poly_operator(rng)
            B = random_poly_operator(rng)
            C = random_poly_operator(rng)
            assert (A * B) * C == A * (B * C)
            assert A * (B + C) == A * B + A * C

    def test_identity(self):
        rng = random.Random(6)
        P = random_poly_operator(rng)
        assert ONE_OP * P == P
        assert P * ONE_OP == P


class TestApply:
    def test_shift_and_multiplier(self):
        f = [example_sequence(n) for n in range(6)]
        for n in range(4):
            assert L_OP.apply(f, n) == f[n + 1]
            assert M_OP.apply(f, n) == f[n] * q_power(n)

    def test_annihilates_example(self, example_annihilator):
        for n in range(9):
            assert example_annihilator.apply(example_sequence, n).is_exact_zero()

    def test_composition_law(self):
        rng = random.Random(9)
        for _ in range(10):
            P = random_poly_operator(rng)
            Q = random_poly_operator(rng)
            if P.is_zero() or Q.is_zero():
                continue
            for n in range(3):
                lhs = (P * Q).apply(example_sequence, n)
                rhs = P.apply(lambda m: Q.apply(example_sequence, m), n)
                assert lhs == rhs


class TestUnroll:
    def test_constant_sequence(self):
        got = unroll(L_OP - ONE_OP, [qs(1)], 5)
        assert got == [ONE] * 6

    def test_pure_gauge_sequence(self):
        # f_{n+1} = q^{n+1} f_n has closed form q^(n(n+1)/2)
        P = L_OP - M_OP * PolyOperator({(0, 0, 1): 1})
        got = unroll(P, [qs(1)], 6)
        for n, f in enumerate(got):
            assert f == q_power(F(n * (n + 1), 2))

    def test_reproduces_example_terms(self, example_annihilator):
        init = [example_sequence(0), example_sequence(1)]
        got = unroll(example_annihilator, init, 8)
        for n, f in enumerate(got):
            assert f == example_sequence(n)

    def test_unroll_output_satisfies_operator(self, example_annihilator):
        got = unroll(example_annihilator, [example_sequence(0), example_sequence(1)], 9)
        for n in range(8):
            assert example_annihilator.apply(got, n).is_exact_zero()

    def test_leading_coefficient_vanishing_reported(self):
        P = (M_OP - PolyOperator({(0, 0, 2): 1})) * L_OP - ONE_OP
        with pytest.raises(LeadingCoefficientVanishes) as err:
            unroll(P, [qs(1)], 5, prec=F(12))
        assert err.value.n == 2

    def test_init_length_checked(self, example_annihilator):
        with pytest.raises(ValueError):
            unroll(example_annihilator, [qs(1)], 5)


class TestSerialization:
    def test_json_round_trip(self, example_annihilator):
        assert PolyOperator.from_json(example_annihilator.to_json()) == example_annihilator

    def test_text_round_trip(self, example_annihilator):
        assert parse_operator(example_annihilator.to_text()) == example_annihilator

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31))
    def test_random_round_trips(self, seed):
        P = random_poly_operator(random.Random(seed))
        assert PolyOperator.from_json(P.to_json()) == P
        assert parse_operator(P.to_text()) == P

    def test_fraction_coefficients_survive(self):
        P = PolyOperator({(1, 2, 3): F(-7, 3), (0, 0, 0): F(1, 2)})
        assert PolyOperator.from_json(P.to_json()) == P
        assert parse_operator(P.to_text()) == P

    def test_zero_operator_forms(self):
        assert parse_operator("0").is_zero()
        assert PolyOperator({}).to_text() == "0"


class TestReverse:
    def test_support_flips_in_box(self, example_annihilator):
        rev = reverse_operator(example_annihilator)
        J = max(j for (_, j, _) in example_annihilator.support)
        K = max(k for (_, _, k) in example_annihilator.support)
        assert {(i, J - j, K - k) for (i, j, k) in example_annihilator.support} == set(
            rev.support
        )
        assert reverse_operator(rev) == example_annihilator

    def test_annihilates_substituted_sequence(self, example_annihilator):
        rev = reverse_operator(example_annihilator)

        def h(n):
            f = example_sequence(n)
            return f.reverse().shifted(-max_degree(f))

        for n in range(6):
            assert rev.apply(h, n).is_exact_zero()


class TestMSeries:
    def test_normalization_strips_exact_zero_lead(self):
        s = MSeries(1, 0, (ZERO, qs(2)), True)
        assert s.v == 1 and len(s.coeffs) == 1

    def test_tracked_zero_entry_blocks_valuation(self):
        s = MSeries(1, 0, (ZERO.truncated(F(3)), qs(2)), True)
        with pytest.raises(PrecisionRequired):
            s.m_valuation()
        assert s.valuation_bound() == 0

    def test_addition_window(self):
        a = MSeries.from_entries([(0, qs(1))], truncation=3)
        b = MSeries.from_entries([(2, qs(5)), (4, qs(7))])
        c = a + b
        assert c.threshold == 3
        assert c.m_coefficient(0) == ONE
        assert c.m_coefficient(2) == qs(5)

    def test_product_window_rule(self):
        a = MSeries.from_entries([(1, qs(1))], truncation=4)  # M + O(M^4)
        b = MSeries.from_entries([(2, qs(1))])                # exact M^2
        c = a * b
        assert c.threshold == 6
        assert c.m_coefficient(3) == ONE

    def test_twist_scales_entries(self):
        s = MSeries.from_entries([(1, qs(1)), (2, qs(1))])
        t = s.twist(3)
        assert t.m_coefficient(1) == q_power(3)
        assert t.m_coefficient(2) == q_power(6)

    def test_eval_at_qn(self):
        s = MSeries.from_entries([(0, qs(2)), (2, qs(3))])
        assert s.eval_at_qn(3) == qp({0: 2, 6: 3})

    def test_eval_threshold_from_m_window(self):
        s = MSeries.from_entries([(0, qs(1))], truncation=2)
        got = s.eval_at_qn(5)
        assert got.threshold == 10

    def test_reciprocal(self):
        a = MSeries.from_entries([(0, qs(2)), (1, qs(1))])
        inv = M_ONE.divide(a, m_prec=6, q_prec=10)
        assert (a * inv).agrees(M_ONE)

    def test_exact_division(self):
        num = MSeries.from_entries([(1, qs(3)), (2, q_power(2))])
        den = MSeries.from_entries([(1, qs(1))])
        quo = num.divide(den)
        assert quo.exact
        assert (quo * den) == num

    def test_inexact_division_requires_target(self):
        num = MSeries.from_entries([(0, qs(1))])
        den = MSeries.from_entries([(0, qs(1)), (1, qs(1))])
        with pytest.raises(PrecisionRequired):
            num.divide(den)

    def test_ramified_lattice_arithmetic(self):
        a = MSeries.from_entries([(F(1, 2), qs(1))])
        b = MSeries.from_entries([(F(1, 3), qs(1))])
        c = a * b
        assert c.m_coefficient(F(5, 6)) == ONE


class TestLocalOperator:
    def test_embed_is_multiplicative(self):
        rng = random.Random(31)
        for _ in range(15):
            P = random_poly_operator(rng)
            Q = random_poly_operator(rng)
            assert embed(P) * embed(Q) == embed(P * Q)

    def test_embedded_apply_matches(self):
        rng = random.Random(32)
        for _ in range(8):
            P = random_poly_operator(rng)
            if P.is_zero():
                continue
            for n in range(4):
                assert embed(P).apply(example_sequence, n) == P.apply(
                    example_sequence, n
                )

    def test_truncated_composition_on_windows(self):
        A = embed(L_OP - M_OP).truncated_m(F(4)).truncated_q(F(9))
        B = embed(M_OP * L_OP + ONE_OP).truncated_m(F(4)).truncated_q(F(9))
        AB = A * B
        for n in range(1, 4):
            lhs = AB.apply(example_sequence, n)
            rhs = A.apply(lambda m: B.apply(example_sequence, m), n)
            assert window_equal(lhs, rhs)

    def test_underflow_when_no_certified_terms(self):
        blur = MSeries.from_entries([], truncation=1)  # O(M^1) only
        with pytest.raises(TruncationUnderflow):
            _ = LocalOperator([blur]) * LocalOperator([blur])
        # certified content inside the window survives
        wide = MSeries.from_entries([(0, qs(1))], truncation=3)
        C = LocalOperator([wide, MSeries.from_entries([], truncation=3)])
        assert (C * C).coefficient(0).has_certified_term()

    def test_make_monic_rescales_back(self):
        op = embed(PolyOperator({(2, 1, 0): 2, (2, 2, 1): 1, (1, 0, 0): 1, (0, 1, 0): -1}))
        monic = op.make_monic(m_prec=5, q_prec=8)
        lead = monic.coefficient(2)
        assert lead.m_coefficient(0).coefficient(0) == 1
        assert monic.scale(op.coefficient(2)).agrees(op)


class TestGauge:
    def test_identity_gauge(self, example_annihilator):
        assert gauge_transform(example_annihilator, 0, 0) == embed(example_annihilator)

    def test_slope_normalization(self):
        # L - qM has slope -1; gamma = 1/2 lands both coefficients at M^1
        P = L_OP - M_OP * PolyOperator({(0, 0, 1): 1})
        G = gauge_transform(P, F(1, 2), 0, q_power(F(1, 2)))
        S = slim_part(G.make_monic())
        assert [c for c in S.coeffs] == [-(ONE), ONE]

    def test_round_trip_up_to_truncation(self):
        lam = qs(2) + q_power(1)
        lam_inv = divide(ONE, lam, F(8))
        P = embed(L_OP * L_OP + M_OP.scale(-1) + ONE_OP).truncated_q(F(8))
        g1 = gauge_transform(P, F(1, 2), F(-1), lam)
        g2 = gauge_transform(g1, F(-1, 2), F(1), lam_inv)
        assert g2.agrees(P)

    def test_sequence_level_consistency(self):
        # unroll P, gauge it, unroll the gauge, recombine: same sequence
        P = L_OP * L_OP - M_OP * PolyOperator({(1, 0, 1): 1}) - ONE_OP
        f = unroll(P, [qs(1), qs(1)], 8, prec=F(15))
        gamma, eta = F(1), F(-1)
        G = gauge_transform(P, gamma, eta)
        # g_n = f_n / q^(γn²+ηn)
        g = [f[n] * q_power(-(gamma * n * n + eta * n)) for n in range(9)]
        for n in range(7):
            val = G.apply(g, n)
            assert val.is_tracked_zero(), (n, val.to_text())

    def test_lattice_strictness_and_opt_in(self):
        with pytest.raises(RamificationError):
            gauge_transform(L_OP - M_OP, F(1, 4), 0)
        g = gauge_transform(L_OP - M_OP, F(1, 4), 0, r_m=2)
        assert g.coefficient(1).m_valuation() == F(1, 2)


class TestSlimPart:
    def test_example_annihilator_slim(self, example_annihilator):
        S = slim_part(embed(example_annihilator))
        assert [c for c in S.coeffs] == [ONE, qs(-2), ONE]

    def test_affine_case(self):
        S = slim_part(embed(L_OP - ONE_OP - M_OP))
        assert [c for c in S.coeffs] == [-(ONE), ONE]

    def test_constant_terms_of_product(self):
        rng = random.Random(41)
        for _ in range(10):
            a, b = rng.randint(1, 5), rng.randint(1, 5)
            A = L_OP - PolyOperator({(0, 0, 0): a, (0, 1, 1): rng.randint(-2, 2)})
            B = L_OP - PolyOperator({(0, 0, 0): b, (0, 1, 0): rng.randint(-2, 2)})
            S = slim_part(embed(A * B))
            assert S == LPoly((qs(a * b), qs(-a - b), ONE))

    def test_sloped_operator_rejected(self):
        with pytest.raises(NotRegularSingular):
            slim_part(embed(L_OP - M_OP))
