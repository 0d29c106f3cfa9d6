import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_poly_operator
from qholo.errors import NotASlope, RangeTooShort
from qholo.lpoly import LPoly
from qholo.newton import (
    candidate_c1c2,
    convex_hull,
    edge_polynomial,
    is_regular_singular,
    lemma_N2N1_check,
    lower_hull,
    newton_polygon,
    newton_polytope3,
    slopes,
    tropical_curve,
    tropical_degree_check,
)
from qholo.operators import PolyOperator, parse_operator, reverse_operator
from qholo.series import ZERO, example_sequence, max_degree, qs

F = Fraction


def op(*triples) -> PolyOperator:
    return PolyOperator({(i, j, k): c for i, j, k, c in triples})


class TestHulls:
    def test_known_lower_hull(self):
        pts = [(0, 2), (1, 0), (2, 1), (3, 0), (4, 4)]
        assert lower_hull(pts) == [(0, 2), (1, 0), (3, 0), (4, 4)]

    def test_duplicate_x_keeps_minimum(self):
        assert lower_hull([(0, 5), (0, 1), (1, 1)]) == [(0, 1), (1, 1)]

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(-6, 6), st.integers(-6, 6)),
            min_size=1,
            max_size=12,
        )
    )
    def test_hull_supports_all_points(self, pts):
        hull = lower_hull(pts)
        xs = [p[0] for p in hull]
        assert xs == sorted(set(xs))
        # convexity: consecutive slopes strictly increase
        ss = [F(b[1] - a[1], b[0] - a[0]) for a, b in zip(hull, hull[1:])]
        assert all(s1 < s2 for s1, s2 in zip(ss, ss[1:]))
        # every input point lies on or above every hull segment
        for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
            for x, y in pts:
                assert (y - y0) * (x1 - x0) >= (y1 - y0) * (x - x0) or x < x0 or x > x1

    def test_convex_hull_is_ccw(self):
        hull = convex_hull([(0, 0), (2, 0), (2, 2), (0, 2), (1, 1), (1, 0)])
        assert hull == [(0, 0), (2, 0), (2, 2), (0, 2)]


class TestNewtonPolygon:
    def test_example_annihilator_is_flat(self, example_annihilator):
        np_ = newton_polygon(example_annihilator)
        assert np_.vertices == ((0, 0), (2, 0))
        assert slopes(np_) == [(F(0), 2)]
        assert is_regular_singular(example_annihilator)

    def test_single_monomial(self):
        np_ = newton_polygon(op((1, 0, 0, 1)))
        assert np_.vertices == ((1, 0),)
        assert slopes(np_) == []

    def test_two_slope_hull(self):
        P = parse_operator("M + L + M^3 L^2")
        np_ = newton_polygon(P)
        assert np_.vertices == ((0, 1), (1, 0), (2, 3))
        assert slopes(np_) == [(F(-1), 1), (F(3), 1)]

    def test_three_slope_profile(self):
        # degree 7, hull (0,2)-(2,0)-(3,0)-(7,2)
        P = op((0, 2, 0, 1), (2, 0, 0, 1), (3, 0, 0, 1), (7, 2, 0, 1))
        assert slopes(newton_polygon(P)) == [(F(-1), 2), (F(0), 1), (F(1, 2), 4)]

    def test_interior_points_do_not_matter(self):
        P = op((0, 0, 0, 1), (1, 5, 0, 3), (2, 0, 0, 1))
        assert newton_polygon(P).vertices == ((0, 0), (2, 0))

    def test_not_regular_singular(self):
        assert not is_regular_singular(parse_operator("L + M"))
        assert is_regular_singular(parse_operator("L^2 + L + 1"))

    def test_slope_lengths_sum_to_order(self):
        rng = random.Random(11)
        for _ in range(50):
            P = random_poly_operator(rng, max_i=4, max_j=3)
            # force a nonzero L^0 term so the hull spans the full order
            P = P + PolyOperator({(0, 0, 0): 1, (0, 1, 1): 1})
            assert sum(l for _, l in slopes(newton_polygon(P))) == P.order


class TestEdgePolynomial:
    def test_flat_edge_of_example(self, example_annihilator):
        E = edge_polynomial(example_annihilator, 0)
        assert E == LPoly((qs(1), qs(-2), qs(1)))

    def test_affine_operator(self):
        E = edge_polynomial(parse_operator("L - 1 - M"), 0)
        assert E == LPoly((qs(-1), qs(1)))

    def test_constructed_flat_product(self):
        P = parse_operator("L^2 - 3 L + 2 + M L")
        assert edge_polynomial(P, 0) == LPoly((qs(2), qs(-3), qs(1)))

    def test_fractional_heights_are_skipped(self):
        P = parse_operator("1 + M L^2 + q^3 M L")
        E = edge_polynomial(P, F(1, 2))
        assert E.coefficient(0) == qs(1)
        assert E.coefficient(1).is_exact_zero()
        assert E.coefficient(2) == qs(1)

    def test_keeps_least_q_term(self):
        P = op((0, 0, 2, 5), (0, 0, 4, 7), (1, 0, 0, 1))
        E = edge_polynomial(P, 0)
        assert E.coefficient(0).to_text() == "5*q^(2)"

    def test_unknown_slope_rejected(self, example_annihilator):
        with pytest.raises(NotASlope):
            edge_polynomial(example_annihilator, 5)


class TestNewtonPolytope:
    def test_example_widths(self, example_annihilator):
        nt = newton_polytope3(example_annihilator)
        is_ = [i for i, _, _ in nt.points]
        js = [j for _, j, _ in nt.points]
        assert max(is_) - min(is_) == 2
        assert max(js) - min(js) == 6

    def test_single_monomial_is_a_point(self):
        nt = newton_polytope3(op((1, 2, 3, 1)))
        assert nt.projection == ((1, 2),)
        assert nt.cells == ()

    @staticmethod
    def area(poly) -> F:
        total = F(0)
        for (x0, y0), (x1, y1) in zip(poly, poly[1:] + poly[:1]):
            total += F(x0 * y1 - x1 * y0)
        return total / 2

    def test_cells_tile_the_projection(self, example_annihilator):
        nt = newton_polytope3(example_annihilator)
        assert sum(self.area(c.polygon) for c in nt.cells) == self.area(nt.projection)

    def test_cells_tile_random_projections(self):
        rng = random.Random(23)
        done = 0
        while done < 40:
            P = random_poly_operator(rng, max_i=3, max_j=3, max_k=4)
            if P.is_zero():
                continue
            nt = newton_polytope3(P)
            if len(nt.projection) < 3:
                continue
            assert sum(self.area(c.polygon) for c in nt.cells) == self.area(
                nt.projection
            )
            for cell in nt.cells:
                a, b, c = cell.plane
                assert all(
                    k >= a * i + b * j + c for i, j, k in nt.points
                )
            done += 1

    def test_lemma_on_example_and_randoms(self, example_annihilator):
        assert lemma_N2N1_check(example_annihilator)
        assert lemma_N2N1_check(parse_operator("L - q M"))
        rng = random.Random(29)
        done = 0
        while done < 200:
            P = random_poly_operator(rng, max_i=4, max_j=4, max_k=5)
            if P.is_zero():
                continue
            assert lemma_N2N1_check(P)
            done += 1


class TestTropicalCurve:
    def test_example_vertices_match_published_list(self, example_annihilator):
        tc = tropical_curve(example_annihilator)
        assert set(tc.vertices) == {
            (F(-1), F(-2)),
            (F(3), F(-2)),
            (F(0), F(-3, 2)),
            (F(1), F(-3, 2)),
            (F(0), F(-1)),
        }

    def test_example_full_structure(self, example_annihilator):
        tc = tropical_curve(example_annihilator)
        assert tc.vertices == (
            (F(-1), F(-2)),
            (F(0), F(-3, 2)),
            (F(0), F(-1)),
            (F(1), F(-3, 2)),
            (F(3), F(-2)),
        )
        assert tc.edges == (
            (0, 1, 1),
            (0, 4, 2),
            (1, 2, 1),
            (1, 3, 2),
            (2, 3, 1),
            (3, 4, 1),
        )
        assert tc.rays == (
            (0, (-3, -1), 1),
            (0, (-1, 0), 1),
            (2, (-1, 0), 2),
            (2, (0, 1), 2),
            (4, (1, 0), 2),
            (4, (4, -1), 1),
        )
        assert tc.is_balanced()

    def test_single_point_support(self):
        tc = tropical_curve([(0, 0, 0)])
        assert tc.vertices == () and tc.edges == () and tc.rays == ()

    def test_tropical_line(self):
        tc = tropical_curve([(1, 0, 0), (0, 1, 0), (0, 0, 0)])
        assert tc.vertices == ((F(0), F(0)),)
        assert tc.edges == ()
        assert {(d, m) for _, d, m in tc.rays} == {
            ((-1, -1), 1),
            ((0, 1), 1),
            ((1, 0), 1),
        }

    def test_collinear_support_gives_lines(self):
        tc = tropical_curve(parse_operator("L^2 + L + 1"))
        assert tc.vertices == ((F(0), F(0)),)
        assert tc.edges == ()
        assert {(d, m) for _, d, m in tc.rays} == {((0, -1), 2), ((0, 1), 2)}
        assert tc.is_balanced()

    def test_vertical_support_gives_lines(self):
        tc = tropical_curve(parse_operator("M^2 + M + 1"))
        assert {(d, m) for _, d, m in tc.rays} == {((-1, 0), 2), ((1, 0), 2)}

    def test_sloped_line_component(self):
        tc = tropical_curve(parse_operator("1 + q M L"))
        assert tc.vertices == ((F(-1), F(0)),)
        assert {(d, m) for _, d, m in tc.rays} == {((-1, 1), 1), ((1, -1), 1)}

    def test_curve_lies_in_nondifferentiability_locus(self, example_annihilator):
        tc = tropical_curve(example_annihilator)

        def multiplicity_of_min(x, y):
            vals = [i * x + j * y + k for i, j, k in tc.support]
            low = min(vals)
            return sum(1 for v in vals if v == low)

        for x, y in tc.vertices:
            assert multiplicity_of_min(x, y) >= 3
        for a, b, _ in tc.edges:
            mx = (tc.vertices[a][0] + tc.vertices[b][0]) / 2
            my = (tc.vertices[a][1] + tc.vertices[b][1]) / 2
            assert multiplicity_of_min(mx, my) >= 2
        for v, (dx, dy), _ in tc.rays:
            for t in (1, 7):
                assert (
                    multiplicity_of_min(
                        tc.vertices[v][0] + t * dx, tc.vertices[v][1] + t * dy
                    )
                    >= 2
                )

    def test_duality_with_subdivision(self, example_annihilator):
        tc = tropical_curve(example_annihilator)
        nt = newton_polytope3(example_annihilator)
        by_plane = {(-a, -b): cell for cell in nt.cells for a, b in [cell.plane[:2]]}
        assert len(nt.cells) == len(tc.vertices)
        for a, b, mult in tc.edges:
            ca = by_plane[tc.vertices[a]]
            cb = by_plane[tc.vertices[b]]
            shared = sorted(set(ca.points) & set(cb.points))
            p, r = shared[0], shared[-1]
            # dual edge is perpendicular and its lattice length is the multiplicity
            dx = tc.vertices[b][0] - tc.vertices[a][0]
            dy = tc.vertices[b][1] - tc.vertices[a][1]
            assert dx * (r[0] - p[0]) + dy * (r[1] - p[1]) == 0
            from math import gcd

            assert gcd(abs(r[0] - p[0]), abs(r[1] - p[1])) == mult

    def test_random_curves_balance(self):
        rng = random.Random(37)
        done = 0
        while done < 60:
            P = random_poly_operator(rng, max_i=3, max_j=3, max_k=4)
            if P.is_zero():
                continue
            assert tropical_curve(P).is_balanced()
            done += 1


class TestTropicalDegreeEquation:
    def test_flat_degree_of_example(self, example_annihilator):
        assert tropical_degree_check([0] * 12, example_annihilator)

    def test_cubic_fails(self, example_annihilator):
        assert not tropical_degree_check(
            [n**3 for n in range(12)], example_annihilator
        )

    def test_reversed_sequence_degrees(self, example_annihilator):
        # valuation of f_n(1/q) is minus the top degree of f_n
        rev = reverse_operator(example_annihilator)
        delta = [-max_degree(example_sequence(n)) for n in range(33)]
        assert tropical_degree_check(delta, rev, start=2)

    def test_top_degree_matches_quasi_polynomial(self):
        for n in range(13):
            assert max_degree(example_sequence(n)) == F(n * (3 * n + 1), 2)

    def test_short_range_rejected(self, example_annihilator):
        with pytest.raises(RangeTooShort):
            tropical_degree_check([0, 0], example_annihilator)


class TestCandidates:
    def test_example_contains_flat_solution(self, example_annihilator):
        assert (F(0), F(0)) in candidate_c1c2(example_annihilator)

    def test_two_point_support(self):
        assert candidate_c1c2([(0, 0, 0), (1, 1, 0)]) == {(F(1, 2), F(-1))}

    def test_equal_i_support_is_empty(self):
        assert candidate_c1c2([(1, 0, 0), (1, 1, 0), (1, 2, 5)]) == set()

    def test_reversed_example_contains_fitted_pair(self, example_annihilator):
        cands = candidate_c1c2(reverse_operator(example_annihilator))
        assert (F(-1, 2), F(-3)) in cands
