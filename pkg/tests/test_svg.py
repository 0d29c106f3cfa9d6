import xml.etree.ElementTree as ET

from qholo.newton import newton_polygon, newton_polytope3, tropical_curve
from qholo.operators import parse_operator
from qholo.svg import newton_polygon_svg, subdivision_svg, tropical_svg


def well_formed(svg: str) -> ET.Element:
    return ET.fromstring(svg)


class TestSvg:
    def test_polygon_svg_well_formed(self, example_annihilator):
        svg = newton_polygon_svg(newton_polygon(example_annihilator))
        root = well_formed(svg)
        assert root.tag.endswith("svg")
        assert "(0, 0)" in svg and "(2, 0)" in svg

    def test_subdivision_svg_well_formed(self, example_annihilator):
        svg = subdivision_svg(newton_polytope3(example_annihilator))
        well_formed(svg)
        # one stroked segment per cell polygon side, at least
        assert svg.count("<line") >= 10

    def test_tropical_svg_labels_vertices_and_multiplicities(
        self, example_annihilator
    ):
        svg = tropical_svg(tropical_curve(example_annihilator))
        well_formed(svg)
        assert "(0, -3/2)" in svg and "(3, -2)" in svg
        assert ">2</text>" in svg

    def test_single_vertex_polygon(self):
        svg = newton_polygon_svg(newton_polygon(parse_operator("M^2 L")))
        well_formed(svg)
        assert "(1, 2)" in svg

    def test_degenerate_tropical_curve(self):
        svg = tropical_svg(tropical_curve(parse_operator("L^2 + L + 1")))
        well_formed(svg)

    def test_byte_identical_reruns(self, example_annihilator):
        a = tropical_svg(tropical_curve(example_annihilator))
        b = tropical_svg(tropical_curve(example_annihilator))
        assert a == b
        c = subdivision_svg(newton_polytope3(example_annihilator))
        d = subdivision_svg(newton_polytope3(example_annihilator))
        assert c == d
