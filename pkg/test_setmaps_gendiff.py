# -*- coding: utf-8 -*-
import numpy as np

from lsvreg.config import GlobalConfig
from lsvreg.exceptions import BasepointOffGraph, InvalidProblemError
from lsvreg.gendiff import (DerivativeQuery, coderivative, coderivative_kernel,
                            graph_route_coderivative,
                            graph_route_graphical_derivative,
                            graphical_derivative)
from lsvreg.polyhedra import ConvexPolyhedron, PolyhedralSet
from lsvreg.setmaps import (ConstantSet, GraphPolyhedral, Indicator,
                            NormalConeMap, Product, SmoothPlus,
                            mapping_from_payload, outer_semicontinuity_probe,
                            single_valued)
from lsvreg.smoothmaps import PolyMap


def orthant(dim, sign=1.0):
    return PolyhedralSet.from_rows(dim, A=-sign * np.eye(dim),
                                   b=np.zeros(dim))


R_PLUS = orthant(1)
R_MINUS = orthant(1, -1.0)
ZERO = PolyhedralSet.origin(1)


def test_graphs():
    assert Indicator(R_PLUS, 1).graph().equals(R_PLUS.product(ZERO))
    normal_map = NormalConeMap(R_PLUS)
    expected = R_PLUS.product(ZERO).union(ZERO.product(R_MINUS))
    assert normal_map.graph().equals(expected)
    assert normal_map.contains([0.0], [-2.0])
    assert not normal_map.contains([1.0], [-2.0])
    plus = SmoothPlus(PolyMap.from_text(1, ['x1']), Indicator(R_PLUS, 1))
    diagonal = PolyhedralSet.from_rows(2, A=[[-1.0, 0.0]], b=[0.0],
                                       E=[[1.0, -1.0]], e=[0.0])
    assert plus.graph().equals(diagonal)
    assert plus.value_at([2.0]).contains([2.0])
    assert plus.value_at([-2.0]).is_empty()
    # (x, u) => Delta_{R+}(x) x R+
    product = Product(Indicator(R_PLUS, 1), ConstantSet(R_PLUS, 1))
    assert product.contains([1.0, -5.0], [0.0, 3.0])
    assert not product.contains([-1.0, -5.0], [0.0, 3.0])
    assert product.graph().contains([1.0, -5.0, 0.0, 3.0])
    assert not product.graph().contains([1.0, -5.0, 0.0, -3.0])
    F = PolyMap.linear([[2.0]])
    assert single_valued(F).contains([1.0], [2.0])
    assert not single_valued(F).contains([1.0], [2.5])


def test_payload():
    plus = SmoothPlus(PolyMap.from_text(1, ['x1 + 1']), Indicator(R_PLUS, 1))
    again = mapping_from_payload(plus.to_payload())
    assert again.graph().equals(plus.graph())
    graph_map = GraphPolyhedral(NormalConeMap(R_PLUS).graph(), 1)
    assert mapping_from_payload(graph_map.to_payload()).graph().equals(
        graph_map.graph())
    normal_map = mapping_from_payload({
        'type': 'normal_cone',
        'set': R_PLUS.to_payload()
    })
    assert isinstance(normal_map, NormalConeMap)
    for bad in ({'type': 'warp'}, {'type': 'indicator'}):
        try:
            mapping_from_payload(bad)
            raise AssertionError(f'{bad} should be rejected')
        except InvalidProblemError as err:
            assert not err


def test_indicator_coderivative():
    query = DerivativeQuery(Indicator(R_PLUS, 1), [0.0], [0.0])
    K = coderivative(query)
    assert K.arg_dim == 1 and K.val_dim == 1
    assert K.domain().equals(PolyhedralSet.whole(1))
    cone, closure_taken = K.range_cone()
    assert cone.equals(R_MINUS) and not closure_taken
    assert K.contains([1.0], [-2.0])
    assert not K.contains([1.0], [2.0])
    assert K.value_at_zero().equals(R_MINUS)
    assert coderivative_kernel(K).equals(PolyhedralSet.whole(1))
    # interior point: the coderivative vanishes
    inner = coderivative(DerivativeQuery(Indicator(R_PLUS, 1), [3.0], [0.0]))
    assert inner.value([5.0]).equals(ZERO)


def test_normal_cone_map_derivatives():
    query = DerivativeQuery(NormalConeMap(R_PLUS), [0.0], [0.0])
    K = coderivative(query)
    # D*N(0|0)(z): R at z = 0, R- for z < 0, {0} for z > 0
    assert K.contains([0.0], [5.0])
    assert K.contains([-1.0], [-3.0])
    assert not K.contains([-1.0], [3.0])
    assert K.contains([1.0], [0.0])
    assert not K.contains([1.0], [-1.0])
    D = graphical_derivative(query)
    assert D.domain().equals(R_PLUS)
    assert D.value([0.0]).equals(R_MINUS)
    assert D.value([1.0]).equals(ZERO)


def test_positive_homogeneity():
    K = coderivative(DerivativeQuery(NormalConeMap(R_PLUS), [0.0], [0.0]))
    grid = [-1.0, -0.5, 0.0, 0.5, 1.0]
    for z in grid:
        for v in grid:
            for t in (0.25, 3.0):
                assert K.contains([z], [v]) == K.contains([t * z], [t * v])


def test_homogeneous_map_algebra():
    K = coderivative(DerivativeQuery(Indicator(R_PLUS, 1), [0.0], [0.0]))
    sheared = K.shear([[2.0]])
    assert sheared.contains([1.0], [1.0])
    assert not sheared.contains([1.0], [3.0])
    inverse = K.inverse()
    assert inverse.contains([-2.0], [1.0])
    assert inverse.domain().equals(R_MINUS)
    both = K.product(K)
    assert both.arg_dim == 2
    assert both.contains([1.0, 1.0], [-1.0, 0.0])
    assert not both.contains([1.0, 1.0], [-1.0, 1.0])
    assert both.permute_args([1, 0]).equals(both)


def test_off_graph_basepoint():
    try:
        DerivativeQuery(Indicator(R_PLUS, 1), [-1.0], [0.0])
        raise AssertionError('(-1, 0) is not on the graph')
    except BasepointOffGraph as err:
        assert not err
    try:
        DerivativeQuery(Indicator(R_PLUS, 1), [0.0], [0.0], kind='other')
        raise AssertionError('unknown derivative kind')
    except ValueError:
        pass


def test_structural_rules_match_graph_route():
    """The sum, product, indicator and constant rules agree with tangent and
    limiting normal cones of the explicit graph on seeded affine cases."""
    rng = GlobalConfig.init_rng(11)
    for _ in range(24):
        n, m = rng.integers(1, 3), rng.integers(1, 3)
        M = rng.normal(size=(m, n)).round(2)
        c = rng.normal(size=m).round(2)
        mapping = SmoothPlus(PolyMap.linear(M, c), Indicator(orthant(n), m))
        u = rng.integers(0, 2, size=n).astype(float)
        y = M @ u + c
        assert coderivative(DerivativeQuery(mapping, u, y)).equals(
            graph_route_coderivative(mapping, u, y))
        assert graphical_derivative(DerivativeQuery(mapping, u, y)).equals(
            graph_route_graphical_derivative(mapping, u, y))
    product = Product(Indicator(R_PLUS, 1), ConstantSet(R_PLUS, 1))
    for u, y in (([0.0, 2.0], [0.0, 0.0]), ([1.0, -1.0], [0.0, 0.0]),
                 ([0.0, 0.0], [0.0, 4.0]), ([3.0, 1.0], [0.0, 1.0])):
        query = DerivativeQuery(product, u, y)
        assert coderivative(query).equals(
            graph_route_coderivative(product, u, y))
        assert graphical_derivative(query).equals(
            graph_route_graphical_derivative(product, u, y))


def test_outer_semicontinuity_probe():
    directions = np.array([[1.0], [-1.0]])
    steady = outer_semicontinuity_probe(lambda xi, z: R_PLUS, [0.0], [[0.0]],
                                        directions=directions)
    assert not steady.violated
    assert steady['evidence'] == 'no counterexample'
    one = PolyhedralSet(1, [ConvexPolyhedron.point([1.0])])
    jumping = outer_semicontinuity_probe(
        lambda xi, z: ZERO if not np.any(xi) else one, [0.0], [[0.0]],
        directions=directions)
    assert jumping.violated
    assert np.allclose(jumping['counterexample']['eta'], [1.0])
    # conic hulls: rays {t} for xi != 0 escape the limit {0}
    conic = outer_semicontinuity_probe(
        lambda xi, z: ZERO if not np.any(xi) else one, [0.0], [[0.0]],
        conic=True, directions=directions)
    assert conic.violated


if __name__ == "__main__":
    for case in (
            test_graphs,
            test_payload,
            test_indicator_coderivative,
            test_normal_cone_map_derivatives,
            test_positive_homogeneity,
            test_homogeneous_map_algebra,
            test_off_graph_basepoint,
            test_structural_rules_match_graph_route,
            test_outer_semicontinuity_probe,
    ):
        case()
        print(case.__name__, 'ok')
