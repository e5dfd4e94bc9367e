# -*- coding: utf-8 -*-
from math import sqrt

import numpy as np

from lsvreg.exceptions import PointNotInSet
from lsvreg.polyhedra import (ConvexPolyhedron, PolyhedralCone, PolyhedralSet,
                              cone_is_trivial, limiting_normal_cone, polar)
from lsvreg.utils import LazyImporter, lp_feasible_point, qp_project

R_PLUS = PolyhedralSet.from_rows(1, A=[[-1.0]], b=[0.0])


def orthant(dim, sign=1.0):
    return PolyhedralSet.from_rows(dim, A=-sign * np.eye(dim),
                                   b=np.zeros(dim))


def test_convex_polyhedron():
    box = ConvexPolyhedron(2, A=np.vstack([np.eye(2), -np.eye(2)]),
                           b=[1.0, 1.0, 1.0, 1.0])
    assert not box.is_empty()
    assert box.contains([1.0, -1.0])
    assert not box.contains([1.1, 0.0])
    assert ConvexPolyhedron.empty(3).is_empty()
    assert ConvexPolyhedron.origin(2).is_conic
    assert not box.is_conic
    # active rows at a corner
    assert sorted(box.active([1.0, 1.0])) == [0, 1]
    assert abs(box.maximize([1.0, 1.0]) - 2.0) < 1e-9
    assert np.allclose(box.argmax([1.0, 2.0]), [1.0, 1.0])


def test_tangent_and_normal_cones():
    # interior point: tangent cone is the whole line, normal cone {0}
    assert R_PLUS.tangent_cone([1.0]).equals(PolyhedralSet.whole(1))
    assert R_PLUS.normal_cone([1.0]).equals(PolyhedralSet.origin(1))
    # boundary point: T = R_+, N = R_-
    assert R_PLUS.tangent_cone([0.0]).equals(R_PLUS)
    assert R_PLUS.normal_cone([0.0]).equals(orthant(1, -1.0))
    try:
        R_PLUS.tangent_cone([-1.0])
        raise AssertionError('a point off the set has no tangent cone')
    except PointNotInSet as err:
        assert not err


def test_limiting_normal_cone_of_union():
    # the cross {x2 = 0} u {x1 = 0}
    cross = PolyhedralSet(2, [
        ConvexPolyhedron(2, E=[[0.0, 1.0]], e=[0.0]),
        ConvexPolyhedron(2, E=[[1.0, 0.0]], e=[0.0])
    ])
    normals = limiting_normal_cone(cross, [0.0, 0.0])
    assert normals.contains([0.0, 1.0])
    assert normals.contains([3.0, 0.0])
    assert not normals.contains([1.0, 1.0])
    # complementarity set {x <= 0, y >= 0, x y = 0}
    comp = PolyhedralSet(2, [
        ConvexPolyhedron(2, A=[[1.0, 0.0]], b=[0.0], E=[[0.0, 1.0]], e=[0.0]),
        ConvexPolyhedron(2, A=[[0.0, -1.0]], b=[0.0], E=[[1.0, 0.0]], e=[0.0])
    ])
    normals = comp.normal_cone([0.0, 0.0])
    # regular normals at 0 and the limits from both branches
    for point in ([1.0, -1.0], [0.0, 1.0], [0.0, -1.0], [1.0, 0.0],
                  [-1.0, 0.0]):
        assert normals.contains(point), point
    assert not normals.contains([-1.0, 1.0])


def test_polar_and_triviality():
    cone = PolyhedralCone(2, orthant(2).pieces)
    assert polar(cone).equals(orthant(2, -1.0))
    assert cone.polar().polar().equals(cone)
    assert cone_is_trivial(PolyhedralCone.origin(3))
    assert not cone_is_trivial(cone)
    assert PolyhedralCone.origin(2).is_trivial()


def test_set_algebra():
    first = orthant(2)
    second = orthant(2, -1.0)
    meet = first.intersect(second)
    assert meet.equals(PolyhedralSet.origin(2))
    assert first.minkowski_sum(second).equals(PolyhedralSet.whole(2))
    assert first.union(second).contains([-1.0, -2.0])
    assert not first.union(second).contains([-1.0, 2.0])
    # image of R_+^2 under (x, y) -> x - y is the line
    assert first.linear_image([[1.0, -1.0]]).equals(PolyhedralSet.whole(1))
    # preimage of R_+ under x -> x1 + x2
    half = R_PLUS.linear_preimage([[1.0, 1.0]])
    assert half.contains([2.0, -1.0]) and not half.contains([-2.0, 1.0])
    assert first.project([0]).equals(R_PLUS)
    assert first.fix([0], [3.0]).equals(R_PLUS)
    product = R_PLUS.product(PolyhedralSet.origin(1))
    assert product.contains([2.0, 0.0]) and not product.contains([2.0, 1.0])
    assert first.issubset(PolyhedralSet.whole(2))
    assert not PolyhedralSet.whole(2).issubset(first)


def test_union_simplify():
    big = orthant(2)
    small = PolyhedralSet.from_rows(2, A=-np.eye(2), b=[-1.0, -1.0])
    union = big.union(small).union(PolyhedralSet.empty(2))
    assert len(union.simplify()) == 1
    assert union.simplify().equals(big)


def test_distance_and_projection():
    assert abs(orthant(2).distance([-1.0, -1.0]) - sqrt(2)) < 1e-7
    assert orthant(2).distance([1.0, 2.0]) < 1e-9
    assert PolyhedralSet.empty(2).distance([0.0, 0.0]) == float('inf')
    projected = qp_project(np.array([-1.0, 2.0]), A=-np.eye(2),
                           b=np.zeros(2))
    assert np.allclose(projected, [0.0, 2.0], atol=1e-7)
    point = lp_feasible_point(2, A=-np.eye(2), b=[-1.0, -1.0])
    assert point is not None and np.all(point >= 1.0 - 1e-9)
    assert lp_feasible_point(1, A=[[1.0], [-1.0]], b=[-1.0, -1.0]) is None


def test_payload():
    union = orthant(2).union(
        PolyhedralSet.from_rows(2, E=[[1.0, 1.0]], e=[1.0]))
    again = PolyhedralSet.from_payload(union.to_payload())
    assert again.equals(union)
    assert again.to_payload()['type'] == 'polyhedral'
    assert again.to_payload()['dim'] == 2


def test_lazy_importer():
    lib = LazyImporter()
    lib.register('hypot', 'math')
    lib.register('root', 'math', 'sqrt')
    assert lib.hypot(3, 4) == 5.0
    assert lib.root(16.0) == 4.0
    assert 'hypot' not in lib.backends
    try:
        lib.missing
        raise AssertionError('unregistered names should raise')
    except AttributeError:
        pass


if __name__ == "__main__":
    for case in (
            test_convex_polyhedron,
            test_tangent_and_normal_cones,
            test_limiting_normal_cone_of_union,
            test_polar_and_triviality,
            test_set_algebra,
            test_union_simplify,
            test_distance_and_projection,
            test_payload,
            test_lazy_importer,
    ):
        case()
        print(case.__name__, 'ok')
