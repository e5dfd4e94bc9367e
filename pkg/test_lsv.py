# -*- coding: utf-8 -*-
from math import inf, isinf

import numpy as np

import lsvreg.lsv as lsv_module
from lsvreg.config import GlobalConfig
from lsvreg.exceptions import ConditionFailed, InconsistencyError
from lsvreg.gendiff import DerivativeQuery, coderivative
from lsvreg.lsv import (LsvInstance, SubderivativeBound, _direct_outer_norm,
                        calmness_constant, combine_bounds, lower_bound_theorem32,
                        lower_bound_theorem35, lsv_of_map, lsv_result,
                        lsv_value, outer_norm, reg_value, singularity_report,
                        solution_cone, subderivative_estimate, theta_cone)
from lsvreg.polyhedra import ConvexPolyhedron, PolyhedralSet
from lsvreg.setmaps import (HomogeneousPiecewiseMap, Indicator, SmoothPlus,
                            single_valued)
from lsvreg.smoothmaps import PolyMap

R_PLUS = PolyhedralSet.from_rows(1, A=[[-1.0]], b=[0.0])


def linear_map(M):
    M = np.atleast_2d(M)
    q, m = M.shape
    graph = PolyhedralSet.from_rows(m + q, E=np.hstack([M, -np.eye(q)]),
                                    e=np.zeros(q))
    return HomogeneousPiecewiseMap(graph, m)


def example_3_5():
    # Gamma(0, z) = {0, -1} on {0} x R_-, over (xi, z1, z2, eta)
    rows = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
    gamma = PolyhedralSet(4, [
        ConvexPolyhedron(4, A=[[0, 0, 1, 0]], b=[0.0], E=rows, e=[0, 0, 0]),
        ConvexPolyhedron(4, A=[[0, 0, 1, 0]], b=[0.0], E=rows, e=[0, 0, -1]),
    ])
    return LsvInstance(PolyMap.from_text(1, ['1', '0']), 2, 1,
                       gamma_graph=gamma)


def example_3_7():
    # A(xi) = (xi, xi^2), Gamma(xi, z) = {-xi} on R x {0}
    gamma = PolyhedralSet.from_rows(4, E=[[0, 0, 1, 0], [1, 0, 0, 1]],
                                    e=[0.0, 0.0])
    return LsvInstance(PolyMap.from_text(1, ['x1', 'x1^2']), 2, 1,
                       gamma_graph=gamma)


def test_lsv_of_linear_maps():
    inst = LsvInstance(PolyMap.constant(1, [3.0, 0.0, 0.0, 2.0]), 2, 2)
    result = lsv_result(inst, [0.0])
    assert abs(result['value'] - 2.0) < 1e-9
    assert result['exact']
    assert np.allclose(np.abs(result['z']), [0.0, 1.0], atol=1e-7)
    assert abs(inst.lsv([5.0]) - 2.0) < 1e-9
    assert abs(lsv_of_map(linear_map([[0.0, -4.0], [1.0, 0.0]]))['value'] -
               1.0) < 1e-9


def test_reciprocal_outer_norm():
    """lsv(K) * |K^-1|+ = 1, with both sides computed independently."""
    rng = GlobalConfig.init_rng(3)
    checked = 0
    while checked < 50:
        M = rng.normal(size=(2, 2))
        if abs(np.linalg.det(M)) < 0.1:
            continue
        checked += 1
        K = linear_map(M)
        ell = lsv_of_map(K)['value']
        assert abs(ell - np.linalg.svd(M, compute_uv=False).min()) < 1e-7
        assert abs(_direct_outer_norm(K) * ell - 1.0) < 1e-6
        assert abs(outer_norm(K) * ell - 1.0) < 1e-6
    for _ in range(10):
        a = rng.integers(1, 4, size=2).astype(float)
        b = rng.integers(-3, 4, size=2).astype(float)
        if not np.any(b):
            b[0] = 1.0
        K = linear_map(np.outer(a, b))
        assert isinf(outer_norm(K))
        assert isinf(_direct_outer_norm(K))


def two_piece_map(M_right, M_left):
    # z -> M_right z on z1 >= 0 and z -> M_left z on z1 <= 0
    pieces = [
        ConvexPolyhedron(4, A=[[-sign, 0.0, 0.0, 0.0]], b=[0.0],
                         E=np.hstack([M, -np.eye(2)]), e=np.zeros(2))
        for sign, M in ((1.0, M_right), (-1.0, M_left))
    ]
    return HomogeneousPiecewiseMap(PolyhedralSet(4, pieces), 2)


def grid_lsv(M_right, M_left, points=20001):
    angles = np.linspace(0.0, 2 * np.pi, points)
    Z = np.stack([np.cos(angles), np.sin(angles)])
    right = np.linalg.norm(M_right @ Z, axis=0)
    left = np.linalg.norm(M_left @ Z, axis=0)
    right[Z[0] < -1e-12] = inf
    left[Z[0] > 1e-12] = inf
    return float(np.minimum(right, left).min())


def test_reciprocal_outer_norm_on_piecewise_maps():
    """Unions of linear pieces on the half-planes z1 >= 0 and z1 <= 0."""
    rng = GlobalConfig.init_rng(11)
    checked = 0
    while checked < 50:
        M_right, M_left = rng.normal(size=(2, 2, 2))
        if min(abs(np.linalg.det(M_right)), abs(np.linalg.det(M_left))) < 0.1:
            continue
        checked += 1
        K = two_piece_map(M_right, M_left)
        ell = lsv_of_map(K)['value']
        reference = grid_lsv(M_right, M_left)
        assert abs(ell - reference) < 1e-4 * (1 + reference), (ell, reference)
        assert abs(_direct_outer_norm(K) * ell - 1.0) < 1e-6
        assert abs(outer_norm(K) * ell - 1.0) < 1e-6
    # continuous across z1 = 0 when the second columns agree
    M_right = np.array([[2.0, 1.0], [0.0, 1.0]])
    M_left = np.array([[0.5, 1.0], [0.0, 1.0]])
    K = two_piece_map(M_right, M_left)
    ell = lsv_of_map(K)['value']
    assert abs(ell - grid_lsv(M_right, M_left)) < 1e-6
    assert abs(outer_norm(K) * ell - 1.0) < 1e-6
    # a left piece that kills (-1, 0) leaves the lsv at zero
    K = two_piece_map(np.eye(2), np.array([[0.0, 1.0], [0.0, 1.0]]))
    assert lsv_of_map(K)['value'] < 1e-12
    assert isinf(outer_norm(K)) and isinf(_direct_outer_norm(K))


def test_outer_norm_disagreement_raises():
    K = linear_map([[2.0, 0.0], [0.0, 4.0]])
    assert abs(outer_norm(K) - 0.5) < 1e-9
    original = lsv_module._direct_outer_norm
    lsv_module._direct_outer_norm = lambda K: 3.0
    try:
        try:
            outer_norm(K)
            raise AssertionError('1/lsv = 0.5 against a direct value of 3')
        except InconsistencyError as err:
            assert 'disagrees' in str(err)
        assert abs(outer_norm(K, cross_check=False) - 0.5) < 1e-9
    finally:
        lsv_module._direct_outer_norm = original


def test_piecewise_lsv():
    K = coderivative(DerivativeQuery(Indicator(R_PLUS, 1), [0.0], [0.0]))
    # every z maps onto R_-, which contains 0
    assert lsv_of_map(K)['value'] < 1e-12
    assert isinf(outer_norm(K))
    S = SmoothPlus(PolyMap.from_text(1, ['x1']), Indicator(R_PLUS, 1))
    assert lsv_of_map(coderivative(DerivativeQuery(S, [0.0], [0.0]
                                                   )))['value'] < 1e-12
    assert abs(reg_value(S, [0.5], [0.5]) - 1.0) < 1e-9
    assert reg_value(S, [0.5], [0.7]) == inf
    assert abs(reg_value(single_valued(PolyMap.linear([[2.0]])), [1.0],
                         [2.0]) - 2.0) < 1e-9


def test_instance_from_sum():
    S = SmoothPlus(PolyMap.from_text(1, ['x1']), Indicator(R_PLUS, 1))
    inst = LsvInstance.from_mapping(S)
    assert inst.is_graph and inst.cone_valued
    assert abs(lsv_value(inst, [0.5, 0.0]) - 1.0) < 1e-9
    assert lsv_value(inst, [0.0, 0.0]) < 1e-12
    # off D = gph C the value is +inf
    assert lsv_value(inst, [-1.0, 0.0]) == inf


def test_singularity():
    report = singularity_report(example_3_7(), [0.0])
    assert report['is_singular']
    assert report['representation'] == 'explicit'
    witnesses = sorted(tuple(np.round(w, 9)) for w in report['witnesses'])
    assert witnesses == [(-1.0, 0.0), (1.0, 0.0)]
    assert report['lsv_value'] < 1e-12
    assert solution_cone(example_3_7(), [0.0]).contains([4.0, 0.0])
    regular = LsvInstance(PolyMap.constant(1, [3.0, 0.0, 0.0, 2.0]), 2, 2)
    report = singularity_report(regular, [0.0])
    assert not report['is_singular'] and report['witnesses'] == []


def test_bound_with_calmness():
    inst = example_3_5()
    assert calmness_constant(inst, [0.0]) == 0.0
    assert theta_cone(inst, [0.0]).contains([-3.0])
    bound = lower_bound_theorem32(inst, [0.0], [1.0])
    assert isinstance(bound, SubderivativeBound)
    assert bound['theorem'] == 'Thm(3.2)'
    assert bound['certified'] and bound['calmness'] == 0.0
    assert bound['conditions']['vi'] == 'verified'
    refused = lower_bound_theorem35(inst, [0.0], [1.0])
    assert isinstance(refused, ConditionFailed) and not refused
    assert refused.condition == "v'"
    combined = combine_bounds(inst, [0.0], [1.0])
    assert combined.available and combined['certified']
    assert combined['source'] == 'Thm(3.2)'
    assert combined['value'] == bound['value']
    assert combined['attempts'][1]['refused'] == "v'"


def test_bounds_need_a_singular_parameter():
    regular = LsvInstance(PolyMap.constant(1, [3.0, 0.0, 0.0, 2.0]), 2, 2)
    for bound in (lower_bound_theorem32(regular, [0.0], [1.0]),
                  lower_bound_theorem35(regular, [0.0], [1.0])):
        assert isinstance(bound, ConditionFailed)
        assert bound.condition == 'i'
    combined = combine_bounds(regular, [0.0], [1.0])
    assert not combined.available and not combined['certified']


def test_cone_bound_refuses_without_semicontinuity():
    refused = lower_bound_theorem35(example_3_7(), [0.0], [1.0])
    assert isinstance(refused, ConditionFailed)
    assert refused.condition == "iv'"
    assert refused.witness is not None


def test_subderivative_estimate():
    estimate = subderivative_estimate(lambda x: abs(x[0]), [0.0], [1.0])
    assert abs(estimate['value'] - 1.0) < 1e-3
    assert not estimate['diverged']
    assert len(estimate['quotients']) == len(GlobalConfig.SEMI_SCHEDULE)
    steep = subderivative_estimate(lambda x: np.sqrt(abs(x[0])), [0.0], [1.0])
    assert steep['diverged'] and steep['value'] == inf
    # directions leaving the domain of phi: no admissible points
    outside = subderivative_estimate(lambda x: x[0], [0.0], [-1.0],
                                     sampler=lambda p: np.maximum(p, 0.0))
    assert outside['diverged'] and outside['value'] == inf


if __name__ == "__main__":
    for case in (
            test_lsv_of_linear_maps,
            test_reciprocal_outer_norm,
            test_reciprocal_outer_norm_on_piecewise_maps,
            test_outer_norm_disagreement_raises,
            test_piecewise_lsv,
            test_instance_from_sum,
            test_singularity,
            test_bound_with_calmness,
            test_bounds_need_a_singular_parameter,
            test_cone_bound_refuses_without_semicontinuity,
            test_subderivative_estimate,
    ):
        case()
        print(case.__name__, 'ok')
