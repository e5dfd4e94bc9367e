# -*- coding: utf-8 -*-
import numpy as np

from lsvreg.config import GlobalConfig
from lsvreg.exceptions import (DimensionMismatch, InvalidProblemError,
                               NonConvergent)
from lsvreg.smoothmaps import BlackBoxMap, PolyMap, numeric_semiderivative


def test_parse_and_evaluate():
    F = PolyMap.from_text(2, ['x1^2 + 2*x2', '3 - x1*x2', 'x2**3'])
    assert F.in_dim == 2 and F.out_dim == 3
    assert np.allclose(F([1.0, 2.0]), [5.0, 1.0, 8.0])
    assert F.degree == 3 and not F.is_affine
    # zero and constant components
    G = PolyMap.from_text(1, ['0', '1'])
    assert np.allclose(G([7.0]), [0.0, 1.0])
    assert G.is_affine
    # like terms merge
    H = PolyMap.from_text(1, ['x1 + x1 - 2*x1'])
    assert H.to_text() == ['0']


def test_malformed_polynomials():
    cases = {
        '2*x3': 'component 0, position 2',
        'x1 +': 'component 0, position 4',
        'x1^1.5': 'component 0, position 3',
        'x1 $ 2': 'component 0, position 2',
        'x1 x2': 'component 0, position 3',
    }
    for text, location in cases.items():
        try:
            PolyMap.from_text(2, [text])
            raise AssertionError(f'{text!r} should not parse')
        except InvalidProblemError as err:
            assert err.location == location, (text, err.location)
            assert not err


def test_exact_derivatives():
    F = PolyMap.from_text(2, ['x1^2*x2', 'x1 - x2^2'])
    x = np.array([1.0, 2.0])
    assert np.allclose(F.derivative(x), [[4.0, 1.0], [1.0, -4.0]])
    # nabla F(x) is the transpose
    assert np.allclose(F.jacobian(x), F.derivative(x).T)
    assert np.allclose(F.directional_derivative(x, [1.0, 0.0]), [4.0, 1.0])
    T = F.second_derivative(x)
    assert np.allclose(T[0], [[4.0, 2.0], [2.0, 0.0]])
    assert np.allclose(T[1], [[0.0, 0.0], [0.0, -2.0]])
    w = np.array([0.0, 1.0])
    assert np.allclose(F.derivative_semiderivative(x, w),
                       np.einsum('ijk,k->ij', T, w))
    assert np.allclose(F.jacobian_semiderivative(x, w),
                       F.derivative_semiderivative(x, w).T)


def test_first_order_expansion():
    """F(x + t w) - F(x) - t F'(x) w = o(t)."""
    F = PolyMap.from_text(3, ['x1^2 + x2 + x3^2', 'x1*x3'])
    rng = GlobalConfig.init_rng(7)
    for _ in range(10):
        x, w = rng.normal(size=3), rng.normal(size=3)
        ratios = [
            np.linalg.norm(F(x + t * w) - F(x) - t * F.derivative(x) @ w) / t
            for t in (1e-2, 1e-3, 1e-4)
        ]
        assert ratios[2] < ratios[1] < ratios[0]
        assert ratios[2] < 1e-2 * (1 + np.linalg.norm(w)**2)


def test_algebra():
    x1 = PolyMap.variable(2, 0)
    x2 = PolyMap.variable(2, 1)
    F = x1 * x1 + x2.scale(3.0) - PolyMap.constant(2, [1.0])
    assert np.allclose(F([2.0, 1.0]), [6.0])
    L = PolyMap.linear([[1.0, 2.0], [0.0, -1.0]], [1.0, 0.0])
    M, c = L.affine_parts()
    assert np.allclose(M, [[1.0, 2.0], [0.0, -1.0]]) and np.allclose(c, [1, 0])
    stacked = PolyMap.stack(L, F)
    assert stacked.out_dim == 3
    embedded = F.embed(3, [2, 0])
    assert np.allclose(embedded([1.0, 5.0, 2.0]), F([2.0, 1.0]))
    assert np.allclose(PolyMap.identity(2)([3.0, 4.0]), [3.0, 4.0])
    try:
        L + F
        raise AssertionError('maps of different shapes do not add')
    except DimensionMismatch:
        pass
    try:
        F.affine_parts()
        raise AssertionError('a quadratic map has no affine parts')
    except DimensionMismatch:
        pass


def test_matvec():
    # M(x) = [[x1, 1], [0, x2]] times (x3, x4)
    M = PolyMap.from_text(4, ['x1', '1', '0', 'x2'])
    product = M.matvec(2, 2, [2, 3])
    assert np.allclose(product([2.0, 3.0, 5.0, 7.0]), [17.0, 21.0])


def test_payload():
    F = PolyMap.from_text(2, ['-x1^2 + 0.5*x2', '2', '0'])
    again = PolyMap.from_payload(F.to_payload())
    assert again.to_payload() == F.to_payload()
    x = np.array([0.3, -1.2])
    assert np.allclose(again(x), F(x))
    # coefficients produced by numpy arithmetic print as plain floats
    scaled = PolyMap.from_text(2, ['x1^2 - 3*x2 + 0.5',
                                   'x1*x2']).scale(np.float64(1.5))
    texts = scaled.to_payload()['components']
    assert texts == ['0.75 - 4.5*x2 + 1.5*x1^2', '1.5*x1*x2'], texts
    again = PolyMap.from_payload(scaled.to_payload())
    assert again.to_payload() == scaled.to_payload()
    assert np.allclose(again(x), scaled(x))
    # coefficient / exponent form
    raw = PolyMap.from_payload({
        'type': 'poly',
        'in_dim': 1,
        'components': [{'coeffs': [2.0], 'exps': [[2]]}]
    })
    assert raw.to_text() == ['2.0*x1^2']
    try:
        PolyMap.from_payload({'components': ['x1']})
        raise AssertionError('in_dim is required')
    except InvalidProblemError:
        pass


def test_black_box():
    square = PolyMap.from_text(1, ['x1^2'])
    box = BlackBoxMap.from_polymap(square)
    assert box.strictly_differentiable
    assert np.allclose(box.derivative([3.0]), [[6.0]], atol=1e-5)
    assert np.allclose(box.directional_derivative([3.0], [1.0]), [6.0],
                       atol=1e-6)
    assert np.allclose(box.jacobian_semiderivative([0.0], [1.0]), [[2.0]],
                       atol=1e-4)
    estimate, dispersion = numeric_semiderivative(abs, np.array([0.0]),
                                                  np.array([-1.0]))
    assert abs(float(estimate[0]) - 1.0) < 1e-9 and dispersion < 1e-12
    bad = BlackBoxMap(lambda x: np.array([1.0, 2.0]), 1, 1)
    try:
        bad([0.0])
        raise AssertionError('wrong output length')
    except DimensionMismatch:
        pass


def test_semiderivative_divergence():
    try:
        numeric_semiderivative(lambda x: np.sqrt(np.abs(x)), np.array([0.0]),
                               np.array([1.0]))
        raise AssertionError('sqrt|x| has no semiderivative at 0')
    except NonConvergent as err:
        assert not err


if __name__ == "__main__":
    for case in (
            test_parse_and_evaluate,
            test_malformed_polynomials,
            test_exact_derivatives,
            test_first_order_expansion,
            test_algebra,
            test_matvec,
            test_payload,
            test_black_box,
            test_semiderivative_divergence,
    ):
        case()
        print(case.__name__, 'ok')
