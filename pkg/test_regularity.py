# -*- coding: utf-8 -*-
import numpy as np

from lsvreg.config import GlobalConfig
from lsvreg.exceptions import (CurveOffGraph, EmptyGraphicalDerivative,
                               InconsistencyError)
from lsvreg.gendiff import DerivativeQuery, coderivative
from lsvreg.polyhedra import ConvexPolyhedron, PolyhedralSet
from lsvreg.regularity import (DirectionalNeighborhood, Property, Status,
                               check_gfrerer, check_metric2_regularity,
                               check_metric_regularity, classic2_regularity,
                               curve_falsifier, m2r_equiv_gfrerer, reg_chain,
                               sufficient_m2r_indicator_polyhedral)
from lsvreg.setmaps import GraphPolyhedral, Indicator, single_valued
from lsvreg.smoothmaps import PolyMap

R_PLUS = PolyhedralSet.from_rows(1, A=[[-1.0]], b=[0.0])
SQUARE = single_valued(PolyMap.from_text(1, ['x1^2']))


def test_metric_regularity():
    identity = single_valued(PolyMap.identity(2))
    verdict = check_metric_regularity(identity, [1.0, 2.0], [1.0, 2.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['property'] == Property.MetricRegular
    assert abs(verdict['modulus'] - 1.0) < 1e-9
    assert abs(verdict['details']['reg'] - 1.0) < 1e-9
    assert verdict.affirms and verdict.certified
    verdict = check_metric_regularity(SQUARE, [0.0], [0.0])
    assert verdict['status'] == Status.CertifiedNo
    assert verdict.denies and not verdict.affirms
    assert np.allclose(np.abs(verdict['witness']['z']), [1.0])
    assert verdict['trace'] == ['Thm(4.8)(d)']
    # away from the critical point the square is regular with modulus 1/|2u|
    verdict = check_metric_regularity(SQUARE, [2.0], [4.0])
    assert abs(verdict['modulus'] - 0.25) < 1e-9


def orthant_piece(dim, signs):
    """Coordinates free ('R'), nonnegative ('+'), nonpositive ('-') or 0."""
    A, E = [], []
    for i, sign in enumerate(signs):
        row = np.eye(dim)[i]
        if sign == '+':
            A.append(-row)
        elif sign == '-':
            A.append(row)
        elif sign == '0':
            E.append(row)
    return ConvexPolyhedron(dim, A=A or None, b=np.zeros(len(A)) if A else None,
                            E=E or None, e=np.zeros(len(E)) if E else None)


def unit_grid(dim, count=16):
    """Unit vectors at angles k * 2 pi / count, axes included."""
    if dim == 1:
        return [np.array([1.0]), np.array([-1.0])]
    angles = 2 * np.pi * np.arange(count) / count
    return [np.array([np.cos(a), np.sin(a)]) for a in angles]


def sheared(piece, n, T):
    """The piece under y -> T y, for an invertible T acting on the y block."""
    B = np.eye(piece.dim)
    B[n:, n:] = np.linalg.inv(T)
    return ConvexPolyhedron(piece.dim, A=piece.A @ B, b=piece.b,
                            E=piece.E @ B, e=piece.e)


SHEARS = {
    1: [np.array([[2.0]]), np.array([[-1.0]])],
    2: [np.array([[1.0, 1.0], [0.0, 1.0]]),
        np.array([[1.0, 0.0], [-1.0, 1.0]]),
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        np.array([[2.0, 1.0], [1.0, 1.0]])]
}


def test_kernel_criterion_on_orthant_graphs():
    """CertifiedNo exactly when some unit z has 0 in D*S(0|0)(z).

    Graphs are unions of orthant products in (u, y) with n, m <= 2; their
    coderivative kernels are spanned by coordinate rays, so a grid of angles
    containing the axes finds a kernel direction whenever one exists. Each
    of the 100 draws is also checked after an invertible shear of y, which
    maps the kernel linearly and leaves the verdict unchanged."""
    rng = GlobalConfig.init_rng(5)
    for _ in range(100):
        n, m = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        dim = n + m
        pieces = [
            orthant_piece(dim, rng.choice(['R', '+', '-', '0'], size=dim))
            for _ in range(int(rng.integers(1, 3)))
        ]
        S = GraphPolyhedral(PolyhedralSet(dim, pieces), n)
        u, y = np.zeros(n), np.zeros(m)
        verdict = check_metric_regularity(S, u, y)
        K = coderivative(DerivativeQuery(S, u, y))
        singular = any(K.value(z).contains(np.zeros(n)) for z in unit_grid(m))
        assert verdict.certified
        assert (verdict['status'] == Status.CertifiedNo) == singular, pieces
        T = SHEARS[m][int(rng.integers(len(SHEARS[m])))]
        S = GraphPolyhedral(
            PolyhedralSet(dim, [sheared(piece, n, T) for piece in pieces]), n)
        verdict = check_metric_regularity(S, u, y)
        assert verdict.certified
        assert (verdict['status'] == Status.CertifiedNo) == singular, (pieces,
                                                                       T)


def test_directional_neighborhood():
    hood = DirectionalNeighborhood([0.0, 0.0], [1.0, 0.0], 1.0, 0.5)
    assert hood.contains([0.5, 0.1])
    assert hood.contains([0.0, 0.0])
    assert not hood.contains([0.0, 0.5])
    assert not hood.contains([-0.5, 0.0])
    assert not hood.contains([2.0, 0.0])
    points = hood.sample(32, rng=GlobalConfig.init_rng(1))
    assert len(points) == 32
    assert all(hood.contains(p) for p in points)
    # w = 0 leaves the ball
    ball = DirectionalNeighborhood([1.0, 1.0], [0.0, 0.0], 0.5, 0.1)
    assert ball.contains([1.0, 0.6]) and ball.contains([0.7, 1.0])
    assert not ball.contains([1.0, 0.4])
    try:
        DirectionalNeighborhood([0.0], [1.0], 0.0, 1.0)
        raise AssertionError('radii should be positive')
    except ValueError:
        pass


def test_reg_chain():
    chain = reg_chain(PolyMap.zero(1, 1),
                      Indicator(PolyhedralSet.whole(1), 1), [0.0], [0.0])
    for key in ('sigma', 'constraint', 'indicator', 'lifted'):
        assert chain[key] < 1e-12, (key, chain[key])
    assert chain['ordered'] and chain['lifted_vanishes']
    chain = reg_chain(PolyMap.identity(1), Indicator(R_PLUS, 1), [1.0], [0.0])
    assert chain['ordered']
    assert abs(chain['sigma'] - 1.0) < 1e-9
    assert chain['trace'] == 'Thm(4.9)'


def test_reg_chain_on_random_affine_sums():
    """F + indicator of Omega with affine F and Omega one of R_+^2, a
    half-plane, R^2 or R_+^2 union R_-^2: the four Reg values come out
    ordered, and they all vanish once the lifted value does; otherwise
    reg_chain raises InconsistencyError."""
    rng = GlobalConfig.init_rng(8)
    vanished = 0
    for index in range(100):
        kind = index % 4
        if kind == 0:
            omega = PolyhedralSet.from_rows(2, A=-np.eye(2), b=np.zeros(2))
            u = rng.integers(0, 2, size=2).astype(float)
        elif kind == 1:
            normal = rng.normal(size=2).round(2)
            omega = PolyhedralSet.from_rows(2, A=[normal], b=[0.0])
            u = [np.zeros(2), -normal,
                 np.array([-normal[1], normal[0]])][int(rng.integers(3))]
        elif kind == 2:
            omega = PolyhedralSet.whole(2)
            u = rng.normal(size=2).round(2)
        else:
            omega = PolyhedralSet(2, [
                ConvexPolyhedron(2, A=-np.eye(2), b=np.zeros(2)),
                ConvexPolyhedron(2, A=np.eye(2), b=np.zeros(2))
            ])
            u = rng.choice([0.0, 1.0, -1.0]) * np.ones(2)
        if index % 5 == 0:
            M = np.outer(rng.integers(-2, 3, size=2),
                         rng.integers(-2, 3, size=2)).astype(float)
        else:
            M = rng.normal(size=(2, 2)).round(2)
        F = PolyMap.linear(M, rng.normal(size=2).round(2))
        try:
            chain = reg_chain(F, Indicator(omega, 2), u, np.zeros(2))
        except InconsistencyError as err:
            raise AssertionError(str(err))
        assert chain['ordered']
        assert chain['sigma'] >= chain['lifted'] - 1e-7
        if chain['lifted'] <= 1e-9:
            vanished += 1
            assert chain['lifted_vanishes']
            for key in ('sigma', 'constraint', 'indicator', 'lifted'):
                assert chain[key] <= 1e-6, (index, key, chain[key])
    assert vanished > 0


def test_metric2_regularity():
    verdict = check_metric2_regularity(SQUARE, [0.0], [0.0], [1.0])
    assert verdict['property'] == Property.Metric2Regular
    assert verdict.affirms
    assert verdict['status'] == Status.CertifiedYes
    assert abs(verdict['modulus'] - 0.5) < 1e-3
    assert verdict['details']['metric_regularity']['status'] == \
        Status.CertifiedNo
    # metric regularity implies metric 2-regularity
    identity = single_valued(PolyMap.identity(1))
    verdict = check_metric2_regularity(identity, [0.0], [0.0], [1.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['trace'][0] == 'Rem(5.2)'
    try:
        check_metric2_regularity(Indicator(R_PLUS, 1), [0.0], [0.0], [-1.0])
        raise AssertionError('DS(0|0)(-1) is empty')
    except EmptyGraphicalDerivative as err:
        assert not err
    try:
        check_metric2_regularity(SQUARE, [0.0], [0.0], [0.0])
        raise AssertionError('zero directions are rejected')
    except ValueError:
        pass


def test_gfrerer():
    verdict = check_gfrerer(SQUARE, [0.0], [0.0], [1.0], [1.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['trace'] == ['Def(6.1)']
    assert verdict['details']['tangent'] is False
    verdict = check_gfrerer(SQUARE, [0.0], [0.0], [1.0], [0.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['trace'] == ['Eq(6.1)', 'Thm(6.2)']
    assert abs(verdict['modulus'] - 0.5) < 1e-3
    report = m2r_equiv_gfrerer(SQUARE, [0.0], [0.0], [1.0])
    assert report['consistent'] and not report['undecided']
    assert len(report['gfrerer']) > GlobalConfig.ETA_GRID


def test_classic2_regularity():
    verdict = classic2_regularity(PolyMap.from_text(1, ['x1^2']), [0.0], [1.0])
    assert verdict['status'] == Status.CertifiedYes
    assert verdict['details']['Eq(6.2)'] and verdict['details']['Eq(6.3)']
    degenerate = PolyMap.from_text(2, ['x1^2', '0'])
    verdict = classic2_regularity(degenerate, [0.0, 0.0], [1.0, 0.0])
    assert verdict['status'] == Status.CertifiedNo
    assert np.allclose(np.abs(verdict['witness']['z']), [0.0, 1.0])
    assert not verdict['details']['Eq(6.3)']
    # u + indicator of R_+: the hull condition holds relative to C0
    verdict = classic2_regularity(PolyMap.from_text(1, ['x1']), [0.0], [1.0],
                                  c0_domain=R_PLUS)
    assert verdict['details']['Eq(5.7)'] is True


def test_sufficient_indicator_condition():
    verdict = sufficient_m2r_indicator_polyhedral(PolyMap.from_text(1, ['x1']),
                                                  R_PLUS, [0.0], [1.0])
    assert verdict['status'] == Status.SufficientConditionFails
    assert verdict['witness'] is not None
    assert not verdict.denies and not verdict.affirms


def test_curve_falsifier():
    evidence = curve_falsifier(SQUARE, [0.0], [0.0], lambda t: ([t], [t * t]))
    assert not evidence.against
    assert np.allclose(evidence['direction'], [1.0])
    flat = single_valued(PolyMap.zero(1, 1))
    evidence = curve_falsifier(flat, [0.0], [0.0], lambda t: ([t], [0.0]))
    assert evidence.against
    assert evidence['verdict']['status'] == Status.NumericEvidenceAgainst
    try:
        curve_falsifier(SQUARE, [0.0], [0.0], lambda t: ([t], [1.0]))
        raise AssertionError('the curve leaves the graph')
    except CurveOffGraph as err:
        assert not err


if __name__ == "__main__":
    for case in (
            test_metric_regularity,
            test_kernel_criterion_on_orthant_graphs,
            test_directional_neighborhood,
            test_reg_chain,
            test_reg_chain_on_random_affine_sums,
            test_metric2_regularity,
            test_gfrerer,
            test_classic2_regularity,
            test_sufficient_indicator_condition,
            test_curve_falsifier,
    ):
        case()
        print(case.__name__, 'ok')
