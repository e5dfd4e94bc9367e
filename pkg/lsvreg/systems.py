# -*- coding: utf-8 -*-
"""Coupled constraint systems 0 = Phi(x, sigma), x in Omega, 0 in T(sigma) and
variational systems 0 in f(x) + M(x) N_C0(g(x)), compiled into G + P."""

from logging import getLogger

import numpy as np

from .config import GlobalConfig
from .exceptions import (ConditionFailed, DimensionMismatch,
                         DirectionNotInDomain, InconsistencyError,
                         InvalidProblemError, NotASolution, NotPolyhedral)
from .gendiff import DerivativeQuery, coderivative, graphical_derivative
from .polyhedra import PolyhedralSet
from .regularity import (Property, RegularityVerdict, Status, _verdict,
                         check_metric_regularity,
                         sufficient_m2r_polyhedral_mapping)
from .setmaps import (ConstantSet, GraphPolyhedral, HomogeneousPiecewiseMap,
                      NormalConeMap, Product, SmoothPlus, StructuredMapping,
                      mapping_from_payload)
from .smoothmaps import PolyMap
from .utils import as_vector, unit

logger = getLogger('lsvreg')
__all__ = [
    'ConstraintSystem', 'VariationalSystem', 'compile_constraint_system',
    'compile_unconstrained', 'compiled_coderivative', 'cs_metric_regularity',
    'cs_metric2_regularity_polyhedral', 'cs_metric2_regularity_unconstrained',
    'compile_variational_system', 'vs_T_coderivative', 'vs_metric_regularity',
    'vs_metric2_regularity', 'alpha_sweep'
]


def _not_a_solution(msg):
    logger.error(msg)
    return NotASolution(msg)


class ConstraintSystem(object):
    """0 = Phi(x, sigma), x in Omega, 0 in T(sigma).

    Phi: R^k x R^l -> R^p, Omega in R^k, T: R^l => R^q."""

    def __init__(self, phi: PolyMap, omega: PolyhedralSet,
                 T: StructuredMapping, t_regular_granted=False):
        self.k = omega.dim
        self.l = T.in_dim
        self.p = phi.out_dim
        self.q = T.out_dim
        if phi.in_dim != self.k + self.l:
            raise DimensionMismatch(
                f'Phi takes {phi.in_dim} variables, Omega and T need '
                f'{self.k} + {self.l}')
        self.phi = phi
        self.omega = omega
        self.T = T
        # T is metrically regular by construction (variational systems)
        self.t_regular_granted = t_regular_granted

    def point(self, x, sigma):
        return np.hstack([
            as_vector(x, self.k, 'x'),
            as_vector(sigma, self.l, 'sigma')
        ])

    def check_solution(self, x, sigma):
        point = self.point(x, sigma)
        x, sigma = point[:self.k], point[self.k:]
        residual = self.phi(point)
        if np.abs(residual).max(initial=0.0) > GlobalConfig.TOL_EQ:
            raise _not_a_solution(f'Phi(x, sigma) = {residual.tolist()}')
        if not self.omega.contains(x):
            raise _not_a_solution(f'x = {x.tolist()} is not in Omega')
        if not self.T.contains(sigma, np.zeros(self.q)):
            raise _not_a_solution(f'0 is not in T({sigma.tolist()})')
        return x, sigma

    @property
    def unconstrained(self):
        return self.omega.equals(PolyhedralSet.whole(self.k))

    def to_payload(self):
        return {
            'phi': self.phi.to_payload(),
            'omega': self.omega.to_payload(),
            'T': self.T.to_payload()
        }

    @classmethod
    def from_payload(cls, payload):
        try:
            return cls(PolyMap.from_payload(payload['phi']),
                       PolyhedralSet.from_payload(payload['omega']),
                       mapping_from_payload(payload['T']))
        except KeyError as err:
            raise InvalidProblemError(f'constraint system misses {err}')

    def __repr__(self):
        return (f'ConstraintSystem(k={self.k}, l={self.l}, p={self.p}, '
                f'q={self.q})')


def compile_constraint_system(cs: ConstraintSystem):
    """(G, P) with G(x, sigma) = (-x, Phi(x, sigma), 0) and
    P(x, sigma) = Omega x {0} x T(sigma)."""
    k, l, p, q = cs.k, cs.l, cs.p, cs.q
    minus_x = PolyMap.linear(np.hstack([-np.eye(k), np.zeros((k, l))]))
    G = PolyMap.stack(minus_x, cs.phi, PolyMap.zero(k + l, q))
    R = ConstantSet(cs.omega.product(PolyhedralSet.origin(p)), k)
    return G, Product(R, cs.T)


def compile_unconstrained(cs: ConstraintSystem):
    """(G~, P~) with G~ = (Phi, 0) and P~(x, sigma) = {0} x T(sigma)."""
    k, l, p, q = cs.k, cs.l, cs.p, cs.q
    G = PolyMap.stack(cs.phi, PolyMap.zero(k + l, q))
    return G, Product(ConstantSet(PolyhedralSet.origin(p), k), cs.T)


def _t_coderivative(cs: ConstraintSystem, sigma) -> HomogeneousPiecewiseMap:
    return coderivative(DerivativeQuery(cs.T, sigma, np.zeros(cs.q)))


def compiled_coderivative(cs: ConstraintSystem, x,
                          sigma) -> HomogeneousPiecewiseMap:
    """D*P((x, sigma)|(x, 0, 0))(alpha, beta, gamma) =
    Delta(x, alpha) x D*T(sigma|0)(gamma), Delta(x, alpha) = {0} when
    0 in alpha + N_Omega(x) and empty otherwise."""
    x, sigma = cs.check_solution(x, sigma)
    k, l, p, q = cs.k, cs.l, cs.p, cs.q
    KT = _t_coderivative(cs, sigma)
    normals = cs.omega.normal_cone(x)
    # (alpha, beta, gamma, chi, a_x) rearranged to (alpha, beta, gamma, a_x, chi)
    graph = normals.negate().product(PolyhedralSet.whole(p)).product(
        KT.graph).product(PolyhedralSet.origin(k))
    head = k + p + q
    order = (list(range(head)) + list(range(head + l, head + l + k)) +
             list(range(head, head + l)))
    return HomogeneousPiecewiseMap(graph.permute(order), head)


def _blocks(cs: ConstraintSystem, point, direction=None):
    J = cs.phi.jacobian(point)
    blocks = {'Jx': J[:cs.k], 'Js': J[cs.k:]}
    if direction is not None:
        Jw = cs.phi.jacobian_semiderivative(point, direction)
        blocks.update(Jwx=Jw[:cs.k], Jws=Jw[cs.k:])
    return blocks


def _nonzero(joint: PolyhedralSet, coords):
    witness = joint.project(list(coords)).nonzero_point()
    return None if witness is None else unit(witness)


def _premise_first_order(cs, b, normals, second: PolyhedralSet, width):
    """[0 in Jx z + N, 0 in Js z + chi] over (z, n, second) where chi is the
    trailing `l` coordinates of `second`."""
    k, l, p = cs.k, cs.l, cs.p
    joint = PolyhedralSet.whole(p).product(normals).product(second)
    rows = np.vstack([
        np.hstack([b['Jx'], np.eye(k), np.zeros((k, width))]),
        np.hstack([b['Js'], np.zeros((l, k + width - l)), np.eye(l)])
    ])
    return joint.add_rows(E=rows)


def cs_metric_regularity(cs: ConstraintSystem, x, sigma,
                         cross_check=True) -> RegularityVerdict:
    """G + P is metrically regular iff [0 in nabla_x Phi z + N_Omega(x),
    0 in nabla_sigma Phi z + D*T(sigma|0)(nu)] forces z = 0 and nu = 0,
    equivalently T is regular and the same with rge D*T forces z = 0."""
    x, sigma = cs.check_solution(x, sigma)
    point = cs.point(x, sigma)
    k, l, p, q = cs.k, cs.l, cs.p, cs.q
    b = _blocks(cs, point)
    KT = _t_coderivative(cs, sigma)
    normals = cs.omega.normal_cone(x)
    premise = _premise_first_order(cs, b, normals, KT.graph, q + l)
    witness_b = _nonzero(premise,
                         list(range(p)) + list(range(p + k, p + k + q)))
    t_regular = KT.kernel().nonzero_point() is None
    ranges, _ = KT.range_cone()
    premise_c = _premise_first_order(cs, b, normals, ranges, l)
    witness_c = _nonzero(premise_c, range(p))
    holds_b = witness_b is None
    holds_c = t_regular and witness_c is None
    if holds_b != holds_c:
        msg = f'dual criteria disagree at {point.tolist()}: (b) {holds_b}, (c) {holds_c}'
        logger.error(msg)
        raise InconsistencyError(msg)
    details = {'(b)': holds_b, '(c)': holds_c, 'T_regular': t_regular}
    y = np.zeros(k + p + q)
    if cross_check:
        G, P = compile_constraint_system(cs)
        oracle = check_metric_regularity(SmoothPlus(G, P), point, y)
        details['compiled'] = oracle['status']
        if oracle.certified and (oracle['status'] == Status.CertifiedYes) != holds_b:
            msg = (f'coderivative criterion of the compiled map disagrees at '
                   f'{point.tolist()}')
            logger.error(msg)
            raise InconsistencyError(msg)
    trace = ['Prop(7.1)(b)', 'Prop(7.1)(c)']
    if holds_b:
        return _verdict(Property.MetricRegular, point, y, None,
                        Status.CertifiedYes, trace, **details)
    return _verdict(Property.MetricRegular, point, y, None, Status.CertifiedNo,
                    trace, witness={'z_nu': witness_b.tolist()}, **details)


def _check_direction(cs: ConstraintSystem, sigma, direction):
    direction = as_vector(direction, cs.k + cs.l, 'direction')
    if not np.any(direction):
        raise ValueError('the direction should be nonzero')
    direction = unit(direction)
    mu = direction[cs.k:]
    DT = graphical_derivative(
        DerivativeQuery(cs.T, sigma, np.zeros(cs.q), kind='graphical'))
    if DT.value(mu).is_empty():
        msg = f'DT(sigma|0)({mu.tolist()}) is empty'
        logger.error(msg)
        raise DirectionNotInDomain(msg)
    return direction


def _second_order_rows(cs, b, width):
    """Rows of both inclusion pairs over (z, n1, first, beta, n2, second); the
    trailing l coordinates of first and second carry the sigma parts."""
    k, l, p = cs.k, cs.l, cs.p
    block = p + k + width
    rows = np.zeros((2 * (k + l), 2 * block))
    # 0 = Jx z + n1
    rows[:k, :p] = b['Jx']
    rows[:k, p:p + k] = np.eye(k)
    # 0 = Js z + (last l of first)
    rows[k:k + l, :p] = b['Js']
    rows[k:k + l, block - l:block] = np.eye(l)
    # 0 = Jwx z + Jx beta + n2
    rows[k + l:2 * k + l, :p] = b['Jwx']
    rows[k + l:2 * k + l, block:block + p] = b['Jx']
    rows[k + l:2 * k + l, block + p:block + p + k] = np.eye(k)
    # 0 = Jws z + Js beta + (last l of second)
    rows[2 * k + l:, :p] = b['Jws']
    rows[2 * k + l:, block:block + p] = b['Js']
    rows[2 * k + l:, 2 * block - l:] = np.eye(l)
    return rows


def cs_metric2_regularity_polyhedral(cs: ConstraintSystem, x, sigma,
                                     direction,
                                     cross_check=True) -> RegularityVerdict:
    """Polyhedral Omega and T: the four-inclusion implication in D*T, checked
    against its form with rge D*T plus metric regularity of T."""
    if not isinstance(cs.omega, PolyhedralSet) or not cs.T.is_polyhedral:
        raise NotPolyhedral('Omega and T must be polyhedral')
    x, sigma = cs.check_solution(x, sigma)
    point = cs.point(x, sigma)
    direction = _check_direction(cs, sigma, direction)
    k, l, p, q = cs.k, cs.l, cs.p, cs.q
    b = _blocks(cs, point, direction)
    KT = _t_coderivative(cs, sigma)
    normals = cs.omega.normal_cone(x)
    whole = PolyhedralSet.whole(p)

    def joint(second_block):
        half = whole.product(normals).product(second_block)
        return half.product(half)

    rows = _second_order_rows(cs, b, q + l)
    premise_a = joint(KT.graph).add_rows(E=rows)
    witness_a = _nonzero(premise_a,
                         list(range(p)) + list(range(p + k, p + k + q)))
    ranges, _ = KT.range_cone()
    rows_b = _second_order_rows(cs, b, l)
    premise_b = joint(ranges).add_rows(E=rows_b)
    witness_b = _nonzero(premise_b, range(p))
    t_regular = KT.kernel().nonzero_point() is None
    holds_a = witness_a is None
    holds_b = t_regular and witness_b is None
    if holds_a != holds_b:
        msg = (f'second-order criteria disagree at {point.tolist()}: '
               f'(a) {holds_a}, (b) {holds_b}')
        logger.error(msg)
        raise InconsistencyError(msg)
    y = np.zeros(k + p + q)
    details = {'(a)': holds_a, '(b)': holds_b, 'T_regular': t_regular}
    if cross_check:
        G, P = compile_constraint_system(cs)
        oracle = sufficient_m2r_polyhedral_mapping(G, P, point, -G(point),
                                                   direction)
        details['compiled'] = oracle['status']
        if oracle.affirms != holds_a:
            msg = (f'mapping condition of the compiled map disagrees at '
                   f'{point.tolist()}')
            logger.error(msg)
            raise InconsistencyError(msg)
    trace = ['Prop(7.2)(a)', 'Prop(7.2)(b)', 'Thm(5.7)']
    if holds_a:
        return _verdict(Property.Metric2Regular, point, y, direction,
                        Status.SufficientConditionHolds, trace,
                        gfrerer='implied for every eta', **details)
    return _verdict(Property.Metric2Regular, point, y, direction,
                    Status.SufficientConditionFails, trace,
                    witness={'z_nu': witness_a.tolist()}, **details)


def cs_metric2_regularity_unconstrained(cs: ConstraintSystem, x, sigma,
                                        direction) -> RegularityVerdict:
    """Omega = R^k with T Lipschitz-like, metrically regular and
    rge nabla_sigma Phi cap rge D*T = {0}: z = 0 must be the only solution
    of the second-order system in rge D*T."""
    if not cs.unconstrained:
        raise ConditionFailed('unconstrained', 'Omega must be the whole space')
    x, sigma = cs.check_solution(x, sigma)
    point = cs.point(x, sigma)
    k, l, p, q = cs.k, cs.l, cs.p, cs.q
    KT = _t_coderivative(cs, sigma)
    if KT.value_at_zero().nonzero_point() is not None:
        raise ConditionFailed('Lipschitz-like', 'D*T(sigma|0)(0) is not {0}')
    if KT.kernel().nonzero_point() is not None:
        raise ConditionFailed('metric regularity',
                              'T is not metrically regular')
    direction = _check_direction(cs, sigma, direction)
    b = _blocks(cs, point, direction)
    ranges, _ = KT.range_cone()
    overlap = _nonzero(
        PolyhedralSet.whole(p).product(ranges).add_rows(
            E=np.hstack([b['Js'], -np.eye(l)])), range(p, p + l))
    if overlap is not None:
        raise ConditionFailed('separation',
                              'Eq(7.11): rge nabla_sigma Phi meets rge D*T',
                              witness=overlap.tolist())
    # variables (z, r1, beta, r2), r1 and r2 in rge D*T
    whole = PolyhedralSet.whole(p)
    joint = whole.product(ranges).product(whole).product(ranges)
    zk, zl = np.zeros((k, l)), np.zeros((l, l))
    rows = np.vstack([
        np.hstack([b['Jx'], zk, np.zeros((k, p)), zk]),
        np.hstack([b['Js'], np.eye(l), np.zeros((l, p)), zl]),
        np.hstack([b['Jwx'], zk, b['Jx'], zk]),
        np.hstack([b['Jws'], zl, b['Js'], np.eye(l)])
    ])
    witness = _nonzero(joint.add_rows(E=rows), range(p))
    y = np.zeros(p + q)
    trace = ['Prop(7.3)', 'Eq(7.11)', 'Eq(7.12)']
    if witness is None:
        return _verdict(Property.Metric2Regular, point, y, direction,
                        Status.SufficientConditionHolds, trace,
                        gfrerer='implied for every eta')
    return _verdict(Property.Metric2Regular, point, y, direction,
                    Status.SufficientConditionFails, trace,
                    witness={'z': witness.tolist()})


# variational systems


class VariationalSystem(object):
    """0 in f(x) + M(x) N_C0(g(x)) with f: R^k -> R^s, g: R^k -> R^q and M a
    row-major s x q matrix of polynomials."""

    def __init__(self, f: PolyMap, g: PolyMap, M: PolyMap,
                 C0: PolyhedralSet):
        self.k = f.in_dim
        self.s = f.out_dim
        self.q = g.out_dim
        if g.in_dim != self.k or M.in_dim != self.k:
            raise DimensionMismatch('f, g and M must share their variables')
        if M.out_dim != self.s * self.q:
            raise DimensionMismatch(
                f'M has {M.out_dim} entries, expected {self.s}x{self.q}')
        if C0.dim != self.q:
            raise DimensionMismatch(f'C0 lives in R^{C0.dim}, g in R^{self.q}')
        self.f = f
        self.g = g
        self.M = M
        self.C0 = C0

    @classmethod
    def kkt(cls, f: PolyMap, g: PolyMap, inequalities: int):
        """M = nabla g and C0 = R_-^t x {0}, the first t constraints
        inequalities."""
        k, q = g.in_dim, g.out_dim
        if f.out_dim != k:
            raise DimensionMismatch('the KKT gradient f must map R^k to R^k')
        order = [j * k + i for i in range(k) for j in range(q)]
        M = g.derivative_map().select(order)
        A = np.hstack([np.eye(inequalities),
                       np.zeros((inequalities, q - inequalities))])
        E = np.hstack([np.zeros((q - inequalities, inequalities)),
                       np.eye(q - inequalities)])
        return cls(f, g, M, PolyhedralSet.from_rows(q, A=A, E=E))

    def matrix(self, x):
        return self.M(x).reshape(self.s, self.q)

    def check_solution(self, x, lam, zeta):
        x = as_vector(x, self.k, 'x')
        lam = as_vector(lam, self.q, 'lambda')
        zeta = as_vector(zeta, self.q, 'zeta')
        residual = self.f(x) + self.matrix(x) @ lam
        if np.abs(residual).max(initial=0.0) > GlobalConfig.TOL_EQ:
            raise _not_a_solution(f'f(x) + M(x) lambda = {residual.tolist()}')
        if np.abs(self.g(x) - zeta).max(initial=0.0) > GlobalConfig.TOL_EQ:
            raise _not_a_solution('zeta differs from g(x)')
        if not NormalConeMap(self.C0).contains(zeta, lam):
            raise _not_a_solution(
                f'lambda = {lam.tolist()} is not normal to C0 at zeta')
        return x, lam, zeta

    def to_payload(self):
        return {
            'f': self.f.to_payload(),
            'g': self.g.to_payload(),
            'M': self.M.to_payload(),
            'C0': self.C0.to_payload()
        }

    @classmethod
    def from_payload(cls, payload):
        try:
            return cls(PolyMap.from_payload(payload['f']),
                       PolyMap.from_payload(payload['g']),
                       PolyMap.from_payload(payload['M']),
                       PolyhedralSet.from_payload(payload['C0']))
        except KeyError as err:
            raise InvalidProblemError(f'variational system misses {err}')

    def __repr__(self):
        return f'VariationalSystem(k={self.k}, s={self.s}, q={self.q})'


def _normal_t(C0: PolyhedralSet) -> SmoothPlus:
    """T(lambda, zeta) = -lambda + N_C0(zeta) over sigma = (lambda, zeta)."""
    q = C0.dim
    inner = GraphPolyhedral(
        PolyhedralSet.whole(q).product(NormalConeMap(C0).graph()), 2 * q)
    return SmoothPlus(PolyMap.linear(np.hstack([-np.eye(q), np.zeros((q, q))])),
                      inner)


def compile_variational_system(vs: VariationalSystem) -> ConstraintSystem:
    """Phi(x, lambda, zeta) = (f(x) + M(x) lambda, g(x) - zeta), Omega = R^k
    and T(lambda, zeta) = -lambda + N_C0(zeta); T is metrically regular at
    every solution."""
    k, q = vs.k, vs.q
    size = k + 2 * q
    M = vs.M.embed(size, range(k))
    first = vs.f.embed(size, range(k)) + M.matvec(vs.s, q, range(k, k + q))
    second = vs.g.embed(size, range(k)) - PolyMap.linear(
        np.hstack([np.zeros((q, k + q)), np.eye(q)]))
    phi = PolyMap.stack(first, second)
    return ConstraintSystem(phi, PolyhedralSet.whole(k), _normal_t(vs.C0),
                            t_regular_granted=True)


def _normal_coderivative(vs: VariationalSystem, lam, zeta):
    return coderivative(DerivativeQuery(NormalConeMap(vs.C0), zeta, lam))


def vs_T_coderivative(vs: VariationalSystem, lam,
                      zeta) -> HomogeneousPiecewiseMap:
    """D*T(sigma|0)(alpha) = {(-alpha, nu) : nu in D*N_C0(zeta|lambda)(alpha)}."""
    q = vs.q
    KN = _normal_coderivative(vs, lam, zeta)
    lift = np.vstack([
        np.hstack([np.eye(q), np.zeros((q, q))]),
        np.hstack([-np.eye(q), np.zeros((q, q))]),
        np.hstack([np.zeros((q, q)), np.eye(q)])
    ])
    return HomogeneousPiecewiseMap(KN.graph.linear_image(lift), q)


def _vs_blocks(vs: VariationalSystem, x, lam):
    """(nabla f + sum lam_i nabla M_i, nabla g, M^T) at x."""
    size = vs.k + vs.q
    M_lam = vs.M.embed(size, range(vs.k)).matvec(vs.s, vs.q,
                                                  range(vs.k, size))
    weighted = vs.f.embed(size, range(vs.k)) + M_lam
    point = np.hstack([x, lam])
    H = weighted.jacobian(point)[:vs.k]
    return H, vs.g.jacobian(x), vs.matrix(x).T, weighted


def vs_metric_regularity(vs: VariationalSystem, x, lam, zeta,
                         cross_check=True) -> RegularityVerdict:
    """z = 0 must be the only z with 0 in (nabla f + sum lam_i nabla M_i) z +
    nabla g D*N_C0(zeta|lam)(M^T z)."""
    x, lam, zeta = vs.check_solution(x, lam, zeta)
    k, s, q = vs.k, vs.s, vs.q
    H, B, Mt, _ = _vs_blocks(vs, x, lam)
    KN = _normal_coderivative(vs, lam, zeta)
    # variables (z, a, chi) with chi in D*N(a), a = M^T z
    joint = PolyhedralSet.whole(s).product(KN.graph)
    rows = np.vstack([
        np.hstack([H, np.zeros((k, q)), B]),
        np.hstack([Mt, -np.eye(q), np.zeros((q, q))])
    ])
    witness = _nonzero(joint.add_rows(E=rows), range(s))
    holds = witness is None
    point = np.hstack([x, lam, zeta])
    y = np.zeros(k + s + 2 * q)
    details = {}
    if cross_check:
        cs = compile_variational_system(vs)
        compiled = cs_metric_regularity(cs, x, np.hstack([lam, zeta]),
                                        cross_check=False)
        details['compiled'] = compiled['status']
        if compiled.affirms != holds:
            msg = (f'variational criterion disagrees with the constraint '
                   f'system form at x={x.tolist()}')
            logger.error(msg)
            raise InconsistencyError(msg)
    trace = ['Prop(8.2)(b)', 'Lem(8.1)']
    if holds:
        return _verdict(Property.MetricRegular, point, y, None,
                        Status.CertifiedYes, trace, **details)
    return _verdict(Property.MetricRegular, point, y, None, Status.CertifiedNo,
                    trace, witness={'z': witness.tolist()}, **details)


def alpha_sweep(q, rng=None, count=None):
    """0, +-e_i and `count` seeded random alphas."""
    rng = rng or GlobalConfig.init_rng()
    count = GlobalConfig.ALPHA_SWEEP if count is None else count
    alphas = [np.zeros(q)]
    for i in range(q):
        e = np.zeros(q)
        e[i] = 1.0
        alphas.extend([e, -e])
    alphas.extend(rng.normal(size=(count, q)))
    return alphas


def vs_metric2_regularity(vs: VariationalSystem, x, lam, zeta, direction,
                          alphas=None) -> RegularityVerdict:
    """Second-order implication in (z, chi, beta) for every alpha of the
    sweep; direction is (w, v) with w in R^k and v in R^q."""
    x, lam, zeta = vs.check_solution(x, lam, zeta)
    k, s, q = vs.k, vs.s, vs.q
    direction = as_vector(direction, k + q, 'direction')
    if not np.any(direction):
        raise ValueError('the direction should be nonzero')
    w, v = direction[:k], direction[k:]
    DN = graphical_derivative(
        DerivativeQuery(NormalConeMap(vs.C0), zeta, lam, kind='graphical'))
    if DN.value(v).is_empty():
        msg = f'DN_C0(zeta|lambda)({v.tolist()}) is empty'
        logger.error(msg)
        raise DirectionNotInDomain(msg)
    H, B, Mt, weighted = _vs_blocks(vs, x, lam)
    KN = _normal_coderivative(vs, lam, zeta)
    lifted = np.hstack([w, np.zeros(q)])
    H_w = weighted.jacobian_semiderivative(np.hstack([x, lam]), lifted)[:k]
    B_w = vs.g.jacobian_semiderivative(x, w)
    # sum_j z_j (M~_j)'(x) w, linear in z
    D_w = vs.M.directional_derivative(x, w).reshape(s, q).T
    # nabla M_i(x) stacked so that sum alpha_i nabla M_i = tensordot(alpha)
    dM = vs.M.derivative(x).reshape(s, q, k)
    grad_M = np.transpose(dM, (1, 2, 0))
    structural = bool(np.allclose(grad_M, 0.0))
    alphas = alpha_sweep(q) if alphas is None else [
        as_vector(a, q, 'alpha') for a in alphas
    ]
    # variables (z, beta, a1, chi, a2, chi2)
    whole = PolyhedralSet.whole(s)
    joint = whole.product(whole).product(KN.graph).product(KN.graph)
    zq, zsq = np.zeros((q, q)), np.zeros((q, s))
    point = np.hstack([x, lam, zeta])
    y = np.zeros(k + s + 2 * q)
    records = []
    for alpha in alphas:
        A2 = H_w + np.tensordot(alpha, grad_M, axes=1)
        rows = np.vstack([
            np.hstack([H, np.zeros((k, s)), np.zeros((k, q)), B,
                       np.zeros((k, 2 * q))]),
            np.hstack([Mt, zsq, -np.eye(q), zq, zq, zq]),
            np.hstack([A2, H, np.zeros((k, q)), B_w, np.zeros((k, q)), B]),
            np.hstack([D_w, Mt, zq, zq, -np.eye(q), zq])
        ])
        witness = _nonzero(
            joint.add_rows(E=rows),
            list(range(s)) + list(range(2 * s + q, 2 * s + 2 * q)))
        records.append({
            'alpha': alpha.tolist(),
            'holds': witness is None,
            'witness': None if witness is None else witness.tolist()
        })
    trace = ['Prop(8.3)']
    failing = [r for r in records if not r['holds']]
    if failing:
        return _verdict(Property.Metric2Regular, point, y,
                        np.hstack([w, np.zeros(q), v]),
                        Status.SufficientConditionFails, trace,
                        witness={
                            'alpha': failing[0]['alpha'],
                            'z_chi': failing[0]['witness']
                        },
                        sweep=records, alpha_terms_vanish=structural)
    status = (Status.SufficientConditionHolds
              if structural else Status.NumericEvidenceFor)
    return _verdict(Property.Metric2Regular, point, y,
                    np.hstack([w, np.zeros(q), v]), status, trace,
                    sweep=records, alpha_terms_vanish=structural,
                    gfrerer='implied for every alpha and eta'
                    if structural else 'implied on the sweep')
