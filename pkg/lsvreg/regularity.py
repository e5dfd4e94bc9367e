# -*- coding: utf-8 -*-
"""Metric regularity, metric 2-regularity and Gfrerer regularity checks.

Exact polyhedral paths return Certified statuses, sampled paths only return
Evidence statuses, and sufficient conditions never disprove anything.
"""

from enum import Enum
from logging import getLogger
from math import inf, isinf
from typing import Callable
from warnings import warn

import numpy as np
from scipy.linalg import null_space, orth, pinv
from scipy.optimize import minimize

from .config import GlobalConfig
from .exceptions import (BasepointOffGraph, ConditionFailed, CurveOffGraph,
                         DegenerateCurve, DirectionNotInDomain,
                         DirectionNotTangent, EmptyGraphicalDerivative,
                         InconsistencyError, LsvregError,
                         NormalConeUnavailable, NotPolyhedral, PointNotInSet)
from .gendiff import (DerivativeQuery, coderivative, coderivative_kernel,
                      graphical_derivative)
from .lsv import (LsvInstance, combine_bounds, lsv_of_map, reg_value,
                  subderivative_estimate)
from .polyhedra import PolyhedralSet, polar_piece
from .setmaps import (ConstantSet, EqualityManifold, Indicator, Product,
                      SmoothPlus, StructuredMapping)
from .smoothmaps import PolyMap
from .utils import JsonSerializable, as_vector, unit

logger = getLogger('lsvreg')
__all__ = [
    'Property', 'Status', 'RegularityVerdict', 'DirectionalNeighborhood',
    'RegChain', 'EquivalenceReport', 'CurveEvidence',
    'check_metric_regularity', 'reg_chain', 'check_metric2_regularity',
    'sufficient_m2r_polyhedral_constraint',
    'sufficient_m2r_polyhedral_mapping',
    'sufficient_m2r_indicator_polyhedral',
    'sufficient_m2r_nonpolyhedral_constraint',
    'sufficient_m2r_indicator_nonpolyhedral', 'sufficient_m2r_product',
    'check_gfrerer', 'm2r_equiv_gfrerer', 'classic2_regularity',
    'curve_falsifier'
]


class Property(str, Enum):
    MetricRegular = 'MetricRegular'
    Metric2Regular = 'Metric2Regular'
    GfrererRegular = 'GfrererRegular'
    Classic2Regular = 'Classic2Regular'


class Status(str, Enum):
    CertifiedYes = 'CertifiedYes'
    CertifiedNo = 'CertifiedNo'
    SufficientConditionHolds = 'SufficientConditionHolds'
    SufficientConditionFails = 'SufficientConditionFails'
    NumericEvidenceFor = 'NumericEvidenceFor'
    NumericEvidenceAgainst = 'NumericEvidenceAgainst'
    Refused = 'Refused'


_AFFIRMING = {
    Status.CertifiedYes, Status.SufficientConditionHolds,
    Status.NumericEvidenceFor
}
_DENYING = {Status.CertifiedNo, Status.NumericEvidenceAgainst}


class RegularityVerdict(JsonSerializable):
    """property, basepoint, direction, status, modulus, witness, trace and
    details of one check."""

    @property
    def affirms(self):
        return self['status'] in _AFFIRMING

    @property
    def denies(self):
        return self['status'] in _DENYING

    @property
    def certified(self):
        return self['status'] in (Status.CertifiedYes, Status.CertifiedNo)


def _verdict(prop, u, y, direction, status, trace, modulus=None,
             witness=None, **details):
    return RegularityVerdict(
        property=Property(prop),
        basepoint={
            'u': as_vector(u).tolist(),
            'y': None if y is None else as_vector(y).tolist()
        },
        direction=None if direction is None else as_vector(direction).tolist(),
        status=Status(status),
        modulus=modulus,
        witness=witness,
        trace=list(trace),
        details=details)


def _reciprocal(value):
    if value is None:
        return None
    if isinf(value):
        return 0.0
    return inf if value <= 0 else 1.0 / value


class DirectionalNeighborhood(object):
    """K(eps, delta) = center + (eps B  cap  cone(w + delta B))."""

    def __init__(self, center, w, eps, delta):
        self.center = as_vector(center, name='center')
        self.w = as_vector(w, self.center.shape[0], 'direction')
        if eps <= 0 or delta <= 0:
            raise ValueError('radii should be positive')
        self.eps = float(eps)
        self.delta = float(delta)

    def contains(self, point, tol=1e-12):
        v = as_vector(point, self.center.shape[0], 'point') - self.center
        norm = float(np.linalg.norm(v))
        if norm > self.eps + tol:
            return False
        if norm <= tol:
            return True
        w_norm = float(np.linalg.norm(self.w))
        if w_norm < self.delta:
            return True
        inner = float(v @ self.w)
        if inner <= 0:
            return False
        # closest point of the ray {s v : s > 0} to w
        gap = w_norm**2 - inner**2 / norm**2
        return gap <= self.delta**2 + tol

    def sample(self, count, rng=None):
        rng = rng or GlobalConfig.init_rng()
        dim = self.center.shape[0]
        balls = rng.normal(size=(count, dim))
        balls /= np.linalg.norm(balls, axis=1)[:, None]
        balls *= rng.uniform(size=(count, 1))**(1.0 / dim)
        directions = self.w + 0.999 * self.delta * balls
        norms = np.linalg.norm(directions, axis=1)
        directions = directions[norms > 0] / norms[norms > 0][:, None]
        radii = self.eps * rng.uniform(size=(len(directions), 1))
        return self.center + radii * directions

    def __repr__(self):
        return (f'DirectionalNeighborhood(eps={self.eps}, delta={self.delta}, '
                f'w={self.w.tolist()})')


# graphs as closed sets and projections onto them


def _graph_set(mapping: StructuredMapping):
    """gph of the mapping as a PolyhedralSet or an EqualityManifold."""
    try:
        return mapping.graph()
    except NotPolyhedral:
        pass
    n, m = mapping.in_dim, mapping.out_dim
    if isinstance(mapping, ConstantSet) and isinstance(mapping.c1,
                                                       EqualityManifold):
        return mapping.c1.lift(before=n)
    if isinstance(mapping, Indicator) and isinstance(mapping.omega,
                                                     EqualityManifold):
        values = PolyMap.linear(np.hstack([np.zeros((m, n)), np.eye(m)]))
        return EqualityManifold(
            PolyMap.stack(mapping.omega.h.embed(n + m, range(n)), values))
    raise NotPolyhedral(f'no closed form for the graph of {mapping!r}')


def _manifold_projection(manifold: EqualityManifold, point):
    h = manifold.h
    result = minimize(lambda x: 0.5 * float((x - point) @ (x - point)),
                      point,
                      jac=lambda x: x - point,
                      method='SLSQP',
                      constraints=[{
                          'type': 'eq',
                          'fun': h.evaluate,
                          'jac': h.derivative
                      }])
    x = result.x
    for _ in range(8):
        residual = h(x)
        if np.abs(residual).max() <= 1e-14:
            break
        x = x - pinv(h.derivative(x)) @ residual
    return x if manifold.contains(x) else None


def _set_projection(set_, point):
    if isinstance(set_, EqualityManifold):
        return _manifold_projection(set_, point)
    best, best_gap = None, inf
    for piece in set_.nonempty_pieces():
        projected = piece.projection(point)
        if projected is None:
            continue
        gap = float(np.linalg.norm(projected - point))
        if gap < best_gap:
            best, best_gap = projected, gap
    return best


class _GraphChart(object):
    """Points of gph S as xi = (u, y - F(u)) on gph C for S = F + C, or as
    xi = (u, y) on gph S otherwise."""

    def __init__(self, S: StructuredMapping):
        self.S = S
        self.n = S.in_dim
        if isinstance(S, SmoothPlus):
            self.F, self.inner = S.F, S.C
        else:
            self.F, self.inner = None, S
        try:
            self.graph = _graph_set(self.inner)
        except NotPolyhedral:
            self.graph = None

    @property
    def polynomial(self):
        return self.F is None or isinstance(self.F, PolyMap)

    def offset(self, u):
        return self.F(u) if self.F is not None else 0.0

    def xi(self, u, y):
        return np.hstack([u, y - self.offset(u)])

    def point(self, xi):
        u = xi[:self.n]
        return u, xi[self.n:] + self.offset(u)

    def shift(self, u, w, eta):
        """The C-part of a graphical direction (w, eta)."""
        if self.F is None:
            return eta
        return eta - self.F.derivative(u) @ w

    def reg(self, xi):
        return reg_value(self.S, *self.point(xi))

    def project(self, xi):
        if self.graph is None:
            return None
        return _set_projection(self.graph, xi)


# metric regularity


def _sampled_metric_regularity(S, u, y, reason):
    msg = f'exact coderivative unavailable ({reason}), sampling Reg instead'
    warn(msg)
    logger.warning(msg)
    chart = _GraphChart(S)
    trace = ['Thm(4.8)(d)', 'sampled']
    if chart.graph is None:
        return _verdict(Property.MetricRegular, u, y, None, Status.Refused,
                        trace, reason=str(reason))
    hood = DirectionalNeighborhood(chart.xi(u, y), np.zeros(S.in_dim +
                                                            S.out_dim), 0.1,
                                   1.0)
    regs = []
    for xi in hood.sample(GlobalConfig.MULTISTARTS):
        point = chart.project(xi)
        if point is None:
            continue
        try:
            regs.append(chart.reg(point))
        except LsvregError:
            continue
    if not regs:
        return _verdict(Property.MetricRegular, u, y, None, Status.Refused,
                        trace, reason=str(reason))
    low = min(regs)
    status = (Status.NumericEvidenceFor
              if low > GlobalConfig.TOL_LSV else Status.NumericEvidenceAgainst)
    return _verdict(Property.MetricRegular, u, y, None, status, trace,
                    modulus=_reciprocal(low), samples=len(regs),
                    smallest_reg=low)


def check_metric_regularity(S: StructuredMapping, u, y) -> RegularityVerdict:
    """Coderivative criterion: regular iff ker D*S(u|y) = {0}, modulus 1/Reg."""
    query = DerivativeQuery(S, u, y)
    trace = ['Thm(4.8)(d)']
    try:
        K = coderivative(query)
        witness = coderivative_kernel(K).nonzero_point()
    except (NotPolyhedral, ConditionFailed) as err:
        return _sampled_metric_regularity(S, query.u, query.y, err)
    if witness is not None:
        return _verdict(Property.MetricRegular, query.u, query.y, None,
                        Status.CertifiedNo, trace,
                        witness={'z': unit(witness).tolist()}, reg=0.0)
    reg = lsv_of_map(K)['value']
    return _verdict(Property.MetricRegular, query.u, query.y, None,
                    Status.CertifiedYes, trace, modulus=_reciprocal(reg),
                    reg=reg)


class RegChain(JsonSerializable):
    """Reg values of F + C and of its three reformulations."""


def _lifted_maps(F: PolyMap, C: StructuredMapping):
    n, m = F.in_dim, F.out_dim
    gph = _graph_set(C)
    G = PolyMap.stack(PolyMap.linear(-np.eye(n)), F)
    constraint = SmoothPlus(G, ConstantSet(gph, n))
    H = F.embed(n + m, range(n)) + PolyMap.linear(
        np.hstack([np.zeros((m, n)), np.eye(m)]))
    indicator = SmoothPlus(H, Indicator(gph, m))
    linear = np.block([[-np.eye(n), np.eye(n), np.zeros((n, m))],
                       [np.zeros((m, 2 * n)), np.eye(m)]])
    K = PolyMap.linear(linear) + PolyMap.stack(
        PolyMap.zero(2 * n + m, n), F.embed(2 * n + m, range(n)))
    lifted = SmoothPlus(K, Indicator(gph.lift(before=n), n + m))
    return constraint, indicator, lifted


def reg_chain(F: PolyMap, C: StructuredMapping, u, y) -> RegChain:
    """Reg of F + C against G + gph C, F(u) + y + indicator of gph C and the
    lifted form; the values must decrease in that order."""
    if not isinstance(F, PolyMap):
        raise ConditionFailed('strict differentiability',
                              'the chain needs a polynomial smooth part')
    u = as_vector(u, F.in_dim, 'u')
    y = as_vector(y, F.out_dim, 'y')
    if not C.contains(u, y):
        msg = f'({u.tolist()}, {y.tolist()}) is not on the graph of {C!r}'
        logger.error(msg)
        raise BasepointOffGraph(msg)
    n, m = F.in_dim, F.out_dim
    value = F(u) + y
    constraint, indicator, lifted = _lifted_maps(F, C)
    values = {
        'sigma': reg_value(SmoothPlus(F, C), u, value),
        'constraint': reg_value(constraint, u, np.hstack([np.zeros(n),
                                                          value])),
        'indicator': reg_value(indicator, np.hstack([u, y]), value),
        'lifted': reg_value(lifted, np.hstack([u, u, y]),
                            np.hstack([np.zeros(n), value]))
    }
    slack = 10 * GlobalConfig.TOL_LSV
    middle = max(values['constraint'], values['indicator'])
    ordered = (values['sigma'] >= middle - slack and
               middle >= values['lifted'] - slack and
               values['lifted'] >= -slack)
    vanishing = values['lifted'] <= GlobalConfig.TOL_LSV
    forced = not vanishing or all(
        v <= 100 * GlobalConfig.TOL_LSV for v in values.values())
    if not (ordered and forced):
        msg = f'Reg chain violated at u={u.tolist()}: {values}'
        logger.error(msg)
        raise InconsistencyError(msg)
    return RegChain(trace='Thm(4.9)',
                    ordered=ordered,
                    lifted_vanishes=vanishing,
                    **values)


# metric 2-regularity


def _value_points(values: PolyhedralSet, bound=1e2):
    """Extreme points of a value set in coordinate directions, boxed."""
    points = []
    for piece in values.nonempty_pieces():
        for j in range(values.dim):
            for sign in (1.0, -1.0):
                c = np.zeros(values.dim)
                c[j] = sign
                point = piece.argmax(c, bounds=(-bound, bound))
                if point is None:
                    continue
                if not any(
                        np.abs(point - other).max() <= GlobalConfig.TOL_EQ *
                        (1 + np.abs(other).max()) for other in points):
                    points.append(point)
    return points


def _reg_subderivative(S, chart: _GraphChart, u, y, w, eta):
    """d Reg(u, y; S)(w, eta): a certified lower bound when one applies, else
    the sampled estimate."""
    record = JsonSerializable(eta=eta.tolist(), value=None, certified=False,
                              source=None)
    xi = chart.xi(u, y)
    omega = np.hstack([w, chart.shift(u, w, eta)])
    if chart.polynomial:
        try:
            inst = LsvInstance.from_mapping(S)
        except ConditionFailed as err:
            record['bound'] = {'refused': err.condition, 'reason': str(err)}
        else:
            bound = combine_bounds(inst, xi, omega)
            record['bound'] = bound.to_dict()
            if (bound.available and bound['certified'] and
                    bound['value'] > GlobalConfig.TOL_LSV):
                record.update(value=bound['value'], certified=True,
                              source=bound['source'])
                return record
    if chart.graph is None:
        record['reason'] = 'no projection onto the graph is available'
        return record
    try:
        estimate = subderivative_estimate(chart.reg, xi, omega,
                                          sampler=chart.project)
    except LsvregError as err:
        record['reason'] = str(err)
        return record
    record.update(value=estimate['value'], source='estimate',
                  estimate=estimate.to_dict())
    return record


def _positive(record):
    if record['certified']:
        return True
    return record['value'] > GlobalConfig.TOL_SEMI


def _graphical_values(S, u, y, w):
    query = DerivativeQuery(S, u, y, kind='graphical')
    D = graphical_derivative(query)
    return query, D


def check_metric2_regularity(S: StructuredMapping, u, y,
                             w) -> RegularityVerdict:
    """Reg = 0 forces inf over eta in DS(u|y)(w) of d Reg(u, y; S)(w, eta) > 0."""
    query, D = _graphical_values(S, u, y, w)
    u, y = query.u, query.y
    w = as_vector(w, S.in_dim, 'direction')
    if not np.any(w):
        raise ValueError('the direction should be nonzero')
    w = unit(w)
    values = D.value(w)
    if values.is_empty():
        msg = f'DS(u|y)({w.tolist()}) is empty'
        logger.error(msg)
        raise EmptyGraphicalDerivative(msg)
    base = check_metric_regularity(S, u, y)
    if base.affirms:
        return _verdict(Property.Metric2Regular, u, y, w, base['status'],
                        ['Rem(5.2)'] + base['trace'],
                        modulus=base['modulus'])
    etas = _value_points(values)
    rho = 2 * (1 + max(float(np.linalg.norm(eta)) for eta in etas))
    chart = _GraphChart(S)
    records = [_reg_subderivative(S, chart, u, y, w, eta) for eta in etas]
    trace = ['Eq(5.2)', 'Thm(5.5)']
    details = {'rho0': rho, 'eta': records, 'metric_regularity': base}
    if any(r['value'] is None for r in records):
        return _verdict(Property.Metric2Regular, u, y, w, Status.Refused,
                        trace, **details)
    moduli = [_reciprocal(r['value']) for r in records]
    failing = [r for r in records if not _positive(r)]
    if failing:
        return _verdict(Property.Metric2Regular, u, y, w,
                        Status.NumericEvidenceAgainst, trace,
                        witness={'eta': failing[0]['eta']}, **details)
    singleton = len(etas) == 1
    if singleton and all(r['certified'] for r in records):
        return _verdict(Property.Metric2Regular, u, y, w,
                        Status.CertifiedYes, trace, modulus=max(moduli),
                        modulus_kind='upper bound', **details)
    msg = f'metric 2-regularity relative to {w.tolist()} rests on sampling'
    warn(msg)
    logger.warning(msg)
    return _verdict(Property.Metric2Regular, u, y, w,
                    Status.NumericEvidenceFor, trace, modulus=max(moduli),
                    modulus_kind='estimate', **details)


# sufficient conditions


def _unit_direction(w, dim):
    w = as_vector(w, dim, 'direction')
    if not np.any(w):
        raise ValueError('the direction should be nonzero')
    return unit(w)


def _normal_cone(set_, point):
    if isinstance(set_, (PolyhedralSet, EqualityManifold)):
        return set_.normal_cone(point)
    msg = f'no normal cone is available for {set_!r}'
    logger.error(msg)
    raise NormalConeUnavailable(msg)


def _require_point(set_, point, name):
    if not set_.contains(point):
        msg = f'{name} {as_vector(point).tolist()} is not in the set'
        logger.error(msg)
        raise PointNotInSet(msg)


def _smooth_data(F, u, w):
    """(nabla F(u), (nabla F)'(u; w)), both of shape (n, m)."""
    return F.jacobian(u), F.jacobian_semiderivative(u, w)


def _zero_only(joint: PolyhedralSet, zdim):
    """A unit z of the projected solution set, None when z = 0 is forced."""
    witness = joint.project(range(zdim)).nonzero_point()
    return None if witness is None else unit(witness)


def _condition_verdict(witness, u, y, w, trace, **details):
    if witness is None:
        return _verdict(Property.Metric2Regular, u, y, w,
                        Status.SufficientConditionHolds, trace, **details)
    return _verdict(Property.Metric2Regular, u, y, w,
                    Status.SufficientConditionFails, trace,
                    witness={'z': witness.tolist()}, **details)


def _constraint_premise(J, Jw, normals, lifted_range):
    """[z in -N, nabla F z = 0, (nabla F)' z in R] over (z, nu, ...)."""
    n, m = J.shape
    # variables (z, beta): R = nabla F N takes beta in N, R = rge nabla F
    # leaves it free
    second = normals if lifted_range else PolyhedralSet.whole(m)
    joint = normals.negate().product(second)
    rows = np.vstack([np.hstack([J, np.zeros((n, m))]),
                      np.hstack([Jw, -J])])
    return _zero_only(joint.add_rows(E=rows), m)


def sufficient_m2r_polyhedral_constraint(F, C0, u, y, w) -> RegularityVerdict:
    """[z in -N_C0(y) cap ker nabla F(u), (nabla F)'(u; w) z in
    nabla F(u) N_C0(y)] => z = 0, for F(.) + C0 at (u, F(u) + y)."""
    u = as_vector(u, F.in_dim, 'u')
    y = as_vector(y, F.out_dim, 'y')
    w = _unit_direction(w, F.in_dim)
    _require_point(C0, y, 'y')
    J, Jw = _smooth_data(F, u, w)
    witness = _constraint_premise(J, Jw, _normal_cone(C0, y), True)
    trace = ['Lem(5.6)', 'Eq(5.3)']
    if not isinstance(C0, PolyhedralSet):
        return _verdict(Property.Metric2Regular, u, y, w, Status.Refused,
                        trace, reason='the constant set is not polyhedral',
                        formula_holds=witness is None)
    return _condition_verdict(witness, u, y, w, trace)


def sufficient_m2r_polyhedral_mapping(F, C: StructuredMapping, u, y,
                                      w) -> RegularityVerdict:
    """0 in nabla F z + D*C(z), 0 in (nabla F)' z + nabla F nu + D*C(nu)
    => z = 0, for F + C at (u, F(u) + y) with (u, y) on gph C."""
    if not C.is_polyhedral:
        raise NotPolyhedral(f'{C!r} is not polyhedral')
    w = _unit_direction(w, F.in_dim)
    query = DerivativeQuery(C, u, y)
    u, y = query.u, query.y
    DC = graphical_derivative(DerivativeQuery(C, u, y, kind='graphical'))
    if not DC.domain().contains(w):
        msg = f'{w.tolist()} is not in dom DC(u|y)'
        logger.error(msg)
        raise DirectionNotInDomain(msg)
    K = coderivative(query)
    J, Jw = _smooth_data(F, u, w)
    n, m = J.shape
    # variables (z, v, nu, v2) with v in D*C(z), v2 in D*C(nu)
    joint = K.graph.product(K.graph)
    zeros = np.zeros((n, m))
    rows = np.vstack([
        np.hstack([J, np.eye(n), zeros, np.zeros((n, n))]),
        np.hstack([Jw, np.zeros((n, n)), J, np.eye(n)])
    ])
    witness = _zero_only(joint.add_rows(E=rows), m)
    return _condition_verdict(witness, u, y, w, ['Thm(5.7)', 'Eq(5.4)'])


def _indicator_premise(J, Jw, normals):
    """[nabla F z in N, (nabla F)' z in rge nabla F + N] over
    (z, a, beta, b) with a, b in N."""
    n, m = J.shape
    joint = PolyhedralSet.whole(m).product(normals).product(
        PolyhedralSet.whole(m)).product(normals)
    rows = np.vstack([
        np.hstack([J, -np.eye(n), np.zeros((n, m)), np.zeros((n, n))]),
        np.hstack([Jw, np.zeros((n, n)), -J, -np.eye(n)])
    ])
    return _zero_only(joint.add_rows(E=rows), m)


def _tangent_check(C0, u, w):
    if not C0.tangent_cone(u).contains(w, GlobalConfig.TOL_EQ):
        msg = f'{w.tolist()} is not tangent to the set at {u.tolist()}'
        logger.error(msg)
        raise DirectionNotTangent(msg)


def sufficient_m2r_indicator_polyhedral(F, C0, u, w) -> RegularityVerdict:
    """[nabla F(u) z in N_C0(u), (nabla F)'(u; w) z in rge nabla F(u) +
    N_C0(u)] => z = 0, for F + indicator of C0 at (u, F(u))."""
    u = as_vector(u, F.in_dim, 'u')
    w = _unit_direction(w, F.in_dim)
    _require_point(C0, u, 'u')
    _tangent_check(C0, u, w)
    J, Jw = _smooth_data(F, u, w)
    witness = _indicator_premise(J, Jw, _normal_cone(C0, u))
    trace = ['Cor(5.8)', 'Eq(5.5)']
    if not isinstance(C0, PolyhedralSet):
        return _verdict(Property.Metric2Regular, u, F(u), w, Status.Refused,
                        trace, reason='the constraint set is not polyhedral',
                        formula_holds=witness is None)
    return _condition_verdict(witness, u, F(u), w, trace)


def sufficient_m2r_nonpolyhedral_constraint(F, C0, u, y,
                                            w) -> RegularityVerdict:
    """[z in -N_C0(y) cap ker nabla F(u), (nabla F)'(u; w) z in
    rge nabla F(u)] => z = 0, for any closed C0 with a normal cone."""
    u = as_vector(u, F.in_dim, 'u')
    y = as_vector(y, F.out_dim, 'y')
    w = _unit_direction(w, F.in_dim)
    normals = _normal_cone(C0, y)
    _require_point(C0, y, 'y')
    J, Jw = _smooth_data(F, u, w)
    witness = _constraint_premise(J, Jw, normals, False)
    return _condition_verdict(witness, u, y, w, ['Prop(5.10)', 'Eq(5.8)'])


def sufficient_m2r_indicator_nonpolyhedral(F, C0, u,
                                           w) -> RegularityVerdict:
    """Separation rge nabla F(u) cap N_C0(u) = {0} first, then the indicator
    condition."""
    u = as_vector(u, F.in_dim, 'u')
    w = _unit_direction(w, F.in_dim)
    normals = _normal_cone(C0, u)
    _require_point(C0, u, 'u')
    _tangent_check(C0, u, w)
    J, Jw = _smooth_data(F, u, w)
    n, m = J.shape
    # variables (beta, a): a in N, nabla F beta = a
    joint = PolyhedralSet.whole(m).product(normals).add_rows(
        E=np.hstack([J, -np.eye(n)]))
    overlap = joint.project(range(m, m + n)).nonzero_point()
    trace = ['Thm(5.11)', 'Eq(5.6)']
    if overlap is not None:
        return _verdict(Property.Metric2Regular, u, F(u), w, Status.Refused,
                        trace, witness={'normal': unit(overlap).tolist()},
                        reason='rge nabla F(u) meets N_C0(u)')
    witness = _indicator_premise(J, Jw, normals)
    return _condition_verdict(witness, u, F(u), w, trace + ['Eq(5.5)'])


def sufficient_m2r_product(G, R: StructuredMapping, T: StructuredMapping,
                           basepoint, direction) -> RegularityVerdict:
    """Metric 2-regularity of G + (R x T) at ((x, sigma), G(x, sigma) +
    (y, nu)); basepoint is ((x, sigma), (y, nu)), direction is (w, mu)."""
    P = Product(R, T)
    arg, value = basepoint
    query = DerivativeQuery(P, arg, value)
    arg, value = query.u, query.y
    direction = _unit_direction(direction, P.in_dim)
    trace = ['Thm(5.14)']
    if graphical_derivative(DerivativeQuery(P, arg, value,
                                            kind='graphical')).value(
                                                direction).is_empty():
        msg = f'DP is empty in the direction {direction.tolist()}'
        logger.error(msg)
        raise EmptyGraphicalDerivative(msg)
    if not isinstance(G, PolyMap):
        raise ConditionFailed('a', 'the smooth part must be polynomial')
    (x, y), (sigma, nu) = P.parts(arg, value)
    k, p, l, q = R.in_dim, R.out_dim, T.in_dim, T.out_dim
    KR = coderivative(DerivativeQuery(R, x, y))
    KT = coderivative(DerivativeQuery(T, sigma, nu))
    if KT.value_at_zero().nonzero_point() is not None:
        raise ConditionFailed('b', 'D*T(0) is not {0}')
    if KT.kernel().nonzero_point() is not None:
        raise ConditionFailed('c', 'ker D*T is not {0}',
                              witness=unit(KT.kernel().nonzero_point()).tolist())
    if KR.range_cone()[0].nonzero_point() is not None:
        raise ConditionFailed('d', 'rge D*R is not {0}')
    ranges_T = KT.range_cone()[0]
    J = G.jacobian(arg)
    Jw = G.jacobian_semiderivative(arg, direction)
    Jx, Js = J[:k], J[k:]
    Jwx, Jws = Jw[:k], Jw[k:]
    overlap = PolyhedralSet.whole(p + q).product(ranges_T).add_rows(
        E=np.hstack([Js, -np.eye(l)])).project(range(p + q, p + q + l))
    if overlap.nonzero_point() is not None:
        raise ConditionFailed('d', 'rge nabla_sigma G meets rge D*T',
                              witness=unit(overlap.nonzero_point()).tolist())
    # variables (theta, zeta, v1, beta, r) with v1 in D*T(zeta), r in rge D*T
    joint = PolyhedralSet.whole(p).product(KT.graph).product(
        PolyhedralSet.whole(p + q)).product(ranges_T)
    size = p + q
    rows = np.vstack([
        np.hstack([Jx, np.zeros((k, l + size + l))]),
        np.hstack([Js, np.eye(l), np.zeros((l, size + l))]),
        np.hstack([Jwx, np.zeros((k, l)), Jx, np.zeros((k, l))]),
        np.hstack([Jws, np.zeros((l, l)), Js, np.eye(l)])
    ])
    witness = _zero_only(joint.add_rows(E=rows), size)
    conditions = {'a': 'granted: polynomial G', 'b': 'verified',
                  'c': 'verified', 'd': 'verified'}
    return _condition_verdict(witness, arg, G(arg) + value, direction,
                              trace + ['(e)'], conditions=conditions)


# Gfrerer regularity


def check_gfrerer(S: StructuredMapping, u, y, w, eta) -> RegularityVerdict:
    """Reg(u, y; S) = 0 forces d Reg(u, y; S)(w, eta) > 0; modulus is its
    reciprocal. Non-tangent directions are regular outright."""
    query, D = _graphical_values(S, u, y, w)
    u, y = query.u, query.y
    w = as_vector(w, S.in_dim, 'direction')
    eta = as_vector(eta, S.out_dim, 'eta')
    direction = np.hstack([w, eta])
    if not D.contains(w, eta, GlobalConfig.TOL_EQ):
        return _verdict(Property.GfrererRegular, u, y, direction,
                        Status.CertifiedYes, ['Def(6.1)'], tangent=False)
    reg = reg_value(S, u, y)
    if reg > GlobalConfig.TOL_LSV:
        return _verdict(Property.GfrererRegular, u, y, direction,
                        Status.CertifiedYes, ['Eq(6.1)'], reg=reg,
                        tangent=True)
    record = _reg_subderivative(S, _GraphChart(S), u, y, w, eta)
    trace = ['Eq(6.1)', 'Thm(6.2)']
    if record['value'] is None:
        return _verdict(Property.GfrererRegular, u, y, direction,
                        Status.Refused, trace, subderivative=record)
    modulus = _reciprocal(record['value'])
    if not _positive(record):
        status = Status.NumericEvidenceAgainst
    elif record['certified']:
        status = Status.CertifiedYes
    else:
        status = Status.NumericEvidenceFor
    return _verdict(Property.GfrererRegular, u, y, direction, status, trace,
                    modulus=modulus, subderivative=record, tangent=True)


class EquivalenceReport(JsonSerializable):
    """metric2 verdict, the Gfrerer verdicts over sampled eta and whether
    they agree."""


def m2r_equiv_gfrerer(S: StructuredMapping, u, y, w,
                      rng=None) -> EquivalenceReport:
    w = _unit_direction(w, S.in_dim)
    metric2 = check_metric2_regularity(S, u, y, w)
    _, D = _graphical_values(S, u, y, w)
    rng = rng or GlobalConfig.init_rng()
    grid = rng.normal(size=(GlobalConfig.ETA_GRID, S.out_dim))
    grid /= np.linalg.norm(grid, axis=1)[:, None]
    etas = _value_points(D.value(w)) + list(grid)
    gfrerer = [check_gfrerer(S, u, y, w, eta) for eta in etas]
    undecided = metric2['status'] == Status.Refused or any(
        v['status'] == Status.Refused for v in gfrerer)
    consistent = undecided or metric2.affirms == all(v.affirms
                                                     for v in gfrerer)
    if not consistent:
        logger.error(
            f'metric 2-regularity and Gfrerer regularity disagree at '
            f'u={as_vector(u).tolist()} relative to {w.tolist()}')
    return EquivalenceReport(trace='Thm(6.3)',
                             metric2=metric2,
                             gfrerer=gfrerer,
                             consistent=consistent,
                             undecided=undecided)


# classic 2-regularity and its relatives


def _span(set_: PolyhedralSet):
    columns = []
    for piece in set_.nonempty_pieces():
        x0, D = piece.affine_hull()
        columns.append(np.column_stack([x0, D]))
    if not columns:
        return np.zeros((set_.dim, 0))
    return orth(np.hstack(columns))


def _single_piece(set_: PolyhedralSet, name):
    pieces = set_.nonempty_pieces()
    if len(pieces) != 1:
        raise NotPolyhedral(f'{name} should be a single convex polyhedron')
    return pieces[0]


def _hull_condition(F, u, w, J, Jw, C0: PolyhedralSet):
    """F'(u) span(C0) + F''(u)[w, ker F'(u) cap T_C0(u)] = R^m."""
    piece = _single_piece(C0, 'C0')
    tangent = piece.tangent_cone(u).add_rows(E=J.T)
    V = J.T @ _span(C0)
    dual = polar_piece(tangent).linear_preimage(Jw)
    if V.shape[1]:
        dual = dual.add_rows(E=V.T)
    return dual.nonzero_point() is None


def _set_condition(F, u, w, J, Jw, C0: PolyhedralSet):
    """rge F'(u) + F''(u)[w, F'(u)^-1 T_C0(F(u))] - T_C0(F(u)) = R^m."""
    piece = _single_piece(C0, 'C0')
    tangent = piece.tangent_cone(F(u))
    preimage = tangent.linear_preimage(J.T)
    dual = polar_piece(tangent).negate().add_rows(E=J).intersect(
        polar_piece(preimage).linear_preimage(Jw))
    return dual.nonzero_point() is None


def classic2_regularity(F: PolyMap, u, w, c0_domain: PolyhedralSet = None,
                        c0_range: PolyhedralSet = None) -> RegularityVerdict:
    """[z in ker nabla F(u), (nabla F)'(u; w) z in rge nabla F(u)] => z = 0,
    cross-checked against rge F'(u) + F''(u)[w, ker F'(u)] = R^m.

    c0_domain (in the argument space) adds the span condition, c0_range (in
    the value space) the condition relative to a set; both are reported next
    to the verdict and never change it."""
    u = as_vector(u, F.in_dim, 'u')
    w = _unit_direction(w, F.in_dim)
    J, Jw = _smooth_data(F, u, w)
    n, m = J.shape
    kernel = null_space(J)
    witness = None
    if kernel.shape[1]:
        residual = (np.eye(n) - J @ pinv(J)) @ Jw @ kernel
        solutions = null_space(residual)
        if solutions.shape[1]:
            witness = unit(kernel @ solutions[:, 0])
    derivative = J.T
    second = Jw.T
    ker_derivative = null_space(derivative)
    spanning = np.hstack([derivative, second @ ker_derivative])
    rank_ok = int(np.linalg.matrix_rank(spanning)) == m
    if rank_ok != (witness is None):
        msg = (f'kernel and rank forms of 2-regularity disagree at '
               f'u={u.tolist()}, w={w.tolist()}')
        logger.error(msg)
        raise InconsistencyError(msg)
    details = {'Eq(6.2)': witness is None, 'Eq(6.3)': rank_ok}
    if c0_domain is not None:
        _require_point(c0_domain, u, 'u')
        details['Eq(5.7)'] = _hull_condition(F, u, w, J, Jw, c0_domain)
    if c0_range is not None:
        try:
            _require_point(c0_range, F(u), 'F(u)')
            details['Rem(5.9)'] = _set_condition(F, u, w, J, Jw, c0_range)
        except PointNotInSet:
            details['Rem(5.9)'] = None
    status = Status.CertifiedYes if witness is None else Status.CertifiedNo
    return _verdict(Property.Classic2Regular, u, F(u), w, status,
                    ['Rem(6.4)', 'Eq(6.2)', 'Eq(6.3)'],
                    witness=None if witness is None else {
                        'z': witness.tolist()
                    },
                    **details)


# curve falsifier


class CurveEvidence(JsonSerializable):
    """Reg sampled along a graph curve; `verdict` is set when the samples
    speak against metric 2-regularity."""

    @property
    def against(self):
        return self.get('verdict') is not None


def curve_falsifier(S: StructuredMapping, u, y, curve: Callable,
                    schedule=None) -> CurveEvidence:
    """curve(t) -> (u(t), y(t)) on gph S with curve(0) = (u, y). Reg at most
    tol_lsv * |u(t) - u| at the three smallest t speaks against metric
    2-regularity relative to the initial direction of the curve."""
    u = as_vector(u, S.in_dim, 'u')
    y = as_vector(y, S.out_dim, 'y')
    schedule = GlobalConfig.CURVE_SCHEDULE if schedule is None else schedule
    schedule = sorted((float(t) for t in schedule), reverse=True)
    if len(schedule) < 3:
        raise ValueError('the curve schedule needs at least 3 points')
    start_u, start_y = curve(0.0)
    if (np.abs(as_vector(start_u) - u).max() > GlobalConfig.TOL_EQ or
            np.abs(as_vector(start_y) - y).max() > GlobalConfig.TOL_EQ):
        msg = 'the curve does not start at the basepoint'
        logger.error(msg)
        raise CurveOffGraph(msg)
    samples = []
    for t in schedule:
        ut, yt = (as_vector(part) for part in curve(t))
        if not S.contains(ut, yt):
            msg = f'curve point at t={t} is off the graph'
            logger.error(msg)
            raise CurveOffGraph(msg)
        distance = float(np.linalg.norm(ut - u))
        samples.append({
            't': t,
            'u': ut.tolist(),
            'reg': reg_value(S, ut, yt),
            'distance': distance
        })
    if all(s['distance'] <= GlobalConfig.TOL_EQ for s in samples):
        msg = 'the curve does not leave the basepoint'
        logger.error(msg)
        raise DegenerateCurve(msg)
    direction = unit(np.asarray(samples[-1]['u']) - u)
    tail = samples[-3:]
    against = all(s['reg'] <= GlobalConfig.TOL_LSV * s['distance']
                  for s in tail)
    verdict = None
    if against:
        verdict = _verdict(Property.Metric2Regular, u, y, direction,
                           Status.NumericEvidenceAgainst,
                           ['Lem(5.3)(d)', 'curve'],
                           witness={'samples': tail})
    return CurveEvidence(direction=direction.tolist(), samples=samples,
                         verdict=verdict)
