# -*- coding: utf-8 -*-
"""Set-valued mappings built from polyhedral pieces and smooth parts."""

from abc import ABC, abstractmethod
from itertools import combinations
from logging import getLogger
from typing import Callable, Union

import numpy as np
from scipy.linalg import null_space

from .config import GlobalConfig
from .exceptions import (DimensionMismatch, InvalidProblemError, NotPolyhedral,
                         PatternOverflow, PointNotInSet)
from .polyhedra import (ClosedSet, ConvexPolyhedron, PolyhedralCone,
                        PolyhedralSet, polar_piece)
from .smoothmaps import BlackBoxMap, PolyMap
from .utils import JsonSerializable, as_vector, unit

logger = getLogger('lsvreg')
__all__ = [
    'EqualityManifold', 'closed_set_from_payload', 'StructuredMapping',
    'GraphPolyhedral', 'Indicator', 'ConstantSet', 'Product', 'SmoothPlus',
    'NormalConeMap', 'single_valued', 'HomogeneousPiecewiseMap',
    'OscProbeResult', 'outer_semicontinuity_probe', 'mapping_from_payload'
]


class EqualityManifold(ClosedSet):
    """{x : h(x) = 0} for a polynomial h with surjective h'(x) on the set.

    Tangent cone ker h'(x), normal cone rge nabla h(x)."""

    def __init__(self, h: PolyMap):
        self.h = h
        self.dim = h.in_dim

    def contains(self, point, tol=None):
        tol = GlobalConfig.TOL_MEM if tol is None else tol
        point = as_vector(point, self.dim, 'point')
        return bool(np.all(np.abs(self.h(point)) <= tol * (1 + np.abs(point).max())))

    def _check(self, point):
        point = as_vector(point, self.dim, 'point')
        if not self.contains(point):
            msg = f'{point.tolist()} is not on the manifold'
            logger.error(msg)
            raise PointNotInSet(msg)
        return point

    def tangent_cone(self, point):
        point = self._check(point)
        return PolyhedralCone(
            self.dim, [ConvexPolyhedron(self.dim, E=self.h.derivative(point))])

    def normal_cone(self, point):
        point = self._check(point)
        complement = null_space(self.h.derivative(point))
        if not complement.size:
            return PolyhedralSet.whole(self.dim)
        return PolyhedralCone(self.dim,
                              [ConvexPolyhedron(self.dim, E=complement.T)])

    def lift(self, before=0, after=0):
        dim = before + self.dim + after
        return EqualityManifold(
            self.h.embed(dim, range(before, before + self.dim)))

    def as_polyhedral(self):
        """Exact polyhedral form when h is affine."""
        if not self.h.is_affine:
            raise NotPolyhedral('the manifold is curved')
        M, c = self.h.affine_parts()
        return PolyhedralSet.from_rows(self.dim, E=M, e=-c)

    def to_payload(self):
        return {'type': 'manifold', 'h': self.h.to_payload()}

    def __repr__(self):
        return f'EqualityManifold({self.h.to_text()})'


def closed_set_from_payload(payload) -> ClosedSet:
    if isinstance(payload, ClosedSet):
        return payload
    kind = payload.get('type', 'polyhedral')
    if kind == 'manifold':
        return EqualityManifold(PolyMap.from_payload(payload['h']))
    if kind == 'polyhedral':
        return PolyhedralSet.from_payload(payload)
    raise InvalidProblemError(f'unknown set type {kind!r}')


def _polyhedral(set_: ClosedSet) -> PolyhedralSet:
    if isinstance(set_, PolyhedralSet):
        return set_
    if isinstance(set_, EqualityManifold):
        return set_.as_polyhedral()
    raise NotPolyhedral(f'{set_!r} has no polyhedral form')


class StructuredMapping(ABC):
    in_dim = 0
    out_dim = 0

    @abstractmethod
    def graph(self) -> PolyhedralSet:
        """Exact graph over (u, y); NotPolyhedral if a smooth part is curved."""

    @abstractmethod
    def contains(self, u, y, tol=None) -> bool:
        pass

    @abstractmethod
    def to_payload(self) -> dict:
        pass

    @property
    def is_polyhedral(self):
        try:
            self.graph()
            return True
        except NotPolyhedral:
            return False

    def value_at(self, u) -> PolyhedralSet:
        u = as_vector(u, self.in_dim, 'argument')
        return self.graph().fix(range(self.in_dim), u)

    def split(self, point):
        point = as_vector(point, self.in_dim + self.out_dim, 'graph point')
        return point[:self.in_dim], point[self.in_dim:]

    def __repr__(self):
        return f'{self.__class__.__name__}({self.in_dim}=>{self.out_dim})'


class GraphPolyhedral(StructuredMapping):

    def __init__(self, graph: PolyhedralSet, in_dim: int):
        if not 0 < in_dim < graph.dim:
            raise DimensionMismatch(
                f'in_dim {in_dim} does not split a graph of dim {graph.dim}')
        self._graph = graph
        self.in_dim = in_dim
        self.out_dim = graph.dim - in_dim

    def graph(self):
        return self._graph

    def contains(self, u, y, tol=None):
        return self._graph.contains(np.hstack([u, y]), tol)

    def to_payload(self):
        return {
            'type': 'graph',
            'in_dim': self.in_dim,
            'graph': self._graph.to_payload()
        }


class Indicator(StructuredMapping):
    """Delta_Omega(x) = {0} on Omega, empty elsewhere."""

    def __init__(self, omega: ClosedSet, out_dim: int):
        self.omega = omega
        self.in_dim = omega.dim
        self.out_dim = out_dim

    def graph(self):
        return _polyhedral(self.omega).product(
            PolyhedralSet.origin(self.out_dim))

    def contains(self, u, y, tol=None):
        tol = GlobalConfig.TOL_MEM if tol is None else tol
        return self.omega.contains(u, tol) and bool(
            np.all(np.abs(as_vector(y, self.out_dim)) <= tol))

    def value_at(self, u):
        if self.omega.contains(u):
            return PolyhedralSet.origin(self.out_dim)
        return PolyhedralSet.empty(self.out_dim)

    def to_payload(self):
        return {
            'type': 'indicator',
            'out_dim': self.out_dim,
            'set': self.omega.to_payload()
        }


class ConstantSet(StructuredMapping):
    """M(x) = C1 for every x."""

    def __init__(self, c1: ClosedSet, in_dim: int):
        self.c1 = c1
        self.in_dim = in_dim
        self.out_dim = c1.dim

    def graph(self):
        return _polyhedral(self.c1).lift(before=self.in_dim)

    def contains(self, u, y, tol=None):
        as_vector(u, self.in_dim, 'argument')
        return self.c1.contains(y, tol)

    def value_at(self, u):
        return _polyhedral(self.c1)

    def to_payload(self):
        return {
            'type': 'constant',
            'in_dim': self.in_dim,
            'set': self.c1.to_payload()
        }


class Product(StructuredMapping):
    """(x, u) => R(x) x T(u)."""

    def __init__(self, R: StructuredMapping, T: StructuredMapping):
        self.R = R
        self.T = T
        self.in_dim = R.in_dim + T.in_dim
        self.out_dim = R.out_dim + T.out_dim

    def order(self):
        """Coordinates of gph R x gph T rearranged to (x, u, y_R, y_T)."""
        nR, mR, nT, mT = self.R.in_dim, self.R.out_dim, self.T.in_dim, self.T.out_dim
        return (list(range(nR)) + list(range(nR + mR, nR + mR + nT)) +
                list(range(nR, nR + mR)) +
                list(range(nR + mR + nT, nR + mR + nT + mT)))

    def graph(self):
        return self.R.graph().product(self.T.graph()).permute(self.order())

    def parts(self, u, y):
        u = as_vector(u, self.in_dim, 'argument')
        y = as_vector(y, self.out_dim, 'value')
        return ((u[:self.R.in_dim], y[:self.R.out_dim]),
                (u[self.R.in_dim:], y[self.R.out_dim:]))

    def contains(self, u, y, tol=None):
        (x, yR), (v, yT) = self.parts(u, y)
        return self.R.contains(x, yR, tol) and self.T.contains(v, yT, tol)

    def value_at(self, u):
        u = as_vector(u, self.in_dim, 'argument')
        return self.R.value_at(u[:self.R.in_dim]).product(
            self.T.value_at(u[self.R.in_dim:]))

    def to_payload(self):
        return {
            'type': 'product',
            'R': self.R.to_payload(),
            'T': self.T.to_payload()
        }


SmoothPart = Union[PolyMap, BlackBoxMap]


class SmoothPlus(StructuredMapping):
    """S = F + C."""

    def __init__(self, F: SmoothPart, C: StructuredMapping):
        if (F.in_dim, F.out_dim) != (C.in_dim, C.out_dim):
            raise DimensionMismatch(
                f'F: {F.in_dim}->{F.out_dim} vs C: {C.in_dim}=>{C.out_dim}')
        self.F = F
        self.C = C
        self.in_dim = C.in_dim
        self.out_dim = C.out_dim

    def graph(self):
        if not self.F.is_affine:
            raise NotPolyhedral('the smooth part is not affine')
        M, c = self.F.affine_parts()
        n, m = self.in_dim, self.out_dim
        shear = np.block([[np.eye(n), np.zeros((n, m))], [-M, np.eye(m)]])
        return self.C.graph().linear_preimage(shear,
                                              np.hstack([np.zeros(n), -c]))

    def inner_value(self, u, y):
        """The C-value y - F(u)."""
        return as_vector(y, self.out_dim, 'value') - self.F(u)

    def contains(self, u, y, tol=None):
        return self.C.contains(u, self.inner_value(u, y), tol)

    def value_at(self, u):
        shift = self.F(u)
        inner = self.C.value_at(u)
        return inner.linear_preimage(np.eye(self.out_dim), -shift)

    def to_payload(self):
        if isinstance(self.F, BlackBoxMap):
            raise InvalidProblemError('black-box maps are not serializable')
        return {
            'type': 'smooth_plus',
            'F': self.F.to_payload(),
            'C': self.C.to_payload()
        }


class NormalConeMap(StructuredMapping):
    """x => N_C0(x) for a convex polyhedron C0.

    The graph is the union over faces F of F x N_F, N_F the normal cone on
    the relative interior of F."""

    def __init__(self, c0: PolyhedralSet):
        pieces = c0.nonempty_pieces()
        if len(pieces) != 1:
            raise NotPolyhedral(
                'normal cone maps need a single convex polyhedron')
        self.c0 = c0
        self.piece = pieces[0].reduce()
        self.in_dim = self.out_dim = c0.dim
        self._graph = None

    def faces(self):
        """(active rows, face) for every face, indexed by its exact active set."""
        piece = self.piece
        rows = range(len(piece.A))
        visited = 0
        for size in range(len(piece.A) + 1):
            for active in combinations(rows, size):
                visited += 1
                if visited > GlobalConfig.MAX_FACE_SUBSETS:
                    msg = (f'face enumeration exceeds '
                           f'{GlobalConfig.MAX_FACE_SUBSETS} subsets')
                    logger.error(msg)
                    raise PatternOverflow(msg)
                active = list(active)
                face = piece.add_rows(E=piece.A[active], e=piece.b[active])
                if face.is_empty():
                    continue
                implicit = [
                    i for i in rows if i not in active and
                    -face.maximize(-piece.A[i]) >= piece.b[i] -
                    GlobalConfig.TOL_MEM * (1 + abs(piece.b[i]))
                ]
                if implicit:
                    continue
                yield active, face

    def graph(self):
        if self._graph is None:
            pieces = []
            for active, face in self.faces():
                normals = polar_piece(
                    ConvexPolyhedron(self.in_dim, self.piece.A[active], None,
                                     self.piece.E, None))
                pieces.append(face.product(normals))
            logger.debug(f'normal cone graph with {len(pieces)} faces')
            self._graph = PolyhedralSet(2 * self.in_dim, pieces)
        return self._graph

    def contains(self, u, y, tol=None):
        return self.graph().contains(np.hstack([u, y]), tol)

    def value_at(self, u):
        if not self.piece.contains(u):
            return PolyhedralSet.empty(self.out_dim)
        return PolyhedralCone(self.out_dim, [self.piece.normal_cone(u)])

    def to_payload(self):
        return {'type': 'normal_cone', 'set': self.c0.to_payload()}


def single_valued(F: SmoothPart) -> SmoothPlus:
    return SmoothPlus(F, ConstantSet(PolyhedralSet.origin(F.out_dim), F.in_dim))


def mapping_from_payload(payload) -> StructuredMapping:
    if isinstance(payload, StructuredMapping):
        return payload
    try:
        kind = payload['type']
        if kind == 'graph':
            return GraphPolyhedral(PolyhedralSet.from_payload(payload['graph']),
                                   int(payload['in_dim']))
        if kind == 'indicator':
            return Indicator(closed_set_from_payload(payload['set']),
                             int(payload['out_dim']))
        if kind == 'constant':
            return ConstantSet(closed_set_from_payload(payload['set']),
                               int(payload['in_dim']))
        if kind == 'product':
            return Product(mapping_from_payload(payload['R']),
                           mapping_from_payload(payload['T']))
        if kind == 'smooth_plus':
            return SmoothPlus(PolyMap.from_payload(payload['F']),
                              mapping_from_payload(payload['C']))
        if kind == 'normal_cone':
            return NormalConeMap(PolyhedralSet.from_payload(payload['set']))
        if kind == 'single_valued':
            return single_valued(PolyMap.from_payload(payload['F']))
    except KeyError as err:
        raise InvalidProblemError(f'mapping payload misses {err}')
    raise InvalidProblemError(f'unknown mapping type {kind!r}')


class HomogeneousPiecewiseMap(object):
    """Positively homogeneous z => K(z) with a conic polyhedral graph over
    (z, eta), z of length arg_dim and eta of length val_dim."""

    def __init__(self, graph: PolyhedralSet, arg_dim: int):
        if not isinstance(graph, PolyhedralCone):
            graph = PolyhedralCone(graph.dim, graph.pieces)
        if not 0 < arg_dim < graph.dim:
            raise DimensionMismatch(
                f'arg_dim {arg_dim} does not split a graph of dim {graph.dim}')
        self.graph = graph
        self.arg_dim = arg_dim
        self.val_dim = graph.dim - arg_dim

    @property
    def arg_coords(self):
        return range(self.arg_dim)

    @property
    def val_coords(self):
        return range(self.arg_dim, self.graph.dim)

    def contains(self, z, eta, tol=None):
        return self.graph.contains(np.hstack([z, eta]), tol)

    def value(self, z) -> PolyhedralSet:
        return self.graph.fix(self.arg_coords,
                              as_vector(z, self.arg_dim, 'argument'))

    def domain(self) -> PolyhedralCone:
        return self.graph.project(self.arg_coords)

    def range_cone(self):
        """(rge K, closure_taken). Projections of polyhedral cones are closed,
        so the closure flag stays False."""
        return self.graph.project(self.val_coords), False

    def kernel(self) -> PolyhedralCone:
        """{z : 0 in K(z)}."""
        return self.graph.fix(self.val_coords, np.zeros(self.val_dim))

    def value_at_zero(self):
        return self.value(np.zeros(self.arg_dim))

    def inverse_at_zero(self):
        return self.kernel()

    def inverse(self):
        order = list(self.val_coords) + list(self.arg_coords)
        return HomogeneousPiecewiseMap(self.graph.permute(order), self.val_dim)

    def shear(self, M):
        """z => M z + K(z), M of shape (val_dim, arg_dim)."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape != (self.val_dim, self.arg_dim):
            raise DimensionMismatch(
                f'shear of shape {M.shape}, expected '
                f'{(self.val_dim, self.arg_dim)}')
        n, m = self.arg_dim, self.val_dim
        inverse = np.block([[np.eye(n), np.zeros((n, m))], [-M, np.eye(m)]])
        return HomogeneousPiecewiseMap(self.graph.linear_preimage(inverse), n)

    def product(self, other: 'HomogeneousPiecewiseMap'):
        """(z1, z2) => K1(z1) x K2(z2)."""
        n1, m1, n2 = self.arg_dim, self.val_dim, other.arg_dim
        order = (list(range(n1)) + list(range(n1 + m1, n1 + m1 + n2)) +
                 list(range(n1, n1 + m1)) +
                 list(range(n1 + m1 + n2, self.graph.dim + other.graph.dim)))
        return HomogeneousPiecewiseMap(
            self.graph.product(other.graph).permute(order), n1 + n2)

    def permute_args(self, order):
        order = list(order) + list(self.val_coords)
        return HomogeneousPiecewiseMap(self.graph.permute(order), self.arg_dim)

    def permute_values(self, order):
        order = list(self.arg_coords) + [self.arg_dim + i for i in order]
        return HomogeneousPiecewiseMap(self.graph.permute(order), self.arg_dim)

    def equals(self, other: 'HomogeneousPiecewiseMap'):
        return (self.arg_dim == other.arg_dim and
                self.graph.equals(other.graph))

    def to_payload(self):
        return {'arg_dim': self.arg_dim, 'graph': self.graph.to_payload()}

    def __repr__(self):
        return (f'HomogeneousPiecewiseMap({self.arg_dim}=>{self.val_dim}, '
                f'pieces={len(self.graph)})')


class OscProbeResult(JsonSerializable):
    """Outcome of the sampling falsifier; `evidence` is never a certificate."""

    @property
    def violated(self):
        return self.get('counterexample') is not None


def _witnesses(values: PolyhedralSet, conic: bool, bound=1e3):
    """Bounded points of a value set, normalized when it is a cone."""
    result = []
    for piece in values.nonempty_pieces():
        candidate = piece.homogenize() if conic else piece
        for j in range(values.dim):
            for sign in (1.0, -1.0):
                c = np.zeros(values.dim)
                c[j] = sign
                point = candidate.argmax(c, bounds=(-bound, bound))
                if point is None:
                    continue
                if conic:
                    if np.linalg.norm(point) <= GlobalConfig.TOL_EQ:
                        continue
                    point = unit(point)
                elif np.abs(point).max() >= 0.5 * bound:
                    continue
                result.append(((j, sign), point))
    return result


def outer_semicontinuity_probe(family: Callable,
                               xi_bar,
                               z_points,
                               conic=False,
                               directions=None,
                               schedule=None,
                               rng=None) -> OscProbeResult:
    """Sampling falsifier for outer semicontinuity of (xi, z) => family(xi, z)
    at (xi_bar, z) for each z in z_points.

    family returns a PolyhedralSet of values or None off its domain. With
    conic=True the values are replaced by their closed conic hulls, which is
    the map cone(family(xi, z))."""
    xi_bar = as_vector(xi_bar, name='parameter')
    schedule = GlobalConfig.PROBE_SCHEDULE if schedule is None else schedule
    if directions is None:
        rng = rng or GlobalConfig.init_rng()
        directions = rng.normal(size=(GlobalConfig.PROBE_DIRECTIONS,
                                      xi_bar.shape[0]))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
    checked = 0
    for z in z_points:
        z = as_vector(z, name='argument')
        limit_values = family(xi_bar, z)
        for direction in directions:
            distances = {}
            for tau in schedule[-2:]:
                values = family(xi_bar + tau * direction, z)
                if values is None or values.is_empty():
                    continue
                for key, eta in _witnesses(values, conic):
                    checked += 1
                    if limit_values is None:
                        gap = np.inf
                    else:
                        target = limit_values.homogenize(
                        ) if conic else limit_values
                        gap = target.distance(eta)
                    distances.setdefault(key, []).append((gap, eta))
            for key, gaps in distances.items():
                if len(gaps) == 2 and all(
                        gap > 1e-3 * (1 + np.linalg.norm(eta))
                        for gap, eta in gaps):
                    counterexample = {
                        'xi': (xi_bar + schedule[-1] * direction).tolist(),
                        'z': z.tolist(),
                        'eta': gaps[-1][1].tolist(),
                        'limit_distance': float(gaps[-1][0])
                    }
                    logger.debug(f'outer semicontinuity violated: {counterexample}')
                    return OscProbeResult(evidence='counterexample',
                                          counterexample=counterexample,
                                          samples=checked)
    return OscProbeResult(evidence='no counterexample',
                          counterexample=None,
                          samples=checked)
