# -*- coding: utf-8 -*-
"""Graphical derivatives and coderivatives of structured mappings.

Structural rules (sum with a smooth part, products, indicators, constant
sets) are authoritative; the graph route through tangent and limiting normal
cones of an explicit polyhedral graph is kept as an independent oracle.

Coordinates: D*S(u|y) is returned as a homogeneous map z => v over (z, v),
z in the value space of S; DS(u|y) as w => eta over (w, eta).
"""

from functools import singledispatch
from logging import getLogger

import numpy as np

from .exceptions import BasepointOffGraph, ConditionFailed
from .polyhedra import PolyhedralCone, PolyhedralSet
from .setmaps import (ConstantSet, HomogeneousPiecewiseMap, Indicator, Product,
                      SmoothPlus, StructuredMapping)
from .smoothmaps import BlackBoxMap
from .utils import as_vector

logger = getLogger('lsvreg')
__all__ = [
    'DerivativeQuery', 'graphical_derivative', 'coderivative',
    'coderivative_kernel', 'graph_route_coderivative',
    'graph_route_graphical_derivative'
]


class DerivativeQuery(object):
    """A mapping with a basepoint (u, y) on its graph."""
    __slots__ = ('mapping', 'u', 'y', 'kind')
    KINDS = ('graphical', 'coderivative')

    def __init__(self, mapping: StructuredMapping, u, y, kind='coderivative'):
        if kind not in self.KINDS:
            raise ValueError(f'kind should be one of {self.KINDS}')
        self.mapping = mapping
        self.u = as_vector(u, mapping.in_dim, 'basepoint u')
        self.y = as_vector(y, mapping.out_dim, 'basepoint y')
        self.kind = kind
        if not mapping.contains(self.u, self.y):
            msg = (f'({self.u.tolist()}, {self.y.tolist()}) is not on the graph '
                   f'of {mapping!r}')
            logger.error(msg)
            raise BasepointOffGraph(msg)

    def __repr__(self):
        return (f'DerivativeQuery({self.mapping!r}, u={self.u.tolist()}, '
                f'y={self.y.tolist()}, kind={self.kind!r})')


def _swap_sign(in_dim, out_dim):
    """Matrix of (z, v) -> (v, -z)."""
    return np.block([[np.zeros((in_dim, out_dim)), np.eye(in_dim)],
                     [-np.eye(out_dim), np.zeros((out_dim, in_dim))]])


def graph_route_coderivative(mapping: StructuredMapping, u,
                             y) -> HomogeneousPiecewiseMap:
    """{(z, v) : (v, -z) in N_gph S(u, y)} from the explicit graph."""
    normals = mapping.graph().normal_cone(np.hstack([u, y]))
    graph = normals.linear_preimage(_swap_sign(mapping.in_dim,
                                               mapping.out_dim))
    return HomogeneousPiecewiseMap(graph, mapping.out_dim)


def graph_route_graphical_derivative(mapping: StructuredMapping, u,
                                     y) -> HomogeneousPiecewiseMap:
    tangent = mapping.graph().tangent_cone(np.hstack([u, y]))
    return HomogeneousPiecewiseMap(tangent, mapping.in_dim)


def _smooth_jacobian(F, u):
    if isinstance(F, BlackBoxMap) and not F.strictly_differentiable:
        raise ConditionFailed(
            'strict differentiability',
            'the sum rule needs a strictly differentiable smooth part; '
            'assert it on the BlackBoxMap')
    return F.jacobian(u)


@singledispatch
def _coderivative(mapping, u, y):
    return graph_route_coderivative(mapping, u, y)


@_coderivative.register(Indicator)
def _(mapping, u, y):
    normals = mapping.omega.normal_cone(u)
    return HomogeneousPiecewiseMap(
        PolyhedralSet.whole(mapping.out_dim).product(normals), mapping.out_dim)


@_coderivative.register(ConstantSet)
def _(mapping, u, y):
    normals = mapping.c1.normal_cone(y)
    return HomogeneousPiecewiseMap(
        normals.negate().product(PolyhedralSet.origin(mapping.in_dim)),
        mapping.out_dim)


@_coderivative.register(Product)
def _(mapping, u, y):
    (x, yR), (v, yT) = mapping.parts(u, y)
    return _coderivative(mapping.R, x, yR).product(
        _coderivative(mapping.T, v, yT))


@_coderivative.register(SmoothPlus)
def _(mapping, u, y):
    inner = _coderivative(mapping.C, u, mapping.inner_value(u, y))
    return inner.shear(_smooth_jacobian(mapping.F, u))


@singledispatch
def _graphical(mapping, u, y):
    return graph_route_graphical_derivative(mapping, u, y)


@_graphical.register(Indicator)
def _(mapping, u, y):
    tangent = mapping.omega.tangent_cone(u)
    return HomogeneousPiecewiseMap(
        tangent.product(PolyhedralSet.origin(mapping.out_dim)),
        mapping.in_dim)


@_graphical.register(ConstantSet)
def _(mapping, u, y):
    tangent = mapping.c1.tangent_cone(y)
    return HomogeneousPiecewiseMap(
        PolyhedralSet.whole(mapping.in_dim).product(tangent), mapping.in_dim)


@_graphical.register(Product)
def _(mapping, u, y):
    (x, yR), (v, yT) = mapping.parts(u, y)
    return _graphical(mapping.R, x, yR).product(_graphical(mapping.T, v, yT))


@_graphical.register(SmoothPlus)
def _(mapping, u, y):
    inner = _graphical(mapping.C, u, mapping.inner_value(u, y))
    return inner.shear(_smooth_jacobian(mapping.F, u).T)


def coderivative(query: DerivativeQuery) -> HomogeneousPiecewiseMap:
    return _coderivative(query.mapping, query.u, query.y)


def graphical_derivative(query: DerivativeQuery) -> HomogeneousPiecewiseMap:
    return _graphical(query.mapping, query.u, query.y)


def coderivative_kernel(K: HomogeneousPiecewiseMap) -> PolyhedralCone:
    return K.kernel()
