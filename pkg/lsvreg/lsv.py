# -*- coding: utf-8 -*-
"""Least singular value of parametric homogeneous maps.

For xi in D the value is inf over unit z of dist(0, Xi(xi, z)). Families are
given in split form Xi(xi, z) = A(xi) z + Gamma(xi, z), with A a polynomial
matrix function and Gamma either an explicit polyhedral graph over
(xi, z, eta) or a pointwise family xi => graph of Gamma(xi, .) over (z, eta).
"""

from itertools import combinations
from logging import getLogger
from math import inf, isfinite, isinf, sqrt
from typing import Callable, Optional
from warnings import warn

import numpy as np
from scipy.linalg import eigh, null_space, pinv, svdvals
from scipy.optimize import minimize

from .config import GlobalConfig
from .exceptions import (ConditionFailed, DimensionMismatch, InconsistencyError,
                         NonConvergent, NonconvergentSearch, NotPolyhedral,
                         PatternOverflow)
from .gendiff import DerivativeQuery, coderivative
from .polyhedra import ConvexPolyhedron, PolyhedralCone, PolyhedralSet
from .setmaps import (ConstantSet, HomogeneousPiecewiseMap, Indicator,
                      NormalConeMap, Product, SmoothPlus, StructuredMapping,
                      outer_semicontinuity_probe)
from .smoothmaps import PolyMap
from .utils import JsonSerializable, as_vector, unit

logger = getLogger('lsvreg')
__all__ = [
    'LsvResult', 'LsvInstance', 'SingularityReport', 'SubderivativeBound',
    'SubderivativeEstimate', 'CombinedBound', 'lsv_of_graph', 'lsv_of_map',
    'lsv_result', 'lsv_value', 'reg_value', 'outer_norm', 'solution_cone',
    'unit_points', 'singularity_report', 'theta_cone', 'calmness_constant',
    'lower_bound_theorem32', 'lower_bound_theorem35', 'combine_bounds',
    'subderivative_estimate'
]


class LsvResult(JsonSerializable):
    """value, exact flag and a unit minimizer `z` (None if nothing is attained)."""


# exact path: generalized eigenproblems on the faces of conic pieces


def _independent_faces(piece: ConvexPolyhedron):
    """Row subsets J with [E; A_J] of full row rank, as (J, rows)."""
    A, E = piece.A, piece.E
    base_rank = int(np.linalg.matrix_rank(E)) if len(E) else 0
    visited = 0
    for size in range(min(len(A), piece.dim - base_rank) + 1):
        for subset in combinations(range(len(A)), size):
            visited += 1
            if visited > GlobalConfig.MAX_FACE_SUBSETS:
                msg = (f'face enumeration exceeds '
                       f'{GlobalConfig.MAX_FACE_SUBSETS} subsets')
                logger.error(msg)
                raise PatternOverflow(msg)
            rows = np.vstack([E, A[list(subset)]])
            if size and np.linalg.matrix_rank(rows) < base_rank + size:
                continue
            yield subset, rows


def _cone_direction(A, X):
    """t != 0 with A X t <= 0, None when only t = 0 qualifies."""
    p = X.shape[1]
    if not len(A):
        return np.eye(p)[0]
    rows = A @ X
    scale = max(1.0, float(np.abs(rows).max()))
    rows = rows[np.linalg.norm(rows, axis=1) > 1e-9 * scale]
    if not len(rows):
        return np.eye(p)[0]
    return ConvexPolyhedron(p, rows, np.zeros(len(rows))).nonzero_point()


def _critical_point(B, num, den, A, largest):
    """Smallest (or largest) feasible critical value of |x_num|^2 / |x_den|^2
    over x = B c in the cone {A x <= 0}; (value, x) with |x_den| = 1."""
    Bn, Bd = B[num], B[den]
    r = B.shape[1]
    kernel = null_space(Bd) if Bd.size else np.eye(r)
    if kernel.shape[1] == r:
        return None
    complement = null_space(kernel.T) if kernel.shape[1] else np.eye(r)
    back = complement
    if kernel.shape[1]:
        back = complement - kernel @ pinv(Bn @ kernel) @ Bn @ complement
    K = Bn @ back
    W = Bd @ complement
    values, vectors = eigh(K.T @ K, W.T @ W)
    order = list(range(len(values)))
    if largest:
        order.reverse()
    position = 0
    while position < len(order):
        head = values[order[position]]
        cluster = [order[position]]
        position += 1
        while (position < len(order) and abs(values[order[position]] - head)
               <= 1e-8 * (1 + abs(head))):
            cluster.append(order[position])
            position += 1
        X = B @ back @ vectors[:, cluster]
        t = _cone_direction(A, X)
        if t is None:
            continue
        x = X @ t
        norm = np.linalg.norm(x[den])
        if norm <= 1e-12:
            continue
        value = float(head) if head > 1e-12 else 0.0
        return value, x / norm
    return None


def _face_extreme(piece: ConvexPolyhedron, num, den, largest=False):
    """Extreme of |x_num| / |x_den| over the conic piece with x_den != 0.

    Every extremal point lies in the relative interior of a face, where it is
    a critical point of the ratio on the face span; spans come from the
    independent active sets. Returns (value, x) or None."""
    num, den = list(num), list(den)
    best = None
    for _, rows in _independent_faces(piece):
        B = null_space(rows) if len(rows) else np.eye(piece.dim)
        if not B.shape[1]:
            continue
        found = _critical_point(B, num, den, piece.A, largest)
        if found is None:
            continue
        if best is None or (found[0] > best[0] if largest else
                            found[0] < best[0]):
            best = found
    if best is None:
        return None
    return sqrt(best[0]), best[1]


# numeric path: sphere search inside the affine hull of the argument slice


def _slice_distance(piece: ConvexPolyhedron, arg_dim, z):
    return piece.fix(range(arg_dim), z).distance(np.zeros(piece.dim - arg_dim))


def _sphere_points(dim, rng, shift=0.0):
    if dim == 2:
        angles = (np.arange(GlobalConfig.GRID_POINTS) +
                  shift) * 2 * np.pi / GlobalConfig.GRID_POINTS
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if dim == 3:
        count = 2 * GlobalConfig.GRID_POINTS
        index = np.arange(count) + 0.5
        polar_angle = np.arccos(1 - 2 * index / count)
        azimuth = np.pi * (1 + sqrt(5)) * index + 2 * np.pi * shift / count
        return np.column_stack([
            np.cos(azimuth) * np.sin(polar_angle),
            np.sin(azimuth) * np.sin(polar_angle),
            np.cos(polar_angle)
        ])
    points = rng.normal(size=(16 * GlobalConfig.MULTISTARTS, dim))
    return points / np.linalg.norm(points, axis=1)[:, None]


def _sphere_run(objective, dim, radius, rng, shift):
    penalized = lambda s: min(objective(radius * unit(s)), 1e6)
    samples = _sphere_points(dim, rng, shift)
    values = np.array([penalized(s) for s in samples])
    best_value, best_point = inf, None
    starts = np.argsort(values)[:max(4, GlobalConfig.MULTISTARTS // 8)]
    for index in starts:
        if values[index] >= 1e6:
            break
        result = minimize(penalized,
                          samples[index],
                          method='Nelder-Mead',
                          options={
                              'xatol': 1e-10,
                              'fatol': 1e-12,
                              'maxiter': 400 * dim
                          })
        value, point = float(result.fun), unit(result.x)
        if values[index] < value:
            value, point = float(values[index]), samples[index]
        if value < best_value:
            best_value, best_point = value, point
    if best_value >= 1e6:
        return inf, None
    return best_value, radius * best_point


def _sphere_search(piece: ConvexPolyhedron, arg_dim) -> LsvResult:
    """inf over unit z of the slice distance, inside aff(proj_z piece).

    With a slice hull of dimension <= 1 the sphere meets it in at most two
    points and the result is exact; otherwise it is a seeded grid or
    multistart search with Nelder-Mead refinement, run twice."""
    hull = piece.project(range(arg_dim)).affine_hull()
    if hull is None:
        return LsvResult(value=inf, exact=True, z=None)
    x0, D = hull
    parallel = D.T @ x0
    offset = x0 - D @ parallel
    squared = 1.0 - float(offset @ offset)
    if squared < -1e-9:
        return LsvResult(value=inf, exact=True, z=None)
    radius = sqrt(max(squared, 0.0))
    objective = lambda t: _slice_distance(piece, arg_dim, offset + D @ t)
    dim = D.shape[1]
    if dim == 0 or radius <= 1e-9:
        if dim == 0 and abs(squared) > 1e-9:
            return LsvResult(value=inf, exact=True, z=None)
        candidates = [np.zeros(dim)]
    elif dim == 1:
        candidates = [np.array([radius]), np.array([-radius])]
    else:
        candidates = None
    if candidates is not None:
        value, z = inf, None
        for t in candidates:
            current = objective(t)
            if current < value:
                value, z = current, offset + D @ t
        return LsvResult(value=value,
                         exact=True,
                         z=None if z is None else z.tolist())
    first = _sphere_run(objective, dim, radius, GlobalConfig.init_rng(), 0.0)
    second = _sphere_run(objective, dim, radius,
                         GlobalConfig.init_rng(GlobalConfig.SEED + 1), 0.5)
    if isfinite(first[0]) != isfinite(second[0]) or (
            isfinite(first[0]) and abs(first[0] - second[0]) >
            GlobalConfig.TOL_SEARCH * (1 + first[0])):
        msg = (f'sphere search is not stable: {first[0]:.9g} vs '
               f'{second[0]:.9g}')
        logger.error(msg)
        raise NonconvergentSearch(msg)
    value, t = min(first, second, key=lambda item: item[0])
    logger.debug(f'sphere search over a {dim}-dimensional slice: {value:.9g}')
    return LsvResult(value=value,
                     exact=False,
                     z=None if t is None else (offset + D @ t).tolist())


def _conic_piece_lsv(piece: ConvexPolyhedron, arg_dim) -> LsvResult:
    try:
        found = _face_extreme(piece, range(arg_dim, piece.dim), range(arg_dim))
    except PatternOverflow:
        msg = 'face enumeration overflowed, using the numeric sphere search'
        warn(msg)
        logger.warning(msg)
        return _sphere_search(piece, arg_dim)
    if found is None:
        return LsvResult(value=inf, exact=True, z=None)
    value, x = found
    return LsvResult(value=value, exact=True, z=x[:arg_dim].tolist())


def lsv_of_graph(graph: PolyhedralSet, arg_dim: int) -> LsvResult:
    """inf over (z, eta) in the graph with |z| = 1 of |eta|, +inf if none."""
    if not 0 < arg_dim < graph.dim:
        raise DimensionMismatch(
            f'arg_dim {arg_dim} does not split a graph of dim {graph.dim}')
    best = LsvResult(value=inf, exact=True, z=None)
    exact = True
    for piece in graph.nonempty_pieces():
        if piece.is_conic and not GlobalConfig.NUMERIC_ONLY:
            result = _conic_piece_lsv(piece, arg_dim)
        else:
            result = _sphere_search(piece, arg_dim)
        exact = exact and result['exact']
        if result['value'] < best['value']:
            best = result
    best['exact'] = exact
    return best


def lsv_of_map(K: HomogeneousPiecewiseMap) -> LsvResult:
    return lsv_of_graph(K.graph, K.arg_dim)


def _direct_outer_norm(K: HomogeneousPiecewiseMap):
    """sup |z| / |eta| over the graph, by the face method with roles swapped."""
    value = 0.0
    for piece in K.graph.nonempty_pieces():
        if piece.fix(K.val_coords, np.zeros(K.val_dim)).nonzero_point() \
                is not None:
            return inf
        found = _face_extreme(piece, K.arg_coords, K.val_coords, largest=True)
        if found is not None:
            value = max(value, found[0])
    return value


def outer_norm(K: HomogeneousPiecewiseMap, cross_check=True) -> float:
    """|K^-1|+ = 1 / lsv (inf when the lsv vanishes)."""
    result = lsv_of_map(K)
    ell = result['value']
    if ell <= GlobalConfig.TOL_LSV:
        reciprocal = inf
    else:
        reciprocal = 1.0 / ell
    if cross_check and not GlobalConfig.NUMERIC_ONLY:
        try:
            direct = _direct_outer_norm(K)
        except PatternOverflow:
            return reciprocal
        agree = (isinf(direct) and isinf(reciprocal)) or (
            isfinite(direct) and isfinite(reciprocal) and
            abs(direct - reciprocal) <= 1e-6 * (1 + reciprocal))
        if not agree:
            msg = (f'outer norm {direct!r} disagrees with 1/lsv '
                   f'{reciprocal!r} for {K!r}')
            logger.error(msg)
            # numeric lsv values only log
            if result['exact']:
                raise InconsistencyError(msg)
    return reciprocal


# split-form families


def _cone_valued(mapping: StructuredMapping) -> bool:
    """Coderivative values of indicators and constant sets are cones."""
    if isinstance(mapping, (Indicator, ConstantSet)):
        return True
    if isinstance(mapping, Product):
        return _cone_valued(mapping.R) and _cone_valued(mapping.T)
    return False


class LsvInstance(object):
    """Xi(xi, z) = A(xi) z + Gamma(xi, z) over the parameter set D.

    A is a PolyMap over xi with q * m outputs (row-major q x m matrix).
    Gamma is either `gamma_graph`, a PolyhedralSet over (xi, z, eta), or
    `gamma_family`, a callable xi => PolyhedralSet over (z, eta) returning
    None off D. With neither, Gamma is identically {0}. `domain` is a
    PolyhedralSet over xi or a predicate; it defaults to the whole space."""

    def __init__(self,
                 A: PolyMap,
                 m: int,
                 q: int,
                 gamma_graph: PolyhedralSet = None,
                 gamma_family: Callable = None,
                 domain=None,
                 cone_valued=False,
                 outer_semicontinuous=None,
                 calmness=None):
        if A.out_dim != q * m:
            raise DimensionMismatch(
                f'A has {A.out_dim} entries, expected {q}x{m}')
        self.A = A
        self.xi_dim = A.in_dim
        self.m = int(m)
        self.q = int(q)
        if gamma_graph is None and gamma_family is None:
            gamma_graph = PolyhedralSet.whole(self.xi_dim + self.m).product(
                PolyhedralSet.origin(self.q))
        if gamma_graph is not None and gamma_graph.dim != self.xi_dim + m + q:
            raise DimensionMismatch(
                f'Gamma graph of dim {gamma_graph.dim}, expected '
                f'{self.xi_dim + m + q}')
        self.gamma_graph = gamma_graph
        self.gamma_family = gamma_family
        self.domain = domain
        self.cone_valued = cone_valued
        # polyhedral graphs are closed, hence outer semicontinuous
        self.outer_semicontinuous = (gamma_graph is not None
                                     if outer_semicontinuous is None else
                                     outer_semicontinuous)
        self.calmness = calmness

    @classmethod
    def from_sum(cls, F: PolyMap, C: StructuredMapping):
        """Xi((u, y), z) = nabla F(u) z + D*C(u|y)(z) over D = gph C.

        Reg(u, F(u) + y; F + C) is its lsv at (u, y)."""
        if not isinstance(F, PolyMap):
            raise ConditionFailed(
                'iii', 'the smooth part must be polynomial to form nabla F')
        n, m = F.in_dim, F.out_dim
        if (C.in_dim, C.out_dim) != (n, m):
            raise DimensionMismatch(
                f'{C!r} does not fit a smooth part {n}->{m}')
        order = [j * n + i for i in range(n) for j in range(m)]
        A = F.derivative_map().select(order).embed(n + m, range(n))
        try:
            graph = C.graph()
        except NotPolyhedral:
            graph = None
        if graph is not None and len(graph.nonempty_pieces()) == 1:
            normals = NormalConeMap(graph).graph()
            N = n + m
            # (u, y, z, v) -> (u, y, nu_u = v, nu_y = -z)
            L = np.zeros((2 * N, 2 * N))
            L[:N, :N] = np.eye(N)
            L[N:N + n, N + m:] = np.eye(n)
            L[N + n:, N:N + m] = -np.eye(m)
            return cls(A,
                       m,
                       n,
                       gamma_graph=normals.linear_preimage(L),
                       domain=graph,
                       cone_valued=_cone_valued(C),
                       outer_semicontinuous=True)

        def family(xi):
            u, y = xi[:n], xi[n:]
            if not C.contains(u, y):
                return None
            return coderivative(DerivativeQuery(C, u, y)).graph

        return cls(A,
                   m,
                   n,
                   gamma_family=family,
                   domain=lambda xi: C.contains(xi[:n], xi[n:]),
                   cone_valued=_cone_valued(C),
                   outer_semicontinuous=True)

    @classmethod
    def from_mapping(cls, S: StructuredMapping):
        if isinstance(S, SmoothPlus) and isinstance(S.F, PolyMap):
            return cls.from_sum(S.F, S.C)
        return cls.from_sum(PolyMap.zero(S.in_dim, S.out_dim), S)

    @property
    def is_graph(self):
        return self.gamma_family is None

    def in_domain(self, xi):
        if self.domain is None:
            return True
        if callable(self.domain) and not isinstance(self.domain,
                                                    PolyhedralSet):
            return bool(self.domain(xi))
        return self.domain.contains(xi)

    def matrix(self, xi):
        return self.A(xi).reshape(self.q, self.m)

    def matrix_derivative(self, xi, omega):
        """A'(xi; omega) as a q x m matrix."""
        omega = as_vector(omega, self.xi_dim, 'direction')
        return (self.A.derivative(xi) @ omega).reshape(self.q, self.m)

    def gamma_at(self, xi) -> Optional[PolyhedralSet]:
        """Graph of H = Gamma(xi, .) over (z, eta); None off D."""
        xi = as_vector(xi, self.xi_dim, 'parameter')
        if not self.in_domain(xi):
            return None
        if self.gamma_family is not None:
            return self.gamma_family(xi)
        return self.gamma_graph.fix(range(self.xi_dim), xi)

    def gamma_value(self, xi, z) -> Optional[PolyhedralSet]:
        graph = self.gamma_at(xi)
        if graph is None:
            return None
        return graph.fix(range(self.m), as_vector(z, self.m, 'argument'))

    def xi_graph(self, xi) -> Optional[PolyhedralSet]:
        """Graph of Xi(xi, .) over (z, eta)."""
        gamma = self.gamma_at(xi)
        if gamma is None:
            return None
        M = self.matrix(xi)
        shear = np.block([[np.eye(self.m), np.zeros((self.m, self.q))],
                          [-M, np.eye(self.q)]])
        return gamma.linear_preimage(shear)

    def lsv(self, xi):
        return lsv_value(self, xi)

    def __repr__(self):
        kind = 'graph' if self.is_graph else 'family'
        return (f'LsvInstance(xi_dim={self.xi_dim}, m={self.m}, q={self.q}, '
                f'gamma={kind})')


def lsv_result(inst: LsvInstance, xi) -> LsvResult:
    graph = inst.xi_graph(as_vector(xi, inst.xi_dim, 'parameter'))
    if graph is None:
        return LsvResult(value=inf, exact=True, z=None)
    return lsv_of_graph(graph, inst.m)


def lsv_value(inst: LsvInstance, xi) -> float:
    return lsv_result(inst, xi)['value']


def reg_value(S: StructuredMapping, u, y) -> float:
    """Reg(u, y; S), the lsv of the coderivative; +inf off the graph."""
    u = as_vector(u, S.in_dim, 'u')
    y = as_vector(y, S.out_dim, 'y')
    if not S.contains(u, y):
        return inf
    return lsv_of_map(coderivative(DerivativeQuery(S, u, y)))['value']


# singularity


class SingularityReport(JsonSerializable):
    """is_singular, lsv_value, witnesses (unit vectors or None) and the
    solution cone payload; representation is 'explicit' or 'unit-slice'."""


def solution_cone(inst: LsvInstance, xi) -> PolyhedralSet:
    """{z : 0 in A(xi) z + H(z)}."""
    graph = inst.xi_graph(as_vector(xi, inst.xi_dim, 'parameter'))
    if graph is None:
        return PolyhedralSet.empty(inst.m)
    return graph.fix(range(inst.m, inst.m + inst.q), np.zeros(inst.q))


def unit_points(set_: PolyhedralSet):
    """Unit vectors of the set when every piece has an affine hull of
    dimension <= 1, else None."""
    points = []
    for piece in set_.nonempty_pieces():
        x0, D = piece.affine_hull()
        if D.shape[1] == 0:
            candidates = [x0]
        elif D.shape[1] == 1:
            direction = D[:, 0]
            half = float(x0 @ direction)
            disc = half * half - float(x0 @ x0) + 1.0
            if disc < -1e-12:
                continue
            root = sqrt(max(disc, 0.0))
            candidates = [x0 + (-half + root) * direction,
                          x0 + (-half - root) * direction]
        else:
            return None
        for point in candidates:
            if abs(np.linalg.norm(point) - 1) > 1e-7:
                continue
            if not piece.contains(point, tol=1e-7):
                continue
            if any(np.allclose(point, known, atol=1e-9) for known in points):
                continue
            points.append(point)
    return points


def singularity_report(inst: LsvInstance, xi) -> SingularityReport:
    xi = as_vector(xi, inst.xi_dim, 'parameter')
    cone = solution_cone(inst, xi)
    singular = cone.nonzero_point() is not None
    points = unit_points(cone) if singular else []
    ell = lsv_value(inst, xi)
    if singular != (ell <= GlobalConfig.TOL_LSV) and inst.outer_semicontinuous:
        logger.error(f'singularity test ({singular}) and lsv value {ell!r} '
                     f'disagree at {xi.tolist()}')
    return SingularityReport(
        is_singular=singular,
        lsv_value=ell,
        representation='explicit' if points is not None else 'unit-slice',
        witnesses=None if points is None else [p.tolist() for p in points],
        solution_cone=cone.to_payload())


# certified lower bounds for the subderivative of the lsv function


class SubderivativeBound(JsonSerializable):
    """A lower bound for d lsv(xi)(omega); `certified` is False when one of
    the hypotheses only rests on sampling evidence."""


def _separable(piece: ConvexPolyhedron, m):
    rows = np.vstack([piece.A, piece.E])
    if not len(rows):
        return True
    left = np.abs(rows[:, :m]).max(axis=1) > 1e-12
    right = np.abs(rows[:, m:]).max(axis=1) > 1e-12
    return not np.any(left & right)


def _meets_sphere(Z: ConvexPolyhedron):
    """A convex set meets the unit sphere iff it has points of norm <= 1 and
    >= 1; the second test uses coordinate and sampled directions."""
    if Z.is_empty() or Z.distance(np.zeros(Z.dim)) > 1 + GlobalConfig.TOL_EQ:
        return False
    directions = [row for j in range(Z.dim)
                  for row in (np.eye(Z.dim)[j], -np.eye(Z.dim)[j])]
    directions.append(unit(Z.feasible_point()))
    rng = GlobalConfig.init_rng()
    directions.extend(unit(v) for v in rng.normal(size=(16, Z.dim)))
    return any(
        Z.maximize(d) >= 1 - GlobalConfig.TOL_EQ for d in directions
        if np.linalg.norm(d) > 0)


def theta_cone(inst: LsvInstance, xi) -> PolyhedralCone:
    """cl cone of the union of H(z) over unit z in dom H."""
    H = inst.gamma_at(xi)
    m, q = inst.m, inst.q
    if H is None:
        return PolyhedralCone.origin(q)
    values = range(m, m + q)
    pieces = []
    for piece in H.nonempty_pieces():
        args = piece.project(range(m))
        if piece.is_conic:
            if args.nonzero_point() is not None:
                pieces.append(piece.project(values))
            continue
        if _separable(piece, m):
            if _meets_sphere(args):
                pieces.append(piece.project(values).homogenize())
            continue
        msg = 'the cone of values is only built for conic or separable pieces'
        logger.error(msg)
        raise ConditionFailed('vi', msg)
    if not pieces:
        return PolyhedralCone.origin(q)
    return PolyhedralCone(q, [p for p in pieces if not p.is_empty()])


def _hoffman(rows, eq_count, columns):
    """max 1 / sigma_min over independent row subsets (equalities always in)."""
    C = rows[:, columns]
    E, A = C[:eq_count], C[eq_count:]
    base_rank = int(np.linalg.matrix_rank(E)) if len(E) else 0
    worst = 0.0
    for size in range(min(len(A), len(columns) - base_rank) + 1):
        for subset in combinations(range(len(A)), size):
            block = np.vstack([E, A[list(subset)]])
            if not len(block):
                continue
            if np.linalg.matrix_rank(block) < len(block):
                continue
            worst = max(worst, 1.0 / svdvals(block).min())
    return worst


def calmness_constant(inst: LsvInstance, xi) -> float:
    """Calmness constant c of Gamma in xi at xi, uniformly in z.

    Pieces whose xi-projection misses xi do not matter; pieces whose rows
    only link xi to eta get a Hoffman-type bound; rows linking xi to z (after
    eliminating eta) are refused. Families need an asserted constant."""
    if inst.calmness is not None:
        return float(inst.calmness)
    if not inst.is_graph:
        raise ConditionFailed(
            'v', 'no calmness constant is asserted for the Gamma family')
    xi = as_vector(xi, inst.xi_dim, 'parameter')
    p, m = inst.xi_dim, inst.m
    constant = 0.0
    for piece in inst.gamma_graph.nonempty_pieces():
        if piece.project(range(p)).distance(xi) > GlobalConfig.TOL_MEM:
            continue
        outer = piece.project(range(p + m))
        if not _separable(outer, p):
            raise ConditionFailed(
                'v', 'Gamma couples the parameter and the argument',
                witness=outer.to_payload())
        rows = np.vstack([piece.E, piece.A])
        eta = list(range(p + m, piece.dim))
        linked = ((np.abs(rows[:, :p]).max(axis=1) > 1e-12) &
                  (np.abs(rows[:, eta]).max(axis=1) > 1e-12))
        if not np.any(linked):
            continue
        involved = np.abs(rows[:, eta]).max(axis=1) > 1e-12
        eq_count = int(np.sum(involved[:len(piece.E)]))
        block = rows[involved]
        hoffman = _hoffman(block, eq_count, eta)
        constant = max(constant,
                       hoffman * float(np.linalg.norm(block[:, :p], 2)))
    logger.debug(f'calmness constant {constant:.6g} at {xi.tolist()}')
    return constant


def _shear_graph(Z: PolyhedralSet, summand: PolyhedralSet, M):
    """{(z, M z + s) : z in Z, s in summand}."""
    m, q = Z.dim, summand.dim
    inverse = np.block([[np.eye(m), np.zeros((m, q))], [-M, np.eye(q)]])
    return Z.product(summand).linear_preimage(inverse)


def _witness_distance(inst, report, cone, direction, summand):
    """min over z in Z0 of dist(0, direction z + summand)."""
    if summand.is_empty():
        return inf
    points = report['witnesses']
    if points is not None:
        return min((summand.distance(-direction @ np.asarray(z))
                    for z in points),
                   default=inf)
    return lsv_of_graph(_shear_graph(cone, summand, direction), inst.m)['value']


def _validated(inst, xi, omega):
    return (as_vector(xi, inst.xi_dim, 'parameter'),
            as_vector(omega, inst.xi_dim, 'direction'))


def _common_conditions(inst, xi):
    report = singularity_report(inst, xi)
    if not report['is_singular']:
        raise ConditionFailed('i', 'the parameter is not singular')
    conditions = {'i': 'verified'}
    if inst.is_graph:
        conditions['ii'] = 'granted: polyhedral graph'
    elif inst.outer_semicontinuous:
        conditions['ii'] = 'asserted'
    else:
        raise ConditionFailed(
            'ii', 'outer semicontinuity of Gamma is not asserted')
    conditions['iii'] = 'granted: polynomial A'
    return report, conditions


def _theorem32(inst, xi, omega, c):
    report, conditions = _common_conditions(inst, xi)
    conditions['iv'] = 'granted: polyhedral image'
    c = calmness_constant(inst, xi) if c is None else float(c)
    conditions['v'] = f'c = {c:.6g}'
    H = inst.gamma_at(xi)
    m, q = inst.m, inst.q
    image = H.project(range(m)).linear_image(inst.matrix(xi))
    theta = theta_cone(inst, xi)
    witness = image.intersect(theta.negate()).nonzero_point()
    if witness is not None:
        raise ConditionFailed('vi', 'A dom H meets -Theta',
                              witness=witness.tolist())
    conditions['vi'] = 'verified'
    cone = solution_cone(inst, xi)
    direction = inst.matrix_derivative(xi, omega)
    slack = c * float(np.linalg.norm(omega))
    distance = _witness_distance(inst, report, cone, direction,
                                 theta.minkowski_sum(image))
    ranges = H.project(range(m, m + q))
    relaxed = _witness_distance(inst, report, cone, direction,
                                ranges.minkowski_sum(image))
    separated = image.intersect(ranges).nonzero_point() is None
    return SubderivativeBound(theorem='Thm(3.2)',
                              value=distance - slack,
                              distance=distance,
                              calmness=c,
                              omega=omega.tolist(),
                              witnesses=report['witnesses'],
                              conditions=conditions,
                              certified=True,
                              corollary={
                                  'trace': 'Cor(3.3)',
                                  'value': relaxed - slack,
                                  'Eq(3.4)': separated
                              })


def _zero_block(H: PolyhedralSet, m, q):
    """H(z) = {0} x T(z) with T(0) = {0} and T^-1(0) = {0}."""
    pieces = H.nonempty_pieces()
    zero = []
    for j in range(q):
        axis = np.zeros(m + q)
        axis[m + j] = 1.0
        if all(
                piece.maximize(axis) <= GlobalConfig.TOL_EQ and
                piece.maximize(-axis) <= GlobalConfig.TOL_EQ
                for piece in pieces):
            zero.append(j)
    if not zero:
        return False
    rest = [m + j for j in range(q) if j not in zero]
    if not rest:
        domain = H.project(range(m))
        return (domain.contains(np.zeros(m)) and
                domain.nonzero_point() is None)
    T = H.project(list(range(m)) + rest)
    at_zero = T.fix(range(m), np.zeros(m))
    inverse = T.fix(range(m, m + len(rest)), np.zeros(len(rest)))
    return all(
        part.contains(np.zeros(part.dim)) and part.nonzero_point() is None
        for part in (at_zero, inverse))


def _probe_points(report, cone: PolyhedralSet, H: PolyhedralSet, m):
    points = [np.asarray(z) for z in report['witnesses'] or []]
    for source in (cone, H.project(range(m))):
        for piece in source.nonempty_pieces():
            point = piece.nonzero_point()
            if point is not None:
                points.append(unit(point))
    return points


def _theorem35(inst, xi, omega):
    report, conditions = _common_conditions(inst, xi)
    H = inst.gamma_at(xi)
    m, q = inst.m, inst.q
    certified = True
    if inst.cone_valued and inst.outer_semicontinuous:
        conditions["iv'"] = 'Prop(3.6): Gamma is cone-valued'
    elif inst.outer_semicontinuous and _zero_block(H, m, q):
        conditions["iv'"] = 'Prop(3.7): H(z) = {0} x T(z)'
    else:
        cone = solution_cone(inst, xi)
        probe = outer_semicontinuity_probe(
            lambda x, z: inst.gamma_value(x, z),
            xi,
            _probe_points(report, cone, H, m),
            conic=True)
        if probe.violated:
            raise ConditionFailed(
                "iv'", 'cone Gamma is not outer semicontinuous',
                witness=probe['counterexample'])
        certified = False
        msg = ("condition (iv') rests on a sampling probe, the bound is "
               "evidence only")
        warn(msg)
        logger.warning(msg)
        conditions["iv'"] = f"evidence: {probe['samples']} samples"
    theta = theta_cone(inst, xi)
    ranges = PolyhedralSet.whole(m).linear_image(inst.matrix(xi))
    witness = ranges.intersect(theta).nonzero_point()
    if witness is not None:
        raise ConditionFailed("v'", 'rge A meets Theta',
                              witness=witness.tolist())
    conditions["v'"] = 'verified'
    direction = inst.matrix_derivative(xi, omega)
    distance = _witness_distance(inst, report, solution_cone(inst, xi),
                                 direction, theta.minkowski_sum(ranges))
    return SubderivativeBound(theorem='Thm(3.5)',
                              value=distance,
                              distance=distance,
                              calmness=0.0,
                              omega=omega.tolist(),
                              witnesses=report['witnesses'],
                              conditions=conditions,
                              certified=certified)


def lower_bound_theorem32(inst: LsvInstance, xi, omega, c=None):
    """Bound min_Z0 dist(0, A'(xi; omega) z + Theta + A dom H) - c |omega|,
    or the ConditionFailed naming the first hypothesis that fails."""
    xi, omega = _validated(inst, xi, omega)
    try:
        return _theorem32(inst, xi, omega, c)
    except GlobalConfig.SYSTEM_ERRORS:
        raise
    except Exception as err:
        if not isinstance(err, ConditionFailed):
            logger.error(f'bound with calmness failed: {err!r}')
        return err


def lower_bound_theorem35(inst: LsvInstance, xi, omega):
    """Bound min_Z0 dist(0, A'(xi; omega) z + Theta + rge A), or a refusal."""
    xi, omega = _validated(inst, xi, omega)
    try:
        return _theorem35(inst, xi, omega)
    except GlobalConfig.SYSTEM_ERRORS:
        raise
    except Exception as err:
        if not isinstance(err, ConditionFailed):
            logger.error(f'bound with cone semicontinuity failed: {err!r}')
        return err


class CombinedBound(JsonSerializable):
    """The larger of the available bounds, with each attempt recorded."""

    @property
    def available(self):
        return self.get('value') is not None


def _attempt_record(result):
    if isinstance(result, SubderivativeBound):
        return result.to_dict()
    record = {'refused': getattr(result, 'condition', None),
              'reason': str(result)}
    if getattr(result, 'witness', None) is not None:
        record['witness'] = result.witness
    return record


def combine_bounds(inst: LsvInstance, xi, omega, c=None) -> CombinedBound:
    attempts = [lower_bound_theorem32(inst, xi, omega, c),
                lower_bound_theorem35(inst, xi, omega)]
    bounds = [b for b in attempts if isinstance(b, SubderivativeBound)]
    best = max(bounds, key=lambda b: b['value'], default=None)
    return CombinedBound(
        value=None if best is None else best['value'],
        certified=bool(best is not None and best['certified']),
        source=None if best is None else best['theorem'],
        attempts=[_attempt_record(result) for result in attempts])


# numeric subderivative


class SubderivativeEstimate(JsonSerializable):
    """value, dispersion, the per-level quotients and whether they diverge."""


def _ball(rng, count, dim):
    points = rng.normal(size=(count, dim))
    points /= np.linalg.norm(points, axis=1)[:, None]
    return points * rng.uniform(size=(count, 1))**(1.0 / dim)


def subderivative_estimate(phi: Callable,
                           xi,
                           omega,
                           schedule=None,
                           sampler: Callable = None,
                           rng=None) -> SubderivativeEstimate:
    """liminf of (phi(xi + tau w') - phi(xi)) / tau, w' -> omega, tau -> 0.

    Each level takes the smallest quotient over omega and a ball of radius
    tau around it. `sampler` maps a trial point onto the domain of phi (None
    when impossible); its image counts if its direction stays within
    max(10 tau, sqrt(tau)) of omega."""
    schedule = GlobalConfig.SEMI_SCHEDULE if schedule is None else schedule
    schedule = [float(t) for t in schedule]
    if len(schedule) < 3 or any(a <= b for a, b in zip(schedule, schedule[1:])):
        raise ValueError('schedule should be decreasing with >= 3 levels')
    xi = as_vector(xi, name='point')
    omega = as_vector(omega, xi.shape[0], 'direction')
    rng = rng or GlobalConfig.init_rng()
    base = float(phi(xi))
    if not isfinite(base):
        msg = f'phi is not finite at {xi.tolist()}'
        logger.error(msg)
        raise NonConvergent(msg)
    quotients = []
    for tau in schedule:
        trials = np.vstack([
            omega, omega + tau * _ball(
                rng, GlobalConfig.DIRECTION_BALL_SAMPLES, xi.shape[0])
        ])
        best = inf
        for trial in trials:
            point = xi + tau * trial
            if sampler is not None:
                point = sampler(point)
                if point is None:
                    continue
                if np.linalg.norm((point - xi) / tau - omega) > max(
                        10 * tau, sqrt(tau)):
                    continue
            best = min(best, (float(phi(point)) - base) / tau)
        quotients.append(best)
    tail = quotients[-3:]
    diverged = all(isinf(q) and q > 0 for q in tail) or (
        all(isfinite(q) and q > 0 for q in tail) and
        all(b >= 2 * a for a, b in zip(tail, tail[1:])))
    if diverged:
        logger.debug(f'difference quotients diverge: {tail}')
        return SubderivativeEstimate(value=inf,
                                     dispersion=0.0,
                                     quotients=quotients,
                                     diverged=True)
    if not all(isfinite(q) for q in tail):
        msg = f'difference quotients are not finite on the tail: {tail}'
        logger.error(msg)
        raise NonConvergent(msg)
    t1, t2 = schedule[-1], schedule[-2]
    q1, q2 = quotients[-1], quotients[-2]
    estimate = q1 - (q2 - q1) / (t2 - t1) * t1
    if estimate < 0 and all(q >= 0 for q in tail):
        estimate = 0.0
    dispersion = max(tail) - min(tail)
    if dispersion > GlobalConfig.TOL_SEMI * max(1.0, abs(estimate)):
        msg = (f'difference quotients disagree by {dispersion:.3g} over '
               f'the schedule tail')
        logger.error(msg)
        raise NonConvergent(msg)
    return SubderivativeEstimate(value=estimate,
                                 dispersion=dispersion,
                                 quotients=quotients,
                                 diverged=False)
