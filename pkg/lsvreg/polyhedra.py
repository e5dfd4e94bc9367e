# -*- coding: utf-8 -*-
"""Polyhedral geometry in H-representation.

Convex polyhedra {x : A x <= b, E x = e}, finite unions of them, cones,
tangent / normal cones, polars, images and projections. Every decision goes
through the LP kernel in `utils` and is taken with the tolerances of
`GlobalConfig`.
"""

from abc import ABC, abstractmethod
from functools import reduce as fold
from itertools import product as iter_product
from logging import getLogger
from math import inf

import numpy as np
from scipy.linalg import null_space

from .config import GlobalConfig
from .exceptions import (DimensionMismatch, InvalidCone, PatternOverflow,
                         PointNotInSet)
from .utils import (as_rows, as_vector, independent_rows, lp_feasible_point,
                    lp_solve, qp_project)

logger = getLogger('lsvreg')
__all__ = [
    'ClosedSet', 'ConvexPolyhedron', 'PolyhedralSet', 'PolyhedralCone',
    'tangent_cone', 'normal_cone_convex', 'limiting_normal_cone', 'polar',
    'cone_is_trivial', 'cone_witness', 'linear_image', 'linear_preimage',
    'minkowski_sum', 'intersect', 'project', 'distance_to_set'
]


def _tol_rows(offsets, tol):
    return tol * (1.0 + np.abs(offsets))


def _normalize_rows(A, b):
    """Unit-normalize rows, drop trivial ones and keep the tightest duplicate.

    Returns (A, b, feasible) where feasible is False if a row reads 0 <= -c."""
    if not len(A):
        return A, b, True
    norms = np.linalg.norm(A, axis=1)
    trivial = norms <= 1e-12
    if np.any(b[trivial] < -GlobalConfig.TOL_MEM):
        return A, b, False
    A = A[~trivial] / norms[~trivial, None]
    b = b[~trivial] / norms[~trivial]
    kept_rows, kept_offsets = [], []
    for row, offset in zip(A, b):
        for index, other in enumerate(kept_rows):
            if np.dot(row, other) > 1 - 1e-10:
                kept_offsets[index] = min(kept_offsets[index], offset)
                break
        else:
            kept_rows.append(row)
            kept_offsets.append(offset)
    if not kept_rows:
        return np.zeros((0, A.shape[1])), np.zeros(0), True
    return np.array(kept_rows), np.array(kept_offsets), True


class ClosedSet(ABC):
    """A closed set with computable tangent and limiting normal cones."""
    is_polyhedral = False

    @abstractmethod
    def contains(self, point, tol=None) -> bool:
        pass

    @abstractmethod
    def tangent_cone(self, point) -> 'PolyhedralCone':
        pass

    @abstractmethod
    def normal_cone(self, point) -> 'PolyhedralCone':
        pass

    @abstractmethod
    def lift(self, before=0, after=0) -> 'ClosedSet':
        """Embed as self x R^after behind R^before."""

    @abstractmethod
    def to_payload(self) -> dict:
        pass


class ConvexPolyhedron(object):
    """{x in R^dim : A x <= b, E x = e}, immutable.

    The emptiness verdict and one feasible point are cached on first use."""
    __slots__ = ('dim', 'A', 'b', 'E', 'e', '_cache')

    def __init__(self, dim: int, A=None, b=None, E=None, e=None):
        if dim < 1:
            raise DimensionMismatch(f'dim should be >= 1, got {dim}')
        self.dim = int(dim)
        self.A, self.b = as_rows(A, b, self.dim)
        self.E, self.e = as_rows(E, e, self.dim)
        for array in (self.A, self.b, self.E, self.e):
            array.setflags(write=False)
        self._cache = {}

    @classmethod
    def whole(cls, dim):
        return cls(dim)

    @classmethod
    def origin(cls, dim):
        return cls(dim, E=np.eye(dim), e=np.zeros(dim))

    @classmethod
    def empty(cls, dim):
        return cls(dim, A=np.zeros((1, dim)), b=[-1.0])

    @classmethod
    def point(cls, x):
        x = as_vector(x)
        return cls(x.shape[0], E=np.eye(x.shape[0]), e=x)

    @property
    def is_conic(self):
        return not (np.any(np.abs(self.b) > 1e-14) or
                    np.any(np.abs(self.e) > 1e-14))

    def feasible_point(self):
        if 'point' not in self._cache:
            self._cache['point'] = lp_feasible_point(self.dim, self.A, self.b,
                                                     self.E, self.e)
        return self._cache['point']

    def is_empty(self):
        return self.feasible_point() is None

    def contains(self, x, tol=None):
        tol = GlobalConfig.TOL_MEM if tol is None else tol
        x = as_vector(x, self.dim, 'point')
        if len(self.A) and np.any(
                self.A @ x - self.b > _tol_rows(self.b, tol)):
            return False
        if len(self.E) and np.any(
                np.abs(self.E @ x - self.e) > _tol_rows(self.e, tol)):
            return False
        return True

    def active(self, x, tol=None):
        """Indices of the inequalities active at x; ties count as active."""
        tol = GlobalConfig.TOL_MEM if tol is None else tol
        x = as_vector(x, self.dim, 'point')
        if not len(self.A):
            return np.zeros(0, dtype=int)
        gap = np.abs(self.A @ x - self.b)
        return np.flatnonzero(gap <= _tol_rows(self.b, tol))

    def tangent_cone(self, x):
        if not self.contains(x):
            raise PointNotInSet(f'{list(x)} is not in the polyhedron')
        return ConvexPolyhedron(self.dim, self.A[self.active(x)], None,
                                self.E, None)

    def normal_cone(self, x):
        return polar_piece(self.tangent_cone(x))

    def maximize(self, c, bounds=None):
        """sup c.x, +inf when it exceeds the LP box, -inf when empty."""
        result = lp_solve(-as_vector(c, self.dim, 'objective'),
                          self.A,
                          self.b,
                          self.E,
                          self.e,
                          bounds=bounds if bounds is not None else
                          (-GlobalConfig.LP_BOX, GlobalConfig.LP_BOX))
        if result.status == 'optimal':
            value = -result.fun
            return inf if value >= 0.5 * GlobalConfig.LP_BOX else value
        if result.status == 'unbounded':
            return inf
        return -inf

    def argmax(self, c, bounds=None):
        result = lp_solve(-as_vector(c, self.dim, 'objective'),
                          self.A,
                          self.b,
                          self.E,
                          self.e,
                          bounds=bounds if bounds is not None else
                          (-GlobalConfig.LP_BOX, GlobalConfig.LP_BOX))
        return result.x if result.status == 'optimal' else None

    def intersect(self, other: 'ConvexPolyhedron'):
        _check_dims(self.dim, other.dim)
        return ConvexPolyhedron(self.dim, np.vstack([self.A, other.A]),
                                np.hstack([self.b, other.b]),
                                np.vstack([self.E, other.E]),
                                np.hstack([self.e, other.e]))

    def add_rows(self, A=None, b=None, E=None, e=None):
        return self.intersect(ConvexPolyhedron(self.dim, A, b, E, e))

    def product(self, other: 'ConvexPolyhedron'):
        dim = self.dim + other.dim

        def pad(M, left, right):
            return np.hstack([np.zeros(
                (len(M), left)), M, np.zeros((len(M), right))])

        return ConvexPolyhedron(
            dim, np.vstack([pad(self.A, 0, other.dim),
                            pad(other.A, self.dim, 0)]),
            np.hstack([self.b, other.b]),
            np.vstack([pad(self.E, 0, other.dim),
                       pad(other.E, self.dim, 0)]),
            np.hstack([self.e, other.e]))

    def lift(self, before=0, after=0):
        piece = self
        if before:
            piece = ConvexPolyhedron.whole(before).product(piece)
        if after:
            piece = piece.product(ConvexPolyhedron.whole(after))
        return piece

    def permute(self, order):
        """New coordinate i is the old coordinate order[i]."""
        order = list(order)
        if sorted(order) != list(range(self.dim)):
            raise DimensionMismatch(f'{order} is not a permutation')
        return ConvexPolyhedron(self.dim, self.A[:, order], self.b,
                                self.E[:, order], self.e)

    def linear_preimage(self, M, shift=None):
        """{x : M x + shift in self}."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != self.dim:
            raise DimensionMismatch(
                f'map with {M.shape[0]} rows into dimension {self.dim}')
        shift = np.zeros(self.dim) if shift is None else as_vector(
            shift, self.dim, 'shift')
        return ConvexPolyhedron(M.shape[1], self.A @ M,
                                self.b - self.A @ shift, self.E @ M,
                                self.e - self.E @ shift)

    def linear_image(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[1] != self.dim:
            raise DimensionMismatch(
                f'map with {M.shape[1]} columns from dimension {self.dim}')
        k = M.shape[0]
        lifted = self.product(ConvexPolyhedron.whole(k)).add_rows(
            E=np.hstack([M, -np.eye(k)]), e=np.zeros(k))
        return lifted.project(range(self.dim, self.dim + k))

    def fix(self, indices, values):
        """Slice at x[indices] = values, as a polyhedron in the other coordinates."""
        indices = list(indices)
        values = as_vector(values, len(indices), 'slice values')
        free = [j for j in range(self.dim) if j not in indices]
        if not free:
            raise DimensionMismatch('slice leaves no free coordinate')
        return ConvexPolyhedron(len(free), self.A[:, free],
                                self.b - self.A[:, indices] @ values,
                                self.E[:, free],
                                self.e - self.E[:, indices] @ values)

    def negate(self):
        return ConvexPolyhedron(self.dim, -self.A, self.b, -self.E, self.e)

    def project(self, keep):
        """Fourier-Motzkin projection onto the coordinates in `keep`.

        Variables met by an equality are substituted out first."""
        keep = list(keep)
        if not keep:
            raise DimensionMismatch('projection onto no coordinate')
        if self.is_empty():
            return ConvexPolyhedron.empty(len(keep))
        drop = [j for j in range(self.dim) if j not in keep]
        A, b = np.array(self.A), np.array(self.b)
        E, e = np.array(self.E), np.array(self.e)
        eps = 1e-12
        for j in drop:
            pivots = np.abs(E[:, j]) if len(E) else np.zeros(0)
            if pivots.size and pivots.max() > eps:
                r = int(np.argmax(pivots))
                row, rhs = E[r] / E[r, j], e[r] / E[r, j]
                E, e = np.delete(E, r, axis=0), np.delete(e, r)
                if len(E):
                    factor = E[:, j].copy()
                    E -= np.outer(factor, row)
                    e -= factor * rhs
                    E[:, j] = 0.0
                if len(A):
                    factor = A[:, j].copy()
                    A -= np.outer(factor, row)
                    b -= factor * rhs
                    A[:, j] = 0.0
                continue
            if not len(A):
                continue
            column = A[:, j]
            pos = np.flatnonzero(column > eps)
            neg = np.flatnonzero(column < -eps)
            zero = np.flatnonzero(np.abs(column) <= eps)
            rows, offsets = [A[zero]], [b[zero]]
            if len(pos) and len(neg):
                P = A[pos] / column[pos, None]
                Q = A[neg] / -column[neg, None]
                rows.append((P[:, None, :] + Q[None, :, :]).reshape(
                    -1, self.dim))
                offsets.append((b[pos] / column[pos])[:, None] +
                               (b[neg] / -column[neg])[None, :])
                offsets[-1] = offsets[-1].ravel()
            A = np.vstack(rows)
            b = np.hstack(offsets)
            A[:, j] = 0.0
            A, b, feasible = _normalize_rows(A, b)
            if not feasible:
                return ConvexPolyhedron.empty(len(keep))
            if len(A) > 2 * self.dim + 4:
                A, b = _remove_redundant(A, b, E, e)
        A, b, feasible = _normalize_rows(A, b)
        if not feasible:
            return ConvexPolyhedron.empty(len(keep))
        if len(E):
            E, e = independent_rows(E, e)
            norms = np.linalg.norm(E[:, keep], axis=1)
            if np.any((norms <= 1e-12) & (np.abs(e) > GlobalConfig.TOL_MEM)):
                return ConvexPolyhedron.empty(len(keep))
            E, e = E[norms > 1e-12], e[norms > 1e-12]
        projected = ConvexPolyhedron(len(keep), A[:, keep], b, E[:, keep], e)
        return projected.reduce()

    def reduce(self):
        """Drop redundant inequalities (one LP each) and dependent equalities."""
        if self.is_empty():
            return ConvexPolyhedron.empty(self.dim)
        A, b, _ = _normalize_rows(np.array(self.A), np.array(self.b))
        E, e = independent_rows(np.array(self.E), np.array(self.e))
        A, b = _remove_redundant(A, b, E, e)
        return ConvexPolyhedron(self.dim, A, b, E, e)

    def homogenize(self):
        """Closed conic hull {x : exists t >= 0, A x <= t b, E x = t e}."""
        if self.is_empty():
            return ConvexPolyhedron.empty(self.dim)
        if self.is_conic:
            return self
        lifted = ConvexPolyhedron(
            self.dim + 1,
            np.vstack([
                np.hstack([self.A, -self.b[:, None]]),
                np.hstack([np.zeros(self.dim), [-1.0]])[None, :]
            ]), np.zeros(len(self.A) + 1),
            np.hstack([self.E, -self.e[:, None]]), np.zeros(len(self.E)))
        return lifted.project(range(self.dim))

    def implicit_equalities(self):
        """Rows (including equalities) that hold with equality on the whole set."""
        rows, offsets = [self.E], [self.e]
        for a, offset in zip(self.A, self.b):
            low = -self.maximize(-a)
            if low >= offset - _tol_rows(offset, GlobalConfig.TOL_MEM):
                rows.append(a[None, :])
                offsets.append([offset])
        return np.vstack(rows), np.hstack(offsets)

    def affine_hull(self):
        """(x0, D): aff(self) = x0 + range(D); None when empty."""
        x0 = self.feasible_point()
        if x0 is None:
            return None
        E, _ = self.implicit_equalities()
        if not len(E):
            return x0, np.eye(self.dim)
        return x0, null_space(E)

    def distance(self, x):
        x = as_vector(x, self.dim, 'point')
        if self.is_empty():
            return inf
        projected = qp_project(x, self.A, self.b, self.E, self.e)
        if projected is None:
            return inf
        return float(np.linalg.norm(projected - x))

    def projection(self, x):
        if self.is_empty():
            return None
        return qp_project(as_vector(x, self.dim, 'point'), self.A, self.b,
                          self.E, self.e)

    def nonzero_point(self):
        """A point of self with some |x_j| >= 1 (cones) or x != 0, else None."""
        if self.is_empty():
            return None
        box = (-GlobalConfig.LP_BOX, GlobalConfig.LP_BOX)
        conic = self.is_conic
        for j, sign in iter_product(range(self.dim), (1.0, -1.0)):
            if conic:
                row = np.zeros(self.dim)
                row[j] = sign
                point = lp_feasible_point(self.dim, self.A, self.b,
                                          np.vstack([self.E, row]),
                                          np.hstack([self.e, [1.0]]), box)
                if point is not None:
                    return point
            else:
                c = np.zeros(self.dim)
                c[j] = sign
                point = self.argmax(c)
                if point is not None and sign * point[j] > GlobalConfig.TOL_EQ:
                    return point
        return None

    def issubset(self, others):
        """self is contained in the union of the convex pieces `others`."""
        return _piece_in_union(self, list(others))

    def to_payload(self):
        payload = {}
        if len(self.A):
            payload['A'] = self.A.tolist()
            payload['b'] = self.b.tolist()
        if len(self.E):
            payload['E'] = self.E.tolist()
            payload['e'] = self.e.tolist()
        return payload

    @classmethod
    def from_payload(cls, dim, payload):
        return cls(dim, payload.get('A'), payload.get('b'), payload.get('E'),
                   payload.get('e'))

    def __repr__(self):
        return (f'ConvexPolyhedron(dim={self.dim}, '
                f'ineq={len(self.A)}, eq={len(self.E)})')


def _remove_redundant(A, b, E, e):
    keep = list(range(len(A)))
    for i in range(len(A)):
        others = [k for k in keep if k != i]
        result = lp_solve(-A[i], A[others], b[others], E, e)
        if result.status == 'optimal' and -result.fun <= b[i] + _tol_rows(
                b[i], GlobalConfig.TOL_MEM):
            keep.remove(i)
    return A[keep], b[keep]


def _check_dims(*dims):
    if len(set(dims)) != 1:
        msg = f'dimension mismatch: {dims}'
        logger.error(msg)
        raise DimensionMismatch(msg)


def _piece_in_union(piece: ConvexPolyhedron, others: list):
    if piece.is_empty():
        return True
    if not others:
        return False
    first, rest = others[0], others[1:]
    rows = list(zip(first.A, first.b))
    for a, offset in zip(first.E, first.e):
        rows.extend([(a, offset), (-a, -offset)])
    tol = GlobalConfig.TOL_EQ
    violated = [(a, offset) for a, offset in rows
                if piece.maximize(a) > offset + tol * (1 + abs(offset))]
    if not violated:
        return True
    for k, (a, offset) in enumerate(violated):
        outside = piece.add_rows(
            np.vstack([[-a]] + [[row] for row, _ in violated[:k]]),
            np.hstack([[-offset], [value for _, value in violated[:k]]]))
        if outside.maximize(a) <= offset + tol * (1 + abs(offset)):
            # only touches the facet, covered by `first` or by a later split
            continue
        if not _piece_in_union(outside, rest):
            return False
    return True


def _make(dim, pieces):
    """Build a PolyhedralCone when every nonempty piece is conic."""
    pieces = [piece for piece in pieces if not piece.is_empty()]
    if all(piece.is_conic for piece in pieces):
        return PolyhedralCone(dim, pieces)
    return PolyhedralSet(dim, pieces)


class PolyhedralSet(ClosedSet):
    """Finite union of convex polyhedra, the empty union is the empty set."""
    __slots__ = ('dim', 'pieces')
    is_polyhedral = True

    def __init__(self, dim: int, pieces=()):
        self.dim = int(dim)
        pieces = tuple(pieces)
        for piece in pieces:
            if piece.dim != self.dim:
                raise DimensionMismatch(
                    f'piece of dim {piece.dim} in a set of dim {self.dim}')
        self.pieces = pieces

    @classmethod
    def whole(cls, dim):
        return _make(dim, [ConvexPolyhedron.whole(dim)])

    @classmethod
    def origin(cls, dim):
        return _make(dim, [ConvexPolyhedron.origin(dim)])

    @classmethod
    def empty(cls, dim):
        return cls(dim, ())

    @classmethod
    def from_rows(cls, dim, A=None, b=None, E=None, e=None):
        return _make(dim, [ConvexPolyhedron(dim, A, b, E, e)])

    @property
    def is_conic(self):
        return all(piece.is_conic for piece in self.nonempty_pieces())

    def nonempty_pieces(self):
        return tuple(piece for piece in self.pieces if not piece.is_empty())

    def is_empty(self):
        return not self.nonempty_pieces()

    def contains(self, point, tol=None):
        return any(piece.contains(point, tol) for piece in self.pieces)

    def containing_pieces(self, point, tol=None):
        return [piece for piece in self.pieces if piece.contains(point, tol)]

    def union(self, other: 'PolyhedralSet'):
        _check_dims(self.dim, other.dim)
        return _make(self.dim, self.pieces + other.pieces)

    def intersect(self, other: 'PolyhedralSet'):
        _check_dims(self.dim, other.dim)
        return _make(self.dim, [
            p.intersect(q) for p in self.nonempty_pieces()
            for q in other.nonempty_pieces()
        ])

    def product(self, other: 'PolyhedralSet'):
        return _make(self.dim + other.dim, [
            p.product(q) for p in self.nonempty_pieces()
            for q in other.nonempty_pieces()
        ])

    def lift(self, before=0, after=0):
        return _make(self.dim + before + after,
                     [piece.lift(before, after) for piece in self.pieces])

    def permute(self, order):
        return _make(self.dim, [piece.permute(order) for piece in self.pieces])

    def negate(self):
        return _make(self.dim, [piece.negate() for piece in self.pieces])

    def linear_image(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return _make(M.shape[0], [
            piece.linear_image(M) for piece in self.nonempty_pieces()
        ])

    def linear_preimage(self, M, shift=None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return _make(M.shape[1], [
            piece.linear_preimage(M, shift) for piece in self.pieces
        ])

    def project(self, keep):
        keep = list(keep)
        return _make(len(keep),
                     [piece.project(keep) for piece in self.nonempty_pieces()])

    def fix(self, indices, values):
        indices = list(indices)
        return _make(self.dim - len(indices),
                     [piece.fix(indices, values) for piece in self.pieces])

    def add_rows(self, A=None, b=None, E=None, e=None):
        return _make(self.dim,
                     [piece.add_rows(A, b, E, e) for piece in self.pieces])

    def minkowski_sum(self, other: 'PolyhedralSet'):
        _check_dims(self.dim, other.dim)
        summation = np.hstack([np.eye(self.dim), np.eye(self.dim)])
        return _make(self.dim, [
            p.product(q).linear_image(summation)
            for p in self.nonempty_pieces()
            for q in other.nonempty_pieces()
        ])

    def homogenize(self):
        return _make(self.dim, [
            piece.homogenize() for piece in self.nonempty_pieces()
        ])

    def tangent_cone(self, point):
        return tangent_cone(self, point)

    def normal_cone(self, point):
        return limiting_normal_cone(self, point)

    def distance(self, point):
        return distance_to_set(point, self)

    def nonzero_point(self):
        for piece in self.nonempty_pieces():
            point = piece.nonzero_point()
            if point is not None:
                return point
        return None

    def issubset(self, other: 'PolyhedralSet'):
        _check_dims(self.dim, other.dim)
        targets = list(other.nonempty_pieces())
        return all(
            piece.issubset(targets) for piece in self.nonempty_pieces())

    def equals(self, other: 'PolyhedralSet'):
        return self.issubset(other) and other.issubset(self)

    def simplify(self):
        """Drop empty pieces and pieces covered by a single other piece."""
        pieces = list(self.nonempty_pieces())
        kept = []
        for index, piece in enumerate(pieces):
            later = pieces[index + 1:]
            if any(piece.issubset([other]) for other in kept + later):
                continue
            kept.append(piece)
        return _make(self.dim, kept)

    def to_payload(self):
        return {
            'type': 'polyhedral',
            'dim': self.dim,
            'pieces': [piece.to_payload() for piece in self.pieces]
        }

    @classmethod
    def from_payload(cls, payload):
        dim = int(payload['dim'])
        return _make(dim, [
            ConvexPolyhedron.from_payload(dim, item)
            for item in payload.get('pieces', [])
        ])

    def __len__(self):
        return len(self.pieces)

    def __iter__(self):
        return iter(self.pieces)

    def __repr__(self):
        return (f'{self.__class__.__name__}(dim={self.dim}, '
                f'pieces={len(self.pieces)})')


class PolyhedralCone(PolyhedralSet):
    """Finite union of convex polyhedral cones, offsets are always zero."""
    __slots__ = ()

    def __init__(self, dim: int, pieces=()):
        super().__init__(dim, pieces)
        for piece in self.pieces:
            if not piece.is_conic:
                msg = 'cone pieces must have zero offsets'
                logger.error(msg)
                raise InvalidCone(msg)

    def is_trivial(self):
        return cone_is_trivial(self)

    def polar(self):
        return polar(self)


def tangent_cone(set_: PolyhedralSet, point) -> PolyhedralCone:
    point = as_vector(point, set_.dim, 'point')
    pieces = set_.containing_pieces(point)
    if not pieces:
        msg = f'{point.tolist()} is not in the set'
        logger.error(msg)
        raise PointNotInSet(msg)
    return PolyhedralCone(set_.dim,
                          [piece.tangent_cone(point) for piece in pieces])


def polar_piece(cone: ConvexPolyhedron) -> ConvexPolyhedron:
    """{A^T lam + E^T mu : lam >= 0} for the cone {A d <= 0, E d = 0}."""
    generators = np.vstack([cone.A, cone.E]).T
    if not generators.size:
        return ConvexPolyhedron.origin(cone.dim)
    n_ineq, n_eq = len(cone.A), len(cone.E)
    multipliers = ConvexPolyhedron(
        n_ineq + n_eq, np.hstack([-np.eye(n_ineq),
                                  np.zeros((n_ineq, n_eq))]), np.zeros(n_ineq))
    return multipliers.linear_image(generators)


def normal_cone_convex(piece: ConvexPolyhedron, point) -> PolyhedralCone:
    return PolyhedralCone(piece.dim, [piece.normal_cone(point)])


def polar(cone: PolyhedralSet) -> PolyhedralCone:
    """Polar of a union is the intersection of the polars of its pieces."""
    pieces = cone.nonempty_pieces()
    if not pieces:
        return PolyhedralSet.whole(cone.dim)
    for piece in pieces:
        if not piece.is_conic:
            raise InvalidCone('polar of a non-conic set')
    result = fold(lambda p, q: p.intersect(q),
                  [polar_piece(piece) for piece in pieces])
    return PolyhedralCone(cone.dim, [result.reduce()])


def cone_witness(cone: PolyhedralSet):
    """A nonzero point of the cone (or set), None when it is {0} or empty."""
    return cone.nonzero_point()


def cone_is_trivial(cone: PolyhedralSet) -> bool:
    return cone_witness(cone) is None


def linear_image(cone: PolyhedralSet, M) -> PolyhedralSet:
    return cone.linear_image(M)


def linear_preimage(cone: PolyhedralSet, M) -> PolyhedralSet:
    return cone.linear_preimage(M)


def minkowski_sum(first: PolyhedralSet, second: PolyhedralSet):
    return first.minkowski_sum(second)


def intersect(first: PolyhedralSet, second: PolyhedralSet):
    return first.intersect(second)


def project(cone: PolyhedralSet, coordinates) -> PolyhedralSet:
    return cone.project(coordinates)


def distance_to_set(point, set_: PolyhedralSet) -> float:
    point = as_vector(point, set_.dim, 'point')
    return min((piece.distance(point) for piece in set_.pieces), default=inf)


class _Arrangement(object):
    """Hyperplanes through 0 spanned by the rows of the local tangent cones."""

    def __init__(self, cones):
        self.normals = []
        # per cone: list of (hyperplane, orientation, is_equality, row index)
        self.rows = []
        for cone in cones:
            entries = []
            for matrix, equality in ((cone.A, False), (cone.E, True)):
                for row_index, row in enumerate(matrix):
                    norm = np.linalg.norm(row)
                    if norm <= 1e-12:
                        continue
                    index, orientation = self._register(row / norm)
                    entries.append((index, orientation, equality, row_index))
            self.rows.append(entries)

    def _register(self, normal):
        for index, other in enumerate(self.normals):
            dot = np.dot(normal, other)
            if abs(dot) > 1 - 1e-10:
                return index, 1.0 if dot > 0 else -1.0
        self.normals.append(normal)
        return len(self.normals) - 1, 1.0

    def alive(self, signs):
        """Cones not yet excluded by the partial sign vector."""
        result = []
        for index, entries in enumerate(self.rows):
            for hyperplane, orientation, equality, _ in entries:
                if hyperplane >= len(signs):
                    continue
                sign = orientation * signs[hyperplane]
                if (equality and sign != 0) or sign > 0:
                    break
            else:
                result.append(index)
        return result

    def active(self, index, signs):
        return tuple(row_index
                     for hyperplane, _, equality, row_index in self.rows[index]
                     if not equality and signs[hyperplane] == 0)

    def realizable(self, signs):
        """Some w in the box has exactly these signs, with margin TOL_EQ."""
        dim = len(self.normals[0])
        A, E = [], []
        for normal, sign in zip(self.normals, signs):
            if sign == 0:
                E.append(np.hstack([normal, [0.0]]))
            else:
                A.append(np.hstack([-sign * normal, [1.0]]))
        c = np.zeros(dim + 1)
        c[-1] = -1.0
        result = lp_solve(c,
                          np.array(A) if A else None,
                          np.zeros(len(A)) if A else None,
                          np.array(E) if E else None,
                          np.zeros(len(E)) if E else None,
                          bounds=[(-1.0, 1.0)] * dim + [(0.0, 1.0)])
        if result.status != 'optimal':
            return False
        if not A:
            return True
        return -result.fun > GlobalConfig.TOL_EQ


def limiting_normal_cone(set_: PolyhedralSet, point,
                         max_patterns=None) -> PolyhedralCone:
    """Limiting normal cone of a finite union of polyhedra.

    Near the point the set coincides with point + T, T the union of the
    local tangent cones. Inside one cell of the hyperplane arrangement
    spanned by their rows, the cones containing w and their active rows do
    not change, so the regular normal cone at w is fixed per cell. The result
    is the union over realizable cells of the intersected active polars."""
    if max_patterns is None:
        max_patterns = GlobalConfig.MAX_PATTERNS
    cones = list(tangent_cone(set_, point).pieces)
    if len(cones) == 1:
        return PolyhedralCone(set_.dim, [polar_piece(cones[0]).reduce()])
    arrangement = _Arrangement(cones)
    if not arrangement.normals:
        return PolyhedralCone.origin(set_.dim)
    polars = {}
    patterns = {}

    def regular_normal(alive, signs):
        key = tuple((index, arrangement.active(index, signs))
                    for index in alive)
        if key in patterns:
            return
        if len(patterns) >= max_patterns:
            msg = f'limiting normal cone needs more than {max_patterns} patterns'
            logger.error(msg)
            raise PatternOverflow(msg)
        pieces = []
        for index, active in key:
            if (index, active) not in polars:
                cone = cones[index]
                polars[(index, active)] = polar_piece(
                    ConvexPolyhedron(set_.dim, cone.A[list(active)], None,
                                     cone.E, None))
            pieces.append(polars[(index, active)])
        patterns[key] = fold(lambda p, q: p.intersect(q), pieces)

    def search(signs):
        alive = arrangement.alive(signs)
        if not alive:
            return
        if signs and not arrangement.realizable(signs):
            return
        if len(signs) == len(arrangement.normals):
            regular_normal(alive, signs)
            return
        for sign in (0, 1, -1):
            search(signs + [sign])

    search([])
    logger.debug(f'limiting normal cone: {len(patterns)} patterns over '
                 f'{len(arrangement.normals)} hyperplanes')
    result = PolyhedralCone(set_.dim,
                            [piece.reduce() for piece in patterns.values()])
    return result.simplify()
