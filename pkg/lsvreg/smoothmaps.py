# -*- coding: utf-8 -*-
"""Single-valued smooth maps.

`PolyMap` keeps exact polynomial data, so Jacobians and the semiderivative of
the Jacobian are exact. `BlackBoxMap` wraps a callback and only offers
difference quotients.

Orientation: `derivative(x)` is F'(x) with out_dim rows, `jacobian(x)` is
its transpose (in_dim x out_dim), the matrix written nabla F(x) in the sum
rule `nabla F(x) z + D*C(x|y)(z)`.
"""

from logging import getLogger
from re import compile as re_compile
from typing import Callable, List, Sequence

import numpy as np

from .config import GlobalConfig
from .exceptions import DimensionMismatch, InvalidProblemError, NonConvergent
from .utils import as_vector

logger = getLogger('lsvreg')
__all__ = ['PolyMap', 'BlackBoxMap', 'numeric_semiderivative']


class _Polynomial(object):
    """One output coordinate: sum of coeffs[t] * prod(x ** exps[t])."""
    __slots__ = ('coeffs', 'exps')

    def __init__(self, coeffs, exps, in_dim):
        coeffs = np.asarray(coeffs, dtype=float).ravel()
        exps = np.asarray(exps, dtype=int).reshape(-1, in_dim)
        merged = {}
        for coeff, exp in zip(coeffs, exps):
            if np.any(exp < 0):
                raise InvalidProblemError(f'negative exponent {exp.tolist()}')
            key = tuple(exp.tolist())
            merged[key] = merged.get(key, 0.0) + coeff
        items = sorted((key, value) for key, value in merged.items()
                       if value != 0.0)
        self.coeffs = np.array([value for _, value in items])
        self.exps = np.array([key for key, _ in items],
                             dtype=int).reshape(-1, in_dim)

    def __call__(self, x):
        if not len(self.coeffs):
            return 0.0
        return float(np.sum(self.coeffs * np.prod(x**self.exps, axis=1)))

    def partial(self, j):
        mask = self.exps[:, j] > 0
        exps = self.exps[mask].copy()
        coeffs = self.coeffs[mask] * exps[:, j]
        exps[:, j] -= 1
        return _Polynomial(coeffs, exps, self.exps.shape[1])

    @property
    def degree(self):
        return int(self.exps.sum(axis=1).max()) if len(self.coeffs) else 0


_TOKEN = re_compile(r'\s*(?:(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+'
                    r'(?:[eE][-+]?\d+)?)|(?P<var>x(?P<index>\d+))'
                    r'|(?P<op>\*\*|[-+*^]))')


def _parse_component(text: str, in_dim: int, component: int):
    """Parse '2*x1^2*x2 - 3*x3 + 1' into (coeffs, exps); variables are 1-based."""
    tokens, position = [], 0
    text = text.rstrip()
    while position < len(text):
        match = _TOKEN.match(text, position)
        if not match:
            raise InvalidProblemError(
                f'unexpected character {text[position:position + 1]!r}',
                location=f'component {component}, position {position}')
        kind = 'num' if match.group('num') else (
            'var' if match.group('var') else 'op')
        tokens.append((kind, match, match.start(kind)))
        position = match.end()
    coeffs, exps = [], []
    index = 0

    def fail(msg, where):
        raise InvalidProblemError(
            msg, location=f'component {component}, position {where}')

    def expect_integer():
        nonlocal index
        if index >= len(tokens) or tokens[index][0] != 'num':
            fail('exponent expected', tokens[index - 1][2] + 1)
        raw = tokens[index][1].group('num')
        if not raw.isdigit():
            fail(f'exponent {raw!r} is not a nonnegative integer',
                 tokens[index][2])
        index += 1
        return int(raw)

    if not tokens:
        fail('empty component', 0)
    while index < len(tokens):
        sign = 1.0
        while index < len(tokens) and tokens[index][0] == 'op' and tokens[
                index][1].group('op') in '+-':
            if tokens[index][1].group('op') == '-':
                sign = -sign
            index += 1
        coeff, exp = sign, np.zeros(in_dim, dtype=int)
        expecting_factor = True
        while expecting_factor:
            if index >= len(tokens):
                fail('term expected', len(text))
            kind, match, where = tokens[index]
            if kind == 'num':
                coeff *= float(match.group('num'))
                index += 1
            elif kind == 'var':
                variable = int(match.group('index'))
                if not 1 <= variable <= in_dim:
                    fail(f'variable x{variable} outside x1..x{in_dim}', where)
                index += 1
                power = 1
                if index < len(tokens) and tokens[index][0] == 'op' and tokens[
                        index][1].group('op') in ('^', '**'):
                    index += 1
                    power = expect_integer()
                exp[variable - 1] += power
            else:
                fail(f'unexpected operator {match.group("op")!r}', where)
            if index < len(tokens) and tokens[index][0] == 'op' and tokens[
                    index][1].group('op') == '*':
                index += 1
            else:
                expecting_factor = False
        coeffs.append(coeff)
        exps.append(exp)
        if index < len(tokens):
            kind, match, where = tokens[index]
            if kind != 'op' or match.group('op') not in '+-':
                fail('operator expected', where)
    return coeffs, exps


class PolyMap(object):
    """Polynomial map R^in_dim -> R^out_dim with exact derivatives."""
    __slots__ = ('in_dim', 'out_dim', 'components', '_jac', '_hess')

    def __init__(self, in_dim: int, components: Sequence):
        """components: per output a `_Polynomial`, a text polynomial or a
        (coeffs, exps) pair."""
        if in_dim < 1:
            raise DimensionMismatch(f'in_dim should be >= 1, got {in_dim}')
        self.in_dim = int(in_dim)
        polys = []
        for index, item in enumerate(components):
            if isinstance(item, _Polynomial):
                polys.append(item)
            elif isinstance(item, str):
                polys.append(
                    _Polynomial(*_parse_component(item, self.in_dim, index),
                                self.in_dim) if item.strip() else
                    _Polynomial([], [], self.in_dim))
            else:
                coeffs, exps = item
                polys.append(_Polynomial(coeffs, exps, self.in_dim))
        if not polys:
            raise DimensionMismatch('a PolyMap needs at least one component')
        self.components: List[_Polynomial] = polys
        self.out_dim = len(polys)
        self._jac = None
        self._hess = None

    @classmethod
    def from_text(cls, in_dim, texts):
        return cls(in_dim, list(texts))

    @classmethod
    def linear(cls, M, c=None):
        """x -> M x + c."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        out_dim, in_dim = M.shape
        c = np.zeros(out_dim) if c is None else as_vector(c, out_dim, 'offset')
        components = []
        for row, offset in zip(M, c):
            exps = np.vstack([np.zeros((1, in_dim), dtype=int),
                              np.eye(in_dim, dtype=int)])
            components.append((np.hstack([[offset], row]), exps))
        return cls(in_dim, components)

    @classmethod
    def identity(cls, dim):
        return cls.linear(np.eye(dim))

    @classmethod
    def zero(cls, in_dim, out_dim):
        return cls(in_dim, [([], [])] * out_dim)

    @classmethod
    def constant(cls, in_dim, value):
        value = as_vector(value)
        return cls.linear(np.zeros((value.shape[0], in_dim)), value)

    @classmethod
    def variable(cls, in_dim, j):
        exp = np.zeros((1, in_dim), dtype=int)
        exp[0, j] = 1
        return cls(in_dim, [([1.0], exp)])

    @classmethod
    def stack(cls, *maps):
        in_dims = {m.in_dim for m in maps}
        if len(in_dims) != 1:
            raise DimensionMismatch(f'stacking maps over {sorted(in_dims)}')
        return cls(maps[0].in_dim, [p for m in maps for p in m.components])

    def embed(self, in_dim, variables):
        """Same polynomials over R^in_dim, old variable j becoming variables[j]."""
        variables = list(variables)
        if len(variables) != self.in_dim:
            raise DimensionMismatch(
                f'{len(variables)} targets for {self.in_dim} variables')
        components = []
        for poly in self.components:
            exps = np.zeros((len(poly.coeffs), in_dim), dtype=int)
            for old, new in enumerate(variables):
                exps[:, new] += poly.exps[:, old]
            components.append((poly.coeffs, exps))
        return PolyMap(in_dim, components)

    def select(self, indices):
        return PolyMap(self.in_dim, [self.components[i] for i in indices])

    def _check(self, other):
        if not isinstance(other, PolyMap):
            raise TypeError(f'expected a PolyMap, got {type(other).__name__}')
        if (other.in_dim, other.out_dim) != (self.in_dim, self.out_dim):
            raise DimensionMismatch(
                f'({self.in_dim}->{self.out_dim}) vs '
                f'({other.in_dim}->{other.out_dim})')
        return other

    def __add__(self, other):
        other = self._check(other)
        return PolyMap(self.in_dim, [
            (np.hstack([p.coeffs, q.coeffs]), np.vstack([p.exps, q.exps]))
            for p, q in zip(self.components, other.components)
        ])

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        """Componentwise product of two maps with equal shapes."""
        other = self._check(other)
        components = []
        for p, q in zip(self.components, other.components):
            if not len(p.coeffs) or not len(q.coeffs):
                components.append(([], []))
                continue
            coeffs = np.outer(p.coeffs, q.coeffs).ravel()
            exps = (p.exps[:, None, :] + q.exps[None, :, :]).reshape(
                -1, self.in_dim)
            components.append((coeffs, exps))
        return PolyMap(self.in_dim, components)

    def scale(self, factor):
        return PolyMap(self.in_dim, [(p.coeffs * factor, p.exps)
                                     for p in self.components])

    def matvec(self, rows, cols, vector_variables):
        """Treat self as a rows x cols matrix (row-major) and multiply it by
        the variables `vector_variables` of the same space."""
        if self.out_dim != rows * cols or len(vector_variables) != cols:
            raise DimensionMismatch(
                f'{self.out_dim} entries for a {rows}x{cols} matrix')
        result = PolyMap.zero(self.in_dim, rows)
        for j, variable in enumerate(vector_variables):
            column = self.select([i * cols + j for i in range(rows)])
            lam = PolyMap.stack(*[PolyMap.variable(self.in_dim, variable)] *
                                rows)
            result = result + column * lam
        return result

    @property
    def degree(self):
        return max(p.degree for p in self.components)

    @property
    def is_affine(self):
        return self.degree <= 1

    def affine_parts(self):
        """(M, c) with F(x) = M x + c; only for affine maps."""
        if not self.is_affine:
            raise DimensionMismatch('map is not affine')
        c = self.evaluate(np.zeros(self.in_dim))
        return self.derivative(np.zeros(self.in_dim)), c

    def evaluate(self, x):
        x = as_vector(x, self.in_dim, 'point')
        return np.array([p(x) for p in self.components])

    __call__ = evaluate

    def derivative_map(self):
        """F' as a PolyMap with out_dim * in_dim components, row-major."""
        if self._jac is None:
            self._jac = PolyMap(self.in_dim, [
                p.partial(j) for p in self.components
                for j in range(self.in_dim)
            ])
        return self._jac

    def derivative(self, x):
        """F'(x), shape (out_dim, in_dim)."""
        return self.derivative_map().evaluate(x).reshape(
            self.out_dim, self.in_dim)

    def jacobian(self, x):
        """nabla F(x) = F'(x)^T, shape (in_dim, out_dim)."""
        return self.derivative(x).T

    def directional_derivative(self, x, w):
        return self.derivative(x) @ as_vector(w, self.in_dim, 'direction')

    def second_derivative(self, x):
        """Tensor T[i, j, k] = d^2 F_i / dx_j dx_k."""
        if self._hess is None:
            self._hess = self.derivative_map().derivative_map()
        return self._hess.evaluate(x).reshape(self.out_dim, self.in_dim,
                                              self.in_dim)

    def jacobian_semiderivative(self, x, w):
        """(nabla F)'(x; w), shape (in_dim, out_dim)."""
        w = as_vector(w, self.in_dim, 'direction')
        return np.einsum('ijk,k->ji', self.second_derivative(x), w)

    def derivative_semiderivative(self, x, w):
        """(F')'(x; w) = F''(x)[w, .], shape (out_dim, in_dim)."""
        return self.jacobian_semiderivative(x, w).T

    def to_text(self):
        return [_component_text(p) for p in self.components]

    def to_payload(self):
        return {'type': 'poly', 'in_dim': self.in_dim, 'components': self.to_text()}

    @classmethod
    def from_payload(cls, payload):
        if isinstance(payload, PolyMap):
            return payload
        try:
            in_dim = int(payload['in_dim'])
            components = payload['components']
        except (KeyError, TypeError, ValueError) as err:
            raise InvalidProblemError(f'bad polynomial payload: {err!r}')
        return cls(in_dim, [
            item if isinstance(item, str) else (item['coeffs'], item['exps'])
            for item in components
        ])

    def __repr__(self):
        return f'PolyMap({self.in_dim}->{self.out_dim}: {self.to_text()})'


def _component_text(poly: _Polynomial):
    if not len(poly.coeffs):
        return '0'
    terms = []
    for coeff, exp in zip(poly.coeffs, poly.exps):
        factors = [
            f'x{j + 1}' if e == 1 else f'x{j + 1}^{e}'
            for j, e in enumerate(exp) if e
        ]
        magnitude = abs(coeff)
        if factors and magnitude == 1.0:
            body = '*'.join(factors)
        else:
            body = '*'.join([repr(float(magnitude))] + factors)
        terms.append(('-' if coeff < 0 else '+', body))
    text = ('-' if terms[0][0] == '-' else '') + terms[0][1]
    for sign, body in terms[1:]:
        text += f' {sign} {body}'
    return text


class BlackBoxMap(object):
    """Deterministic callback map, differentiated by difference quotients.

    `strictly_differentiable` is a user assertion; it is recorded in reports
    and grants the smooth sum rule for coderivatives."""

    def __init__(self,
                 fn: Callable,
                 in_dim: int,
                 out_dim: int,
                 strictly_differentiable=False,
                 derivative: Callable = None):
        self.fn = fn
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.strictly_differentiable = strictly_differentiable
        self._derivative = derivative
        self.is_affine = False

    @classmethod
    def from_polymap(cls, polymap: PolyMap, strictly_differentiable=True):
        return cls(polymap.evaluate, polymap.in_dim, polymap.out_dim,
                   strictly_differentiable)

    def evaluate(self, x):
        x = as_vector(x, self.in_dim, 'point')
        value = as_vector(self.fn(x))
        if value.shape[0] != self.out_dim:
            raise DimensionMismatch(
                f'callback returned {value.shape[0]} values, '
                f'expected {self.out_dim}')
        return value

    __call__ = evaluate

    def derivative(self, x):
        x = as_vector(x, self.in_dim, 'point')
        if self._derivative is not None:
            return np.atleast_2d(np.asarray(self._derivative(x), dtype=float))
        result = np.zeros((self.out_dim, self.in_dim))
        for j in range(self.in_dim):
            h = 1e-6 * (1.0 + abs(x[j]))
            step = np.zeros(self.in_dim)
            step[j] = h
            result[:, j] = (self.evaluate(x + step) -
                            self.evaluate(x - step)) / (2 * h)
        return result

    def jacobian(self, x):
        return self.derivative(x).T

    def directional_derivative(self, x, w):
        estimate, _ = numeric_semiderivative(self.evaluate, x, w)
        return estimate

    def jacobian_semiderivative(self, x, w):
        estimate, _ = numeric_semiderivative(self.jacobian, x, w)
        return estimate

    def derivative_semiderivative(self, x, w):
        return self.jacobian_semiderivative(x, w).T

    def __repr__(self):
        return f'BlackBoxMap({self.in_dim}->{self.out_dim})'


def numeric_semiderivative(fn: Callable, x, w, schedule=None):
    """Forward difference quotients (fn(x + t w) - fn(x)) / t over a
    decreasing schedule, extrapolated linearly to t = 0.

    Returns (estimate, dispersion); dispersion is the spread of the last
    three quotients. Raises NonConvergent above TOL_SEMI * max(1, |estimate|).
    """
    schedule = GlobalConfig.SEMI_SCHEDULE if schedule is None else schedule
    schedule = [float(t) for t in schedule]
    if len(schedule) < 2 or any(t <= 0 for t in schedule) or any(
            a <= b for a, b in zip(schedule, schedule[1:])):
        raise ValueError('schedule should be a decreasing positive sequence')
    x = as_vector(x, name='point')
    w = as_vector(w, x.shape[0], 'direction')
    base = np.asarray(fn(x), dtype=float)
    quotients = [(np.asarray(fn(x + t * w), dtype=float) - base) / t
                 for t in schedule]
    t1, t2 = schedule[-1], schedule[-2]
    q1, q2 = quotients[-1], quotients[-2]
    slope = (q2 - q1) / (t2 - t1)
    estimate = q1 - slope * t1
    tail = quotients[-3:]
    dispersion = max(
        float(np.max(np.abs(a - b))) if np.size(a) else 0.0 for a in tail
        for b in tail)
    scale = max(1.0, float(np.max(np.abs(estimate))) if np.size(estimate) else 0.0)
    if dispersion > GlobalConfig.TOL_SEMI * scale:
        msg = (f'difference quotients disagree by {dispersion:.3g} '
               f'over the schedule tail')
        logger.error(msg)
        raise NonConvergent(msg)
    logger.debug(f'numeric semiderivative dispersion {dispersion:.3g}')
    return estimate, dispersion
