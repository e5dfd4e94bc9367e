# -*- coding: utf-8 -*-

from collections import namedtuple
from importlib import import_module
from importlib.util import find_spec
from logging import getLogger
from math import inf, isinf, isnan
from typing import Dict, Tuple
from warnings import warn

import numpy as np
from scipy.linalg import qr
from scipy.optimize import linprog, minimize

from .config import GlobalConfig
from .exceptions import DimensionMismatch

logger = getLogger('lsvreg')


class NotSet(object):
    __slots__ = ()

    def __bool__(self):
        return False


class LazyImporter(object):
    """Optional solver backends, imported on first attribute access.

    Usage::

        >>> from lsvreg.utils import LazyImporter
        >>> lib = LazyImporter()
        >>> lib.register('hypot', 'math')
        >>> lib.hypot(3, 4)
        5.0
        >>> lib.register('quadprog_solve_qp', 'quadprog', 'solve_qp')
    """

    def __init__(self):
        self.backends: Dict[str, Tuple[str, str]] = {}

    def register(self, name, module, attribute=None):
        if name in self.backends:
            logger.debug(f'backend {name} rebound to {module}')
        self.backends[name] = (module, attribute or name)

    def __getattr__(self, name):
        if name == 'backends' or name not in self.backends:
            raise AttributeError(
                f"LazyImporter object has no attribute '{name}'")
        module, attribute = self.backends.pop(name)
        value = getattr(import_module(module), attribute)
        setattr(self, name, value)
        return value


def check_import(name):
    return find_spec(name) is not None


_lib = LazyImporter()
_lib.register('quadprog_solve_qp', 'quadprog', 'solve_qp')


def to_jsonable(obj):
    """Turn numpy values and non-finite floats into JSON-syntax values."""
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if isnan(obj):
            return 'nan'
        if isinf(obj):
            return 'inf' if obj > 0 else '-inf'
        return obj
    return obj


def from_jsonable_float(value):
    if isinstance(value, str):
        return float(value)
    return value


class JsonSerializable(dict):
    __slots__ = ()

    def __init__(self, **kwargs):
        super().__init__()
        self.update(kwargs)

    def to_dict(self):
        return to_jsonable(dict(self))

    def dumps(self, *args, **kwargs):
        return GlobalConfig.json_dumps(self.to_dict(), *args, **kwargs)

    def to_json(self, *args, **kwargs):
        return self.dumps(*args, **kwargs)

    @classmethod
    def loads(cls, json_string):
        if isinstance(json_string, cls):
            return json_string
        elif isinstance(json_string, str):
            return cls(**GlobalConfig.json_loads(json_string))
        elif isinstance(json_string, dict):
            return cls(**json_string)
        else:
            raise TypeError('Only can be loaded from JSON / cls / dict.')

    @classmethod
    def from_json(cls, json_string):
        return cls.loads(json_string)


def as_vector(value, dim=None, name='vector'):
    vector = np.atleast_1d(np.asarray(value, dtype=float)).ravel()
    if dim is not None and vector.shape[0] != dim:
        msg = f'{name} should have length {dim}, got {vector.shape[0]}'
        logger.error(msg)
        raise DimensionMismatch(msg)
    return vector


def as_rows(matrix, offsets, dim):
    """Normalize an (A, b) pair into float arrays of shape (k, dim), (k,)."""
    if matrix is None or len(matrix) == 0:
        return np.zeros((0, dim)), np.zeros(0)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if offsets is None:
        offsets = np.zeros(matrix.shape[0])
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float)).ravel()
    if matrix.shape[1] != dim or matrix.shape[0] != offsets.shape[0]:
        msg = (f'rows of shape {matrix.shape} with {offsets.shape[0]} offsets '
               f'do not fit dimension {dim}')
        logger.error(msg)
        raise DimensionMismatch(msg)
    return matrix, offsets


def unit(vector):
    vector = np.asarray(vector, dtype=float)
    norm = np.linalg.norm(vector)
    if norm == 0:
        return vector
    return vector / norm


def independent_rows(E, e, tol=1e-10):
    """Drop linearly dependent equality rows, keeping a consistent subsystem."""
    if not len(E):
        return E, e
    augmented = np.hstack([E, e[:, None]])
    _, r, perm = qr(augmented.T, mode='economic', pivoting=True)
    diag = np.abs(np.diag(r)) if r.size else np.zeros(0)
    scale = max(1.0, diag[0] if diag.size else 1.0)
    rank = int(np.sum(diag > tol * scale))
    keep = np.sort(perm[:rank])
    return E[keep], e[keep]


LpResult = namedtuple('LpResult', 'status x fun')


def lp_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=NotSet):
    """Solve min c.x over {A_ub x <= b_ub, A_eq x = b_eq, bounds}.

    Returns LpResult with status one of 'optimal', 'infeasible', 'unbounded',
    'error'. Bounds default to the box [-LP_BOX, LP_BOX]."""
    c = np.asarray(c, dtype=float)
    if bounds is NotSet:
        bounds = (-GlobalConfig.LP_BOX, GlobalConfig.LP_BOX)
    kwargs = {'bounds': bounds, 'method': 'highs'}
    if A_ub is not None and len(A_ub):
        kwargs['A_ub'] = A_ub
        kwargs['b_ub'] = b_ub
    if A_eq is not None and len(A_eq):
        kwargs['A_eq'] = A_eq
        kwargs['b_eq'] = b_eq
    tol = max(GlobalConfig.TOL_LP, 1e-10)
    for options in ({
            'primal_feasibility_tolerance': tol,
            'dual_feasibility_tolerance': tol
    }, {}):
        result = linprog(c, options=options, **kwargs)
        if result.status == 0:
            return LpResult('optimal', result.x, result.fun)
        elif result.status == 2:
            return LpResult('infeasible', None, inf)
        elif result.status == 3:
            return LpResult('unbounded', None, -inf)
        logger.debug(f'linprog status {result.status}: {result.message}')
    return LpResult('error', None, None)


def lp_feasible_point(dim, A=None, b=None, E=None, e=None, bounds=NotSet):
    result = lp_solve(np.zeros(dim), A, b, E, e, bounds=bounds)
    if result.status == 'error':
        logger.warning('LP feasibility check failed numerically, '
                       'treated as infeasible')
    return result.x if result.status == 'optimal' else None


_QUADPROG_MISSING_WARNED = []


def _slsqp_project(point, A, b, E, e):
    start = lp_feasible_point(point.shape[0], A, b, E, e)
    if start is None:
        return None
    constraints = []
    if len(A):
        constraints.append({
            'type': 'ineq',
            'fun': lambda x: b - A @ x,
            'jac': lambda x: -A
        })
    if len(E):
        constraints.append({
            'type': 'eq',
            'fun': lambda x: E @ x - e,
            'jac': lambda x: E
        })
    result = minimize(lambda x: 0.5 * np.dot(x - point, x - point),
                      start,
                      jac=lambda x: x - point,
                      constraints=constraints,
                      method='SLSQP',
                      options={
                          'ftol': 1e-15,
                          'maxiter': 500
                      })
    return result.x


def qp_project(point, A=None, b=None, E=None, e=None):
    """Euclidean projection of `point` onto {A x <= b, E x = e}; None if empty."""
    point = np.asarray(point, dtype=float)
    dim = point.shape[0]
    A, b = as_rows(A, b, dim)
    E, e = independent_rows(*as_rows(E, e, dim))
    if not len(A) and not len(E):
        return point.copy()
    if check_import('quadprog'):
        qp_C = np.ascontiguousarray(-np.vstack([E, A]).T)
        qp_b = -np.hstack([e, b])
        try:
            return _lib.quadprog_solve_qp(np.eye(dim), point, qp_C, qp_b,
                                          len(E))[0]
        except ValueError as err:
            logger.debug(f'quadprog refused ({err}), trying SLSQP')
    elif not _QUADPROG_MISSING_WARNED:
        _QUADPROG_MISSING_WARNED.append(True)
        msg = 'quadprog is not installed, projections fall back to SLSQP.'
        warn(msg)
        logger.warning(msg)
    return _slsqp_project(point, A, b, E, e)
