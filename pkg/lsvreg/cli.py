# -*- coding: utf-8 -*-
"""Problem files, query execution, reports and the built-in corpus.

A problem file is one JSON object::

    {"schema_version": 1, "name": "...", "kind": "mapping",
     "payload": {"mappings": {"main": {...}}},
     "queries": [{"op": "reg", "u": [0.1], "y": [0.1]}]}

Exit codes: 0 every query executed, 1 parse or validation error, 2 internal
inconsistency or corpus mismatch.
"""

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from logging import getLogger
from math import isfinite
from pathlib import Path
from time import perf_counter
from typing import Dict, List

import numpy as np

from .config import GlobalConfig
from .exceptions import (ConditionFailed, InconsistencyError,
                         InvalidProblemError, LsvregError)
from .fixtures import FIXTURES, Fixture
from .gendiff import DerivativeQuery, coderivative, graphical_derivative
from .lsv import (LsvInstance, combine_bounds, lower_bound_theorem32,
                  lower_bound_theorem35, lsv_of_map, lsv_result, lsv_value,
                  outer_norm, singularity_report, subderivative_estimate)
from .polyhedra import PolyhedralSet
from .regularity import (RegularityVerdict, Status, _set_projection,
                         check_gfrerer, check_metric2_regularity,
                         check_metric_regularity, classic2_regularity,
                         curve_falsifier, m2r_equiv_gfrerer, reg_chain,
                         sufficient_m2r_indicator_nonpolyhedral,
                         sufficient_m2r_indicator_polyhedral,
                         sufficient_m2r_nonpolyhedral_constraint,
                         sufficient_m2r_polyhedral_constraint,
                         sufficient_m2r_polyhedral_mapping,
                         sufficient_m2r_product)
from .setmaps import (ConstantSet, Indicator, Product, SmoothPlus,
                      StructuredMapping, closed_set_from_payload,
                      mapping_from_payload)
from .smoothmaps import PolyMap
from .systems import (ConstraintSystem, VariationalSystem,
                      compile_variational_system,
                      cs_metric2_regularity_polyhedral,
                      cs_metric2_regularity_unconstrained,
                      cs_metric_regularity, vs_metric2_regularity,
                      vs_metric_regularity)
from .utils import JsonSerializable, as_vector, from_jsonable_float, to_jsonable

logger = getLogger('lsvreg')
__all__ = [
    'ProblemFile', 'Report', 'CorpusReport', 'Analyzer', 'QueryHandler',
    'configured', 'run', 'corpus', 'check_expectation'
]

EXIT_OK, EXIT_INVALID, EXIT_INCONSISTENT = 0, 1, 2


def _version():
    from . import __version__
    return __version__


def _plain(obj):
    """Pure JSON data: enums become strings, non-finite floats 'inf'."""
    return GlobalConfig.json_loads(
        GlobalConfig.json_dumps(to_jsonable(obj), default=repr))


@contextmanager
def configured(seed=None, tol_lsv=None, tol_lp=None, max_patterns=None,
               numeric_only=None):
    """Rebind GlobalConfig for the duration of a run."""
    overrides = {
        'SEED': seed,
        'TOL_LSV': tol_lsv,
        'TOL_LP': tol_lp,
        'MAX_PATTERNS': max_patterns,
        'NUMERIC_ONLY': numeric_only
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    saved = {k: getattr(GlobalConfig, k) for k in overrides}
    for key, value in overrides.items():
        setattr(GlobalConfig, key, value)
    try:
        yield
    finally:
        for key, value in saved.items():
            setattr(GlobalConfig, key, value)


@contextmanager
def _located(location):
    try:
        yield
    except InvalidProblemError as err:
        raise InvalidProblemError(
            err.msg,
            location=f'{location}: {err.location}'
            if err.location else location)
    except (KeyError, TypeError, ValueError) as err:
        raise InvalidProblemError(f'{err.__class__.__name__}: {err}',
                                  location=location)


# subjects


class _NormalConeFamily(object):
    """xi => R^m x N_C(xi), None off C."""

    def __init__(self, set_: PolyhedralSet, m):
        self.set_ = set_
        self.m = m

    def __call__(self, xi):
        if not self.set_.contains(xi):
            return None
        return PolyhedralSet.whole(self.m).product(self.set_.normal_cone(xi))


def _optional_set(payload, key):
    if payload.get(key) is None:
        return None
    return closed_set_from_payload(payload[key])


def _lsv_instance(payload):
    A = PolyMap.from_payload(payload['A'])
    m, q = int(payload['m']), int(payload['q'])
    gamma_graph = _optional_set(payload, 'gamma_graph')
    cone_set = _optional_set(payload, 'gamma_normal_cone')
    family = None
    if cone_set is not None:
        if gamma_graph is not None:
            raise InvalidProblemError(
                'give either gamma_graph or gamma_normal_cone')
        if cone_set.dim != A.in_dim or cone_set.dim != q:
            raise InvalidProblemError(
                'the normal cone family needs a set in the parameter space '
                'with q = its dimension')
        family = _NormalConeFamily(cone_set, m)
    inst = LsvInstance(A,
                       m,
                       q,
                       gamma_graph=gamma_graph,
                       gamma_family=family,
                       domain=_optional_set(payload, 'domain'),
                       cone_valued=bool(payload.get('cone_valued', False)),
                       outer_semicontinuous=payload.get('outer_semicontinuous'),
                       calmness=payload.get('calmness'))
    canonical = {
        'A': A.to_payload(),
        'm': m,
        'q': q,
        'cone_valued': inst.cone_valued,
    }
    for key, value in (('gamma_graph', gamma_graph),
                       ('gamma_normal_cone', cone_set),
                       ('domain', inst.domain)):
        if value is not None:
            canonical[key] = value.to_payload()
    if payload.get('outer_semicontinuous') is not None:
        canonical['outer_semicontinuous'] = bool(
            payload['outer_semicontinuous'])
    if inst.calmness is not None:
        canonical['calmness'] = float(inst.calmness)
    return inst, canonical


def _mappings(payload):
    mappings = payload['mappings']
    if not isinstance(mappings, dict) or not mappings:
        raise InvalidProblemError('mappings should be a nonempty object')
    built, canonical = {}, {}
    for name, item in mappings.items():
        with _located(f'mappings.{name}'):
            built[name] = mapping_from_payload(item)
            canonical[name] = built[name].to_payload()
    return built, {'mappings': canonical}


def _systems(cls):

    def build(payload):
        system = cls.from_payload(payload)
        return system, system.to_payload()

    return build


class Subject(object):
    """The built objects of a problem file."""
    BUILDERS = {
        'mapping': _mappings,
        'constraint_system': _systems(ConstraintSystem),
        'variational_system': _systems(VariationalSystem),
        'lsv_instance': _lsv_instance,
    }

    def __init__(self, kind, payload):
        self.kind = kind
        with _located('payload'):
            self.value, self.canonical = self.BUILDERS[kind](payload)

    def mapping(self, query) -> StructuredMapping:
        name = query.get('mapping', next(iter(self.value)))
        if name not in self.value:
            raise InvalidProblemError(f'unknown mapping {name!r}')
        return self.value[name]


# query handlers


class QueryHandler(ABC):
    """One query op; `handle` returns the result or the caught error."""
    name = ''
    kinds = ('mapping',)
    required: tuple = ()

    def validate(self, query, location):
        missing = [key for key in self.required if key not in query]
        if missing:
            raise InvalidProblemError(f'{self.name} needs {missing}',
                                      location=location)

    def handle(self, subject: Subject, query):
        try:
            return self._handle(subject, query)
        except GlobalConfig.SYSTEM_ERRORS:
            raise
        except Exception as err:
            return err

    @abstractmethod
    def _handle(self, subject: Subject, query):
        pass

    @property
    def doc(self):
        return f'{self.name} ({", ".join(self.kinds)}): {self.__class__.__doc__}'


def _smooth_plus(S, name):
    if not isinstance(S, SmoothPlus) or not isinstance(S.F, PolyMap):
        raise InvalidProblemError(f'{name} needs a polynomial F + C mapping')
    return S.F, S.C


class RegHandler(QueryHandler):
    """Reg(u, y; S), the lsv of the coderivative."""
    name = 'reg'
    required = ('u', 'y')

    def _handle(self, subject, query):
        S = subject.mapping(query)
        query_ = DerivativeQuery(S, query['u'], query['y'])
        return lsv_of_map(coderivative(query_))


class CoderivativeHandler(QueryHandler):
    """Graph of D*S(u|y) with its lsv and outer norm."""
    name = 'coderivative'
    required = ('u', 'y')

    def _handle(self, subject, query):
        K = coderivative(
            DerivativeQuery(subject.mapping(query), query['u'], query['y']))
        return {
            'graph': K.graph.to_payload(),
            'lsv': lsv_of_map(K),
            'outer_norm': outer_norm(K)
        }


class GraphicalDerivativeHandler(QueryHandler):
    """DS(u|y)(w) as a polyhedral set."""
    name = 'graphical_derivative'
    required = ('u', 'y', 'w')

    def _handle(self, subject, query):
        S = subject.mapping(query)
        D = graphical_derivative(
            DerivativeQuery(S, query['u'], query['y'], kind='graphical'))
        values = D.value(as_vector(query['w'], S.in_dim, 'direction'))
        return {'values': values.to_payload(), 'empty': values.is_empty()}


class MetricRegularityHandler(QueryHandler):
    """Coderivative criterion at (u, y)."""
    name = 'metric_regularity'
    required = ('u', 'y')

    def _handle(self, subject, query):
        return check_metric_regularity(subject.mapping(query), query['u'],
                                       query['y'])


class Metric2Handler(QueryHandler):
    """Metric 2-regularity at (u, y) relative to w."""
    name = 'metric2'
    required = ('u', 'y', 'w')

    def _handle(self, subject, query):
        return check_metric2_regularity(subject.mapping(query), query['u'],
                                        query['y'], query['w'])


class GfrererHandler(QueryHandler):
    """Gfrerer regularity at (u, y) for the pair (w, eta)."""
    name = 'gfrerer'
    required = ('u', 'y', 'w', 'eta')

    def _handle(self, subject, query):
        return check_gfrerer(subject.mapping(query), query['u'], query['y'],
                             query['w'], query['eta'])


class EquivalenceHandler(QueryHandler):
    """Metric 2-regularity against Gfrerer regularity over sampled eta."""
    name = 'equivalence'
    required = ('u', 'y', 'w')

    def _handle(self, subject, query):
        report = m2r_equiv_gfrerer(subject.mapping(query), query['u'],
                                   query['y'], query['w'])
        if not report['consistent']:
            raise InconsistencyError(
                'metric 2-regularity and Gfrerer regularity disagree')
        return report


class RegChainHandler(QueryHandler):
    """Reg of F + C and of its reformulations; y is the C-value."""
    name = 'reg_chain'
    required = ('u', 'y')

    def _handle(self, subject, query):
        F, C = _smooth_plus(subject.mapping(query), self.name)
        return reg_chain(F, C, query['u'], query['y'])


class SufficientHandler(QueryHandler):
    """Second-order sufficient conditions; y is the C-value (the point of
    C0 for the constraint forms)."""
    name = 'sufficient'
    required = ('condition', 'u', 'w')
    CONDITIONS = ('polyhedral_constraint', 'nonpolyhedral_constraint',
                  'polyhedral_mapping', 'indicator_polyhedral',
                  'indicator_nonpolyhedral', 'product')

    def validate(self, query, location):
        super().validate(query, location)
        if query['condition'] not in self.CONDITIONS:
            raise InvalidProblemError(
                f'unknown condition {query["condition"]!r}, known: '
                f'{list(self.CONDITIONS)}',
                location=location)
        if query['condition'] not in ('indicator_polyhedral',
                                      'indicator_nonpolyhedral'):
            if 'y' not in query:
                raise InvalidProblemError(
                    f'{query["condition"]} needs y', location=location)

    def _handle(self, subject, query):
        F, C = _smooth_plus(subject.mapping(query), self.name)
        condition, u, w = query['condition'], query['u'], query['w']
        if condition in ('polyhedral_constraint', 'nonpolyhedral_constraint'):
            if not isinstance(C, ConstantSet):
                raise InvalidProblemError(f'{condition} needs F + C0')
            check = (sufficient_m2r_polyhedral_constraint
                     if condition == 'polyhedral_constraint' else
                     sufficient_m2r_nonpolyhedral_constraint)
            return check(F, C.c1, u, query['y'], w)
        if condition.startswith('indicator'):
            if not isinstance(C, Indicator):
                raise InvalidProblemError(f'{condition} needs F + an indicator')
            check = (sufficient_m2r_indicator_polyhedral
                     if condition == 'indicator_polyhedral' else
                     sufficient_m2r_indicator_nonpolyhedral)
            return check(F, C.omega, u, w)
        if condition == 'polyhedral_mapping':
            return sufficient_m2r_polyhedral_mapping(F, C, u, query['y'], w)
        if not isinstance(C, Product):
            raise InvalidProblemError('product needs F + R x T')
        return sufficient_m2r_product(F, C.R, C.T, (u, query['y']), w)


class Classic2Handler(QueryHandler):
    """Classic 2-regularity of the smooth part with the optional set
    conditions."""
    name = 'classic2'
    required = ('u', 'w')

    def _handle(self, subject, query):
        S = subject.mapping(query)
        F = S.F if isinstance(S, SmoothPlus) else None
        if not isinstance(F, PolyMap):
            raise InvalidProblemError('classic2 needs a polynomial smooth part')
        return classic2_regularity(F, query['u'], query['w'],
                                   c0_domain=_optional_set(query, 'c0_domain'),
                                   c0_range=_optional_set(query, 'c0_range'))


class CurveHandler(QueryHandler):
    """Reg along a polynomial curve t => u(t); y(t) comes from `curve_y` or
    keeps the C-value of the basepoint."""
    name = 'curve'
    required = ('u', 'y', 'curve')

    def _handle(self, subject, query):
        S = subject.mapping(query)
        u_of = PolyMap.from_payload(query['curve'])
        y_of = (PolyMap.from_payload(query['curve_y'])
                if query.get('curve_y') else None)
        if y_of is None and not isinstance(S, SmoothPlus):
            raise InvalidProblemError('curve needs curve_y for this mapping')
        u0 = as_vector(query['u'], S.in_dim, 'u')
        inner = (None if y_of is not None else S.inner_value(
            u0, as_vector(query['y'], S.out_dim, 'y')))

        def curve(t):
            ut = u_of([t])
            if y_of is not None:
                return ut, y_of([t])
            return ut, S.F(ut) + inner

        return curve_falsifier(S, query['u'], query['y'], curve,
                               schedule=query.get('schedule'))


# lsv instances


def _bound_record(result):
    if isinstance(result, ConditionFailed):
        return _refusal(result)
    if isinstance(result, Exception):
        raise result
    return result


class LsvHandler(QueryHandler):
    """lsv at xi."""
    name = 'lsv'
    kinds = ('lsv_instance',)
    required = ('xi',)

    def _handle(self, subject, query):
        return lsv_result(subject.value, query['xi'])


class SingularityHandler(QueryHandler):
    """Singularity test with the unit solutions."""
    name = 'singularity'
    kinds = ('lsv_instance',)
    required = ('xi',)

    def _handle(self, subject, query):
        return singularity_report(subject.value, query['xi'])


class BoundCalmnessHandler(QueryHandler):
    """Subderivative bound through the calmness of Gamma."""
    name = 'bound_calmness'
    kinds = ('lsv_instance',)
    required = ('xi', 'omega')

    def _handle(self, subject, query):
        return _bound_record(
            lower_bound_theorem32(subject.value, query['xi'], query['omega'],
                                  c=query.get('c')))


class BoundConeHandler(QueryHandler):
    """Subderivative bound through the cone of Gamma."""
    name = 'bound_cone'
    kinds = ('lsv_instance',)
    required = ('xi', 'omega')

    def _handle(self, subject, query):
        return _bound_record(
            lower_bound_theorem35(subject.value, query['xi'], query['omega']))


class BoundsHandler(QueryHandler):
    """Both bounds and their maximum."""
    name = 'bounds'
    kinds = ('lsv_instance',)
    required = ('xi', 'omega')

    def _handle(self, subject, query):
        return combine_bounds(subject.value, query['xi'], query['omega'],
                              c=query.get('c'))


class SubderivativeHandler(QueryHandler):
    """Sampled subderivative of the lsv function; points are projected onto
    a polyhedral domain."""
    name = 'subderivative'
    kinds = ('lsv_instance',)
    required = ('xi', 'omega')

    def _handle(self, subject, query):
        inst = subject.value
        sampler = None
        if isinstance(inst.domain, PolyhedralSet):

            def sampler(point):
                return _set_projection(inst.domain, point)

        return subderivative_estimate(lambda xi: lsv_value(inst, xi),
                                      query['xi'],
                                      query['omega'],
                                      schedule=query.get('schedule'),
                                      sampler=sampler)


# systems


class CsMetricRegularityHandler(QueryHandler):
    """Metric regularity of a constraint system."""
    name = 'cs_metric_regularity'
    kinds = ('constraint_system',)
    required = ('x', 'sigma')

    def _handle(self, subject, query):
        return cs_metric_regularity(subject.value, query['x'], query['sigma'])


class CsMetric2PolyhedralHandler(QueryHandler):
    """Metric 2-regularity of a polyhedral constraint system."""
    name = 'cs_metric2_polyhedral'
    kinds = ('constraint_system',)
    required = ('x', 'sigma', 'direction')

    def _handle(self, subject, query):
        return cs_metric2_regularity_polyhedral(subject.value, query['x'],
                                                query['sigma'],
                                                query['direction'])


class CsMetric2UnconstrainedHandler(QueryHandler):
    """Metric 2-regularity of a constraint system without Omega."""
    name = 'cs_metric2_unconstrained'
    kinds = ('constraint_system',)
    required = ('x', 'sigma', 'direction')

    def _handle(self, subject, query):
        return cs_metric2_regularity_unconstrained(subject.value, query['x'],
                                                   query['sigma'],
                                                   query['direction'])


class VsMetricRegularityHandler(QueryHandler):
    """Metric regularity of a variational system."""
    name = 'vs_metric_regularity'
    kinds = ('variational_system',)
    required = ('x', 'lam', 'zeta')

    def _handle(self, subject, query):
        return vs_metric_regularity(subject.value, query['x'], query['lam'],
                                    query['zeta'])


class VsTRegularityHandler(QueryHandler):
    """Metric regularity of T(lambda, zeta) = -lambda + N_C0(zeta)."""
    name = 'vs_T_regularity'
    kinds = ('variational_system',)
    required = ('x', 'lam', 'zeta')

    def _handle(self, subject, query):
        vs = subject.value
        _, lam, zeta = vs.check_solution(query['x'], query['lam'],
                                         query['zeta'])
        cs = compile_variational_system(vs)
        return check_metric_regularity(cs.T, np.hstack([lam, zeta]),
                                       np.zeros(cs.q))


class VsMetric2Handler(QueryHandler):
    """Second-order condition of a variational system over the alpha sweep."""
    name = 'vs_metric2'
    kinds = ('variational_system',)
    required = ('x', 'lam', 'zeta', 'direction')

    def _handle(self, subject, query):
        return vs_metric2_regularity(subject.value, query['x'], query['lam'],
                                     query['zeta'], query['direction'],
                                     alphas=query.get('alphas'))


class Analyzer(object):
    """Handlers collection."""

    def __init__(self):
        self.handlers: Dict[str, QueryHandler] = {}
        for handler in QueryHandler.__subclasses__():
            self.handlers[handler.name] = handler()

    def get(self, op, kind, location):
        handler = self.handlers.get(op)
        if handler is None:
            raise InvalidProblemError(
                f'unknown op {op!r}, known: {sorted(self.handlers)}',
                location=location)
        if kind not in handler.kinds:
            raise InvalidProblemError(f'{op} does not apply to a {kind}',
                                      location=location)
        return handler

    def execute(self, problem: 'ProblemFile', workers=1) -> 'Report':
        queries = problem['queries']
        handlers = [
            self.get(query['op'], problem['kind'], f'query {index}')
            for index, query in enumerate(queries)
        ]

        def task(index):
            start = perf_counter()
            result = handlers[index].handle(problem.subject, queries[index])
            return _entry(index, queries[index]['op'], result), perf_counter(
            ) - start

        if workers and workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                done = [pool.submit(task, i) for i in range(len(queries))]
                outcomes = [future.result() for future in done]
        else:
            outcomes = [task(i) for i in range(len(queries))]
        return Report(tool='lsvreg',
                      version=_version(),
                      schema_version=GlobalConfig.SCHEMA_VERSION,
                      seed=GlobalConfig.SEED,
                      settings={
                          'tol_lsv': GlobalConfig.TOL_LSV,
                          'tol_lp': GlobalConfig.TOL_LP,
                          'max_patterns': GlobalConfig.MAX_PATTERNS,
                          'numeric_only': GlobalConfig.NUMERIC_ONLY
                      },
                      problem=problem.get('name'),
                      kind=problem['kind'],
                      results=[entry for entry, _ in outcomes],
                      timings=[elapsed for _, elapsed in outcomes])


def _refusal(err: ConditionFailed):
    record = {'refused': err.condition, 'reason': str(err)}
    if err.witness is not None:
        record['witness'] = err.witness
    return record


def _entry(index, op, result):
    entry = {'query': index, 'op': op}
    if isinstance(result, ConditionFailed):
        entry.update(outcome='refused', result=_plain(_refusal(result)))
    elif isinstance(result, InconsistencyError):
        entry.update(outcome='inconsistent', error=str(result))
    elif isinstance(result, ValueError):
        entry.update(outcome='invalid',
                     error=f'{result.__class__.__name__}: {result}')
    elif isinstance(result, LsvregError):
        entry.update(outcome='refused',
                     result={'error': result.__class__.__name__,
                             'reason': str(result)})
    elif isinstance(result, Exception):
        logger.error(f'query {index} ({op}) crashed: {result!r}')
        entry.update(outcome='inconsistent',
                     error=f'{result.__class__.__name__}: {result}')
    else:
        entry.update(outcome='ok', result=_plain(result))
    return entry


# problem files and reports


class ProblemFile(JsonSerializable):
    """schema_version, name, kind, payload and queries; `subject` holds the
    built objects and `canonical()` the re-serialized file."""
    __slots__ = ('subject',)
    KINDS = tuple(Subject.BUILDERS)

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.subject = None

    @classmethod
    def parse(cls, source) -> 'ProblemFile':
        """From a path, a JSON string or a dict; raises InvalidProblemError."""
        if isinstance(source, Path) or (isinstance(source, str) and
                                        not source.lstrip().startswith('{')):
            path = Path(source)
            try:
                source = path.read_text(encoding=GlobalConfig.__encoding__)
            except OSError as err:
                raise InvalidProblemError(str(err), location=str(path))
        if isinstance(source, str):
            try:
                source = GlobalConfig.json_loads(source)
            except GlobalConfig.JSONDecodeError as err:
                raise InvalidProblemError(
                    err.msg, location=f'line {err.lineno}, column {err.colno}')
        if not isinstance(source, dict):
            raise InvalidProblemError('a problem file is one JSON object')
        problem = cls(**source)
        problem.validate()
        return problem

    def validate(self):
        version = self.get('schema_version')
        if version != GlobalConfig.SCHEMA_VERSION:
            raise InvalidProblemError(
                f'unsupported schema_version {version!r}',
                location='schema_version')
        kind = self.get('kind')
        if kind not in self.KINDS:
            raise InvalidProblemError(
                f'unknown kind {kind!r}, known: {list(self.KINDS)}',
                location='kind')
        if not isinstance(self.get('payload'), dict):
            raise InvalidProblemError('payload should be an object',
                                      location='payload')
        queries = self.get('queries')
        if not isinstance(queries, list):
            raise InvalidProblemError('queries should be a list',
                                      location='queries')
        analyzer = Analyzer()
        for index, query in enumerate(queries):
            location = f'query {index}'
            if not isinstance(query, dict) or 'op' not in query:
                raise InvalidProblemError('a query is an object with an op',
                                          location=location)
            analyzer.get(query['op'], kind, location).validate(
                query, location)
        self.subject = Subject(kind, self['payload'])
        for index, query in enumerate(queries):
            for key in ('curve', 'curve_y'):
                if query.get(key) is not None:
                    with _located(f'query {index}.{key}'):
                        PolyMap.from_payload(query[key])

    def canonical(self):
        """The file with its payload re-serialized from the built objects."""
        queries = []
        for query in self['queries']:
            query = dict(query)
            for key in ('curve', 'curve_y'):
                if query.get(key) is not None:
                    query[key] = PolyMap.from_payload(query[key]).to_payload()
            for key in ('c0_domain', 'c0_range'):
                if query.get(key) is not None:
                    query[key] = closed_set_from_payload(
                        query[key]).to_payload()
            queries.append(query)
        return _plain({
            'schema_version': self['schema_version'],
            'name': self.get('name'),
            'kind': self['kind'],
            'payload': self.subject.canonical,
            'queries': queries
        })


class Report(JsonSerializable):
    """tool, version, seed, settings, problem, kind, per query results and
    timings."""

    @property
    def exit_code(self):
        outcomes = {entry['outcome'] for entry in self['results']}
        if 'inconsistent' in outcomes:
            return EXIT_INCONSISTENT
        if 'invalid' in outcomes:
            return EXIT_INVALID
        return EXIT_OK

    def payload(self):
        """Everything but the timings."""
        return _plain({k: v for k, v in self.items() if k != 'timings'})

    def summary(self) -> str:
        lines = [f'{self["problem"]} ({self["kind"]}), seed {self["seed"]}']
        for entry in self['results']:
            head = f'  [{entry["query"]}] {entry["op"]}'
            result = entry.get('result') or {}
            if entry['outcome'] in ('invalid', 'inconsistent'):
                lines.append(f'{head}: {entry["outcome"]}: {entry["error"]}')
            elif 'refused' in result or 'error' in result:
                lines.append(f'{head}: refused: {result["reason"]}')
            elif 'status' in result:
                trace = ', '.join(result.get('trace') or [])
                lines.append(f'{head}: {result["property"]} '
                             f'{result["status"]} [{trace}]')
            elif 'value' in result:
                lines.append(f'{head}: {result["value"]}')
            else:
                lines.append(f'{head}: ok')
        return '\n'.join(lines)


def run(problem_path, flags=None, output=None, workers=1) -> Report:
    """Parse, execute and optionally write the report to `output`.

    Parse errors raise InvalidProblemError; query errors are recorded in the
    report and folded into `Report.exit_code`."""
    with configured(**(flags or {})):
        problem = ProblemFile.parse(problem_path)
        report = Analyzer().execute(problem, workers=workers)
    if output is not None:
        Path(output).write_text(report.dumps(indent=2),
                                encoding=GlobalConfig.__encoding__)
    return report


# corpus


def _lookup(result, path):
    """path: keys and list indices joined by '/'."""
    value = result
    for part in path.split('/'):
        if isinstance(value, list):
            value = value[int(part)]
        elif isinstance(value, dict):
            value = value[part]
        else:
            raise KeyError(part)
    return value


def _same_points(found, expected, tol=1e-9):
    if found is None or len(found) != len(expected):
        return False
    found = [np.asarray(p, dtype=float) for p in found]
    return all(
        any(np.abs(p - np.asarray(q)).max() <= tol for p in found)
        for q in expected)


def check_expectation(report: Report, expectation) -> str:
    """An empty string when the expectation holds, else the mismatch."""
    index, path = expectation['query'], expectation['path']
    entry = report['results'][index]
    where = f'query {index} ({entry["op"]}) {path}'
    if entry['outcome'] in ('invalid', 'inconsistent'):
        return f'{where}: {entry["outcome"]}: {entry["error"]}'
    try:
        value = _lookup(entry['result'], path)
    except (KeyError, IndexError, ValueError):
        if expectation.get('present') is False:
            return ''
        return f'{where}: missing'
    if 'present' in expectation:
        return '' if (value is not None) == expectation['present'] else (
            f'{where}: presence is not {expectation["present"]}')
    if 'equals' in expectation:
        if value != expectation['equals']:
            return f'{where}: {value!r} != {expectation["equals"]!r}'
    if 'approx' in expectation:
        number = from_jsonable_float(value)
        gap = abs(number - expectation['approx']) if isfinite(number) else None
        if gap is None or gap > expectation.get('tol', 1e-9):
            return f'{where}: {value!r} not within {expectation.get("tol")} of {expectation["approx"]}'
    if 'at_most' in expectation:
        if from_jsonable_float(value) > expectation['at_most']:
            return f'{where}: {value!r} > {expectation["at_most"]}'
    if 'points' in expectation:
        if not _same_points(value, expectation['points']):
            return f'{where}: {value!r} != {expectation["points"]}'
    for family in ('affirms', 'denies'):
        if family in expectation:
            verdict = RegularityVerdict(status=Status(value))
            if getattr(verdict, family) != expectation[family]:
                return f'{where}: {value} does not match {family}={expectation[family]}'
    return ''


class CorpusReport(JsonSerializable):
    """Per fixture: passed, mismatches and the report exit code."""

    @property
    def passed(self):
        return all(item['passed'] for item in self['fixtures'])

    @property
    def exit_code(self):
        return EXIT_OK if self.passed else EXIT_INCONSISTENT

    def summary(self) -> str:
        lines = []
        for item in self['fixtures']:
            mark = 'ok' if item['passed'] else 'MISMATCH'
            lines.append(f'{item["name"]} ({item["reference"]}): {mark}')
            lines.extend(f'    {line}' for line in item['mismatches'])
        total = len(self['fixtures'])
        good = sum(item['passed'] for item in self['fixtures'])
        lines.append(f'{good}/{total} fixtures passed')
        return '\n'.join(lines)


def run_fixture(fixture: Fixture):
    try:
        problem = ProblemFile.parse(fixture['problem'])
    except InvalidProblemError as err:
        return {
            'name': fixture['name'],
            'reference': fixture['reference'],
            'passed': False,
            'exit_code': EXIT_INVALID,
            'mismatches': [str(err)]
        }
    report = Analyzer().execute(problem)
    mismatches = [
        message for message in (check_expectation(report, item)
                                for item in fixture['expectations'])
        if message
    ]
    return {
        'name': fixture['name'],
        'reference': fixture['reference'],
        'passed': not mismatches,
        'exit_code': report.exit_code,
        'mismatches': mismatches
    }


def corpus(names: List[str] = None, flags=None, workers=None,
           fixtures: Dict[str, Fixture] = None) -> CorpusReport:
    """Run the built-in fixtures (or `fixtures`) and compare expectations."""
    fixtures = FIXTURES if fixtures is None else fixtures
    names = list(fixtures) if names is None else list(names)
    unknown = [name for name in names if name not in fixtures]
    if unknown:
        raise InvalidProblemError(f'unknown fixtures {unknown}',
                                  location='corpus')
    with configured(**(flags or {})):
        with ThreadPoolExecutor(workers) as pool:
            tasks = [pool.submit(run_fixture, fixtures[name]) for name in names]
            results = [task.result() for task in tasks]
    return CorpusReport(fixtures=results)
