# -*- coding: utf-8 -*-
"""Built-in corpus: problem files with their expected observables.

Each expectation addresses one query result by a '/'-separated path (detail
keys such as 'Eq(5.7)' contain dots) and compares it with `equals`,
`approx` (with `tol`), `at_most`, `present`, `affirms` / `denies` (the verdict
status family) or `points` (the same finite point set).
"""

from typing import Dict, List

from .utils import JsonSerializable

__all__ = ['Fixture', 'FIXTURES', 'get_fixture', 'fixture_names']

# shorthands for payloads


def poly(in_dim, *components):
    return {'type': 'poly', 'in_dim': in_dim, 'components': list(components)}


def polyhedral(dim, *pieces):
    return {'type': 'polyhedral', 'dim': dim, 'pieces': list(pieces)}


def manifold(in_dim, *components):
    return {'type': 'manifold', 'h': poly(in_dim, *components)}


def half_line(sign=1.0):
    """R_+ for sign 1, R_- for sign -1."""
    return polyhedral(1, {'A': [[-sign]], 'b': [0.0]})


def smooth_plus(F, C):
    return {'type': 'smooth_plus', 'F': F, 'C': C}


def indicator(set_, out_dim):
    return {'type': 'indicator', 'set': set_, 'out_dim': out_dim}


def constant(set_, in_dim):
    return {'type': 'constant', 'set': set_, 'in_dim': in_dim}


def single_valued(F):
    return {'type': 'single_valued', 'F': F}


def expect(query, path='status', **check):
    return dict(query=query, path=path, **check)


class Fixture(JsonSerializable):
    """name, reference, description, problem (a problem file payload) and
    expectations."""

    @property
    def name(self):
        return self['name']


def _problem(name, kind, payload, queries):
    return {
        'schema_version': 1,
        'name': name,
        'kind': kind,
        'payload': payload,
        'queries': queries
    }


# lsv instances


def _example_3_5():
    # Gamma(0, z) = {0, -1} for z in {0} x R_-, empty elsewhere
    rows = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]]
    gamma = polyhedral(
        4,
        {'A': [[0, 0, 1, 0]], 'b': [0.0], 'E': rows, 'e': [0.0, 0.0, 0.0]},
        {'A': [[0, 0, 1, 0]], 'b': [0.0], 'E': rows, 'e': [0.0, 0.0, -1.0]})
    payload = {
        'A': poly(1, '1', '0'),
        'm': 2,
        'q': 1,
        'gamma_graph': gamma
    }
    queries = [
        {'op': 'bound_calmness', 'xi': [0.0], 'omega': [1.0]},
        {'op': 'bound_cone', 'xi': [0.0], 'omega': [1.0]},
        {'op': 'singularity', 'xi': [0.0]},
    ]
    return Fixture(
        name='example_3_5',
        reference='Example 3.5',
        description='the calmness bound applies with c = 0, the cone bound '
        "refuses since rge A meets Theta",
        problem=_problem('example_3_5', 'lsv_instance', payload, queries),
        expectations=[
            expect(0, 'theorem', equals='Thm(3.2)'),
            expect(0, 'calmness', approx=0.0, tol=0.0),
            expect(0, 'certified', equals=True),
            expect(1, 'refused', equals="v'"),
            expect(2, 'is_singular', equals=True),
        ])


def _example_3_6():
    payload = {
        'A': poly(1, '0'),
        'm': 1,
        'q': 1,
        'gamma_normal_cone': half_line(),
        'domain': half_line(),
        'cone_valued': True,
        'outer_semicontinuous': True
    }
    queries = [
        {'op': 'bound_calmness', 'xi': [0.0], 'omega': [1.0]},
        {'op': 'bound_cone', 'xi': [0.0], 'omega': [1.0]},
    ]
    return Fixture(
        name='example_3_6',
        reference='Example 3.6',
        description='A = 0 and Gamma(xi, z) = N(xi): the cone bound applies, '
        'the calmness bound has no constant to work with',
        problem=_problem('example_3_6', 'lsv_instance', payload, queries),
        expectations=[
            expect(0, 'refused', equals='v'),
            expect(1, 'theorem', equals='Thm(3.5)'),
            expect(1, 'certified', equals=True),
        ])


def _example_3_7():
    gamma = polyhedral(4, {'E': [[0, 0, 1, 0], [1, 0, 0, 1]], 'e': [0.0, 0.0]})
    payload = {
        'A': poly(1, 'x1', 'x1^2'),
        'm': 2,
        'q': 1,
        'gamma_graph': gamma
    }
    queries = [
        {'op': 'singularity', 'xi': [0.0]},
        {'op': 'subderivative', 'xi': [0.0], 'omega': [1.0]},
        {'op': 'bound_cone', 'xi': [0.0], 'omega': [1.0]},
        {'op': 'lsv', 'xi': [0.5]},
    ]
    return Fixture(
        name='example_3_7',
        reference='Example 3.7',
        description='without outer semicontinuity of the cone mapping the '
        'cone bound would be wrong, so it has to refuse',
        problem=_problem('example_3_7', 'lsv_instance', payload, queries),
        expectations=[
            expect(0, 'witnesses', points=[[-1.0, 0.0], [1.0, 0.0]]),
            expect(1, 'value', approx=0.0, tol=1e-6),
            expect(2, 'refused', equals="iv'"),
            expect(3, 'value', approx=0.0, tol=1e-8),
        ])


# mappings F + C


def _example_5_9():
    main = smooth_plus(poly(1, 'x1'), indicator(half_line(), 1))
    queries = [{'op': 'reg', 'u': [t], 'y': [t]} for t in (0.1, 0.5, 1.0)]
    queries += [
        {'op': 'sufficient', 'condition': 'indicator_polyhedral',
         'u': [0.0], 'w': [1.0]},
        {'op': 'classic2', 'u': [0.0], 'w': [1.0],
         'c0_domain': half_line()},
        {'op': 'metric2', 'u': [0.0], 'y': [0.0], 'w': [1.0]},
        {'op': 'metric_regularity', 'u': [0.0], 'y': [0.0]},
    ]
    return Fixture(
        name='example_5_9',
        reference='Example 5.9',
        description='u + indicator of R_+: the polyhedral indicator '
        'condition fails while the hull condition and metric '
        '2-regularity hold',
        problem=_problem('example_5_9', 'mapping', {'mappings': {
            'main': main
        }}, queries),
        expectations=[
            expect(0, 'value', approx=1.0, tol=1e-9),
            expect(1, 'value', approx=1.0, tol=1e-9),
            expect(2, 'value', approx=1.0, tol=1e-9),
            expect(3, equals='SufficientConditionFails'),
            expect(4, 'details/Eq(5.7)', equals=True),
            expect(5, affirms=True),
            expect(6, equals='CertifiedNo'),
        ])


_F_5_11 = poly(3, 'x1^2 + x2 + x3^2', 'x1')
_C0_5_11 = manifold(3, '0.5*x2 + 0.5*x3^2')
_CURVE = poly(1, '0', '-x1^2', 'x1')


def _curve_point(t):
    return [0.0, -t * t, t]


def _example_5_11():
    main = smooth_plus(_F_5_11, indicator(_C0_5_11, 2))
    ts = (1e-1, 1e-2, 1e-3)
    queries = [{
        'op': 'reg',
        'u': _curve_point(t),
        'y': [0.0, 0.0]
    } for t in ts]
    queries += [
        {'op': 'sufficient', 'condition': 'indicator_polyhedral',
         'u': [0.0, 0.0, 0.0], 'w': [0.0, 0.0, 1.0]},
        {'op': 'sufficient', 'condition': 'indicator_nonpolyhedral',
         'u': [0.0, 0.0, 0.0], 'w': [0.0, 0.0, 1.0]},
        {'op': 'curve', 'u': [0.0, 0.0, 0.0], 'y': [0.0, 0.0],
         'curve': _CURVE},
    ]
    return Fixture(
        name='example_5_11',
        reference='Example 5.11',
        description='F + indicator of a curved constraint: Reg vanishes '
        'along a tangent curve although the polyhedral formula holds',
        problem=_problem('example_5_11', 'mapping', {'mappings': {
            'main': main
        }}, queries),
        expectations=[
            expect(0, 'value', at_most=1e-8),
            expect(1, 'value', at_most=1e-8),
            expect(2, 'value', at_most=1e-8),
            expect(3, equals='Refused'),
            expect(3, 'details/formula_holds', equals=True),
            expect(4, equals='Refused'),
            expect(4, 'trace/1', equals='Eq(5.6)'),
            expect(5, 'verdict/status', equals='NumericEvidenceAgainst'),
        ])


def _example_5_12():
    sigma = smooth_plus(_F_5_11, indicator(_C0_5_11, 2))
    G = poly(3, '-x1', '-x2', '-x3', 'x1^2 + x2 + x3^2', 'x1')
    D0 = manifold(5, '0.5*x2 + 0.5*x3^2', 'x4', 'x5')
    constraint = smooth_plus(G, constant(D0, 3))
    zero3, zero5 = [0.0] * 3, [0.0] * 5
    direction = [0.0, 0.0, 1.0]
    queries = [
        {'op': 'sufficient', 'mapping': 'constraint',
         'condition': 'polyhedral_constraint', 'u': zero3, 'y': zero5,
         'w': direction},
        {'op': 'sufficient', 'mapping': 'constraint',
         'condition': 'nonpolyhedral_constraint', 'u': zero3, 'y': zero5,
         'w': direction},
    ]
    ts = (1e-1, 1e-2, 1e-3)
    queries += [{
        'op': 'reg_chain',
        'mapping': 'sigma',
        'u': _curve_point(t),
        'y': [0.0, 0.0]
    } for t in ts]
    queries += [{
        'op': 'reg',
        'mapping': 'constraint',
        'u': _curve_point(t),
        'y': zero5
    } for t in ts]
    expectations = [
        expect(0, equals='Refused'),
        expect(0, 'details/formula_holds', equals=True),
        expect(1, equals='SufficientConditionFails'),
    ]
    for index in range(2, 5):
        expectations += [
            expect(index, 'sigma', at_most=1e-8),
            expect(index, 'constraint', at_most=1e-8),
            expect(index, 'ordered', equals=True),
        ]
    expectations += [expect(index, 'value', at_most=1e-8)
                     for index in range(5, 8)]
    return Fixture(
        name='example_5_12',
        reference='Example 5.12',
        description='the constraint form G(u) + D0 of Example 5.11: the '
        'polyhedral formula holds but the nonpolyhedral one fails',
        problem=_problem('example_5_12', 'mapping', {
            'mappings': {
                'sigma': sigma,
                'constraint': constraint
            }
        }, queries),
        expectations=expectations)


def _square():
    main = single_valued(poly(1, 'x1^2'))
    queries = [{'op': 'reg', 'u': [u], 'y': [u * u]}
               for u in (0.25, -0.25, 1.0, -1.0)]
    queries += [
        {'op': 'metric2', 'u': [0.0], 'y': [0.0], 'w': [1.0]},
        {'op': 'metric2', 'u': [0.0], 'y': [0.0], 'w': [-1.0]},
        {'op': 'gfrerer', 'u': [0.0], 'y': [0.0], 'w': [1.0], 'eta': [0.0]},
        {'op': 'equivalence', 'u': [0.0], 'y': [0.0], 'w': [1.0]},
        {'op': 'classic2', 'u': [0.0], 'w': [1.0]},
    ]
    return Fixture(
        name='square',
        reference='Remark 5.2',
        description='S(u) = u^2: Reg = 2|u|, metrically 2-regular at 0 with '
        'modulus 1/2',
        problem=_problem('square', 'mapping', {'mappings': {
            'main': main
        }}, queries),
        expectations=[
            expect(0, 'value', approx=0.5, tol=1e-9),
            expect(1, 'value', approx=0.5, tol=1e-9),
            expect(2, 'value', approx=2.0, tol=1e-9),
            expect(3, 'value', approx=2.0, tol=1e-9),
            expect(4, affirms=True),
            expect(4, 'modulus', approx=0.5, tol=1e-3),
            expect(5, affirms=True),
            expect(5, 'modulus', approx=0.5, tol=1e-3),
            expect(6, affirms=True),
            expect(6, 'modulus', approx=0.5, tol=1e-3),
            expect(7, 'consistent', equals=True),
            expect(8, equals='CertifiedYes'),
        ])


# constraint and variational systems


def _identity_t():
    return single_valued(poly(1, 'x1'))


def _cs_regular():
    payload = {'phi': poly(2, 'x1 - x2'), 'omega': polyhedral(1, {}),
               'T': _identity_t()}
    queries = [
        {'op': 'cs_metric_regularity', 'x': [0.0], 'sigma': [0.0]},
        {'op': 'cs_metric2_polyhedral', 'x': [0.0], 'sigma': [0.0],
         'direction': [1.0, 1.0]},
        {'op': 'cs_metric2_unconstrained', 'x': [0.0], 'sigma': [0.0],
         'direction': [1.0, 1.0]},
    ]
    return Fixture(
        name='cs_regular',
        reference='Proposition 7.1',
        description='x - sigma = 0 with T the identity: regular, and the '
        'separation hypothesis of the unconstrained test fails',
        problem=_problem('cs_regular', 'constraint_system', payload,
                         queries),
        expectations=[
            expect(0, equals='CertifiedYes'),
            expect(0, 'details/(c)', equals=True),
            expect(1, equals='SufficientConditionHolds'),
            expect(2, 'refused', equals='separation'),
        ])


def _cs_square():
    payload = {'phi': poly(2, 'x1^2'), 'omega': polyhedral(1, {}),
               'T': _identity_t()}
    queries = [
        {'op': 'cs_metric_regularity', 'x': [0.0], 'sigma': [0.0]},
        {'op': 'cs_metric2_unconstrained', 'x': [0.0], 'sigma': [0.0],
         'direction': [1.0, 0.0]},
        {'op': 'cs_metric2_polyhedral', 'x': [0.0], 'sigma': [0.0],
         'direction': [1.0, 0.0]},
    ]
    return Fixture(
        name='cs_square',
        reference='Proposition 7.3',
        description='x^2 = 0 with sigma free of Phi: not regular, but '
        '2-regular relative to the x axis',
        problem=_problem('cs_square', 'constraint_system', payload, queries),
        expectations=[
            expect(0, equals='CertifiedNo'),
            expect(1, equals='SufficientConditionHolds'),
            expect(2, equals='SufficientConditionHolds'),
        ])


def _cs_degenerate():
    payload = {'phi': poly(2, 'x1^2'), 'omega': half_line(),
               'T': _identity_t()}
    queries = [
        {'op': 'cs_metric_regularity', 'x': [0.0], 'sigma': [0.0]},
        {'op': 'cs_metric2_polyhedral', 'x': [0.0], 'sigma': [0.0],
         'direction': [1.0, 0.0]},
        {'op': 'cs_metric2_unconstrained', 'x': [0.0], 'sigma': [0.0],
         'direction': [1.0, 0.0]},
    ]
    return Fixture(
        name='cs_degenerate',
        reference='Proposition 7.2',
        description='x^2 = 0 over x in R_+: the normal cone does not rescue '
        'the vanishing gradient',
        problem=_problem('cs_degenerate', 'constraint_system', payload,
                         queries),
        expectations=[
            expect(0, equals='CertifiedNo'),
            expect(1, equals='SufficientConditionFails'),
            expect(2, 'refused', equals='unconstrained'),
        ])


def _kkt(name, f, reference, description, solution, expectations):
    payload = {'f': f, 'g': poly(1, 'x1'), 'M': poly(1, '1'),
               'C0': half_line(-1.0)}
    x, lam, zeta = solution
    point = {'x': [x], 'lam': [lam], 'zeta': [zeta]}
    queries = [
        dict(op='vs_metric_regularity', **point),
        dict(op='vs_T_regularity', **point),
        dict(op='vs_metric2', direction=[1.0, 0.0], **point),
    ]
    return Fixture(name=name,
                   reference=reference,
                   description=description,
                   problem=_problem(name, 'variational_system', payload,
                                    queries),
                   expectations=expectations)


def _kkt_strict():
    return _kkt(
        'kkt_strict', poly(1, 'x1 - 1'), 'Proposition 8.2',
        'min x^2/2 - x subject to x <= 0, multiplier 1 at the solution 0',
        (0.0, 1.0, 0.0), [
            expect(0, equals='CertifiedYes'),
            expect(1, equals='CertifiedYes'),
            expect(2, equals='SufficientConditionHolds'),
        ])


def _kkt_degenerate():
    return _kkt(
        'kkt_degenerate', poly(1, '0'), 'Proposition 8.2',
        'f = 0 with a weakly active constraint: the multiplier mapping is '
        'not regular', (0.0, 0.0, 0.0), [
            expect(0, equals='CertifiedNo'),
            expect(0, 'details/compiled', equals='CertifiedNo'),
            expect(0, 'witness/z', present=True),
            expect(1, equals='CertifiedYes'),
            expect(2, equals='SufficientConditionFails'),
        ])


FIXTURES: Dict[str, Fixture] = {
    fixture.name: fixture for fixture in (
        _example_3_5(), _example_3_6(), _example_3_7(), _example_5_9(),
        _example_5_11(), _example_5_12(), _square(), _cs_regular(),
        _cs_square(), _cs_degenerate(), _kkt_strict(), _kkt_degenerate())
}


def fixture_names() -> List[str]:
    return list(FIXTURES)


def get_fixture(name) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f'unknown fixture {name!r}, known: {fixture_names()}')
