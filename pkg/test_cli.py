# -*- coding: utf-8 -*-
import json
import tempfile
from pathlib import Path

from lsvreg.__main__ import main
from lsvreg.cli import (EXIT_INCONSISTENT, EXIT_INVALID, EXIT_OK, ProblemFile,
                        Report, check_expectation, corpus, run)
from lsvreg.exceptions import InvalidProblemError
from lsvreg.fixtures import FIXTURES, Fixture


def square_problem(**changes):
    problem = json.loads(json.dumps(FIXTURES['square']['problem']))
    problem.update(changes)
    return problem


def write(folder, name, problem):
    path = Path(folder) / name
    path.write_text(json.dumps(problem), encoding='utf-8')
    return str(path)


def test_corpus_passes():
    with tempfile.TemporaryDirectory() as folder:
        output = Path(folder) / 'corpus.json'
        assert main(['--corpus', '-o', str(output)]) == EXIT_OK
        saved = json.loads(output.read_text(encoding='utf-8'))
        assert len(saved['fixtures']) == len(FIXTURES)
        assert all(item['passed'] for item in saved['fixtures'])


def test_corpus_mismatch():
    square = FIXTURES['square']
    expectations = list(square['expectations'])
    expectations[0] = dict(expectations[0], approx=0.7)
    broken = Fixture(**dict(square, expectations=expectations))
    result = corpus(fixtures={'square': broken})
    assert not result.passed and result.exit_code == EXIT_INCONSISTENT
    assert 'MISMATCH' in result.summary()
    try:
        corpus(['nothing_here'])
        raise AssertionError('unknown fixture names are rejected')
    except InvalidProblemError as err:
        assert err.location == 'corpus'


def test_expectation_paths():
    report = Report(results=[{
        'query': 0,
        'op': 'classic2',
        'outcome': 'ok',
        'result': {
            'details': {'Eq(5.7)': True, 'Eq(6.2)': False},
            'trace': ['Eq(6.2)', 'Eq(6.3)']
        }
    }])
    assert check_expectation(report, {'query': 0, 'path': 'details/Eq(5.7)',
                                      'equals': True}) == ''
    assert check_expectation(report, {'query': 0, 'path': 'trace/1',
                                      'equals': 'Eq(6.3)'}) == ''
    mismatch = check_expectation(report, {'query': 0,
                                          'path': 'details/Eq(6.2)',
                                          'equals': True})
    assert 'details/Eq(6.2)' in mismatch
    assert check_expectation(report, {'query': 0, 'path': 'details/Eq(9.9)',
                                      'equals': True}).endswith('missing')
    result = corpus(['example_5_9'])
    assert result.passed, result.summary()


def test_canonical_round_trip():
    for name in ('cs_regular', 'kkt_strict', 'example_3_5', 'square'):
        problem = ProblemFile.parse(FIXTURES[name]['problem'])
        canonical = problem.canonical()
        assert ProblemFile.parse(canonical).canonical() == canonical, name


def test_reports_are_deterministic():
    with tempfile.TemporaryDirectory() as folder:
        path = write(folder, 'square.json', square_problem())
        first = run(path, flags={'seed': 3})
        second = run(path, flags={'seed': 3})
        assert first.payload() == second.payload()
        assert first.exit_code == EXIT_OK
        assert first['seed'] == 3
        assert len(first['timings']) == len(first['results'])
        output = Path(folder) / 'report.json'
        assert main([path, '-o', str(output), '--seed', '3']) == EXIT_OK
        saved = json.loads(output.read_text(encoding='utf-8'))
        assert saved['results'] == first.payload()['results']


def test_parse_errors():
    payload = {'mappings': {'main': {'type': 'single_valued',
                                     'F': {'type': 'poly', 'in_dim': 1,
                                           'components': ['x1 +']}}}}
    try:
        ProblemFile.parse(square_problem(payload=payload))
        raise AssertionError('x1 + is not a polynomial')
    except InvalidProblemError as err:
        assert err.location.startswith('payload')
        assert 'component 0' in err.location
    try:
        ProblemFile.parse(square_problem(queries=[{'op': 'warp'}]))
        raise AssertionError('warp is not an op')
    except InvalidProblemError as err:
        assert err.location == 'query 0'
    try:
        ProblemFile.parse(square_problem(schema_version=7))
        raise AssertionError('schema 7 does not exist')
    except InvalidProblemError as err:
        assert err.location == 'schema_version'
    try:
        ProblemFile.parse('{"kind": ')
        raise AssertionError('truncated JSON')
    except InvalidProblemError as err:
        assert err.location.startswith('line 1')
    with tempfile.TemporaryDirectory() as folder:
        path = write(folder, 'bad.json', square_problem(payload=payload))
        assert main([path]) == EXIT_INVALID


def test_query_errors_fold_into_exit_code():
    # (1, 0) is off the graph of u^2
    queries = [{'op': 'reg', 'u': [1.0], 'y': [0.0]},
               {'op': 'reg', 'u': [1.0], 'y': [1.0]}]
    with tempfile.TemporaryDirectory() as folder:
        path = write(folder, 'off.json', square_problem(queries=queries))
        report = run(path)
    assert [entry['outcome'] for entry in report['results']] == ['invalid', 'ok']
    assert 'BasepointOffGraph' in report['results'][0]['error']
    assert report.exit_code == EXIT_INVALID
    inconsistent = Report(results=[{
        'query': 0,
        'op': 'reg',
        'outcome': 'inconsistent',
        'error': 'criteria disagree'
    }])
    assert inconsistent.exit_code == EXIT_INCONSISTENT


def test_refusals_are_results():
    problem = FIXTURES['cs_regular']['problem']
    report = run(json.dumps(problem))
    assert report.exit_code == EXIT_OK
    refused = report['results'][2]
    assert refused['outcome'] == 'refused'
    assert refused['result']['refused'] == 'separation'
    assert 'refused' in report.summary()


if __name__ == "__main__":
    for case in (
            test_corpus_passes,
            test_corpus_mismatch,
            test_expectation_paths,
            test_canonical_round_trip,
            test_reports_are_deterministic,
            test_parse_errors,
            test_query_errors_fold_into_exit_code,
            test_refusals_are_results,
    ):
        case()
        print(case.__name__, 'ok')
