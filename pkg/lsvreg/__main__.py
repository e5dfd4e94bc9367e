# -*- coding: utf-8 -*-

import logging
import sys
from argparse import ArgumentParser

from .cli import EXIT_INVALID, corpus, run
from .config import GlobalConfig
from .exceptions import InvalidProblemError
from .fixtures import FIXTURES


def _parser():
    parser = ArgumentParser(
        prog='lsvreg',
        description='Metric regularity and metric 2-regularity checks of '
        'structured set-valued mappings.')
    parser.add_argument('problem', nargs='?', help='problem file (JSON)')
    parser.add_argument('-o', '--output', help='write the report here')
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--tol-lsv', type=float, default=None)
    parser.add_argument('--tol-lp', type=float, default=None)
    parser.add_argument('--max-patterns', type=int, default=None)
    parser.add_argument('--numeric-only', action='store_true', default=None)
    parser.add_argument('--workers', type=int, default=1,
                        help='threads for the queries of one problem')
    parser.add_argument('--corpus', nargs='*', metavar='FIXTURE',
                        help='run the built-in fixtures (all by default)')
    parser.add_argument('--list', action='store_true',
                        help='list the built-in fixtures')
    parser.add_argument('-v', '--verbose', action='store_true')
    return parser


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format='%(asctime)s %(levelname)-5s [%(name)s] %(message)s')
    flags = {
        'seed': args.seed,
        'tol_lsv': args.tol_lsv,
        'tol_lp': args.tol_lp,
        'max_patterns': args.max_patterns,
        'numeric_only': args.numeric_only
    }
    if args.list:
        for name, fixture in FIXTURES.items():
            print(f'{name:<16} {fixture["reference"]:<18} '
                  f'{fixture["description"]}')
        return 0
    try:
        if args.corpus is not None:
            result = corpus(args.corpus or None, flags=flags)
            print(result.summary(), file=sys.stderr)
            if args.output:
                with open(args.output, 'w',
                          encoding=GlobalConfig.__encoding__) as f:
                    f.write(result.dumps(indent=2))
            return result.exit_code
        if not args.problem:
            parser.print_usage(sys.stderr)
            return EXIT_INVALID
        report = run(args.problem, flags=flags, output=args.output,
                     workers=args.workers)
    except InvalidProblemError as err:
        print(f'invalid problem: {err}', file=sys.stderr)
        return EXIT_INVALID
    if not args.output:
        print(report.dumps(indent=2))
    print(report.summary(), file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
