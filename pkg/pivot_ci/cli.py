#!/usr/bin/env python

import argparse
import csv
import json
import logging
import math
import os
import sys

from .censoring import (SCHEMA_VERSION, HybridTypeIScheme, LifeTestOutcome, NoMleExists, TypeIScheme, in_support, mle,
                        support_set)
from .families import binomial_family, exponential_family, truncated_location_family
from .harness import StudyConfig, run_coverage_study
from .pivot import interval, restricted_family

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DEGENERATE = 2
EXIT_NO_MLE = 3

EXPONENTIAL_MODELS = ('type1', 'hybrid')
LOCATION_MODELS = {'trunc-normal': 'normal', 'trunc-logistic': 'logistic'}
MODELS = EXPONENTIAL_MODELS + ('binomial', ) + tuple(LOCATION_MODELS)
LOG_LEVELS = ('debug', 'info', 'warning', 'error', 'critical')

log = logging.getLogger(__name__)


class CommandError(ValueError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """
    Reports usage errors with the validation exit code instead of argparse's default.
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, '{0}: error: {1}\n'.format(self.prog, message))


def _require(args, *names):
    missing = [name for name in names if getattr(args, name, None) is None]
    if missing:
        raise CommandError("Model '{0}' requires: {1}.".format(args.model, ', '.join('--' + m for m in missing)))


def _get_scheme(args):
    if args.model == 'hybrid':
        _require(args, 'n', 'T', 'r')
        return HybridTypeIScheme(args.n, args.T, args.r)
    _require(args, 'n', 'T')
    return TypeIScheme(args.n, args.T, args.d0)


def _get_family(args):
    if args.model in EXPONENTIAL_MODELS:
        family = exponential_family(_get_scheme(args))
    elif args.model == 'binomial':
        _require(args, 'n')
        family = binomial_family(args.n)
    else:
        family = truncated_location_family(LOCATION_MODELS[args.model], args.T1, args.T2, args.sigma)
    lower = getattr(args, 'lower', None)
    upper = getattr(args, 'upper', None)
    if lower is not None or upper is not None:
        space = family.space
        family = restricted_family(family,
                                   space.lower if lower is None else lower,
                                   space.upper if upper is None else upper)
    return family


def _parse_failures(value):
    if not value.strip():
        return []
    try:
        return [float(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise CommandError("Failure times must be comma-separated numbers.", value)


def _get_outcome(args):
    if args.data:
        with open(args.data) as f:
            outcome = LifeTestOutcome.load(f)
        for name in ('n', 'T', 'r'):
            given = getattr(args, name)
            if given is not None and given != getattr(outcome, name):
                raise CommandError("Data file lists {0}={1}, but --{0} is {2}.".format(
                    name, getattr(outcome, name), given))
            setattr(args, name, getattr(outcome, name))
        if (outcome.r is not None) != (args.model == 'hybrid'):
            raise CommandError("Data file does not match model '{0}'.".format(args.model))
        return outcome
    if args.failures is None:
        raise CommandError("Either --failures or --data is required.")
    scheme = _get_scheme(args)
    r = scheme.r if isinstance(scheme, HybridTypeIScheme) else None
    return LifeTestOutcome.from_failures(_parse_failures(args.failures), scheme.n, scheme.T, r)


def _get_point(args):
    if args.model == 'binomial':
        _require(args, 'x')
        return args.x
    _require(args, 'y')
    return args.y


def _get_statistic(args):
    if args.model in EXPONENTIAL_MODELS:
        outcome = _get_outcome(args)
        scheme = _get_scheme(args)
        estimate = mle(outcome, scheme)
        log.info("MLE %s from %s failures.", estimate.theta_hat, estimate.d)
        if not in_support(estimate.theta_hat, scheme):
            log.warning("MLE %s lies outside the support %s.", estimate.theta_hat, support_set(scheme))
        return estimate.theta_hat
    return _get_point(args)


def _get_alphas(args):
    alpha1 = args.alpha / 2 if args.alpha1 is None else args.alpha1
    alpha2 = args.alpha / 2 if args.alpha2 is None else args.alpha2
    return alpha1, alpha2


class Renderer(object):
    """
    Formats records as JSON, CSV, or plain text. Numbers are written with ``precision`` significant digits; infinite
    values become ``inf`` in text formats and ``null`` in JSON.
    """
    def __init__(self, output_format, precision, stream=None):
        self._format = output_format
        self._precision = precision
        self._stream = stream or sys.stdout

    def format_value(self, value):
        if value is None:
            return ''
        if isinstance(value, bool):
            return str(value).lower()
        if isinstance(value, float):
            if math.isinf(value):
                return 'inf' if value > 0 else '-inf'
            return '{0:.{1}g}'.format(value, self._precision)
        return str(value)

    def _json_value(self, value):
        if isinstance(value, float):
            if math.isinf(value) or math.isnan(value):
                return None
            return float('{0:.{1}g}'.format(value, self._precision))
        if isinstance(value, (list, tuple)):
            return [self._json_value(v) for v in value]
        return value

    def emit(self, record, columns):
        """
        :param record: Values by name.
        :type record: dict
        :param columns: Names written in CSV and plain text, in order.
        :type columns: list[str]
        """
        out = self._stream
        if self._format == 'json':
            data = {'schema_version': SCHEMA_VERSION}
            data.update((k, self._json_value(v)) for k, v in record.items())
            out.write(json.dumps(data))
            out.write('\n')
        elif self._format == 'csv':
            writer = csv.writer(out, lineterminator='\n')
            writer.writerow(columns)
            writer.writerow([self.format_value(record[c]) for c in columns])
        else:
            out.write(' '.join(self.format_value(record[c]) for c in columns))
            out.write('\n')

    def emit_rows(self, key, rows, columns):
        out = self._stream
        if self._format == 'json':
            data = {'schema_version': SCHEMA_VERSION,
                    key: [self._json_value(list(row)) for row in rows]}
            out.write(json.dumps(data))
            out.write('\n')
        elif self._format == 'csv':
            writer = csv.writer(out, lineterminator='\n')
            writer.writerow(columns)
            writer.writerows([self.format_value(v) for v in row] for row in rows)
        else:
            for row in rows:
                out.write('[{0}]\n'.format(', '.join(self.format_value(v) for v in row)))


def _get_renderer(args):
    return Renderer(args.format, args.precision)


def cmd_ci(args):
    y = _get_statistic(args)
    family = _get_family(args)
    alpha1, alpha2 = _get_alphas(args)
    result = interval(family, alpha1, alpha2, y)
    record = {
        'model': args.model,
        'statistic': float(y),
        'lower': result.lower,
        'upper': result.upper,
        'lower_infinite': result.lower_infinite,
        'upper_infinite': result.upper_infinite,
        'lower_clamped': result.lower_clamped,
        'upper_clamped': result.upper_clamped,
        'degenerate': result.degenerate,
        'alpha1': alpha1,
        'alpha2': alpha2,
    }
    columns = ['lower', 'upper'] if args.format == 'plain' else \
        ['statistic', 'lower', 'upper', 'lower_clamped', 'upper_clamped', 'degenerate']
    _get_renderer(args).emit(record, columns)
    if result.degenerate:
        print("interval degenerates at the parameter-space boundary", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_cdf(args):
    _require(args, 'theta')
    y = _get_point(args)
    value = _get_family(args).cdf(y, args.theta)
    _get_renderer(args).emit({'model': args.model, 'y': y, 'theta': args.theta, 'cdf': value}, ['cdf'])
    return EXIT_OK


def cmd_limits(args):
    family = _get_family(args)
    y = _get_point(args)
    record = {'model': args.model, 'y': y, 'limit_high': family.limit_high(y), 'limit_low': family.limit_low(y)}
    _get_renderer(args).emit(record, ['limit_high', 'limit_low'])
    return EXIT_OK


def cmd_support(args):
    if args.model not in EXPONENTIAL_MODELS:
        raise CommandError("Support sets are available for the exponential models only.")
    _get_renderer(args).emit_rows('intervals', support_set(_get_scheme(args)), ['lower', 'upper'])
    return EXIT_OK


def cmd_simulate(args):
    if args.model not in EXPONENTIAL_MODELS:
        raise CommandError("Coverage studies are available for the exponential models only.")
    alpha1, alpha2 = _get_alphas(args)
    config = StudyConfig(_get_scheme(args), args.theta, alpha1, alpha2, args.reps, args.seed, args.streams,
                         args.workers, widths=not args.skip_widths)
    report = run_coverage_study(config)
    if args.format == 'json':
        _get_renderer(args).emit({k: v for k, v in report._serialize().items() if k != 'schema_version'},
                                 list(report.CSV_COLUMNS))
    elif args.format == 'csv':
        report.write_csv(sys.stdout)
    else:
        renderer = _get_renderer(args)
        for column in report.CSV_COLUMNS + ('rejected', ):
            print('{0} {1}'.format(column, renderer.format_value(getattr(report, column))))
    return EXIT_OK


def _add_model_arguments(subparser, n_default=None, T_default=None):
    subparser.add_argument('--model', '-m', choices=MODELS, default='type1',
                           help="Statistical model. Default is 'type1'.")
    subparser.add_argument('--n', type=int, default=n_default,
                           help="Items on test (exponential models) or number of trials (binomial).")
    subparser.add_argument('--T', type=float, default=T_default, dest='T',
                           help="Termination time of the life-test.")
    subparser.add_argument('--r', type=int,
                           help="Early-stop failure count of a hybrid life-test.")
    subparser.add_argument('--d0', type=int, default=1,
                           help="Minimum number of failures the MLE distribution is conditioned on (type1 only).")
    subparser.add_argument('--T1', type=float, default=-math.inf,
                           help="Left truncation point of a truncated location family.")
    subparser.add_argument('--T2', type=float, default=math.inf,
                           help="Right truncation point of a truncated location family.")
    subparser.add_argument('--sigma', type=float, default=1.0,
                           help="Scale of the base distribution of a truncated location family.")
    subparser.add_argument('--x', type=int,
                           help="Observed number of successes (binomial).")


def _add_alpha_arguments(subparser):
    subparser.add_argument('--alpha', type=float, default=0.05,
                           help="Total error probability, split evenly between both endpoints unless --alpha1 or "
                                "--alpha2 are given.")
    subparser.add_argument('--alpha1', type=float,
                           help="Error probability assigned to the lower endpoint.")
    subparser.add_argument('--alpha2', type=float,
                           help="Error probability assigned to the upper endpoint.")


parser = ArgumentParser(description="Exact confidence intervals by pivoting the CDF, with coverage studies.")
parser.add_argument('--format', '-f', choices=('json', 'csv', 'plain'), default=os.getenv('PIVOTCI_FORMAT', 'plain'),
                    help="Output format. Can also be set using the environment variable PIVOTCI_FORMAT.")
parser.add_argument('--precision', type=int, default=int(os.getenv('PIVOTCI_PRECISION', '10')),
                    help="Significant digits of printed numbers. Can also be set using the environment variable "
                         "PIVOTCI_PRECISION.")
parser.add_argument('--log-level', '-l', type=str.lower, choices=LOG_LEVELS,
                    default=os.getenv('PIVOTCI_LOG_LEVEL', 'warning'),
                    help="Output log level. Can also be set using the environment variable PIVOTCI_LOG_LEVEL.")
subparsers = parser.add_subparsers(title='command', description="Type of operation to perform.")
parser_ci = subparsers.add_parser('ci', help="Computes an exact confidence interval from observed data.")
parser_ci.set_defaults(func=cmd_ci)
parser_cdf = subparsers.add_parser('cdf', help="Evaluates the CDF of the statistic at y for a parameter value.")
parser_cdf.set_defaults(func=cmd_cdf)
parser_limits = subparsers.add_parser('limits',
                                      help="Evaluates the limits of the CDF at y towards both ends of the parameter "
                                           "space, upper end first.")
parser_limits.set_defaults(func=cmd_limits)
parser_support = subparsers.add_parser('support', help="Lists the support of the MLE as disjoint intervals.")
parser_support.set_defaults(func=cmd_support)
parser_simulate = subparsers.add_parser('simulate',
                                        help="Runs a Monte Carlo study of coverage and of the probabilities of "
                                             "infinite and empty intervals.")
parser_simulate.set_defaults(func=cmd_simulate)
for subparser in [parser_ci, parser_cdf, parser_limits, parser_support]:
    _add_model_arguments(subparser)
_add_model_arguments(parser_simulate, n_default=10, T_default=1.0)
for subparser in [parser_ci, parser_cdf, parser_limits]:
    subparser.add_argument('--y', type=float,
                           help="Observed statistic or point of evaluation.")
parser_cdf.add_argument('--theta', type=float, help="Parameter value.")
parser_ci.add_argument('--failures',
                       help="Observed failure times, comma-separated. An empty string means no failures.")
parser_ci.add_argument('--data',
                       help="JSON file with a life-test record (n, T, r, d, stop_time, failures).")
parser_ci.add_argument('--lower', type=float,
                       help="Known lower bound of the parameter.")
parser_ci.add_argument('--upper', type=float,
                       help="Known upper bound of the parameter.")
for subparser in [parser_ci, parser_simulate]:
    _add_alpha_arguments(subparser)
parser_simulate.add_argument('--theta', type=float, default=1.0,
                             help="True mean lifetime used for simulation.")
parser_simulate.add_argument('--reps', type=int, default=100000,
                             help="Number of conditional replications.")
parser_simulate.add_argument('--seed', type=int, default=int(os.getenv('PIVOTCI_SEED', '0')),
                             help="Random seed. Can also be set using the environment variable PIVOTCI_SEED.")
parser_simulate.add_argument('--streams', type=int, default=1,
                             help="Number of independent random substreams the replications are split into.")
parser_simulate.add_argument('--workers', type=int, default=1,
                             help="Number of processes running the streams.")
parser_simulate.add_argument('--skip-widths', action='store_true',
                             help="Do not compute interval endpoints; coverage and the probabilities of infinite and "
                                  "empty intervals are still reported.")


def main(argv=None):
    args = parser.parse_args(argv)
    if 'func' not in args:
        parser.error("No command was set.")
    if args.log_level not in LOG_LEVELS:
        parser.error("Invalid log level: {0}".format(args.log_level))
    logging.basicConfig(format='%(asctime)s [%(levelname)s] %(name)s - %(message)s', level=args.log_level.upper())
    logging.captureWarnings(True)
    log.info("Running command %s.", args.func.__name__[len('cmd_'):])

    try:
        return args.func(args)
    except NoMleExists:
        print("MLE does not exist; no interval can be formed", file=sys.stderr)
        return EXIT_NO_MLE
    except (ValueError, OSError) as e:
        print("error: {0}".format(e.args[0] if e.args else e), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == '__main__':
    sys.exit(main())
