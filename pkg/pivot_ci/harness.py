import csv
import functools
import json
import logging
import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.stats import binom

from .censoring import (DUMP_KWARGS, SCHEMA_VERSION, SchemeError, cdf, cdf_array, envelope_bound,
                        limit_at_infinity_array, make_generator, simulate_batch)
from .families import binomial_family
from .pivot import interval_discrete, solve_cdf_equation_array, theta_star

# Replications classified at once; bounds the memory of the term matrices.
CHUNK_SIZE = 8192

log = logging.getLogger(__name__)

NonexistenceEstimate = namedtuple('NonexistenceEstimate', ['frequency', 'analytic', 'standard_error', 'bound'])
CoverageEstimate = namedtuple('CoverageEstimate', ['coverage', 'standard_error', 'replications'])
_StreamTally = namedtuple('_StreamTally', ['covered', 'infinite_upper', 'empty', 'widths', 'count', 'rejected'])
_ChunkTally = namedtuple('_ChunkTally', ['covered', 'infinite_upper', 'empty', 'widths'])


@dataclass(frozen=True)
class StudyConfig(object):
    """
    Settings of a coverage study. Replications are split evenly across ``streams``, each of which draws from its own
    substream of ``seed``; ``workers > 1`` runs streams in separate processes without changing the result.
    With ``widths`` unset, no interval endpoints are computed and the mean width is not reported.
    """
    scheme: object
    theta_true: float
    alpha1: float = 0.025
    alpha2: float = 0.025
    replications: int = 10000
    seed: int = 0
    streams: int = 1
    workers: int = 1
    widths: bool = True

    def __post_init__(self):
        if not self.theta_true > 0:
            raise SchemeError("True parameter must be positive.", self.theta_true)
        if not (self.alpha1 > 0 and self.alpha2 > 0 and self.alpha1 + self.alpha2 < 1):
            raise SchemeError("Require alpha1, alpha2 > 0 and alpha1 + alpha2 < 1.", self.alpha1, self.alpha2)
        if self.replications < 1:
            raise SchemeError("At least one replication is required.", self.replications)
        if self.streams < 1 or self.workers < 1:
            raise SchemeError("Streams and workers must be positive.", self.streams, self.workers)

    @property
    def condition_d0(self):
        return self.scheme.d0

    def stream_quotas(self):
        base, extra = divmod(self.replications, self.streams)
        return [base + 1 if i < extra else base for i in range(self.streams)]


@dataclass(frozen=True)
class StudyReport(object):
    """
    Result of a coverage study. Width is averaged over proper intervals only, since the expected width of the exact
    interval is infinite; ``mean_finite_width`` is ``None`` if there were none.
    """
    coverage_hat: float
    coverage_se: float
    p_infty_hat: float
    p_empty_hat: float
    envelope_bound: float
    mean_finite_width: float
    proper_fraction: float
    replications_used: int
    rejected: int = 0

    CSV_COLUMNS = ('coverage_hat', 'coverage_se', 'p_infty_hat', 'p_empty_hat', 'envelope_bound',
                   'mean_finite_width', 'proper_fraction', 'replications_used')

    def _serialize(self):
        data = {'schema_version': SCHEMA_VERSION}
        data.update(asdict(self))
        return data

    @classmethod
    def _load(cls, data):
        if not isinstance(data, dict):
            raise ValueError("Unexpected object type.", type(data).__name__)
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})

    @classmethod
    def load(cls, file):
        return cls._load(json.load(file))

    @classmethod
    def loads(cls, s):
        return cls._load(json.loads(s))

    def dump(self, file):
        json.dump(self._serialize(), file, **DUMP_KWARGS)

    def dumps(self):
        return json.dumps(self._serialize(), **DUMP_KWARGS)

    def csv_row(self):
        return [getattr(self, column) for column in self.CSV_COLUMNS]

    def write_csv(self, file, header=True):
        writer = csv.writer(file, lineterminator='\n')
        if header:
            writer.writerow(self.CSV_COLUMNS)
        writer.writerow(['' if value is None else value for value in self.csv_row()])


def conditional_sample(scheme, theta, size, rng):
    """
    Draws MLEs of ``size`` life-tests conditionally on ``D >= d0`` by rejecting tests with fewer failures.

    :type scheme: pivot_ci.censoring.TypeIScheme | pivot_ci.censoring.HybridTypeIScheme
    :type theta: float
    :type size: int
    :type rng: numpy.random.Generator
    :return: Array of MLEs and the number of rejected tests.
    :rtype: (numpy.ndarray, int)
    """
    batches = [np.empty(0)]
    accepted = 0
    rejected = 0
    while accepted < size:
        theta_hat, d = simulate_batch(scheme, theta, size - accepted, rng)
        keep = d >= scheme.d0
        batches.append(theta_hat[keep])
        accepted += int(keep.sum())
        rejected += int((~keep).sum())
    return np.concatenate(batches)[:size], rejected


def _classify(config, y):
    # Coverage and nonexistence follow from F(y; theta) and its limit alone, since F is decreasing in theta:
    # theta is covered iff alpha2 <= F(y; theta) <= 1 - alpha1, the upper endpoint is infinite iff
    # limit_high(y) >= alpha2, and the interval is empty iff limit_high(y) >= 1 - alpha1.
    scheme = config.scheme
    values = cdf_array(y, config.theta_true, scheme)
    covered = (values >= config.alpha2) & (values <= 1 - config.alpha1)
    limits = limit_at_infinity_array(y, scheme)
    infinite_upper = limits >= config.alpha2
    empty = limits >= 1 - config.alpha1
    widths = np.empty(0)
    proper = y[~infinite_upper]
    if config.widths and len(proper):
        def _cdf(points, theta):
            return cdf_array(points, theta, scheme)

        lower = solve_cdf_equation_array(_cdf, proper, 1 - config.alpha1)
        upper = solve_cdf_equation_array(_cdf, proper, config.alpha2)
        widths = upper - lower
    return _ChunkTally(int(covered.sum()), int(infinite_upper.sum()), int(empty.sum()), widths)


def _run_stream(config, stream, quota):
    rng = make_generator(config.seed, stream)
    sample, rejected = conditional_sample(config.scheme, config.theta_true, quota, rng)
    chunks = [_classify(config, sample[start:start + CHUNK_SIZE]) for start in range(0, len(sample), CHUNK_SIZE)]
    log.info("Stream %s finished: %s replications, %s rejected.", stream, quota, rejected)
    widths = np.concatenate([np.empty(0)] + [c.widths for c in chunks])
    return _StreamTally(sum(c.covered for c in chunks), sum(c.infinite_upper for c in chunks),
                        sum(c.empty for c in chunks), widths, quota, rejected)


def run_coverage_study(config):
    """
    Estimates the coverage of the exact interval for the exponential mean, together with the probabilities that its
    upper endpoint is infinite and that it is empty. Deterministic for a fixed configuration.

    :type config: StudyConfig
    :rtype: StudyReport
    """
    quotas = config.stream_quotas()
    streams = range(config.streams)
    log.info("Running %s replications in %s streams.", config.replications, config.streams)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            tallies = list(executor.map(_run_stream, [config] * config.streams, streams, quotas))
    else:
        tallies = [_run_stream(config, stream, quota) for stream, quota in zip(streams, quotas)]

    count = sum(t.count for t in tallies)
    covered = sum(t.covered for t in tallies)
    infinite_upper = sum(t.infinite_upper for t in tallies)
    widths = np.concatenate([t.widths for t in tallies]).tolist()
    coverage = covered / count
    return StudyReport(
        coverage_hat=coverage,
        coverage_se=math.sqrt(coverage * (1 - coverage) / count),
        p_infty_hat=infinite_upper / count,
        p_empty_hat=sum(t.empty for t in tallies) / count,
        envelope_bound=envelope_bound(config.theta_true, config.scheme),
        mean_finite_width=math.fsum(widths) / len(widths) if widths else None,
        proper_fraction=(count - infinite_upper) / count,
        replications_used=count,
        rejected=sum(t.rejected for t in tallies),
    )


def estimate_nonexistence_probability(scheme, theta, u, replications, seed, stream=0):
    """
    Estimates the probability that ``F(y; theta) = u`` has no solution at the observed MLE, i.e. that the MLE is at
    least ``(n - 1 + u)T``, and reports the analytic value ``1 - F((n - 1 + u)T; theta)`` alongside. Both lie below
    ``1 - u``.

    :rtype: NonexistenceEstimate
    """
    if not 0 < u < 1:
        raise ValueError("Level u must lie in (0, 1).", u)
    threshold = (scheme.n - 1 + u) * scheme.T
    sample, _ = conditional_sample(scheme, theta, replications, make_generator(seed, stream))
    frequency = float(np.mean(sample >= threshold))
    return NonexistenceEstimate(frequency, 1.0 - cdf(threshold, theta, scheme),
                                math.sqrt(frequency * (1 - frequency) / replications), 1.0 - u)


class EmpiricalCdf(object):
    """
    Step-function CDF of a sample.

    :param sample: Observations in any order.
    :type sample: numpy.ndarray | list[float]
    """
    def __init__(self, sample):
        self._sample = np.sort(np.asarray(sample, dtype=float))
        if not len(self._sample):
            raise ValueError("Empirical CDF requires at least one observation.")

    def __len__(self):
        return len(self._sample)

    def __call__(self, y):
        return np.searchsorted(self._sample, y, side='right') / len(self._sample)

    @property
    def sample(self):
        return self._sample

    def ks_distance(self, cdf_func):
        """
        Kolmogorov-Smirnov distance to a continuous CDF.

        :param cdf_func: Function of one argument.
        :rtype: float
        """
        size = len(self._sample)
        values = np.array([cdf_func(y) for y in self._sample.tolist()])
        steps = np.arange(1, size + 1) / size
        return float(max(np.max(steps - values), np.max(values - (steps - 1.0 / size))))


def empirical_cdf(scheme, theta, replications, seed, stream=0):
    """
    Empirical CDF of MLEs from simulated life-tests conditioned on ``D >= d0``.

    :rtype: EmpiricalCdf
    """
    sample, rejected = conditional_sample(scheme, theta, replications, make_generator(seed, stream))
    log.debug("Empirical CDF from %s MLEs, %s tests rejected.", replications, rejected)
    return EmpiricalCdf(sample)


def exactness_frequency(family, theta, alpha, sample):
    """
    Fraction of a sample for which the extended pivot ``theta*(alpha, y)`` does not exceed ``theta``. For continuous
    families and samples drawn under ``theta`` it estimates exactly ``alpha``.

    :rtype: float
    """
    hits = sum(1 for y in np.asarray(sample).tolist() if theta_star(family, alpha, y) <= theta)
    return hits / len(sample)


@functools.lru_cache(maxsize=32)
def _binomial_intervals(n, alpha1, alpha2):
    family = binomial_family(n)
    return tuple(interval_discrete(family, alpha1, alpha2, x) for x in range(n + 1))


def binomial_coverage(n, p, alpha1, alpha2, replications=None, seed=0):
    """
    Coverage of the discrete exact interval for a binomial success probability, by enumeration over all counts or, if
    ``replications`` is given, by simulation.

    :rtype: CoverageEstimate
    """
    intervals = _binomial_intervals(n, alpha1, alpha2)
    covered = np.array([result.covers(p) for result in intervals])
    if replications is None:
        coverage = math.fsum(float(binom.pmf(x, n, p)) for x in range(n + 1) if covered[x])
        return CoverageEstimate(coverage, 0.0, None)
    counts = make_generator(seed).binomial(n, p, size=replications)
    coverage = float(np.mean(covered[counts]))
    return CoverageEstimate(coverage, math.sqrt(coverage * (1 - coverage) / replications), replications)