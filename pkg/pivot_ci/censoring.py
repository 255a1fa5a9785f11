import functools
import json
import logging
import math
import numbers
import warnings
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .gamma import D_MAX
from .mixture import FailureCountTail, GeneralizedGammaMixture, MixtureTerm, StabilityWarning, compensated_sum

VALIDATED_N = 25
SCHEMA_VERSION = 1

DUMP_KWARGS = {'ensure_ascii': False, 'check_circular': False}

log = logging.getLogger(__name__)


class SchemeError(ValueError):
    pass


class NoMleExists(Exception):
    """
    Raised when no failure has been observed, in which case the likelihood is monotone in ``theta`` and the MLE does
    not exist.
    """
    def __init__(self, message, outcome, *args):
        super(NoMleExists, self).__init__(message, outcome, *args)

    @property
    def outcome(self):
        return self.args[1]


def _check_positive_int(name, value):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < 1:
        raise SchemeError("{0} must be a positive integer.".format(name), value)


def _check_positive(name, value):
    if not value > 0 or math.isinf(value):
        raise SchemeError("{0} must be a positive finite number.".format(name), value)


def _check_sample_size(n):
    _check_positive_int('n', n)
    if n > D_MAX:
        raise SchemeError("Sample size exceeds the maximum gamma shape of {0}.".format(D_MAX), n)


@dataclass(frozen=True)
class TypeIScheme(object):
    """
    Life-test of ``n`` items terminated at the fixed time ``T``; distributions are conditioned on at least ``d0``
    failures.
    """
    n: int
    T: float
    d0: int = 1

    def __post_init__(self):
        _check_sample_size(self.n)
        _check_positive('T', self.T)
        _check_positive_int('d0', self.d0)
        if self.d0 > self.n:
            raise SchemeError("Conditioning threshold d0 must not exceed n.", self.d0)


@dataclass(frozen=True)
class HybridTypeIScheme(object):
    """
    Life-test of ``n`` items terminated at ``min(X_{r:n}, T)``. Distributions are conditioned on ``D >= 1``.
    """
    n: int
    T: float
    r: int

    def __post_init__(self):
        _check_sample_size(self.n)
        _check_positive('T', self.T)
        _check_positive_int('r', self.r)
        if self.r > self.n:
            raise SchemeError("Early-stop rank r must not exceed n.", self.r)

    @property
    def d0(self):
        return 1


MleEstimate = namedtuple('MleEstimate', ['theta_hat', 'd'])


@dataclass(frozen=True)
class LifeTestOutcome(object):
    """
    Observed result of a life-test: the ordered failure times up to ``stop_time``.

    The JSON form is ``{"schema_version", "n", "T", "r" (hybrid only), "d", "stop_time", "failures"}``.
    """
    n: int
    T: float
    failures: tuple
    stop_time: float
    r: int = None

    def __post_init__(self):
        object.__setattr__(self, 'failures', tuple(float(f) for f in self.failures))
        if len(self.failures) > self.n:
            raise SchemeError("More failures than items on test.", len(self.failures))
        if any(b < a for a, b in zip(self.failures, self.failures[1:])):
            raise SchemeError("Failure times must be ordered.", self.failures)
        if self.failures and (self.failures[0] <= 0 or self.failures[-1] > self.stop_time):
            raise SchemeError("Failure times must lie in (0, stop_time].", self.failures)
        if self.stop_time > self.T:
            raise SchemeError("Stop time must not exceed T.", self.stop_time)
        if self.r is None:
            if self.stop_time != self.T:
                raise SchemeError("Type-I tests stop at T.", self.stop_time)
            return
        d = len(self.failures)
        if d > self.r:
            raise SchemeError("Hybrid test lists more failures than its early-stop rank r.", d)
        if d == self.r and self.stop_time != self.failures[-1]:
            raise SchemeError("Hybrid test reaching r failures stops at the r-th failure.", self.stop_time)
        if d < self.r and self.stop_time != self.T:
            raise SchemeError("Hybrid test with fewer than r failures stops at T.", self.stop_time)

    @property
    def d(self):
        return len(self.failures)

    @property
    def scheme(self):
        if self.r is None:
            return TypeIScheme(self.n, self.T)
        return HybridTypeIScheme(self.n, self.T, self.r)

    @classmethod
    def from_failures(cls, failures, n, T, r=None):
        """
        Builds an outcome from raw failure times. For hybrid tests the stop time is the ``r``-th failure if it
        occurred before ``T``; failures past that point cannot have been observed and are dropped.

        :param failures: Failure times in any order.
        :type failures: collections.abc.Iterable[float]
        :param n: Number of items on test.
        :type n: int
        :param T: Termination time.
        :type T: float
        :param r: Early-stop rank for hybrid tests.
        :type r: int | NoneType
        :rtype: LifeTestOutcome
        """
        ordered = sorted(float(f) for f in failures)
        if ordered and ordered[-1] > T:
            raise SchemeError("Failure times must not exceed T.", ordered[-1])
        stop_time = T
        if r is not None and len(ordered) >= r:
            if len(ordered) > r:
                log.info("Dropping %s failures observed after the %s-th failure.", len(ordered) - r, r)
            ordered = ordered[:r]
            stop_time = ordered[-1]
        return cls(n, T, tuple(ordered), stop_time, r)

    def _serialize(self):
        data = {
            'schema_version': SCHEMA_VERSION,
            'n': self.n,
            'T': self.T,
            'd': self.d,
            'stop_time': self.stop_time,
            'failures': list(self.failures),
        }
        if self.r is not None:
            data['r'] = self.r
        return data

    @classmethod
    def _load(cls, data):
        if not isinstance(data, dict):
            raise ValueError("Unexpected object type.", type(data).__name__)
        try:
            n, T, failures, r = data['n'], data['T'], data['failures'], data.get('r')
        except KeyError as e:
            raise ValueError("Missing field in life-test record.", e.args[0])
        if 'stop_time' in data:
            stop_time = data['stop_time']
        elif r is not None and len(failures) >= r:
            raise ValueError("Hybrid record with r failures must give its stop_time.", r)
        else:
            stop_time = T
        outcome = cls(n, T, failures, stop_time, r)
        if 'd' in data and data['d'] != outcome.d:
            raise ValueError("Failure count does not match the listed failures.", data['d'])
        return outcome

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


def make_generator(seed, stream=0):
    """
    Returns a counter-based generator for the substream ``stream`` of ``seed``. Distinct streams of the same seed are
    statistically independent.

    :rtype: numpy.random.Generator
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, ))
    return np.random.Generator(np.random.Philox(sequence))


def _as_generator(rng_seed, stream=0):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return make_generator(rng_seed, stream)


def _exponential_draws(rng, theta, size):
    _check_positive('theta', theta)
    return -theta * np.log1p(-rng.random(size))


def simulate_type1(scheme, theta, rng_seed, stream=0):
    """
    Simulates a type-I censored life-test with exponential lifetimes of mean ``theta``.

    :param scheme: Test scheme.
    :type scheme: TypeIScheme
    :param theta: Mean lifetime.
    :type theta: float
    :param rng_seed: Seed, or a generator to draw from.
    :type rng_seed: int | numpy.random.Generator
    :param stream: Substream index used with an integer seed.
    :type stream: int
    :rtype: LifeTestOutcome
    """
    x = np.sort(_exponential_draws(_as_generator(rng_seed, stream), theta, scheme.n))
    failures = x[x <= scheme.T]
    return LifeTestOutcome(scheme.n, scheme.T, tuple(failures.tolist()), scheme.T)


def simulate_hybrid(scheme, theta, rng_seed, stream=0):
    """
    Simulates a hybrid type-I censored life-test, stopping at the ``r``-th failure or at ``T``, whichever comes
    first. Uses the same draws as :func:`simulate_type1` for the same seed.

    :type scheme: HybridTypeIScheme
    :rtype: LifeTestOutcome
    """
    x = np.sort(_exponential_draws(_as_generator(rng_seed, stream), theta, scheme.n))
    stop_time = min(float(x[scheme.r - 1]), scheme.T)
    failures = x[x <= stop_time]
    return LifeTestOutcome(scheme.n, scheme.T, tuple(failures.tolist()), stop_time, scheme.r)


def simulate_batch(scheme, theta, size, rng):
    """
    Simulates ``size`` independent life-tests at once and returns their MLEs and failure counts. MLEs of tests
    without failures are ``nan``.

    :type scheme: TypeIScheme | HybridTypeIScheme
    :param rng: Generator to draw from.
    :type rng: numpy.random.Generator
    :rtype: (numpy.ndarray, numpy.ndarray)
    """
    x = np.sort(_exponential_draws(rng, theta, (size, scheme.n)), axis=1)
    if isinstance(scheme, HybridTypeIScheme):
        stop = np.minimum(x[:, scheme.r - 1], scheme.T)
    else:
        stop = np.full(size, float(scheme.T))
    observed = x <= stop[:, None]
    d = observed.sum(axis=1)
    total = np.where(observed, x, 0.0).sum(axis=1) + (scheme.n - d) * stop
    theta_hat = np.full(size, np.nan)
    np.divide(total, d, out=theta_hat, where=d > 0)
    return theta_hat, d


def mle(outcome, scheme=None):
    """
    Maximum likelihood estimate of the exponential mean: total time on test divided by the number of failures.

    :type outcome: LifeTestOutcome
    :param scheme: Optional scheme the outcome is checked against.
    :type scheme: TypeIScheme | HybridTypeIScheme | NoneType
    :rtype: MleEstimate
    :raises NoMleExists: If no failure was observed.
    :raises SchemeError: If the outcome does not belong to ``scheme`` or has fewer failures than its conditioning
        threshold ``d0``, so that the conditional distribution of the MLE does not apply.
    """
    if scheme is not None and (scheme.n != outcome.n or scheme.T != outcome.T or
                               getattr(scheme, 'r', None) != outcome.r):
        raise SchemeError("Outcome does not belong to the given scheme.", scheme)
    if outcome.d == 0:
        raise NoMleExists("The MLE does not exist when no failures are observed.", outcome)
    if scheme is not None and outcome.d < scheme.d0:
        raise SchemeError("Observed {0} failures, fewer than the conditioning threshold d0={1}.".format(
            outcome.d, scheme.d0), outcome.d)
    total = math.fsum(outcome.failures) + (outcome.n - outcome.d) * outcome.stop_time
    return MleEstimate(total / outcome.d, outcome.d)


def _warn_unvalidated(n):
    if n > VALIDATED_N:
        warnings.warn("Sample size {0} exceeds the validated range n <= {1}; alternating sums lose precision and "
                      "results are best-effort.".format(n, VALIDATED_N), StabilityWarning, stacklevel=3)


@functools.lru_cache(maxsize=64)
def type1_mixture(scheme):
    """
    Conditional distribution of the MLE under type-I censoring, given ``D >= d0``, as a generalized gamma mixture.

    :type scheme: TypeIScheme
    :rtype: pivot_ci.mixture.GeneralizedGammaMixture
    """
    n, T = scheme.n, scheme.T
    _warn_unvalidated(n)
    terms = [MixtureTerm((-1) ** nu * math.comb(n, d) * math.comb(d, nu), d, (n - d + nu) * T, (n - d + nu) * T)
             for d in range(scheme.d0, n + 1)
             for nu in range(d + 1)]
    log.debug("Built type-I mixture with %s terms for %s.", len(terms), scheme)
    return GeneralizedGammaMixture(terms, FailureCountTail(n, T, scheme.d0))


@functools.lru_cache(maxsize=64)
def hybrid_mixture(scheme):
    """
    Conditional distribution of the MLE under hybrid type-I censoring, given ``D >= 1``, as a generalized gamma
    mixture.

    :type scheme: HybridTypeIScheme
    :rtype: pivot_ci.mixture.GeneralizedGammaMixture
    """
    n, T, r = scheme.n, scheme.T, scheme.r
    _warn_unvalidated(n)
    terms = [MixtureTerm((-1) ** nu * math.comb(n, d) * math.comb(d, nu), d, (n - d + nu) * T, (n - d + nu) * T)
             for d in range(1, r)
             for nu in range(d + 1)]
    terms.extend(MixtureTerm((-1) ** nu * r * math.comb(n, r) * math.comb(r - 1, nu - 1) / (n - r + nu),
                             r, (n - r + nu) * T, (n - r + nu) * T)
                 for nu in range(1, r + 1))
    terms.append(MixtureTerm(1, r, 0.0, 0.0))
    log.debug("Built hybrid mixture with %s terms for %s.", len(terms), scheme)
    return GeneralizedGammaMixture(terms, FailureCountTail(n, T, 1))


def _check_arguments(y, theta):
    if not y > 0:
        raise ValueError("Argument y must be positive.", y)
    if not theta > 0:
        raise ValueError("Parameter theta must be positive.", theta)


def cdf_type1(y, theta, scheme):
    """
    Conditional CDF of the MLE under type-I censoring, given ``D >= d0``.

    :param y: Point of evaluation.
    :type y: float
    :param theta: Exponential mean.
    :type theta: float
    :type scheme: TypeIScheme
    :rtype: float
    """
    _check_arguments(y, theta)
    if y >= scheme.n * scheme.T / scheme.d0:
        return 1.0
    return type1_mixture(scheme).evaluate(y, theta)


def cdf_hybrid(y, theta, scheme):
    """
    Conditional CDF of the MLE under hybrid type-I censoring, given ``D >= 1``. Equals one for ``y >= nT``.

    :type scheme: HybridTypeIScheme
    :rtype: float
    """
    _check_arguments(y, theta)
    if y >= scheme.n * scheme.T:
        return 1.0
    return hybrid_mixture(scheme).evaluate(y, theta)


def cdf(y, theta, scheme):
    if isinstance(scheme, HybridTypeIScheme):
        return cdf_hybrid(y, theta, scheme)
    return cdf_type1(y, theta, scheme)


def _model(scheme):
    # Mixture of the scheme and the right end of the MLE's range.
    if isinstance(scheme, HybridTypeIScheme):
        return hybrid_mixture(scheme), scheme.n * scheme.T
    return type1_mixture(scheme), scheme.n * scheme.T / scheme.d0


def cdf_array(y, theta, scheme):
    """
    Vectorized :func:`cdf` for arrays of points and parameters, broadcast against each other. Used for bulk evaluation
    in simulation studies; no stability warnings are issued.

    :type y: numpy.ndarray
    :type theta: numpy.ndarray | float
    :type scheme: TypeIScheme | HybridTypeIScheme
    :rtype: numpy.ndarray
    """
    y, theta = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(theta, dtype=float))
    if np.any(~(y > 0)):
        raise ValueError("Argument y must be positive.")
    if np.any(~(theta > 0)):
        raise ValueError("Parameter theta must be positive.")
    mixture, upper = _model(scheme)
    return np.where(y >= upper, 1.0, mixture.evaluate_array(y, theta))


def limit_at_infinity_array(y, scheme):
    """
    Vectorized :func:`limit_at_infinity`.

    :rtype: numpy.ndarray
    """
    y = np.asarray(y, dtype=float)
    mixture, upper = _model(scheme)
    return np.where(y >= upper, 1.0, mixture.limit_at_infinity_array(y))


def limit_at_infinity_type1(y, scheme):
    """
    Limit of :func:`cdf_type1` as ``theta`` grows without bound. Zero up to ``(n - d0)T/d0``, continuous and strictly
    increasing up to ``nT/d0``, where it reaches one.

    :type y: float
    :type scheme: TypeIScheme
    :rtype: float
    """
    n, T, d0 = scheme.n, scheme.T, scheme.d0
    if y <= (n - d0) * T / d0:
        return 0.0
    if y > n * T / d0:
        return 1.0
    z = y / T
    values = [(-1) ** nu * max(d0 * z - (n - d0 + nu), 0.0) ** d0 / (math.factorial(nu) * math.factorial(d0 - nu))
              for nu in range(d0)]
    total, _ = compensated_sum(values)
    return min(1.0, max(0.0, total))


def limit_at_infinity_hybrid(y, scheme):
    """
    Limit of :func:`cdf_hybrid` as ``theta`` grows without bound. Only the single-failure terms survive; for ``r > 1``
    it equals ``u`` at ``y = (n - 1 + u)T``, and for ``r = 1`` it equals ``u`` at ``y = nuT``.

    :type scheme: HybridTypeIScheme
    :rtype: float
    """
    if y >= scheme.n * scheme.T:
        return 1.0
    if y <= 0:
        return 0.0
    return hybrid_mixture(scheme).limit_at_infinity(y)


def limit_at_infinity(y, scheme):
    if isinstance(scheme, HybridTypeIScheme):
        return limit_at_infinity_hybrid(y, scheme)
    return limit_at_infinity_type1(y, scheme)


def limit_at_zero(y):
    """
    Limit of the conditional CDF as ``theta`` decreases to zero, for both models: one for every ``y > 0``.
    """
    if not y > 0:
        raise ValueError("Argument y must be positive.", y)
    return 1.0


def prob_d_at_least(theta, scheme):
    """
    Probability of at least ``d0`` failures before ``T``; strictly decreasing in ``theta``.

    :type theta: float
    :type scheme: TypeIScheme | HybridTypeIScheme
    :rtype: float
    """
    _check_positive('theta', theta)
    return FailureCountTail(scheme.n, scheme.T, scheme.d0)(theta)


def prob_d_equals(theta, scheme, d):
    _check_positive('theta', theta)
    p = -math.expm1(-scheme.T / theta)
    return math.comb(scheme.n, d) * p ** d * math.exp(-(scheme.n - d) * scheme.T / theta)


def _log_expm1(a):
    return a + math.log(-math.expm1(-a))


def envelope_bound(theta, scheme):
    """
    Upper bound on the probability that the exact interval has an infinite upper endpoint: the probability that the
    MLE falls where the limit of the CDF at infinity is positive.

    For ``d0 = 1`` (and hybrid tests with ``r > 1``) this is ``P(D = 1)/P(D >= 1) = n(e^{T/theta} - 1)/(e^{nT/theta}
    - 1)``.
    """
    _check_positive('theta', theta)
    n, T = scheme.n, scheme.T
    if isinstance(scheme, HybridTypeIScheme):
        if scheme.r == 1:
            return 1.0
    elif scheme.d0 > 1:
        threshold = (n - scheme.d0) * T / scheme.d0
        if threshold <= 0:
            return 1.0
        return 1.0 - cdf_type1(threshold, theta, scheme)
    if n == 1:
        return 1.0
    return min(1.0, n * math.exp(_log_expm1(T / theta) - _log_expm1(n * T / theta)))


def support_set(scheme):
    """
    Support of the conditional distribution of the MLE as a list of disjoint closed intervals, in ascending order.

    For type-I tests this is the union of ``[(n - d)T/d, nT/d]`` over ``d0 <= d <= n``, which is in general not
    connected. Hybrid tests add ``[0, nT/r]`` for tests stopped at the ``r``-th failure.

    :type scheme: TypeIScheme | HybridTypeIScheme
    :rtype: list[(float, float)]
    """
    n, T = scheme.n, scheme.T
    if isinstance(scheme, HybridTypeIScheme):
        pieces = [((n - d) * T / d, n * T / d) for d in range(1, scheme.r)]
        pieces.append((0.0, n * T / scheme.r))
    else:
        pieces = [((n - d) * T / d, n * T / d) for d in range(scheme.d0, n + 1)]
    pieces.sort()
    merged = [pieces[0]]
    for lo, hi in pieces[1:]:
        last_lo, last_hi = merged[-1]
        if lo <= last_hi:
            merged[-1] = (last_lo, max(last_hi, hi))
        else:
            merged.append((lo, hi))
    return merged


def in_support(y, scheme):
    return any(lo <= y <= hi for lo, hi in support_set(scheme))


def stirling_boundary_sum(d0):
    """
    ``sum((-1)**(d0 - k) * k**d0 / ((d0 - k)! k!) for k in 1..d0)``, the value of the limit at infinity at the right
    end of its range. It is the Stirling number of the second kind ``S(d0, d0) = 1``.
    """
    _check_positive_int('d0', d0)
    values = [(-1) ** (d0 - k) * k ** d0 / (math.factorial(d0 - k) * math.factorial(k)) for k in range(1, d0 + 1)]
    total, _ = compensated_sum(values)
    return total
