"""
Families of distributions prepared for pivoting: the MLE of the exponential mean under type-I and hybrid type-I
censoring, the binomial count, the normal mean, and truncated location families.
"""
import math
import numbers

import numpy as np
from scipy.special import log_ndtr
from scipy.stats import binom, norm

from .censoring import (HybridTypeIScheme, cdf_hybrid, cdf_type1, limit_at_infinity_hybrid, limit_at_infinity_type1,
                        limit_at_zero)
from .pivot import OutsideSupport, ParameterSpace, PivotedFamily

POSITIVE_HALF_LINE = ParameterSpace(0.0, math.inf)
REAL_LINE = ParameterSpace(-math.inf, math.inf)


def _identity(y):
    return y


def type1_family(scheme):
    """
    Conditional distribution of the MLE under type-I censoring, given ``D >= d0``.

    :type scheme: pivot_ci.censoring.TypeIScheme
    :rtype: pivot_ci.pivot.PivotedFamily
    """
    upper_y = scheme.n * scheme.T / scheme.d0

    def _validate(y):
        if not 0 < y <= upper_y:
            raise OutsideSupport("MLE must lie in (0, {0}] for this scheme.".format(upper_y), y)

    return PivotedFamily(
        cdf=lambda y, theta: cdf_type1(y, theta, scheme),
        limit_low=limit_at_zero,
        limit_high=lambda y: limit_at_infinity_type1(y, scheme),
        space=POSITIVE_HALF_LINE,
        guess=_identity,
        validate=_validate,
        name='type-I exponential (n={0}, T={1}, d0={2})'.format(scheme.n, scheme.T, scheme.d0),
    )


def hybrid_family(scheme):
    """
    Conditional distribution of the MLE under hybrid type-I censoring, given ``D >= 1``.

    :type scheme: pivot_ci.censoring.HybridTypeIScheme
    :rtype: pivot_ci.pivot.PivotedFamily
    """
    upper_y = scheme.n * scheme.T

    def _validate(y):
        if not 0 < y <= upper_y:
            raise OutsideSupport("MLE must lie in (0, {0}] for this scheme.".format(upper_y), y)

    return PivotedFamily(
        cdf=lambda y, theta: cdf_hybrid(y, theta, scheme),
        limit_low=limit_at_zero,
        limit_high=lambda y: limit_at_infinity_hybrid(y, scheme),
        space=POSITIVE_HALF_LINE,
        guess=_identity,
        validate=_validate,
        name='hybrid type-I exponential (n={0}, T={1}, r={2})'.format(scheme.n, scheme.T, scheme.r),
    )


def exponential_family(scheme):
    if isinstance(scheme, HybridTypeIScheme):
        return hybrid_family(scheme)
    return type1_family(scheme)


def binomial_family(n):
    """
    Number of successes in ``n`` Bernoulli trials, parametrized by the success probability on ``[0, 1]``. Pivoting it
    with the discrete extension yields the Clopper-Pearson interval.

    :param n: Number of trials.
    :type n: int
    :rtype: pivot_ci.pivot.PivotedFamily
    """
    if not isinstance(n, numbers.Integral) or n < 1:
        raise ValueError("Number of trials must be a positive integer.", n)

    def _validate(x):
        if x != int(x) or not 0 <= x <= n:
            raise OutsideSupport("Count must be an integer in [0, {0}].".format(n), x)

    return PivotedFamily(
        cdf=lambda x, p: float(binom.cdf(x, n, p)),
        limit_low=lambda x: 1.0,
        limit_high=lambda x: 1.0 if x >= n else 0.0,
        space=ParameterSpace(0.0, 1.0, True, True),
        survival=lambda x, p: float(binom.sf(x - 1, n, p)),
        survival_low=lambda x: 1.0 if x <= 0 else 0.0,
        survival_high=lambda x: 1.0,
        guess=lambda x: (x + 0.5) / (n + 1),
        validate=_validate,
        name='binomial (n={0})'.format(n),
    )


def normal_mean_family(sigma=1.0, n=1):
    """
    Sample mean of ``n`` normal observations with known standard deviation ``sigma``, parametrized by the mean.
    Restrict it with :func:`pivot_ci.pivot.restricted_family` for a bounded mean.

    :rtype: pivot_ci.pivot.PivotedFamily
    """
    if not sigma > 0 or n < 1:
        raise ValueError("Require sigma > 0 and n >= 1.", sigma, n)
    factor = math.sqrt(n) / sigma
    return PivotedFamily(
        cdf=lambda y, theta: float(norm.cdf(factor * (y - theta))),
        limit_low=lambda y: 1.0,
        limit_high=lambda y: 0.0,
        space=REAL_LINE,
        guess=_identity,
        name='normal mean (sigma={0}, n={1})'.format(sigma, n),
    )


def _logistic_logcdf(z):
    return -np.logaddexp(0.0, -z)


def _logistic_logsf(z):
    return -np.logaddexp(0.0, z)


def _normal_logsf(z):
    return log_ndtr(-z)


LOCATION_BASES = {
    'normal': (log_ndtr, _normal_logsf),
    'logistic': (_logistic_logcdf, _logistic_logsf),
}


def _log_mass(base, a, b):
    # Log-probability of (a, b] under the base distribution, computed in the tail it lies in.
    logcdf, logsf = LOCATION_BASES[base]
    if a >= 0:
        la, lb = float(logsf(a)), float(logsf(b))
        return la + math.log1p(-math.exp(lb - la))
    la, lb = float(logcdf(a)), float(logcdf(b))
    return lb + math.log1p(-math.exp(la - lb))


def tail_limits(base, y, T1=-math.inf, T2=math.inf, scale=1.0):
    """
    Limits of the tail ratios of the base distribution that govern a truncated location family: ``F0(y - T2 + t) /
    F0(t)`` as ``t`` decreases and ``(1 - F0(y - T1 + t)) / (1 - F0(t))`` as ``t`` increases. The first is the limit of
    the CDF for large location parameters, the second the limit of the survival function for small ones.

    :param base: ``'normal'`` or ``'logistic'``.
    :rtype: (float, float)
    """
    if base == 'normal':
        return 0.0, 0.0
    if base == 'logistic':
        return (math.exp((y - T2) / scale) if math.isfinite(T2) else 0.0,
                math.exp((T1 - y) / scale) if math.isfinite(T1) else 0.0)
    raise ValueError("Unsupported base distribution.", base)


def truncated_location_family(base, T1=-math.inf, T2=math.inf, scale=1.0):
    """
    Location family ``F0((y - theta)/scale)`` truncated to ``(T1, T2)``, with CDF
    ``(F0(y - theta) - F0(T1 - theta)) / (F0(T2 - theta) - F0(T1 - theta))``. Both truncation points may be infinite.

    For the normal base the limits are 0 and 1 for every ``y``, so the pivot equation can always be solved. For the
    logistic base the CDF tends to ``exp(y - T2)`` for large ``theta`` and to ``1 - exp(T1 - y)`` for small ones, so
    solutions exist only for a restricted range of levels.

    :param base: ``'normal'`` or ``'logistic'``.
    :type base: str
    :type T1: float
    :type T2: float
    :param scale: Scale of the base distribution.
    :type scale: float
    :rtype: pivot_ci.pivot.PivotedFamily
    """
    if base not in LOCATION_BASES:
        raise ValueError("Unsupported base distribution.", base)
    if not T1 < T2:
        raise ValueError("Truncation requires T1 < T2.", T1, T2)
    if not scale > 0:
        raise ValueError("Scale must be positive.", scale)

    def _validate(y):
        if not T1 < y < T2:
            raise OutsideSupport("Observation must lie in ({0}, {1}).".format(T1, T2), y)

    def _cdf(y, theta):
        _validate(y)
        lower = (T1 - theta) / scale
        value = math.exp(_log_mass(base, lower, (y - theta) / scale) - _log_mass(base, lower, (T2 - theta) / scale))
        return min(1.0, max(0.0, value))

    if base == 'normal':
        def limit_low(y):
            return 1.0

        def limit_high(y):
            return 0.0
    else:
        def limit_low(y):
            return 1.0 - tail_limits(base, y, T1, T2, scale)[1] if math.isfinite(T1) else 1.0

        def limit_high(y):
            return tail_limits(base, y, T1, T2, scale)[0]

    return PivotedFamily(
        cdf=_cdf,
        limit_low=limit_low,
        limit_high=limit_high,
        space=REAL_LINE,
        guess=_identity,
        validate=_validate,
        name='truncated {0} on ({1}, {2})'.format(base, T1, T2),
    )
