import math
import numbers

D_MAX = 64
UNDERFLOW_X = 700.0

# Relative size at which the lower-tail series is truncated.
_SERIES_EPS = 1e-18


class GammaDomainError(ValueError):
    """
    Raised for arguments outside the domain of the integer-shape gamma CDF.
    """
    def __init__(self, message, x, d, *args):
        super(GammaDomainError, self).__init__(message, x, d, *args)

    @property
    def x(self):
        return self.args[1]

    @property
    def d(self):
        return self.args[2]


def _check_args(x, d):
    if not isinstance(d, numbers.Integral) or isinstance(d, bool):
        raise GammaDomainError("Shape must be an integer.", x, d)
    if d < 1:
        raise GammaDomainError("Shape must be at least 1.", x, d)
    if d > D_MAX:
        raise GammaDomainError("Shape exceeds the supported maximum of {0}.".format(D_MAX), x, d)
    if math.isnan(x) or x < 0:
        raise GammaDomainError("Argument must be nonnegative.", x, d)


def _log_poisson_term(x, j):
    return j * math.log(x) - x - math.lgamma(j + 1)


def poisson_complement(x, d):
    """
    Upper regularized gamma function for integer shape, i.e. the probability that a Poisson variable with mean ``x``
    is smaller than ``d``.

    :param x: Nonnegative argument.
    :type x: float
    :param d: Shape, ``1 <= d <= D_MAX``.
    :type d: int
    :return: ``exp(-x) * sum(x**j / j! for j < d)``.
    :rtype: float
    """
    _check_args(x, d)
    if x == 0:
        return 1.0
    if x > UNDERFLOW_X:
        return 0.0
    terms = [math.exp(_log_poisson_term(x, j)) for j in range(d)]
    terms.sort()
    return min(1.0, math.fsum(terms))


def _lower_tail_series(x, d):
    # exp(-x) * sum_{j >= d} x**j / j!, terms decrease once j + 1 > x.
    term = math.exp(_log_poisson_term(x, d))
    terms = [term]
    j = d
    while term > _SERIES_EPS * terms[0]:
        j += 1
        term *= x / j
        terms.append(term)
    terms.reverse()
    return math.fsum(terms)


def reg_lower_gamma_int(x, d):
    """
    CDF of the gamma distribution with integer shape ``d`` and unit scale, evaluated at ``x``.

    For ``x < d`` the Poisson tail series is summed directly, which keeps full relative accuracy for small arguments;
    otherwise the finite complement sum is subtracted from one.

    :param x: Nonnegative argument.
    :type x: float
    :param d: Shape, ``1 <= d <= D_MAX``.
    :type d: int
    :return: Probability in ``[0, 1]``.
    :rtype: float
    """
    _check_args(x, d)
    if x == 0:
        return 0.0
    if x > UNDERFLOW_X:
        return 1.0
    if x < d:
        value = _lower_tail_series(x, d)
    else:
        value = 1.0 - poisson_complement(x, d)
    return min(1.0, max(0.0, value))
