"""
Extended method of pivoting the CDF.

A family of distributions ``F(y; theta)`` that is stochastically increasing in ``theta`` is inverted at an observed
statistic ``y``. Where ``F(y; theta) = alpha`` has no solution inside the parameter space, the endpoint of the space
indicated by the limits of ``F`` is used instead, which keeps the resulting intervals exact.
"""
import dataclasses
import logging
import math
from typing import Callable, Optional

import numpy as np

DEFAULT_TOLERANCE = 1e-10
MAX_ITERATIONS = 200
MAX_EXPANSIONS = 64
BRACKET_FACTOR = 1e6
# Bound on |log(theta)| explored for positive spaces.
LOG_LIMIT = 700.0

LOW = 'low'
HIGH = 'high'

log = logging.getLogger(__name__)


class NoSolution(Exception):
    """
    The equation ``F(y; theta) = alpha`` (or its survival counterpart) has no solution inside the parameter space.
    ``side`` tells which endpoint of the space the solution escapes to.
    """
    def __init__(self, message, side, alpha, y, *args):
        super(NoSolution, self).__init__(message, side, alpha, y, *args)

    @property
    def side(self):
        return self.args[1]

    @property
    def alpha(self):
        return self.args[2]

    @property
    def y(self):
        return self.args[3]


class BracketFailure(RuntimeError):
    """
    No bracket for a solution could be established although the limits imply one exists. This means that the family
    does not fulfill its monotonicity contract.
    """
    def __init__(self, message, y, alpha, *args):
        super(BracketFailure, self).__init__(message, y, alpha, *args)

    @property
    def y(self):
        return self.args[1]

    @property
    def alpha(self):
        return self.args[2]


class OutsideSupport(ValueError):
    """
    The observed statistic cannot occur under any parameter value.
    """
    def __init__(self, message, y, *args):
        super(OutsideSupport, self).__init__(message, y, *args)

    @property
    def y(self):
        return self.args[1]


@dataclasses.dataclass(frozen=True)
class ParameterSpace(object):
    """
    Interval of parameter values. Infinite endpoints are always open.
    """
    lower: float
    upper: float
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("Parameter space requires lower < upper.", self.lower, self.upper)
        if math.isinf(self.lower) and self.lower_closed or math.isinf(self.upper) and self.upper_closed:
            raise ValueError("Infinite endpoints must be open.")

    @property
    def positive(self):
        """
        Whether the space lies in ``[0, inf]``, in which case root-finding works on a logarithmic scale.
        """
        return self.lower >= 0

    def __contains__(self, theta):
        if self.lower < theta < self.upper:
            return True
        return (theta == self.lower and self.lower_closed) or (theta == self.upper and self.upper_closed)

    def __str__(self):
        return '{0}{1}, {2}{3}'.format('[' if self.lower_closed else '(', self.lower,
                                       self.upper, ']' if self.upper_closed else ')')


@dataclasses.dataclass(frozen=True)
class PivotedFamily(object):
    """
    A one-parameter family of distributions of a statistic, prepared for pivoting.

    ``limit_low`` and ``limit_high`` give ``F(y; theta)`` as ``theta`` approaches the lower and upper end of the
    parameter space. For stochastically increasing families (``increasing=True``), ``F`` is nonincreasing in
    ``theta``, so that ``limit_high(y) <= cdf(y, theta) <= limit_low(y)``. Discrete families also provide the survival
    function ``P(Y >= y)`` with its limits.
    """
    cdf: Callable[[float, float], float]
    limit_low: Callable[[float], float]
    limit_high: Callable[[float], float]
    space: ParameterSpace
    survival: Optional[Callable[[float, float], float]] = None
    survival_low: Optional[Callable[[float], float]] = None
    survival_high: Optional[Callable[[float], float]] = None
    increasing: bool = True
    guess: Optional[Callable[[float], float]] = None
    validate: Optional[Callable[[float], None]] = None
    name: str = ''

    @property
    def discrete(self):
        return self.survival is not None


@dataclasses.dataclass(frozen=True)
class ConfidenceResult(object):
    """
    Confidence interval from the extended pivoting method.

    ``lower_clamped``/``upper_clamped`` are set when an endpoint is a boundary of the parameter space rather than a
    solution of the pivot equation. ``degenerate`` is set when both endpoints are the same boundary, i.e. when the
    interval collapses to a point that is excluded from an open space.
    """
    lower: float
    upper: float
    lower_clamped: bool
    upper_clamped: bool
    degenerate: bool
    alpha1: float
    alpha2: float

    @property
    def lower_infinite(self):
        return math.isinf(self.lower)

    @property
    def upper_infinite(self):
        return math.isinf(self.upper)

    @property
    def proper(self):
        """
        Whether the interval has finite endpoints and does not degenerate.
        """
        return not (self.degenerate or self.lower_infinite or self.upper_infinite)

    @property
    def width(self):
        if self.degenerate:
            return 0.0
        return self.upper - self.lower

    def covers(self, theta):
        if self.degenerate and math.isinf(self.lower):
            return False
        return self.lower <= theta <= self.upper


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError("Probability level must lie in (0, 1).", alpha)


def _check_split(alpha1, alpha2):
    if not (alpha1 > 0 and alpha2 > 0 and alpha1 + alpha2 < 1):
        raise ValueError("Require alpha1, alpha2 > 0 and alpha1 + alpha2 < 1.", alpha1, alpha2)


def _reflection(space):
    if space.positive:
        def psi(theta):
            if theta == 0:
                return math.inf
            if math.isinf(theta):
                return 0.0
            return 1.0 / theta
    else:
        def psi(theta):
            return -theta
    return psi


def reflected_family(family):
    """
    Reparametrizes a family by a strictly decreasing map, turning a stochastically decreasing family into an
    increasing one and vice versa. Positive spaces are mapped by ``1/theta``, all others by ``-theta``. The map is an
    involution, so the same function converts results back.

    :type family: PivotedFamily
    :rtype: PivotedFamily
    """
    space = family.space
    psi = _reflection(space)
    new_space = ParameterSpace(psi(space.upper), psi(space.lower), space.upper_closed, space.lower_closed)
    survival = family.survival
    guess = family.guess
    return dataclasses.replace(
        family,
        cdf=lambda y, theta: family.cdf(y, psi(theta)),
        limit_low=family.limit_high,
        limit_high=family.limit_low,
        space=new_space,
        survival=(lambda y, theta: survival(y, psi(theta))) if survival else None,
        survival_low=family.survival_high,
        survival_high=family.survival_low,
        increasing=not family.increasing,
        guess=(lambda y: psi(guess(y))) if guess else None,
        name='reflected {0}'.format(family.name).strip(),
    )


def _find_crossing(left_of_crossing, space, start, tol):
    """
    Locates the infimum of the parameter values where ``left_of_crossing`` turns false, by bisection on a log scale
    for positive spaces and a linear scale otherwise.
    """
    if space.positive:
        def to_u(theta):
            return math.log(theta) if theta > 0 else -math.inf
        from_u = math.exp
        lower_u = max(to_u(space.lower), -LOG_LIMIT)
        upper_u = min(math.log(space.upper) if not math.isinf(space.upper) else math.inf, LOG_LIMIT)
        spread = math.log(BRACKET_FACTOR)
    else:
        to_u = from_u = float
        lower_u, upper_u = space.lower, space.upper
        spread = max(1.0, abs(start))

    def _clip(u):
        return min(max(u, lower_u), upper_u)

    centre = _clip(to_u(start))
    width = spread
    lo = _clip(centre - width)
    for _ in range(MAX_EXPANSIONS):
        if left_of_crossing(from_u(lo)):
            break
        if lo == lower_u:
            raise BracketFailure("Lower end of the parameter space lies beyond the crossing.", start, None)
        width *= 2
        lo = _clip(centre - width)
    else:
        raise BracketFailure("No lower bracket found.", start, None)
    width = spread
    hi = _clip(centre + width)
    for _ in range(MAX_EXPANSIONS):
        if not left_of_crossing(from_u(hi)):
            break
        if hi == upper_u:
            raise BracketFailure("Upper end of the parameter space lies before the crossing.", start, None)
        width *= 2
        hi = _clip(centre + width)
    else:
        raise BracketFailure("No upper bracket found.", start, None)
    log.debug("Bracket [%s, %s] established.", from_u(lo), from_u(hi))

    for iteration in range(MAX_ITERATIONS):
        scale = 1.0 if space.positive else max(abs(lo), abs(hi), 1.0)
        if hi - lo <= tol * scale:
            log.debug("Bisection converged after %s iterations.", iteration)
            break
        mid = 0.5 * (lo + hi)
        if left_of_crossing(from_u(mid)):
            lo = mid
        else:
            hi = mid
    else:
        log.warning("Bisection did not reach the tolerance %s within %s iterations.", tol, MAX_ITERATIONS)
    return from_u(hi)


def _start(family, y):
    if family.guess is not None:
        return family.guess(y)
    space = family.space
    if space.positive:
        if math.isinf(space.upper):
            return max(space.lower, 1.0)
        return math.sqrt(max(space.lower, space.upper * 1e-3) * space.upper)
    if math.isinf(space.lower):
        return min(0.0, space.upper - 1.0)
    if math.isinf(space.upper):
        return space.lower + 1.0
    return 0.5 * (space.lower + space.upper)


def _prepare(family, y):
    if family.validate is not None:
        family.validate(y)


def solve_cdf_equation(family, y, alpha, tol=DEFAULT_TOLERANCE):
    """
    Solves ``F(y; theta) = alpha`` for ``theta`` inside the parameter space. Existence is decided from the limits of
    the family. If the solution is not unique, the infimum of all solutions is returned.

    :param family: Stochastically increasing family.
    :type family: PivotedFamily
    :param y: Observed statistic.
    :type y: float
    :param alpha: Probability level in ``(0, 1)``.
    :type alpha: float
    :param tol: Relative tolerance in ``theta``.
    :type tol: float
    :return: Solution in the interior of the parameter space.
    :rtype: float
    :raises NoSolution: If ``alpha`` is outside of ``(limit_high(y), limit_low(y))``.
    """
    _check_alpha(alpha)
    if not family.increasing:
        psi = _reflection(family.space)
        return psi(solve_cdf_equation(reflected_family(family), y, alpha, tol))
    _prepare(family, y)
    if family.limit_low(y) <= alpha:
        raise NoSolution("CDF does not exceed alpha near the lower end of the parameter space.", LOW, alpha, y)
    if family.limit_high(y) >= alpha:
        raise NoSolution("CDF does not fall below alpha near the upper end of the parameter space.", HIGH, alpha, y)
    cdf = family.cdf
    try:
        return _find_crossing(lambda theta: cdf(y, theta) > alpha, family.space, _start(family, y), tol)
    except BracketFailure as e:
        raise BracketFailure(e.args[0], y, alpha)


def solve_survival_equation(family, y, alpha, tol=DEFAULT_TOLERANCE):
    """
    Solves ``P_theta(Y >= y) = alpha`` for discrete families, where the survival function is nondecreasing in
    ``theta``.

    :type family: PivotedFamily
    :rtype: float
    :raises NoSolution: If ``alpha`` is outside of ``(survival_low(y), survival_high(y))``.
    """
    _check_alpha(alpha)
    if not family.discrete:
        raise ValueError("Family does not provide a survival function.", family.name)
    if not family.increasing:
        psi = _reflection(family.space)
        return psi(solve_survival_equation(reflected_family(family), y, alpha, tol))
    _prepare(family, y)
    if family.survival_low(y) >= alpha:
        raise NoSolution("Survival function is not below alpha near the lower end of the parameter space.",
                         LOW, alpha, y)
    if family.survival_high(y) <= alpha:
        raise NoSolution("Survival function does not exceed alpha near the upper end of the parameter space.",
                         HIGH, alpha, y)
    survival = family.survival
    try:
        return _find_crossing(lambda theta: survival(y, theta) < alpha, family.space, _start(family, y), tol)
    except BracketFailure as e:
        raise BracketFailure(e.args[0], y, alpha)


def solve_cdf_equation_array(cdf_array, y, alpha, tol=DEFAULT_TOLERANCE):
    """
    Solves ``F(y_i; theta) = alpha`` for an array of statistics at once, by bisection on a log scale run in lockstep.
    The family must be stochastically increasing on the positive half-line, and every equation must have a solution,
    i.e. ``limit_high(y_i) < alpha < limit_low(y_i)``. Returns the infimum of the solutions like
    :func:`solve_cdf_equation`.

    :param cdf_array: Vectorized CDF, called with arrays of points and parameters.
    :type cdf_array: Callable[[numpy.ndarray, numpy.ndarray], numpy.ndarray]
    :param y: Observed statistics, all positive.
    :type y: numpy.ndarray
    :type alpha: float
    :param tol: Relative tolerance in ``theta``.
    :type tol: float
    :rtype: numpy.ndarray
    :raises BracketFailure: If a solution could not be bracketed for some statistic.
    """
    _check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    centre = np.log(y)
    width = math.log(BRACKET_FACTOR)
    lo = np.maximum(centre - width, -LOG_LIMIT)
    for _ in range(MAX_EXPANSIONS):
        beyond = cdf_array(y, np.exp(lo)) <= alpha
        if not beyond.any():
            break
        width *= 2
        lo = np.where(beyond, np.maximum(centre - width, -LOG_LIMIT), lo)
    else:
        raise BracketFailure("No lower bracket found.", y[beyond], alpha)
    width = math.log(BRACKET_FACTOR)
    hi = np.minimum(centre + width, LOG_LIMIT)
    for _ in range(MAX_EXPANSIONS):
        before = cdf_array(y, np.exp(hi)) > alpha
        if not before.any():
            break
        width *= 2
        hi = np.where(before, np.minimum(centre + width, LOG_LIMIT), hi)
    else:
        raise BracketFailure("No upper bracket found.", y[before], alpha)

    for iteration in range(MAX_ITERATIONS):
        if np.all(hi - lo <= tol):
            log.debug("Array bisection converged after %s iterations.", iteration)
            break
        mid = 0.5 * (lo + hi)
        left = cdf_array(y, np.exp(mid)) > alpha
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    else:
        log.warning("Bisection did not reach the tolerance %s within %s iterations.", tol, MAX_ITERATIONS)
    return np.exp(hi)


def _endpoint(solver, family, alpha, y):
    # Returns the endpoint and the side of the space it was clamped to, if any.
    try:
        return solver(family, y, alpha), None
    except NoSolution as e:
        if e.side == LOW:
            return family.space.lower, LOW
        return family.space.upper, HIGH


def theta_star(family, alpha, y):
    """
    Extended pivot solution: the solution of ``F(y; theta) = alpha`` if it exists, otherwise the lower end of the
    parameter space if ``F(y; lower) <= alpha`` and the upper end if ``F(y; upper) >= alpha``.

    :type family: PivotedFamily
    :type alpha: float
    :type y: float
    :rtype: float
    """
    if not family.increasing:
        return _reflection(family.space)(theta_star(reflected_family(family), alpha, y))
    return _endpoint(solve_cdf_equation, family, alpha, y)[0]


def theta_lower_star(family, alpha, y):
    """
    Lower extended pivot for discrete families, based on the survival function ``P_theta(Y >= y)``: the lower end of
    the space if the survival function is at least ``alpha`` there, the upper end if it never exceeds ``alpha``, and
    the solution of ``P_theta(Y >= y) = alpha`` in between.

    :type family: PivotedFamily
    :rtype: float
    """
    if not family.increasing:
        return _reflection(family.space)(theta_lower_star(reflected_family(family), alpha, y))
    return _endpoint(solve_survival_equation, family, alpha, y)[0]


def _assemble(family, lower, upper, alpha1, alpha2):
    lower_value, lower_side = lower
    upper_value, upper_side = upper
    if lower_value > upper_value:
        log.warning("Endpoints out of order (%s > %s); the family may violate its monotonicity.",
                    lower_value, upper_value)
    return ConfidenceResult(lower_value, upper_value,
                            lower_clamped=lower_side is not None,
                            upper_clamped=upper_side is not None,
                            degenerate=lower_side is not None and lower_side == upper_side,
                            alpha1=alpha1, alpha2=alpha2)


def _reflect_result(result, space):
    psi = _reflection(space)
    return dataclasses.replace(result, lower=psi(result.upper), upper=psi(result.lower),
                               lower_clamped=result.upper_clamped, upper_clamped=result.lower_clamped)


def interval_continuous(family, alpha1, alpha2, y):
    """
    Exact ``100(1 - alpha1 - alpha2)%`` confidence interval ``[theta*(1 - alpha1, y), theta*(alpha2, y)]`` for a
    continuous family.

    :type family: PivotedFamily
    :param alpha1: Error probability assigned to the lower endpoint.
    :type alpha1: float
    :param alpha2: Error probability assigned to the upper endpoint.
    :type alpha2: float
    :param y: Observed statistic.
    :type y: float
    :rtype: ConfidenceResult
    """
    _check_split(alpha1, alpha2)
    if not family.increasing:
        return _reflect_result(interval_continuous(reflected_family(family), alpha1, alpha2, y), family.space)
    lower = _endpoint(solve_cdf_equation, family, 1 - alpha1, y)
    upper = _endpoint(solve_cdf_equation, family, alpha2, y)
    return _assemble(family, lower, upper, alpha1, alpha2)


def interval_discrete(family, alpha1, alpha2, y):
    """
    Confidence interval ``[theta_*(alpha1, y), theta*(alpha2, y)]`` for a discrete family, with coverage of at least
    ``1 - alpha1 - alpha2``.

    :type family: PivotedFamily
    :rtype: ConfidenceResult
    """
    _check_split(alpha1, alpha2)
    if not family.increasing:
        return _reflect_result(interval_discrete(reflected_family(family), alpha1, alpha2, y), family.space)
    lower = _endpoint(solve_survival_equation, family, alpha1, y)
    upper = _endpoint(solve_cdf_equation, family, alpha2, y)
    return _assemble(family, lower, upper, alpha1, alpha2)


def interval(family, alpha1, alpha2, y):
    if family.discrete:
        return interval_discrete(family, alpha1, alpha2, y)
    return interval_continuous(family, alpha1, alpha2, y)


def restricted_family(family, lo, hi):
    """
    Narrows the parameter space of a family to ``[lo, hi]``. Endpoints that coincide with the original ones keep their
    limits and closure; new endpoints are closed and their limits are the CDF values there.

    :type family: PivotedFamily
    :type lo: float
    :type hi: float
    :rtype: PivotedFamily
    """
    space = family.space
    if not lo < hi:
        raise ValueError("Restriction requires lo < hi.", lo, hi)
    if lo < space.lower or hi > space.upper:
        raise ValueError("Restriction must lie inside the parameter space {0}.".format(space), lo, hi)
    keep_lower = lo == space.lower
    keep_upper = hi == space.upper
    new_space = ParameterSpace(lo, hi,
                               space.lower_closed if keep_lower else True,
                               space.upper_closed if keep_upper else True)
    cdf = family.cdf
    survival = family.survival
    guess = family.guess
    changes = {
        'space': new_space,
        'limit_low': family.limit_low if keep_lower else (lambda y: cdf(y, lo)),
        'limit_high': family.limit_high if keep_upper else (lambda y: cdf(y, hi)),
        'name': '{0} on {1}'.format(family.name, new_space).strip(),
    }
    if survival is not None:
        changes['survival_low'] = family.survival_low if keep_lower else (lambda y: survival(y, lo))
        changes['survival_high'] = family.survival_high if keep_upper else (lambda y: survival(y, hi))
    if guess is not None:
        changes['guess'] = lambda y: min(max(guess(y), lo), hi)
    return dataclasses.replace(family, **changes)
