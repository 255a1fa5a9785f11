import logging
import math
import warnings
from collections import namedtuple

import numpy as np
from scipy.special import gammainc

from .gamma import reg_lower_gamma_int

CANCELLATION_LIMIT = 1e6

# Results below this fraction of the normalizer are not checked for cancellation.
_NEGLIGIBLE = 1e-12

log = logging.getLogger(__name__)


class StabilityWarning(RuntimeWarning):
    """
    Issued when an alternating mixture sum loses too many significant digits to cancellation, or when a model is used
    outside of the range validated in double precision.
    """


MixtureTerm = namedtuple('MixtureTerm', ['coefficient', 'shape', 'shift', 'exp_rate'])
MixtureTerm.__doc__ = """
One summand ``coefficient * exp(-exp_rate / theta) * G((shape * y - shift) / theta; shape)``. ``shift`` and
``exp_rate`` are absolute values in time units (i.e. multiples of ``T`` already multiplied out).
"""


def compensated_sum(values):
    """
    Sums values in order of ascending magnitude with exact rounding.

    :param values: Iterable of floats.
    :return: Tuple of the sum and the sum of absolute values.
    :rtype: (float, float)
    """
    ordered = sorted(values, key=abs)
    return math.fsum(ordered), math.fsum(abs(v) for v in ordered)


class FailureCountTail(namedtuple('FailureCountTail', ['n', 'T', 'd0'])):
    """
    Probability ``P(D >= d0)`` that at least ``d0`` of ``n`` exponential lifetimes fail before ``T``.
    """
    __slots__ = ()

    def __call__(self, theta):
        p = -math.expm1(-self.T / theta)
        log_p = math.log(p) if p > 0 else -math.inf
        log_q = -self.T / theta
        terms = []
        for j in range(self.d0, self.n + 1):
            if log_p == -math.inf:
                continue
            terms.append(math.exp(math.log(math.comb(self.n, j)) + j * log_p + (self.n - j) * log_q))
        return min(1.0, math.fsum(sorted(terms)))

    def evaluate_array(self, theta):
        """
        Evaluates the probability for an array of parameter values.

        :type theta: numpy.ndarray
        :rtype: numpy.ndarray
        """
        theta = np.asarray(theta, dtype=float)
        j = np.arange(self.d0, self.n + 1)
        log_comb = np.log([float(math.comb(self.n, k)) for k in j.tolist()])
        with np.errstate(divide='ignore'):
            log_p = np.log(-np.expm1(-self.T / theta))[..., None]
        log_q = (-self.T / theta)[..., None]
        terms = np.exp(log_comb + j * log_p + (self.n - j) * log_q)
        return np.minimum(1.0, terms.sum(axis=-1))

    @property
    def leading_coefficient(self):
        """
        ``C(n, d0) * T**d0``, the constant of the first-order behavior ``P(D >= d0) ~ C(n, d0) (T/theta)**d0`` as
        ``theta`` grows.
        """
        return math.comb(self.n, self.d0) * self.T ** self.d0


class GeneralizedGammaMixture(object):
    """
    Signed-weight mixture of shifted gamma CDFs with integer shapes, normalized by the probability of the conditioning
    event.

    :param terms: Mixture terms.
    :type terms: list[MixtureTerm]
    :param normalizer: Probability of the conditioning event ``D >= d0``.
    :type normalizer: FailureCountTail
    """
    def __init__(self, terms, normalizer):
        self._terms = tuple(terms)
        self._normalizer = normalizer
        self._coefficients = np.array([t.coefficient for t in self._terms], dtype=float)
        self._shapes = np.array([t.shape for t in self._terms], dtype=float)
        self._shifts = np.array([t.shift for t in self._terms], dtype=float)
        self._exp_rates = np.array([t.exp_rate for t in self._terms], dtype=float)
        if any(t.shape < normalizer.d0 for t in self._terms):
            raise ValueError("Mixture terms must not have a shape below the conditioning threshold.", normalizer.d0)

    def __len__(self):
        return len(self._terms)

    @property
    def terms(self):
        return self._terms

    @property
    def normalizer(self):
        return self._normalizer

    def unnormalized(self, y, theta):
        """
        Evaluates the signed sum without dividing by the normalizer.

        :return: Tuple of the sum and the sum of absolute values of its terms.
        :rtype: (float, float)
        """
        values = []
        for term in self._terms:
            x = (term.shape * y - term.shift) / theta
            if x <= 0:
                continue
            values.append(term.coefficient * math.exp(-term.exp_rate / theta) * reg_lower_gamma_int(x, term.shape))
        return compensated_sum(values)

    def evaluate(self, y, theta):
        """
        Evaluates the normalized mixture at ``y`` for parameter ``theta``. The value is clamped to ``[0, 1]``.

        :param y: Point of evaluation.
        :type y: float
        :param theta: Scale parameter.
        :type theta: float
        :rtype: float
        """
        total, magnitude = self.unnormalized(y, theta)
        norm = self._normalizer(theta)
        if norm <= 0:
            # Conditioning event has vanishing probability in double precision.
            return self.limit_at_infinity(y)
        if magnitude > CANCELLATION_LIMIT * max(abs(total), _NEGLIGIBLE * norm):
            warnings.warn("Mixture sum at y={0}, theta={1} cancels {2:.3g}-fold; the result may be "
                          "inaccurate.".format(y, theta, magnitude / max(abs(total), _NEGLIGIBLE * norm)),
                          StabilityWarning, stacklevel=2)
        return min(1.0, max(0.0, total / norm))

    def evaluate_array(self, y, theta):
        """
        Evaluates the normalized mixture for arrays of points and parameters, which are broadcast against each other.
        Terms are summed in plain double precision and no cancellation check is made, which suits bulk evaluation in
        simulation studies.

        :type y: numpy.ndarray
        :type theta: numpy.ndarray
        :rtype: numpy.ndarray
        """
        y, theta = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(theta, dtype=float))
        x = (self._shapes * y[..., None] - self._shifts) / theta[..., None]
        with np.errstate(under='ignore'):
            weights = self._coefficients * np.exp(-self._exp_rates / theta[..., None])
            values = np.where(x > 0, weights * gammainc(self._shapes, np.maximum(x, 0.0)), 0.0)
        total = values.sum(axis=-1)
        norm = self._normalizer.evaluate_array(theta)
        with np.errstate(divide='ignore', invalid='ignore'):
            result = np.where(norm > 0, total / norm, self.limit_at_infinity_array(y))
        return np.clip(result, 0.0, 1.0)

    def limit_at_infinity(self, y):
        """
        Term-wise limit of the normalized mixture as ``theta`` grows without bound. Only terms with a shape equal to
        the conditioning threshold ``d0`` contribute; each behaves like ``(shape * y - shift)_+**d0 / d0!`` against
        the leading behavior of the normalizer.
        """
        d0 = self._normalizer.d0
        values = [t.coefficient * max(t.shape * y - t.shift, 0.0) ** d0
                  for t in self._terms if t.shape == d0]
        total, _ = compensated_sum(values)
        value = total / (math.factorial(d0) * self._normalizer.leading_coefficient)
        return min(1.0, max(0.0, value))

    def limit_at_infinity_array(self, y):
        """
        Vectorized :meth:`limit_at_infinity`.

        :type y: numpy.ndarray
        :rtype: numpy.ndarray
        """
        y = np.asarray(y, dtype=float)
        d0 = self._normalizer.d0
        leading = self._shapes == d0
        base = np.maximum(self._shapes[leading] * y[..., None] - self._shifts[leading], 0.0)
        total = (self._coefficients[leading] * base ** d0).sum(axis=-1)
        return np.clip(total / (math.factorial(d0) * self._normalizer.leading_coefficient), 0.0, 1.0)

    def limit_at_zero(self, y):
        """
        Term-wise limit as ``theta`` decreases to zero, where only unweighted terms (``exp_rate == 0``) survive.
        """
        values = [t.coefficient for t in self._terms
                  if t.exp_rate == 0 and t.shape * y > t.shift]
        total, _ = compensated_sum(values)
        return min(1.0, max(0.0, total))
