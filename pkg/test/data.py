import math

import numpy as np
from scipy import integrate, optimize

from pivot_ci.censoring import HybridTypeIScheme, TypeIScheme
from pivot_ci.families import normal_mean_family
from pivot_ci.pivot import restricted_family


SCHEME_N1 = TypeIScheme(1, 1.0)
SCHEME_N5 = TypeIScheme(5, 1.0)
SCHEME_N10 = TypeIScheme(10, 1.0)
SCHEME_N10_D3 = TypeIScheme(10, 1.0, 3)
HYBRID_N5_R3 = HybridTypeIScheme(5, 1.0, 3)
HYBRID_N5_R5 = HybridTypeIScheme(5, 1.0, 5)

Z_975 = 1.959963984540054

CLOPPER_PEARSON_N10_X3 = (0.06673951117773447, 0.6524528500599972)

Y_GRID = (0.3, 0.7, 1.0, 1.7, 2.2, 3.1, 4.0, 4.6)
THETA_GRID = (0.5, 1.0, 3.0)


def n1_closed_form(y, theta, T=1.0):
    return -math.expm1(-y / theta) / -math.expm1(-T / theta)


def gamma_quadrature(x, d):
    value, _ = integrate.quad(lambda u: u ** (d - 1) * math.exp(-u) / math.factorial(d - 1), 0.0, x,
                              epsabs=1e-15, epsrel=1e-14, limit=200)
    return value


def get_support_grid(scheme, size=50):
    # Evenly spaced points up to the right end nT/d0 of the range of the MLE.
    upper = scheme.n * scheme.T / scheme.d0
    return np.linspace(upper / size, upper, size)


def bisection_root(func, lo, hi):
    return optimize.brentq(func, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)


def get_normal_family(lo=None, hi=None, sigma=1.0, n=1):
    family = normal_mean_family(sigma, n)
    if lo is None and hi is None:
        return family
    return restricted_family(family, -math.inf if lo is None else lo, math.inf if hi is None else hi)
