"""Special functions used by the evaluators.

Everything here works on Python complex scalars; vectorisation happens over
the Dirichlet-series terms with numpy.
"""
import cmath
import logging
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from lfunlab.config import EvalConfig
from lfunlab.exceptions import PoleError
from lfunlab.exceptions import ToleranceError

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
STIRLING_SHIFT = 10.0
STIRLING_TERMS = 9
HALF_LOG_TWO_PI = 0.5 * math.log(2 * math.pi)


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Exact Bernoulli number B_n (B_1 = -1/2)"""
    if n < 0:
        raise ValueError(f"{n=} must be nonnegative")
    table = [Fraction(1)]
    for m in range(1, n + 1):
        acc = sum(math.comb(m + 1, k) * table[k] for k in range(m))
        table.append(-acc / (m + 1))
    return table[n]


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def log_gamma(z) -> complex:
    """Principal branch of log Gamma(z), continuous on C minus (-inf, 0].

    Uses the Stirling series at w = z + k with Re(w) >= 10 and removes the
    shift through log Gamma(z) = log Gamma(z + k) - sum_j log(z + j), each
    logarithm principal. Nonpositive integers raise `PoleError`.
    """
    z = complex(z)
    if _is_nonpositive_integer(z):
        e = PoleError(f"log_gamma has a pole at {z=}")
        logger.exception(e)
        raise e
    shift = 0j
    w = z
    while w.real < STIRLING_SHIFT:
        shift += cmath.log(w)
        w += 1
    series = (w - 0.5) * cmath.log(w) - w + HALF_LOG_TWO_PI
    w_inv = 1 / w
    w_inv2 = w_inv * w_inv
    power = w_inv
    for j in range(1, STIRLING_TERMS + 1):
        b = bernoulli(2 * j)
        series += float(b) / (2 * j * (2 * j - 1)) * power
        power *= w_inv2
    return series - shift


def gamma(z) -> complex:
    return cmath.exp(log_gamma(z))


def expm1_ratio(u: complex) -> complex:
    """(exp(u) - 1) / u, continuous at u = 0"""
    if abs(u) < 1e-5:
        return 1 + u / 2 + u * u / 6
    return (cmath.exp(u) - 1) / u


def em_terms(s: complex, config: EvalConfig = EvalConfig()) -> int:
    return max(config.em_min_terms, math.ceil(config.em_shift_factor * abs(s.imag)))


def hurwitz_regular(
    s: complex, a: float, n_terms: int, order: int
) -> tuple:
    """Euler-Maclaurin expansion of zeta(s, a) without its pole term.

    Returns (value, base, error) where base = n_terms + a; the full value is
    value + base^(1 - s) / (s - 1).
    """
    k = np.arange(n_terms, dtype=float) + a
    terms = np.exp(-s * np.log(k))
    head = complex(np.sum(terms))
    base = n_terms + a
    log_base = math.log(base)
    value = head + 0.5 * cmath.exp(-s * log_base)

    # B_2j/(2j)! s(s+1)...(s+2j-2) base^(-s-2j+1)
    rising = s
    power = cmath.exp(-(s + 1) * log_base)
    last = 0.0
    for j in range(1, order // 2 + 2):
        coeff = float(bernoulli(2 * j)) / math.factorial(2 * j)
        correction = coeff * rising * power
        if j == order // 2 + 1:
            last = abs(correction)
            break
        value += correction
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        power /= base * base
    rounding = EPS * (
        4 * abs(value)
        + (1 + abs(s) * log_base) * math.sqrt(float(np.sum(np.abs(terms) ** 2)))
    )
    return value, base, last + rounding


def hurwitz_zeta_with_error(
    s, a: float, tol: float = None, config: EvalConfig = EvalConfig()
) -> tuple:
    """zeta(s, a) for 0 < a <= 1 with an error estimate.

    Parameters
    ----------

    s: complex
        Any point but the pole s = 1.

    a: float
        Shift in (0, 1].

    tol: float, optional
        When given, the number of summed terms is doubled (at most four times)
        until the estimate meets it; `ToleranceError` otherwise.
    """
    s = complex(s)
    if s == 1:
        e = PoleError("hurwitz_zeta has a pole at s=1")
        logger.exception(e)
        raise e
    if not 0 < a <= 1:
        raise ValueError(f"{a=} must lie in (0, 1]")
    n_terms = em_terms(s, config)
    for attempt in range(5):
        regular, base, err = hurwitz_regular(
            s, a, n_terms, config.bernoulli_order
        )
        value = regular + cmath.exp((1 - s) * math.log(base)) / (s - 1)
        if tol is None or err <= tol:
            return value, err
        logger.debug(f"Hurwitz {s=} {a=}: {err=} with {n_terms} terms, doubling")
        n_terms *= 2
    e = ToleranceError(
        f"hurwitz_zeta({s}, {a}) stuck at error {err} > {tol}",
        best_value=value,
        best_error=err,
    )
    logger.exception(e)
    raise e


def hurwitz_zeta(s, a: float, config: EvalConfig = EvalConfig()) -> complex:
    return hurwitz_zeta_with_error(s, a, config=config)[0]
