import cmath
import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from termcolor import colored

from lfunlab.config import EvalConfig
from lfunlab.exceptions import DomainError
from lfunlab.exceptions import InstanceException
from lfunlab.exceptions import PoleError
from lfunlab.exceptions import TableTooShortError
from lfunlab.exceptions import ToleranceError
from lfunlab.instances import AutomorphicInstance
from lfunlab.instances import DELTA_WEIGHT
from lfunlab.instances import analytic_conductor
from lfunlab.instances import contragredient
from lfunlab.special import em_terms
from lfunlab.special import expm1_ratio
from lfunlab.special import hurwitz_regular
from lfunlab.special import hurwitz_zeta_with_error
from lfunlab.special import log_gamma
from lfunlab.utils import primes_up_to

logger = logging.getLogger(__name__)

STRATEGIES = (
    "auto",
    "euler-maclaurin",
    "hurwitz",
    "afe",
    "reflect",
    "series",
    "riemann-siegel",
)
LOG_PI = math.log(math.pi)
# Remainder bound of the Riemann-Siegel formula truncated after C1, t >= 200
RS_REMAINDER = 0.053


@dataclass(frozen=True)
class EvalRequest:
    label: str
    s: complex
    tolerance: float = 1e-10
    strategy: str = "auto"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.strategy not in STRATEGIES:
            raise DomainError(f"Unknown strategy {self.strategy!r}")
        if self.strategy == "reflect" and not complex(self.s).real < 0.5:
            raise DomainError(f"reflect needs Re(s) < 1/2, got s={self.s}")


@dataclass(frozen=True)
class EvalResult:
    value: complex
    error: float
    strategy: str
    terms: int = 0

    def to_dict(self):
        return dict(
            value=self.value, error=self.error, strategy=self.strategy,
            terms=self.terms,
        )

    def __str__(self):
        return (
            f"{colored(f'{self.value:.12g}', 'green')} "
            f"+/- {self.error:.2e} ({self.strategy}, {self.terms} terms)"
        )


def archimedean_log(instance: AutomorphicInstance, s) -> complex:
    """log L(s, pi_inf) = -(m s / 2) log pi + sum_r log Gamma((s + nu_r) / 2)"""
    s = complex(s)
    value = -instance.degree * s / 2 * LOG_PI
    for nu in instance.spectral_params:
        value += log_gamma((s + complex(nu)) / 2)
    return value


def archimedean_factor(instance: AutomorphicInstance, s) -> complex:
    return cmath.exp(archimedean_log(instance, s))


def direct_strategy(instance: AutomorphicInstance) -> str:
    """Strategy valid on the whole plane without the functional equation"""
    return {
        "zeta": "euler-maclaurin",
        "dirichlet": "hurwitz",
        "delta": "afe",
    }.get(instance.kind, "series")


def evaluate_L(
    instance: AutomorphicInstance,
    s,
    tol: float = None,
    strategy: str = None,
    config: EvalConfig = EvalConfig(),
) -> EvalResult:
    """L(s, pi) with an error estimate not above `tol`.

    Parameters
    ----------

    instance: AutomorphicInstance

    s: complex

    tol: float, optional
        Target absolute error, `config.tolerance` by default.

    strategy: str, optional
        One of `STRATEGIES`, `config.strategy` by default. "auto" picks
        the Euler product far right, Euler-Maclaurin for zeta, Hurwitz sums
        for Dirichlet characters, the smoothed approximate functional
        equation for Delta and the functional equation left of 1/2.
    """
    s = complex(s)
    tol = config.tolerance if tol is None else tol
    strategy = strategy or config.strategy
    EvalRequest(instance.label, s, tol, strategy)
    if instance.pole_order and abs(s - 1) < config.pole_exclusion:
        e = PoleError(f"{instance.label} has a pole at s=1, got {s=}")
        logger.exception(e)
        raise e
    if strategy == "auto":
        strategy = _auto_strategy(instance, s, tol, config)
    logger.debug(f"Evaluating {instance.label} at {s=} with {strategy=}")
    result = _EVALUATORS[strategy](instance, s, tol, config)
    if result.error > tol:
        e = ToleranceError(
            f"{instance.label}({s}) by {strategy}: error {result.error:.2e} "
            f"above {tol:.2e}",
            best_value=result.value,
            best_error=result.error,
        )
        logger.exception(e)
        raise e
    return result


def evaluate(
    request: EvalRequest,
    instance: AutomorphicInstance,
    config: EvalConfig = EvalConfig(),
) -> EvalResult:
    if request.label != instance.label:
        raise InstanceException(
            f"Request for {request.label} given instance {instance.label}"
        )
    return evaluate_L(
        instance, request.s, request.tolerance, request.strategy, config
    )


def _auto_strategy(instance, s, tol, config) -> str:
    if s.real < 0.5:
        return "reflect"
    if instance.kind == "zeta":
        t = abs(s.imag)
        if (
            config.riemann_siegel
            and s.real == 0.5
            and t >= config.riemann_siegel_height
            and riemann_siegel_error(t) <= tol
        ):
            return "riemann-siegel"
        return "euler-maclaurin"
    if instance.kind == "dirichlet":
        return "hurwitz"
    if series_tail(instance, s.real, _series_bound(instance, config)) <= tol:
        return "series"
    if instance.kind == "delta":
        return "afe"
    e = DomainError(
        f"No evaluator reaches {tol=} for {instance.label} at {s=}"
    )
    logger.exception(e)
    raise e


def _euler_maclaurin(instance, s, tol, config) -> EvalResult:
    if instance.kind != "zeta":
        e = DomainError(f"euler-maclaurin evaluates zeta only, not {instance}")
        logger.exception(e)
        raise e
    value, err = hurwitz_zeta_with_error(s, 1.0, tol, config)
    return EvalResult(value, err, "euler-maclaurin", em_terms(s, config))


def _hurwitz(instance, s, tol, config) -> EvalResult:
    """L(s, chi) = q^-s sum_a chi(a) zeta(s, a/q).

    The pole terms base_a^(1-s)/(s-1) are combined with sum_a chi(a) = 0 so
    that s = 1 is an ordinary point.
    """
    if instance.kind == "zeta":
        return _euler_maclaurin(instance, s, tol, config)
    chi = instance.character
    if chi is None:
        e = DomainError(f"hurwitz needs a Dirichlet character, not {instance}")
        logger.exception(e)
        raise e
    q = chi.modulus
    residues = [a for a in range(1, q) if math.gcd(a, q) == 1]
    n_terms = em_terms(s, config)
    scale = cmath.exp(-s * math.log(q))
    for attempt in range(5):
        total = 0j
        err = 0.0
        for a in residues:
            regular, base, err_a = hurwitz_regular(
                s, a / q, n_terms, config.bernoulli_order
            )
            log_base = math.log(base)
            pole = -log_base * expm1_ratio((1 - s) * log_base)
            total += chi(a) * (regular + pole)
            err += err_a
        err *= abs(scale)
        if err <= tol:
            break
        n_terms *= 2
    return EvalResult(scale * total, err, "hurwitz", n_terms * len(residues))


def _series_bound(instance, config) -> int:
    return int(min(instance.satake_provider.prime_bound, config.series_prime_bound))


def series_tail(instance: AutomorphicInstance, sigma: float, bound: int) -> float:
    """Relative tail of the Euler product over p > bound at Re(s) = sigma"""
    excess = sigma - 1 - instance.ramanujan_exponent
    if excess <= 0 or bound < 2:
        return math.inf
    return instance.degree * bound ** (-excess) / (excess * math.log(bound))


@lru_cache(maxsize=32)
def _satake_table(instance: AutomorphicInstance, bound: int) -> tuple:
    primes = primes_up_to(bound)
    alpha = np.array([instance.satake(int(p)) for p in primes], dtype=complex)
    return np.log(primes.astype(float)), alpha.reshape(len(primes), -1)


def euler_product(
    instance: AutomorphicInstance, s_values, config: EvalConfig = EvalConfig()
) -> tuple:
    """Vectorised truncated Euler product.

    Returns (values, errors) for every s in `s_values`; errors are infinite
    where Re(s) is outside the region of absolute convergence.
    """
    s_values = np.atleast_1d(np.asarray(s_values, dtype=complex))
    bound = _series_bound(instance, config)
    log_p, alpha = _satake_table(instance, bound)
    values = np.empty(len(s_values), dtype=complex)
    chunk = 256
    for start in range(0, len(s_values), chunk):
        s = s_values[start : start + chunk]
        powers = np.exp(-s[:, None] * log_p[None, :])
        logs = np.log1p(-alpha[None, :, :] * powers[:, :, None])
        values[start : start + chunk] = np.exp(-logs.sum(axis=(1, 2)))
    tails = np.array([series_tail(instance, x, bound) for x in s_values.real])
    with np.errstate(over="ignore", invalid="ignore"):
        errors = np.abs(values) * np.expm1(tails)
    return values, errors


def _series(instance, s, tol, config) -> EvalResult:
    values, errors = euler_product(instance, [s], config)
    bound = _series_bound(instance, config)
    return EvalResult(complex(values[0]), float(errors[0]), "series", bound)


def evaluate_many(
    instance: AutomorphicInstance,
    s_values,
    tol: float = None,
    config: EvalConfig = EvalConfig(),
) -> np.ndarray:
    """L at many points; the Euler product is used in one shot when its tail
    meets `tol` everywhere."""
    tol = config.tolerance if tol is None else tol
    s_values = np.asarray(s_values, dtype=complex)
    bound = _series_bound(instance, config)
    if len(s_values) and series_tail(instance, s_values.real.min(), bound) <= tol:
        values, _ = euler_product(instance, s_values, config)
        return values
    return np.array(
        [evaluate_L(instance, s, tol, config=config).value for s in s_values]
    )


_mp_local = threading.local()


def _mp_context(dps: int):
    ctx = getattr(_mp_local, "ctx", None)
    if ctx is None:
        ctx = mpmath.MPContext()
        _mp_local.ctx = ctx
    ctx.dps = dps
    return ctx


def afe_rotation_angle(t: float, rotation: float) -> float:
    if abs(t) <= rotation / (math.pi / 2):
        return 0.0
    return math.copysign(math.pi / 2 - rotation / abs(t), t)


def _afe(instance, s, tol, config) -> EvalResult:
    """Smoothed approximate functional equation of the weight 12 form.

    With s' = s + 11/2 and any |phi| < pi/2,

        (2 pi)^-s' Gamma(s') L = sum_n tau(n) [(2 pi n)^-s' Gamma(s', 2 pi n e^(i phi))
                                 + (2 pi n)^(s'-12) Gamma(12 - s', 2 pi n e^(-i phi))].

    phi close to sign(t) pi/2 keeps the terms of the size of the result.
    """
    if instance.kind != "delta":
        e = DomainError(f"afe is implemented for delta only, not {instance}")
        logger.exception(e)
        raise e
    provider = instance.satake_provider
    tau = provider.tau
    ctx = _mp_context(config.afe_precision)
    shift = (DELTA_WEIGHT - 1) / 2
    sp = ctx.mpc(s.real + shift, s.imag)
    dual = DELTA_WEIGHT - sp
    phi = afe_rotation_angle(s.imag, config.afe_rotation)
    rot = ctx.expj(phi)
    rot_conj = ctx.conj(rot)
    two_pi = 2 * ctx.pi
    scale = two_pi**sp / ctx.gamma(sp)
    n0 = math.ceil(
        config.afe_constant * math.sqrt(analytic_conductor(instance, s)) / (2 * math.pi)
    )

    total = ctx.mpc(0)
    quiet, contribution, n = 0, 0.0, 0
    while quiet < 3:
        n += 1
        if n > provider.prime_bound:
            e = TableTooShortError(
                f"AFE at {s=} needs tau({n}), extend tau table"
            )
            logger.exception(e)
            raise e
        if tau[n] == 0:
            continue
        x = two_pi * n
        term = tau[n] * (
            x ** (-sp) * ctx.gammainc(sp, x * rot)
            + x ** (sp - DELTA_WEIGHT) * ctx.gammainc(dual, x * rot_conj)
        )
        total += term
        contribution = float(abs(term * scale))
        quiet = quiet + 1 if n >= n0 and contribution < tol / 10 else 0
    value = complex(total * scale)
    err = 10 * contribution + abs(value) * 10.0 ** (3 - config.afe_precision)
    return EvalResult(value, err, "afe", n)


def riemann_siegel_theta(t: float) -> float:
    return log_gamma(0.25 + 0.5j * t).imag - 0.5 * t * LOG_PI


def _rs_c0(p: float) -> float:
    den = math.cos(2 * math.pi * p)
    if abs(den) < 1e-6:
        return 0.5 * (_rs_c0(p - 1e-5) + _rs_c0(p + 1e-5))
    return math.cos(2 * math.pi * (p * p - p - 1 / 16)) / den


def riemann_siegel_error(t: float) -> float:
    return RS_REMAINDER * (abs(t) / (2 * math.pi)) ** -1.25


def riemann_siegel_Z(t: float) -> tuple:
    """Hardy's Z(t) by the Riemann-Siegel formula with the C0 and C1
    corrections. Returns (Z, error bound)."""
    t = abs(float(t))
    a = math.sqrt(t / (2 * math.pi))
    n_max = int(a)
    n = np.arange(1, n_max + 1, dtype=float)
    theta = riemann_siegel_theta(t)
    main = 2 * float(np.sum(np.cos(theta - t * np.log(n)) / np.sqrt(n)))
    p = a - n_max
    h = 1e-3
    # C1 = -Psi'''(p) / (96 pi^2), Psi = C0
    third = (
        _rs_c0(p + 2 * h) - 2 * _rs_c0(p + h) + 2 * _rs_c0(p - h) - _rs_c0(p - 2 * h)
    ) / (2 * h**3)
    c1 = -third / (96 * math.pi**2)
    remainder = (-1) ** (n_max - 1) * a**-0.5 * (_rs_c0(p) + c1 / a)
    return main + remainder, riemann_siegel_error(t)


def _riemann_siegel(instance, s, tol, config) -> EvalResult:
    if instance.kind != "zeta" or s.real != 0.5:
        e = DomainError(f"riemann-siegel evaluates zeta on Re(s)=1/2, got {s=}")
        logger.exception(e)
        raise e
    t = s.imag
    z, err = riemann_siegel_Z(t)
    value = z * cmath.exp(-1j * riemann_siegel_theta(abs(t)))
    if t < 0:
        value = value.conjugate()
    return EvalResult(value, err, "riemann-siegel", int(math.sqrt(abs(t) / (2 * math.pi))))


def reflect(
    instance: AutomorphicInstance,
    s,
    tol: float = None,
    config: EvalConfig = EvalConfig(),
) -> EvalResult:
    """L(s) = W q^(1/2 - s) gamma(1 - s, dual) / gamma(s) L(1 - s, dual)"""
    s = complex(s)
    tol = config.tolerance if tol is None else tol
    if not s.real < 0.5:
        e = DomainError(f"reflect needs Re(s) < 1/2, got {s=}")
        logger.exception(e)
        raise e
    if instance.root_number is None:
        e = InstanceException(
            f"{instance.label} has no root number, use solve_root_number"
        )
        logger.exception(e)
        raise e
    dual = contragredient(instance)
    log_ratio = (
        (0.5 - s) * math.log(instance.arithmetic_conductor)
        + archimedean_log(dual, 1 - s)
        - archimedean_log(instance, s)
    )
    factor = complex(instance.root_number) * cmath.exp(log_ratio)
    inner_tol = tol / max(abs(factor), 1e-300)
    inner = evaluate_L(dual, 1 - s, min(inner_tol, 1.0), config=config)
    return EvalResult(
        factor * inner.value, abs(factor) * inner.error, "reflect", inner.terms
    )


def _reflect(instance, s, tol, config) -> EvalResult:
    return reflect(instance, s, tol, config)


_EVALUATORS = {
    "euler-maclaurin": _euler_maclaurin,
    "hurwitz": _hurwitz,
    "afe": _afe,
    "reflect": _reflect,
    "series": _series,
    "riemann-siegel": _riemann_siegel,
}


def completed_lambda(
    instance: AutomorphicInstance,
    s,
    config: EvalConfig = EvalConfig(),
    strategy: str = None,
) -> complex:
    """Lambda(s) = (s(1-s))^omega q^(s/2) L(s) L(s, pi_inf).

    L is evaluated by the instance's direct strategy unless `strategy` says
    otherwise, so that both sides of the functional equation are independent
    computations.
    """
    s = complex(s)
    strategy = strategy or direct_strategy(instance)
    value = evaluate_L(instance, s, strategy=strategy, config=config).value
    log_factor = s / 2 * math.log(instance.arithmetic_conductor) + archimedean_log(
        instance, s
    )
    return (s * (1 - s)) ** instance.pole_order * value * cmath.exp(log_factor)


def functional_equation_residual(
    instance: AutomorphicInstance,
    s,
    config: EvalConfig = EvalConfig(),
    root_number=None,
) -> float:
    """|Lambda(s, pi) - W Lambda(1 - s, dual)|"""
    s = complex(s)
    w = instance.root_number if root_number is None else root_number
    if w is None:
        e = InstanceException(f"{instance.label} has no root number")
        logger.exception(e)
        raise e
    left = completed_lambda(instance, s, config)
    right = completed_lambda(contragredient(instance), 1 - s, config)
    residual = abs(left - complex(w) * right)
    logger.debug(f"Functional equation of {instance.label} at {s=}: {residual=}")
    return residual


def solve_root_number(
    instance: AutomorphicInstance, points, config: EvalConfig = EvalConfig()
) -> complex:
    """Least-squares W from Lambda(s) = W Lambda(1 - s, dual) at `points`,
    normalised to modulus one."""
    dual = contragredient(instance)
    num, den = 0j, 0.0
    for s in points:
        s = complex(s)
        left = completed_lambda(instance, s, config)
        right = completed_lambda(dual, 1 - s, config)
        num += left * right.conjugate()
        den += abs(right) ** 2
    if den == 0 or num == 0:
        e = DomainError(f"Cannot solve the root number of {instance} at {points}")
        logger.exception(e)
        raise e
    w = num / den
    logger.info(f"Solved root number of {instance.label}: {w=}, |W|={abs(w)}")
    return w / abs(w)


def critical_line_phase(instance: AutomorphicInstance, s) -> float:
    """Im of log(q^(s/2) L(s, pi_inf)); rotating L by it gives the completed
    function's phase without its exponentially small modulus."""
    s = complex(s)
    return (
        s / 2 * math.log(instance.arithmetic_conductor) + archimedean_log(instance, s)
    ).imag
