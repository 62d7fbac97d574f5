import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from termcolor import colored

from lfunlab.coefficients import CoefficientTable
from lfunlab.config import EvalConfig
from lfunlab.config import QuadratureConfig
from lfunlab.evaluation import evaluate_L
from lfunlab.evaluation import riemann_siegel_error
from lfunlab.exceptions import DomainError
from lfunlab.instances import AutomorphicInstance
from lfunlab.mollifier import sweep_sums
from lfunlab.mollifier import y_integral
from lfunlab.quadrature import oscillation_rate
from lfunlab.quadrature import quad_panel
from lfunlab.utils import BoundedCache
from lfunlab.utils import fmt
from lfunlab.utils import now

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
MOMENT_KINDS = ("second", "mollified", "y-integrated", "weighted")
CSV_HEADER = ("kind", "T1", "T2", "y_or_X", "value", "error", "seconds")
CACHE_SIZE = 500_000
REGISTRY_SIZE = 16


@dataclass(frozen=True)
class MomentResult:
    label: str
    kind: str
    T1: float
    T2: float
    y_or_X: float
    value: float
    error: float
    panels: int = 0
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MOMENT_KINDS:
            raise DomainError(f"Unknown moment kind {self.kind!r}")
        if self.T1 > self.T2:
            raise DomainError(f"T1={self.T1} > T2={self.T2}")

    def csv_row(self) -> tuple:
        return (
            self.kind,
            fmt(self.T1),
            fmt(self.T2),
            fmt(self.y_or_X),
            fmt(self.value),
            fmt(self.error),
            fmt(self.seconds),
        )

    def to_dict(self):
        data = dict(
            label=self.label, kind=self.kind, T1=self.T1, T2=self.T2,
            y_or_X=self.y_or_X, value=self.value, error=self.error,
            panels=self.panels,
        )
        data.update(self.extra)
        return data

    def __str__(self):
        return (
            f"{colored(self.kind, 'cyan')} moment of {self.label} on "
            f"[{self.T1}, {self.T2}]: {colored(f'{self.value:.10g}', 'green')} "
            f"+/- {self.error:.2e}"
        )


class CriticalLineCache:
    """L(1/2 + it) by t, shared between moment computations.

    Holds at most `maxsize` values, least recently used first out. Values for
    a given t never change, so a race only costs a duplicate evaluation.
    """

    def __init__(
        self,
        instance: AutomorphicInstance,
        config: EvalConfig = EvalConfig(),
        enabled: bool = True,
        maxsize: int = CACHE_SIZE,
    ):
        self.instance = instance
        self.config = config
        self.enabled = enabled
        self._values = BoundedCache(maxsize)
        self.use_riemann_siegel = config.riemann_siegel

    def __len__(self):
        return len(self._values)

    def _compute(self, t: float) -> tuple:
        strategy = None if self.use_riemann_siegel else _no_rs_strategy(self.instance)
        result = evaluate_L(
            self.instance, complex(0.5, t), strategy=strategy, config=self.config
        )
        return result.value, result.error

    def __call__(self, t_values) -> tuple:
        t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
        values = np.empty(len(t_values), dtype=complex)
        errors = np.empty(len(t_values))
        for i, t in enumerate(t_values):
            key = float(t)
            hit = None
            if self.enabled:
                hit = self._values.get(key)
            if hit is None:
                hit = self._compute(key)
                if self.enabled:
                    hit = self._values.setdefault(key, hit)
            values[i], errors[i] = hit
        return values, errors


def _no_rs_strategy(instance):
    return "euler-maclaurin" if instance.kind == "zeta" else None


_caches = BoundedCache(REGISTRY_SIZE)


def critical_line_cache(
    instance: AutomorphicInstance,
    config: EvalConfig = EvalConfig(),
    enabled: bool = True,
) -> CriticalLineCache:
    if not enabled:
        return CriticalLineCache(instance, config, enabled=False)
    key = (instance, repr(config))
    cache = _caches.get(key)
    if cache is None:
        cache = _caches.setdefault(key, CriticalLineCache(instance, config))
    return cache


def riemann_siegel_crosscheck(cache: CriticalLineCache, edges) -> bool:
    """Compares the Riemann-Siegel path to Euler-Maclaurin at panel edges and
    turns it off for `cache` on disagreement."""
    instance, config = cache.instance, cache.config
    for t in edges:
        if abs(t) < config.riemann_siegel_height:
            continue
        s = complex(0.5, t)
        fast = evaluate_L(instance, s, strategy="riemann-siegel", config=config)
        slow = evaluate_L(instance, s, strategy="euler-maclaurin", config=config)
        if abs(fast.value - slow.value) > 10 * riemann_siegel_error(t):
            logger.warning(
                f"Riemann-Siegel disagrees with Euler-Maclaurin at {t=}: "
                f"{fast.value} vs {slow.value}, disabling it"
            )
            cache.use_riemann_siegel = False
            return False
    return True


def _integrate(
    cache: CriticalLineCache,
    weight,
    T1: float,
    T2: float,
    tol: float,
    rate: float,
    quadrature: QuadratureConfig,
    breaks=(),
) -> tuple:
    """int_T1^T2 |L(1/2+it)|^2 weight(t) dt with quadrature and evaluation
    error budgets added."""
    eval_budget = [0.0]
    lock = threading.Lock()

    def integrand(t):
        values, errors = cache(t)
        w = weight(t)
        node_error = float(np.max((2 * np.abs(values) * errors + errors**2) * np.abs(w)))
        with lock:
            eval_budget[0] = max(eval_budget[0], node_error)
        return np.abs(values) ** 2 * w

    if cache.use_riemann_siegel:
        width = quadrature.panel_width
        riemann_siegel_crosscheck(cache, np.arange(T1, T2 + width, width))

    points = [T1] + sorted(b for b in breaks if T1 < b < T2) + [T2]
    value, error, panels = 0.0, 0.0, 0
    for lo, hi in zip(points[:-1], points[1:]):
        part = quad_panel(
            integrand, lo, hi, tol * (hi - lo) / (T2 - T1), rate, quadrature
        )
        value += part.value
        error += part.error
        panels += part.panels
    return value, error + eval_budget[0] * (T2 - T1), panels


def second_moment(
    instance: AutomorphicInstance,
    T1: float,
    T2: float,
    tol: float = 1e-6,
    quadrature: QuadratureConfig = QuadratureConfig(),
    evaluation: EvalConfig = EvalConfig(),
) -> MomentResult:
    """int_T1^T2 |L(1/2 + it)|^2 dt"""
    _check_range(T1, T2)
    start = now()
    if T1 == T2:
        return MomentResult(instance.label, "second", T1, T2, 0.0, 0.0, 0.0)
    cache = critical_line_cache(instance, evaluation, quadrature.cache)
    rate = oscillation_rate(1.0, instance.degree, T2)
    value, error, panels = _integrate(
        cache, np.ones_like, T1, T2, tol, rate, quadrature
    )
    result = MomentResult(
        instance.label, "second", T1, T2, 0.0, value, error, panels, now() - start
    )
    logger.info(f"{result!s}")
    return result


def second_moment_main_term(T: float) -> float:
    """T log(T / 2 pi) + (2 gamma - 1) T, the mean square of zeta on [0, T]"""
    return T * math.log(T / (2 * math.pi)) + (2 * EULER_GAMMA - 1) * T


def _check_range(T1, T2):
    if not 0 <= T1 <= T2:
        e = DomainError(f"Need 0 <= T1 <= T2, got {T1=} {T2=}")
        logger.exception(e)
        raise e


def _mollifier_weight(table: CoefficientTable, y: float):
    n_max = math.floor(y)
    log_y = math.log(y)

    def weight(t):
        a, b = sweep_sums(table, t, n_max)
        m = a[:, n_max] - b[:, n_max] / log_y
        return np.abs(m) ** 2

    return weight


def moment_I(
    instance: AutomorphicInstance,
    table: CoefficientTable,
    y: float,
    T1: float,
    T2: float,
    tol: float = 1e-6,
    quadrature: QuadratureConfig = QuadratureConfig(),
    evaluation: EvalConfig = EvalConfig(),
) -> MomentResult:
    """I_y(T1, T2) = int_T1^T2 |M_y(1/2+it) L(1/2+it)|^2 dt; 0 for y <= 1"""
    _check_range(T1, T2)
    if y <= 0:
        raise DomainError(f"{y=} must be positive")
    start = now()
    if y <= 1 or T1 == T2:
        return MomentResult(instance.label, "mollified", T1, T2, y, 0.0, 0.0)
    table.require(math.floor(y))
    cache = critical_line_cache(instance, evaluation, quadrature.cache)
    rate = oscillation_rate(y, instance.degree, T2)
    value, error, panels = _integrate(
        cache, _mollifier_weight(table, y), T1, T2, tol, rate, quadrature
    )
    result = MomentResult(
        instance.label, "mollified", T1, T2, y, value, error, panels, now() - start
    )
    logger.info(f"{result!s} at {y=}")
    return result


def moment_I_integrated(
    instance: AutomorphicInstance,
    table: CoefficientTable,
    T1: float,
    T2: float,
    X: float,
    tol: float = 1e-6,
    quadrature: QuadratureConfig = QuadratureConfig(),
    evaluation: EvalConfig = EvalConfig(),
) -> MomentResult:
    """int_1^X I_y(T1, T2) dy computed as int |L|^2 Phi(t) dt.

    Phi(t) = int_1^X |M_y(1/2 + it)|^2 dy is exact on each unit interval up
    to the two integrals of 1/log y and 1/log^2 y, which are tabulated once.
    """
    _check_range(T1, T2)
    if X < 1:
        raise DomainError(f"{X=} must be at least 1")
    start = now()
    if X == 1 or T1 == T2:
        return MomentResult(instance.label, "y-integrated", T1, T2, X, 0.0, 0.0)
    n_max = math.floor(X)
    table.require(n_max)

    def weight(t):
        a, b = sweep_sums(table, t, n_max)
        return y_integral(a, b, X, quadrature.inner_nodes)

    cache = critical_line_cache(instance, evaluation, quadrature.cache)
    rate = oscillation_rate(X, instance.degree, T2)
    value, error, panels = _integrate(cache, weight, T1, T2, tol, rate, quadrature)
    result = MomentResult(
        instance.label, "y-integrated", T1, T2, X, value, error, panels,
        now() - start,
    )
    logger.info(f"{result!s} with {X=}")
    return result


def weighted_lower_bounds(
    variant: str, x: float, beta0: float, T: float, degree: int
) -> tuple:
    """The two terms bounding the weighted moment from below.

    local: x^(2 beta0) / T^(5 + 2m) and T / x; all-T: x^(2 beta0) and T / x;
    dyadic: x^(2 beta0) / T^3 and T / x.
    """
    first = x ** (2 * beta0)
    if variant == "local":
        first /= T ** (5 + 2 * degree)
    elif variant == "dyadic":
        first /= T**3
    elif variant != "all-T":
        raise DomainError(f"Unknown lower-bound variant {variant!r}")
    return first, T / x


def weighted_second_moment(
    instance: AutomorphicInstance,
    gamma0: float,
    degree: int,
    T1: float,
    T2: float,
    x: float,
    beta0: float,
    tol: float = 1e-6,
    variant: str = "local",
    quadrature: QuadratureConfig = QuadratureConfig(),
    evaluation: EvalConfig = EvalConfig(),
) -> MomentResult:
    """int |L|^2 (x^(2 beta0) / ((|gamma0 - t| + 1)^4 (|gamma0| + 1)^(2+2m)) + 1/x) dt"""
    _check_range(T1, T2)
    if x < 2:
        raise DomainError(f"{x=} must be at least 2")
    start = now()
    first, second = weighted_lower_bounds(variant, x, beta0, T2, degree)
    extra = dict(lower_bound_zero=first, lower_bound_moment=second)
    if T1 == T2:
        return MomentResult(
            instance.label, "weighted", T1, T2, x, 0.0, 0.0, extra=extra
        )
    scale = x ** (2 * beta0) / (abs(gamma0) + 1) ** (2 + 2 * degree)

    def weight(t):
        return scale / (np.abs(gamma0 - t) + 1) ** 4 + 1 / x

    cache = critical_line_cache(instance, evaluation, quadrature.cache)
    rate = oscillation_rate(1.0, instance.degree, T2)
    value, error, panels = _integrate(
        cache, weight, T1, T2, tol, rate, quadrature, breaks=(gamma0,)
    )
    extra["measured_constant"] = value / (first + second)
    result = MomentResult(
        instance.label, "weighted", T1, T2, x, value, error, panels,
        now() - start, extra,
    )
    logger.info(f"{result!s}, lower bounds {first=:.3e} {second=:.3e}")
    return result
