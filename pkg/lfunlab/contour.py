"""Vertical-line integrals and the G/g/J machinery.

All integrals are (1/2 pi i) int_{c - iH}^{c + iH} f(w) dw
= (1/2 pi) int_{-H}^{H} f(c + iv) dv, computed with composite Gauss-Legendre
panels. Every truncation height comes with a tail certificate
C H^(1-p) / (p - 1) for an integrand bounded by C |v|^-p on both sides.
When the integrand also oscillates like e^(i omega v), one integration by
parts gains a power: the tail is bounded by 2 C' H^-p / omega, the same as
the plain certificate for exponent p + 1 and constant 2 p C' / omega.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from termcolor import colored

from lfunlab.coefficients import CoefficientTable
from lfunlab.config import ContourConfig
from lfunlab.config import EvalConfig
from lfunlab.exceptions import DomainError
from lfunlab.exceptions import PoleError
from lfunlab.evaluation import evaluate_L
from lfunlab.evaluation import evaluate_many
from lfunlab.instances import AutomorphicInstance
from lfunlab.mollifier import H_closed
from lfunlab.mollifier import sweep_sums
from lfunlab.quadrature import composite_gauss_legendre
from lfunlab.special import hurwitz_zeta
from lfunlab.utils import BoundedCache

logger = logging.getLogger(__name__)

# Stieltjes constants: (z - 1) zeta(z) = 1 + g0 h - g1 h^2 + g2 h^3 / 2 + ...
STIELTJES = (0.5772156649015329, -0.07281584548367672, -0.009690363192872318)
LIMIT_RADIUS = 1e-4
POLE_RADIUS = 1e-8


@dataclass(frozen=True)
class ZeroHypothesis:
    rho: complex
    kind: str = "synthetic"

    def __post_init__(self):
        if not 0 < self.rho.real < 1:
            raise DomainError(f"Zero {self.rho} outside the critical strip")
        if self.kind not in ("synthetic", "verified-zero"):
            raise DomainError(f"Unknown hypothesis kind {self.kind!r}")

    @property
    def beta(self) -> float:
        return self.rho.real

    @property
    def gamma(self) -> float:
        return self.rho.imag

    def conjugate(self):
        return ZeroHypothesis(self.rho.conjugate(), self.kind)


def tail_height(decay_exponent: float, decay_constant: float, tol: float) -> float:
    """Smallest H with C H^(1-p) / (p - 1) <= tol"""
    if decay_exponent <= 1:
        e = DomainError(f"Tail exponent {decay_exponent} must exceed 1")
        logger.exception(e)
        raise e
    if not tol > 0:
        raise DomainError(f"{tol=} must be positive")
    p = decay_exponent
    return (decay_constant / ((p - 1) * tol)) ** (1 / (p - 1))


@dataclass(frozen=True)
class ContourSpec:
    abscissa: float
    height: float
    nodes_per_unit: int = 16
    tail_constant: float = 1.0
    tail_exponent: float = 2.0
    tolerance: float = 1e-8

    def __post_init__(self):
        if not self.height > 0:
            raise DomainError(f"Truncation height {self.height} must be positive")
        if self.nodes_per_unit < 8:
            raise DomainError(f"{self.nodes_per_unit=} below 8")
        if self.tail > self.tolerance * (1 + 1e-9):
            raise DomainError(
                f"Tail certificate {self.tail:.2e} at H={self.height} exceeds "
                f"{self.tolerance:.2e}"
            )

    @property
    def tail(self) -> float:
        p = self.tail_exponent
        return self.tail_constant * self.height ** (1 - p) / (p - 1)

    @classmethod
    def certified(
        cls,
        abscissa: float,
        decay_exponent: float,
        decay_constant: float,
        tol: float,
        nodes_per_unit: int = 16,
        min_height: float = 1.0,
    ):
        height = max(tail_height(decay_exponent, decay_constant, tol), min_height)
        return cls(
            abscissa, height, nodes_per_unit, decay_constant, decay_exponent, tol
        )

    @classmethod
    def oscillatory(
        cls,
        abscissa: float,
        decay_exponent: float,
        decay_constant: float,
        omega: float,
        tol: float,
        nodes_per_unit: int = 16,
        min_height: float = 1.0,
    ):
        """Certificate for an integrand C |v|^-p e^(i omega v)"""
        omega = abs(omega)
        plain = cls.certified(
            abscissa, decay_exponent, decay_constant, tol, nodes_per_unit, min_height
        )
        if omega == 0:
            return plain
        gained = cls.certified(
            abscissa,
            decay_exponent + 1,
            2 * decay_exponent * decay_constant / omega,
            tol,
            nodes_per_unit,
            min_height,
        )
        return gained if gained.height < plain.height else plain


@dataclass(frozen=True)
class ContourValue:
    value: complex
    error: float
    nodes: int

    def __iter__(self):
        return iter((self.value, self.error))


@dataclass(frozen=True)
class CheckReport:
    check: str
    inputs: dict
    value: object
    reference: object
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        data = dict(
            check=self.check,
            inputs=self.inputs,
            value=self.value,
            reference=self.reference,
            tolerance=self.tolerance,
            passed=self.passed,
        )
        data.update(self.extra)
        return data

    def __str__(self):
        verdict = colored("PASS", "green") if self.passed else colored("FAIL", "red")
        return f"[{verdict}] {self.check} {self.inputs}: {self.value} vs {self.reference}"


def _sample(integrand, w):
    f = np.asarray(integrand(w), dtype=complex)
    bad = ~np.isfinite(f)
    if np.any(bad):
        e = DomainError(f"Non-finite integrand at w={w[bad][0]}")
        logger.exception(e)
        raise e
    return f


def line_integral(
    integrand: Callable,
    spec: ContourSpec,
    oscillation: float = 0.0,
    max_refinements: int = 4,
) -> ContourValue:
    """(1/2 pi i) int over c + i[-H, H] of a vectorised integrand.

    The panel density starts at `spec.nodes_per_unit` per unit height (more
    when `oscillation` is large) and doubles until two successive values
    agree to half the tolerance. The error is that difference plus the tail
    certificate.
    """
    per_unit = max(1, math.ceil(abs(oscillation) / 4))
    height = spec.height
    previous, value, nodes = None, 0j, 0
    diff = math.inf
    for level in range(max_refinements + 1):
        count = math.ceil(2 * height * per_unit) * 2**level
        v, weights = composite_gauss_legendre(
            np.linspace(-height, height, count + 1), spec.nodes_per_unit
        )
        f = _sample(integrand, spec.abscissa + 1j * v)
        value = complex(np.sum(f * weights)) / (2 * math.pi)
        nodes = len(v)
        if previous is not None:
            diff = abs(value - previous)
            if diff <= spec.tolerance / 2:
                break
        previous = value
    else:
        logger.warning(
            f"line_integral at c={spec.abscissa} H={height:.1f}: refinements "
            f"still differ by {diff:.2e}"
        )
    return ContourValue(value, diff + spec.tail, nodes)


def log_identity_spec(y: float, c: float, tol: float, config=ContourConfig()):
    """Certificate for y^z / z^2 on Re z = c (both tails)"""
    constant = 2 * y**c / (2 * math.pi)
    return ContourSpec.oscillatory(
        c, 2.0, constant, math.log(y), tol / 2, config.nodes_per_unit
    )


def verify_log_identity(
    y: float, c: float, tol: float = 1e-6, config: ContourConfig = ContourConfig()
) -> CheckReport:
    """(1/2 pi i) int_(c) y^z / z^2 dz = log y for y > 1 and 0 for y < 1"""
    if not y > 0 or y == 1 or not c > 0:
        raise DomainError(f"Log identity needs y > 0, y != 1, c > 0; got {y=} {c=}")
    spec = log_identity_spec(y, c, tol, config)
    log_y = math.log(y)
    result = line_integral(
        lambda z: np.exp(z * log_y) / z**2, spec, log_y, config.max_refinements
    )
    reference = log_y if y > 1 else 0.0
    passed = abs(result.value - reference) < tol
    logger.info(f"Log identity {y=} {c=}: {result.value} vs {reference}")
    return CheckReport(
        "log-identity",
        dict(y=y, c=c, height=spec.height),
        result.value,
        reference,
        tol,
        passed,
    )


def _kronecker(instance: AutomorphicInstance) -> int:
    return 1 if instance.kind == "zeta" else 0


def _zeta_pole_product(h):
    """(z - 1) zeta(z) at z = 1 + h for small h"""
    g0, g1, g2 = STIELTJES
    return 1 + g0 * h - g1 * h**2 + g2 * h**3 / 2


def explicit_integrand(
    instance: AutomorphicInstance, t: float, hyp: ZeroHypothesis, x: float = None
) -> Callable:
    """w -> x^w (w - 3/2 + it)^d / ((w + 1)^2 (w - 1/2 + it - rho)(w + it + 1)^(1+m+d)),
    which is G_t H_t x^w with L cancelled; x=None drops x^w."""
    d = _kronecker(instance)
    power = 1 + instance.degree + d
    rho = hyp.rho
    log_x = None if x is None else math.log(x)

    def integrand(w):
        w = np.asarray(w, dtype=complex)
        out = (w - 1.5 + 1j * t) ** d / (
            (w + 1) ** 2 * (w - 0.5 + 1j * t - rho) * (w + 1j * t + 1) ** power
        )
        if log_x is not None:
            out = out * np.exp(w * log_x)
        return out

    return integrand


def G_values(
    instance: AutomorphicInstance,
    t: float,
    w,
    hyp: ZeroHypothesis,
    config: EvalConfig = EvalConfig(),
    tol: float = None,
) -> np.ndarray:
    """G_t(w) = (w-1)^2 (w-3/2+it)^d L(w-1/2+it) / ((w+1)^2 (w-1/2+it-rho)(w+it+1)^(1+m+d)).

    For zeta the factor (w - 3/2 + it) L(w - 1/2 + it) is taken from the
    Laurent expansion within 1e-4 of the pole.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(w.real < 0):
        raise DomainError("G_t is evaluated on Re(w) >= 0 only")
    pole = hyp.rho + 0.5 - 1j * t
    if np.any(np.abs(w - pole) < POLE_RADIUS):
        e = PoleError(f"G_t evaluated within {POLE_RADIUS} of its pole {pole}")
        logger.exception(e)
        raise e
    d = _kronecker(instance)
    z = w - 0.5 + 1j * t
    numerator = np.empty(len(w), dtype=complex)
    if d:
        near = np.abs(z - 1) < LIMIT_RADIUS
        numerator[near] = [_zeta_pole_product(h) for h in z[near] - 1]
        far = ~near
        numerator[far] = (z[far] - 1) * evaluate_many(instance, z[far], tol, config)
    else:
        numerator[:] = evaluate_many(instance, z, tol, config)
    power = 1 + instance.degree + d
    return (w - 1) ** 2 * numerator / (
        (w + 1) ** 2 * (w - pole) * (w + 1j * t + 1) ** power
    )


def G_eval(
    instance: AutomorphicInstance,
    t: float,
    w,
    hyp: ZeroHypothesis,
    config: EvalConfig = EvalConfig(),
) -> complex:
    return complex(G_values(instance, t, [w], hyp, config)[0])


def L_bound(instance: AutomorphicInstance, sigma: float) -> float:
    """|L(s)| and |1/L(s)| are at most zeta(sigma - delta)^m for Re s = sigma"""
    shifted = sigma - instance.ramanujan_exponent
    return hurwitz_zeta(shifted, 1.0).real ** instance.degree


def G_decay_constant(instance: AutomorphicInstance, c: float) -> float:
    """C with |G_t(c + iv)| <= C |v|^-(2+m) far out, both sides included"""
    m = instance.degree
    return 2 * 2 ** (2 + m) * L_bound(instance, c - 0.5) / (2 * math.pi)


def _far_height(t: float, hyp: ZeroHypothesis) -> float:
    return 2 * (abs(t) + abs(hyp.gamma) + 4)


def g_spec(
    instance: AutomorphicInstance,
    t: float,
    u: float,
    hyp: ZeroHypothesis,
    config: ContourConfig = ContourConfig(),
) -> ContourSpec:
    c = config.abscissa
    return ContourSpec.oscillatory(
        c,
        2 + instance.degree,
        G_decay_constant(instance, c) * u ** (-c),
        math.log(u),
        config.tolerance,
        config.nodes_per_unit,
        _far_height(t, hyp),
    )


def kernel_spec(
    instance: AutomorphicInstance,
    t: float,
    x: float,
    hyp: ZeroHypothesis,
    config: ContourConfig = ContourConfig(),
) -> ContourSpec:
    """Truncation of the g-kernel as seen by J_t: the dropped part of the
    line integral meets H_t, which brings two more powers of decay."""
    c = config.abscissa
    m = instance.degree
    constant = G_decay_constant(instance, c) * x**c * L_bound(instance, c - 0.5)
    if config.kernel_height is not None:
        height = config.kernel_height
        tail = constant * height ** (-3 - m) / (3 + m)
        return ContourSpec(
            c, height, config.nodes_per_unit, constant, 4 + m,
            max(config.tolerance, tail),
        )
    return ContourSpec.certified(
        c, 4 + m, constant, config.tolerance, config.nodes_per_unit,
        _far_height(t, hyp),
    )


@dataclass(frozen=True, eq=False)
class GKernel:
    """g_t(u) = (1/2 pi i) int_(c) G_t(w) u^-w dw from G_t cached at the nodes"""

    abscissa: float
    height: float
    v: np.ndarray
    weighted: np.ndarray

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        log_u = np.log(u)
        out = np.empty(len(u), dtype=complex)
        chunk = 128
        for start in range(0, len(u), chunk):
            lu = log_u[start : start + chunk]
            phases = np.exp(-1j * np.outer(lu, self.v))
            out[start : start + chunk] = phases @ self.weighted
        return out * np.exp(-self.abscissa * log_u)


KERNEL_CACHE_SIZE = 32

_kernels = BoundedCache(KERNEL_CACHE_SIZE)


def g_kernel(
    instance: AutomorphicInstance,
    t: float,
    hyp: ZeroHypothesis,
    spec: ContourSpec,
    config: EvalConfig = EvalConfig(),
    l_tolerance: float = 1e-5,
) -> GKernel:
    """Kernel built once per (instance, t, hypothesis, spec), then read-only.

    L is taken from truncated Euler products when their tail is below
    `l_tolerance`; a finite Euler product is itself a Dirichlet series, so
    the vanishing of g_t for u > 1 is not affected by the truncation.
    """
    key = (instance, float(t), hyp, spec, repr(config), l_tolerance)
    kernel = _kernels.get(key)
    if kernel is not None:
        return kernel
    count = math.ceil(2 * spec.height)
    v, weights = composite_gauss_legendre(
        np.linspace(-spec.height, spec.height, count + 1), spec.nodes_per_unit
    )
    g = G_values(instance, t, spec.abscissa + 1j * v, hyp, config, l_tolerance)
    kernel = GKernel(spec.abscissa, spec.height, v, g * weights / (2 * math.pi))
    logger.info(
        f"Built g-kernel of {instance.label} {t=} rho={hyp.rho} with {len(v)} nodes"
    )
    return _kernels.setdefault(key, kernel)


def clear_kernels():
    _kernels.clear()


def g_eval(
    instance: AutomorphicInstance,
    t: float,
    u: float,
    hyp: ZeroHypothesis,
    spec: ContourSpec = None,
    config: EvalConfig = EvalConfig(),
    contour: ContourConfig = ContourConfig(),
) -> ContourValue:
    """g_t(u); vanishes for u > 1 up to the truncation certificate"""
    if not u > 0:
        raise DomainError(f"g_t needs u > 0, got {u=}")
    spec = spec or g_spec(instance, t, u, hyp, contour)
    kernel = g_kernel(instance, t, hyp, spec, config)
    return ContourValue(complex(kernel([u])[0]), spec.tail, len(kernel.v))


def explicit_spec(
    instance: AutomorphicInstance,
    t: float,
    x: float,
    hyp: ZeroHypothesis,
    c: float,
    config: ContourConfig = ContourConfig(),
) -> ContourSpec:
    """Certificate for the cancelled integrand on Re w = c"""
    m = instance.degree
    constant = 2 * 1.5 * x**c * 2 ** (2 + m) / (2 * math.pi)
    return ContourSpec.certified(
        c, 4 + m, constant, config.tolerance, config.nodes_per_unit,
        _far_height(t, hyp),
    )


def _check_x(x: float):
    if x < 2:
        e = DomainError(f"J_t needs x >= 2, got {x=}")
        logger.exception(e)
        raise e


def J_direct(
    instance: AutomorphicInstance,
    t: float,
    x: float,
    hyp: ZeroHypothesis,
    spec: ContourSpec = None,
    config: ContourConfig = ContourConfig(),
) -> ContourValue:
    """J_t on Re w = 3 with the cancelled integrand"""
    _check_x(x)
    spec = spec or explicit_spec(instance, t, x, hyp, config.abscissa, config)
    result = line_integral(
        explicit_integrand(instance, t, hyp, x), spec, math.log(x),
        config.max_refinements,
    )
    logger.info(f"J_direct {instance.label} {t=} {x=}: {result.value}")
    return result


def J_residue_term(
    instance: AutomorphicInstance, t: float, x: float, hyp: ZeroHypothesis
) -> complex:
    """x^(rho+1/2-it) (rho-1)^d / ((rho-it+3/2)^2 (rho+3/2)^(1+m+d))"""
    d = _kronecker(instance)
    rho = hyp.rho
    return (
        np.exp((rho + 0.5 - 1j * t) * math.log(x))
        * (rho - 1) ** d
        / ((rho - 1j * t + 1.5) ** 2 * (rho + 1.5) ** (1 + instance.degree + d))
    )


def J_residue(
    instance: AutomorphicInstance,
    t: float,
    x: float,
    hyp: ZeroHypothesis,
    spec: ContourSpec = None,
    config: ContourConfig = ContourConfig(),
) -> ContourValue:
    """Residue at w = rho + 1/2 - it plus the integral on Re w = 0"""
    _check_x(x)
    if not -0.5 < hyp.beta < 2.5:
        e = PoleError(f"Pole {hyp.rho} is not between the contours")
        logger.exception(e)
        raise e
    spec = spec or explicit_spec(instance, t, x, hyp, 0.0, config)
    line = line_integral(
        explicit_integrand(instance, t, hyp, x), spec, math.log(x),
        config.max_refinements,
    )
    residue = complex(J_residue_term(instance, t, x, hyp))
    return ContourValue(residue + line.value, line.error, line.nodes)


def J_convolution(
    instance: AutomorphicInstance,
    table: CoefficientTable,
    t: float,
    x: float,
    hyp: ZeroHypothesis,
    spec: ContourSpec = None,
    config: ContourConfig = ContourConfig(),
    eval_config: EvalConfig = EvalConfig(),
) -> ContourValue:
    """int_1^x M_y(1/2 + it) log y g_t(y/x) dy.

    g_t is tabulated on a geometric grid of [1/x, 1] and interpolated by a
    cubic spline in log u; the y-integral uses Gauss-Legendre nodes on each
    unit interval, where M_y log y = A_n log y - B_n.
    """
    _check_x(x)
    n_max = math.floor(x)
    table.require(n_max)
    spec = spec or kernel_spec(instance, t, x, hyp, config)
    kernel = g_kernel(instance, t, hyp, spec, eval_config)
    u = np.geomspace(1 / x, 1.0, config.kernel_grid)
    g = kernel(u)
    spline = CubicSpline(np.log(u), np.column_stack([g.real, g.imag]))

    a, b = sweep_sums(table, [t], n_max)
    a, b = a[0, 1:], b[0, 1:]
    edges = np.append(np.arange(1, n_max + 1, dtype=float), x)
    edges = edges[np.concatenate([[True], np.diff(edges) > 0])]
    estimates = []
    for nodes in (config.nodes_per_unit // 2, config.nodes_per_unit):
        y, weights = composite_gauss_legendre(edges, nodes)
        interval = np.repeat(np.arange(len(edges) - 1), nodes)
        f = a[interval] * np.log(y) - b[interval]
        gy = spline(np.log(y / x))
        estimates.append(complex(np.sum(weights * f * (gy[:, 0] + 1j * gy[:, 1]))))
    value = estimates[1]
    error = abs(estimates[1] - estimates[0]) + spec.tail
    logger.info(f"J_convolution {instance.label} {t=} {x=}: {value}")
    return ContourValue(value, error, len(kernel.v))


def cancellation_check(
    instance: AutomorphicInstance,
    t: float,
    w,
    hyp: ZeroHypothesis,
    tol: float = 1e-8,
    config: EvalConfig = EvalConfig(),
) -> CheckReport:
    """G_t(w) H_t(w) from separate L evaluations against the cancelled form"""
    w = complex(w)
    if not 2 <= w.real <= 3:
        e = DomainError(f"cancellation_check needs 2 <= Re(w) <= 3, got {w}")
        logger.exception(e)
        raise e
    value = G_eval(instance, t, w, hyp, config) * H_closed(instance, t, w, config)
    reference = complex(explicit_integrand(instance, t, hyp)(w))
    diff = abs(value - reference) / abs(reference)
    return CheckReport(
        "cancellation",
        dict(instance=instance.label, t=t, w=w, rho=hyp.rho),
        value,
        reference,
        tol,
        diff < tol,
        dict(relative_difference=diff),
    )


def vanishing_check(
    instance: AutomorphicInstance,
    t: float,
    u: float,
    hyp: ZeroHypothesis,
    config: EvalConfig = EvalConfig(),
    contour: ContourConfig = ContourConfig(),
) -> CheckReport:
    result = g_eval(instance, t, u, hyp, config=config, contour=contour)
    return CheckReport(
        "g-vanishing",
        dict(instance=instance.label, t=t, u=u, rho=hyp.rho),
        result.value,
        0.0,
        contour.tolerance,
        abs(result.value) <= contour.tolerance,
    )


def j_agreement_check(
    instance: AutomorphicInstance,
    table: CoefficientTable,
    t: float,
    x: float,
    hyp: ZeroHypothesis,
    tol: float = 1e-4,
    config: ContourConfig = ContourConfig(tolerance=1e-10),
    eval_config: EvalConfig = EvalConfig(),
) -> CheckReport:
    """J_t(x) by the direct, residue and convolution routes.

    Direct and residue share the contour machinery and must agree to the
    contour tolerance; the convolution route to `tol` plus its own error.
    """
    direct = J_direct(instance, t, x, hyp, config=config)
    residue = J_residue(instance, t, x, hyp, config=config)
    convolution = J_convolution(instance, table, t, x, hyp, eval_config=eval_config)
    residue_diff = abs(direct.value - residue.value)
    convolution_diff = abs(direct.value - convolution.value)
    passed = (
        residue_diff <= 100 * config.tolerance
        and convolution_diff <= tol + convolution.error
    )
    return CheckReport(
        "J-agreement",
        dict(instance=instance.label, t=t, x=x, rho=hyp.rho),
        convolution.value,
        direct.value,
        tol,
        passed,
        dict(
            residue=residue.value,
            residue_difference=residue_diff,
            convolution_difference=convolution_diff,
            convolution_error=convolution.error,
        ),
    )
