import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from lfunlab.coefficients import CoefficientTable
from lfunlab.coefficients import build_coefficients
from lfunlab.config import EvalConfig
from lfunlab.config import QuadratureConfig
from lfunlab.evaluation import evaluate_L
from lfunlab.exceptions import DomainError
from lfunlab.exceptions import PoleError
from lfunlab.instances import AutomorphicInstance
from lfunlab.quadrature import composite_gauss_legendre

logger = logging.getLogger(__name__)


def mollifier_value(table: CoefficientTable, x: float, s) -> complex:
    """M_x(s) = sum_{n <= x} mu(n) n^-s log(x/n) / log x, and 0 for x <= 1.

    The n = 1 term is taken as exactly 1, which removes the 0/0 at x -> 1+.
    """
    if x <= 1:
        return 0j
    n_max = math.floor(x)
    table.require(n_max)
    if n_max == 1:
        return 1 + 0j
    s = complex(s)
    n = np.arange(2, n_max + 1, dtype=float)
    log_n = np.log(n)
    weights = (math.log(x) - log_n) / math.log(x)
    terms = table.mu[2 : n_max + 1] * np.exp(-s * log_n) * weights
    return 1 + complex(np.sum(terms))


def sweep_sums(table: CoefficientTable, t_values, n_max: int) -> tuple:
    """Prefix sums A_n(t), B_n(t) for every t, shape (len(t), n_max + 1).

    A_n = sum_{k <= n} mu(k) k^(-1/2-it), B_n = sum_{k <= n} mu(k)
    k^(-1/2-it) log k; column 0 is zero.
    """
    table.require(n_max)
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    k = np.arange(1, n_max + 1, dtype=float)
    log_k = np.log(k)
    phase = np.exp(-(0.5 + 1j * t_values[:, None]) * log_k[None, :])
    terms = table.mu[1 : n_max + 1][None, :] * phase
    a = np.zeros((len(t_values), n_max + 1), dtype=complex)
    b = np.zeros((len(t_values), n_max + 1), dtype=complex)
    a[:, 1:] = np.cumsum(terms, axis=1)
    b[:, 1:] = np.cumsum(terms * log_k[None, :], axis=1)
    return a, b


@dataclass(frozen=True, eq=False)
class MollifierSweep:
    """Prefix sums of the mollifier at fixed t, one per integer breakpoint.

    M_y(1/2 + it) log y = A_n log y - B_n for n = floor(y).
    """

    label: str
    t: float
    Y: float
    A: np.ndarray
    B: np.ndarray

    @property
    def breakpoints(self) -> int:
        return len(self.A) - 1

    def log_value(self, y):
        """M_y log y, vectorised over y"""
        y = np.asarray(y, dtype=float)
        if np.any(y > self.Y):
            raise DomainError(f"Sweep of {self.label} stops at Y={self.Y}")
        n = np.floor(np.maximum(y, 1.0)).astype(int)
        out = self.A[n] * np.log(np.maximum(y, 1.0)) - self.B[n]
        return np.where(y > 1, out, 0j)

    def value(self, y):
        """M_y(1/2 + it); exactly 0 for y <= 1"""
        y = np.asarray(y, dtype=float)
        n = np.floor(np.maximum(y, 1.0)).astype(int)
        if np.any(y > self.Y):
            raise DomainError(f"Sweep of {self.label} stops at Y={self.Y}")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.A[n] - self.B[n] / np.log(y)
        return np.where(y > 1, out, 0j)


def mollifier_sweep(table: CoefficientTable, t: float, Y: float) -> MollifierSweep:
    n_max = max(1, math.floor(Y))
    a, b = sweep_sums(table, [t], n_max)
    a, b = a[0], b[0]
    a.flags.writeable = False
    b.flags.writeable = False
    logger.debug(f"Built sweep of {table.label} at {t=} up to {Y=}")
    return MollifierSweep(table.label, float(t), float(Y), a, b)


@lru_cache(maxsize=32)
def unit_interval_weights(X: float, nodes: int = 8) -> tuple:
    """Per-interval integrals over [n, min(n + 1, X)] for n = 1..floor(X).

    Returns (length, int dy / log y, int dy / log^2 y); the two last are 0
    on [1, 2) where B_1 = 0 makes them unnecessary.
    """
    n_max = math.floor(X)
    starts = np.arange(1, n_max + 1, dtype=float)
    ends = np.minimum(starts + 1, X)
    length = ends - starts
    c1 = np.zeros(n_max)
    c2 = np.zeros(n_max)
    if n_max >= 2:
        lo, hi = starts[1:], ends[1:]
        y, w = composite_gauss_legendre(np.array([0.0, 1.0]), nodes)
        yy = lo[:, None] + (hi - lo)[:, None] * y[None, :]
        ww = (hi - lo)[:, None] * w[None, :]
        log_y = np.log(yy)
        c1[1:] = np.sum(ww / log_y, axis=1)
        c2[1:] = np.sum(ww / log_y**2, axis=1)
    for arr in (length, c1, c2):
        arr.flags.writeable = False
    return length, c1, c2


def y_integral(a: np.ndarray, b: np.ndarray, X: float, nodes: int = 8) -> np.ndarray:
    """Phi = int_1^X |M_y|^2 dy from prefix sums (rows are t values)"""
    if X <= 1:
        return np.zeros(a.shape[0])
    n_max = math.floor(X)
    length, c1, c2 = unit_interval_weights(float(X), nodes)
    an = a[:, 1 : n_max + 1]
    bn = b[:, 1 : n_max + 1]
    return (
        np.abs(an) ** 2 @ length
        - 2 * np.real(an * np.conj(bn)) @ c1
        + np.abs(bn) ** 2 @ c2
    )


def H_closed(
    instance: AutomorphicInstance,
    t: float,
    w,
    config: EvalConfig = EvalConfig(),
    tol: float = None,
) -> complex:
    """1 / ((w - 1)^2 L(w - 1/2 + it))"""
    w = complex(w)
    if w == 1:
        e = PoleError("H_closed has a double pole at w=1")
        logger.exception(e)
        raise e
    value = evaluate_L(instance, w - 0.5 + 1j * t, tol, config=config).value
    return 1 / ((w - 1) ** 2 * value)


def H_tail(instance: AutomorphicInstance, w, X_max: float) -> float:
    excess = complex(w).real - 1.5 - instance.ramanujan_exponent
    return X_max ** (-excess) / excess


def H_numeric(
    instance: AutomorphicInstance,
    t: float,
    w,
    X_max: float,
    tol: float = 1e-6,
    table: CoefficientTable = None,
    config: QuadratureConfig = QuadratureConfig(),
) -> tuple:
    """int_1^X_max M_x(1/2 + it) log x x^-w dx with its error budget.

    Returns (value, error) where error is the quadrature discrepancy between
    `inner_nodes` and twice as many nodes per unit interval, plus the tail
    X_max^(3/2 + delta - Re w) / (Re w - 3/2 - delta).
    """
    w = complex(w)
    if w.real < 2:
        e = DomainError(f"H_numeric needs Re(w) >= 2, got {w=}")
        logger.exception(e)
        raise e
    n_max = math.floor(X_max)
    if table is None:
        table = build_coefficients(instance, n_max)
    a, b = sweep_sums(table, [t], n_max)
    a, b = a[0, 1:], b[0, 1:]
    edges = np.append(np.arange(1, n_max + 1, dtype=float), X_max)
    edges = edges[np.concatenate([[True], np.diff(edges) > 0])]

    estimates = []
    for nodes in (config.inner_nodes, 2 * config.inner_nodes):
        x, weights = composite_gauss_legendre(edges, nodes)
        interval = np.repeat(np.arange(len(edges) - 1), nodes)
        log_x = np.log(x)
        f = (a[interval] * log_x - b[interval]) * np.exp(-w * log_x)
        estimates.append(complex(np.sum(f * weights)))
    value = estimates[1]
    quad_error = abs(estimates[1] - estimates[0])
    tail = H_tail(instance, w, X_max)
    if quad_error + tail > tol:
        logger.warning(
            f"H_numeric of {instance.label} at {w=}: error "
            f"{quad_error + tail:.2e} above {tol=}, raise X_max"
        )
    logger.info(f"H_numeric {instance.label} {t=} {w=} {X_max=}: {value=}")
    return value, quad_error + tail
