import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from lfunlab.config import QuadratureConfig
from lfunlab.exceptions import DomainError

logger = logging.getLogger(__name__)

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15)
KRONROD_NODES = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
KRONROD_WEIGHTS = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
GAUSS_WEIGHTS = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-KRONROD_NODES[:-1], KRONROD_NODES[::-1]])
_K_WEIGHTS = np.concatenate([KRONROD_WEIGHTS[:-1], KRONROD_WEIGHTS[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes
_G_WEIGHTS = np.zeros(15)
_G_WEIGHTS[1::2] = np.concatenate([GAUSS_WEIGHTS[:-1], GAUSS_WEIGHTS[::-1]])


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple:
    """Nodes and weights of the n-point rule on [-1, 1] (read-only)"""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def composite_gauss_legendre(edges, n: int) -> tuple:
    """Nodes and weights of an n-point rule on every [edges[i], edges[i+1]]"""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


def gauss_kronrod(f: Callable, a: float, b: float) -> tuple:
    """(15-point Kronrod value, |Kronrod - Gauss|) on [a, b]"""
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _NODES
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        where = x[~np.isfinite(y)][0]
        e = DomainError(f"Non-finite integrand at {where}")
        logger.exception(e)
        raise e
    kronrod = half * float(_K_WEIGHTS @ y)
    gauss = half * float(_G_WEIGHTS @ y)
    return kronrod, abs(kronrod - gauss)


def oscillation_rate(length: float, degree: int, height: float) -> float:
    """log(longest Dirichlet polynomial) + (m/2) log(2 + height)"""
    return math.log(max(length, 1.0)) + 0.5 * degree * math.log(2 + height)


def _adapt(f, a, b, tol, total, max_depth) -> tuple:
    value, error, panels = 0.0, 0.0, 0
    stack = [(a, b, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        v, err = gauss_kronrod(f, lo, hi)
        if err <= tol * (hi - lo) / total or depth >= max_depth:
            if depth >= max_depth and err > tol * (hi - lo) / total:
                logger.warning(f"Depth {max_depth} reached on [{lo}, {hi}], {err=}")
            value += v
            error += err
            panels += 1
            continue
        mid = 0.5 * (lo + hi)
        # right half first so that the left half is integrated first
        stack.append((mid, hi, depth + 1))
        stack.append((lo, mid, depth + 1))
    return value, error, panels


def quad_panel(
    f: Callable,
    a: float,
    b: float,
    tol: float,
    rate: float = 0.0,
    config: QuadratureConfig = QuadratureConfig(),
) -> QuadResult:
    """Adaptive Gauss-Kronrod integration of a vectorised real `f`.

    [a, b] is first cut into panels of width min(panel_width,
    pi / (4 rate)); each panel is bisected until its embedded error is below
    tol times its share of [a, b]. Panels are reduced in order, so the result
    does not depend on `config.workers`.
    """
    if not tol > 0:
        raise DomainError(f"{tol=} must be positive")
    if b <= a:
        return QuadResult(0.0, 0.0, 0)
    width = config.panel_width
    if rate > 0:
        width = min(width, math.pi / (4 * rate))
    count = max(1, math.ceil((b - a) / width))
    edges = np.linspace(a, b, count + 1)
    total = b - a

    def work(i):
        return _adapt(f, edges[i], edges[i + 1], tol, total, config.max_depth)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(work, range(count)))
    else:
        parts = [work(i) for i in range(count)]

    value = math.fsum(p[0] for p in parts)
    error = math.fsum(p[1] for p in parts)
    panels = sum(p[2] for p in parts)
    logger.debug(f"quad_panel on [{a}, {b}]: {value=} {error=} {panels=}")
    return QuadResult(value, error, panels)
