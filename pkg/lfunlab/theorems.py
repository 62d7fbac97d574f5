"""Desk-scale instances of the mollified-moment zero-density statements.

Every check measures the hypothesis quantity, int_1^(T^theta) I_y(T1, T2) dy,
against the power of T it is compared with and reports the ratio as the
admissible constant. Statements quantified over all T >= 1 are reported
with a fitted log-log slope, so that boundedness is visible only as a trend.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from termcolor import colored

from lfunlab.coefficients import CoefficientTable
from lfunlab.coefficients import build_coefficients
from lfunlab.config import LabConfig
from lfunlab.contour import ZeroHypothesis
from lfunlab.exceptions import DomainError
from lfunlab.instances import AutomorphicInstance
from lfunlab.instances import resolve_instance
from lfunlab.moments import moment_I_integrated
from lfunlab.moments import weighted_second_moment
from lfunlab.utils import loglog_slope
from lfunlab.zeros import count_zeros_rectangle

logger = logging.getLogger(__name__)

THEOREMS = ("local", "all-T", "rh-corollary", "family")
SATISFIED = "hypothesis-satisfied-at-constant-c"
NOT_SATISFIED = "hypothesis-not-satisfied"
INFORMATIONAL = "informational"
VERDICTS = (SATISFIED, NOT_SATISFIED, INFORMATIONAL)
FAMILY_SIGMA_HI = 1.05
LEFT_EDGE_SHIFT = 1e-3


@dataclass(frozen=True)
class TheoremReport:
    theorem: str
    params: dict
    hypothesis: Union[float, list]
    comparison: Union[float, list]
    ratio: float
    slope: float = None
    verdict: str = INFORMATIONAL
    members: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem not in THEOREMS:
            raise DomainError(f"Unknown theorem {self.theorem!r}")
        if self.verdict not in VERDICTS:
            raise DomainError(f"Unknown verdict {self.verdict!r}")

    def to_dict(self):
        data = dict(
            theorem=self.theorem,
            params=self.params,
            hypothesis=self.hypothesis,
            comparison=self.comparison,
            ratio=self.ratio,
            slope=self.slope,
            verdict=self.verdict,
            members=self.members,
        )
        data.update(self.extra)
        return data

    def __str__(self):
        color = {SATISFIED: "green", NOT_SATISFIED: "red"}.get(self.verdict, "yellow")
        slope = "" if self.slope is None else f", slope {self.slope:.4f}"
        return (
            f"{colored(self.theorem, 'cyan')} {self.params}: ratio "
            f"{self.ratio:.6g}{slope} -> {colored(self.verdict, color)}"
        )


@dataclass(frozen=True)
class FamilySpec:
    labels: tuple
    description: str = ""

    def __post_init__(self):
        if len(self.labels) == 0:
            raise DomainError("A family needs at least one member")
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return len(self.labels)

    def instances(self, config: LabConfig = LabConfig()) -> list:
        members = [resolve_instance(label, config.instances) for label in self.labels]
        degrees = {m.degree for m in members}
        if len(degrees) != 1:
            e = DomainError(f"Family {self.labels} mixes degrees {sorted(degrees)}")
            logger.exception(e)
            raise e
        return members


@dataclass(frozen=True)
class FamilyZeroCount:
    count: int
    size: int
    bad: tuple
    excluded: tuple

    @property
    def ratio(self) -> float:
        return self.count / self.size if self.size else 0.0

    def __iter__(self):
        return iter((self.count, self.ratio))

    def to_dict(self):
        return dict(
            count=self.count, size=self.size, ratio=self.ratio,
            bad=list(self.bad), excluded=list(self.excluded),
        )


def _verdict(ratio: float, constant: float) -> str:
    return SATISFIED if ratio <= constant else NOT_SATISFIED


def _slope(xs, ys):
    slope = loglog_slope(xs, ys)
    return None if math.isnan(slope) else slope


def log_absorption_constant(theta: float, epsilon0: float) -> float:
    """Least C with log(T^theta)^2 <= C T^(2 theta epsilon0) for all T >= 1.

    With u = theta log T the bound is u^2 e^(-2 epsilon0 u) <= C, maximal at
    u = 1 / epsilon0, so C = 1 / (e epsilon0)^2 whatever theta is.
    """
    if theta <= 0 or epsilon0 <= 0:
        raise DomainError(f"Need theta > 0 and epsilon0 > 0, got {theta=} {epsilon0=}")
    return 1 / (math.e * epsilon0) ** 2


def moment_growth_theta_threshold(epsilon: float, epsilon_prime: float) -> float:
    """Smallest theta with theta >= (1 + theta epsilon') / epsilon"""
    if not epsilon > epsilon_prime >= 0:
        raise DomainError(f"Need epsilon > epsilon' >= 0, got {epsilon=} {epsilon_prime=}")
    return 1 / (epsilon - epsilon_prime)


def _table(instance, X, table):
    n_max = max(1, math.floor(X))
    if table is None or table.bound < n_max:
        table = build_coefficients(instance, n_max)
    return table


def _hypothesis_integral(instance, table, T1, T2, X, tol, config) -> float:
    return moment_I_integrated(
        instance, table, T1, T2, X, tol, config.quadrature, config.evaluation
    ).value


def _check_local(sigma, theta, epsilon, T1, T2):
    if sigma < 0.5 or theta <= 0 or not 0 < epsilon < 0.5:
        e = DomainError(f"Need sigma >= 1/2, theta > 0, 0 < epsilon < 1/2: {sigma=} {theta=} {epsilon=}")
        logger.exception(e)
        raise e
    if T2 < 1 or not 0 <= T1 <= T2 / 2:
        e = DomainError(f"Need T2 >= 1 and 0 <= T1 <= T2/2: {T1=} {T2=}")
        logger.exception(e)
        raise e


def inequality_chain(
    instance: AutomorphicInstance,
    table: CoefficientTable,
    hyp: ZeroHypothesis,
    T1: float,
    T2: float,
    x: float,
    tol: float = 1e-4,
    config: LabConfig = LabConfig(),
) -> dict:
    """Both sides of the weighted-moment inequality at x.

    left: int |L|^2 (x^(2 beta0) / ((|gamma0 - t| + 1)^4 (|gamma0| + 1)^(2+2m)) + 1/x) dt
    right: log(x)^2 int_1^x I_y(T1, T2) dy
    """
    left = weighted_second_moment(
        instance, hyp.gamma, instance.degree, T1, T2, x, hyp.beta, tol,
        "local", config.quadrature, config.evaluation,
    )
    integral = _hypothesis_integral(instance, table, T1, T2, x, tol, config)
    right = math.log(x) ** 2 * integral
    return dict(
        x=x,
        left=left.value,
        right=right,
        constant=left.value / right if right > 0 else math.inf,
        lower_bound_zero=left.extra["lower_bound_zero"],
        lower_bound_moment=left.extra["lower_bound_moment"],
    )


def thm_local_check(
    instance: AutomorphicInstance,
    sigma: float,
    theta: float,
    epsilon: float,
    T1: float,
    T2: float,
    hyp: Union[ZeroHypothesis, str] = None,
    config: LabConfig = LabConfig(),
    table: CoefficientTable = None,
    tol: float = 1e-4,
    chain_x: Sequence[float] = None,
) -> TheoremReport:
    """Hypothesis of the rectangle statement against T2^(2 sigma theta - 5 - 2m).

    hyp=None reports the ratio only. A ZeroHypothesis adds the inequality
    chain at every x in `chain_x` (default T2^theta and twice that) and the
    contradiction margin T2^(-2 (beta0 - sigma - epsilon0) theta). "scan"
    pairs the ratio with the zero count on (sigma + epsilon, 1) x (T1, T2).
    """
    _check_local(sigma, theta, epsilon, T1, T2)
    if isinstance(hyp, ZeroHypothesis) and not T1 <= hyp.gamma <= T2:
        e = DomainError(f"Zero {hyp.rho} has ordinate outside [{T1}, {T2}]")
        logger.exception(e)
        raise e
    m = instance.degree
    X = T2**theta
    table = _table(instance, X, table)
    constant = config.theorems.constant
    epsilon0 = config.theorems.epsilon0 or epsilon
    hypothesis = _hypothesis_integral(instance, table, T1, T2, X, tol, config)
    exponent = 2 * sigma * theta - 5 - 2 * m
    comparison = T2**exponent
    ratio = hypothesis / comparison
    params = dict(
        instance=instance.label, sigma=sigma, theta=theta, epsilon=epsilon,
        T1=T1, T2=T2, exponent=exponent, constant=constant,
    )
    verdict = _verdict(ratio, constant)
    extra = {}

    if isinstance(hyp, ZeroHypothesis):
        xs = chain_x or (X, 2 * X)
        table = _table(instance, max(xs), table)
        chain = [inequality_chain(instance, table, hyp, T1, T2, x, tol, config) for x in xs]
        constants = [row["constant"] for row in chain]
        margin_exponent = -2 * (hyp.beta - sigma - epsilon0) * theta
        extra = dict(
            rho=hyp.rho,
            chain=chain,
            chain_spread=max(constants) / min(constants),
            margin_exponent=margin_exponent,
            margin=T2**margin_exponent,
            log_absorption=log_absorption_constant(theta, epsilon0),
        )
    elif hyp == "scan":
        zeros = count_zeros_rectangle(
            instance, sigma + epsilon, 1.0, T1, T2, config.zeros, config.evaluation
        )
        satisfied = ratio <= constant
        consistent = not (satisfied and epsilon0 > 0 and zeros.count > 0)
        if not consistent:
            logger.error(
                f"{instance.label}: hypothesis met at {ratio=} but "
                f"{zeros.count} zeros right of {sigma + epsilon}"
            )
        extra = dict(
            zero_count=zeros.count,
            zero_count_confident=zeros.confident,
            hypothesis_satisfied=satisfied,
            consistent=consistent,
        )
        verdict = INFORMATIONAL
    elif hyp is not None:
        raise DomainError(f"Unknown hypothesis {hyp!r}")

    report = TheoremReport(
        "local", params, hypothesis, comparison, ratio, None, verdict, extra=extra
    )
    logger.info(f"{report!s}")
    return report


def _check_grid(T_grid):
    grid = [float(T) for T in T_grid]
    if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        e = DomainError(f"T grid must be increasing and start at 1 or above: {grid}")
        logger.exception(e)
        raise e
    return grid


def _grid_integrals(instance, theta, grid, dyadic, tol, config) -> list:
    table = build_coefficients(instance, max(1, math.floor(max(grid) ** theta)))
    rows = []
    for T in grid:
        T1, T2 = (T, 2 * T) if dyadic else (0.0, T)
        X = T**theta
        rows.append(dict(T=T, X=X, integral=_hypothesis_integral(instance, table, T1, T2, X, tol, config)))
    return rows


def thm_global_sup(
    instance: AutomorphicInstance,
    sigma: float,
    theta: float,
    T_grid: Sequence[float],
    dyadic: bool = False,
    config: LabConfig = LabConfig(),
    tol: float = 1e-4,
) -> TheoremReport:
    """sup over the grid of T^(-2 sigma theta) int_1^(T^theta) I_y(0, T) dy.

    With `dyadic` the moment is taken over (T, 2T) and normalised by
    T^(-2 sigma theta + 3).
    """
    if sigma < 0.5 or theta <= 0:
        raise DomainError(f"Need sigma >= 1/2 and theta > 0, got {sigma=} {theta=}")
    grid = _check_grid(T_grid)
    rows = _grid_integrals(instance, theta, grid, dyadic, tol, config)
    exponent = 2 * sigma * theta - (3 if dyadic else 0)
    for row in rows:
        row["comparison"] = row["T"] ** exponent
        row["normalized"] = row["integral"] / row["comparison"]
    normalized = [row["normalized"] for row in rows]
    sup = max(normalized)
    report = TheoremReport(
        "all-T",
        dict(instance=instance.label, sigma=sigma, theta=theta, dyadic=dyadic,
             T_grid=grid, exponent=exponent),
        [row["integral"] for row in rows],
        [row["comparison"] for row in rows],
        sup,
        _slope(grid, normalized),
        _verdict(sup, config.theorems.constant),
        rows,
        dict(argmax=grid[int(np.argmax(normalized))]),
    )
    logger.info(f"{report!s}")
    return report


def rh_criterion_scan(
    instance: AutomorphicInstance,
    theta: float,
    eps_list: Sequence[float],
    T_grid: Sequence[float],
    config: LabConfig = LabConfig(),
    tol: float = 1e-4,
) -> TheoremReport:
    """T^(-(1 + epsilon) theta) int_1^(T^theta) I_y(0, T) dy per epsilon"""
    if theta <= 0 or not eps_list:
        raise DomainError(f"Need theta > 0 and some epsilon, got {theta=} {eps_list=}")
    grid = _check_grid(T_grid)
    rows = _grid_integrals(instance, theta, grid, False, tol, config)
    members = []
    for eps in eps_list:
        normalized = [row["integral"] * row["T"] ** (-(1 + eps) * theta) for row in rows]
        members.append(dict(
            epsilon=eps, normalized=normalized, sup=max(normalized),
            slope=_slope(grid, normalized),
        ))
    report = TheoremReport(
        "rh-corollary",
        dict(instance=instance.label, theta=theta, epsilons=list(eps_list), T_grid=grid),
        [row["integral"] for row in rows],
        [[row["T"] ** ((1 + eps) * theta) for row in rows] for eps in eps_list],
        max(member["sup"] for member in members),
        _slope(grid, [row["integral"] for row in rows]),
        INFORMATIONAL,
        members,
    )
    logger.info(f"{report!s}")
    return report


def family_condition(
    family: FamilySpec,
    sigma: float,
    theta: float,
    T_grid: Sequence[float],
    config: LabConfig = LabConfig(),
    tol: float = 1e-4,
) -> TheoremReport:
    """sum over the family of int_1^(T^theta) I_y(0, T) dy against
    |F| T^(2 sigma theta); delta is the fitted slope deficit."""
    grid = _check_grid(T_grid)
    instances = family.instances(config)
    computed = {}
    members = []
    for instance in instances:
        if instance.label not in computed:
            rows = _grid_integrals(instance, theta, grid, False, tol, config)
            computed[instance.label] = [row["integral"] for row in rows]
        members.append(dict(label=instance.label, integrals=computed[instance.label]))
    totals = [sum(member["integrals"][i] for member in members) for i in range(len(grid))]
    size = len(family)
    exponent = 2 * sigma * theta
    comparison = [size * T**exponent for T in grid]
    ratios = [total / comp for total, comp in zip(totals, comparison)]
    slope = _slope(grid, totals)
    report = TheoremReport(
        "family",
        dict(labels=list(family.labels), description=family.description,
             sigma=sigma, theta=theta, T_grid=grid),
        totals,
        comparison,
        max(ratios),
        slope,
        _verdict(max(ratios), config.theorems.constant),
        members,
        dict(delta=None if slope is None else exponent - slope),
    )
    logger.info(f"{report!s}")
    return report


def family_zero_statistic(
    family: FamilySpec,
    sigma: float,
    T: float,
    config: LabConfig = LabConfig(),
) -> FamilyZeroCount:
    """Members with a zero of real part >= sigma and height in [0, T].

    The closed condition beta >= sigma is counted on a rectangle whose left
    edge sits LEFT_EDGE_SHIFT to the left of sigma, so at sigma = 1/2
    critical-line zeros count too. Members whose count is not confident are
    excluded from both the count and the family size.
    """
    instances = family.instances(config)
    if T <= config.zeros.nudge:
        return FamilyZeroCount(0, len(instances), (), ())
    bad, excluded = [], []
    for instance in instances:
        result = count_zeros_rectangle(
            instance, sigma - LEFT_EDGE_SHIFT, FAMILY_SIGMA_HI, 0.0, T,
            config.zeros, config.evaluation,
        )
        if not result.confident:
            logger.warning(f"Excluding {instance.label}: zero count not confident")
            excluded.append(instance.label)
        elif result.count > 0:
            bad.append(instance.label)
    statistic = FamilyZeroCount(
        len(bad), len(instances) - len(excluded), tuple(bad), tuple(excluded)
    )
    logger.info(f"Family zero statistic at {sigma=} {T=}: {statistic.to_dict()}")
    return statistic
