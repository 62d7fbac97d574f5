import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from termcolor import colored

from lfunlab.config import EvalConfig
from lfunlab.config import ZeroConfig
from lfunlab.evaluation import critical_line_phase
from lfunlab.evaluation import evaluate_L
from lfunlab.exceptions import DomainError
from lfunlab.exceptions import InstanceException
from lfunlab.instances import AutomorphicInstance

logger = logging.getLogger(__name__)

RESIDUAL_BOUND = 0.25


@dataclass(frozen=True)
class ZeroCountResult:
    label: str
    sigma_lo: float
    sigma_hi: float
    T1: float
    T2: float
    count: int
    variation: float
    depth: int
    confident: bool
    samples: int = 0

    @property
    def residual(self) -> float:
        return self.variation / (2 * math.pi) - self.count

    def to_dict(self):
        return dict(
            label=self.label,
            rectangle=[self.sigma_lo, self.sigma_hi, self.T1, self.T2],
            count=self.count,
            variation=self.variation,
            depth=self.depth,
            confident=self.confident,
            samples=self.samples,
        )

    def __str__(self):
        flag = colored("confident", "green") if self.confident else colored("unsure", "red")
        return (
            f"{self.label}: {colored(str(self.count), 'cyan')} zeros in "
            f"[{self.sigma_lo}, {self.sigma_hi}] x [{self.T1}, {self.T2}] ({flag})"
        )


class _NearZero(Exception):
    def __init__(self, s):
        super().__init__(f"Boundary passes near a zero at {s=}")
        self.s = s


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


class _Tracker:
    """Accumulates the argument of (s(1-s))^omega q^(s/2) L(s, pi_inf) L(s)
    along straight segments."""

    def __init__(self, instance, zeros: ZeroConfig, evaluation: EvalConfig):
        self.instance = instance
        self.zeros = zeros
        self.evaluation = evaluation
        self.floor = 10 * evaluation.tolerance
        self.depth = 0
        self.samples = 0
        self.exhausted = False

    def value(self, s: complex) -> tuple:
        """(arithmetic part, smooth phase) at s"""
        s = complex(s)
        value = evaluate_L(self.instance, s, config=self.evaluation).value
        value *= (s * (1 - s)) ** self.instance.pole_order
        self.samples += 1
        if abs(value) < self.floor:
            raise _NearZero(s)
        return value, critical_line_phase(self.instance, s)

    def segment(self, a: complex, b: complex) -> float:
        length = abs(b - a)
        count = max(1, math.ceil(length / self.zeros.step))
        points = [a + (b - a) * k / count for k in range(count + 1)]
        values = [self.value(s) for s in points]
        total = 0.0
        for i in range(count):
            total += self._step(points[i], points[i + 1], values[i], values[i + 1], 0)
        return total

    def _step(self, a, b, fa, fb, depth) -> float:
        stack = [(a, b, fa, fb, depth)]
        total = 0.0
        while stack:
            a, b, fa, fb, depth = stack.pop()
            jump = _wrap(cmath.phase(fb[0] / fa[0]))
            smooth = fb[1] - fa[1]
            if abs(jump) <= math.pi / 2 and abs(smooth) <= math.pi / 2:
                total += jump + smooth
                continue
            if depth >= self.zeros.max_depth:
                self.exhausted = True
                total += jump + smooth
                continue
            mid = 0.5 * (a + b)
            fm = self.value(mid)
            self.depth = max(self.depth, depth + 1)
            stack.append((mid, b, fm, fb, depth + 1))
            stack.append((a, mid, fa, fm, depth + 1))
        return total


def _winding(instance, corners, zeros, evaluation) -> tuple:
    tracker = _Tracker(instance, zeros, evaluation)
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        total += tracker.segment(a, b)
    return total, tracker


def count_zeros_rectangle(
    instance: AutomorphicInstance,
    sigma_lo: float,
    sigma_hi: float,
    T1: float,
    T2: float,
    zeros: ZeroConfig = ZeroConfig(),
    evaluation: EvalConfig = EvalConfig(),
) -> ZeroCountResult:
    """Zeros of L(s) in (sigma_lo, sigma_hi) x (T1, T2) by the argument
    principle applied to the completed function.

    The phase of q^(s/2) L(s, pi_inf) is added analytically, so only the
    arithmetic factor has to be tracked by bisection. T1 = 0 is moved to the
    configured nudge; an edge passing within reach of a zero is moved by
    plus or minus the nudge.
    """
    if not sigma_lo < sigma_hi:
        raise DomainError(f"Need sigma_lo < sigma_hi, got {sigma_lo=} {sigma_hi=}")
    if T1 > T2:
        raise DomainError(f"Need T1 <= T2, got {T1=} {T2=}")
    if T1 == T2:
        return ZeroCountResult(
            instance.label, sigma_lo, sigma_hi, T1, T2, 0, 0.0, 0, True
        )
    lo_t = zeros.nudge if T1 == 0 else T1
    edges = [sigma_lo, sigma_hi, lo_t, T2]
    shifts = [(0, 0, 0, 0)]
    for i in range(4):
        for sign in (1, -1):
            shift = [0, 0, 0, 0]
            shift[i] = sign * zeros.nudge
            shifts.append(tuple(shift))

    for shift in shifts:
        sl, sh, tl, th = (e + d for e, d in zip(edges, shift))
        corners = [complex(sl, tl), complex(sh, tl), complex(sh, th), complex(sl, th)]
        try:
            total, tracker = _winding(instance, corners, zeros, evaluation)
        except _NearZero as e:
            logger.info(f"{e}, nudging the rectangle of {instance.label}")
            continue
        count = round(total / (2 * math.pi))
        residual = total / (2 * math.pi) - count
        confident = not tracker.exhausted and abs(residual) < RESIDUAL_BOUND
        if not confident:
            logger.warning(
                f"Low confidence zero count for {instance.label}: {residual=} "
                f"exhausted={tracker.exhausted}"
            )
        result = ZeroCountResult(
            instance.label, sigma_lo, sigma_hi, T1, T2, max(count, 0), total,
            tracker.depth, confident and count >= 0, tracker.samples,
        )
        logger.info(f"{result!s}")
        return result

    logger.warning(f"Every nudge of the rectangle of {instance.label} meets a zero")
    return ZeroCountResult(
        instance.label, sigma_lo, sigma_hi, T1, T2, 0, float("nan"), 0, False
    )


def rotated_lambda(
    instance: AutomorphicInstance, t: float, evaluation: EvalConfig = EvalConfig()
) -> float:
    """W^(-1/2) times the completed function on the critical line, up to the
    positive factor |q^(s/2) L(s, pi_inf)|; real for every instance."""
    if instance.root_number is None:
        e = InstanceException(f"{instance.label} has no root number")
        logger.exception(e)
        raise e
    s = complex(0.5, t)
    value = evaluate_L(instance, s, config=evaluation).value
    value *= (s * (1 - s)) ** instance.pole_order
    rotation = cmath.exp(1j * critical_line_phase(instance, s))
    return (value * rotation / cmath.sqrt(complex(instance.root_number))).real


def critical_line_sign_changes(
    instance: AutomorphicInstance,
    T1: float,
    T2: float,
    zeros: ZeroConfig = ZeroConfig(),
    evaluation: EvalConfig = EvalConfig(),
) -> int:
    """Sign changes of rotated_lambda on a grid of spacing `zeros.step`; a
    lower bound for the number of critical-line zeros in (T1, T2)."""
    if T2 <= T1:
        return 0
    count = max(2, math.ceil((T2 - T1) / zeros.step) + 1)
    grid = np.linspace(max(T1, zeros.nudge), T2, count)
    values = np.array([rotated_lambda(instance, t, evaluation) for t in grid])
    signs = np.sign(values[values != 0])
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    logger.info(f"{changes} sign changes of {instance.label} on [{T1}, {T2}]")
    return changes


def riemann_von_mangoldt(T: float) -> float:
    """(T / 2 pi) log(T / 2 pi) - T / 2 pi + 7/8"""
    x = T / (2 * math.pi)
    return x * math.log(x) - x + 7 / 8
