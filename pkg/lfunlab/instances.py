from __future__ import annotations

import cmath
import logging
import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from lfunlab.characters import DirichletCharacter
from lfunlab.config import InstanceConfig
from lfunlab.exceptions import ConfigError
from lfunlab.exceptions import InstanceException
from lfunlab.exceptions import TableTooShortError
from lfunlab.utils import is_prime
from lfunlab.utils import primes_up_to

logger = logging.getLogger(__name__)

DELTA_WEIGHT = 12
INSTANCE_KEYS = {
    "label",
    "kind",
    "degree",
    "conductor",
    "spectral_params",
    "pole_order",
    "root_number",
    "modulus",
    "character_index",
    "tau_bound",
    "tau_table",
}


def ramanujan_exponent(degree: int, grc: bool = False) -> float:
    """The exponent delta_m towards Ramanujan: 1/2 - 1/(m^2 + 1), or 0 under
    the GRC toggle."""
    if grc:
        return 0.0
    return 0.5 - 1.0 / (degree**2 + 1)


# Satake providers. Each is a callable p -> tuple of m complex numbers with a
# `prime_bound` (largest prime it can answer for) and a `conjugate()` giving
# the provider of the contragredient.


@dataclass(eq=False)
class TrivialSatake:
    prime_bound: float = math.inf

    def __call__(self, p: int) -> tuple:
        return (1 + 0j,)

    def conjugate(self):
        return self


@dataclass(eq=False)
class CharacterSatake:
    character: DirichletCharacter
    prime_bound: float = math.inf

    def __call__(self, p: int) -> tuple:
        return (self.character(p),)

    def conjugate(self):
        return CharacterSatake(self.character.conjugate())


@dataclass(eq=False)
class DeltaSatake:
    """Satake pairs of the weight 12 cusp form: a + b = tau(p)/p^(11/2),
    ab = 1."""

    tau: Sequence[int]

    @property
    def prime_bound(self) -> int:
        return len(self.tau) - 1

    def normalized(self, n: int) -> float:
        if n > self.prime_bound:
            e = TableTooShortError(
                f"{n=} is beyond the tau table ({self.prime_bound}), "
                "extend tau table"
            )
            logger.exception(e)
            raise e
        return self.tau[n] / (n**5 * math.sqrt(n))

    def __call__(self, p: int) -> tuple:
        lam = self.normalized(p)
        root = cmath.sqrt(lam * lam - 4)
        return ((lam + root) / 2, (lam - root) / 2)

    def conjugate(self):
        return self


@dataclass(eq=False)
class ConjugateSatake:
    base: Callable

    @property
    def prime_bound(self):
        return self.base.prime_bound

    def __call__(self, p: int) -> tuple:
        return tuple(complex(a).conjugate() for a in self.base(p))

    def conjugate(self):
        return self.base


@dataclass(eq=False)
class OverrideSatake:
    """Replaces the local data of `base` at a few primes"""

    base: Callable
    overrides: dict = field(default_factory=dict)

    @property
    def prime_bound(self):
        return self.base.prime_bound

    def __call__(self, p: int) -> tuple:
        if p in self.overrides:
            return tuple(complex(a) for a in self.overrides[p])
        return self.base(p)

    def conjugate(self):
        conj = {
            p: tuple(complex(a).conjugate() for a in v)
            for p, v in self.overrides.items()
        }
        return OverrideSatake(_conjugate_provider(self.base), conj)


def _conjugate_provider(provider):
    if hasattr(provider, "conjugate"):
        return provider.conjugate()
    return ConjugateSatake(provider)


@dataclass(frozen=True)
class AutomorphicInstance:
    label: str
    degree: int
    arithmetic_conductor: int
    spectral_params: tuple
    pole_order: int
    root_number: complex | None
    satake_provider: Callable
    ramanujan_exponent: float
    kind: str = "custom"
    character: DirichletCharacter | None = None

    def __post_init__(self):
        m = self.degree
        if m < 1:
            raise InstanceException(f"{self.label}: degree must be positive")
        if self.arithmetic_conductor < 1:
            raise InstanceException(f"{self.label}: conductor must be >= 1")
        if len(self.spectral_params) != m:
            raise InstanceException(
                f"{self.label}: {len(self.spectral_params)} spectral "
                f"parameters for degree {m}"
            )
        if self.pole_order < 0:
            raise InstanceException(f"{self.label}: negative pole order")
        if self.root_number is not None and abs(abs(self.root_number) - 1) > 1e-12:
            raise InstanceException(
                f"{self.label}: |W| = {abs(self.root_number)} is not 1"
            )
        delta_max = ramanujan_exponent(m)
        if not -1e-15 <= self.ramanujan_exponent <= delta_max + 1e-15:
            raise InstanceException(
                f"{self.label}: delta_m={self.ramanujan_exponent} outside "
                f"[0, {delta_max}]"
            )
        for nu in self.spectral_params:
            if complex(nu).real < -self.ramanujan_exponent - 1e-12:
                raise InstanceException(
                    f"{self.label}: Re(nu)={complex(nu).real} < -delta_m"
                )

    @property
    def is_zeta(self) -> bool:
        return self.kind == "zeta"

    @property
    def self_dual(self) -> bool:
        if self.character is not None:
            return self.character == self.character.conjugate()
        return self.kind in ("zeta", "delta")

    def satake(self, p: int) -> tuple:
        if p > self.satake_provider.prime_bound:
            e = TableTooShortError(
                f"{self.label}: no Satake data at {p=}, extend prime table"
            )
            logger.exception(e)
            raise e
        alpha = tuple(complex(a) for a in self.satake_provider(p))
        if len(alpha) != self.degree:
            raise InstanceException(
                f"{self.label}: {len(alpha)} Satake parameters at {p=}"
            )
        return alpha

    def __str__(self):
        return self.label


def local_lambda(alpha: Sequence[complex], k: int) -> complex:
    """Complete homogeneous symmetric polynomial h_k(alpha_1, ..., alpha_m).

    This is the Dirichlet coefficient lambda(p^k) of the local factor
    prod (1 - alpha_r p^-s)^-1. Computed by extending one variable at a
    time: h_j(a_1..a_r) = h_j(a_1..a_{r-1}) + a_r h_{j-1}(a_1..a_r).
    """
    h = [1 + 0j] + [0j] * k
    for a in alpha:
        for j in range(1, k + 1):
            h[j] += a * h[j - 1]
    return h[k]


def local_mu(alpha: Sequence[complex], k: int) -> complex:
    """(-1)^k e_k(alpha), the coefficient of p^-ks in prod (1 - alpha_r p^-s).

    Vanishes identically for k > m.
    """
    m = len(alpha)
    if k > m:
        return 0j
    e = [1 + 0j] + [0j] * m
    for a in alpha:
        for j in range(m, 0, -1):
            e[j] += a * e[j - 1]
    return (-1) ** k * e[k]


def analytic_conductor(instance: AutomorphicInstance, s: complex = 0) -> float:
    return instance.arithmetic_conductor * math.prod(
        3 + abs(s + complex(nu)) for nu in instance.spectral_params
    )


@dataclass(frozen=True)
class SatakeViolation:
    kind: str
    prime: int | None
    index: int
    value: complex
    bound: float

    def __str__(self):
        where = f"p={self.prime}" if self.prime is not None else "infinity"
        return (
            f"{self.kind} at {where}, r={self.index}: "
            f"|{self.value}| vs {self.bound}"
        )


def verify_satake_bounds(
    instance: AutomorphicInstance, prime_bound: int
) -> list:
    """Checks |alpha_r(p)| <= p^delta_m, non-vanishing at unramified primes and
    Re(nu_r) >= -delta_m. Returns the list of violations."""
    delta = instance.ramanujan_exponent
    q = instance.arithmetic_conductor
    violations = []
    for r, nu in enumerate(instance.spectral_params):
        if complex(nu).real < -delta - 1e-12:
            violations.append(SatakeViolation("spectral", None, r, nu, -delta))
    for p in primes_up_to(prime_bound):
        p = int(p)
        bound = p**delta
        for r, a in enumerate(instance.satake(p)):
            if abs(a) > bound + 1e-12:
                violations.append(SatakeViolation("satake-bound", p, r, a, bound))
            if q % p != 0 and a == 0:
                violations.append(SatakeViolation("unramified-zero", p, r, a, 0))
    for v in violations:
        logger.warning(f"{instance.label}: {v}")
    logger.info(
        f"Checked Satake bounds of {instance.label} up to {prime_bound}: "
        f"{len(violations)} violations"
    )
    return violations


def make_zeta(grc: bool = False) -> AutomorphicInstance:
    return AutomorphicInstance(
        label="zeta",
        degree=1,
        arithmetic_conductor=1,
        spectral_params=(0j,),
        pole_order=1,
        root_number=1 + 0j,
        satake_provider=TrivialSatake(),
        ramanujan_exponent=ramanujan_exponent(1, grc),
        kind="zeta",
    )


def make_dirichlet(
    modulus: int,
    character_index: int,
    grc: bool = False,
    derive_root_number: bool = True,
) -> AutomorphicInstance:
    """L-function of a primitive Dirichlet character.

    Parameters
    ----------

    modulus: int
        The modulus q, which is also the arithmetic conductor.

    character_index: int
        Mixed-radix index of the generator exponents, see
        `lfunlab.characters`.

    derive_root_number: bool, default=True
        Store the normalized Gauss sum as W. When False the root number is
        left unset, to be solved numerically.
    """
    chi = DirichletCharacter.from_index(modulus, character_index)
    if modulus == 1:
        e = InstanceException("The character mod 1 is zeta, use make_zeta")
        logger.exception(e)
        raise e
    conductor = chi.conductor()
    if conductor != modulus:
        e = InstanceException(
            f"{chi} is not primitive: it is induced from a character of "
            f"conductor {conductor}"
        )
        logger.exception(e)
        raise e
    return AutomorphicInstance(
        label=str(chi),
        degree=1,
        arithmetic_conductor=modulus,
        spectral_params=(complex(chi.parity),),
        pole_order=0,
        root_number=chi.root_number() if derive_root_number else None,
        satake_provider=CharacterSatake(chi),
        ramanujan_exponent=ramanujan_exponent(1, grc),
        kind="dirichlet",
        character=chi,
    )


def _tau_moduli(bound: int) -> tuple:
    # |tau(n)| <= d(n) n^(11/2) <= 2 n^6; CRT must cover twice that
    bits = 2 + 6 * math.log2(max(bound, 2)) + 2
    moduli, candidate, total = [], 2**20, 0.0
    while total < bits:
        candidate -= 1
        if is_prime(candidate):
            moduli.append(candidate)
            total += math.log2(candidate)
    return tuple(moduli)


@lru_cache(maxsize=4)
def ramanujan_tau(bound: int) -> tuple:
    """Exact tau(0..bound) (tau(0) = 0) from q prod (1 - q^n)^24.

    prod (1 - q^n)^3 is Jacobi's sparse series sum (-1)^k (2k+1) q^(k(k+1)/2);
    its eighth power is taken by repeated squaring modulo primes below 2^20,
    which keeps every int64 convolution exact, and reassembled by CRT.
    """
    length = bound
    cube = np.zeros(length, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < length:
        cube[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1

    moduli = _tau_moduli(bound)
    residues = []
    for modulus in moduli:
        a = cube % modulus
        for _ in range(3):
            a = np.convolve(a, a)[:length] % modulus
        residues.append(a)

    big = math.prod(moduli)
    weights = []
    for modulus in moduli:
        rest = big // modulus
        weights.append(rest * pow(rest, -1, modulus))
    tau = [0]
    for n in range(length):
        value = sum(int(r[n]) * w for r, w in zip(residues, weights)) % big
        if value > big // 2:
            value -= big
        tau.append(value)
    logger.info(f"Computed tau(n) for n <= {bound} with {len(moduli)} moduli")
    return tuple(tau)


def load_tau_table(path) -> tuple:
    """Reads tau(1..N), one integer per line"""
    lines = Path(path).read_text().split()
    return (0,) + tuple(int(x) for x in lines)


def make_delta(
    tau_bound: int = 10_000, grc: bool = False, tau_table=None
) -> AutomorphicInstance:
    tau = ramanujan_tau(tau_bound) if tau_table is None else tau_table
    return AutomorphicInstance(
        label="delta",
        degree=2,
        arithmetic_conductor=1,
        spectral_params=(5.5 + 0j, 6.5 + 0j),
        pole_order=0,
        root_number=1 + 0j,
        satake_provider=DeltaSatake(tau),
        ramanujan_exponent=ramanujan_exponent(2, grc),
        kind="delta",
    )


def contragredient(instance: AutomorphicInstance) -> AutomorphicInstance:
    if instance.self_dual:
        return instance
    w = instance.root_number
    return replace(
        instance,
        label=instance.label + "~",
        spectral_params=tuple(
            complex(nu).conjugate() for nu in instance.spectral_params
        ),
        root_number=None if w is None else complex(w).conjugate(),
        satake_provider=_conjugate_provider(instance.satake_provider),
        character=(
            None if instance.character is None
            else instance.character.conjugate()
        ),
    )


def with_satake_overrides(
    instance: AutomorphicInstance, overrides: dict, label: str = None
) -> AutomorphicInstance:
    return replace(
        instance,
        label=label or instance.label + "*",
        satake_provider=OverrideSatake(instance.satake_provider, overrides),
        kind="custom" if instance.kind != "custom" else instance.kind,
    )


def with_grc(instance: AutomorphicInstance, grc: bool) -> AutomorphicInstance:
    return replace(
        instance, ramanujan_exponent=ramanujan_exponent(instance.degree, grc)
    )


_CHI_PATTERN = re.compile(r"^chi[_:](\d+)[(:](\d+)\)?$")


def resolve_instance(name: str, config: InstanceConfig = InstanceConfig()):
    """Builds a built-in instance from its label: `zeta`, `delta`,
    `chi_5(1)` or `chi:5:1`."""
    if name == "zeta":
        return make_zeta(grc=config.grc)
    if name == "delta":
        return make_delta(tau_bound=config.tau_bound, grc=config.grc)
    match = _CHI_PATTERN.match(name)
    if match is not None:
        modulus, index = int(match.group(1)), int(match.group(2))
        return make_dirichlet(modulus, index, grc=config.grc)
    e = ConfigError(f"Unknown instance {name!r}", key=name)
    logger.exception(e)
    raise e


def instance_to_config(instance: AutomorphicInstance) -> dict:
    data = dict(
        label=instance.label,
        kind=instance.kind,
        degree=instance.degree,
        conductor=instance.arithmetic_conductor,
        spectral_params=[
            [complex(nu).real, complex(nu).imag]
            for nu in instance.spectral_params
        ],
        pole_order=instance.pole_order,
    )
    if instance.root_number is not None:
        w = complex(instance.root_number)
        data["root_number"] = [w.real, w.imag]
    if instance.character is not None:
        data["modulus"] = instance.character.modulus
        data["character_index"] = instance.character.index
    if instance.kind == "delta":
        data["tau_bound"] = instance.satake_provider.prime_bound
    return data


def instance_from_config(
    data: dict, config: InstanceConfig = InstanceConfig()
) -> AutomorphicInstance:
    unknown = set(data) - INSTANCE_KEYS
    if unknown:
        key = sorted(unknown)[0]
        e = ConfigError(f"Unknown instance key {key!r}", key=key)
        logger.exception(e)
        raise e
    kind = data.get("kind")
    if kind == "zeta":
        instance = make_zeta(grc=config.grc)
    elif kind == "dirichlet":
        instance = make_dirichlet(
            int(data["modulus"]), int(data["character_index"]), grc=config.grc
        )
    elif kind == "delta":
        tau_table = None
        if "tau_table" in data:
            tau_table = load_tau_table(data["tau_table"])
        instance = make_delta(
            tau_bound=int(data.get("tau_bound", config.tau_bound)),
            grc=config.grc,
            tau_table=tau_table,
        )
    else:
        e = ConfigError(
            f"Instance kind {kind!r} cannot be rebuilt without a Satake "
            "provider",
            key="kind",
        )
        logger.exception(e)
        raise e
    if "label" in data:
        instance = replace(instance, label=data["label"])
    return instance
