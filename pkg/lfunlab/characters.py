"""Dirichlet characters specified by their images on unit-group generators.

Generator convention
--------------------
(Z/qZ)^* is split by the Chinese remainder theorem into its prime-power
parts. An odd prime power p^k contributes the smallest positive primitive
root g mod p (replaced by g + p when g^(p-1) = 1 mod p^2); 4 contributes -1;
2^k with k >= 3 contributes -1 and 5. Each local generator is lifted to a
residue mod q that is 1 on every other prime-power part. Generators are
ordered by increasing prime, -1 before 5 at p = 2.

A character is a tuple of exponents (a_1, ..., a_r) with 0 <= a_i < n_i,
n_i the order of the i-th generator, and chi(g_i) = exp(2 pi i a_i / n_i).
The integer `character_index` is the mixed-radix number with digits a_i,
first generator least significant.
"""
import cmath
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from lfunlab.exceptions import InstanceException
from lfunlab.utils import factorize

logger = logging.getLogger(__name__)


def _primitive_root(p: int) -> int:
    order = p - 1
    prime_factors = [q for q, _ in factorize(order)]
    for g in range(2, p):
        if all(pow(g, order // q, p) != 1 for q in prime_factors):
            return g
    return 1


def unit_group_generators(modulus: int) -> tuple:
    """Returns ((generator, order), ...) for (Z/qZ)^* in the documented
    convention."""
    local = []
    for p, k in factorize(modulus):
        pk = p**k
        if p == 2:
            if k == 2:
                local.append((pk, pk - 1, 2))
            elif k >= 3:
                local.append((pk, pk - 1, 2))
                local.append((pk, 5, 2 ** (k - 2)))
            continue
        g = _primitive_root(p)
        if k >= 2 and pow(g, p - 1, p * p) == 1:
            g += p
        local.append((pk, g, (p - 1) * p ** (k - 1)))

    generators = []
    for pk, g, order in local:
        rest = modulus // pk
        if rest == 1:
            lifted = g % modulus
        else:
            # x = g mod pk, x = 1 mod rest
            lifted = (1 + rest * ((g - 1) * pow(rest, -1, pk))) % modulus
        generators.append((lifted, order))
    return tuple(generators)


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    exponents: tuple

    def __post_init__(self):
        gens = unit_group_generators(self.modulus)
        if len(gens) != len(self.exponents):
            raise InstanceException(
                f"Character mod {self.modulus} needs {len(gens)} exponents, "
                f"got {self.exponents}"
            )

    @classmethod
    def from_index(cls, modulus: int, index: int):
        if modulus < 1:
            raise InstanceException(f"Invalid {modulus=}")
        orders = [n for _, n in unit_group_generators(modulus)]
        size = math.prod(orders)
        if not 0 <= index < size:
            raise InstanceException(
                f"{index=} out of range for the {size} characters mod {modulus}"
            )
        logger.debug(f"Character {index=} mod {modulus} with {orders=}")
        exponents = []
        for n in orders:
            exponents.append(index % n)
            index //= n
        return cls(modulus, tuple(exponents))

    @property
    def index(self) -> int:
        index, scale = 0, 1
        for a, (_, n) in zip(self.exponents, self.generators):
            index += a * scale
            scale *= n
        return index

    @cached_property
    def generators(self) -> tuple:
        return unit_group_generators(self.modulus)

    @cached_property
    def values(self) -> np.ndarray:
        """chi(a) for a = 0, ..., q - 1 (zero off the unit group)"""
        q = self.modulus
        table = np.zeros(q, dtype=complex)
        if q == 1:
            table[0] = 1.0
            return table
        ranges = [range(n) for _, n in self.generators]
        for powers in itertools.product(*ranges):
            residue = 1
            phase = Fraction(0)
            for (g, n), a, e in zip(self.generators, self.exponents, powers):
                residue = residue * pow(g, e, q) % q
                phase += Fraction(a * e, n)
            table[residue] = _root_of_unity(phase)
        table.flags.writeable = False
        return table

    def __call__(self, n: int) -> complex:
        return complex(self.values[n % self.modulus])

    @property
    def is_principal(self) -> bool:
        return all(a == 0 for a in self.exponents)

    @property
    def parity(self) -> int:
        """0 for even characters, 1 for odd ones"""
        if self.modulus <= 2:
            return 0
        return 0 if self(-1).real > 0 else 1

    def conjugate(self):
        exponents = tuple(
            (-a) % n for a, (_, n) in zip(self.exponents, self.generators)
        )
        return DirichletCharacter(self.modulus, exponents)

    def conductor(self) -> int:
        """Smallest d | q such that chi is trivial on units = 1 mod d"""
        q = self.modulus
        for d in sorted(_divisors(q)):
            if self._induced_from(d):
                return d
        return q

    def _induced_from(self, d: int) -> bool:
        q = self.modulus
        for a in range(1, q, d):
            if math.gcd(a, q) == 1 and abs(self(a) - 1) > 1e-9:
                return False
        return True

    @property
    def is_primitive(self) -> bool:
        return self.conductor() == self.modulus

    def gauss_sum(self) -> complex:
        q = self.modulus
        a = np.arange(q)
        return complex(np.sum(self.values * np.exp(2j * np.pi * a / q)))

    def root_number(self) -> complex:
        """W(chi) = tau(chi) / (i^kappa sqrt(q)) for primitive chi"""
        w = self.gauss_sum() / ((1j) ** self.parity * math.sqrt(self.modulus))
        return w / abs(w)

    def __str__(self):
        return f"chi_{self.modulus}({self.index})"


def _root_of_unity(phase: Fraction) -> complex:
    phase = phase % 1
    # exact values at quarter turns keep real characters real
    quarters = {
        Fraction(0): 1,
        Fraction(1, 4): 1j,
        Fraction(1, 2): -1,
        Fraction(3, 4): -1j,
    }
    if phase in quarters:
        return complex(quarters[phase])
    return cmath.exp(2j * math.pi * float(phase))


def _divisors(n: int) -> list:
    divisors = [1]
    for p, k in factorize(n):
        divisors = [d * p**e for d in divisors for e in range(k + 1)]
    return divisors
