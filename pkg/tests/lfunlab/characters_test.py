import math

import numpy as np
import pytest

from lfunlab.characters import DirichletCharacter
from lfunlab.characters import unit_group_generators
from lfunlab.exceptions import InstanceException


def all_characters(q):
    count = math.prod(n for _, n in unit_group_generators(q))
    return [DirichletCharacter.from_index(q, i) for i in range(count)]


def primitive_count(q):
    # sum_{d | q} mu(q/d) phi(d)
    def mobius(n):
        result, p = 1, 2
        while p * p <= n:
            if n % p == 0:
                n //= p
                if n % p == 0:
                    return 0
                result = -result
            p += 1
        return -result if n > 1 else result

    def phi(n):
        return sum(1 for a in range(1, n + 1) if math.gcd(a, n) == 1)

    return sum(mobius(q // d) * phi(d) for d in range(1, q + 1) if q % d == 0)


def test_generators_mod_5():
    assert unit_group_generators(5) == ((2, 4),)


def test_generators_mod_8():
    assert unit_group_generators(8) == ((7, 2), (5, 2))


def test_order_four_character_mod_5():
    chi = DirichletCharacter.from_index(5, 1)
    assert chi(2) == 1j
    assert chi(5) == 0
    assert str(chi) == "chi_5(1)"


@pytest.mark.parametrize("q", (3, 4, 5, 8, 12, 15, 16))
def test_characters_are_multiplicative(q):
    for chi in all_characters(q):
        for a in range(q):
            for b in range(q):
                assert chi(a * b) == pytest.approx(chi(a) * chi(b), abs=1e-12)


@pytest.mark.parametrize("q", (5, 8, 12, 15))
def test_orthogonality(q):
    for chi in all_characters(q):
        total = np.sum(chi.values)
        if chi.is_principal:
            assert total.real == pytest.approx(sum(math.gcd(a, q) == 1 for a in range(q)))
        else:
            assert abs(total) < 1e-12


@pytest.mark.parametrize("q", (5, 8, 9, 12, 16, 15))
def test_primitive_count(q):
    assert sum(chi.is_primitive for chi in all_characters(q)) == primitive_count(q)


def test_conductor_of_induced_character():
    chi = DirichletCharacter.from_index(8, 1)
    assert chi(5) == 1
    assert chi.conductor() == 4


class TestGaussSums:
    @pytest.mark.parametrize("q", (4, 5, 7, 8, 12))
    def test_modulus(self, q):
        for chi in all_characters(q):
            if chi.is_primitive and q > 1:
                assert abs(chi.gauss_sum()) ** 2 == pytest.approx(q)
                assert abs(chi.root_number()) == pytest.approx(1.0)

    def test_minus_four(self):
        chi = DirichletCharacter.from_index(4, 1)
        assert chi.parity == 1
        assert chi.root_number() == pytest.approx(1.0)


def test_conjugate():
    chi = DirichletCharacter.from_index(5, 1)
    conj = chi.conjugate()
    assert conj.index == 3
    for a in range(5):
        assert conj(a) == pytest.approx(chi(a).conjugate())


def test_wrong_exponent_count():
    with pytest.raises(InstanceException):
        DirichletCharacter(8, (1,))


def test_index_out_of_range():
    with pytest.raises(InstanceException):
        DirichletCharacter.from_index(5, 4)
