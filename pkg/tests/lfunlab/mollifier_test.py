import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from lfunlab.coefficients import build_coefficients
from lfunlab.exceptions import DomainError
from lfunlab.exceptions import PoleError
from lfunlab.exceptions import TableTooShortError
from lfunlab.instances import make_zeta
from lfunlab.mollifier import H_closed
from lfunlab.mollifier import H_numeric
from lfunlab.mollifier import H_tail
from lfunlab.mollifier import mollifier_sweep
from lfunlab.mollifier import mollifier_value
from lfunlab.mollifier import sweep_sums
from lfunlab.mollifier import y_integral


@pytest.fixture(scope="module")
def zeta():
    return make_zeta()


@pytest.fixture(scope="module")
def table(zeta):
    return build_coefficients(zeta, 10_000)


class TestMollifierValue:
    def test_below_one(self, table):
        assert mollifier_value(table, 0.7, 0.5 + 3j) == 0
        assert mollifier_value(table, 1.0, 0.5) == 0

    def test_short_range(self, table):
        assert mollifier_value(table, 1.5, 0.5 + 3j) == 1

    def test_three(self, table):
        expected = 1 - math.log(1.5) / (math.sqrt(2) * math.log(3))
        assert mollifier_value(table, 3, 0.5).real == pytest.approx(expected, abs=1e-12)
        assert mollifier_value(table, 3, 0.5).real == pytest.approx(0.739025, abs=1e-6)

    @pytest.mark.parametrize("N", (5, 30, 101))
    def test_integer_length(self, table, N):
        s = 0.5 + 4j
        expected = sum(
            table.mu[n] * n**-s * (1 - math.log(n) / math.log(N)) for n in range(1, N + 1)
        )
        assert mollifier_value(table, N, s) == pytest.approx(expected, abs=1e-12)

    def test_table_too_short(self):
        small = build_coefficients(make_zeta(), 10)
        with pytest.raises(TableTooShortError):
            mollifier_value(small, 11.5, 0.5)


class TestSweep:
    def test_matches_direct_value(self, table):
        sweep = mollifier_sweep(table, 7.0, 50)
        for y in (3.0, 7.5, 49.9):
            assert complex(sweep.value(y)) == pytest.approx(
                mollifier_value(table, y, 0.5 + 7j), abs=1e-12
            )

    def test_continuous_at_integers(self, table):
        sweep = mollifier_sweep(table, 3.0, 40)
        for n in range(2, 41):
            left = sweep.A[n - 1] - sweep.B[n - 1] / math.log(n)
            right = sweep.A[n] - sweep.B[n] / math.log(n)
            assert left == pytest.approx(right, abs=1e-12)

    def test_length_one(self, table):
        sweep = mollifier_sweep(table, 0.0, 1)
        assert sweep.breakpoints == 1
        assert complex(sweep.value(1.0)) == 0
        assert complex(sweep.value(0.5)) == 0

    def test_beyond_range(self, table):
        with pytest.raises(DomainError):
            mollifier_sweep(table, 0.0, 10).value(11)

    def test_prefix_sum(self, table):
        a, _ = sweep_sums(table, [0.0], 10)
        expected = sum(table.mu[n] / math.sqrt(n) for n in range(1, 11))
        assert a[0, 10] == pytest.approx(expected)


def test_y_integral_against_scipy(table):
    t, X = 4.0, 7.5
    a, b = sweep_sums(table, [t], 7)
    sweep = mollifier_sweep(table, t, X)
    expected = 0.0
    for lo in range(1, 8):
        hi = min(lo + 1, X)
        expected += integrate.quad(lambda y: abs(complex(sweep.value(y))) ** 2, lo, hi, epsabs=1e-13)[0]
    assert y_integral(a, b, X)[0] == pytest.approx(expected, abs=1e-10)


def test_y_integral_empty(table):
    a, b = sweep_sums(table, [0.0, 1.0], 1)
    assert np.all(y_integral(a, b, 1.0) == 0)


class TestH:
    @pytest.mark.parametrize("w", (3, 2))
    def test_closed_form(self, zeta, w):
        expected = 1 / ((w - 1) ** 2 * float(mpmath.zeta(w - 0.5)))
        assert H_closed(zeta, 0, w).real == pytest.approx(expected, rel=1e-10)

    def test_closed_values(self, zeta):
        assert H_closed(zeta, 0, 2).real == pytest.approx(0.3827929, abs=1e-6)

    def test_double_pole(self, zeta):
        with pytest.raises(PoleError):
            H_closed(zeta, 0, 1)

    @pytest.mark.parametrize("t, w", ((0, 3), (5, 2.5), (2, 3 + 1j)))
    def test_numeric_agrees(self, zeta, table, t, w):
        value, error = H_numeric(zeta, t, w, 10_000, table=table)
        assert value == pytest.approx(H_closed(zeta, t, w), rel=1e-3)
        assert error >= H_tail(zeta, w, 10_000)

    def test_error_decreases(self, zeta, table):
        closed = H_closed(zeta, 0, 3)
        short = abs(H_numeric(zeta, 0, 3, 100, table=table)[0] - closed)
        long = abs(H_numeric(zeta, 0, 3, 10_000, table=table)[0] - closed)
        assert long < short

    def test_tail(self, zeta):
        assert H_tail(zeta, 2, 1e5) == pytest.approx(1e5**-0.5 / 0.5)

    def test_needs_convergence(self, zeta, table):
        with pytest.raises(DomainError):
            H_numeric(zeta, 0, 1.9, 100, table=table)
