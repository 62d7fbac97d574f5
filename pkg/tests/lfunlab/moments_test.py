import math

import numpy as np
import pytest

from lfunlab import moments
from lfunlab.coefficients import build_coefficients
from lfunlab.config import EvalConfig
from lfunlab.config import QuadratureConfig
from lfunlab.exceptions import DomainError
from lfunlab.instances import make_dirichlet
from lfunlab.instances import make_zeta
from lfunlab.moments import CSV_HEADER
from lfunlab.moments import REGISTRY_SIZE
from lfunlab.moments import CriticalLineCache
from lfunlab.moments import MomentResult
from lfunlab.moments import critical_line_cache
from lfunlab.moments import moment_I
from lfunlab.moments import moment_I_integrated
from lfunlab.moments import riemann_siegel_crosscheck
from lfunlab.moments import second_moment
from lfunlab.moments import second_moment_main_term
from lfunlab.moments import weighted_lower_bounds
from lfunlab.moments import weighted_second_moment


@pytest.fixture(scope="module")
def zeta():
    return make_zeta()


@pytest.fixture(scope="module")
def table(zeta):
    return build_coefficients(zeta, 1000)


class TestSecondMoment:
    def test_ingham(self, zeta):
        result = second_moment(zeta, 0, 100)
        assert second_moment_main_term(100) == pytest.approx(292.2, abs=0.1)
        assert result.value == pytest.approx(292.2, rel=0.05)
        assert result.error < 1e-4

    def test_empty_range(self, zeta):
        result = second_moment(zeta, 10, 10)
        assert result.value == 0
        assert result.error == 0

    def test_additive(self, zeta):
        whole = second_moment(zeta, 0, 30).value
        parts = second_moment(zeta, 0, 12).value + second_moment(zeta, 12, 30).value
        assert whole == pytest.approx(parts, abs=1e-5)

    def test_cache_does_not_change_values(self, zeta):
        cached = second_moment(zeta, 0, 20).value
        fresh = second_moment(zeta, 0, 20, quadrature=QuadratureConfig(cache=False)).value
        assert abs(cached - fresh) <= 1e-12 * cached

    def test_character(self):
        chi = make_dirichlet(5, 2)
        result = second_moment(chi, 0, 20)
        assert result.value > 0
        assert result.error < 1e-4

    def test_bad_range(self, zeta):
        with pytest.raises(DomainError):
            second_moment(zeta, 10, 5)


class TestMollifiedMoment:
    def test_zero_below_one(self, zeta, table):
        assert moment_I(zeta, table, 0.5, 0, 50).value == 0
        assert moment_I(zeta, table, 1.0, 0, 50).value == 0

    def test_length_two_is_the_second_moment(self, zeta, table):
        mollified = moment_I(zeta, table, 2.0, 0, 50).value
        plain = second_moment(zeta, 0, 50).value
        assert mollified == pytest.approx(plain, rel=1e-8)

    def test_positive(self, zeta, table):
        result = moment_I(zeta, table, 10.0, 0, 50)
        assert result.value > 0
        assert result.error < 1e-4

    def test_bad_length(self, zeta, table):
        with pytest.raises(DomainError):
            moment_I(zeta, table, 0.0, 0, 50)

    @pytest.mark.slow
    @pytest.mark.parametrize("theta", (0.3, 0.4))
    def test_levinson_constant(self, zeta, theta):
        T = 1000.0
        y = T**theta
        config = EvalConfig(riemann_siegel=True, tolerance=1e-3)
        result = moment_I(zeta, build_coefficients(zeta, math.floor(y)), y, 0, T, 1e-2, evaluation=config)
        assert result.value / T == pytest.approx(1 + 1 / theta, rel=0.25)


class TestIntegratedMoment:
    def test_trivial_length(self, zeta, table):
        assert moment_I_integrated(zeta, table, 0, 20, 1.0).value == 0

    def test_monotone_in_length(self, zeta, table):
        short = moment_I_integrated(zeta, table, 0, 20, 3.0).value
        long = moment_I_integrated(zeta, table, 0, 20, 5.0).value
        assert 0 < short < long

    def test_short_range_is_plain_moment(self, zeta, table):
        # M_y = 1 for y < 2
        integrated = moment_I_integrated(zeta, table, 0, 20, 1.5).value
        assert integrated == pytest.approx(0.5 * second_moment(zeta, 0, 20).value, rel=1e-8)

    def test_bad_length(self, zeta, table):
        with pytest.raises(DomainError):
            moment_I_integrated(zeta, table, 0, 20, 0.5)

    @pytest.mark.slow
    def test_swapped_order(self, zeta, table):
        X = 10.0
        swapped = moment_I_integrated(zeta, table, 0, 20, X, tol=1e-8).value
        edges = np.arange(1.0, X + 1)
        nodes, weights = np.polynomial.legendre.leggauss(8)
        direct = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            for node, weight in zip(nodes, weights):
                y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * node
                direct += 0.5 * (hi - lo) * weight * moment_I(zeta, table, y, 0, 20, tol=1e-8).value
        assert swapped == pytest.approx(direct, abs=1e-4)


class TestWeightedMoment:
    def test_kernel_centred_on_the_zero(self, zeta):
        near = weighted_second_moment(zeta, 30, 1, 0, 60, 100, 0.75).value
        far = weighted_second_moment(zeta, 90, 1, 0, 60, 100, 0.75).value
        assert near > far

    def test_lower_bounds_recorded(self, zeta):
        result = weighted_second_moment(zeta, 30, 1, 0, 60, 100, 0.8)
        assert result.extra["lower_bound_zero"] == pytest.approx(100**1.6 / 60**7)
        assert result.extra["lower_bound_moment"] == pytest.approx(0.6)
        assert result.extra["measured_constant"] > 0

    def test_dominates_the_flat_part(self, zeta):
        weighted = weighted_second_moment(zeta, 30, 1, 0, 60, 100, 0.75).value
        assert weighted >= second_moment(zeta, 0, 60).value / 100

    def test_x_below_two(self, zeta):
        with pytest.raises(DomainError):
            weighted_second_moment(zeta, 30, 1, 0, 60, 1.5, 0.75)

    def test_variants(self):
        assert weighted_lower_bounds("all-T", 4, 0.5, 10, 1) == (4.0, 2.5)
        assert weighted_lower_bounds("dyadic", 4, 0.5, 10, 1) == pytest.approx((4e-3, 2.5))
        assert weighted_lower_bounds("local", 4, 0.5, 10, 1) == pytest.approx((4e-7, 2.5))
        with pytest.raises(DomainError):
            weighted_lower_bounds("global", 4, 0.5, 10, 1)


class TestCache:
    def test_registry_shares_caches(self, zeta):
        assert critical_line_cache(zeta) is critical_line_cache(zeta)
        assert critical_line_cache(zeta, enabled=False) is not critical_line_cache(zeta, enabled=False)

    def test_values(self, zeta):
        cache = CriticalLineCache(zeta)
        values, errors = cache([14.134725141734693, 20.0])
        assert abs(values[0]) < 1e-8
        assert np.all(errors <= 1e-10)
        assert len(cache) == 2
        cache([20.0])
        assert len(cache) == 2

    def test_values_are_capped(self, zeta):
        cache = CriticalLineCache(zeta, maxsize=3)
        first, _ = cache([2.0, 3.0, 4.0, 5.0, 6.0])
        assert len(cache) == 3
        again, _ = cache([2.0, 6.0])
        assert again[0] == first[0]
        assert again[1] == first[4]
        assert len(cache) == 3

    def test_registry_is_capped(self, zeta):
        for i in range(REGISTRY_SIZE + 5):
            critical_line_cache(zeta, EvalConfig(em_min_terms=20 + i))
        assert len(moments._caches) <= REGISTRY_SIZE

    def test_riemann_siegel_crosscheck_passes(self, zeta):
        cache = CriticalLineCache(zeta, EvalConfig(riemann_siegel=True, tolerance=1e-3))
        assert riemann_siegel_crosscheck(cache, [100.0, 500.0, 1000.0])
        assert cache.use_riemann_siegel


class TestMomentResult:
    def test_csv_row(self):
        result = MomentResult("zeta", "second", 0, 10, 0, 1.5, 1e-9)
        row = result.csv_row()
        assert len(row) == len(CSV_HEADER)
        assert row[0] == "second"
        assert float(row[4]) == 1.5

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            MomentResult("zeta", "fourth", 0, 10, 0, 1.5, 1e-9)
