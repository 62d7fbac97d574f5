import math

import numpy as np
import pytest

from lfunlab.coefficients import build_coefficients
from lfunlab.config import InstanceConfig
from lfunlab.config import LabConfig
from lfunlab.contour import ZeroHypothesis
from lfunlab.exceptions import DomainError
from lfunlab.instances import make_zeta
from lfunlab.moments import moment_I_integrated
from lfunlab.theorems import INFORMATIONAL
from lfunlab.theorems import NOT_SATISFIED
from lfunlab.theorems import SATISFIED
from lfunlab.theorems import FamilySpec
from lfunlab.theorems import TheoremReport
from lfunlab.theorems import family_condition
from lfunlab.theorems import family_zero_statistic
from lfunlab.theorems import log_absorption_constant
from lfunlab.theorems import moment_growth_theta_threshold
from lfunlab.theorems import rh_criterion_scan
from lfunlab.theorems import thm_global_sup
from lfunlab.theorems import thm_local_check

MOD_FIVE = FamilySpec(("chi_5(1)", "chi_5(2)", "chi_5(3)"), "primitive characters mod 5")


@pytest.fixture(scope="module")
def zeta():
    return make_zeta()


class TestConstants:
    @pytest.mark.parametrize("theta, eps0", ((1.0, 0.1), (2.0, 0.25), (0.5, 0.05)))
    def test_log_absorption(self, theta, eps0):
        constant = log_absorption_constant(theta, eps0)
        assert constant == pytest.approx(1 / (math.e * eps0) ** 2)
        for T in np.geomspace(1, 1e15, 200):
            assert (theta * math.log(T)) ** 2 <= constant * T ** (2 * theta * eps0) * (1 + 1e-12)

    def test_log_absorption_domain(self):
        with pytest.raises(DomainError):
            log_absorption_constant(1.0, 0.0)

    def test_theta_threshold(self):
        theta = moment_growth_theta_threshold(0.5, 0.1)
        assert theta == pytest.approx(2.5)
        assert theta >= (1 + theta * 0.1) / 0.5 - 1e-12

    def test_theta_threshold_domain(self):
        with pytest.raises(DomainError):
            moment_growth_theta_threshold(0.1, 0.2)


class TestLocal:
    def test_trivial_height(self, zeta):
        report = thm_local_check(zeta, 0.6, 1.0, 0.1, 0.0, 1.0)
        assert report.hypothesis == 0
        assert report.comparison == 1
        assert report.ratio == 0
        assert report.verdict == SATISFIED

    def test_ratio(self, zeta):
        report = thm_local_check(zeta, 0.6, 1.0, 0.1, 0.0, 10.0)
        assert report.hypothesis > 0
        assert report.ratio == pytest.approx(report.hypothesis / 10.0 ** (1.2 - 7))
        assert report.verdict == NOT_SATISFIED
        assert report.params["exponent"] == pytest.approx(-5.8)

    def test_constant_from_config(self, zeta):
        config = LabConfig()
        config.theorems.constant = 1e30
        report = thm_local_check(zeta, 0.6, 1.0, 0.1, 0.0, 10.0, config=config)
        assert report.verdict == SATISFIED

    @pytest.mark.parametrize(
        "sigma, theta, epsilon, T1, T2",
        (
            (0.4, 1.0, 0.1, 0.0, 10.0),
            (0.6, 0.0, 0.1, 0.0, 10.0),
            (0.6, 1.0, 0.6, 0.0, 10.0),
            (0.6, 1.0, 0.1, 6.0, 10.0),
            (0.6, 1.0, 0.1, 0.0, 0.5),
        ),
    )
    def test_domain(self, zeta, sigma, theta, epsilon, T1, T2):
        with pytest.raises(DomainError):
            thm_local_check(zeta, sigma, theta, epsilon, T1, T2)

    def test_unknown_hypothesis(self, zeta):
        with pytest.raises(DomainError):
            thm_local_check(zeta, 0.6, 1.0, 0.1, 0.0, 4.0, hyp="guess")

    @pytest.mark.parametrize("gamma", (50.0, 5.0))
    def test_zero_outside_window(self, zeta, gamma):
        with pytest.raises(DomainError):
            thm_local_check(
                zeta, 0.6, 1.0, 0.1, 8.0, 20.0, hyp=ZeroHypothesis(complex(0.8, gamma))
            )

    @pytest.mark.slow
    def test_scan(self, zeta):
        report = thm_local_check(zeta, 0.51, 2.0, 0.1, 0.0, 40.0, hyp="scan")
        assert report.verdict == INFORMATIONAL
        assert report.extra["zero_count"] == 0
        assert report.extra["consistent"]

    @pytest.mark.slow
    def test_inequality_chain(self, zeta):
        hyp = ZeroHypothesis(complex(0.8, 30))
        report = thm_local_check(
            zeta, 0.6, 1.0, 0.1, 0.0, 60.0, hyp=hyp, chain_x=(60.0, 120.0, 240.0)
        )
        chain = report.extra["chain"]
        assert [row["x"] for row in chain] == [60.0, 120.0, 240.0]
        for row in chain:
            assert row["left"] > 0
            assert row["right"] > 0
            assert row["constant"] < 1
        # second/x dominates the left side here, so K falls roughly like 1/(x log x)^2
        assert report.extra["chain_spread"] > 2
        assert report.extra["margin_exponent"] == pytest.approx(-2 * (0.8 - 0.6 - 0.1))

    @pytest.mark.slow
    def test_inequality_constant_on_a_short_window(self, zeta):
        hyp = ZeroHypothesis(complex(0.8, 30))
        report = thm_local_check(
            zeta, 0.6, 1.0, 0.1, 0.0, 60.0, hyp=hyp, chain_x=(60.0, 63.0, 66.0)
        )
        constants = [row["constant"] for row in report.extra["chain"]]
        assert constants == sorted(constants, reverse=True)
        assert 1 < report.extra["chain_spread"] <= 2


class TestGlobal:
    def test_decreasing_right_of_one(self, zeta):
        report = thm_global_sup(zeta, 2.0, 1.0, (10, 20, 40))
        assert report.extra["argmax"] == 10
        assert report.slope < 0
        assert report.ratio == report.members[0]["normalized"]

    def test_dyadic_window(self, zeta):
        report = thm_global_sup(zeta, 1.0, 1.0, (10,), dyadic=True)
        table = build_coefficients(zeta, 10)
        whole = moment_I_integrated(zeta, table, 0, 20, 10.0, tol=1e-6).value
        head = moment_I_integrated(zeta, table, 0, 10, 10.0, tol=1e-6).value
        assert report.members[0]["integral"] == pytest.approx(whole - head, abs=1e-3)
        assert report.params["exponent"] == pytest.approx(-1.0)
        assert report.slope is None

    @pytest.mark.parametrize("grid", ((), (0.5, 2), (4, 2)))
    def test_bad_grid(self, zeta, grid):
        with pytest.raises(DomainError):
            thm_global_sup(zeta, 1.0, 1.0, grid)


def test_rh_scan_orders_epsilons(zeta):
    report = rh_criterion_scan(zeta, 1.0, (1.0, 0.5, 0.1), (5, 10, 20))
    assert report.verdict == INFORMATIONAL
    for i in range(3):
        column = [member["normalized"][i] for member in report.members]
        assert column == sorted(column)


class TestFamily:
    def test_totals_are_sums(self):
        report = family_condition(MOD_FIVE, 1.0, 1.0, (5, 10))
        for i in range(2):
            total = sum(member["integrals"][i] for member in report.members)
            assert report.hypothesis[i] == pytest.approx(total, rel=1e-12)
        assert report.comparison == pytest.approx([3 * 5**2, 3 * 10**2])

    def test_duplication_doubles(self):
        single = family_condition(FamilySpec(("chi_5(1)",)), 1.0, 1.0, (5, 10))
        double = family_condition(FamilySpec(("chi_5(1)", "chi_5(1)")), 1.0, 1.0, (5, 10))
        assert double.hypothesis == pytest.approx([2 * h for h in single.hypothesis], rel=1e-12)
        assert double.ratio == pytest.approx(single.ratio, rel=1e-12)

    def test_mixed_degrees(self):
        config = LabConfig(instances=InstanceConfig(tau_bound=100))
        with pytest.raises(DomainError):
            FamilySpec(("zeta", "delta")).instances(config)

    def test_empty(self):
        with pytest.raises(DomainError):
            FamilySpec(())

    def test_zero_statistic_right_of_the_line(self):
        statistic = family_zero_statistic(MOD_FIVE, 0.9, 30)
        assert statistic.count == 0
        assert statistic.size == 3
        count, ratio = statistic
        assert ratio == 0

    def test_zero_statistic_at_zero_height(self):
        assert family_zero_statistic(MOD_FIVE, 0.5, 0.0).count == 0

    @pytest.mark.slow
    def test_zero_statistic_on_the_line(self):
        statistic = family_zero_statistic(MOD_FIVE, 0.5, 30)
        assert statistic.ratio == 1


def test_report_validation():
    with pytest.raises(DomainError):
        TheoremReport("lemma", {}, 0.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        TheoremReport("local", {}, 0.0, 1.0, 0.0, verdict="maybe")
