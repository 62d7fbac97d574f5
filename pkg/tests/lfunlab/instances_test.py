import math

import pytest

from lfunlab.config import InstanceConfig
from lfunlab.exceptions import ConfigError
from lfunlab.exceptions import InstanceException
from lfunlab.exceptions import TableTooShortError
from lfunlab.instances import AutomorphicInstance
from lfunlab.instances import TrivialSatake
from lfunlab.instances import analytic_conductor
from lfunlab.instances import contragredient
from lfunlab.instances import instance_from_config
from lfunlab.instances import instance_to_config
from lfunlab.instances import local_lambda
from lfunlab.instances import local_mu
from lfunlab.instances import make_delta
from lfunlab.instances import make_dirichlet
from lfunlab.instances import make_zeta
from lfunlab.instances import ramanujan_exponent
from lfunlab.instances import ramanujan_tau
from lfunlab.instances import resolve_instance
from lfunlab.instances import verify_satake_bounds
from lfunlab.instances import with_grc
from lfunlab.instances import with_satake_overrides


@pytest.fixture(scope="module")
def delta():
    return make_delta(tau_bound=1000)


class TestLocalPolynomials:
    def test_lambda_trivial(self):
        assert local_lambda((1,), 3) == 1

    def test_lambda_degree_two(self):
        # h_2(2, 3) = 4 + 6 + 9
        assert local_lambda((2, 3), 2) == 19

    def test_mu_trivial(self):
        assert local_mu((1,), 1) == -1
        assert local_mu((1,), 2) == 0

    def test_mu_degree_two(self):
        assert local_mu((2, 3), 1) == -5
        assert local_mu((2, 3), 2) == 6

    @pytest.mark.parametrize("k", (3, 4, 7))
    def test_mu_vanishes_above_degree(self, k):
        assert local_mu((0.3 + 0.1j, -0.7j), k) == 0


def test_ramanujan_exponent():
    assert ramanujan_exponent(1) == 0
    assert ramanujan_exponent(2) == pytest.approx(0.3)
    assert ramanujan_exponent(3, grc=True) == 0


class TestTau:
    def test_first_values(self):
        assert ramanujan_tau(10) == (
            0, 1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920
        )

    def test_multiplicative(self):
        tau = ramanujan_tau(1000)
        for m, n in ((2, 3), (5, 7), (11, 13), (8, 125), (9, 111)):
            assert tau[m * n] == tau[m] * tau[n]

    @pytest.mark.parametrize("p", (2, 3, 5, 7, 23, 31))
    def test_hecke_relation(self, p):
        tau = ramanujan_tau(1000)
        assert tau[p * p] == tau[p] ** 2 - p**11


class TestDelta:
    def test_satake_product(self, delta):
        a, b = delta.satake(2)
        assert a * b == pytest.approx(1.0)

    def test_normalized_coefficient(self, delta):
        assert delta.satake_provider.normalized(2) == pytest.approx(-0.5303300859)

    def test_lambda_four(self, delta):
        assert local_lambda(delta.satake(2), 2).real == pytest.approx(-0.71875, abs=1e-12)

    def test_beyond_table(self):
        short = make_delta(tau_bound=50)
        with pytest.raises(TableTooShortError):
            short.satake(53)

    def test_deligne_bound(self, delta):
        assert verify_satake_bounds(with_grc(delta, True), 1000) == []
        assert verify_satake_bounds(delta, 1000) == []


class TestConductor:
    def test_zeta(self):
        assert analytic_conductor(make_zeta()) == 3

    def test_delta(self, delta):
        assert analytic_conductor(delta) == pytest.approx(80.75)

    def test_minus_four(self):
        assert analytic_conductor(make_dirichlet(4, 1)) == 16


class TestDirichlet:
    def test_satake(self):
        assert make_dirichlet(5, 1).satake(2) == (1j,)

    def test_not_primitive(self):
        with pytest.raises(InstanceException):
            make_dirichlet(8, 1)

    def test_modulus_one(self):
        with pytest.raises(InstanceException):
            make_dirichlet(1, 0)

    def test_deferred_root_number(self):
        assert make_dirichlet(5, 1, derive_root_number=False).root_number is None

    def test_contragredient(self):
        chi = make_dirichlet(5, 1)
        dual = contragredient(chi)
        assert dual.label == "chi_5(1)~"
        assert dual.satake(2) == (-1j,)
        assert dual.root_number == pytest.approx(chi.root_number.conjugate())

    def test_real_character_is_self_dual(self):
        chi = make_dirichlet(5, 2)
        assert contragredient(chi) is chi


def test_zeta_is_self_dual():
    zeta = make_zeta()
    assert contragredient(zeta) is zeta


class TestInvariants:
    def _instance(self, **kwargs):
        data = dict(
            label="bad",
            degree=1,
            arithmetic_conductor=1,
            spectral_params=(0j,),
            pole_order=0,
            root_number=1 + 0j,
            satake_provider=TrivialSatake(),
            ramanujan_exponent=0.0,
        )
        data.update(kwargs)
        return AutomorphicInstance(**data)

    def test_valid(self):
        assert self._instance().degree == 1

    @pytest.mark.parametrize(
        "kwargs",
        (
            dict(root_number=2 + 0j),
            dict(degree=0, spectral_params=()),
            dict(spectral_params=(0j, 0j)),
            dict(arithmetic_conductor=0),
            dict(pole_order=-1),
            dict(ramanujan_exponent=0.7),
            dict(spectral_params=(-0.5 + 0j,)),
        ),
    )
    def test_rejected(self, kwargs):
        with pytest.raises(InstanceException):
            self._instance(**kwargs)


def test_override_breaks_satake_bound():
    broken = with_satake_overrides(make_zeta(), {2: (3,)})
    violations = verify_satake_bounds(broken, 100)
    assert len(violations) == 1
    assert violations[0].kind == "satake-bound"
    assert violations[0].prime == 2


def test_grc_toggle(delta):
    assert with_grc(delta, True).ramanujan_exponent == 0
    assert with_grc(delta, False).ramanujan_exponent == pytest.approx(0.3)


class TestResolve:
    @pytest.mark.parametrize("name", ("chi_5(1)", "chi:5:1"))
    def test_character(self, name):
        assert resolve_instance(name).label == "chi_5(1)"

    def test_grc(self):
        config = InstanceConfig(tau_bound=100, grc=True)
        assert resolve_instance("delta", config).ramanujan_exponent == 0

    def test_unknown(self):
        with pytest.raises(ConfigError):
            resolve_instance("nope")


class TestInstanceConfig:
    def test_roundtrip(self):
        chi = make_dirichlet(5, 2)
        rebuilt = instance_from_config(instance_to_config(chi))
        assert rebuilt.label == chi.label
        assert rebuilt.root_number == pytest.approx(chi.root_number)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            instance_from_config({"kind": "zeta", "colour": "red"})
        assert info.value.key == "colour"

    def test_custom_kind(self):
        with pytest.raises(ConfigError):
            instance_from_config({"kind": "custom"})

    def test_tau_table_file(self, tmp_path):
        path = tmp_path / "tau.txt"
        path.write_text("\n".join(str(t) for t in ramanujan_tau(30)[1:]))
        delta = instance_from_config({"kind": "delta", "tau_table": str(path)})
        assert delta.satake_provider.prime_bound == 30
        assert delta.satake_provider.normalized(3) == pytest.approx(252 / 3**5.5)


def test_rational_normalization():
    assert math.isclose(make_delta(tau_bound=20).satake_provider.normalized(4), -1472 / 4**5.5)
