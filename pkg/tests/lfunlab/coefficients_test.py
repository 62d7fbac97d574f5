import numpy as np
import pytest

from lfunlab.coefficients import CSV_HEADER
from lfunlab.coefficients import build_coefficients
from lfunlab.coefficients import divisor_function
from lfunlab.coefficients import write_coefficients_csv
from lfunlab.exceptions import DomainError
from lfunlab.exceptions import TableTooShortError
from lfunlab.instances import contragredient
from lfunlab.instances import make_delta
from lfunlab.instances import make_dirichlet
from lfunlab.instances import make_zeta


def mobius_sieve(n_max):
    mu = np.ones(n_max + 1, dtype=np.int64)
    mu[0] = 0
    is_composite = np.zeros(n_max + 1, dtype=bool)
    for p in range(2, n_max + 1):
        if is_composite[p]:
            continue
        is_composite[2 * p :: p] = True
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


@pytest.fixture(scope="module")
def delta_table():
    return build_coefficients(make_delta(tau_bound=10_000), 10_000)


def test_mobius_first_values():
    table = build_coefficients(make_zeta(), 10)
    assert table.mu[1:].real.tolist() == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]
    assert np.all(table.lam[1:] == 1)


def test_mobius_matches_sieve():
    table = build_coefficients(make_zeta(), 100_000)
    assert np.array_equal(table.mu.real.astype(np.int64), mobius_sieve(100_000))
    assert np.all(table.mu.imag == 0)


@pytest.mark.parametrize(
    "instance",
    (make_zeta(), make_dirichlet(4, 1), make_dirichlet(5, 1), make_dirichlet(7, 2)),
    ids=str,
)
def test_dirichlet_inverse(instance):
    table = build_coefficients(instance, 10_000)
    assert np.max(np.abs(table.inverse_residuals())) < 1e-10


def test_dirichlet_inverse_delta(delta_table):
    assert np.max(np.abs(delta_table.inverse_residuals())) < 1e-10


class TestDelta:
    def test_lambda_two(self, delta_table):
        assert delta_table.lam[2].real == pytest.approx(-0.5303300859)

    def test_lambda_four(self, delta_table):
        assert delta_table.lam[4].real == pytest.approx(-0.71875, abs=1e-12)

    def test_multiplicative(self, delta_table):
        lam = delta_table.lam
        assert lam[6] == pytest.approx(lam[2] * lam[3], abs=1e-14)
        assert lam[35] == pytest.approx(lam[5] * lam[7], abs=1e-14)

    def test_mu_vanishes_at_cubes(self, delta_table):
        assert delta_table.mu[8] == 0
        assert delta_table.mu[27] == 0

    def test_mu_bounds(self, delta_table):
        assert delta_table.mu_bound_violations() == []


def test_character_coefficients():
    chi = make_dirichlet(5, 1)
    table = build_coefficients(chi, 20)
    for n in range(1, 21):
        assert table.lam[n] == pytest.approx(chi.character(n))


def test_contragredient_conjugates():
    chi = make_dirichlet(5, 1)
    table = build_coefficients(chi, 200)
    dual = build_coefficients(contragredient(chi), 200)
    assert np.allclose(dual.lam, np.conj(table.lam), atol=0)
    assert np.allclose(dual.mu, np.conj(table.mu), atol=0)


def test_deterministic():
    a = build_coefficients(make_dirichlet(7, 1), 5000)
    b = build_coefficients(make_dirichlet(7, 1), 5000)
    assert np.array_equal(a.lam, b.lam)
    assert np.array_equal(a.mu, b.mu)


def test_short_tau_table():
    with pytest.raises(TableTooShortError):
        build_coefficients(make_delta(tau_bound=50), 100)


def test_require():
    table = build_coefficients(make_zeta(), 10)
    table.require(10)
    with pytest.raises(TableTooShortError):
        table.require(11)


def test_empty_table():
    with pytest.raises(DomainError):
        build_coefficients(make_zeta(), 0)


def test_divisor_function():
    assert divisor_function(2, 12)[12] == 6
    assert divisor_function(3, 8)[8] == 10
    assert divisor_function(1, 5).tolist() == [0, 1, 1, 1, 1, 1]


def test_csv(tmp_path):
    path = tmp_path / "coefficients.csv"
    write_coefficients_csv(build_coefficients(make_zeta(), 10), path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 11
    assert lines[4].split(",")[0] == "4"
    assert float(lines[4].split(",")[3]) == 0
