import csv
import logging
from dataclasses import dataclass

import numpy as np
from termcolor import colored

from lfunlab.exceptions import DomainError
from lfunlab.exceptions import TableTooShortError
from lfunlab.instances import AutomorphicInstance
from lfunlab.instances import local_lambda
from lfunlab.instances import local_mu
from lfunlab.utils import fmt
from lfunlab.utils import smallest_prime_factors

logger = logging.getLogger(__name__)

CSV_HEADER = ("n", "lambda_re", "lambda_im", "mu_re", "mu_im")


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """lambda(n) and mu(n) for 1 <= n <= bound.

    Both arrays have length bound + 1 and are indexed by n; entry 0 is 0.
    """

    label: str
    bound: int
    lam: np.ndarray
    mu: np.ndarray
    degree: int = 1
    ramanujan_exponent: float = 0.0

    def require(self, n: int):
        if n > self.bound:
            e = TableTooShortError(
                f"{self.label}: coefficients needed up to {n}, table stops at "
                f"{self.bound}, extend prime table"
            )
            logger.exception(e)
            raise e

    def inverse_residuals(self) -> np.ndarray:
        """sum_{d|n} lambda(d) mu(n/d) - [n = 1] for every n <= bound"""
        n_max = self.bound
        conv = np.zeros(n_max + 1, dtype=complex)
        for d in range(1, n_max + 1):
            k = n_max // d
            conv[d::d][:k] += self.lam[d] * self.mu[1 : k + 1]
        conv[1] -= 1
        return conv[1:]

    def mu_bound_violations(self) -> list:
        """n with |mu(n)| > tau_m(n) n^delta (1 + 1e-9)"""
        tau = divisor_function(self.degree, self.bound)
        n = np.arange(self.bound + 1)
        limit = tau * n.astype(float) ** self.ramanujan_exponent * (1 + 1e-9)
        bad = np.nonzero(np.abs(self.mu[1:]) > limit[1:])[0] + 1
        return bad.tolist()

    def __str__(self):
        return (
            f"{colored(self.label, 'cyan')} coefficients up to "
            f"{colored(str(self.bound), 'yellow')}"
        )


def build_coefficients(
    instance: AutomorphicInstance, n_max: int
) -> CoefficientTable:
    """Multiplicative sieve of lambda and mu.

    Every n is split as p^k r with p its smallest prime factor and p not
    dividing r, so lambda(n) = lambda(p^k) lambda(r) with the prime-power
    values coming from the local symmetric functions.
    """
    if n_max < 1:
        e = DomainError(f"{n_max=} must be positive")
        logger.exception(e)
        raise e
    spf = smallest_prime_factors(max(n_max, 2))
    lam = np.zeros(n_max + 1, dtype=complex)
    mu = np.zeros(n_max + 1, dtype=complex)
    lam[1] = mu[1] = 1
    # n -> (p^k, k) for the smallest prime p of n
    prime_power = np.ones(n_max + 1, dtype=np.int64)
    exponent = np.zeros(n_max + 1, dtype=np.int64)
    local = {}
    satake = {}

    for n in range(2, n_max + 1):
        p = int(spf[n])
        m = n // p
        if m > 1 and spf[m] == p:
            prime_power[n] = prime_power[m] * p
            exponent[n] = exponent[m] + 1
        else:
            prime_power[n] = p
            exponent[n] = 1
        k = int(exponent[n])
        if (p, k) not in local:
            if p not in satake:
                satake[p] = instance.satake(p)
            alpha = satake[p]
            local[p, k] = (local_lambda(alpha, k), local_mu(alpha, k))
        rest = n // int(prime_power[n])
        lam_pk, mu_pk = local[p, k]
        lam[n] = lam_pk * lam[rest]
        mu[n] = mu_pk * mu[rest]

    lam.flags.writeable = False
    mu.flags.writeable = False
    logger.info(f"Built coefficients of {instance.label} up to {n_max}")
    return CoefficientTable(
        label=instance.label,
        bound=n_max,
        lam=lam,
        mu=mu,
        degree=instance.degree,
        ramanujan_exponent=instance.ramanujan_exponent,
    )


def divisor_function(m: int, n_max: int) -> np.ndarray:
    """tau_m(n) for 0 <= n <= n_max (the m-fold divisor function, tau_m(0)=0)"""
    tau = np.zeros(n_max + 1, dtype=np.int64)
    tau[1:] = 1
    for _ in range(m - 1):
        nxt = np.zeros_like(tau)
        for d in range(1, n_max + 1):
            k = n_max // d
            nxt[d::d][:k] += tau[1 : k + 1]
        tau = nxt
    return tau


def write_coefficients_csv(table: CoefficientTable, path) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for n in range(1, table.bound + 1):
            lam, mu = table.lam[n], table.mu[n]
            writer.writerow(
                (n, fmt(lam.real), fmt(lam.imag), fmt(mu.real), fmt(mu.imag))
            )
    logger.info(f"Wrote {table.bound} coefficients of {table.label} to {path}")
