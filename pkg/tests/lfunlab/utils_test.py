import json
import math

import numpy as np
import pytest

from lfunlab.utils import BoundedCache
from lfunlab.utils import factorize
from lfunlab.utils import fmt
from lfunlab.utils import is_prime
from lfunlab.utils import jsonable
from lfunlab.utils import loglog_slope
from lfunlab.utils import primes_up_to
from lfunlab.utils import smallest_prime_factors


def test_fmt():
    assert fmt(1.5) == "1.500000000000e+00"


def test_jsonable():
    data = jsonable(dict(a=1 / 3, b=complex(1, -2), c=float("nan"), d=np.int64(4), e=(True, None)))
    assert data == dict(
        a=float("3.333333333333e-01"), b=dict(re=1.0, im=-2.0), c="nan", d=4, e=[True, None]
    )
    json.dumps(data)


def test_jsonable_uses_to_dict():
    class Result:
        def to_dict(self):
            return dict(value=np.float64(2.0))

    assert jsonable([Result()]) == [dict(value=2.0)]


def test_factorize():
    assert factorize(360) == [(2, 3), (3, 2), (5, 1)]
    assert factorize(1) == []
    assert is_prime(97)
    assert not is_prime(91)


def test_primes():
    assert primes_up_to(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    spf = smallest_prime_factors(30)
    assert spf[28] == 2
    assert spf[25] == 5
    assert spf[29] == 29


def test_loglog_slope():
    xs = [1, 2, 4, 8]
    assert loglog_slope(xs, [x**1.5 for x in xs]) == pytest.approx(1.5)
    assert math.isnan(loglog_slope([1], [1]))
    assert math.isnan(loglog_slope([1, 2], [0, 0]))


class TestBoundedCache:
    def test_evicts_least_recently_used(self):
        cache = BoundedCache(2)
        cache.setdefault("a", 1)
        cache.setdefault("b", 2)
        assert cache.get("a") == 1
        cache.setdefault("c", 3)
        assert len(cache) == 2
        assert cache.get("b") is None
        assert cache.get("a") == 1
        assert cache.get("c") == 3

    def test_setdefault_keeps_first_value(self):
        cache = BoundedCache(4)
        assert cache.setdefault("a", 1) == 1
        assert cache.setdefault("a", 2) == 1

    def test_size_stays_under_cap(self):
        cache = BoundedCache(8)
        for i in range(100):
            cache.setdefault(i, i)
            assert len(cache) <= 8
        cache.clear()
        assert len(cache) == 0

    def test_needs_positive_size(self):
        with pytest.raises(ValueError):
            BoundedCache(0)
