import math
import threading
from collections import OrderedDict
from datetime import datetime
from functools import lru_cache

import numpy as np

FLOAT_FORMAT = "%.12e"


def now():
    return datetime.now().timestamp()


def fmt(x) -> str:
    """Fixed 12-digit formatting used by every CSV/JSON writer"""
    return FLOAT_FORMAT % x


def _number(x):
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else str(x)


def jsonable(value):
    """Recursively turns results into JSON friendly values.

    Floats are rounded through `FLOAT_FORMAT` so that two runs with the same
    configuration produce identical files; non-finite floats become strings.
    Complex numbers become a ``{"re": .., "im": ..}`` pair.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)) or value is None:
        return bool(value) if value is not None else None
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return dict(re=_number(value.real), im=_number(value.imag))
    if isinstance(value, (float, np.floating)):
        return _number(value)
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    return str(value)


@lru_cache(maxsize=8)
def smallest_prime_factors(bound: int) -> np.ndarray:
    """Smallest prime factor of every integer up to `bound` (0 and 1 map to
    themselves)."""
    spf = np.arange(bound + 1, dtype=np.int64)
    for p in range(2, math.isqrt(bound) + 1):
        if spf[p] == p:
            block = spf[p * p :: p]
            mask = block == np.arange(p * p, bound + 1, p)
            block[mask] = p
    spf.flags.writeable = False
    return spf


def primes_up_to(bound: int) -> np.ndarray:
    if bound < 2:
        return np.array([], dtype=np.int64)
    spf = smallest_prime_factors(bound)
    n = np.arange(bound + 1)
    return n[(spf == n) & (n >= 2)]


def factorize(n: int) -> list:
    """Returns the list of (p, k) prime powers exactly dividing `n`"""
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            factors.append((p, k))
        p += 1
    if n > 1:
        factors.append((n, 1))
    return factors


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == [(n, 1)]


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x), ignoring non-positive
    values. Returns nan when fewer than two usable points remain."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0)
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)
    return float(slope)


class BoundedCache:
    """Thread-safe mapping that evicts the least recently used entry once it
    holds `maxsize` items."""

    def __init__(self, maxsize: int):
        if maxsize < 1:
            raise ValueError(f"maxsize must be positive, got {maxsize}")
        self.maxsize = maxsize
        self._data = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._data)

    def get(self, key, default=None):
        with self._lock:
            if key not in self._data:
                return default
            self._data.move_to_end(key)
            return self._data[key]

    def setdefault(self, key, value):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
            self._data[key] = value
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)
            return value

    def clear(self):
        with self._lock:
            self._data.clear()
