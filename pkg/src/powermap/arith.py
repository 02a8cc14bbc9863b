"""Exact integer kernel: factorization, multiplicative functions, orders, sieve.

Everything here works on Python ints (arbitrary precision) and returns plain
values or small immutable containers. Exact rationals are
:class:`fractions.Fraction`, which is always kept in lowest terms.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np
from sympy import factorint

from . import config
from .errors import CapExceeded, NotCoprime, ResourceLimit

__all__ = [
    "Factorization",
    "factorize",
    "euler_phi",
    "tau",
    "moebius",
    "divisors",
    "multiplicative_order",
    "p_adic_valuation",
    "coprime_part",
    "primes_up_to",
    "iter_prime_segments",
    "s_units_ascending",
    "iter_s_units",
]


@dataclass(frozen=True)
class Factorization:
    """Prime factorization as a tuple of ``(prime, exponent)`` pairs, primes ascending."""

    factors: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = 1
        for p, e in self.factors:
            if p <= prev or e < 1:
                raise ValueError(f"malformed factorization {self.factors!r}")
            prev = p

    @classmethod
    def from_dict(cls, d: dict[int, int]) -> "Factorization":
        return cls(tuple(sorted((int(p), int(e)) for p, e in d.items() if e)))

    @property
    def value(self) -> int:
        n = 1
        for p, e in self.factors:
            n *= p**e
        return n

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(e for _, e in self.factors)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __mul__(self, other: "Factorization") -> "Factorization":
        merged = dict(self.factors)
        for p, e in other.factors:
            merged[p] = merged.get(p, 0) + e
        return Factorization.from_dict(merged)

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        return " * ".join(f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors)


@lru_cache(maxsize=1 << 16)
def _factor_small(n: int) -> Factorization:
    return Factorization.from_dict(factorint(n))


def factorize(n: int, *, bit_cap: int | None = None) -> Factorization:
    """Factor ``n >= 1``.

    Raises :class:`CapExceeded` when ``n`` has more than ``bit_cap`` bits
    (default from :data:`powermap.config.DEFAULT_CAPS`).
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"factorize expects n >= 1, got {n}")
    cap = config.DEFAULT_CAPS.factor_bits if bit_cap is None else bit_cap
    if n.bit_length() > cap:
        raise CapExceeded(
            f"{n.bit_length()}-bit integer exceeds the factorization cap of {cap} bits; "
            "reduce the input or raise the cap (POWERMAP_FACTOR_BITS / --factor-bits)"
        )
    if n < 1 << 64:
        return _factor_small(n)
    return Factorization.from_dict(factorint(n))


def _as_factorization(n) -> Factorization:
    return n if isinstance(n, Factorization) else factorize(n)


def euler_phi(f: Factorization | int) -> int:
    f = _as_factorization(f)
    result = 1
    for p, e in f:
        result *= p ** (e - 1) * (p - 1)
    return result


def tau(f: Factorization | int) -> int:
    f = _as_factorization(f)
    return math.prod(e + 1 for _, e in f)


def moebius(f: Factorization | int) -> int:
    f = _as_factorization(f)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def divisors(f: Factorization | int) -> Iterator[int]:
    """Yield every divisor once, in ascending order."""
    f = _as_factorization(f)
    divs = [1]
    for p, e in f:
        divs = [d * p**i for d in divs for i in range(e + 1)]
    divs.sort()
    return iter(divs)


def multiplicative_order(k: int, d: int) -> int:
    """Least ``e >= 1`` with ``k**e == 1 (mod d)``; ``ord_1 k`` is 1."""
    d = int(d)
    if d < 1:
        raise ValueError(f"modulus must be >= 1, got {d}")
    if d == 1:
        return 1
    if math.gcd(k, d) != 1:
        raise NotCoprime(f"gcd({k}, {d}) != 1, order undefined")
    lam, lam_f = _carmichael(factorize(d))
    order = lam
    for q, _ in lam_f:
        while order % q == 0 and pow(k, order // q, d) == 1:
            order //= q
    return order


def _carmichael(f: Factorization) -> tuple[int, Factorization]:
    """Carmichael's lambda of ``f.value`` together with its factorization."""
    merged: dict[int, int] = {}
    for p, e in f:
        if p == 2:
            part = {2: e - 2} if e >= 3 else {2: e - 1}
        else:
            part = dict(factorize(p - 1).factors)
            if e > 1:
                part[p] = part.get(p, 0) + e - 1
        for q, a in part.items():
            if a > merged.get(q, 0):
                merged[q] = a
    lam_f = Factorization.from_dict(merged)
    return lam_f.value, lam_f


def p_adic_valuation(n: int, p: int) -> int:
    if n < 1:
        raise ValueError(f"valuation needs n >= 1, got {n}")
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def coprime_part(n: Factorization | int, s_primes: Iterable[int]) -> tuple[int, list[int]]:
    """Split ``n`` as ``prod(p_i**r_i) * rho`` with ``rho`` coprime to ``s_primes``.

    Returns ``(rho, [r_1, ..., r_s])`` with exponents aligned to the primes in
    ascending order. Integer input is stripped by division, so it need not be
    factored.
    """
    primes = sorted(set(s_primes))
    if isinstance(n, Factorization):
        exps = dict(n.factors)
        rho = 1
        for p, e in n:
            if p not in primes:
                rho *= p**e
        return rho, [exps.get(p, 0) for p in primes]
    rho = int(n)
    if rho < 1:
        raise ValueError(f"coprime_part expects n >= 1, got {n}")
    out = []
    for p in primes:
        e = 0
        while rho % p == 0:
            rho //= p
            e += 1
        out.append(e)
    return rho, out


_SEGMENT = 1 << 20


def _small_sieve(n: int) -> np.ndarray:
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if is_p[i]:
            is_p[i * i :: i] = False
    return np.flatnonzero(is_p)


def iter_prime_segments(N: int, *, sieve_cap: int | None = None) -> Iterator[np.ndarray]:
    """Segmented sieve of Eratosthenes: yield int64 arrays of primes <= N in order."""
    cap = config.DEFAULT_CAPS.sieve_cap if sieve_cap is None else sieve_cap
    if N > cap:
        raise ResourceLimit(
            f"N={N} exceeds the sieve cap of {cap}; raise POWERMAP_SIEVE_CAP / --sieve-cap"
        )
    if N < 2:
        return
    base = _small_sieve(math.isqrt(N))
    if N < _SEGMENT:
        yield _small_sieve(N).astype(np.int64)
        return
    for lo in range(0, N + 1, _SEGMENT):
        hi = min(lo + _SEGMENT, N + 1)
        seg = np.ones(hi - lo, dtype=bool)
        if lo == 0:
            seg[: min(2, hi)] = False
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, (lo + p - 1) // p * p)
            seg[start - lo :: p] = False
        yield (np.flatnonzero(seg) + lo).astype(np.int64)


def primes_up_to(N: int, *, sieve_cap: int | None = None) -> list[int]:
    """All primes ``<= N`` in ascending order."""
    if N < 2:
        raise ValueError(f"primes_up_to expects N >= 2, got {N}")
    return [int(p) for seg in iter_prime_segments(N, sieve_cap=sieve_cap) for p in seg]


def iter_s_units(s_primes: Sequence[int]) -> Iterator[int]:
    """Yield all positive integers built from ``s_primes``, ascending, starting at 1.

    Smallest-first frontier: each popped ``q`` is extended only by primes at or
    after its largest prime index, so every S-unit is produced exactly once.
    """
    primes = sorted(set(int(p) for p in s_primes))
    if not primes:
        raise ValueError("need at least one prime")
    heap = [(1, 0)]
    while heap:
        q, idx = heapq.heappop(heap)
        yield q
        for j in range(idx, len(primes)):
            heapq.heappush(heap, (q * primes[j], j))


def s_units_ascending(s_primes: Sequence[int], bound: int) -> list[int]:
    out = []
    for q in iter_s_units(s_primes):
        if q > bound:
            break
        out.append(q)
    return out
