"""Brute-force functional graph of ``x -> x**k`` on the unit group mod M.

Nothing in this module knows any closed-form formula. It only performs modular
exponentiation and bookkeeping, which is what makes it usable as an oracle
for :mod:`powermap.closed_form`.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import Factorization, factorize
from . import config
from .errors import NotCoprime, ResourceLimit


@dataclass(frozen=True)
class PowerMapParams:
    """The system under study: exponent ``k`` acting on ``(Z/MZ)*``.

    Build with ``PowerMapParams(k, M)`` or :meth:`prime_power`.
    """

    k: int
    modulus: int
    p: int | None = None
    m: int | None = None
    k_factors: Factorization = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        if self.p is not None and self.p**self.m != self.modulus:
            raise ValueError(f"{self.p}^{self.m} != {self.modulus}")
        if self.k_factors is None:
            object.__setattr__(self, "k_factors", factorize(self.k))
        elif self.k_factors.value != self.k:
            raise ValueError("k_factors does not reconstruct k")

    @classmethod
    def prime_power(cls, k: int, p: int, m: int = 1) -> "PowerMapParams":
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        return cls(k, p**m, p, m)


@dataclass(frozen=True)
class OrbitRecord:
    element: int
    tail: int
    cycle_length: int

    @property
    def preperiod_s(self) -> int:
        return self.tail + self.cycle_length

    @property
    def is_periodic(self) -> bool:
        return self.tail == 0


@dataclass
class GraphStats:
    """Aggregate statistics of one functional graph."""

    P_by_period: dict[int, int]
    C_by_length: dict[int, int]
    P_total: int
    C_total: int
    avg_cycle_length: Fraction
    avg_tail: Fraction
    unit_count: int

    def check_invariants(self) -> None:
        assert sum(self.P_by_period.values()) == self.P_total
        assert sum(self.C_by_length.values()) == self.C_total
        assert sum(r * c for r, c in self.C_by_length.items()) == self.P_total
        assert set(self.P_by_period) == set(self.C_by_length)
        for r, c in self.C_by_length.items():
            assert self.P_by_period[r] == r * c, r

    def diff(self, other: "GraphStats") -> list[str]:
        """Names of fields that differ between two stats objects."""
        names = ["P_by_period", "C_by_length", "P_total", "C_total",
                 "avg_cycle_length", "avg_tail", "unit_count"]
        return [n for n in names if getattr(self, n) != getattr(other, n)]

    def to_dict(self) -> dict:
        from .report import encode_rational

        return {
            "P_by_period": {str(r): c for r, c in sorted(self.P_by_period.items())},
            "C_by_length": {str(r): c for r, c in sorted(self.C_by_length.items())},
            "P_total": self.P_total,
            "C_total": self.C_total,
            "avg_cycle_length": encode_rational(self.avg_cycle_length),
            "avg_tail": encode_rational(self.avg_tail),
            "unit_count": self.unit_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphStats":
        from .report import decode_rational

        return cls(
            P_by_period={int(r): int(c) for r, c in d["P_by_period"].items()},
            C_by_length={int(r): int(c) for r, c in d["C_by_length"].items()},
            P_total=int(d["P_total"]),
            C_total=int(d["C_total"]),
            avg_cycle_length=decode_rational(d["avg_cycle_length"]),
            avg_tail=decode_rational(d["avg_tail"]),
            unit_count=int(d["unit_count"]),
        )


def _check_cap(M: int, oracle_cap: int | None) -> None:
    cap = config.DEFAULT_CAPS.oracle_cap if oracle_cap is None else oracle_cap
    # M - 1 bounds phi(M) from above; only pay for the exact value near the cap
    if M - 1 > cap:
        from .arith import euler_phi

        phi = euler_phi(factorize(M))
        if phi > cap:
            raise ResourceLimit(
                f"unit group mod {M} has {phi} elements, above the oracle cap of {cap}; "
                "raise POWERMAP_ORACLE_CAP / --oracle-cap"
            )


def unit_group(M: int, *, oracle_cap: int | None = None) -> list[int]:
    if M < 2:
        raise ValueError(f"modulus must be >= 2, got {M}")
    _check_cap(M, oracle_cap)
    return [x for x in range(1, M) if math.gcd(x, M) == 1]


def orbit(x: int, params: PowerMapParams) -> OrbitRecord:
    """Walk ``x, x^k, x^(k^2), ...`` until an element repeats."""
    M, k = params.modulus, params.k
    x %= M
    if math.gcd(x, M) != 1:
        raise NotCoprime(f"{x} is not a unit mod {M}")
    first_seen: dict[int, int] = {}
    y, i = x, 0
    while y not in first_seen:
        first_seen[y] = i
        y = pow(y, k, M)
        i += 1
    t = first_seen[y]
    return OrbitRecord(x, t, i - t)


_INT64_SAFE = 3_037_000_499  # largest M with (M - 1)**2 < 2**63
_BLOCK = 1 << 20


def power_table(M: int, k: int) -> list[int]:
    """``[x**k % M for x in range(M)]``, by blockwise square-and-multiply in numpy."""
    if M > _INT64_SAFE:
        return [pow(x, k, M) for x in range(M)]
    out: list[int] = []
    for lo in range(0, M, _BLOCK):
        base = np.arange(lo, min(lo + _BLOCK, M), dtype=np.int64)
        acc = np.ones_like(base) % M
        e = k
        while e:
            if e & 1:
                acc = acc * base % M
            e >>= 1
            if e:
                base = base * base % M
        out.extend(acc.tolist())
    return out


def orbit_table(params: PowerMapParams, *, oracle_cap: int | None = None) -> tuple[list[int], list[int], list[int]]:
    """Tail and cycle length for every residue, plus the list of cycle lengths found.

    Returns ``(tail, cycle, cycles)`` where ``tail[x]``/``cycle[x]`` are indexed
    by residue (``-1``/``0`` for non-units) and ``cycles`` holds one entry per
    distinct cycle. Each walk stops at the first element with a known record
    and splices that record in, so every edge is followed once.
    """
    M, k = params.modulus, params.k
    _check_cap(M, oracle_cap)
    f = power_table(M, k)
    tail = [-1] * M
    cycle = [0] * M
    on_path = [-1] * M
    cycles: list[int] = []
    for x in range(1, M):
        if tail[x] >= 0 or math.gcd(x, M) != 1:
            continue
        path = []
        y = x
        while tail[y] < 0 and on_path[y] < 0:
            on_path[y] = len(path)
            path.append(y)
            y = f[y]
        n = len(path)
        if tail[y] < 0:
            # closed a new cycle inside this walk
            start = on_path[y]
            length = n - start
            cycles.append(length)
            for j in range(start, n):
                tail[path[j]] = 0
                cycle[path[j]] = length
            for j in range(start):
                tail[path[j]] = start - j
                cycle[path[j]] = length
        else:
            ty, cy = tail[y], cycle[y]
            for j in range(n):
                tail[path[j]] = ty + n - j
                cycle[path[j]] = cy
        for y in path:
            on_path[y] = -1
    return tail, cycle, cycles


def stats_from_table(tail: list[int], cycle: list[int], cycles: list[int]) -> GraphStats:
    units = [x for x in range(1, len(tail)) if tail[x] >= 0]
    c_by_len = Counter(cycles)
    p_by_period = Counter(cycle[x] for x in units if tail[x] == 0)
    non_units = len(tail) - len(units)  # residue 0 and non-units carry tail -1, cycle 0
    return GraphStats(
        P_by_period=dict(sorted(p_by_period.items())),
        C_by_length=dict(sorted(c_by_len.items())),
        P_total=sum(p_by_period.values()),
        C_total=len(cycles),
        avg_cycle_length=Fraction(sum(cycle), len(units)),
        avg_tail=Fraction(sum(tail) + non_units, len(units)),
        unit_count=len(units),
    )


def graph_stats_oracle(params: PowerMapParams, *, oracle_cap: int | None = None) -> GraphStats:
    return stats_from_table(*orbit_table(params, oracle_cap=oracle_cap))


def element_order(x: int, M: int) -> int:
    """Multiplicative order of ``x`` mod ``M`` by direct iteration."""
    x %= M
    if math.gcd(x, M) != 1:
        raise NotCoprime(f"{x} is not a unit mod {M}")
    if M == 1:
        return 1
    y, e = x, 1
    while y != 1 % M:
        y = y * x % M
        e += 1
    return e
