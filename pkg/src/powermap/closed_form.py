"""Exact formulas for the power map modulo an odd prime power ``p**m``.

With ``k = p_1^n_1 ... p_s^n_s`` and ``phi = p^m - p^(m-1) = p_1^r_1 ... p_s^r_s * rho``
(``rho`` coprime to ``k``), the periodic points are exactly the elements whose
order divides ``rho``, and everything else follows from element orders.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

from sympy import isprime, primitive_root

from .arith import (
    Factorization,
    coprime_part,
    divisors,
    euler_phi,
    factorize,
    moebius,
    multiplicative_order,
    p_adic_valuation,
)
from .dynamics import GraphStats
from .errors import NotCoprime, NotOddPrime


@dataclass(frozen=True)
class PrimePowerContext:
    p: int
    m: int
    k: int
    k_factors: Factorization
    phi: int
    rho: int
    r_exponents: tuple[int, ...]

    @property
    def modulus(self) -> int:
        return self.p**self.m

    @property
    def smooth_part(self) -> int:
        """The k-smooth part ``p_1^r_1 ... p_s^r_s`` of ``phi``."""
        return self.phi // self.rho

    @cached_property
    def rho_factors(self) -> Factorization:
        return factorize(self.rho)

    @cached_property
    def phi_factors(self) -> Factorization:
        return factorize(self.p - 1) * Factorization(((self.p, self.m - 1),) if self.m > 1 else ())


def prime_power_context(k: int, p: int, m: int = 1) -> PrimePowerContext:
    """Validate ``(k, p, m)`` and precompute ``phi``, ``rho`` and the ``r_i``.

    ``p = 2`` is rejected with :class:`NotOddPrime`; use the brute-force oracle
    for powers of two.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if p == 2:
        raise NotOddPrime("closed forms cover odd prime powers only; use the oracle for p = 2")
    if p < 2 or not isprime(p):
        raise NotOddPrime(f"{p} is not an odd prime")
    k_f = factorize(k)
    phi = p ** (m - 1) * (p - 1)
    rho, r_exps = coprime_part(phi, k_f.primes)
    return PrimePowerContext(p, m, k, k_f, phi, rho, tuple(r_exps))


@lru_cache(maxsize=1 << 16)
def _ord(k: int, d: int) -> int:
    return multiplicative_order(k, d)


def _gcd_with_power_minus_one(n: int, k: int, e: int) -> int:
    """``gcd(n, k**e - 1)`` without forming ``k**e``."""
    return math.gcd(n, (pow(k, e, n) - 1) % n)


@lru_cache(maxsize=4096)
def _mobius_divisors(r: int) -> tuple[tuple[int, int], ...]:
    """Pairs ``(d, mu(d))`` over divisors of ``r`` with ``mu(d) != 0``."""
    return tuple((d, mu) for d in divisors(r) if (mu := moebius(d)))


def _mobius_sum(r: int, ctx: PrimePowerContext) -> int:
    return sum(
        mu * _gcd_with_power_minus_one(ctx.phi, ctx.k, r // d)
        for d, mu in _mobius_divisors(r)
    )


def periodic_points_with_period(r: int, ctx: PrimePowerContext) -> int:
    if r < 1:
        raise ValueError(f"period must be >= 1, got {r}")
    return _mobius_sum(r, ctx)


def cycles_with_length(r: int, ctx: PrimePowerContext) -> int:
    total = periodic_points_with_period(r, ctx)
    q, rem = divmod(total, r)
    assert rem == 0, (r, total)
    return q


def periodic_point_count(ctx: PrimePowerContext) -> int:
    return ctx.rho


def cycle_count(ctx: PrimePowerContext) -> int:
    total = Fraction(0)
    for d in divisors(ctx.rho_factors):
        total += Fraction(euler_phi(d), _ord(ctx.k, d))
    assert total.denominator == 1
    return int(total)


def _element_order(x: int, ctx: PrimePowerContext) -> int:
    x %= ctx.modulus
    if x % ctx.p == 0:
        raise NotCoprime(f"{x} is not a unit mod {ctx.modulus}")
    return multiplicative_order(x, ctx.modulus)


def cycle_length_of(x: int, ctx: PrimePowerContext, order: int | None = None) -> int:
    """Length of the cycle reached from ``x``: ``ord_g k`` with ``g = gcd(ord x, rho)``.

    ``order`` may be passed when the order of ``x`` is already known.
    """
    if order is None:
        order = _element_order(x, ctx)
    return _ord(ctx.k, math.gcd(order, ctx.rho))


def tail_of(x: int, ctx: PrimePowerContext, order: int | None = None) -> int:
    """Steps before ``x`` reaches its cycle: ``max_i ceil(v_{p_i}(ord x) / n_i)``."""
    if order is None:
        order = _element_order(x, ctx)
    return max(
        (-(-p_adic_valuation(order, q) // n) for q, n in ctx.k_factors),
        default=0,
    )


def avg_cycle_length(ctx: PrimePowerContext) -> Fraction:
    total = sum(euler_phi(d) * _ord(ctx.k, d) for d in divisors(ctx.rho_factors))
    return Fraction(total, ctx.rho)


@lru_cache(maxsize=4096)
def smooth_tail_sum(k_factors: Factorization, r_exponents: tuple[int, ...]) -> int:
    """``sum over d | w of phi(d) * max_i ceil(v_{p_i}(d)/n_i)`` for ``w = prod p_i^r_i``.

    Divisors of ``w`` are enumerated through their exponent vectors.
    """
    primes, ns = k_factors.primes, k_factors.exponents
    total = 0
    for vec in itertools.product(*(range(r + 1) for r in r_exponents)):
        weight = max((-(-a // n) for a, n in zip(vec, ns)), default=0)
        if weight:
            total += weight * math.prod(
                p ** (a - 1) * (p - 1) for p, a in zip(primes, vec) if a
            )
    return total


def avg_tail(ctx: PrimePowerContext) -> Fraction:
    return Fraction(smooth_tail_sum(ctx.k_factors, ctx.r_exponents), ctx.smooth_part)


def period_set(ctx: PrimePowerContext) -> list[int]:
    """Every cycle length that occurs, i.e. ``{ord_d k : d | rho}``, ascending."""
    return sorted({_ord(ctx.k, d) for d in divisors(ctx.rho_factors)})


def graph_stats_closed(ctx: PrimePowerContext) -> GraphStats:
    p_by, c_by = {}, {}
    for r in period_set(ctx):
        p_by[r] = periodic_points_with_period(r, ctx)
        c_by[r] = cycles_with_length(r, ctx)
    return GraphStats(
        P_by_period=p_by,
        C_by_length=c_by,
        P_total=periodic_point_count(ctx),
        C_total=cycle_count(ctx),
        avg_cycle_length=avg_cycle_length(ctx),
        avg_tail=avg_tail(ctx),
        unit_count=ctx.phi,
    )


def unit_orders(ctx: PrimePowerContext) -> list[int]:
    """Order of every residue mod ``p**m`` (0 for non-units), from a primitive root.

    ``g**i`` has order ``phi / gcd(i, phi)``; walking the powers of ``g`` fills
    the whole table in ``phi`` multiplications.
    """
    M, phi = ctx.modulus, ctx.phi
    g = primitive_root(M)
    orders = [0] * M
    y = 1
    for i in range(phi):
        orders[y] = phi // math.gcd(i, phi)
        y = y * g % M
    return orders
