"""Exhaustive oracle-vs-formula equivalence over a grid of (k, p^m)."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .arith import divisors, primes_up_to
from .closed_form import (
    cycle_length_of,
    cycles_with_length,
    graph_stats_closed,
    periodic_points_with_period,
    prime_power_context,
    tail_of,
    unit_orders,
)
from .dynamics import PowerMapParams, orbit_table, stats_from_table


@dataclass
class Mismatch:
    k: int
    p: int
    m: int
    field: str
    closed: object
    oracle: object

    def as_dict(self) -> dict:
        return {"k": self.k, "p": self.p, "m": self.m, "field": self.field,
                "closed": repr(self.closed), "oracle": repr(self.oracle)}


@dataclass
class VerifyResult:
    k_values: list[int]
    max_modulus: int
    moduli: int = 0
    cases: int = 0
    units_checked: int = 0
    mismatch: Mismatch | None = None
    identity_r_max: int = 24
    per_element: bool = True
    failures: list[Mismatch] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.mismatch is None

    def to_dict(self) -> dict:
        return {
            "k_values": self.k_values,
            "max_modulus": self.max_modulus,
            "moduli_checked": self.moduli,
            "cases_checked": self.cases,
            "units_checked": self.units_checked,
            "per_element": self.per_element,
            "identity_r_max": self.identity_r_max,
            "passed": self.passed,
            "mismatch": None if self.mismatch is None else self.mismatch.as_dict(),
        }


def odd_prime_powers(bound: int) -> list[tuple[int, int]]:
    """All ``(p, m)`` with ``p`` odd prime and ``p**m <= bound``, ordered by ``p**m``."""
    if bound < 3:
        return []
    out = []
    for p in primes_up_to(bound)[1:]:
        q, m = p, 1
        while q <= bound:
            out.append((p, m))
            q *= p
            m += 1
    out.sort(key=lambda t: t[0] ** t[1])
    return out


def check_identities(k: int, p: int, m: int, r_max: int = 24) -> Mismatch | None:
    """Divisor-sum and cycle/point identities for one context."""
    ctx = prime_power_context(k, p, m)
    P = {r: periodic_points_with_period(r, ctx) for r in range(1, r_max + 1)}
    for r in range(1, r_max + 1):
        lhs = sum(P[d] for d in divisors(r))
        rhs = math.gcd(ctx.phi, k**r - 1)
        if lhs != rhs:
            return Mismatch(k, p, m, f"sum_d|{r} P_d", lhs, rhs)
        c = cycles_with_length(r, ctx)
        if P[r] != r * c:
            return Mismatch(k, p, m, f"P_{r} = {r} C_{r}", P[r], r * c)
    stats = graph_stats_closed(ctx)
    weighted = sum(r * c for r, c in stats.C_by_length.items())
    if not (weighted == stats.P_total == ctx.rho):
        return Mismatch(k, p, m, "sum r C_r = P = rho", weighted, ctx.rho)
    return None


def check_prime_power(p: int, m: int, k_values, *, per_element: bool = True,
                      identity_r_max: int = 24) -> tuple[int, int, list[Mismatch]]:
    """Compare closed form and oracle for every ``k`` at one modulus ``p**m``.

    Returns ``(cases, units_checked, mismatches)``.
    """
    M = p**m
    units = [x for x in range(1, M) if x % p]
    if per_element:
        orders = unit_orders(prime_power_context(2, p, m))
        rep = {}
        for x in units:
            rep.setdefault(orders[x], x)
    bad: list[Mismatch] = []
    checked = 0
    for k in k_values:
        ctx = prime_power_context(k, p, m)
        tail, cycle, cycles = orbit_table(PowerMapParams.prime_power(k, p, m))
        oracle = stats_from_table(tail, cycle, cycles)
        closed = graph_stats_closed(ctx)
        for name in closed.diff(oracle):
            bad.append(Mismatch(k, p, m, name, getattr(closed, name), getattr(oracle, name)))
        if per_element:
            # indexed by residue; non-units (order 0) carry the oracle's sentinels
            c_by_order = {0: 0}
            t_by_order = {0: -1}
            for o in divisors(ctx.phi_factors):
                c_by_order[o] = cycle_length_of(rep[o], ctx, order=o)
                t_by_order[o] = tail_of(rep[o], ctx, order=o)
            want_c = list(map(c_by_order.__getitem__, orders))
            want_t = list(map(t_by_order.__getitem__, orders))
            if want_c != cycle:
                x = next(x for x in units if want_c[x] != cycle[x])
                bad.append(Mismatch(k, p, m, f"cycle_length_of({x})", want_c[x], cycle[x]))
            if want_t != tail:
                x = next(x for x in units if want_t[x] != tail[x])
                bad.append(Mismatch(k, p, m, f"tail_of({x})", want_t[x], tail[x]))
            checked += len(units)
        if identity_r_max:
            mm = check_identities(k, p, m, identity_r_max)
            if mm:
                bad.append(mm)
    return len(k_values), checked, bad


def _check_batch(batch, k_values, per_element, identity_r_max, stop_on_first):
    cases = units = 0
    bad = []
    for p, m in batch:
        c, u, b = check_prime_power(p, m, k_values, per_element=per_element,
                                    identity_r_max=identity_r_max)
        cases += c
        units += u
        bad.extend(b)
        if b and stop_on_first:
            break
    return cases, units, bad


def verify_grid(k_values, max_modulus: int, *, workers: int = 1, per_element: bool = True,
                identity_r_max: int = 24, stop_on_first: bool = True, progress=None) -> VerifyResult:
    """Check every odd prime power ``<= max_modulus`` against every ``k`` in ``k_values``.

    The reported mismatch is the first in (modulus, k) order regardless of
    ``workers``.
    """
    k_values = sorted(set(k_values))
    if not k_values or min(k_values) < 2:
        raise ValueError("k range must be non-empty with every k >= 2")
    grid = odd_prime_powers(max_modulus)
    if not grid:
        raise ValueError(f"no odd prime powers <= {max_modulus}")
    result = VerifyResult(k_values, max_modulus, identity_r_max=identity_r_max,
                          per_element=per_element)
    # strided partition balances large and small moduli across workers
    n_batches = max(1, workers) * 8 if workers > 1 else 1
    batches = [grid[i::n_batches] for i in range(n_batches)]
    args = (k_values, per_element, identity_r_max, stop_on_first and workers <= 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_check_batch, batches, *([a] * len(batches) for a in args)))
    else:
        outs = []
        for i, (p, m) in enumerate(grid):
            outs.append(_check_batch([(p, m)], *args))
            if progress:
                progress(i + 1, len(grid), p**m)
            if outs[-1][2] and stop_on_first:
                break
    for c, u, b in outs:
        result.cases += c
        result.units_checked += u
        result.failures.extend(b)
    result.moduli = result.cases // len(k_values)
    if result.failures:
        order = {pm: i for i, pm in enumerate(grid)}
        result.failures.sort(key=lambda f: (order[(f.p, f.m)], f.k))
        result.mismatch = result.failures[0]
    return result
