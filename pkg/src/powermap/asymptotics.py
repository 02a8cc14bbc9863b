"""Averages over primes and their limits.

* ``ap_r``/``ac_r``: mean number of points of exact period ``r`` (cycles of
  length ``r``) over primes, via ``tau(k**e - 1)``.
* ``s0_sweep``/``s_sweep``: partial averages of ``P(k, p**m)`` and of the mean
  tail ``t(k, p**m)`` over ``p <= N``.
* ``s0_limit``: Euler product limit of ``S0 / N**m``.
* ``s_limit``: the S-unit series ``sum psi(q)/q`` truncated at ``q <= B`` with a
  rigorous bound on the omitted part.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

import mpmath
import numpy as np

from .arith import (
    Factorization,
    coprime_part,
    divisors,
    factorize,
    iter_prime_segments,
    iter_s_units,
    moebius,
    tau,
)
from .closed_form import smooth_tail_sum
from . import config
from .dynamics import PowerMapParams, graph_stats_oracle
from .errors import CapExceeded, NotSUnit, ResourceLimit
from .report import DEFAULT_PRECISION, encode_rational, to_decimal

KINDS = ("S0", "S", "MeanGcd")


# -- asymptotic means of P_r and C_r -------------------------------------------

def largest_supported_r(k: int, bit_cap: int | None = None) -> int:
    cap = config.DEFAULT_CAPS.factor_bits if bit_cap is None else bit_cap
    r = 0
    while (k ** (r + 1) - 1).bit_length() <= cap:
        r += 1
    return r


def ap_r(k: int, r: int, *, bit_cap: int | None = None) -> int:
    if k < 2 or r < 1:
        raise ValueError(f"need k >= 2 and r >= 1, got k={k}, r={r}")
    cap = config.DEFAULT_CAPS.factor_bits if bit_cap is None else bit_cap
    if (k**r - 1).bit_length() > cap:
        raise CapExceeded(
            f"AP_r needs the factorization of {k}^{r} - 1 ({(k**r - 1).bit_length()} bits) "
            f"but the cap is {cap} bits; the largest supported r for k={k} is "
            f"{largest_supported_r(k, cap)} (raise --factor-bits to go further)"
        )
    return sum(
        mu * tau(factorize(k ** (r // d) - 1, bit_cap=cap))
        for d in divisors(r)
        if (mu := moebius(d))
    )


def ac_r(k: int, r: int, *, bit_cap: int | None = None) -> Fraction:
    return Fraction(ap_r(k, r, bit_cap=bit_cap), r)


# -- sweeps over primes ---------------------------------------------------------

@dataclass
class Checkpoint:
    N: int
    pi_N: int
    partial_average: Fraction
    normalized: Fraction | None = None


@dataclass
class SweepReport:
    kind: str
    m: int
    k: int | None = None
    n: int | None = None
    checkpoints: list[Checkpoint] = field(default_factory=list)

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    def to_dict(self, precision: int = DEFAULT_PRECISION) -> dict:
        return {
            "statistic_kind": self.kind,
            "k": self.k,
            "n": self.n,
            "m": self.m,
            "checkpoints": [
                {
                    "N": c.N,
                    "pi_N": c.pi_N,
                    "partial_average": encode_rational(c.partial_average, precision),
                    "normalized": None if c.normalized is None else encode_rational(c.normalized, precision),
                }
                for c in self.checkpoints
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        from .report import decode_rational

        cps = [
            Checkpoint(
                c["N"], c["pi_N"], decode_rational(c["partial_average"]),
                None if c["normalized"] is None else decode_rational(c["normalized"]),
            )
            for c in d["checkpoints"]
        ]
        return cls(d["statistic_kind"], d["m"], d.get("k"), d.get("n"), cps)


def default_checkpoints(N: int) -> list[int]:
    cps = [10**e for e in range(1, len(str(N))) if 10**e < N]
    return cps + [N]


def _tail_average_odd(p: int, m: int, k_factors: Factorization) -> Fraction:
    phi = p ** (m - 1) * (p - 1)
    rho, r = coprime_part(phi, k_factors.primes)
    return Fraction(smooth_tail_sum(k_factors, tuple(r)), phi // rho)


def _term_sum(kind: str, k: int | None, m: int, n: int | None, primes) -> Fraction:
    """Exact sum of the per-prime statistic over a block of primes."""
    total = Fraction(0)
    if kind == "MeanGcd":
        acc = 0
        for p in primes:
            p = int(p)
            acc += math.gcd(pow(p, m - 1, n) * (p - 1), n)
        return Fraction(acc)
    k_f = factorize(k)
    if kind == "S0":
        acc = 0
        for p in primes:
            p = int(p)
            if p == 2:
                acc += graph_stats_oracle(PowerMapParams.prime_power(k, 2, m)).P_total
            else:
                acc += coprime_part(p ** (m - 1) * (p - 1), k_f.primes)[0]
        return Fraction(acc)
    for p in primes:
        p = int(p)
        if p == 2:
            total += graph_stats_oracle(PowerMapParams.prime_power(k, 2, m)).avg_tail
        else:
            total += _tail_average_odd(p, m, k_f)
    return total


def _sweep(kind: str, m: int, N: int, checkpoints, *, k=None, n=None,
           workers: int = 1, sieve_cap: int | None = None, oracle_cap: int | None = None) -> SweepReport:
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    cps = sorted(set(checkpoints)) if checkpoints else default_checkpoints(N)
    if cps[0] < 2 or cps[-1] > N:
        raise ValueError(f"checkpoints must lie in [2, N={N}]")
    if cps[-1] != N:
        cps.append(N)
    if kind != "MeanGcd" and 2 ** (m - 1) > (config.DEFAULT_CAPS.oracle_cap if oracle_cap is None else oracle_cap):
        raise ResourceLimit(f"p = 2 term needs the oracle on 2^{m}, above the oracle cap")
    primes = np.concatenate(list(iter_prime_segments(N, sieve_cap=sieve_cap)))
    bounds = [int(np.searchsorted(primes, c, side="right")) for c in cps]

    # blocks split at checkpoints, and further for workers; summed in order
    blocks = []
    lo = 0
    step = max(1, len(primes) // (4 * workers)) if workers > 1 else len(primes) + 1
    for i, hi in enumerate(bounds):
        for a in range(lo, hi, step):
            blocks.append((i, a, min(a + step, hi)))
        lo = hi
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_term_sum, kind, k, m, n, primes[a:b]) for _, a, b in blocks]
            sums = [f.result() for f in futs]
    else:
        sums = [_term_sum(kind, k, m, n, primes[a:b]) for _, a, b in blocks]

    per_cp = [Fraction(0)] * len(cps)
    for (i, _, _), s in zip(blocks, sums):
        per_cp[i] += s
    report = SweepReport(kind, m, k=k, n=n)
    running = Fraction(0)
    for c, hi, s in zip(cps, bounds, per_cp):
        running += s
        avg = running / hi
        norm = avg / Fraction(c) ** m if kind == "S0" else None
        report.checkpoints.append(Checkpoint(c, hi, avg, norm))
    return report


def s0_sweep(k: int, m: int, N: int, checkpoints=None, **kw) -> SweepReport:
    """Partial averages of the periodic-point count ``P(k, p**m)`` over ``p <= N``."""
    factorize(k)
    return _sweep("S0", m, N, checkpoints, k=k, **kw)


def s_sweep(k: int, m: int, N: int, checkpoints=None, **kw) -> SweepReport:
    """Partial averages of the mean tail ``t(k, p**m)`` over ``p <= N``."""
    factorize(k)
    return _sweep("S", m, N, checkpoints, k=k, **kw)


def gcd_sweep(n: int, m: int, N: int, checkpoints=None, **kw) -> SweepReport:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _sweep("MeanGcd", m, N, checkpoints, n=n, **kw)


def empirical_mean_gcd(n: int, m: int, X: int, **kw) -> Fraction:
    """``(1/pi(X)) sum_{p <= X} gcd(p^(m-1) (p-1), n)``, which tends to ``tau(n)``."""
    return gcd_sweep(n, m, X, [X], **kw).final.partial_average


# -- limits ---------------------------------------------------------------------

@dataclass
class LimitReport:
    kind: str
    value: Fraction
    certified_error: Decimal | None = None
    lower_bound: Fraction | None = None
    upper_bound: Fraction | Decimal | None = None
    truncation_bound_B: int | None = None
    terms: int | None = None
    r: int | None = None

    def to_dict(self, precision: int = DEFAULT_PRECISION) -> dict:
        up = self.upper_bound
        return {
            "kind": self.kind,
            "value": encode_rational(self.value, precision),
            "certified_error": None if self.certified_error is None else str(self.certified_error),
            "lower_bound": None if self.lower_bound is None else encode_rational(self.lower_bound, precision),
            "upper_bound": (
                None if up is None
                else {"decimal": str(up)} if isinstance(up, Decimal)
                else encode_rational(up, precision)
            ),
            "truncation_bound_B": self.truncation_bound_B,
            "terms": self.terms,
            "r": self.r,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LimitReport":
        from .report import decode_rational

        up = d["upper_bound"]
        if up is not None:
            up = decode_rational(up) if "exact" in up else Decimal(up["decimal"])
        return cls(
            kind=d["kind"],
            value=decode_rational(d["value"]),
            certified_error=None if d["certified_error"] is None else Decimal(d["certified_error"]),
            lower_bound=None if d["lower_bound"] is None else decode_rational(d["lower_bound"]),
            upper_bound=up,
            truncation_bound_B=d["truncation_bound_B"],
            terms=d.get("terms"),
            r=d.get("r"),
        )


def s0_limit(k: int, m: int) -> Fraction:
    """``lim S0(k, m, N) / N**m = (prod p_i^2/(p_i^2 - 1) - 1) / (m + 1)``."""
    prod = Fraction(1)
    for p, _ in factorize(k):
        prod *= Fraction(p * p, p * p - 1)
    return (prod - 1) / (m + 1)


def s0_bounds(k: int, m: int) -> tuple[Fraction, Fraction]:
    s = len(factorize(k))
    return Fraction(1, k * k * (m + 1)), Fraction(2**s - 1, m + 1)


def s0_limit_report(k: int, m: int) -> LimitReport:
    lo, hi = s0_bounds(k, m)
    return LimitReport("S0Limit", s0_limit(k, m), lower_bound=lo, upper_bound=hi)


def _s_unit_exponents(q: int, k_factors: Factorization) -> tuple[int, ...]:
    if q < 1:
        raise NotSUnit(f"{q} is not a positive integer")
    rest, exps = coprime_part(q, k_factors.primes)
    if rest != 1:
        raise NotSUnit(f"{q} has a prime factor outside {list(k_factors.primes)}")
    return tuple(exps)


def psi(q: int, k_factors: Factorization | int) -> Fraction:
    """``(1/q) sum_{d | q} phi(d) max_i ceil(v_{p_i}(d) / n_i)`` for an S-unit ``q`` of ``k``."""
    if not isinstance(k_factors, Factorization):
        k_factors = factorize(k_factors)
    exps = _s_unit_exponents(q, k_factors)
    return Fraction(smooth_tail_sum(k_factors, exps), q)


def psi_layered(q: int, k_factors: Factorization) -> Fraction:
    """Same value as :func:`psi`, summed by tail level instead of by divisor.

    Divisors with tail level ``<= j`` are exactly the divisors of
    ``g_j = prod p_i^min(j n_i, r_i)``, and their totients sum to ``g_j``, so
    the divisor sum equals ``sum_{j >= 0} (q - g_j)``.
    """
    exps = _s_unit_exponents(q, k_factors)
    total, j = 0, 0
    while True:
        g = math.prod(p ** min(j * n, r) for (p, n), r in zip(k_factors, exps))
        if g == q:
            break
        total += q - g
        j += 1
    return Fraction(total, q)


def s_partial_sum(k: int, B: int) -> Fraction:
    """``sum psi(q)/q`` over S-units ``q <= B``."""
    k_f = factorize(k)
    total = Fraction(0)
    for q in iter_s_units(k_f.primes):
        if q > B:
            break
        total += psi_layered(q, k_f) / q
    return total


_IV_PREC = 192


def _frac_of_mpf(x) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def _sqrt_product(primes) -> "mpmath.ctx_iv.ivmpf":
    iv = mpmath.iv
    total = iv.mpf(1)
    for p in primes:
        r = iv.sqrt(iv.mpf(p))
        total *= r / (r - 1)
    return total


def s_limit(k: int, eps: float | Decimal | Fraction, *, sunit_cap: int | None = None) -> LimitReport:
    """Truncate ``sum psi(q)/q`` once the certified tail bound drops below ``eps``.

    For ``q >= 2``, ``psi(q) < 5 ln q < 5 sqrt(q)``, so the omitted part over
    ``q > B`` is below ``5 (T - T_B)`` with ``T = prod sqrt(p)/(sqrt(p) - 1)``
    the full sum of ``q**-1/2`` and ``T_B`` its part over ``q <= B``. Both are
    evaluated in interval arithmetic and the bound is rounded up.
    """
    eps_f = Fraction(str(eps)) if not isinstance(eps, Fraction) else eps
    if eps_f <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    cap = config.DEFAULT_CAPS.sunit_cap if sunit_cap is None else sunit_cap
    k_f = factorize(k)
    lower, upper = s_bounds(k)
    iv = mpmath.iv
    old = iv.prec
    iv.prec = _IV_PREC
    try:
        t_full = _sqrt_product(k_f.primes)
        t_b = iv.mpf(0)
        total = Fraction(0)
        count = 0
        for q in iter_s_units(k_f.primes):
            count += 1
            if count > cap:
                raise ResourceLimit(
                    f"S-unit cap of {cap} terms reached before the tail bound fell below "
                    f"{eps} (k={k}); raise POWERMAP_SUNIT_CAP / --sunit-cap or loosen eps"
                )
            total += psi_layered(q, k_f) / q
            t_b += 1 / iv.sqrt(iv.mpf(q))
            bound = _frac_of_mpf((5 * (t_full - t_b)).b)
            if bound < eps_f:
                break
    finally:
        iv.prec = old
    err = to_decimal(bound, DEFAULT_PRECISION, round_up=True)
    return LimitReport("SLimit", total, certified_error=err, lower_bound=lower,
                       upper_bound=upper, truncation_bound_B=q, terms=count)


def s_bounds(k: int) -> tuple[Fraction, Decimal]:
    """``(1/k, 5 prod sqrt(p_i)/(sqrt(p_i) - 1))``, the upper bound rounded up."""
    iv = mpmath.iv
    old = iv.prec
    iv.prec = _IV_PREC
    try:
        hi = _frac_of_mpf((5 * _sqrt_product(factorize(k).primes)).b)
    finally:
        iv.prec = old
    return Fraction(1, k), to_decimal(hi, DEFAULT_PRECISION, round_up=True)


def ap_table(k: int, r_max: int, *, bit_cap: int | None = None) -> list[LimitReport]:
    rows = []
    for r in range(1, r_max + 1):
        a = ap_r(k, r, bit_cap=bit_cap)
        rows.append(LimitReport("APr", Fraction(a), r=r))
        rows.append(LimitReport("ACr", Fraction(a, r), r=r))
    return rows
