import math
from decimal import Decimal
from fractions import Fraction

import pytest

from powermap.arith import divisors, factorize, primes_up_to, s_units_ascending, tau
from powermap.asymptotics import (
    LimitReport,
    SweepReport,
    ac_r,
    ap_r,
    ap_table,
    empirical_mean_gcd,
    largest_supported_r,
    psi,
    psi_layered,
    s0_bounds,
    s0_limit,
    s0_limit_report,
    s0_sweep,
    s_bounds,
    s_limit,
    s_partial_sum,
    s_sweep,
)
from powermap.dynamics import PowerMapParams, graph_stats_oracle
from powermap.errors import CapExceeded, NotSUnit, ResourceLimit


@pytest.mark.parametrize("r, expected", [(1, 1), (2, 1), (4, 2)])
def test_ap_r_examples(r, expected):
    assert ap_r(2, r) == expected


def test_ac_r_examples():
    assert ac_r(2, 1) == 1
    assert ac_r(2, 4) == Fraction(1, 2)
    # tau(8) - tau(2) = 4 - 2
    assert ap_r(3, 2) == 2
    assert ac_r(3, 2) == 1


@pytest.mark.parametrize("k", [2, 3])
def test_ap_mobius_round_trip(k):
    for r in range(1, 9):
        assert sum(ap_r(k, d) for d in divisors(r)) == tau(k**r - 1)


def test_ap_r_cap():
    r_max = largest_supported_r(2, bit_cap=40)
    assert r_max == 40
    assert ap_r(2, r_max, bit_cap=40) >= 0
    with pytest.raises(CapExceeded, match=f"largest supported r for k=2 is {r_max}"):
        ap_r(2, r_max + 1, bit_cap=40)
    with pytest.raises(ValueError):
        ap_r(2, 0)


def test_ap_table():
    rows = ap_table(2, 6)
    assert [row.value for row in rows if row.kind == "APr"] == [1, 1, 1, 2, 1, 3]
    assert [row.value for row in rows if row.kind == "ACr"] == [
        Fraction(a, r) for r, a in enumerate([1, 1, 1, 2, 1, 3], 1)
    ]


def test_psi_examples():
    assert psi(1, factorize(2)) == 0
    assert psi(2, factorize(2)) == Fraction(1, 2)
    assert psi(4, factorize(2)) == Fraction(5, 4)
    with pytest.raises(NotSUnit):
        psi(3, factorize(2))


def test_psi_power_of_two_closed_form():
    two = factorize(2)
    for r in range(1, 30):
        assert psi(2**r, two) == r - 1 + Fraction(1, 2**r)


@pytest.mark.parametrize("k", range(2, 31))
def test_psi_bounds(k):
    k_f = factorize(k)
    for q in s_units_ascending(k_f.primes, 10**6):
        val = psi(q, k_f)
        assert val == psi_layered(q, k_f)
        assert 0 <= val <= 3 * sum(factorize(q).exponents)
        if q >= 2:
            assert val < 5 * math.log(q)
            assert val <= 3 / math.log(2) * math.log(q)


@pytest.mark.parametrize("k, m, expected", [(2, 1, Fraction(1, 6)), (6, 1, Fraction(1, 4)), (2, 2, Fraction(1, 9))])
def test_s0_limit_examples(k, m, expected):
    assert s0_limit(k, m) == expected


@pytest.mark.parametrize("k, m, lo, hi", [
    (2, 1, Fraction(1, 8), Fraction(1, 2)),
    (6, 1, Fraction(1, 72), Fraction(3, 2)),
    (2, 2, Fraction(1, 12), Fraction(1, 3)),
])
def test_s0_bounds_examples(k, m, lo, hi):
    assert s0_bounds(k, m) == (lo, hi)


def test_s0_limit_inside_bounds():
    for k in range(2, 31):
        for m in (1, 2, 3):
            lo, hi = s0_bounds(k, m)
            assert lo < s0_limit(k, m) < hi


def test_s0_sweep_small():
    rep = s0_sweep(2, 1, 100, [100])
    ps = primes_up_to(100)
    rho = []
    for p in ps:
        n = p - 1
        while n % 2 == 0:
            n //= 2
        rho.append(n)
    assert rep.final.pi_N == 25
    assert rep.final.partial_average == Fraction(sum(rho), 25)
    assert rep.final.normalized == Fraction(sum(rho), 25 * 100)
    for k in (2, 3, 7):
        assert s0_sweep(k, 1, 2, [2]).final.partial_average == 1


def test_s0_sweep_checks_graph_counts():
    # P(k, p^m) from the closed form equals the enumerated periodic-point count
    rep = s0_sweep(6, 2, 50, [50])
    total = sum(graph_stats_oracle(PowerMapParams(6, p * p)).P_total for p in primes_up_to(50))
    assert rep.final.partial_average == Fraction(total, rep.final.pi_N)


def test_s_sweep_small():
    assert s_sweep(2, 1, 3, [3]).final.partial_average == Fraction(1, 4)
    rep = s_sweep(3, 1, 100, [100])
    total = sum(graph_stats_oracle(PowerMapParams(3, p)).avg_tail for p in primes_up_to(100))
    assert rep.final.partial_average == total / 25
    rep = s_sweep(4, 2, 60, [60])
    total = sum(graph_stats_oracle(PowerMapParams(4, p * p)).avg_tail for p in primes_up_to(60))
    assert rep.final.partial_average == total / rep.final.pi_N


def test_sweep_checkpoints_and_caps():
    rep = s0_sweep(2, 1, 1000)
    assert [c.N for c in rep.checkpoints] == [10, 100, 1000]
    assert [c.pi_N for c in rep.checkpoints] == [4, 25, 168]
    rep = s0_sweep(2, 1, 500, [50, 200])
    assert [c.N for c in rep.checkpoints] == [50, 200, 500]
    with pytest.raises(ValueError):
        s0_sweep(2, 1, 100, [1000])
    with pytest.raises(ResourceLimit):
        s0_sweep(2, 1, 1000, sieve_cap=100)


def test_sweep_workers_deterministic():
    a = s_sweep(6, 1, 20000, [1000, 5000])
    b = s_sweep(6, 1, 20000, [1000, 5000], workers=2)
    assert a == b
    assert s0_sweep(2, 2, 10000, workers=3) == s0_sweep(2, 2, 10000)


def test_empirical_mean_gcd():
    assert empirical_mean_gcd(1, 1, 1000) == 1
    assert abs(empirical_mean_gcd(3, 1, 10**5) - 2) / 2 < 0.05
    assert abs(empirical_mean_gcd(4, 1, 10**5) - 3) / 3 < 0.05


def test_s_partial_sum():
    assert s_partial_sum(2, 1) == 0
    assert s_partial_sum(7, 1) == 0
    # psi(2)/2 + psi(4)/4 = 1/4 + 5/16
    assert s_partial_sum(2, 4) == Fraction(9, 16)


def _series_k2(B):
    # psi(2^r)/2^r with psi(2^r) = r - 1 + 2^-r
    return sum((r - 1 + Fraction(1, 2**r)) / 2**r for r in range(1, B.bit_length()))


def test_s_limit_k2():
    rep = s_limit(2, 1e-6)
    assert abs(rep.value - Fraction(4, 3)) < Fraction(1, 10**6)
    true_err = Fraction(4, 3) - rep.value
    assert 0 < true_err <= Fraction(rep.certified_error)
    assert rep.certified_error < Decimal("1e-6")
    assert rep.value == _series_k2(rep.truncation_bound_B)
    lo, hi = s_bounds(2)
    assert lo < rep.value < hi


def test_s_limit_k4():
    # psi(2^r) = (1/2^r) sum_{i<=r} 2^(i-1) ceil(i/2); the full series sums to 8/9
    rep = s_limit(4, 1e-6)
    true_err = Fraction(8, 9) - rep.value
    assert 0 < true_err <= Fraction(rep.certified_error)


def test_s_limit_monotone_in_eps():
    coarse, fine = s_limit(6, 1e-2), s_limit(6, 1e-4)
    assert coarse.value <= fine.value
    assert fine.truncation_bound_B >= coarse.truncation_bound_B
    assert Fraction(fine.value) + Fraction(fine.certified_error) <= Fraction(coarse.value) + Fraction(coarse.certified_error)


def test_s_limit_errors():
    with pytest.raises(ValueError):
        s_limit(2, 0)
    with pytest.raises(ResourceLimit, match="S-unit cap"):
        s_limit(30, 1e-6, sunit_cap=100)


def test_s_bounds():
    lo, hi = s_bounds(2)
    assert lo == Fraction(1, 2)
    assert Decimal("17.0710678118") < hi <= Decimal("17.0710678119")
    lo, hi = s_bounds(6)
    assert lo == Fraction(1, 6)
    exact = 5 * math.sqrt(6) / ((math.sqrt(2) - 1) * (math.sqrt(3) - 1))
    assert exact <= float(hi) < exact * (1 + 1e-10)


@pytest.mark.parametrize("k", range(2, 31))
def test_s_limit_within_bounds(k):
    rep = s_limit(k, 1e-4)
    lo, hi = s_bounds(k)
    assert lo < rep.value + Fraction(rep.certified_error)
    assert rep.value > lo
    assert rep.value + Fraction(rep.certified_error) < Fraction(hi)


def test_round_trips():
    rep = s0_sweep(3, 2, 1000)
    assert SweepReport.from_dict(rep.to_dict()) == rep
    lim = s_limit(2, 1e-3)
    assert LimitReport.from_dict(lim.to_dict()) == lim
    rep0 = s0_limit_report(6, 1)
    assert LimitReport.from_dict(rep0.to_dict()) == rep0


def test_partial_sums_non_decreasing():
    for k in (2, 6, 12):
        sums = [s_partial_sum(k, B) for B in (1, 2, 10, 100, 1000, 10**4)]
        assert sums == sorted(sums)


def test_sweeps_approach_limits():
    # no monotone trend is guaranteed; the final checkpoint should be the closest
    s0 = s0_sweep(2, 1, 10**6, [10**4, 10**5])
    gaps = [abs(c.normalized - s0_limit(2, 1)) for c in s0.checkpoints]
    assert gaps[-1] == min(gaps)
    s = s_sweep(2, 1, 10**6, [10**4, 10**5])
    gaps = [abs(c.partial_average - Fraction(4, 3)) for c in s.checkpoints]
    assert gaps[-1] == min(gaps)
