"""Command-line front end.

Subcommands::

    powermap analyze --k 2 --p 7 --m 1 --cross-check
    powermap analyze --k 2 --M 9 --oracle
    powermap verify  --k 2..12 --max-modulus 20000
    powermap sweep   --kind s0 --k 2 --m 1 --N 1000000 [--format csv]
    powermap sweep   --kind gcd --n 3 --N 100000
    powermap limits  --k 2 --m 1 --eps 1e-6
    powermap schema

The report goes to stdout, progress to stderr. Exit codes: 0 success,
2 invalid arguments, 3 cap or resource limit hit, 4 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from fractions import Fraction

from sympy import factorint, isprime

from . import __version__, config
from .errors import CapExceeded, PowerMapError, ResourceLimit

EXIT_OK, EXIT_ARGS, EXIT_RESOURCE, EXIT_MISMATCH = 0, 2, 3, 4


class ArgumentError(Exception):
    pass


def parse_k_range(text: str) -> list[int]:
    """``"2..12"``, ``"2,3,5"`` or ``"7"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ArgumentError(f"cannot parse k range {text!r}; use e.g. 2..12 or 2,3,5") from None
    if not values:
        raise ArgumentError(f"k range {text!r} is empty")
    if min(values) < 2:
        raise ArgumentError("every k must be >= 2")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _checkpoint_list(text: str) -> list[int]:
    return [_positive_int(t) for t in text.split(",") if t.strip()]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--workers", type=_positive_int, default=1, help="parallel worker processes")
    g.add_argument("--precision", type=_positive_int, default=12,
                   help="significant digits in decimal renderings (default 12)")
    g.add_argument("--factor-bits", type=_positive_int, default=None, help="factorization bit cap")
    g.add_argument("--sieve-cap", type=_positive_int, default=None, help="largest N for the prime sieve")
    g.add_argument("--oracle-cap", type=_positive_int, default=None, help="largest unit group for brute force")
    g.add_argument("--sunit-cap", type=_positive_int, default=None, help="S-unit terms for s_limit")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="powermap",
        description="Cycle structure of x -> x^k on unit groups modulo prime powers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="graph statistics for one (k, modulus)")
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--p", type=int, help="prime of the modulus p^m")
    a.add_argument("--m", type=_positive_int, default=1)
    a.add_argument("--M", type=int, help="general modulus (use with --oracle unless an odd prime power)")
    a.add_argument("--oracle", action="store_true", help="force brute-force enumeration")
    a.add_argument("--cross-check", action="store_true", help="run closed form and oracle and compare")
    a.add_argument("--format", choices=("json", "table"), default="json")

    v = sub.add_parser("verify", parents=[common], help="exhaustive closed-form vs oracle check")
    v.add_argument("--k", required=True, help="k range, e.g. 2..12")
    v.add_argument("--max-modulus", type=int, required=True)
    v.add_argument("--no-per-element", action="store_true", help="skip per-element tail/cycle checks")
    v.add_argument("--identity-r-max", type=int, default=24,
                   help="check divisor-sum identities for r up to this (0 disables)")
    v.add_argument("--format", choices=("json", "table"), default="json")

    s = sub.add_parser("sweep", parents=[common], help="partial averages over primes p <= N")
    s.add_argument("--kind", choices=("s0", "s", "gcd"), required=True)
    s.add_argument("--k", type=int, help="exponent k (kinds s0, s)")
    s.add_argument("--n", type=int, help="gcd argument n (kind gcd)")
    s.add_argument("--m", type=_positive_int, default=1)
    s.add_argument("--N", type=_positive_int, required=True)
    s.add_argument("--checkpoints", type=_checkpoint_list, default=None,
                   help="comma-separated N values (default: powers of 10 and N)")
    s.add_argument("--format", choices=("json", "csv"), default="json")

    li = sub.add_parser("limits", parents=[common], help="exact and certified limit values")
    li.add_argument("--k", type=int, required=True)
    li.add_argument("--m", type=_positive_int, default=1)
    li.add_argument("--eps", type=float, required=True, help="target certified error for the S limit")
    li.add_argument("--r-max", type=_positive_int, default=None,
                    help="AP_r/AC_r table size (default min(12, largest cap-supported r))")
    li.add_argument("--format", choices=("json", "table"), default="json")

    sub.add_parser("schema", help="print the JSON schema for reports")
    return parser


def _caps(args) -> config.Caps:
    caps = config.Caps.from_env()
    overrides = {
        name: getattr(args, name)
        for name in ("factor_bits", "sieve_cap", "oracle_cap", "sunit_cap")
        if getattr(args, name, None) is not None
    }
    return replace(caps, **overrides)


def _install_caps(caps: config.Caps) -> None:
    # library code reads config.DEFAULT_CAPS at call time
    config.DEFAULT_CAPS = caps


def _progress(done: int, total: int, modulus: int) -> None:
    if done == total or done % 100 == 0:
        print(f"verify: {done}/{total} moduli (last {modulus})", file=sys.stderr, flush=True)


def _odd_prime_power(M: int) -> tuple[int, int] | None:
    if M < 3:
        return None
    f = factorint(M)
    if len(f) == 1:
        (p, m), = f.items()
        if p != 2:
            return p, m
    return None


def cmd_analyze(args):
    from .closed_form import graph_stats_closed, prime_power_context
    from .dynamics import PowerMapParams, graph_stats_oracle

    if args.k < 2:
        raise ArgumentError("--k must be >= 2")
    if (args.p is None) == (args.M is None):
        raise ArgumentError("give exactly one of --p/--m or --M")
    if args.p is not None:
        if not isprime(args.p):
            raise ArgumentError(f"--p {args.p} is not a prime")
        M = args.p**args.m
        pm = (args.p, args.m) if args.p != 2 else None
        params = {"k": args.k, "modulus": M, "p": args.p, "m": args.m}
    else:
        if args.M < 2:
            raise ArgumentError("--M must be >= 2")
        M, pm = args.M, _odd_prime_power(args.M)
        params = {"k": args.k, "modulus": M, "p": pm[0] if pm else None, "m": pm[1] if pm else None}

    use_oracle = args.oracle
    if not use_oracle and pm is None:
        raise ArgumentError(
            f"closed forms need an odd prime power modulus; {M} is not one. "
            "Re-run with --oracle to enumerate the unit group directly."
        )
    results = {}
    if use_oracle:
        oracle = graph_stats_oracle(PowerMapParams(args.k, M))
        results["method"] = "oracle"
        results["stats"] = oracle.to_dict()
    else:
        closed = graph_stats_closed(prime_power_context(args.k, *pm))
        results["method"] = "closed_form"
        results["stats"] = closed.to_dict()
    verdict = None
    if args.cross_check:
        if pm is None:
            raise ArgumentError("--cross-check needs an odd prime power modulus")
        closed = graph_stats_closed(prime_power_context(args.k, *pm))
        oracle = graph_stats_oracle(PowerMapParams(args.k, M))
        fields = closed.diff(oracle)
        verdict = not fields
        results["cross_check"] = {
            "match": verdict,
            "mismatched_fields": fields,
            "closed_form": closed.to_dict(),
            "oracle": oracle.to_dict(),
        }
    return params, results, (EXIT_OK if verdict in (None, True) else EXIT_MISMATCH)


def cmd_verify(args):
    from .verify import verify_grid

    ks = parse_k_range(args.k)
    if args.max_modulus < 3:
        raise ArgumentError(f"--max-modulus {args.max_modulus} leaves no odd prime powers to check")
    res = verify_grid(ks, args.max_modulus, workers=args.workers,
                      per_element=not args.no_per_element,
                      identity_r_max=args.identity_r_max, progress=_progress)
    params = {"k_range": [ks[0], ks[-1]] if ks == list(range(ks[0], ks[-1] + 1)) else ks,
              "max_modulus": args.max_modulus}
    return params, res.to_dict(), EXIT_OK if res.passed else EXIT_MISMATCH


def cmd_sweep(args):
    from .asymptotics import gcd_sweep, s0_sweep, s_sweep

    kw = {"workers": args.workers}
    if args.N < 2:
        raise ArgumentError("--N must be >= 2")
    if args.kind == "gcd":
        if args.n is None or args.n < 1:
            raise ArgumentError("--kind gcd needs --n >= 1")
        rep = gcd_sweep(args.n, args.m, args.N, args.checkpoints, **kw)
    else:
        if args.k is None or args.k < 2:
            raise ArgumentError(f"--kind {args.kind} needs --k >= 2")
        fn = s0_sweep if args.kind == "s0" else s_sweep
        rep = fn(args.k, args.m, args.N, args.checkpoints, **kw)
    params = {"kind": args.kind, "k": args.k, "n": args.n, "m": args.m, "N": args.N,
              "checkpoints": [c.N for c in rep.checkpoints]}
    return params, rep.to_dict(args.precision), EXIT_OK


def cmd_limits(args):
    from .asymptotics import ap_table, largest_supported_r, s0_limit_report, s_limit

    if args.k < 2:
        raise ArgumentError("--k must be >= 2")
    if not args.eps > 0:
        raise ArgumentError("--eps must be positive")
    caps = config.DEFAULT_CAPS
    r_top = largest_supported_r(args.k, caps.factor_bits)
    r_max = min(12, r_top) if args.r_max is None else args.r_max
    if r_max > r_top:
        raise CapExceeded(
            f"--r-max {r_max} needs factoring {args.k}^{r_max} - 1, beyond the "
            f"{caps.factor_bits}-bit cap; the largest supported r for k={args.k} is {r_top}"
        )
    s0 = s0_limit_report(args.k, args.m)
    s = s_limit(args.k, Fraction(repr(args.eps)))
    rows = ap_table(args.k, r_max)
    table = [
        {"r": ap.r, "AP": ap.to_dict(args.precision)["value"], "AC": ac.to_dict(args.precision)["value"]}
        for ap, ac in zip(rows[::2], rows[1::2])
    ]
    params = {"k": args.k, "m": args.m, "eps": args.eps, "r_max": r_max}
    results = {
        "s0_limit": s0.to_dict(args.precision),
        "s_limit": s.to_dict(args.precision),
        "ap_table": table,
        "largest_supported_r": r_top,
    }
    return params, results, EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "sweep": cmd_sweep, "limits": cmd_limits}


def _render_table(command: str, results: dict) -> str:
    lines = []
    if command == "analyze":
        st = results["stats"]
        lines.append(f"method            {results['method']}")
        lines.append(f"units             {st['unit_count']}")
        lines.append(f"periodic points   {st['P_total']}")
        lines.append(f"cycles            {st['C_total']}")
        lines.append(f"avg cycle length  {st['avg_cycle_length']['exact']}  (~{st['avg_cycle_length']['decimal']})")
        lines.append(f"avg tail          {st['avg_tail']['exact']}  (~{st['avg_tail']['decimal']})")
        lines.append("   r     P_r     C_r")
        for r, pr in st["P_by_period"].items():
            lines.append(f"{r:>4} {pr:>7} {st['C_by_length'][r]:>7}")
        if "cross_check" in results:
            cc = results["cross_check"]
            lines.append("cross-check       " + ("match" if cc["match"] else f"MISMATCH {cc['mismatched_fields']}"))
    elif command == "verify":
        lines.append(f"moduli {results['moduli_checked']}, cases {results['cases_checked']}, "
                     f"units {results['units_checked']}: {'PASS' if results['passed'] else 'FAIL'}")
        if results["mismatch"]:
            lines.append(f"first mismatch: {results['mismatch']}")
    elif command == "limits":
        s0, s = results["s0_limit"], results["s_limit"]
        lines.append(f"S0 limit  {s0['value']['exact']}  bounds ({s0['lower_bound']['exact']}, {s0['upper_bound']['exact']})")
        lines.append(f"S limit   {s['value']['decimal']} +/- {s['certified_error']}  "
                     f"bounds ({s['lower_bound']['exact']}, {s['upper_bound']['decimal']})  B={s['truncation_bound_B']}")
        lines.append("   r        AP_r        AC_r")
        for row in results["ap_table"]:
            lines.append(f"{row['r']:>4} {row['AP']['exact']:>11} {row['AC']['exact']:>11}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "schema":
        from .report import load_schema

        print(json.dumps(load_schema(), indent=2))
        return EXIT_OK
    try:
        caps = _caps(args)
    except ValueError as exc:
        print(f"powermap: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    _install_caps(caps)
    start = time.perf_counter()
    try:
        params, results, code = COMMANDS[args.command](args)
    except (ArgumentError, ValueError) as exc:
        print(f"powermap: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (CapExceeded, ResourceLimit) as exc:
        print(f"powermap: limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except PowerMapError as exc:
        print(f"powermap: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    params["caps"] = caps.as_dict()
    from .report import dumps, make_report, sweep_csv

    fmt = getattr(args, "format", "json")
    if fmt == "csv":
        sys.stdout.write(sweep_csv(results))
    elif fmt == "table":
        sys.stdout.write(_render_table(args.command, results))
    else:
        report = make_report(args.command, params, results, version=__version__,
                             wall_time=time.perf_counter() - start, workers=args.workers)
        sys.stdout.write(dumps(report) + "\n")
    if code == EXIT_MISMATCH:
        print("powermap: verification mismatch", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
