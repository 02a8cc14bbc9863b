"""JSON/CSV serialization of results.

Exact rationals are written as ``{"exact": "num/den", "decimal": "..."}`` so a
report can be read back without loss; the decimal string is for humans only.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import ROUND_CEILING, ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from importlib import resources

SCHEMA_VERSION = "1.0"
DEFAULT_PRECISION = 12


def to_decimal(x: Fraction | int, precision: int = DEFAULT_PRECISION, *, round_up: bool = False) -> Decimal:
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = precision
        ctx.rounding = ROUND_CEILING if round_up else ROUND_HALF_EVEN
        return Decimal(x.numerator) / Decimal(x.denominator)


def encode_rational(x: Fraction | int, precision: int = DEFAULT_PRECISION) -> dict:
    x = Fraction(x)
    return {"exact": f"{x.numerator}/{x.denominator}", "decimal": str(to_decimal(x, precision))}


def decode_rational(obj) -> Fraction:
    if isinstance(obj, dict):
        obj = obj["exact"]
    if isinstance(obj, int):
        return Fraction(obj)
    return Fraction(obj)


def load_schema() -> dict:
    text = resources.files("powermap").joinpath("report.schema.json").read_text()
    return json.loads(text)


def make_report(command: str, params: dict, results: dict, *, version: str,
                wall_time: float, workers: int) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "results": results,
        "provenance": {
            "tool": "powermap",
            "version": version,
            "wall_time_s": round(wall_time, 6),
            "workers": workers,
        },
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)


CSV_COLUMNS = ("N", "pi_N", "partial_average", "normalized")


def sweep_csv(sweep_dict: dict) -> str:
    """One row per checkpoint; rationals as ``num/den``, blank normalized for non-S0 kinds."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for cp in sweep_dict["checkpoints"]:
        norm = cp.get("normalized")
        writer.writerow([
            cp["N"],
            cp["pi_N"],
            cp["partial_average"]["exact"],
            norm["exact"] if norm else "",
        ])
    return buf.getvalue()
