"""Resource caps.

Defaults can be overridden through environment variables so that CLI runs stay
self-describing (no config files)::

    POWERMAP_FACTOR_BITS   bit-length cap for factorize          (default 128)
    POWERMAP_SIEVE_CAP     largest N accepted by the prime sieve  (default 10**8)
    POWERMAP_ORACLE_CAP    largest unit-group size for brute force (default 10**7)
    POWERMAP_SUNIT_CAP     number of S-units enumerated by s_limit (default 10**6)
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass

ENV_VARS = {
    "factor_bits": "POWERMAP_FACTOR_BITS",
    "sieve_cap": "POWERMAP_SIEVE_CAP",
    "oracle_cap": "POWERMAP_ORACLE_CAP",
    "sunit_cap": "POWERMAP_SUNIT_CAP",
}


@dataclass(frozen=True)
class Caps:
    factor_bits: int = 128
    sieve_cap: int = 10**8
    oracle_cap: int = 10**7
    sunit_cap: int = 10**6

    @classmethod
    def from_env(cls, environ=None) -> "Caps":
        environ = os.environ if environ is None else environ
        values = {}
        for field, var in ENV_VARS.items():
            raw = environ.get(var)
            if raw is None or raw == "":
                continue
            try:
                value = int(float(raw)) if "e" in raw.lower() else int(raw)
            except ValueError:
                raise ValueError(f"{var} must be an integer, got {raw!r}") from None
            if value < 1:
                raise ValueError(f"{var} must be positive, got {value}")
            values[field] = value
        return cls(**values)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_CAPS = Caps.from_env()
