"""Cycle structure of repeated exponentiation ``x -> x**k`` modulo prime powers."""

__version__ = "0.1.0"

from .errors import CapExceeded, NotCoprime, NotOddPrime, NotSUnit, PowerMapError, ResourceLimit

__all__ = [
    "__version__",
    "CapExceeded",
    "NotCoprime",
    "NotOddPrime",
    "NotSUnit",
    "PowerMapError",
    "ResourceLimit",
]
