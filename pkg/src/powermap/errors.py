"""Exception types shared across the package."""


class PowerMapError(Exception):
    """Base class for all errors raised by powermap."""


class CapExceeded(PowerMapError):
    """An integer is too large for the configured factorization bit cap."""


class ResourceLimit(PowerMapError):
    """A sieve, oracle or S-unit enumeration would exceed its configured cap."""


class NotCoprime(PowerMapError, ValueError):
    pass


class NotOddPrime(PowerMapError, ValueError):
    pass


class NotSUnit(PowerMapError, ValueError):
    pass
