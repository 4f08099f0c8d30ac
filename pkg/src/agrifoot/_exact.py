"""Exact ceilings for quotients of configuration decimals.

Parameters arrive as decimal text (``0.3`` ha/h, ``10`` days).  Their binary
floats are not those decimals, so a farm sitting exactly on a capacity
boundary could gain a spurious extra device.  Near-integer quotients are
therefore re-evaluated on the rationals spelled by the shortest decimal
``repr`` of each float.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

# relative distance to the nearest integer below which the exact path runs
GUARD = 1e-9


@lru_cache(maxsize=65536)
def as_fraction(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def exact_ceil(numerators, denominators=()) -> float:
    """``ceil(prod(numerators) / prod(denominators))`` in rational arithmetic."""
    return _exact_ceil(tuple(map(float, numerators)), tuple(map(float, denominators)))


@lru_cache(maxsize=65536)
def _exact_ceil(numerators, denominators) -> float:
    num = Fraction(1)
    for v in numerators:
        num *= as_fraction(v)
    den = Fraction(1)
    for v in denominators:
        den *= as_fraction(v)
    return float(math.ceil(num / den))


def near_integer(x: float) -> bool:
    return abs(x - round(x)) <= GUARD * max(1.0, abs(x))


def guarded_ceil(x: float, numerators, denominators=()) -> float:
    """``ceil(x)`` where ``x`` approximates the stated quotient."""
    if near_integer(x):
        return exact_ceil(numerators, denominators)
    return float(math.ceil(x))
