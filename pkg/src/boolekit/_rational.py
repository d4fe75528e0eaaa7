"""Small helpers for exact rational arithmetic used across modules."""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import ValidationError


def as_fraction(value) -> Fraction:
    """Convert a number or string to an exact Fraction.

    Floats convert verbatim (the exact binary value), strings accept both
    'p/q' and decimal notation. No rounding happens anywhere.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, (int, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a valid rational: {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"not a finite number: {value!r}")
        return Fraction(value)
    raise ValidationError(f"expected a number, got {type(value).__name__}")


def scale_to_integers(vec, *, allow_sign_flip: bool = False) -> tuple[Fraction, ...]:
    """Scale a rational vector to coprime integers by a positive factor.

    With allow_sign_flip the result is additionally normalized so its first
    nonzero entry is positive (for equations, where both signs mean the same).
    """
    nonzero = [v for v in vec if v != 0]
    if not nonzero:
        return tuple(Fraction(0) for _ in vec)
    denom = math.lcm(*(v.denominator for v in nonzero))
    nums = [v.numerator * (denom // v.denominator) for v in vec]
    g = math.gcd(*(abs(x) for x in nums if x))
    nums = [x // g for x in nums]
    if allow_sign_flip:
        lead = next(x for x in nums if x)
        if lead < 0:
            nums = [-x for x in nums]
    return tuple(Fraction(x) for x in nums)
