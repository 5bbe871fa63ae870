"""Parsing and rendering of exact rationals ("num/den" wire format).

Every probability, statistic value and threshold in this package is an
exact ``fractions.Fraction``; decimal strings are display-only.
"""

from __future__ import annotations

from fractions import Fraction


def parse_rational(value: str | int | Fraction) -> Fraction:
    """Parse a rational from a "num/den" or integer string.

    Floats are rejected on purpose: wire formats must stay exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ValueError(f"refusing float {value!r}: rationals must be exact")
    text = str(value).strip()
    if "." in text or "e" in text.lower():
        raise ValueError(f"refusing decimal literal {text!r}: use num/den")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(value: Fraction | int) -> str:
    """Render as "num/den", denominator always present ("1/2", "3/1")."""
    frac = Fraction(value)
    return f"{frac.numerator}/{frac.denominator}"


def decimal_string(value: Fraction | int, places: int = 6) -> str:
    """Exact fixed-point rendering, round half to even.  Display only."""
    frac = Fraction(value)
    scale = 10**places
    units = round(frac * scale)
    sign = "-" if units < 0 else ""
    units = abs(units)
    return f"{sign}{units // scale}.{units % scale:0{places}d}"
