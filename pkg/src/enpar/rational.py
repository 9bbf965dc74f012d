"""Parsing and formatting of exact rationals."""

from fractions import Fraction

from enpar.errors import SchemaError


def parse_rational(text):
    """Parse ``"p/q"``, a decimal string, or an int into a Fraction.

    Floats are refused: they cannot be mapped back to the intended value.
    """
    if isinstance(text, bool):
        raise SchemaError(f"not a rational: {text!r}")
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise SchemaError(f"floats are not accepted as rationals: {text!r}; use a string")
    if not isinstance(text, str):
        raise SchemaError(f"not a rational: {text!r}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"not a rational: {text!r}") from exc


def format_rational(q):
    """Canonical ``"p/q"`` in lowest terms (integers too, e.g. ``"1/1"``)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def ceil_div(a, b):
    return -((-a) // b)
