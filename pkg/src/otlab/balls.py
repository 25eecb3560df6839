"""Small helpers around python-flint's arb/acb ball arithmetic."""

from __future__ import annotations

import os
from contextlib import contextmanager
from decimal import Decimal, ROUND_CEILING, localcontext
from fractions import Fraction

from flint import acb, arb, ctx, fmpq

DEFAULT_PRECISION = 256
GUARD_BITS = 64


class InconclusiveError(RuntimeError):
    """A certified decision could not be reached below the precision cap."""

    def __init__(self, message: str, precision: int | None = None):
        super().__init__(message)
        self.precision = precision


def precision_cap() -> int:
    return int(os.environ.get("OTLAB_PRECISION_CAP", "16384"))


@contextmanager
def working_precision(bits: int):
    old = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = old


def to_arb(q) -> arb:
    if isinstance(q, Fraction):
        return arb(fmpq(q.numerator, q.denominator))
    return arb(q)


def arb_to_fraction(x: arb) -> Fraction:
    """Exact value of the midpoint of a ball."""
    m, e = x.mid().man_exp()
    m, e = int(m), int(e)
    return Fraction(m * 2 ** e) if e >= 0 else Fraction(m, 2 ** -e)


def width(z) -> arb:
    """Upper bound on the radius of an arb or acb ball (as an arb)."""
    if isinstance(z, acb):
        return z.real.rad() + z.imag.rad()
    return z.rad()


def upper(x: arb) -> Fraction:
    return arb_to_fraction(x.upper())


def lower(x: arb) -> Fraction:
    return arb_to_fraction(x.lower())


def log2_upper(x: arb) -> float:
    """Crude float upper bound for log2 of a nonnegative ball's upper end."""
    u = upper(x)
    if u <= 0:
        return float("-inf")
    return (u.numerator.bit_length() - u.denominator.bit_length()) + 1


def excludes_zero(z) -> bool:
    if isinstance(z, acb):
        return not (z.real.contains(0) and z.imag.contains(0))
    return not z.contains(0)


def overlaps(x, y) -> bool:
    if isinstance(x, acb) or isinstance(y, acb):
        x, y = acb(x), acb(y)
        return x.real.overlaps(y.real) and x.imag.overlaps(y.imag)
    return x.overlaps(y)


def _round_up(value: Fraction, digits: int = 3) -> str:
    with localcontext() as dctx:
        dctx.prec = digits
        dctx.rounding = ROUND_CEILING
        d = +(Decimal(value.numerator) / Decimal(value.denominator))
    return f"{d:.{digits - 1}e}"


def decimal_string(x: arb, digits: int = 30) -> dict:
    """Render a ball as {"value": decimal string, "error": rigorous bound}."""
    if not x.is_finite():
        raise ValueError("cannot render a non-finite ball")
    mid = arb_to_fraction(x)
    with localcontext() as dctx:
        dctx.prec = digits
        dec = +(Decimal(mid.numerator) / Decimal(mid.denominator))
    text = format(dec, f".{digits - 1}e") if dec != 0 else "0"
    printed = Fraction(dec) if dec != 0 else Fraction(0)
    err = abs(mid - printed) + arb_to_fraction(x.rad())
    if err == 0:
        return {"value": text, "error": "0"}
    return {"value": text, "error": _round_up(Fraction(err))}


def complex_string(z: acb, digits: int = 30) -> dict:
    return {"re": decimal_string(z.real, digits), "im": decimal_string(z.imag, digits)}
