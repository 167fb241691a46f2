"""Fixed-point decimal arithmetic for everything that touches money or rates.

All state-carried decimals are quantized at a fixed exponent before they are
stored, serialized or hashed: money at 4 fractional digits, unit-scale rates
(impacts, sentiments, gaps) at 6, decay factors at 12. Quantization always
rounds half-to-even inside an explicit context so results do not depend on
the ambient thread context or the platform's libm.
"""

from __future__ import annotations

from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_EVEN, Context, Decimal, localcontext

MONEY_EXP = Decimal("0.0001")
RATE_EXP = Decimal("0.000001")
DECAY_EXP = Decimal("0.000000000001")

# prec 28 matches CPython's default but is pinned so a tampered ambient
# context cannot change engine arithmetic.
CTX = Context(prec=28, rounding=ROUND_HALF_EVEN)

ZERO = Decimal(0)
ONE = Decimal(1)


def money(value: Decimal | int | str) -> Decimal:
    """Quantize to 4 fractional digits, normalizing -0.0000 to 0.0000."""
    with localcontext(CTX):
        q = Decimal(value).quantize(MONEY_EXP)
    return abs(q) if q == 0 else q


def rate(value: Decimal | int | str) -> Decimal:
    """Quantize a unit-scale rate to 6 fractional digits."""
    with localcontext(CTX):
        q = Decimal(value).quantize(RATE_EXP)
    return abs(q) if q == 0 else q


def clamp(value: Decimal, lo: Decimal, hi: Decimal) -> Decimal:
    return lo if value < lo else hi if value > hi else value


def decay_factor(elapsed: int, half_life: int) -> Decimal:
    """2^(-elapsed/half_life), quantized to 12 digits.

    Computed with libmpdec (pure software decimal), so the value is identical
    on every platform; the final quantization absorbs any last-ulp wiggle
    between library versions.
    """
    if elapsed < 0:
        raise ValueError("elapsed must be >= 0")
    if half_life < 1:
        raise ValueError("half_life must be >= 1")
    with localcontext(Context(prec=34, rounding=ROUND_HALF_EVEN)):
        exponent = -Decimal(elapsed) / Decimal(half_life)
        q = (Decimal(2) ** exponent).quantize(DECAY_EXP)
    return q


def mul(*factors: Decimal) -> Decimal:
    with localcontext(CTX):
        out = ONE
        for f in factors:
            out *= f
        return +out


def div(a: Decimal, b: Decimal) -> Decimal:
    with localcontext(CTX):
        return +(a / b)


def ceil_int(value: Decimal) -> int:
    return int(value.to_integral_value(rounding=ROUND_CEILING))


def floor_int(value: Decimal) -> int:
    return int(value.to_integral_value(rounding=ROUND_FLOOR))
