"""Error-free transformations on binary64 values.

``two_sum`` and ``two_prod`` return the round-to-nearest result together with
the exact residual, so that ``s + e`` (resp. ``p + e``) equals the real sum
(product) exactly.  ``adjacent`` steps to the neighbouring representable
value and ``residual_sign`` tells on which side of a rounded result the exact
value lies, which is all random rounding needs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

from .errors import EFTError

# 2**27 + 1, Veltkamp splitter for 53-bit significands
_SPLITTER = 134217729.0
# above this magnitude the splitter product overflows
_SPLIT_LIMIT = 2.0 ** 995
# below this magnitude a product residual may fall under the subnormal grid
_PROD_UNDERFLOW = 2.0 ** -969

HAS_FMA = hasattr(math, "fma")


class SumSplit(NamedTuple):
    s: float
    e: float


class ProdSplit(NamedTuple):
    p: float
    e: float


def _check(*xs: float) -> None:
    for x in xs:
        if not math.isfinite(x):
            raise EFTError("invalid-operand", f"non-finite operand {x!r}")


def two_sum(a: float, b: float) -> SumSplit:
    """Knuth's branch-free TwoSum."""
    _check(a, b)
    s = a + b
    if math.isinf(s):
        raise EFTError("eft-overflow", f"{a!r} + {b!r}")
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return SumSplit(s, e)


def split(a: float) -> tuple[float, float]:
    """Veltkamp split of ``a`` into two non-overlapping 26-bit halves."""
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _exact_residual(a: float, b: float, p: float) -> float:
    # slow path: exact rational product, reject residuals that are not floats
    r = Fraction(a) * Fraction(b) - Fraction(p)
    e = float(r)
    if Fraction(e) != r:
        raise EFTError("eft-underflow", f"residual of {a!r} * {b!r} is not representable")
    return e


def two_prod_dekker(a: float, b: float) -> ProdSplit:
    """Dekker's TwoProduct built on Veltkamp splitting."""
    _check(a, b)
    p = a * b
    if math.isinf(p):
        raise EFTError("eft-overflow", f"{a!r} * {b!r}")
    if abs(a) >= _SPLIT_LIMIT or abs(b) >= _SPLIT_LIMIT or (p != 0.0 and abs(p) < _PROD_UNDERFLOW):
        return ProdSplit(p, _exact_residual(a, b, p))
    if p == 0.0:
        if a != 0.0 and b != 0.0:
            raise EFTError("eft-underflow", f"{a!r} * {b!r} underflows to zero")
        return ProdSplit(p, 0.0)
    ah, al = split(a)
    bh, bl = split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return ProdSplit(p, e)


def two_prod_fma(a: float, b: float) -> ProdSplit:
    """TwoProduct through a correctly rounded fused multiply-add."""
    _check(a, b)
    p = a * b
    if math.isinf(p):
        raise EFTError("eft-overflow", f"{a!r} * {b!r}")
    if p != 0.0 and abs(p) < _PROD_UNDERFLOW:
        return ProdSplit(p, _exact_residual(a, b, p))
    if p == 0.0 and a != 0.0 and b != 0.0:
        raise EFTError("eft-underflow", f"{a!r} * {b!r} underflows to zero")
    return ProdSplit(p, math.fma(a, b, -p))


two_prod = two_prod_fma if HAS_FMA else two_prod_dekker


def adjacent(z: float, direction: str) -> float:
    """Next representable binary64 strictly above (``"up"``) or below (``"down"``) ``z``."""
    _check(z)
    if direction == "up":
        r = math.nextafter(z, math.inf)
    elif direction == "down":
        r = math.nextafter(z, -math.inf)
    else:
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    if math.isinf(r):
        raise EFTError("eft-overflow", f"no finite neighbour of {z!r} going {direction}")
    return r


def ulp(x: float) -> float:
    """Spacing between |x| and the next larger representable value."""
    x = abs(x)
    return math.nextafter(x, math.inf) - x


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _exact_sign(exact: Fraction, z: float) -> int:
    d = exact - Fraction(z)
    return (d > 0) - (d < 0)


def residual_sign(op: str, a: float, b: float | None, z: float) -> int:
    """Sign of ``exact(op(a, b)) - z`` for the round-to-nearest result ``z``.

    All operands and ``z`` must be finite.
    """
    if op == "add":
        return _sign(two_sum(a, b).e)
    if op == "sub":
        return _sign(two_sum(a, -b).e)
    if op == "mul":
        return _sign(two_prod(a, b).e)
    if op == "div":
        # a - z*b is representable for a correctly rounded quotient, and
        # a - p is exact by Sterbenz once p is within a factor two of a
        if z == 0.0 or abs(a) < _PROD_UNDERFLOW or abs(z) >= _SPLIT_LIMIT or abs(b) >= _SPLIT_LIMIT:
            return _exact_sign(Fraction(a) / Fraction(b), z)
        p, e = two_prod(z, b)
        return _sign((a - p) - e) * _sign(b)
    if op == "sqrt":
        if z == 0.0 or a < _PROD_UNDERFLOW:
            d = Fraction(a) - Fraction(z) ** 2
            return (d > 0) - (d < 0)
        p, e = two_prod(z, z)
        return _sign((a - p) - e)
    raise ValueError(f"unknown operation {op!r}")
