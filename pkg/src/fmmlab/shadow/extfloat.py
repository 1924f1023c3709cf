"""Software binary floating point with a configurable mantissa width.

A value is ``man * 2**exp`` with a signed integer mantissa of at most
``prec`` significant bits and an unbounded exponent.  Every operation is
correctly rounded at the requested precision in one of three modes:
nearest-even (``RN``), toward +inf (``RU``) or toward -inf (``RD``).

The ``*_x`` variants also report whether rounding was inexact; the rounding
error of an inexact nearest result ``r`` is then at most ``half_ulp(r)``.
"""

from __future__ import annotations

import math
from fractions import Fraction

RN, RU, RD = 0, 1, 2

DEFAULT_PREC = 319


class ExtFloat:
    __slots__ = ("man", "exp")

    def __init__(self, man: int, exp: int = 0):
        self.man = man
        self.exp = exp

    @classmethod
    def from_float(cls, x: float) -> ExtFloat:
        if not math.isfinite(x):
            raise ValueError(f"cannot convert {x!r} to ExtFloat")
        n, d = float(x).as_integer_ratio()
        return cls(n, 1 - d.bit_length())

    @classmethod
    def from_int(cls, n: int) -> ExtFloat:
        return cls(n, 0)

    def to_fraction(self) -> Fraction:
        if self.exp >= 0:
            return Fraction(self.man << self.exp)
        return Fraction(self.man, 1 << -self.exp)

    def to_float(self, rnd: int = RN) -> float:
        m, e = self.man, self.exp
        if m == 0:
            return 0.0
        try:
            f = float(m << e) if e >= 0 else m / (1 << -e)
        except OverflowError:
            f = math.copysign(math.inf, m)
        if rnd != RN and math.isfinite(f):
            c = cmp(ExtFloat.from_float(f), self)
            if rnd == RU and c < 0:
                f = math.nextafter(f, math.inf)
            elif rnd == RD and c > 0:
                f = math.nextafter(f, -math.inf)
        return f

    __float__ = to_float

    def is_zero(self) -> bool:
        return self.man == 0

    def sign(self) -> int:
        return (self.man > 0) - (self.man < 0)

    def top(self) -> int:
        """Exponent just above the leading bit (``|x| < 2**top``)."""
        return self.exp + abs(self.man).bit_length()

    def __neg__(self) -> ExtFloat:
        return ExtFloat(-self.man, self.exp)

    def __abs__(self) -> ExtFloat:
        return self if self.man >= 0 else ExtFloat(-self.man, self.exp)

    def __eq__(self, other):
        if isinstance(other, (int, float)):
            other = ExtFloat.from_float(float(other))
        if not isinstance(other, ExtFloat):
            return NotImplemented
        return cmp(self, other) == 0

    def __lt__(self, other):
        return cmp(self, other) < 0

    def __le__(self, other):
        return cmp(self, other) <= 0

    def __gt__(self, other):
        return cmp(self, other) > 0

    def __ge__(self, other):
        return cmp(self, other) >= 0

    def __hash__(self):
        return hash(self.to_fraction())

    def __repr__(self):
        return f"ExtFloat({self.to_float()!r})"


ZERO = ExtFloat(0, 0)
ONE = ExtFloat(1, 0)


def half_ulp(x: ExtFloat) -> ExtFloat:
    """Bound on the rounding error of an inexact nearest result ``x``."""
    return ExtFloat(1, x.exp - 1)


def _round(man: int, exp: int, prec: int, rnd: int) -> tuple[ExtFloat, bool]:
    if man == 0:
        return ZERO, False
    neg = man < 0
    m = -man if neg else man
    sh = m.bit_length() - prec
    if sh <= 0:
        return ExtFloat(man, exp), False
    q = m >> sh
    r = m - (q << sh)
    if r == 0:
        return ExtFloat(-q if neg else q, exp + sh), False
    if rnd == RN:
        half = 1 << (sh - 1)
        up = r > half or (r == half and (q & 1))
    elif rnd == RU:
        up = not neg
    else:
        up = neg
    if up:
        q += 1
        if q.bit_length() > prec:
            q >>= 1
            sh += 1
    return ExtFloat(-q if neg else q, exp + sh), True


def round_to(x: ExtFloat, prec: int, rnd: int = RN) -> ExtFloat:
    return _round(x.man, x.exp, prec, rnd)[0]


def _align_sum(a: ExtFloat, b: ExtFloat, prec: int) -> tuple[int, int]:
    # exact integer sum, or a sticky stand-in when one operand is negligible
    am, ae, bm, be = a.man, a.exp, b.man, b.exp
    ta = ae + abs(am).bit_length()
    tb = be + abs(bm).bit_length()
    if ta - tb > prec + 3:
        bm, be = (1 if bm > 0 else -1), ta - prec - 4
    elif tb - ta > prec + 3:
        am, ae = (1 if am > 0 else -1), tb - prec - 4
    if ae >= be:
        return (am << (ae - be)) + bm, be
    return am + (bm << (be - ae)), ae


def add_x(a: ExtFloat, b: ExtFloat, prec: int, rnd: int = RN) -> tuple[ExtFloat, bool]:
    if a.man == 0:
        return _round(b.man, b.exp, prec, rnd)
    if b.man == 0:
        return _round(a.man, a.exp, prec, rnd)
    m, e = _align_sum(a, b, prec)
    return _round(m, e, prec, rnd)


def sub_x(a: ExtFloat, b: ExtFloat, prec: int, rnd: int = RN) -> tuple[ExtFloat, bool]:
    return add_x(a, ExtFloat(-b.man, b.exp), prec, rnd)


def mul_x(a: ExtFloat, b: ExtFloat, prec: int, rnd: int = RN) -> tuple[ExtFloat, bool]:
    return _round(a.man * b.man, a.exp + b.exp, prec, rnd)


def div_x(a: ExtFloat, b: ExtFloat, prec: int, rnd: int = RN) -> tuple[ExtFloat, bool]:
    if b.man == 0:
        raise ZeroDivisionError("ExtFloat division by zero")
    if a.man == 0:
        return ZERO, False
    ma, mb = abs(a.man), abs(b.man)
    k = max(0, prec + 3 + mb.bit_length() - ma.bit_length())
    q, r = divmod(ma << k, mb)
    m = (q << 1) | (1 if r else 0)
    if (a.man < 0) != (b.man < 0):
        m = -m
    return _round(m, a.exp - b.exp - k - 1, prec, rnd)


def sqrt_x(a: ExtFloat, prec: int, rnd: int = RN) -> tuple[ExtFloat, bool]:
    if a.man < 0:
        raise ValueError("ExtFloat sqrt of a negative value")
    if a.man == 0:
        return ZERO, False
    m, e = a.man, a.exp
    s = max(0, 2 * (prec + 3) - m.bit_length())
    if (e - s) % 2:
        s += 1
    big = m << s
    r = math.isqrt(big)
    sticky = 1 if r * r != big else 0
    return _round((r << 1) | sticky, (e - s) // 2 - 1, prec, rnd)


def add(a, b, prec, rnd=RN):
    return add_x(a, b, prec, rnd)[0]


def sub(a, b, prec, rnd=RN):
    return sub_x(a, b, prec, rnd)[0]


def mul(a, b, prec, rnd=RN):
    return mul_x(a, b, prec, rnd)[0]


def div(a, b, prec, rnd=RN):
    return div_x(a, b, prec, rnd)[0]


def sqrt(a, prec, rnd=RN):
    return sqrt_x(a, prec, rnd)[0]


def cmp(a: ExtFloat, b: ExtFloat) -> int:
    """Exact three-way comparison."""
    sa = (a.man > 0) - (a.man < 0)
    sb = (b.man > 0) - (b.man < 0)
    if sa != sb:
        return (sa > sb) - (sa < sb)
    if sa == 0:
        return 0
    ta = a.exp + abs(a.man).bit_length()
    tb = b.exp + abs(b.man).bit_length()
    if ta != tb:
        return sa if ta > tb else -sa
    if a.exp >= b.exp:
        d = (a.man << (a.exp - b.exp)) - b.man
    else:
        d = a.man - (b.man << (b.exp - a.exp))
    return (d > 0) - (d < 0)


def floor_int(a: ExtFloat) -> int:
    if a.exp >= 0:
        return a.man << a.exp
    return a.man >> -a.exp


def trunc_int(a: ExtFloat) -> int:
    if a.man >= 0:
        return floor_int(a)
    return -floor_int(-a)
