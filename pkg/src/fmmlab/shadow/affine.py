"""Affine arithmetic with extended-precision coefficients.

A form ``c + sum(a_i * e_i)`` with every noise symbol ``e_i`` in ``[-1, 1]``.
Coefficients are :class:`ExtFloat` values rounded to the context precision;
the rounding residue of each operation is bounded and folded into one fresh
symbol, so the concretisation of a result always contains the exact real
result for every joint assignment of the operands' symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .extfloat import (DEFAULT_PREC, RD, RN, RU, ZERO, ExtFloat, add_x, cmp,
                       div_x, half_ulp, mul_x, round_to, sqrt_x)

DEFAULT_BUDGET = 30


class Top:
    """The unbounded form ``[-inf, +inf]``; absorbs every operation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TOP"


TOP = Top()


@dataclass
class AffineContext:
    """Precision, symbol budget, fresh-symbol pool and event log of one run."""

    prec: int = DEFAULT_PREC
    budget: int = DEFAULT_BUDGET
    next_symbol: int = 1
    events: list = field(default_factory=list)

    def fresh(self) -> int:
        s = self.next_symbol
        self.next_symbol += 1
        return s

    def log(self, event: str) -> None:
        self.events.append(event)


class AffineForm:
    __slots__ = ("center", "terms", "_iv", "_rad")

    def __init__(self, center: ExtFloat, terms: dict | None = None):
        self.center = center
        self.terms = terms if terms is not None else {}
        self._iv = None
        self._rad = None

    @classmethod
    def constant(cls, x: float) -> AffineForm:
        return cls(ExtFloat.from_float(x))

    def is_constant(self) -> bool:
        return not self.terms

    def radius(self) -> ExtFloat:
        """Upper bound on ``sum(|a_i|)``, rounded up at a generous width."""
        r = self._rad
        if r is None:
            r = self._rad = _abs_sum(self.terms.values())
        return r

    def interval(self) -> tuple[ExtFloat, ExtFloat]:
        """Outward-rounded concretisation ``[lo, hi]``."""
        iv = self._iv
        if iv is None:
            c = self.center
            if not self.terms:
                iv = (c, c)
            else:
                r = self.radius()
                iv = (add_x(c, -r, _WIDE, RD)[0], add_x(c, r, _WIDE, RU)[0])
            self._iv = iv
        return iv

    def float_interval(self) -> tuple[float, float]:
        lo, hi = self.interval()
        return lo.to_float(RD), hi.to_float(RU)

    def __repr__(self):
        lo, hi = self.float_interval()
        return f"AffineForm({self.center.to_float()!r}, {len(self.terms)} terms, [{lo!r}, {hi!r}])"


# radius sums are exact up to this many bits, then rounded up
_WIDE = 2048


def _abs_sum(values) -> ExtFloat:
    # exact integer sum at the smallest exponent, one upward rounding
    vals = [(abs(v.man), v.exp) for v in values if v.man]
    if not vals:
        return ZERO
    emin = min(e for _, e in vals)
    total = sum(m << (e - emin) for m, e in vals)
    return round_to(ExtFloat(total, emin), _WIDE, RU)


class _Noise:
    """Exact running sum of half-ulp rounding residues (powers of two)."""

    __slots__ = ("exps", "extra")

    def __init__(self):
        self.exps = []
        self.extra = []

    def add_half_ulp(self, r: ExtFloat) -> None:
        self.exps.append(r.exp - 1)

    def add(self, v: ExtFloat) -> None:
        self.extra.append(v)

    def total(self):
        vals = [ExtFloat(1, e) for e in self.exps] + self.extra
        if not vals:
            return None
        return _abs_sum(vals)


def _magnitude_key(prec):
    width = prec + 8

    def key(item):
        sym, v = item
        m = abs(v.man)
        bl = m.bit_length()
        if bl == 0:
            return (-(1 << 62), 0, sym)
        return (v.exp + bl, m << max(0, width - bl), sym)
    return key


def condense(a, budget: int, ctx: AffineContext):
    """Merge the smallest terms into one fresh symbol until ``budget`` holds."""
    if a is TOP or len(a.terms) <= budget:
        return a
    items = list(a.terms.items())
    n_merge = len(items) - budget + 1
    ordered = sorted(items, key=_magnitude_key(ctx.prec))
    merged = {sym for sym, _ in ordered[:n_merge]}
    coef = _abs_sum(v for _, v in ordered[:n_merge])
    coef = round_to(coef, ctx.prec, RU)
    terms = {s: v for s, v in items if s not in merged}
    terms[ctx.fresh()] = coef
    return AffineForm(a.center, terms)


def _finish(center, terms, noise, ctx: AffineContext):
    if isinstance(noise, _Noise):
        noise = noise.total()
    if noise is not None and noise.man != 0:
        terms[ctx.fresh()] = round_to(noise, ctx.prec, RU)
    form = AffineForm(center, terms)
    if len(terms) > ctx.budget:
        form = condense(form, ctx.budget, ctx)
    return form


def affine_add(a, b, ctx: AffineContext, negate_b: bool = False):
    if a is TOP or b is TOP:
        return TOP
    prec = ctx.prec
    bc = b.center
    if negate_b:
        bc = ExtFloat(-bc.man, bc.exp)
    center, inex = add_x(a.center, bc, prec, RN)
    noise = _Noise()
    if inex:
        noise.add_half_ulp(center)
    terms = dict(a.terms)
    bt = b.terms
    for sym, v in bt.items():
        if negate_b:
            v = ExtFloat(-v.man, v.exp)
        u = terms.get(sym)
        if u is None:
            terms[sym] = v
        else:
            s, inex = add_x(u, v, prec, RN)
            if inex:
                noise.add_half_ulp(s)
            if s.man == 0:
                del terms[sym]
            else:
                terms[sym] = s
    return _finish(center, terms, noise, ctx)


def affine_sub(a, b, ctx: AffineContext):
    return affine_add(a, b, ctx, negate_b=True)


def affine_neg(a):
    if a is TOP:
        return TOP
    return AffineForm(ExtFloat(-a.center.man, a.center.exp),
                      {s: ExtFloat(-v.man, v.exp) for s, v in a.terms.items()})


def affine_mul(a, b, ctx: AffineContext):
    if a is TOP or b is TOP:
        return TOP
    prec = ctx.prec
    a0, b0 = a.center, b.center
    center, inex = mul_x(a0, b0, prec, RN)
    noise = _Noise()
    if inex:
        noise.add_half_ulp(center)
    terms = {}
    at, bt = a.terms, b.terms
    for sym, v in at.items():
        p, inex = mul_x(b0, v, prec, RN)
        if inex:
            noise.add_half_ulp(p)
        w = bt.get(sym)
        if w is not None:
            q, inex = mul_x(a0, w, prec, RN)
            if inex:
                noise.add_half_ulp(q)
            p, inex = add_x(p, q, prec, RN)
            if inex:
                noise.add_half_ulp(p)
        if p.man != 0:
            terms[sym] = p
    for sym, w in bt.items():
        if sym in at:
            continue
        q, inex = mul_x(a0, w, prec, RN)
        if inex:
            noise.add_half_ulp(q)
        if q.man != 0:
            terms[sym] = q
    if at and bt:
        noise.add(mul_x(a.radius(), b.radius(), _WIDE, RU)[0])
    return _finish(center, terms, noise, ctx)


def affine_div_const(a, b: ExtFloat, ctx: AffineContext):
    """Divide a form by a nonzero exact constant."""
    if a is TOP:
        return TOP
    prec = ctx.prec
    center, inex = div_x(a.center, b, prec, RN)
    noise = _Noise()
    if inex:
        noise.add_half_ulp(center)
    terms = {}
    for sym, v in a.terms.items():
        q, inex = div_x(v, b, prec, RN)
        if inex:
            noise.add_half_ulp(q)
        if q.man != 0:
            terms[sym] = q
    return _finish(center, terms, noise, ctx)


def affine_binary(op: str, a, b, ctx: AffineContext):
    if op == "add":
        return affine_add(a, b, ctx)
    if op == "sub":
        return affine_sub(a, b, ctx)
    if op == "mul":
        return affine_mul(a, b, ctx)
    if op == "div":
        if a is TOP or b is TOP:
            return TOP
        if b.is_constant():
            if b.center.man == 0:
                ctx.log("division-by-zero")
                return TOP
            return affine_div_const(a, b.center, ctx)
        return affine_mul(a, affine_unary("div_inverse", b, ctx), ctx)
    raise ValueError(f"unknown operation {op!r}")


def _wp(ctx):
    return ctx.prec + 64


def _linearize(a, lam: ExtFloat, g_values, convex: bool, scale: ExtFloat, ctx: AffineContext):
    """Return ``lam * a + mu + delta * e_new`` enclosing ``f`` over ``a``'s range.

    ``g_values`` are ``f(x) - lam * x`` at the interval ends plus the
    stationary value, evaluated at working precision; ``scale`` bounds the
    magnitudes involved, for the evaluation error margin.
    """
    wp = _wp(ctx)
    prec = ctx.prec
    g_lo, g_hi, stationary = g_values
    lo_g, hi_g = (g_lo, g_hi) if cmp(g_lo, g_hi) <= 0 else (g_hi, g_lo)
    if stationary is not None:
        if convex and cmp(stationary, lo_g) < 0:
            lo_g = stationary
        elif not convex and cmp(stationary, hi_g) > 0:
            hi_g = stationary
    mu = add_x(lo_g, hi_g, wp, RN)[0]
    mu = ExtFloat(mu.man, mu.exp - 1)
    mu = round_to(mu, prec, RN)
    d1 = add_x(hi_g, -mu, _WIDE, RU)[0]
    d2 = add_x(mu, -lo_g, _WIDE, RU)[0]
    delta = d1 if cmp(d1, d2) >= 0 else d2
    margin = ExtFloat(scale.man, scale.exp - wp + 6)
    delta = add_x(delta, abs(margin), _WIDE, RU)[0]
    lam_form = AffineForm(lam)
    res = affine_mul(a, lam_form, ctx)
    res = affine_add(res, AffineForm(mu), ctx)
    if res is TOP:
        return TOP
    terms = dict(res.terms)
    terms[ctx.fresh()] = round_to(delta, prec, RU)
    out = AffineForm(res.center, terms)
    return condense(out, ctx.budget, ctx)


def _const_result(value: ExtFloat, inexact: bool, ctx):
    terms = {}
    if inexact:
        terms[ctx.fresh()] = half_ulp(value)
    return AffineForm(value, terms)


def affine_unary(op: str, a, ctx: AffineContext):
    """``div_inverse`` (1/x) or ``sqrt`` by min-range linear approximation."""
    if a is TOP:
        return TOP
    prec = ctx.prec
    wp = _wp(ctx)
    if op == "div_inverse":
        lo, hi = a.interval()
        if lo.man <= 0 <= hi.man:
            ctx.log("division-by-zero")
            return TOP
        if a.is_constant():
            v, inex = div_x(ExtFloat(1), a.center, prec, RN)
            return _const_result(v, inex, ctx)
        if hi.man < 0:
            return affine_neg(affine_unary("div_inverse", affine_neg(a), ctx))
        one = ExtFloat(1)
        lam = div_x(one, mul_x(hi, hi, wp, RN)[0], prec, RN)[0]
        lam = ExtFloat(-lam.man, lam.exp)
        nlam = abs(lam)

        def g(x):
            # 1/x - lam*x
            return add_x(div_x(one, x, wp, RN)[0], mul_x(nlam, x, wp, RN)[0], wp, RN)[0]

        stationary = mul_x(ExtFloat(2), sqrt_x(nlam, wp, RN)[0], wp, RN)[0]
        scale = add_x(div_x(one, lo, 64, RU)[0], mul_x(nlam, hi, 64, RU)[0], 64, RU)[0]
        scale = add_x(scale, stationary, 64, RU)[0]
        return _linearize(a, lam, (g(lo), g(hi), stationary), True, scale, ctx)
    if op == "sqrt":
        lo, hi = a.interval()
        if lo.man < 0:
            ctx.log("possible-negative-sqrt")
            return TOP
        if a.is_constant():
            v, inex = sqrt_x(a.center, prec, RN)
            return _const_result(v, inex, ctx)
        if hi.man == 0:
            return AffineForm(ZERO)
        lam = div_x(ExtFloat(1), mul_x(ExtFloat(2), sqrt_x(hi, wp, RN)[0], wp, RN)[0], prec, RN)[0]

        def g(x):
            # sqrt(x) - lam*x
            return add_x(sqrt_x(x, wp, RN)[0], -mul_x(lam, x, wp, RN)[0], wp, RN)[0]

        # concave: the maximum of sqrt(x) - lam*x is 1/(4*lam)
        stationary = div_x(ExtFloat(1), mul_x(ExtFloat(4), lam, wp, RN)[0], wp, RN)[0]
        scale = add_x(sqrt_x(hi, 64, RU)[0], mul_x(lam, hi, 64, RU)[0], 64, RU)[0]
        scale = add_x(scale, stationary, 64, RU)[0]
        return _linearize(a, lam, (g(lo), g(hi), stationary), False, scale, ctx)
    raise ValueError(f"unknown operation {op!r}")
