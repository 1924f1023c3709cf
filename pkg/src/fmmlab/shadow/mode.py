"""Shadow scalars: a concrete float paired with an affine ideal.

Every value carries the binary64 result of the concrete execution, an affine
form enclosing the ideal (real-number) result of the same computation, and a
propagated upper bound on ``|float - ideal|`` accumulated from half-ulp
rounding errors.  Comparisons and float-to-integer conversions check whether
the ideal agrees with the float decision; disagreements are *unstable*
events, resolved per site either by following the float (``SYNC``) or by
deferring to a :class:`FlowController` that may choose the other branch
(``SPLIT``).
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field

from ..eft import residual_sign, ulp
from ..errors import EFTError, ScalarError
from ..scalar import ScalarMode
from .affine import (TOP, AffineContext, AffineForm, affine_binary, affine_neg,
                     affine_sub, affine_unary)
from .extfloat import RU, ExtFloat, trunc_int

SYNC = "SYNC"
SPLIT = "SPLIT"

DEFAULT_GUARD_BUDGET = 8


class _PosInf:
    """Ideal counterpart of the float ``+inf`` used for unreached nodes."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"


INF = _PosInf()


@dataclass(frozen=True)
class BranchSite:
    site_id: str
    policy: str = SPLIT


class ShadowScalar:
    __slots__ = ("f", "ideal", "err")

    def __init__(self, f: float, ideal, err: float = 0.0):
        self.f = f
        self.ideal = ideal
        self.err = err

    def ideal_interval(self) -> tuple[float, float]:
        """Outward float hull of the ideal; ``(-inf, inf)`` for Top."""
        if self.ideal is TOP:
            return -math.inf, math.inf
        if self.ideal is INF:
            return math.inf, math.inf
        return self.ideal.float_interval()

    def error_bound(self) -> float:
        """Largest distance from the float value to the ideal's range."""
        if self.ideal is INF:
            return 0.0 if self.f == math.inf else math.inf
        return distance_bound(self.ideal, [self.f])

    def __repr__(self):
        return f"ShadowScalar({self.f!r}, {self.ideal!r}, err<={self.err!r})"


def distance_bound(ideal, floats) -> float:
    """Upper bound on ``max |x - v|`` over ``x`` in ``floats`` and ``v`` in the ideal."""
    if ideal is TOP or ideal is INF:
        return math.inf
    lo, hi = ideal.interval()
    worst = ExtFloat(0)
    for x in floats:
        if not math.isfinite(x):
            return math.inf
        e = ExtFloat.from_float(x)
        for end in (lo, hi):
            d = abs(_exact_sub(e, end))
            if d > worst:
                worst = d
    return worst.to_float(RU)


def _exact_sub(a: ExtFloat, b: ExtFloat) -> ExtFloat:
    if a.exp >= b.exp:
        return ExtFloat((a.man << (a.exp - b.exp)) - b.man, b.exp)
    return ExtFloat(a.man - (b.man << (b.exp - a.exp)), a.exp)


@dataclass
class CondInt:
    """Integer guarded by branch conditions.

    Reads as ``base`` when every guard holds; otherwise the alternative of
    the first failing guard, in list order (a cascade of
    ``if b_j then ... else alt_j``).
    """

    base: int
    alternatives: list = field(default_factory=list)
    fallback: bool = False

    def collapse(self, assignment: dict) -> int:
        for guard, value in self.alternatives:
            if not assignment.get(guard, True):
                return value
        return self.base

    def values(self) -> list[int]:
        return [self.base] + [v for _, v in self.alternatives]

    def describe(self) -> str:
        if not self.alternatives:
            return str(self.base)
        out = str(self.base)
        for guard, value in reversed(self.alternatives):
            out = f"if {guard} then {out} else {value}"
        return out


@dataclass
class SiteRecord:
    site_id: str
    location: str
    policy: str
    hits: int = 0
    conversions: list = field(default_factory=list)


@dataclass
class Decision:
    site_id: str
    float_choice: object
    taken: object
    alternatives: tuple


_PACKAGE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
_SKIP_FILES = {
    os.path.join(_PACKAGE_DIR, "scalar.py"),
}
_SHADOW_DIR = os.path.dirname(os.path.abspath(__file__))


def _caller_location() -> str:
    frame = sys._getframe(1)
    while frame is not None:
        path = os.path.abspath(frame.f_code.co_filename)
        if not path.startswith(_SHADOW_DIR) and path not in _SKIP_FILES:
            rel = os.path.relpath(path, os.path.dirname(_PACKAGE_DIR))
            return f"{rel.replace(os.sep, '/')}:{frame.f_lineno}:{frame.f_code.co_name}"
        frame = frame.f_back
    return "<unknown>"


class FlowController:
    """Per-run decision maker and event log for unstable sites.

    ``prefix`` forces the outcome of the first ``len(prefix)`` SPLIT events;
    later SPLIT events follow the float.  SYNC sites always follow the float.
    """

    def __init__(self, prefix=(), policies: dict | None = None, default_policy: str = SPLIT,
                 guard_budget: int = DEFAULT_GUARD_BUDGET):
        self.prefix = list(prefix)
        self.policies = dict(policies or {})
        self.default_policy = default_policy
        self.guard_budget = guard_budget
        self.decisions: list[Decision] = []
        self.sites: dict[str, SiteRecord] = {}
        self.sync_events = 0
        self.fallbacks = 0
        self._guards = 0

    def policy(self, site: str) -> str:
        return self.policies.get(site, self.default_policy)

    def new_guard(self) -> str:
        g = f"b{self._guards}"
        self._guards += 1
        return g

    def _hit(self, site: str) -> SiteRecord:
        rec = self.sites.get(site)
        if rec is None:
            rec = SiteRecord(site, _caller_location(), self.policy(site))
            self.sites[site] = rec
        rec.hits += 1
        return rec

    def decide(self, site: str, float_choice, alternatives):
        """Resolve an unstable event; returns the outcome the run follows."""
        self._hit(site)
        if self.policy(site) == SYNC or not alternatives:
            self.sync_events += 1
            return float_choice
        k = len(self.decisions)
        taken = self.prefix[k] if k < len(self.prefix) else float_choice
        self.decisions.append(Decision(site, float_choice, taken, tuple(alternatives)))
        return taken

    def note_conversion(self, site: str, ci: CondInt) -> None:
        rec = self.sites.get(site)
        if rec is None:
            rec = self._hit(site)
            rec.hits -= 1
        desc = ci.describe()
        if desc not in rec.conversions and len(rec.conversions) < 8:
            rec.conversions.append(desc)


# -- comparisons -------------------------------------------------------------


def _ideal_relation(relation: str, a, b, ctx: AffineContext):
    """True/False if the relation holds/fails for every ideal value, else None."""
    ia, ib = a.ideal, b.ideal
    if ia is TOP or ib is TOP:
        return None
    if ia is INF or ib is INF:
        if ia is INF and ib is INF:
            return relation != "<"
        if ib is INF:
            return relation != "=="
        return False
    alo, ahi = ia.interval()
    blo, bhi = ib.interval()
    if relation == "<":
        if ahi < blo:
            return True
        if alo >= bhi:
            return False
    elif relation == "<=":
        if ahi <= blo:
            return True
        if alo > bhi:
            return False
    else:
        if ia.is_constant() and ib.is_constant():
            return ia.center == ib.center
        if ahi < blo or alo > bhi:
            return False
    d = affine_sub(ia, ib, ctx)
    if d is TOP:
        return None
    lo, hi = d.interval()
    if relation == "<":
        if hi.man < 0:
            return True
        if lo.man >= 0:
            return False
    elif relation == "<=":
        if hi.man <= 0:
            return True
        if lo.man > 0:
            return False
    else:
        if lo.man == 0 and hi.man == 0:
            return True
        if lo.man > 0 or hi.man < 0:
            return False
    return None


_FLOAT_REL = {
    "<": lambda x, y: x < y,
    "<=": lambda x, y: x <= y,
    "==": lambda x, y: x == y,
}


def shadow_compare(relation: str, a: ShadowScalar, b: ShadowScalar, site: str,
                   controller: FlowController, ctx: AffineContext) -> bool:
    fb = _FLOAT_REL[relation](a.f, b.f)
    ideal = _ideal_relation(relation, a, b, ctx)
    if ideal is not None and ideal == fb:
        return fb
    return controller.decide(site, fb, (not fb,))


def shadow_truncate_to_integer(a: ShadowScalar, site: str, controller: FlowController) -> CondInt:
    f = a.f
    if not math.isfinite(f) or f < 0:
        raise ScalarError("negative-unsigned-conversion", repr(f))
    base = int(f)
    ideal = a.ideal
    if ideal is TOP or ideal is INF:
        controller.fallbacks += 1
        ci = CondInt(base, [], fallback=True)
        controller.note_conversion(site, ci)
        return ci
    lo, hi = ideal.interval()
    ilo, ihi = trunc_int(lo), trunc_int(hi)
    if ilo == ihi == base:
        return CondInt(base)
    others = [v for v in range(ilo, ihi + 1) if v != base]
    if not others:
        return CondInt(base)
    if len(others) > controller.guard_budget:
        controller.fallbacks += 1
        ci = CondInt(base, [], fallback=True)
        controller.note_conversion(site, ci)
        return ci
    # nearest alternatives first
    others.sort(key=lambda v: (abs(v - base), v))
    ci = CondInt(base, [(controller.new_guard(), v) for v in others])
    controller.note_conversion(site, ci)
    return ci


# -- the scalar mode ---------------------------------------------------------


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


def _sum_up(x: float, y: float) -> float:
    # upper bound on x + y for non-negative terms; exact when one is zero
    if x == 0.0:
        return y
    if y == 0.0:
        return x
    return _up(x + y)


def _prod_up(x: float, y: float) -> float:
    if x == 0.0 or y == 0.0:
        return 0.0
    return _up(x * y)


def _rounding(op: str, a: float, b, z: float) -> float:
    """Half-ulp of ``z`` unless the float operation was exact."""
    if z == 0.0 or not math.isfinite(z):
        return 0.0
    try:
        if residual_sign(op, a, b, z) == 0:
            return 0.0
    except EFTError:
        pass
    return ulp(z) * 0.5


class ShadowMode(ScalarMode):
    """Scalar mode running the float and affine-ideal semantics together."""

    name = "shadow"

    def __init__(self, ctx: AffineContext | None = None, controller: FlowController | None = None):
        self.ctx = ctx if ctx is not None else AffineContext()
        self.controller = controller if controller is not None else FlowController()
        self.inf = ShadowScalar(math.inf, INF, 0.0)

    def const(self, x):
        x = float(x)
        if math.isinf(x) and x > 0:
            return self.inf
        return ShadowScalar(x, AffineForm.constant(x), 0.0)

    def _ideal(self, v):
        return TOP if v is INF else v

    def _binary(self, op, a, b):
        return affine_binary(op, self._ideal(a.ideal), self._ideal(b.ideal), self.ctx)

    def add(self, a, b):
        f = a.f + b.f
        err = _sum_up(_sum_up(a.err, b.err), _rounding("add", a.f, b.f, f))
        return ShadowScalar(f, self._binary("add", a, b), err)

    def sub(self, a, b):
        f = a.f - b.f
        err = _sum_up(_sum_up(a.err, b.err), _rounding("sub", a.f, b.f, f))
        return ShadowScalar(f, self._binary("sub", a, b), err)

    def mul(self, a, b):
        f = a.f * b.f
        e = _sum_up(_prod_up(abs(a.f), b.err), _prod_up(abs(b.f), a.err))
        e = _sum_up(e, _prod_up(a.err, b.err))
        err = _sum_up(e, _rounding("mul", a.f, b.f, f))
        return ShadowScalar(f, self._binary("mul", a, b), err)

    def div(self, a, b):
        if b.f == 0.0:
            raise ScalarError("invalid-operand", "division by zero")
        f = a.f / b.f
        if a.err == 0.0 and b.err == 0.0:
            e = 0.0
        else:
            denom = abs(b.f) - b.err
            if denom > 0:
                denom = math.nextafter(denom, 0.0)
                num = _sum_up(a.err, _prod_up(abs(f), b.err))
                # the float quotient itself is off by at most its half-ulp
                num = _sum_up(num, _prod_up(ulp(f), b.err))
                e = _up(num / denom) if denom > 0 else math.inf
            else:
                e = math.inf
        err = _sum_up(e, _rounding("div", a.f, b.f, f))
        return ShadowScalar(f, self._binary("div", a, b), err)

    def sqrt(self, a):
        if a.f < 0:
            raise ScalarError("invalid-operand", f"sqrt of negative {a.f!r}")
        f = math.sqrt(a.f)
        if a.err == 0.0:
            e = 0.0
        elif f > 0:
            e = _up(a.err / math.nextafter(f, 0.0)) if math.nextafter(f, 0.0) > 0 else math.inf
        else:
            e = _up(math.sqrt(a.err))
        err = _sum_up(e, _rounding("sqrt", a.f, None, f))
        return ShadowScalar(f, affine_unary("sqrt", self._ideal(a.ideal), self.ctx), err)

    def neg(self, a):
        ideal = a.ideal
        if ideal is INF:
            ideal = TOP
        return ShadowScalar(-a.f, affine_neg(ideal), a.err)

    def lt(self, a, b, site=None):
        return shadow_compare("<", a, b, site or "<anon>", self.controller, self.ctx)

    def le(self, a, b, site=None):
        return shadow_compare("<=", a, b, site or "<anon>", self.controller, self.ctx)

    def eq(self, a, b, site=None):
        return shadow_compare("==", a, b, site or "<anon>", self.controller, self.ctx)

    def trunc(self, a, site=None):
        site = site or "<anon>"
        ci = shadow_truncate_to_integer(a, site, self.controller)
        if not ci.alternatives:
            if ci.fallback:
                self.controller.decide(site, ci.base, ())
            return ci.base
        return self.controller.decide(site, ci.base, tuple(v for _, v in ci.alternatives))

    def is_inf(self, a):
        return math.isinf(a.f)

    def to_float(self, a):
        return a.f

