"""Pluggable scalar arithmetic for the solver.

The solver and path extraction never touch raw floats directly: every
arithmetic operation, comparison and float-to-integer conversion goes through
a :class:`ScalarMode`.  Three modes live here:

* :class:`PlainMode` -- ordinary IEEE-754 binary64 execution.
* :class:`RandomRoundMode` -- each inexact operation is randomly rounded up or
  down (one control flow, one sample per run; run it several times).
* :class:`StochasticMode` -- three randomly rounded samples carried together
  through a single control flow, with instability counters.

The shadow (affine ideal) mode and the extended-precision oracle mode live in
:mod:`fmmlab.shadow`.

Random bits come from :class:`RngStream`, a SplitMix64 counter generator:
draw ``k`` (``k = 0, 1, ...``) of stream ``seed`` is
``mix64(seed + (k + 1) * 0x9E3779B97F4A7C15 mod 2**64)`` with the SplitMix64
finaliser ``mix64``.  Coin flips consume each 64-bit draw from the least
significant bit upwards; a set bit means "round up".
"""

from __future__ import annotations

import math
import operator
from dataclasses import asdict, dataclass

from .eft import adjacent, residual_sign
from .errors import ScalarError

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

# decimal digits carried by binary64
MAX_DIGITS = 15.7
# Student t quantile, 95 % two-sided, 2 degrees of freedom
STUDENT_K = 4.303


def mix64(z: int) -> int:
    """SplitMix64 finaliser."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th member of an ensemble rooted at ``seed``."""
    return mix64(seed + index)


class RngStream:
    """Counter-based random bit source, reproducible from ``(seed, counter)``."""

    __slots__ = ("seed", "counter", "_word", "_bits")

    def __init__(self, seed: int, counter: int = 0):
        self.seed = seed & MASK64
        self.counter = counter
        self._word = 0
        self._bits = 0

    def draw(self, counter: int) -> int:
        return mix64(self.seed + (counter + 1) * GAMMA)

    def next64(self) -> int:
        w = self.draw(self.counter)
        self.counter += 1
        return w

    def flip(self) -> bool:
        if not self._bits:
            self._word = self.next64()
            self._bits = 64
        bit = self._word & 1
        self._word >>= 1
        self._bits -= 1
        return bool(bit)


class ForcedRng:
    """Test double returning a fixed coin (``True`` = round up)."""

    def __init__(self, up: bool):
        self.up = up

    def flip(self) -> bool:
        return self.up


_IEEE = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "div": operator.truediv,
}


def rr_apply(op: str, a: float, b: float | None = None, rng=None) -> float:
    """Apply ``op`` and randomly pick one of the two faithful roundings.

    ``rng`` must provide ``flip() -> bool``; ``None`` disables perturbation
    (round-to-nearest).  Exact results, zeros and infinities are returned
    untouched.
    """
    if a != a or (b is not None and b != b):
        raise ScalarError("invalid-operand", f"NaN operand to {op}")
    if op == "sqrt":
        if a < 0:
            raise ScalarError("invalid-operand", f"sqrt of negative {a!r}")
        z = math.sqrt(a)
    else:
        try:
            z = _IEEE[op](a, b)
        except KeyError:
            raise ValueError(f"unknown operation {op!r}") from None
        except ZeroDivisionError:
            raise ScalarError("invalid-operand", "division by zero") from None
    if rng is None or z == 0.0 or not math.isfinite(z) or math.isinf(a):
        return z
    if b is not None and (b == 0.0 or math.isinf(b)):
        return z
    r = residual_sign(op, a, b, z)
    if r == 0:
        return z
    up = rng.flip()
    if r > 0:
        return adjacent(z, "up") if up else z
    return z if up else adjacent(z, "down")


class ScalarMode:
    """Numeric contract the solver is written against.

    Values are opaque to the solver.  Comparisons and truncation take a
    ``site`` string naming the code location, which instrumented modes use to
    attribute unstable decisions.
    """

    name = "abstract"
    # values are Python floats whose ``<`` is the mode's comparison
    native_float = False
    inf = math.inf

    def const(self, x: float):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def div(self, a, b):
        raise NotImplementedError

    def sqrt(self, a):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def lt(self, a, b, site: str) -> bool:
        raise NotImplementedError

    def le(self, a, b, site: str) -> bool:
        raise NotImplementedError

    def eq(self, a, b, site: str) -> bool:
        raise NotImplementedError

    def trunc(self, a, site: str) -> int:
        raise NotImplementedError

    def is_inf(self, a) -> bool:
        raise NotImplementedError

    def to_float(self, a) -> float:
        raise NotImplementedError

    def param(self, t: float, site: str) -> float:
        """Hook for continuous decisions (search parameters) made on floats."""
        return t


def _trunc_unsigned(x: float) -> int:
    if x < 0:
        raise ScalarError("negative-unsigned-conversion", repr(x))
    return int(x)


class PlainMode(ScalarMode):
    name = "plain"
    native_float = True

    const = staticmethod(float)
    add = staticmethod(operator.add)
    sub = staticmethod(operator.sub)
    mul = staticmethod(operator.mul)
    div = staticmethod(operator.truediv)
    sqrt = staticmethod(math.sqrt)
    neg = staticmethod(operator.neg)
    is_inf = staticmethod(math.isinf)
    to_float = staticmethod(float)

    def lt(self, a, b, site=None):
        return a < b

    def le(self, a, b, site=None):
        return a <= b

    def eq(self, a, b, site=None):
        return a == b

    def trunc(self, a, site=None):
        return _trunc_unsigned(a)


PLAIN = PlainMode()


class RecordingMode(PlainMode):
    """Plain execution that logs every control decision in order.

    The log (comparison outcomes, truncations, search parameters) lets another
    arithmetic replay exactly the same control flow.  Heap ordering goes
    through ``lt`` as well, so the fast ``heapq`` path is disabled.
    """

    name = "plain-recording"
    native_float = False

    def __init__(self):
        self.trace: list = []

    def lt(self, a, b, site=None):
        r = a < b
        self.trace.append(r)
        return r

    def le(self, a, b, site=None):
        r = a <= b
        self.trace.append(r)
        return r

    def eq(self, a, b, site=None):
        r = a == b
        self.trace.append(r)
        return r

    def trunc(self, a, site=None):
        r = _trunc_unsigned(a)
        self.trace.append(r)
        return r

    def param(self, t, site=None):
        self.trace.append(t)
        return t


class RandomRoundMode(PlainMode):
    """One randomly rounded execution; comparisons are left unperturbed.

    ``rng=None`` turns perturbation off, reproducing :class:`PlainMode`
    bit for bit.
    """

    name = "random-round"

    def __init__(self, rng: RngStream | None):
        self.rng = rng

    def add(self, a, b):
        return rr_apply("add", a, b, self.rng)

    def sub(self, a, b):
        return rr_apply("sub", a, b, self.rng)

    def mul(self, a, b):
        return rr_apply("mul", a, b, self.rng)

    def div(self, a, b):
        return rr_apply("div", a, b, self.rng)

    def sqrt(self, a):
        return rr_apply("sqrt", a, None, self.rng)


# -- stochastic triples ------------------------------------------------------


@dataclass
class InstabilityCounters:
    unstable_branching: int = 0
    cancellation: int = 0
    unstable_multiplication: int = 0
    unstable_conversion: int = 0

    def total(self) -> int:
        return (self.unstable_branching + self.cancellation
                + self.unstable_multiplication + self.unstable_conversion)

    def as_dict(self) -> dict:
        return asdict(self)


class StochasticTriple:
    """Three samples of one value, propagated synchronously."""

    __slots__ = ("v0", "v1", "v2")

    def __init__(self, v0: float, v1: float, v2: float):
        self.v0 = v0
        self.v1 = v1
        self.v2 = v2

    @classmethod
    def exact(cls, x: float) -> StochasticTriple:
        return cls(x, x, x)

    def samples(self) -> tuple[float, float, float]:
        return self.v0, self.v1, self.v2

    @property
    def mean(self) -> float:
        if self.v0 == self.v1 == self.v2:
            return self.v0
        return (self.v0 + self.v1 + self.v2) / 3.0

    @property
    def sigma(self) -> float:
        """Sample standard deviation (n - 1 normalisation)."""
        if self.v0 == self.v1 == self.v2:
            return 0.0
        m = self.mean
        return math.sqrt(((self.v0 - m) ** 2 + (self.v1 - m) ** 2 + (self.v2 - m) ** 2) / 2.0)

    def __repr__(self):
        return f"StochasticTriple({self.v0!r}, {self.v1!r}, {self.v2!r})"

    def __eq__(self, other):
        if not isinstance(other, StochasticTriple):
            return NotImplemented
        return self.samples() == other.samples()

    __hash__ = None


def significant_digits(a: StochasticTriple) -> float:
    """Estimated number of exact significant decimal digits of ``a``."""
    if a.v0 == a.v1 == a.v2:
        return MAX_DIGITS
    sigma = a.sigma
    if sigma == 0.0:
        return MAX_DIGITS
    mean = a.mean
    if mean == 0.0:
        return 0.0
    d = math.log10(abs(mean) / (sigma * STUDENT_K))
    return min(max(d, 0.0), MAX_DIGITS)


def st_apply(op: str, a: StochasticTriple, b: StochasticTriple | None, rng,
             counters: InstabilityCounters | None = None) -> StochasticTriple:
    """Samplewise random-rounded ``op`` with cancellation/multiplication checks."""
    if b is None:
        r = StochasticTriple(rr_apply(op, a.v0, None, rng), rr_apply(op, a.v1, None, rng),
                             rr_apply(op, a.v2, None, rng))
        return r
    r = StochasticTriple(rr_apply(op, a.v0, b.v0, rng), rr_apply(op, a.v1, b.v1, rng),
                         rr_apply(op, a.v2, b.v2, rng))
    if counters is not None:
        if op in ("add", "sub"):
            if not (r.v0 == r.v1 == r.v2):
                da = significant_digits(a)
                db = significant_digits(b)
                if da > 0 and db > 0 and significant_digits(r) <= max(da, db) - 4:
                    counters.cancellation += 1
        elif op == "mul":
            if significant_digits(a) == 0.0 and significant_digits(b) == 0.0:
                counters.unstable_multiplication += 1
    return r


_RELATIONS = {"<": operator.lt, "<=": operator.le, "==": operator.eq}


def st_compare(relation: str, a: StochasticTriple, b: StochasticTriple,
               counters: InstabilityCounters | None = None) -> bool:
    """Majority verdict of the samplewise relation; disagreement is counted."""
    rel = _RELATIONS[relation]
    r0 = rel(a.v0, b.v0)
    r1 = rel(a.v1, b.v1)
    r2 = rel(a.v2, b.v2)
    if r0 == r1 == r2:
        return r0
    if counters is not None:
        counters.unstable_branching += 1
    return (r0 + r1 + r2) >= 2


def st_truncate_to_integer(a: StochasticTriple, counters: InstabilityCounters | None = None) -> int:
    i0, i1, i2 = (_trunc_unsigned(v) for v in a.samples())
    if i0 == i1 == i2:
        return i0
    if counters is not None:
        counters.unstable_conversion += 1
    return int(a.mean)


class StochasticMode(ScalarMode):
    """Synchronous three-sample stochastic arithmetic with instability counters."""

    name = "stochastic"

    def __init__(self, rng: RngStream | None, counters: InstabilityCounters | None = None):
        self.rng = rng
        self.counters = counters if counters is not None else InstabilityCounters()
        self.inf = StochasticTriple.exact(math.inf)

    def const(self, x):
        return StochasticTriple.exact(float(x))

    def add(self, a, b):
        return st_apply("add", a, b, self.rng, self.counters)

    def sub(self, a, b):
        return st_apply("sub", a, b, self.rng, self.counters)

    def mul(self, a, b):
        return st_apply("mul", a, b, self.rng, self.counters)

    def div(self, a, b):
        return st_apply("div", a, b, self.rng, self.counters)

    def sqrt(self, a):
        return st_apply("sqrt", a, None, self.rng, self.counters)

    def neg(self, a):
        return StochasticTriple(-a.v0, -a.v1, -a.v2)

    def lt(self, a, b, site=None):
        return st_compare("<", a, b, self.counters)

    def le(self, a, b, site=None):
        return st_compare("<=", a, b, self.counters)

    def eq(self, a, b, site=None):
        return st_compare("==", a, b, self.counters)

    def trunc(self, a, site=None):
        return st_truncate_to_integer(a, self.counters)

    def is_inf(self, a):
        return math.isinf(a.v0)

    def to_float(self, a):
        return a.mean
