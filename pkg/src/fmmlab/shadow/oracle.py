"""Plain extended-precision scalar mode, used as an independent oracle.

Values are :class:`ExtFloat` numbers rounded to nearest at a fixed width.
Given the decision log of a :class:`~fmmlab.scalar.RecordingMode` run, the
mode replays that control flow (comparison outcomes, truncations and search
parameters) while still computing every value in extended precision; the
number of decisions where its own verdict differed is kept in
``disagreements``.
"""

from __future__ import annotations

import math

from ..errors import ScalarError
from ..scalar import ScalarMode
from . import extfloat as xf
from .extfloat import DEFAULT_PREC, RN, ExtFloat, trunc_int


class _ExtInf:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EXT_INF"


EXT_INF = _ExtInf()


def _cmp(a, b) -> int:
    if a is EXT_INF or b is EXT_INF:
        return (a is EXT_INF) - (b is EXT_INF)
    return xf.cmp(a, b)


class ExtFloatMode(ScalarMode):
    name = "extfloat"

    def __init__(self, prec: int = DEFAULT_PREC, replay: list | None = None):
        self.prec = prec
        self.inf = EXT_INF
        self._replay = replay
        self._pos = 0
        self.disagreements = 0

    def _next(self, own, counted=True):
        if self._replay is None:
            return own
        if self._pos >= len(self._replay):
            raise ScalarError("replay-exhausted", "control flow left the recorded trace")
        rec = self._replay[self._pos]
        self._pos += 1
        if counted and rec != own:
            self.disagreements += 1
        return rec

    def replay_complete(self) -> bool:
        return self._replay is None or self._pos == len(self._replay)

    def const(self, x):
        x = float(x)
        if math.isinf(x) and x > 0:
            return EXT_INF
        return ExtFloat.from_float(x)

    def add(self, a, b):
        return xf.add(a, b, self.prec, RN)

    def sub(self, a, b):
        return xf.sub(a, b, self.prec, RN)

    def mul(self, a, b):
        return xf.mul(a, b, self.prec, RN)

    def div(self, a, b):
        if b.man == 0:
            raise ScalarError("invalid-operand", "division by zero")
        return xf.div(a, b, self.prec, RN)

    def sqrt(self, a):
        if a.man < 0:
            raise ScalarError("invalid-operand", "sqrt of a negative value")
        return xf.sqrt(a, self.prec, RN)

    def neg(self, a):
        return -a

    def lt(self, a, b, site=None):
        return self._next(_cmp(a, b) < 0)

    def le(self, a, b, site=None):
        return self._next(_cmp(a, b) <= 0)

    def eq(self, a, b, site=None):
        return self._next(_cmp(a, b) == 0)

    def trunc(self, a, site=None):
        if a is EXT_INF or a.man < 0:
            raise ScalarError("negative-unsigned-conversion", repr(a))
        return self._next(trunc_int(a))

    def is_inf(self, a):
        return a is EXT_INF

    def to_float(self, a):
        return math.inf if a is EXT_INF else a.to_float()

    def param(self, t, site=None):
        return self._next(t, counted=False)
