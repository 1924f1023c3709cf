"""Exception hierarchy.

Every domain error carries a short kebab-case ``code`` (``"eft-overflow"``,
``"invalid-cost"``, ...) so callers and the CLI can report it without
parsing messages.
"""

from __future__ import annotations


class FmmlabError(Exception):
    """Base class for all domain errors raised by fmmlab."""

    code = "fmmlab-error"

    def __init__(self, code: str | None = None, message: str = ""):
        if code is not None:
            self.code = code
        self.message = message
        super().__init__(f"{self.code}: {message}" if message else self.code)


class EFTError(FmmlabError, ArithmeticError):
    pass


class ScalarError(FmmlabError, ArithmeticError):
    pass


class ScenarioError(FmmlabError, ValueError):
    pass


class SolverError(FmmlabError):
    pass


class BacktraceError(FmmlabError):
    def __init__(self, code=None, message="", counters=None):
        super().__init__(code, message)
        # partial instability counters when raised under stochastic analysis
        self.counters = counters


class ShadowError(FmmlabError):
    pass


class AnalysisError(FmmlabError):
    pass
