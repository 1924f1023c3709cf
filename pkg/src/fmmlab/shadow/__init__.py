"""Shadow execution: affine ideal semantics alongside the float execution."""

from .affine import TOP, AffineContext, AffineForm, affine_binary, affine_unary, condense
from .explore import Exploration, FlowTrace, ShadowConfig, explore_flows
from .extfloat import DEFAULT_PREC, ExtFloat
from .mode import (INF, SPLIT, SYNC, BranchSite, CondInt, FlowController, ShadowMode,
                   ShadowScalar, shadow_compare, shadow_truncate_to_integer)
from .oracle import EXT_INF, ExtFloatMode

__all__ = [
    "TOP", "INF", "EXT_INF", "SYNC", "SPLIT", "DEFAULT_PREC",
    "AffineContext", "AffineForm", "affine_binary", "affine_unary", "condense",
    "ExtFloat", "ExtFloatMode",
    "BranchSite", "CondInt", "FlowController", "ShadowMode", "ShadowScalar",
    "shadow_compare", "shadow_truncate_to_integer",
    "Exploration", "FlowTrace", "ShadowConfig", "explore_flows",
]
