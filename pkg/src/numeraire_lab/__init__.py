"""Exact numéraire analysis of convex sets of payoffs on finite probability spaces."""

from .closure import ClosureConfig, cs_closure, verify_theorem
from .core import ConvexBody, FiniteProbSpace, Measure, contains, prune, rv
from .numeraire import is_maximal, is_numeraire, is_strictly_positive_on
from .prooflab import run_pipeline

__all__ = [
    "ClosureConfig",
    "ConvexBody",
    "FiniteProbSpace",
    "Measure",
    "contains",
    "cs_closure",
    "is_maximal",
    "is_numeraire",
    "is_strictly_positive_on",
    "prune",
    "run_pipeline",
    "rv",
    "verify_theorem",
]
