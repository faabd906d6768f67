"""Weighted Sobolev structure and beam solving for strongly degenerate widths."""

from .weights import (
    Constant,
    DyadicComb,
    ExpInverse,
    IntegralResult,
    Interval,
    LogInverse,
    Power,
    Weight,
    evaluate,
    integrate_dual,
    integrate_weighted,
    moments_of_inverse,
    weight_from_json,
    weight_to_json,
)

__version__ = "0.1.0"
