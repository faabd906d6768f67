"""Canonical weights and load cases used across the test and demo pipeline.

The four beam cases live on I = (0, 4) with marked points x1 = 1, x2 = 2,
x3 = 3.  Away from case (a) the width behaves like |x - 0|^g1, |x - 2|^g2,
|x - 2|^g3 and |x - 4|^g4 on the four unit subintervals.  The exponents are
chosen to reproduce the published critical sets:

  case b: g = (1/2, 1/2, 1, 5/2)   ->  Icr0 = {x2 (right), 4 (left)}, Icr1 = {}
  case c: g = (0, 2, 3, 0)         ->  Icr0 = {x2 both}, Icr1 = {x2 right}
  case d: g = (2, 7, 4, 4)         ->  Icr0 = {0, x2, 4}, Icr1 = {x2 both, 4},
                                       Icr2 = {x2 left}

Case (d) uses exponents strictly above each threshold (the minimal choices
2, 7, 4, 4 rather than borderline 1, 5, 3, 3) so that the explicit witness
and boundary-adjustment families decay geometrically instead of merely
staying bounded at the exact thresholds.
"""

from __future__ import annotations

import math

from .loads import Load
from .weights import Constant, DyadicComb, ExpInverse, Interval, LogInverse, Power, Weight

__all__ = [
    "BEAM_INTERVAL",
    "X1",
    "X2",
    "X3",
    "uniform_weight",
    "power_weight",
    "one_sided_power_weight",
    "case_weight",
    "case_load",
    "CASE_EXPONENTS",
    "w_log",
    "w_exp",
    "w_crit",
    "w_crit_bv",
    "w_gap_comb",
    "wcrit_gamma",
]

BEAM_INTERVAL = Interval(0.0, 4.0)
X1, X2, X3 = 1.0, 2.0, 3.0

CASE_EXPONENTS = {
    "a": None,
    "b": (0.5, 0.5, 1.0, 2.5),
    "c": (0.0, 2.0, 3.0, 0.0),
    "d": (2.0, 7.0, 4.0, 4.0),
}


def uniform_weight(interval=BEAM_INTERVAL, c=1.0):
    return Weight(interval, [((interval.a_minus, interval.a_plus), Constant(c))])


def power_weight(gamma, center=0.0, interval=None, scale=1.0):
    """|x - center|^gamma on a symmetric interval around the center."""
    if interval is None:
        interval = Interval(center - 1.0, center + 1.0)
    return Weight(interval, [((interval.a_minus, interval.a_plus), Power(center, gamma, scale))])


def one_sided_power_weight(gamma, center=0.0, degenerate_side="right", interval=None, off=1.0):
    """|x-center|^gamma on one side of the center, a constant on the other."""
    if interval is None:
        interval = Interval(center - 1.0, center + 1.0)
    a, b = interval.a_minus, interval.a_plus
    if degenerate_side == "right":
        segs = [((a, center), Constant(off)), ((center, b), Power(center, gamma))]
    else:
        segs = [((a, center), Power(center, gamma)), ((center, b), Constant(off))]
    return Weight(interval, segs)


def case_weight(case: str) -> Weight:
    case = case.lower()
    if case == "a":
        return uniform_weight()
    try:
        g1, g2, g3, g4 = CASE_EXPONENTS[case]
    except KeyError:
        raise ValueError("case must be one of 'a', 'b', 'c', 'd'") from None
    a, b = BEAM_INTERVAL.a_minus, BEAM_INTERVAL.a_plus
    return Weight(
        BEAM_INTERVAL,
        [
            ((a, X1), Power(a, g1) if g1 > 0 else Constant(1.0)),
            ((X1, X2), Power(X2, g2) if g2 > 0 else Constant(1.0)),
            ((X2, X3), Power(X2, g3) if g3 > 0 else Constant(1.0)),
            ((X3, b), Power(b, g4) if g4 > 0 else Constant(1.0)),
        ],
    )


def case_load(case: str) -> Load:
    """The published load for each case (the admissible parameter choice)."""
    case = case.lower()
    if case in ("a", "b"):
        return Load(
            distributed=[((0.0, 1.0), (1.0,)), ((1.0, 2.0), (1.0,)), ((2.0, 3.0), (1.0,)), ((3.0, 4.0), (1.0,))],
            point_forces=[(X1, 1.0), (X2, 2.0), (X3, 3.0)],
            point_moments=[(X2, 2.0)] ,
        )
    if case == "c":
        return Load(
            distributed=[((0.0, 1.0), (1.0,)), ((1.0, 2.0), (1.0,)), ((2.0, 3.0), (1.0,)), ((3.0, 4.0), (1.0,))],
            point_forces=[(X1, 1.0), (X2, 2.0), (X3, 3.0)],
            point_moments=[],
        )
    if case == "d":
        # orthogonality to the zero-energy modes forces F1 = -q1/2, q3 = q4,
        # F3 = -2 q3; the q2, F2 and moment components must vanish
        return Load(
            distributed=[((0.0, 1.0), (1.0,)), ((2.0, 3.0), (1.0,)), ((3.0, 4.0), (1.0,))],
            point_forces=[(X1, -0.5), (X3, -2.0)],
            point_moments=[],
        )
    raise ValueError("case must be one of 'a', 'b', 'c', 'd'")


def w_log(center=0.0, interval=None):
    """1/|log|x - center|| weight; critical only for p = 1 at order 0."""
    if interval is None:
        interval = Interval(center - 0.5, center + 0.5)
    return Weight(interval, [((interval.a_minus, interval.a_plus), LogInverse(center))])


def w_exp(center=0.0, interval=None):
    """exp(-1/|x - center|): critical at the center for every order and p."""
    if interval is None:
        interval = Interval(center - 1.0, center + 1.0)
    return Weight(interval, [((interval.a_minus, interval.a_plus), ExpInverse(center))])


def wcrit_gamma(p, m):
    """Comb exponent p*(m - 1 + 2/p') matching the counterexample scaling."""
    pp = p / (p - 1.0)
    return p * ((m - 1.0) + 2.0 / pp)


def w_crit(p=2.0, m=2, center=0.0):
    """The non-stable comb weight on (-1, 1): critical of order m-1 at its
    center yet with the order-(m-1) step excluded from the space."""
    gamma = wcrit_gamma(p, m)
    iv = Interval(center - 1.0, center + 1.0)
    return Weight(iv, [((iv.a_minus, iv.a_plus), DyadicComb(center, gamma))])


def w_crit_bv(p=2.0, m=2, beta=1.5, center=0.0):
    """Bounded-variation comb variant; finite off-profile whenever
    beta < 2**(p-1)."""
    gamma = wcrit_gamma(p, m)
    iv = Interval(center - 1.0, center + 1.0)
    return Weight(iv, [((iv.a_minus, iv.a_plus), DyadicComb(center, gamma, "geometric", beta))])


def w_gap_comb(center=0.0, levels=14, interval=None):
    """Blocks of width 2^-k/4 around the points 2^-k, zero in between.

    A finite truncation of the comb-with-gaps example: the bumps of a Dirac
    family can be placed inside the zero gaps, where every weighted norm
    vanishes identically.
    """
    if interval is None:
        interval = Interval(center - 2.0, center + 2.0)
    a, b = interval.a_minus, interval.a_plus
    segs = []
    hi = b
    if b > center + 9.0 / 8.0:
        segs.append(((center + 9.0 / 8.0, b), Constant(0.0)))
        hi = center + 9.0 / 8.0
    for k in range(levels):
        blk_lo = center + (1.0 - 1.0 / 8.0) * 2.0 ** -k
        blk_hi = center + (1.0 + 1.0 / 8.0) * 2.0 ** -k
        blk_hi = min(blk_hi, hi)
        segs.append(((blk_lo, blk_hi), Constant(1.0)))
        nxt_hi = center + (1.0 + 1.0 / 8.0) * 2.0 ** -(k + 1)
        segs.append(((nxt_hi, blk_lo), Constant(0.0)))
        hi = nxt_hi
    segs.append(((a, center), Constant(1.0)))
    segs.append(((center, hi), Constant(0.0)))
    return Weight(interval, segs)
