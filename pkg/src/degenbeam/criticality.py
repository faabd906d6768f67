"""Criticality classification: which points break the dual integrability.

A point x0 is side-critical of order alpha when the integral of
(|x-x0|^alpha / w^(1/p))^p' over every half-ball on that side diverges
(essential supremum of |x-x0|^alpha / w for p = 1).  For the symbolic forms
the verdict is a closed-form threshold rule; the dyadic comb is decided by
the certified annulus series.  An independent numeric probe lives in
`weights.divergence_probe` and is used by the test suite, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .weights import (
    Constant,
    DyadicComb,
    ExpInverse,
    IntegralResult,
    LogInverse,
    Power,
    Weight,
    divergence_probe,
    integrate_dual,
)

__all__ = [
    "LEFT",
    "RIGHT",
    "BOTH",
    "CriticalityQuery",
    "CriticalityReport",
    "classify_point",
    "max_order",
    "stability_check",
    "full_report",
    "punctured_ball",
]

LEFT, RIGHT, BOTH = "left", "right", "both"
_SIDES = (LEFT, RIGHT, BOTH)


@dataclass(frozen=True)
class CriticalityQuery:
    p: float
    alpha: float
    x0: float
    side: str = BOTH

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.side not in _SIDES:
            raise ValueError(f"side must be one of {_SIDES}")


def _validate_query(w: Weight, q: CriticalityQuery):
    dom = w.domain
    if not dom.a_minus - 1e-12 <= q.x0 <= dom.a_plus + 1e-12:
        raise ValueError("query point outside the closed domain")
    at_left = math.isclose(q.x0, dom.a_minus, abs_tol=1e-12)
    at_right = math.isclose(q.x0, dom.a_plus, abs_tol=1e-12)
    if at_left and q.side == LEFT:
        raise ValueError("left endpoint admits only right-sided queries")
    if at_right and q.side == RIGHT:
        raise ValueError("right endpoint admits only left-sided queries")
    if at_left:
        return (RIGHT,)
    if at_right:
        return (LEFT,)
    return (LEFT, RIGHT) if q.side == BOTH else (q.side,)


def _power_critical(gamma, p, alpha):
    if p > 1:
        return gamma >= p * (alpha + 1.0) - 1.0 - 1e-12
    return gamma > alpha + 1e-12


def _side_critical(w: Weight, p, alpha, x0, side):
    """One-sided verdict from the form adjacent to x0 on that side."""
    sgn = +1 if side == RIGHT else -1
    form = w.adjacent_form(x0, sgn)
    center = getattr(form, "center", None)
    at_center = center is not None and math.isclose(center, x0, abs_tol=1e-12)
    if isinstance(form, Constant):
        return form.c == 0.0
    if isinstance(form, Power):
        return at_center and _power_critical(form.exponent, p, alpha)
    if isinstance(form, LogInverse):
        return at_center and p == 1 and alpha == 0.0
    if isinstance(form, ExpInverse):
        return at_center
    if isinstance(form, DyadicComb):
        if not at_center:
            return False
        if sgn < 0:
            return False  # the comb accumulates from the right; left side is flat
        res = divergence_probe(w, p, alpha, x0, side=+1)
        return not res.finite
    raise TypeError(f"unknown weight form {form!r}")


def classify_point(w: Weight, q: CriticalityQuery) -> bool:
    """True when x0 is critical of order q.alpha on the queried side(s)."""
    sides = _validate_query(w, q)
    return any(_side_critical(w, q.p, q.alpha, q.x0, s) for s in sides)


def side_max_order(w: Weight, p, x0, side):
    """sup of critical orders on one side: None, a finite value, or +inf."""
    sgn = +1 if side == RIGHT else -1
    form = w.adjacent_form(x0, sgn)
    center = getattr(form, "center", None)
    at_center = center is not None and math.isclose(center, x0, abs_tol=1e-12)
    if isinstance(form, Constant):
        return math.inf if form.c == 0.0 else None
    if isinstance(form, Power):
        if not at_center:
            return None
        g = form.exponent
        if p > 1:
            a_star = (g + 1.0) / p - 1.0
            return a_star if a_star >= -1e-12 else None
        return g if g > 0 else None
    if isinstance(form, LogInverse):
        return 0.0 if (at_center and p == 1) else None
    if isinstance(form, ExpInverse):
        return math.inf if at_center else None
    if isinstance(form, DyadicComb):
        if not (at_center and sgn > 0):
            return None
        # probe integer orders upward; the comb construction tops out at a
        # finite order for finite gamma
        top = None
        for a in range(0, 40):
            if _side_critical(w, p, float(a), x0, side):
                top = float(a)
            else:
                break
        return top
    raise TypeError(f"unknown weight form {form!r}")


def max_order(w: Weight, p, x0, side=BOTH):
    """sup{alpha : critical} over the requested side(s); None when never."""
    sides = _validate_query(w, CriticalityQuery(p, 0.0, x0, side))
    vals = [side_max_order(w, p, x0, s) for s in sides]
    vals = [v for v in vals if v is not None]
    return max(vals) if vals else None


def _side_stable(w: Weight, x0, side):
    """Monotone (non-decreasing with distance) near x0 on this side?"""
    sgn = +1 if side == RIGHT else -1
    form = w.adjacent_form(x0, sgn)
    center = getattr(form, "center", None)
    at_center = center is not None and math.isclose(center, x0, abs_tol=1e-12)
    if isinstance(form, DyadicComb) and at_center and sgn > 0:
        return False
    # power/log/exp forms increase with the distance to their center;
    # constants are trivially monotone
    return True


def stability_check(w: Weight, x0, side=BOTH, p=2.0):
    """'stable' / 'unstable' / 'not-critical' for the order-0 notion at x0."""
    sides = _validate_query(w, CriticalityQuery(p, 0.0, x0, side))
    critical = [s for s in sides if _side_critical(w, p, 0.0, x0, s)]
    if not critical:
        return "not-critical"
    return "stable" if any(_side_stable(w, x0, s) for s in critical) else "unstable"


# ---------------------------------------------------------------------------
# aggregated report


@dataclass
class SideReport:
    verdicts: dict  # alpha -> bool
    max_order: float | None
    stable: str


@dataclass
class PointReport:
    x0: float
    sides: dict  # side -> SideReport
    tangent_trivial: bool

    def critical(self, alpha, side=BOTH):
        if side == BOTH:
            return any(r.verdicts.get(alpha, False) for r in self.sides.values())
        r = self.sides.get(side)
        return bool(r and r.verdicts.get(alpha, False))


@dataclass
class CriticalityReport:
    p: float
    points: dict  # x0 -> PointReport
    alpha_grid: tuple
    muw_ae_noncritical: bool = True
    domain: tuple = (0.0, 1.0)

    def point(self, x0):
        for key, rep in self.points.items():
            if math.isclose(key, x0, abs_tol=1e-12):
                return rep
        return None

    def critical_points(self, alpha=0.0):
        return sorted(x for x, rep in self.points.items() if rep.critical(alpha))

    def side_order(self, x0, side):
        rep = self.point(x0)
        if rep is None or side not in rep.sides:
            return None
        return rep.sides[side].max_order

    def to_json(self):
        pts = []
        for x0 in sorted(self.points):
            rep = self.points[x0]
            pts.append(
                {
                    "x0": x0,
                    "tangent_trivial": rep.tangent_trivial,
                    "sides": {
                        s: {
                            "verdicts": {str(a): ("critical" if v else "noncritical") for a, v in sr.verdicts.items()},
                            "max_order": None if sr.max_order is None else (
                                "inf" if sr.max_order == math.inf else sr.max_order
                            ),
                            "stable": sr.stable,
                        }
                        for s, sr in rep.sides.items()
                    },
                }
            )
        return {
            "p": self.p,
            "interval": list(self.domain),
            "alpha_grid": list(self.alpha_grid),
            "muw_ae_noncritical": self.muw_ae_noncritical,
            "points": pts,
        }


def _exact_thresholds(w: Weight, p, x0, sides):
    out = set()
    for s in sides:
        v = side_max_order(w, p, x0, s)
        if v is not None and v != math.inf:
            out.add(round(v, 12))
    return out


def interesting_points(w: Weight):
    pts = set(w.degeneration_centers())
    pts.add(w.domain.a_minus)
    pts.add(w.domain.a_plus)
    return sorted(pts)


def full_report(w: Weight, p, alpha_grid=(0.0, 1.0, 2.0), points=None) -> CriticalityReport:
    """Classify every degeneration center and endpoint over the given orders.

    The grid is augmented per point with the exact symbolic thresholds, so
    the report is faithful at the borderline exponents.
    """
    alpha_grid = tuple(sorted({float(a) for a in alpha_grid}))
    pts = interesting_points(w) if points is None else sorted(points)
    out = {}
    for x0 in pts:
        sides = _validate_query(w, CriticalityQuery(p, 0.0, x0, BOTH))
        alphas = sorted(set(alpha_grid) | _exact_thresholds(w, p, x0, sides))
        side_reports = {}
        for s in sides:
            verdicts = {a: _side_critical(w, p, a, x0, s) for a in alphas}
            mo = side_max_order(w, p, x0, s)
            if any(verdicts.values()):
                stable = "stable" if _side_stable(w, x0, s) else "unstable"
            else:
                stable = "not-critical"
            side_reports[s] = SideReport(verdicts, mo, stable)
        trivial = any(sr.verdicts.get(0.0, False) for sr in side_reports.values())
        out[x0] = PointReport(x0, side_reports, trivial)
    # mu_w-a.e. non-criticality holds for every supported form: the critical
    # set is finitely many points plus zero-weight spans, all of mu_w measure 0
    return CriticalityReport(p, out, alpha_grid, True, (w.domain.a_minus, w.domain.a_plus))


def punctured_ball(w: Weight, p, alpha, x0, side=BOTH):
    """Neighbourhood V of a non-critical point with V-bar \\ {x0} order-0 free."""
    if classify_point(w, CriticalityQuery(p, alpha, x0, side)):
        raise ValueError("x0 is critical at this order; no punctured ball exists")
    dom = w.domain
    others = [c for c in interesting_points(w) if not math.isclose(c, x0, abs_tol=1e-12)]
    eps = min([abs(c - x0) for c in others] + [dom.length]) / 2.0
    for _ in range(60):
        res = integrate_dual(w, p, alpha, x0, (max(x0 - eps, dom.a_minus), min(x0 + eps, dom.a_plus)))
        if res.finite:
            return (max(x0 - eps / 2, dom.a_minus), min(x0 + eps / 2, dom.a_plus))
        eps /= 2.0
    raise RuntimeError("failed to certify a punctured ball")
