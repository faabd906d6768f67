"""Loads on the beam and their admissibility against a degenerate width.

A load is a sum of piecewise-polynomial densities, point forces and point
moments.  Whether each component extends to a bounded functional on the
order-2 space is decided by one-sided criticality at its location:

  point moment at x   needs a side of x that is not order-0 critical,
  point force at x    needs a side of x that is not order-1 critical,
  density touching x  needs the touched side of x not order-2 critical.

Loads must additionally annihilate the zero-energy displacements; the
residuals of that pairing are exact piecewise-polynomial integrals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .criticality import BOTH, LEFT, RIGHT, CriticalityReport
from .spaces import SpaceProfile

__all__ = [
    "Load",
    "ComponentVerdict",
    "AdmissibilityReport",
    "extendability",
    "orthogonality",
    "admissibility",
    "load_from_json",
    "load_to_json",
]

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Load:
    distributed: tuple = ()    # ((lo, hi), coeffs) density polynomials
    point_forces: tuple = ()   # (x, F)
    point_moments: tuple = ()  # (x, m)

    def __init__(self, distributed=(), point_forces=(), point_moments=()):
        object.__setattr__(
            self,
            "distributed",
            tuple(((float(l), float(r)), tuple(float(c) for c in coeffs)) for (l, r), coeffs in distributed),
        )
        object.__setattr__(self, "point_forces", tuple((float(x), float(F)) for x, F in point_forces))
        object.__setattr__(self, "point_moments", tuple((float(x), float(m)) for x, m in point_moments))

    def components(self):
        for (l, r), coeffs in self.distributed:
            yield ("distributed", ((l, r), coeffs), f"q[{l:g},{r:g}]")
        for x, F in self.point_forces:
            yield ("force", (x, F), f"F@{x:g}")
        for x, m in self.point_moments:
            yield ("moment", (x, m), f"m@{x:g}")

    def validate_domain(self, domain):
        a, b = domain
        for kind, data, label in self.components():
            if kind == "distributed":
                (l, r), _ = data
                ok = a - 1e-12 <= l < r <= b + 1e-12
            else:
                ok = a - 1e-12 <= data[0] <= b + 1e-12
            if not ok:
                raise ValueError(f"load component {label} outside the closed interval [{a}, {b}]")

    def pair_with(self, u, derivative_sides=None):
        """<u, f> for a piecewise field u with .value(x, side, order) and
        .integrate_poly_product; sides for point terms at jump locations come
        from `derivative_sides` (a {x: side} map, +1/-1)."""
        sides = derivative_sides or {}
        total = 0.0
        for (l, r), coeffs in self.distributed:
            total += u.integrate_poly_product(coeffs, l, r)
        for x, F in self.point_forces:
            total += F * u.value(x, side=sides.get(round(x, 12), +1), order=0)
        for x, m in self.point_moments:
            total += m * u.value(x, side=sides.get(round(x, 12), -1), order=1)
        return total


@dataclass(frozen=True)
class ComponentVerdict:
    label: str
    kind: str
    verdict: str          # "extends" | "unbounded"
    witness: str          # side used / criticality fact

    @property
    def extends(self):
        return self.verdict == "extends"


@dataclass
class AdmissibilityReport:
    components: list
    orthogonality_residuals: list
    admissible: bool

    def unbounded_labels(self):
        return [c.label for c in self.components if not c.extends]

    def to_json(self):
        return {
            "components": [
                {"label": c.label, "kind": c.kind, "verdict": c.verdict, "witness": c.witness}
                for c in self.components
            ],
            "orthogonality_residuals": list(self.orthogonality_residuals),
            "admissible": self.admissible,
        }


def _side_order_critical(report: CriticalityReport, x, side, order):
    rep = report.point(x)
    if rep is None:
        return False
    return rep.critical(float(order), side)


def _available_sides(report, x):
    a, b = report.domain
    if math.isclose(x, a, abs_tol=1e-12):
        return (RIGHT,)
    if math.isclose(x, b, abs_tol=1e-12):
        return (LEFT,)
    return (LEFT, RIGHT)


def extendability(component, profile: SpaceProfile, report: CriticalityReport) -> ComponentVerdict:
    """Verdict for a single ('kind', data, label) load component; m=2 only."""
    if profile.m != 2:
        raise NotImplementedError("extendability rules are derived for m = 2 only")
    kind, data, label = component
    if kind == "moment":
        x = data[0]
        return _point_verdict(report, x, order=0, kind=kind, label=label)
    if kind == "force":
        x = data[0]
        return _point_verdict(report, x, order=1, kind=kind, label=label)
    if kind == "distributed":
        (l, r), _ = data
        for x in sorted(report.points):
            if x < l - 1e-12 or x > r + 1e-12:
                continue
            touched = []
            if x > l + 1e-12:
                touched.append(LEFT)   # the span reaches x from the left
            if x < r - 1e-12:
                touched.append(RIGHT)  # and/or continues to the right
            for side in touched:
                if _side_order_critical(report, x, side, 2):
                    return ComponentVerdict(
                        label, kind, "unbounded", f"x={x:g} is order-2 critical on the {side} side"
                    )
        return ComponentVerdict(label, kind, "extends", "no touched order-2 critical point")
    raise ValueError(f"unknown component kind {kind!r}")


def _point_verdict(report, x, order, kind, label):
    sides = _available_sides(report, x)
    for side in sides:
        if not _side_order_critical(report, x, side, order):
            return ComponentVerdict(label, kind, "extends", f"{side} side of x={x:g} not order-{order} critical")
    return ComponentVerdict(
        label, kind, "unbounded", f"x={x:g} is order-{order} critical on every available side"
    )


def pairing_sides(load: Load, report: CriticalityReport):
    """Side map used to evaluate point terms of the dual pairing."""
    sides = {}
    for kind, data, label in load.components():
        if kind == "distributed":
            continue
        x = data[0]
        order = 0 if kind == "moment" else 1
        for side in _available_sides(report, x):
            if not _side_order_critical(report, x, side, order):
                sides[round(x, 12)] = -1 if side == LEFT else +1
                break
    return sides


def orthogonality(load: Load, profile: SpaceProfile, report: CriticalityReport | None = None):
    """Pairings <u0, f> over the zero-energy basis (exact polynomial algebra).

    Point terms at jump locations use the one-sided representative from the
    side where the component extends; evaluating at a jump of u0 without a
    well-defined side raises.
    """
    sides = pairing_sides(load, report) if report is not None else {}
    residuals = []
    for u0 in profile.zero_energy_basis:
        jump_pts = {round(x, 12) for x, _ in u0.jumps(0)} | {round(x, 12) for x, _ in u0.jumps(1)}
        for kind, data, label in load.components():
            if kind != "distributed" and round(data[0], 12) in jump_pts and round(data[0], 12) not in sides:
                raise ValueError(
                    f"component {label} sits on a jump of a zero-energy mode; side undetermined"
                )
        residuals.append(load.pair_with(u0, derivative_sides=sides))
    return residuals


def admissibility(load: Load, profile: SpaceProfile, report: CriticalityReport) -> AdmissibilityReport:
    load.validate_domain(report.domain)
    verdicts = [extendability(c, profile, report) for c in load.components()]
    if all(v.extends for v in verdicts):
        residuals = orthogonality(load, profile, report)
    else:
        residuals = []
    ok = all(v.extends for v in verdicts) and all(abs(r) <= RESIDUAL_TOL for r in residuals)
    return AdmissibilityReport(verdicts, residuals, ok)


# ---------------------------------------------------------------------------
# JSON wire format


def load_to_json(load: Load):
    return {
        "distributed": [{"span": [l, r], "poly": list(c)} for (l, r), c in load.distributed],
        "forces": [{"x": x, "F": F} for x, F in load.point_forces],
        "moments": [{"x": x, "m": m} for x, m in load.point_moments],
    }


def load_from_json(doc):
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        distributed = [((d["span"][0], d["span"][1]), tuple(d["poly"])) for d in doc.get("distributed", [])]
        forces = [(d["x"], d["F"]) for d in doc.get("forces", [])]
        moments = [(d["x"], d["m"]) for d in doc.get("moments", [])]
    except (KeyError, TypeError, IndexError) as e:
        raise ValueError(f"load JSON missing required field: {e}") from e
    return Load(distributed, forces, moments)
