"""Dual-route solver for the degenerate clamped beam (p = 2, m = 2).

The bending moment solves  min (1/2) integral M^2/w  over  {M : D^2 M + f = 0};
all feasible moments are  M_p + a + b x  with the jump bookkeeping fixed by
the load.  Finiteness of the objective forces M to vanish, to the integer
criticality order of each side, at every critical point; those are linear
constraints on (a, b).  An inconsistent constraint set is exactly the dual
signature of an inadmissible load.  The deflection is then recovered from
the constitutive law  D^2_mu u = -M/w  by exact double antiderivatives per
segment, glued by values at hinges and pinned by the retained boundary
conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .criticality import BOTH, LEFT, RIGHT, CriticalityReport, full_report
from .loads import Load, admissibility, extendability, pairing_sides
from .piecewise import AnchoredFn, PiecewisePoly, Term, poly_antiderivative, poly_derivative, poly_eval, poly_rebase
from .spaces import SpaceProfile, space_profile
from .weights import (
    Constant,
    IntegralResult,
    Power,
    Weight,
    drop_tiny_coeffs,
    inv_weighted_poly_integral,
    weighted_p_norm,
)

__all__ = [
    "InfeasibleDual",
    "BendingMoment",
    "BeamSolution",
    "particular_moment",
    "finiteness_constraints",
    "dual_solve",
    "build_deflection",
    "verify_solution",
    "solve_case",
]


class InfeasibleDual(Exception):
    """No feasible bending moment with finite complementary energy."""


@dataclass
class BendingMoment:
    poly: PiecewisePoly
    kinks: tuple            # (x, slope jump = -F)
    jumps: tuple            # (x, value jump = +m)
    affine: tuple | None    # (a, b) kernel coefficients, None before dual_solve
    dual_value: float | None = None
    constraints: list = field(default_factory=list)

    def value(self, x, side=+1, order=0):
        return self.poly.value(x, side=side, order=order)

    def with_affine(self, a, b, dual_value=None, constraints=None):
        shifted = self.poly.plus(PiecewisePoly([(self.poly.lo, self.poly.hi, np.array([a, b]))]))
        return BendingMoment(shifted, self.kinks, self.jumps, (a, b), dual_value, constraints or [])

    def to_json(self):
        return {
            "pieces": [{"span": [lo, hi], "poly": list(c)} for lo, hi, c in self.poly.pieces],
            "kinks": [{"x": x, "slope_jump": j} for x, j in self.kinks],
            "jumps": [{"x": x, "value_jump": j} for x, j in self.jumps],
            "affine": list(self.affine) if self.affine else None,
            "dual_value": self.dual_value,
        }


class PiecewiseDeflection:
    """Deflection as anchored power/log functions per segment."""

    def __init__(self, pieces):
        # pieces: (lo, hi, AnchoredFn)
        self.pieces = sorted(pieces, key=lambda t: t[0])

    @property
    def lo(self):
        return self.pieces[0][0]

    @property
    def hi(self):
        return self.pieces[-1][1]

    def piece_at(self, x, side=+1):
        for lo, hi, fn in self.pieces:
            if lo < x < hi:
                return lo, hi, fn
        for lo, hi, fn in self.pieces:
            if side > 0 and math.isclose(x, lo, abs_tol=1e-12):
                return lo, hi, fn
            if side < 0 and math.isclose(x, hi, abs_tol=1e-12):
                return lo, hi, fn
        if x <= self.lo + 1e-12:
            return self.pieces[0]
        if x >= self.hi - 1e-12:
            return self.pieces[-1]
        raise ValueError(f"x={x} outside deflection domain")

    def value(self, x, side=+1, order=0):
        _, _, fn = self.piece_at(x, side)
        for _ in range(order):
            fn = fn.derivative()
        return fn.eval_at(x)

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self.value(xi) for xi in xs])
        return out if np.ndim(x) else float(out[0])

    def integrate_poly_product(self, coeffs, lo=None, hi=None):
        lo = self.lo if lo is None else max(lo, self.lo)
        hi = self.hi if hi is None else min(hi, self.hi)
        total = 0.0
        for plo, phi, fn in self.pieces:
            l, h = max(lo, plo), min(hi, phi)
            if h <= l:
                continue
            local = AnchoredFn.from_poly(np.asarray(coeffs, dtype=float), fn.anchor, fn.side)
            total += fn.times(local).integrate(l, h)
        return total

    def jumps(self, order=0, tol=1e-9):
        out = []
        for (l1, h1, _), (l2, h2, _) in zip(self.pieces, self.pieces[1:]):
            x = h1
            try:
                j = self.value(x, +1, order) - self.value(x, -1, order)
            except (ValueError, OverflowError):
                out.append((x, math.inf))
                continue
            if not math.isfinite(j) or abs(j) > tol:
                out.append((x, j))
        return out

    def as_weight_pieces(self):
        return [(lo, hi, fn) for lo, hi, fn in self.pieces]


@dataclass
class BeamSolution:
    deflection: PiecewiseDeflection
    curvature: PiecewiseDeflection       # v2 = -M/w per segment
    moment: BendingMoment
    jump_records: list                   # (x, order of the jumping derivative)
    zero_energy_freedom: list
    verification: dict = field(default_factory=dict)

    def to_json(self, samples=0):
        doc = {
            "jump_records": [{"x": x, "order": k} for x, k in self.jump_records],
            "zero_energy_dim": len(self.zero_energy_freedom),
            "dual_value": self.moment.dual_value,
            "verification": self.verification,
        }
        return doc


# ---------------------------------------------------------------------------
# particular moment


def particular_moment(load: Load, interval) -> BendingMoment:
    """Piecewise-polynomial M_p with D^2 M_p + f = 0, M_p(a-) = M_p'(a-) = 0.

    Distributed densities bend (M'' = -q), point forces kink the slope by -F
    and point moments jump the value by +m.
    """
    a, b = interval.a_minus, interval.a_plus
    load.validate_domain((a, b))
    cuts = {a, b}
    for (l, r), _ in load.distributed:
        cuts |= {l, r}
    cuts |= {x for x, _ in load.point_forces}
    cuts |= {x for x, _ in load.point_moments}
    cuts = sorted(cuts)
    forces = {round(x, 12): F for x, F in load.point_forces}
    moments = {round(x, 12): m for x, m in load.point_moments}

    pieces = []
    val, slope = 0.0, 0.0
    for l, r in zip(cuts, cuts[1:]):
        slope += -forces.get(round(l, 12), 0.0)
        val += moments.get(round(l, 12), 0.0)
        # curvature on this span: M'' = -q
        q = np.zeros(1)
        for (dl, dr), coeffs in load.distributed:
            if dl <= l + 1e-12 and r - 1e-12 <= dr:
                cc = np.zeros(max(len(q), len(coeffs)))
                cc[: len(q)] += q
                cc[: len(coeffs)] += coeffs
                q = cc
        dd = -np.asarray(q, dtype=float)
        m1 = poly_antiderivative(dd)   # slope contribution, zero at x=0
        m0 = poly_antiderivative(m1)
        # fix constants so that M(l) = val, M'(l) = slope
        c1 = slope - poly_eval(m1, l)
        c0 = val - (poly_eval(m0, l) + c1 * l)
        coeffs = m0.copy()
        if len(coeffs) < 2:
            coeffs = np.pad(coeffs, (0, 2 - len(coeffs)))
        coeffs[0] += c0
        coeffs[1] += c1
        pieces.append((l, r, coeffs))
        val = poly_eval(coeffs, r)
        slope = poly_eval(poly_derivative(coeffs), r)
    return BendingMoment(
        PiecewisePoly(pieces),
        kinks=tuple((x, -F) for x, F in load.point_forces),
        jumps=tuple((x, m) for x, m in load.point_moments),
        affine=None,
    )


# ---------------------------------------------------------------------------
# finiteness constraints


@dataclass(frozen=True)
class MomentConstraint:
    x0: float
    side: str      # "left" | "right"
    order: int     # D^order M (x0, side) = 0

    def describe(self):
        return f"D^{self.order} M({self.x0:g}{'-' if self.side == LEFT else '+'}) = 0"


def finiteness_constraints(w: Weight, report: CriticalityReport):
    """Vanishing conditions forced on M by finite complementary energy.

    At each side-critical point the moment must vanish together with its
    derivatives up to the side's integer criticality order (hinge at order 0,
    full cut at order 1, and so on).
    """
    out = []
    a, c_b = report.domain
    for x0, rep in sorted(report.points.items()):
        for side, sr in rep.sides.items():
            orders = [int(round(al)) for al, v in sr.verdicts.items() if v and float(al).is_integer()]
            if not orders:
                continue
            top = max(orders)
            for j in range(top + 1):
                out.append(MomentConstraint(x0, side, j))
    for l, r in w.zero_spans():
        # zero width forces the moment to vanish along the whole span
        out.append(MomentConstraint(l, RIGHT, 0))
        out.append(MomentConstraint(l, RIGHT, 1))
        out.append(MomentConstraint(r, LEFT, 0))
        out.append(MomentConstraint(r, LEFT, 1))
    return out


def _constraint_rows(mp: BendingMoment, constraints):
    """Linear system A (a,b)^T = rhs expressing the vanishing conditions."""
    rows, rhs, labels = [], [], []
    for c in constraints:
        sgn = -1 if c.side == LEFT else +1
        base = mp.value(c.x0, side=sgn, order=c.order)
        if c.order == 0:
            rows.append([1.0, c.x0])
        elif c.order == 1:
            rows.append([0.0, 1.0])
        else:
            rows.append([0.0, 0.0])
        rhs.append(-base)
        labels.append(c.describe())
    return np.array(rows, dtype=float), np.array(rhs, dtype=float), labels


def dual_solve(w: Weight, load: Load, profile: SpaceProfile, report: CriticalityReport | None = None) -> BendingMoment:
    """Minimize the complementary energy over feasible bending moments.

    Raises InfeasibleDual when the vanishing constraints admit no (a, b) --
    which happens exactly when the load violates admissibility.
    """
    if profile.m != 2 or profile.p != 2:
        raise NotImplementedError("the dual pipeline is implemented for m = 2, p = 2")
    if report is None:
        report = full_report(w, 2.0, (0.0, 1.0, 2.0))
    bad = [
        c for c in (extendability(comp, profile, report) for comp in load.components()) if not c.extends
    ]
    if bad:
        raise InfeasibleDual(
            "unbounded load components: " + "; ".join(f"{c.label} ({c.witness})" for c in bad)
        )
    mp = particular_moment(load, w.domain)
    constraints = finiteness_constraints(w, report)
    A, rhs, labels = _constraint_rows(mp, constraints)

    if len(A) == 0:
        z, freedom = np.zeros(2), np.eye(2)
    else:
        z, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        resid = A @ z - rhs
        scale = 1.0 + float(np.max(np.abs(rhs))) if len(rhs) else 1.0
        if np.max(np.abs(resid)) > 1e-9 * scale:
            worst = int(np.argmax(np.abs(resid)))
            raise InfeasibleDual(
                f"moment constraints inconsistent (residual {resid[worst]:.3e} at {labels[worst]}); "
                "the load is not orthogonal to the zero-energy displacements"
            )
        _, s, vt = np.linalg.svd(A)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
        freedom = vt[rank:]

    if len(freedom):
        z = _minimize_over_freedom(w, mp, z, freedom)
    a, b = float(z[0]), float(z[1])
    candidate = mp.with_affine(a, b, constraints=[c.describe() for c in constraints])
    _snap_moment(candidate)
    jstar = complementary_energy(w, candidate)
    if not jstar.finite:
        raise InfeasibleDual(f"minimizer has divergent complementary energy: {jstar.diagnostic}")
    candidate.dual_value = jstar.value
    return candidate


def _snap_moment(moment: BendingMoment, rel=1e-12):
    """Zero monomial coefficients that are float residue of the constrained
    solve (a segment forced to vanish identically leaves ~1e-16 crumbs that
    would read as fake singular terms against a degenerate weight)."""
    gmax = max((np.max(np.abs(c)) if len(c) else 0.0) for _, _, c in moment.poly.pieces)
    if gmax <= 0:
        return
    for _, _, c in moment.poly.pieces:
        c[np.abs(c) < rel * gmax] = 0.0


def _minimize_over_freedom(w: Weight, mp: BendingMoment, z0, freedom):
    """Exact quadratic minimization of J* over z0 + span(freedom)."""
    dirs = [np.array([v[0], v[1]]) for v in freedom]
    base_pieces = mp.with_affine(z0[0], z0[1]).poly
    G = np.zeros((len(dirs), len(dirs)))
    g = np.zeros(len(dirs))
    for i, di in enumerate(dirs):
        for j, dj in enumerate(dirs):
            if j < i:
                continue
            val = 0.0
            for lo, hi, _ in base_pieces.pieces:
                prod = np.polynomial.polynomial.polymul(np.array(di), np.array(dj))
                val += inv_weighted_poly_integral(w, (lo, hi), prod).expect("Gram entry")
            G[i, j] = G[j, i] = val
        lin = 0.0
        for lo, hi, c in base_pieces.pieces:
            prod = np.polynomial.polynomial.polymul(c, np.array(di))
            lin += inv_weighted_poly_integral(w, (lo, hi), prod).expect("Gram linear term")
        g[i] = lin
    t = np.linalg.solve(G, -g)
    return np.asarray(z0, dtype=float) + sum(ti * di for ti, di in zip(t, dirs))


def complementary_energy(w: Weight, moment: BendingMoment) -> IntegralResult:
    """J*(M) = (1/2) integral M^2 / w dx, exact per weight segment."""
    total = IntegralResult.of(0.0)
    for lo, hi, c in moment.poly.pieces:
        sq = np.polynomial.polynomial.polymul(c, c)
        total = total + inv_weighted_poly_integral(w, (lo, hi), sq)
        if not total.finite:
            return total
    return IntegralResult(total.finite, 0.5 * total.value, 0.5 * total.error_bound, total.diagnostic)


# ---------------------------------------------------------------------------
# deflection reconstruction


def _curvature_pieces(w: Weight, moment: BendingMoment):
    """v2 = -M/w as anchored functions on the common refinement of pieces."""
    cuts = sorted(set(moment.poly.breakpoints()) | set(w.breakpoints()))
    out = []
    for l, h in zip(cuts, cuts[1:]):
        if h <= l + 1e-14:
            continue
        mid = 0.5 * (l + h)
        _, _, mcoef = moment.poly.piece_at(mid)
        seg = w.segment_at(mid)
        form = seg.form
        if isinstance(form, Power):
            anchor = form.center
            side = 1 if mid > anchor else -1
            local = drop_tiny_coeffs(poly_rebase(mcoef, anchor))
            terms = [
                Term(-v * (side ** j) / form.scale, j - form.exponent, 0)
                for j, v in enumerate(local)
                if v != 0.0
            ]
            out.append((l, h, AnchoredFn(anchor, side, terms)))
        elif isinstance(form, Constant):
            if form.c == 0.0:
                out.append((l, h, AnchoredFn(l, +1, [])))  # moment vanishes there
            else:
                out.append((l, h, AnchoredFn.from_poly(-np.asarray(mcoef) / form.c, l, +1)))
        else:
            raise NotImplementedError(
                f"deflection reconstruction needs power/constant segments, got {type(form).__name__}"
            )
    return out


def build_deflection(w: Weight, moment: BendingMoment, profile: SpaceProfile, report=None) -> BeamSolution:
    """Integrate -M/w twice into the deflection satisfying the retained BCs.

    The domain splits at value-jump points (continuity -1) into components;
    hinge points (continuity 0) glue values but leave the slope free.  Each
    maximal smooth run carries one affine correction; runs are chained by
    exact value/slope matching at interior noncritical breakpoints, and the
    remaining coefficients solve the BC + hinge-gluing system (least squares;
    a residual beyond 1e-9 is an internal invariant violation).
    """
    if moment.dual_value is None:
        raise ValueError("dual_solve the moment first")
    if report is None:
        report = full_report(w, 2.0, (0.0, 1.0, 2.0))
    a, b = w.domain.a_minus, w.domain.a_plus
    curvature = _curvature_pieces(w, moment)

    jump_pts = sorted(x for x, k in profile.continuity.items() if a < x < b and k < 0)
    hinge_pts = sorted(x for x, k in profile.continuity.items() if a < x < b and k == 0)

    # integrate each curvature piece twice (pure antiderivatives)
    raw = [(l, h, fn.antiderivative().antiderivative()) for l, h, fn in curvature]

    # chain pieces: match value and slope at interior cuts that are neither
    # jumps nor hinges; a chain = or run of pieces sharing one affine dof
    chains = []
    current = []
    split_at = set(round(x, 12) for x in jump_pts + hinge_pts)
    for piece in raw:
        if current and round(current[-1][1], 12) == round(piece[0], 12) and round(piece[0], 12) not in split_at:
            current.append(piece)
        else:
            if current:
                chains.append(current)
            current = [piece]
    if current:
        chains.append(current)

    # inside a chain, add per-piece affine offsets for C^1 matching
    chained = []
    for chain in chains:
        adjusted = [chain[0]]
        for (l2, h2, f2) in chain[1:]:
            l1, h1, f1 = adjusted[-1]
            xm = h1
            v1, s1 = f1.eval_at(xm), f1.derivative().eval_at(xm)
            v2, s2 = f2.eval_at(xm), f2.derivative().eval_at(xm)
            # f2 + alpha + beta x matches value & slope at xm
            beta = s1 - s2
            alpha = v1 - v2 - beta * xm
            adjusted.append((l2, h2, f2.plus_poly(np.array([alpha, beta]))))
        chained.append(adjusted)

    # unknowns: one affine pair per chain; conditions: retained BCs + hinge
    # value gluing between neighbouring chains within a component
    nch = len(chained)
    rows, rhs = [], []

    def chain_eval(ci, x, side, order):
        pieces = chained[ci]
        fn = None
        for l, h, f in pieces:
            if (l < x < h) or (side > 0 and math.isclose(x, l, abs_tol=1e-12)) or (
                side < 0 and math.isclose(x, h, abs_tol=1e-12)
            ):
                fn = f
                break
        if fn is None:
            fn = pieces[0][2] if x <= pieces[0][0] + 1e-12 else pieces[-1][2]
        for _ in range(order):
            fn = fn.derivative()
        return fn.eval_at(x)

    def add_condition(terms, value):
        # terms: list of (chain index, x, order, sign, side)
        row = np.zeros(2 * nch)
        base = 0.0
        for ci, x, order, sign, side in terms:
            if order == 0:
                row[2 * ci] += sign
                row[2 * ci + 1] += sign * x
            elif order == 1:
                row[2 * ci + 1] += sign
            base += sign * chain_eval(ci, x, side, order)
        rows.append(row)
        rhs.append(value - base)

    def chain_index_at(x, side):
        for ci, ch in enumerate(chained):
            lo, hi = ch[0][0], ch[-1][1]
            if lo < x < hi:
                return ci
            if side > 0 and math.isclose(x, lo, abs_tol=1e-12):
                return ci
            if side < 0 and math.isclose(x, hi, abs_tol=1e-12):
                return ci
        raise ValueError(f"no chain at x={x}")

    for end, x_end, side in (("a_minus", a, +1), ("a_plus", b, -1)):
        for k in profile.traces[end]:
            ci = chain_index_at(x_end, side)
            add_condition([(ci, x_end, k, +1.0, side)], 0.0)
    for x in hinge_pts:
        cl = chain_index_at(x, -1)
        cr = chain_index_at(x, +1)
        if cl != cr:
            # u continuous across a hinge: value from the right equals value
            # from the left
            add_condition([(cr, x, 0, +1.0, +1), (cl, x, 0, -1.0, -1)], 0.0)

    if rows:
        Amat = np.array(rows)
        rvec = np.array(rhs)
        sol, *_ = np.linalg.lstsq(Amat, rvec, rcond=None)
        resid = Amat @ sol - rvec
        if np.max(np.abs(resid)) > 1e-9 * (1.0 + np.max(np.abs(rvec))):
            raise RuntimeError(
                "deflection gluing system inconsistent; dual solve should have caught this"
            )
    else:
        sol = np.zeros(2 * nch)

    final_pieces = []
    for ci, ch in enumerate(chained):
        alpha, beta = sol[2 * ci], sol[2 * ci + 1]
        for l, h, f in ch:
            final_pieces.append((l, h, f.plus_poly(np.array([alpha, beta]))))
    deflection = PiecewiseDeflection(final_pieces)

    jump_records = [(x, 0) for x in jump_pts] + [(x, 1) for x in hinge_pts]
    return BeamSolution(
        deflection=deflection,
        curvature=PiecewiseDeflection(curvature),
        moment=moment,
        jump_records=jump_records,
        zero_energy_freedom=list(profile.zero_energy_basis),
        verification={},
    )


# ---------------------------------------------------------------------------
# verification


def _test_bumps(domain, n=50, seed=7):
    """Polynomial test functions vanishing to 2nd order at their support ends."""
    a, b = domain
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        l = a + (b - a) * rng.uniform(0.0, 0.45)
        r = b - (b - a) * rng.uniform(0.0, 0.45)
        core = rng.normal(size=rng.integers(1, 4))
        # (x-l)^3 (r-x)^3 * core(x)
        lead = np.polynomial.polynomial.polymul(
            np.polynomial.polynomial.polypow(np.array([-l, 1.0]), 3),
            np.polynomial.polynomial.polypow(np.array([r, -1.0]), 3),
        )
        coeffs = np.polynomial.polynomial.polymul(lead, core)
        scale = max(abs(poly_eval(coeffs, np.linspace(l, r, 33))).max(), 1e-12)
        out.append((l, r, coeffs / scale))
    return out


def equilibrium_residual(moment: BendingMoment, load: Load, domain, n=50, seed=7):
    """sup over test functions of |integral M phi'' dx + <phi, f>|.

    D^2 M = -f distributionally, so the weak form integral M phi'' equals
    -<phi, f> for compactly supported phi.
    """
    worst = 0.0
    scale = 1.0
    for l, r, coeffs in _test_bumps(domain, n=n, seed=seed):
        phi = PiecewisePoly([(l, r, coeffs)])
        phi2 = poly_derivative(poly_derivative(coeffs))
        lhs = moment.poly.integrate_poly_product(phi2, l, r)
        pair = load.pair_with(_BumpField(l, r, coeffs))
        worst = max(worst, abs(lhs + pair))
        scale = max(scale, abs(pair), abs(lhs))
    return worst, scale


class _BumpField:
    """Adapter giving a single-piece polynomial the pairing interface."""

    def __init__(self, lo, hi, coeffs):
        self.lo, self.hi, self.coeffs = lo, hi, np.asarray(coeffs, dtype=float)

    def value(self, x, side=+1, order=0):
        if not (self.lo - 1e-12 <= x <= self.hi + 1e-12):
            return 0.0
        c = self.coeffs
        for _ in range(order):
            c = poly_derivative(c)
        return float(poly_eval(c, x))

    def integrate_poly_product(self, coeffs, lo=None, hi=None):
        lo = self.lo if lo is None else max(lo, self.lo)
        hi = self.hi if hi is None else min(hi, self.hi)
        if hi <= lo:
            return 0.0
        prod = np.polynomial.polynomial.polymul(self.coeffs, np.asarray(coeffs, dtype=float))
        anti = np.polynomial.polynomial.polyint(prod)
        return float(poly_eval(anti, hi) - poly_eval(anti, lo))


def verify_solution(w: Weight, load: Load, moment: BendingMoment, solution: BeamSolution,
                    profile: SpaceProfile, report: CriticalityReport | None = None, seed=7):
    """Duality gap, equilibrium, boundary and constitutive residuals."""
    if report is None:
        report = full_report(w, 2.0, (0.0, 1.0, 2.0))
    jstar = moment.dual_value
    # primal energy of the constructed field: J(v2) = (1/2) integral w v2^2
    jv = 0.5 * weighted_p_norm(w, solution.curvature.as_weight_pieces(), 2) ** 2
    sides = pairing_sides(load, report)
    pairing = load.pair_with(solution.deflection, derivative_sides=sides)
    gap = abs(jv - pairing + jstar)

    eq, eq_scale = equilibrium_residual(moment, load, (w.domain.a_minus, w.domain.a_plus), seed=seed)

    bc_residuals = {}
    for end, x_end, side in (("a_minus", w.domain.a_minus, +1), ("a_plus", w.domain.a_plus, -1)):
        for k in profile.traces[end]:
            bc_residuals[f"{'u' + chr(39) * k}({'a-' if end == 'a_minus' else 'a+'})"] = (
                solution.deflection.value(x_end, side=side, order=k)
            )

    const_res = 0.0
    for lo, hi, fn in solution.curvature.pieces:
        xs = np.linspace(lo + (hi - lo) * 0.02, hi - (hi - lo) * 0.02, 17)
        for x in xs:
            wv = w(float(x))
            if wv <= 0:
                continue
            v2 = fn.eval_at(x)
            const_res = max(const_res, abs(v2 + moment.value(x) / wv) / (1.0 + abs(v2)))

    record = {
        "dual_value": jstar,
        "primal_energy_of_v2": jv,
        "load_pairing": pairing,
        "duality_gap": gap,
        "duality_gap_rel": gap / max(1.0, abs(jstar)),
        "equilibrium_residual": eq,
        "equilibrium_scale": eq_scale,
        "bc_residuals": bc_residuals,
        "constitutive_residual": const_res,
    }
    solution.verification = record
    return record


def solve_case(w: Weight, load: Load, seed=7):
    """Full pipeline: classify -> profile -> dual solve -> deflection -> verify."""
    report = full_report(w, 2.0, (0.0, 1.0, 2.0))
    profile = space_profile(report, 2)
    moment = dual_solve(w, load, profile, report)
    solution = build_deflection(w, moment, profile, report)
    verify_solution(w, load, moment, solution, profile, report, seed=seed)
    return report, profile, moment, solution
