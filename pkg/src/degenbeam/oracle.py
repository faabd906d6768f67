"""Brute-force primal verification by a Ritz method on cubic B-splines.

The primal energy  (1/2) integral w |u''|^2 - <u, f>  is minimized over
cubic splines with value and slope pinned to zero at both ends, a subspace
of the closure of the smooth compactly supported functions.  Every Ritz
value upper-bounds the primal infimum, hence sits above -J*(M) by weak
duality, and dyadically refined knot vectors give nested spaces so the
values decrease monotonically.

Knot vectors adapt to the problem: a double knot at each interior
point-moment location and degeneration center (the optimal curvature jumps
there) and geometric layers toward each degeneration center (the optimal
curvature blows up like a negative power against the vanishing weight).
Spline pieces are kept in cell-local coordinates throughout; global
monomials on deeply graded cells would cancel catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .loads import Load, admissibility
from .piecewise import AnchoredFn, Term
from .weights import Constant, Power, Weight

__all__ = [
    "RitzProblem",
    "ritz_energy",
    "convergence_sweep",
    "spline_basis",
    "knot_vector",
    "pair_load_with_spline",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _bspline_value(t, x):
    """Cubic B-spline on local knots t[0..4] via Cox-de Boor (multiplicities ok)."""

    def N(i, k, xx):
        if k == 0:
            return 1.0 if t[i] <= xx < t[i + 1] else 0.0
        acc = 0.0
        if t[i + k] > t[i]:
            acc += (xx - t[i]) / (t[i + k] - t[i]) * N(i, k - 1, xx)
        if t[i + k + 1] > t[i + 1]:
            acc += (t[i + k + 1] - xx) / (t[i + k + 1] - t[i + 1]) * N(i + 1, k - 1, xx)
        return acc

    return N(0, 3, x)


class CellSpline:
    """Piecewise cubic in cell-local coordinates: on cell (lo, hi) the value
    is sum q_k (x - lo)^k.  Exactly the representation that stays well-scaled
    on geometrically graded meshes."""

    def __init__(self, cells, data):
        self.cells = cells          # shared list of (lo, hi)
        self.data = data            # cell index -> ascending local coeffs

    @property
    def lo(self):
        return min(self.cells[i][0] for i in self.data)

    @property
    def hi(self):
        return max(self.cells[i][1] for i in self.data)

    def value(self, x, order=0, side=+1):
        """Evaluate the order-th derivative; zero outside the support.

        `side` picks the representative at cell joints where the spline (or
        a derivative) jumps: +1 reads the right cell, -1 the left one.
        """
        chosen = None
        for i, (lo, hi) in enumerate(self.cells):
            if i not in self.data or x < lo - 1e-14 or x > hi + 1e-14:
                continue
            if side > 0:
                chosen = i
                if x < hi - 1e-14:
                    break
            else:
                if x > lo + 1e-14:
                    chosen = i
                    break
                if chosen is None:
                    chosen = i
        if chosen is None:
            return 0.0
        lo, _ = self.cells[chosen]
        q = self.data[chosen]
        for _ in range(order):
            q = _dloc(q)
        t = x - lo
        return float(sum(c * t ** k for k, c in enumerate(q)))

    def scaled(self, factor):
        return CellSpline(self.cells, {i: q * factor for i, q in self.data.items()})

    def plus(self, other):
        data = {i: q.copy() for i, q in self.data.items()}
        for i, q in other.data.items():
            if i in data:
                n = max(len(data[i]), len(q))
                c = np.zeros(n)
                c[: len(data[i])] += data[i]
                c[: len(q)] += q
                data[i] = c
            else:
                data[i] = q.copy()
        return CellSpline(self.cells, data)


def _dloc(q):
    q = np.asarray(q, dtype=float)
    if len(q) <= 1:
        return np.zeros(1)
    return q[1:] * np.arange(1, len(q))


def _intloc(q):
    q = np.asarray(q, dtype=float)
    out = np.zeros(len(q) + 1)
    out[1:] = q / np.arange(1, len(q) + 1)
    return out


def knot_vector(w: Weight, load: Load, n: int, profile=None):
    """Interior knots for n base cells mirroring the space structure.

    Uniform grid, plus per interior feature point: multiplicity 2 at
    point-moment locations (the optimal curvature jumps), 3 at hinge points
    (a slope step belongs to the space), 4 at full cuts (a value step does),
    and geometric layers toward every degeneration center (the curvature
    blows up against the vanishing weight).  Nested under dyadic n -> 2n.
    """
    if profile is None:
        from .criticality import full_report
        from .spaces import space_profile

        profile = space_profile(full_report(w, 2.0, (0.0, 1.0, 2.0)), 2)
    a, b = w.domain.a_minus, w.domain.a_plus
    h = (b - a) / n
    pts = set(round(float(x), 14) for x in (a + h * np.arange(0, n + 1)))
    mult = {}
    for x, _ in load.point_moments:
        if a + 1e-12 < x < b - 1e-12:
            mult[round(x, 14)] = max(mult.get(round(x, 14), 1), 2)
    for x, kbar, status in profile.jump_atoms:
        if status != "member" or not (a + 1e-12 < x < b - 1e-12):
            continue
        need = 3 if kbar == 1 else 4
        mult[round(x, 14)] = max(mult.get(round(x, 14), 1), need)
    centers = w.degeneration_centers()
    special = sorted(set(centers) | set(mult))
    for c in centers:
        gaps = [abs(c - s) for s in special if abs(c - s) > 1e-12]
        reach = min([1.0, (b - a) / 4] + [g / 2 for g in gaps])
        layers = min(2 * int(math.ceil(math.log2(max(n, 2)))), 12)
        for j in range(0, layers + 1):
            for x in (c - reach * 2.0 ** -j, c + reach * 2.0 ** -j):
                if a + 1e-12 < x < b - 1e-12:
                    pts.add(round(x, 14))
        if a + 1e-12 < c < b - 1e-12:
            pts.add(round(c, 14))
            mult.setdefault(round(c, 14), 2)
    out = []
    for x in sorted(pts | set(mult)):
        out.extend([x] * mult.get(x, 1))
    # phantom uniform knots beyond the ends keep the boundary windows simple
    return np.array([a - 3 * h, a - 2 * h, a - h] + out + [b + h, b + 2 * h, b + 3 * h])


def _cells_from_knots(knots):
    cells = []
    for lo, hi in zip(knots, knots[1:]):
        if hi - lo > 1e-14:
            cells.append((float(lo), float(hi)))
    return cells


def _window_spline(knots, i, cells, cell_index):
    """B-spline of window i as a CellSpline (local Vandermonde fit per cell)."""
    t = knots[i : i + 5]
    data = {}
    # strictly interior samples: at repeated knots the spline may jump and
    # the Cox-de Boor recursion would return the wrong one-sided limit
    xs_norm = np.array([0.125, 0.375, 0.625, 0.875])
    vander = np.vander(xs_norm, 4, increasing=True)
    for seg in range(4):
        lo, hi = t[seg], t[seg + 1]
        if hi - lo < 1e-14:
            continue
        h = hi - lo
        ys = np.array([_bspline_value(t, lo + s * h) for s in xs_norm])
        qnorm = np.linalg.solve(vander, ys)
        qloc = qnorm / h ** np.arange(4)
        idx = cell_index[(round(lo, 14), round(hi, 14))]
        if idx in data:
            data[idx] = data[idx] + qloc
        else:
            data[idx] = qloc
    return CellSpline(cells, data)


def spline_basis(knots):
    """Cubic splines spanning {u : u = u' = 0 at both ends} on the knots.

    Interior windows enter as-is; of the three boundary-active windows per
    side only the value-and-slope-free combination survives, leaving the
    end curvature unconstrained."""
    cells = _cells_from_knots(knots)
    cell_index = {(round(lo, 14), round(hi, 14)): i for i, (lo, hi) in enumerate(cells)}
    a, b = knots[3], knots[-4]
    windows = [_window_spline(knots, i, cells, cell_index) for i in range(len(knots) - 4)]
    # restrict to the domain cells
    dom_ids = {i for i, (lo, hi) in enumerate(cells) if lo >= a - 1e-14 and hi <= b + 1e-14}
    windows = [CellSpline(cells, {i: q for i, q in g.data.items() if i in dom_ids}) for g in windows]

    def combo(members, x_end):
        rows = np.array(
            [[g.value(x_end, 0) for g in members], [g.value(x_end, 1) for g in members]]
        )
        _, _, vt = np.linalg.svd(rows)
        vec = vt[-1]
        out = None
        for cf, g in zip(vec, members):
            piece = g.scaled(cf)
            out = piece if out is None else out.plus(piece)
        return out

    basis = [combo(windows[0:3], a)]
    basis.extend(windows[3:-3])
    basis.append(combo(windows[-3:], b))
    return [g for g in basis if g is not None and g.data]


# ---------------------------------------------------------------------------
# exact / near-exact cell integration against the weight


def _cell_weight_integral(w: Weight, lo, hi, qloc):
    """integral over (lo,hi) of (sum q_k (x-lo)^k) * w(x) dx.

    Exact anchored integration when a power center sits on or near the cell;
    16-point Gauss-Legendre otherwise (the weight is then analytic on the
    cell and the rule is machine-exact for these widths)."""
    total = 0.0
    h = hi - lo
    for l, r, seg in w.overlaps(lo, hi):
        form = seg.form
        if isinstance(form, Constant):
            q = _intloc(qloc)
            tl, tr = l - lo, r - lo
            total += form.c * float(
                sum(c * (tr ** k - tl ** k) for k, c in enumerate(q) if k)
            )
            continue
        if isinstance(form, Power):
            c0, gamma, scale = form.center, form.exponent, form.scale
            dist = min(abs(l - c0), abs(r - c0))
            if dist <= 4.0 * h or gamma == 0.0:
                # rebase the local polynomial around the center: the shift
                # c0 - lo is cell-sized, so the binomials stay well-scaled
                side = 1 if 0.5 * (l + r) > c0 else -1
                shift = c0 - lo  # x - lo = (x - c0) + (c0 - lo)
                local = _rebase_local(qloc, shift, side)
                terms = [Term(scale * v, k + gamma, 0) for k, v in enumerate(local) if v != 0.0]
                total += AnchoredFn(c0, side, terms).integrate(l, r)
            else:
                mid, half = 0.5 * (l + r), 0.5 * (r - l)
                xs = mid + half * _GL_NODES
                ts = xs - lo
                vals = np.zeros_like(xs)
                for k, qc in enumerate(qloc):
                    vals += qc * ts ** k
                total += float(np.sum(_GL_WEIGHTS * vals * scale * np.abs(xs - c0) ** gamma) * half)
            continue
        raise NotImplementedError(
            f"Ritz assembly supports power/constant weight segments, got {type(form).__name__}"
        )
    return total


def _rebase_local(qloc, shift, side):
    """Coefficients of sum q_k (s*sgn + shift)^k in powers of s = |x - c0|.

    With t = x - lo = (x - c0) + shift and x - c0 = side * s.
    """
    out = np.zeros(len(qloc))
    for k, qc in enumerate(qloc):
        if qc == 0.0:
            continue
        for j in range(k + 1):
            out[j] += qc * math.comb(k, j) * (side ** j) * (shift ** (k - j))
    return out


# ---------------------------------------------------------------------------
# load pairing


def pair_load_with_spline(load: Load, g: CellSpline):
    """<g, f>: distributed terms by exact per-cell integration, point terms by
    local evaluation (two-sided equal: the spline is at least C^1)."""
    total = 0.0
    for (l, r), coeffs in load.distributed:
        for i, (clo, chi) in enumerate(g.cells):
            if i not in g.data:
                continue
            a, b = max(l, clo), min(r, chi)
            if b <= a:
                continue
            # density in local coordinates of the cell
            qd = _shift_global_to_local(coeffs, clo)
            prod = np.polynomial.polynomial.polymul(qd, g.data[i])
            anti = _intloc(prod)
            ta, tb = a - clo, b - clo
            total += float(sum(c * (tb ** k - ta ** k) for k, c in enumerate(anti) if k))
    for x, F in load.point_forces:
        total += F * g.value(x, 0)
    for x, m in load.point_moments:
        total += m * g.value(x, 1)
    return total


def _shift_global_to_local(coeffs, lo):
    """q(x) -> coefficients in t = x - lo (densities are low-degree, small)."""
    out = np.zeros(len(coeffs))
    for k, c in enumerate(coeffs):
        for j in range(k + 1):
            out[j] += c * math.comb(k, j) * lo ** (k - j)
    return out


# ---------------------------------------------------------------------------
# assembly and solve


@dataclass
class RitzProblem:
    weight: Weight
    load: Load
    n: int
    lam: float
    stiffness: np.ndarray
    load_vector: np.ndarray
    basis: list = field(repr=False, default_factory=list)


def _assemble(w: Weight, load: Load, n: int):
    basis = spline_basis(knot_vector(w, load, n))
    nb = len(basis)
    second = [{i: _dloc(_dloc(q)) for i, q in g.data.items()} for g in basis]
    cells = basis[0].cells
    by_cell = {}
    for bi, sec in enumerate(second):
        for ci in sec:
            by_cell.setdefault(ci, []).append(bi)
    K = np.zeros((nb, nb))
    for ci, members in by_cell.items():
        lo, hi = cells[ci]
        for ii, bi in enumerate(members):
            for bj in members[ii:]:
                prod = np.polynomial.polynomial.polymul(second[bi][ci], second[bj][ci])
                val = _cell_weight_integral(w, lo, hi, prod)
                K[bi, bj] += val
                if bi != bj:
                    K[bj, bi] += val
    F = np.array([pair_load_with_spline(load, g) for g in basis])
    return basis, K, F


def ritz_energy(w: Weight, load: Load, n: int, lam: float | None = None, check_admissible=True):
    """Minimize the discrete primal energy; returns the (unregularized)
    energy at the regularized minimizer plus the coefficient record.

    Degenerate weights make the stiffness singular by design; lam defaults
    to 1e-12 * trace / n of the diagonally scaled stiffness and only steers
    the pseudo-solve.
    """
    if check_admissible:
        from .criticality import full_report
        from .spaces import space_profile

        report = full_report(w, 2.0, (0.0, 1.0, 2.0))
        profile = space_profile(report, 2)
        rep = admissibility(load, profile, report)
        if not rep.admissible:
            raise ValueError(
                "load is inadmissible; Ritz energies would diverge: "
                + (", ".join(rep.unbounded_labels()) or f"residuals {rep.orthogonality_residuals}")
            )
    basis, K, F = _assemble(w, load, n)
    d = np.sqrt(np.abs(np.diag(K)))
    d[d <= 0] = 1.0
    Ks = K / d[:, None] / d[None, :]
    Fs = F / d
    if lam is None:
        lam = 1e-12 * np.trace(Ks) / max(n, 1)
    # eigendecomposition of the scaled stiffness: the lam-regularized
    # minimizer and its unregularized energy evaluate mode by mode without
    # the cancellation that kills the raw quadratic form on graded meshes
    evals, vecs = np.linalg.eigh(0.5 * (Ks + Ks.T))
    g = vecs.T @ Fs
    evals = np.maximum(evals, 0.0)
    denom = evals + lam
    y = vecs @ (g / denom)
    coefs = y / d
    energy = float(np.sum(g * g * (0.5 * evals / denom - 1.0) / denom))
    return {
        "n": n,
        "lambda": lam,
        "energy": float(energy),
        "coefficients": coefs,
        "problem": RitzProblem(w, load, n, lam, K, F, basis),
    }


def convergence_sweep(w: Weight, load: Load, n_list, lam=None):
    """Table of (n, energy); monotone non-increasing for nested dyadic bases."""
    rows = []
    for n in n_list:
        rec = ritz_energy(w, load, n, lam=lam)
        rows.append((n, rec["energy"]))
    return rows
