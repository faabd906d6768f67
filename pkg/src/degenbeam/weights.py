"""Symbolic weights on an interval and the singular integrals they induce.

A weight is a piecewise collection of closed forms (powers of the distance
to a center, constants, 1/|log|, exp(-1/s), or a dyadic comb).  Segments are
normalized so that each lies on one side of its own center, which makes the
recurring integrals

    integral of (x-a)^d * w(x) dx        (weighted moments)
    integral of |x-x0|^e / w(x)^r dx     (dual / complementary densities)

exact via the one-sided power calculus, with divergence decided analytically
instead of by overflow.  Non-closed forms fall back to adaptive quadrature
plus a dyadic-annulus divergence protocol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sciint

from .piecewise import AnchoredFn, Term, poly_rebase

__all__ = [
    "Interval",
    "Power",
    "Constant",
    "LogInverse",
    "ExpInverse",
    "DyadicComb",
    "Weight",
    "IntegralResult",
    "evaluate",
    "integrate_dual",
    "moments_of_inverse",
    "integrate_weighted",
    "weighted_p_norm",
    "divergence_probe",
    "weight_from_json",
    "weight_to_json",
]

_QUAD_KW = dict(limit=400, epsabs=1e-13, epsrel=1e-12)


@dataclass(frozen=True)
class Interval:
    a_minus: float
    a_plus: float

    def __post_init__(self):
        if not (math.isfinite(self.a_minus) and math.isfinite(self.a_plus)):
            raise ValueError("interval endpoints must be finite")
        if not self.a_minus < self.a_plus:
            raise ValueError("need a_minus < a_plus")

    @property
    def length(self):
        return self.a_plus - self.a_minus

    def contains(self, x, closed=True):
        if closed:
            return self.a_minus <= x <= self.a_plus
        return self.a_minus < x < self.a_plus


@dataclass(frozen=True)
class IntegralResult:
    """Finite value with an error bound, or a divergence verdict."""

    finite: bool
    value: float = 0.0
    error_bound: float = 0.0
    diagnostic: dict | None = None

    @classmethod
    def of(cls, value, err=0.0):
        return cls(True, float(value), float(err))

    @classmethod
    def divergent(cls, **diag):
        return cls(False, math.inf, math.inf, diag or {"reason": "divergent"})

    def __add__(self, other):
        if not (self.finite and other.finite):
            bad = self if not self.finite else other
            return IntegralResult.divergent(**(bad.diagnostic or {}))
        return IntegralResult(True, self.value + other.value, self.error_bound + other.error_bound)

    def expect(self, what="integral"):
        if not self.finite:
            raise ValueError(f"{what} divergent: {self.diagnostic}")
        return self.value


# ---------------------------------------------------------------------------
# weight forms


@dataclass(frozen=True)
class Power:
    """w(x) = scale * |x - center|**exponent, exponent >= 0."""

    center: float
    exponent: float
    scale: float = 1.0

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("power weights require exponent >= 0")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    monotone_sides = True

    def eval(self, x):
        return self.scale * np.abs(np.asarray(x, dtype=float) - self.center) ** self.exponent


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("constant weight must be >= 0")

    monotone_sides = True

    def eval(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)


@dataclass(frozen=True)
class LogInverse:
    """w(x) = 1 / |log|x - center||; valid within distance 1 of the center."""

    center: float
    monotone_sides = True

    def eval(self, x):
        s = np.abs(np.asarray(x, dtype=float) - self.center)
        with np.errstate(divide="ignore"):
            return 1.0 / np.abs(np.log(s))


@dataclass(frozen=True)
class ExpInverse:
    """w(x) = exp(-1/|x - center|)."""

    center: float
    monotone_sides = True

    def eval(self, x):
        s = np.abs(np.asarray(x, dtype=float) - self.center)
        with np.errstate(divide="ignore"):
            return np.exp(-1.0 / s)


@dataclass(frozen=True)
class DyadicComb:
    """|x-center|**exponent on the comb set, an off profile on the gaps.

    The comb set is the translate of  union_n (x_-(n), x_+(n)]  with
    x_+(n) = 2**-n and x_-(n) = 2**-n - 2**-(2n+2); it accumulates at the
    center from the right.  Off the comb (gaps and the left side) the weight
    is 1 for the constant profile, or beta**-n on the n-th gap for the
    geometric one.  Deliberately non-monotone near the center.
    """

    center: float
    exponent: float
    off_kind: str = "constant"  # "constant" | "geometric"
    beta: float = 1.0

    def __post_init__(self):
        if self.off_kind not in ("constant", "geometric"):
            raise ValueError("off_kind must be 'constant' or 'geometric'")
        if self.off_kind == "geometric" and self.beta <= 1.0:
            raise ValueError("geometric profile needs beta > 1")

    monotone_sides = False

    @staticmethod
    def x_plus(n):
        return 2.0 ** -n

    @staticmethod
    def x_minus(n):
        return 2.0 ** -n - 4.0 ** -(n + 1)

    def off_value(self, n):
        return 1.0 if self.off_kind == "constant" else self.beta ** -float(n)

    def on_comb(self, s):
        """Whether distance s (> 0) from the center lies in the comb set."""
        if s <= 0 or s > 1:
            return False
        n = int(math.floor(-math.log2(s)))
        for k in (n - 1, n, n + 1):
            if k >= 0 and self.x_minus(k) < s <= self.x_plus(k):
                return True
        return False

    def eval(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            s = xi - self.center
            if s <= 0 or s > 1:
                out[i] = 1.0
            elif self.on_comb(s):
                out[i] = s ** self.exponent
            else:
                n = int(math.floor(-math.log2(s)))
                # gap [x_+(n+1), x_-(n)) carries off_value(n)
                if s >= self.x_minus(n):
                    n -= 1
                out[i] = self.off_value(max(n, 0))
        return out if out.shape != (1,) else out

    def pieces_within(self, lo, hi, n_max=2000):
        """Yield (l, r, kind, n) sub-pieces of (lo, hi) relative to the center.

        kind is 'comb' (power law), 'gap' (off profile level n) or 'outside'.
        Coordinates are distances from the center, 0 < l < r.
        """
        lo = max(lo, 0.0)
        if hi <= lo:
            return
        if hi > 1.0:
            yield (max(lo, 1.0), hi, "outside", 0)
            hi = 1.0
            if hi <= lo:
                return
        n = 0
        while n < n_max:
            xp, xm = self.x_plus(n), self.x_minus(n)
            xp_next = self.x_plus(n + 1)
            # comb piece (xm, xp]
            l, r = max(lo, xm), min(hi, xp)
            if l < r:
                yield (l, r, "comb", n)
            # gap [xp_next, xm)
            l, r = max(lo, xp_next), min(hi, xm)
            if l < r:
                yield (l, r, "gap", n)
            if xp_next <= lo or xp_next < 1e-300:
                return
            n += 1


FORMS = (Power, Constant, LogInverse, ExpInverse, DyadicComb)


# ---------------------------------------------------------------------------
# the weight proper


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    form: object


class Weight:
    """Piecewise symbolic weight on an interval.

    Segments tile the domain; at construction each segment is split at its
    own center so that every piece lies on one side of the center.  At
    breakpoints evaluation uses the right-continuous representative.
    """

    def __init__(self, domain: Interval, segments):
        self.domain = domain
        segs = sorted(
            (Segment(float(lo), float(hi), form) for (lo, hi), form in segments),
            key=lambda s: s.lo,
        )
        if not segs:
            raise ValueError("weight needs at least one segment")
        if not math.isclose(segs[0].lo, domain.a_minus, abs_tol=1e-12) or not math.isclose(
            segs[-1].hi, domain.a_plus, abs_tol=1e-12
        ):
            raise ValueError("segments must tile the domain")
        for a, b in zip(segs, segs[1:]):
            if not math.isclose(a.hi, b.lo, abs_tol=1e-12):
                raise ValueError("segments must tile the domain without gaps")
        self.segments = tuple(self._split_at_centers(segs))
        self._validate()

    @staticmethod
    def _split_at_centers(segs):
        out = []
        for s in segs:
            c = getattr(s.form, "center", None)
            if c is not None and s.lo < c < s.hi:
                out.append(Segment(s.lo, c, s.form))
                out.append(Segment(c, s.hi, s.form))
            else:
                out.append(s)
        return out

    def _validate(self):
        for s in self.segments:
            if isinstance(s.form, LogInverse):
                reach = max(abs(s.lo - s.form.center), abs(s.hi - s.form.center))
                if reach >= 1.0 - 1e-12:
                    # at distance 1 the weight blows up non-integrably
                    raise ValueError("log-inverse segment must stay within distance < 1 of its center")
            if isinstance(s.form, DyadicComb):
                if s.hi - s.form.center > 1.0 + 1e-12:
                    raise ValueError("dyadic comb extends at most 1 beyond its center")

    # -- structure ----------------------------------------------------------

    def degeneration_centers(self):
        """Points of the closed domain where the weight tends to zero."""
        pts = set()
        for s in self.segments:
            c = getattr(s.form, "center", None)
            if isinstance(s.form, Power) and s.form.exponent > 0 and s.lo <= c <= s.hi:
                pts.add(c)
            elif isinstance(s.form, (LogInverse, ExpInverse, DyadicComb)) and s.lo <= c <= s.hi:
                pts.add(c)
            elif isinstance(s.form, Constant) and s.form.c == 0.0:
                pts.add(s.lo)
                pts.add(s.hi)
        return sorted(p for p in pts if self.domain.a_minus <= p <= self.domain.a_plus)

    def zero_spans(self):
        return [(s.lo, s.hi) for s in self.segments if isinstance(s.form, Constant) and s.form.c == 0.0]

    def has_comb(self):
        return any(isinstance(s.form, DyadicComb) for s in self.segments)

    def breakpoints(self):
        return [self.segments[0].lo] + [s.hi for s in self.segments]

    def segment_at(self, x, side=+1):
        """Segment active at x; `side` picks the representative at breakpoints."""
        for s in self.segments:
            if s.lo < x < s.hi:
                return s
        for s in self.segments:
            if math.isclose(x, s.lo, abs_tol=1e-14) and side > 0:
                return s
            if math.isclose(x, s.hi, abs_tol=1e-14) and side < 0:
                return s
        # fall back to the right-continuous convention at the endpoints
        if x <= self.segments[0].lo + 1e-14:
            return self.segments[0]
        if x >= self.segments[-1].hi - 1e-14:
            return self.segments[-1]
        raise ValueError(f"x={x} outside the weight domain")

    def adjacent_form(self, x0, side):
        """Form governing w just to the left (side=-1) / right (+1) of x0."""
        return self.segment_at(x0, side=side).form

    def overlaps(self, lo, hi):
        for s in self.segments:
            l, r = max(lo, s.lo), min(hi, s.hi)
            if r > l + 0.0:
                yield (l, r, s)

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        for i, xi in enumerate(xs):
            if not (self.domain.a_minus - 1e-12 <= xi <= self.domain.a_plus + 1e-12):
                raise ValueError(f"x={xi} outside the weight domain")
            seg = self.segment_at(xi, side=+1)
            out[i] = float(np.atleast_1d(seg.form.eval(xi))[0])
        return out if np.ndim(x) else float(out[0])


def evaluate(w: Weight, x):
    """w(x), right-continuous at breakpoints; domain error outside."""
    return w(x)


# ---------------------------------------------------------------------------
# adaptive quadrature helper


def _quad(f, lo, hi, singular=()):
    pts = sorted(p for p in singular if lo < p < hi)
    try:
        val, err = _sciint.quad(f, lo, hi, points=pts or None, **_QUAD_KW)
    except Exception:
        val, err = _sciint.quad(f, lo, hi, **_QUAD_KW)
    return val, err


# ---------------------------------------------------------------------------
# dual-density integrals   integral |x-x0|^e0 / w^r dx


def _dual_on_power(form: Power, lo, hi, x0, e0, r):
    """Exact/adaptive integral of |x-x0|^e0 * (scale*|x-c|^gamma)^-r over (lo,hi)."""
    c, gamma, scale = form.center, form.exponent, form.scale
    pref = scale ** -r
    mid = 0.5 * (lo + hi)
    side_c = 1 if mid > c else -1
    if math.isclose(c, x0, abs_tol=1e-14):
        fn = AnchoredFn(c, side_c, [Term(pref, e0 - gamma * r, 0)])
        try:
            return IntegralResult.of(fn.integrate(lo, hi), 1e-14)
        except ValueError:
            return IntegralResult.divergent(reason="power-rule exponent <= -1", exponent=e0 - gamma * r, at=c)
    # distinct anchors: check divergence at a touched center first
    touches_c = math.isclose(lo, c, abs_tol=1e-14) or math.isclose(hi, c, abs_tol=1e-14)
    if touches_c and gamma * r >= 1.0:
        return IntegralResult.divergent(reason="non-integrable center", exponent=-gamma * r, at=c)
    if abs(e0 - round(e0)) < 1e-12 and e0 >= 0:
        # |x-x0|^e0 is a polynomial up to sign on one side of x0; rebase around c
        k = int(round(e0))
        side_x0 = 1 if mid > x0 else -1
        coeffs_x = _shifted_monomial(x0, k) * (side_x0 ** k)  # |x-x0|^k on this side
        local = poly_rebase(coeffs_x, c)
        terms = [Term(pref * v * (side_c ** j), j - gamma * r, 0) for j, v in enumerate(local) if v != 0.0]
        fn = AnchoredFn(c, side_c, terms)
        try:
            return IntegralResult.of(fn.integrate(lo, hi), 1e-13)
        except ValueError:
            return IntegralResult.divergent(reason="non-integrable center", at=c)
    # non-integer numerator exponent with distinct anchors: adaptive
    def f(x):
        return abs(x - x0) ** e0 * pref * abs(x - c) ** (-gamma * r)

    val, err = _quad(f, lo, hi, singular=(c, x0))
    return IntegralResult.of(val, max(err, 1e-11 * (1 + abs(val))))


def _shifted_monomial(a, k):
    """Global-x coefficients of (x - a)^k."""
    out = np.zeros(k + 1)
    for j in range(k + 1):
        out[j] = math.comb(k, j) * ((-a) ** (k - j))
    return out


def _linear_from(a):
    return np.array([-a, 1.0])


def _dual_on_constant(form: Constant, lo, hi, x0, e0, r):
    if form.c == 0.0:
        return IntegralResult.divergent(reason="weight vanishes on a set of positive measure", span=(lo, hi))
    pref = form.c ** -r
    mid = 0.5 * (lo + hi)
    if lo <= x0 <= hi and not (math.isclose(x0, lo, abs_tol=1e-14) or math.isclose(x0, hi, abs_tol=1e-14)):
        left = AnchoredFn(x0, -1, [Term(pref, e0, 0)]).integrate(lo, x0)
        right = AnchoredFn(x0, +1, [Term(pref, e0, 0)]).integrate(x0, hi)
        return IntegralResult.of(left + right, 1e-14)
    side = 1 if mid > x0 else -1
    fn = AnchoredFn(x0, side, [Term(pref, e0, 0)])
    return IntegralResult.of(fn.integrate(lo, hi), 1e-14)


def _dual_on_loginv(form: LogInverse, lo, hi, x0, e0, r):
    c = form.center

    def f(x):
        s = abs(x - c)
        if s == 0.0:
            return 0.0
        return abs(x - x0) ** e0 * abs(math.log(s)) ** r

    val, err = _quad(f, lo, hi, singular=(c, x0))
    return IntegralResult.of(val, max(err, 1e-10 * (1 + abs(val))))


def _dual_on_expinv(form: ExpInverse, lo, hi, x0, e0, r):
    c = form.center
    if lo - 1e-14 <= c <= hi + 1e-14:
        return IntegralResult.divergent(reason="exp(1/s) non-integrable at its center", at=c)
    smin = min(abs(lo - c), abs(hi - c))
    if r / smin > 600:
        import mpmath

        f = lambda x: mpmath.mpf(abs(x - x0)) ** e0 * mpmath.e ** (r / abs(x - c))
        val = mpmath.quad(f, [lo, hi])
        v = float(val) if val < mpmath.mpf("1e300") else math.inf
        return IntegralResult.of(v, abs(v) * 1e-8)

    def f(x):
        return abs(x - x0) ** e0 * math.exp(r / abs(x - c))

    val, err = _quad(f, lo, hi, singular=(x0,))
    return IntegralResult.of(val, max(err, 1e-10 * (1 + abs(val))))


def _dual_on_comb(form: DyadicComb, lo, hi, x0, e0, r):
    """Sum the dual density over comb/gap pieces with the annulus protocol."""
    c = form.center
    rel_lo, rel_hi = lo - c, hi - c
    if rel_hi <= 0:  # entirely left of the center: off-value 1
        return _dual_on_constant(Constant(1.0), lo, hi, x0, e0, r)
    total = IntegralResult.of(0.0)
    if rel_lo < 0:
        total = total + _dual_on_constant(Constant(1.0), lo, c, x0, e0, r)
        rel_lo = 0.0
    terms = []
    level = {}
    partial = total.value if total.finite else math.inf
    for (l, r_, kind, n) in form.pieces_within(rel_lo, rel_hi):
        gl, gr = c + l, c + r_
        if kind == "comb":
            piece = _dual_on_power(Power(c, form.exponent), gl, gr, x0, e0, r)
        elif kind == "gap":
            piece = _dual_on_constant(Constant(form.off_value(n)), gl, gr, x0, e0, r)
        else:
            piece = _dual_on_constant(Constant(1.0), gl, gr, x0, e0, r)
        if not piece.finite:
            return piece
        level[n] = level.get(n, 0.0) + piece.value
        partial += piece.value
        if kind == "gap":  # the level-n annulus (x_+(n+1), x_+(n)] is complete
            terms.append(level.pop(n, 0.0))
            verdict = _series_verdict(terms, partial)
            if verdict == "divergent":
                return IntegralResult.divergent(
                    reason="annulus series fails ratio test", terms_tail=terms[-20:], partial_sum=partial
                )
            if verdict == "converged":
                return IntegralResult.of(partial, 1e-12 * (1 + abs(partial)))
    return IntegralResult.of(partial, 1e-12 * (1 + abs(partial)))


def _series_verdict(terms, partial, window=20):
    """Divergence protocol: last `window` contributions must keep shrinking.

    Declared divergent when the tail contributions fail a ratio test
    (ratio >= 0.999) or each stays above 1e-12 while the partial sum exceeds
    1e6; declared converged when the tail is negligible.
    """
    if len(terms) >= 6 and all(abs(t) < 1e-17 * max(1.0, abs(partial)) for t in terms[-4:]):
        return "converged"
    if len(terms) < window:
        return "undecided"
    tail = terms[-window:]
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    if ratios and min(ratios) >= 0.999:
        return "divergent"
    if all(t > 1e-12 for t in tail) and partial > 1e6:
        return "divergent"
    return "undecided"


_DUAL_DISPATCH = {
    Power: _dual_on_power,
    Constant: _dual_on_constant,
    LogInverse: _dual_on_loginv,
    ExpInverse: _dual_on_expinv,
    DyadicComb: _dual_on_comb,
}


def dual_density_integral(w: Weight, lo, hi, x0, e0, r) -> IntegralResult:
    """integral over (lo,hi) of |x-x0|^e0 / w(x)^r, exact where possible."""
    total = IntegralResult.of(0.0)
    for l, h, seg in w.overlaps(lo, hi):
        spans = [(l, x0), (x0, h)] if l < x0 < h else [(l, h)]
        for sl, sh in spans:
            if sh <= sl:
                continue
            total = total + _DUAL_DISPATCH[type(seg.form)](seg.form, sl, sh, x0, e0, r)
            if not total.finite:
                return total
    return total


# ---------------------------------------------------------------------------
# essential supremum of |x-x0|^alpha / w  (the p=1 dual quantity)


def _ess_sup_candidates(form, lo, hi, x0, alpha):
    xs = list(np.linspace(lo, hi, 129))
    c = getattr(form, "center", None)

    def h(x):
        wv = float(np.atleast_1d(form.eval(x))[0])
        num = abs(x - x0) ** alpha if alpha > 0 else 1.0
        if wv == 0.0:
            return math.inf if num > 0 else 0.0
        return num / wv

    sup = max(h(x) for x in xs if x not in (c, x0))
    # analytic limits at touched singular points
    if isinstance(form, Constant) and form.c == 0.0:
        return math.inf
    if c is not None and (math.isclose(lo, c, abs_tol=1e-14) or math.isclose(hi, c, abs_tol=1e-14)):
        if isinstance(form, Power):
            if math.isclose(c, x0, abs_tol=1e-14):
                if alpha < form.exponent:
                    return math.inf
            elif form.exponent > 0:
                return math.inf
        elif isinstance(form, LogInverse):
            if not math.isclose(c, x0, abs_tol=1e-14) or alpha == 0:
                return math.inf
        elif isinstance(form, ExpInverse):
            return math.inf
        elif isinstance(form, DyadicComb):
            # comb pieces force sup ~ s^(alpha-gamma); gaps contribute
            # s^alpha/off(n)
            if alpha < form.exponent:
                return math.inf
            if form.off_kind == "geometric" and form.beta > 2.0 ** alpha:
                return math.inf
    return sup


def ess_sup_dual(w: Weight, lo, hi, x0, alpha):
    sup = 0.0
    for l, h, seg in w.overlaps(lo, hi):
        sup = max(sup, _ess_sup_candidates(seg.form, l, h, x0, alpha))
        if sup == math.inf:
            break
    return sup


# ---------------------------------------------------------------------------
# public spec operations


def integrate_dual(w: Weight, p: float, alpha: float, x0: float, J=None) -> IntegralResult:
    """Defining quantity of order-`alpha` criticality over the subinterval J.

    For p > 1 this is  integral_J (|x-x0|^alpha / w^(1/p))^p' dx; for p = 1
    the essential supremum of |x-x0|^alpha / w over J (finite value reported,
    Divergent when infinite).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    lo, hi = J if J is not None else (w.domain.a_minus, w.domain.a_plus)
    lo = max(lo, w.domain.a_minus)
    hi = min(hi, w.domain.a_plus)
    if hi <= lo:
        return IntegralResult.of(0.0)
    if p == 1:
        sup = ess_sup_dual(w, lo, hi, x0, alpha)
        if sup == math.inf:
            return IntegralResult.divergent(reason="essential supremum infinite", x0=x0, alpha=alpha)
        return IntegralResult.of(sup, 1e-6 * (1 + sup))
    pp = p / (p - 1.0)
    return dual_density_integral(w, lo, hi, x0, alpha * pp, pp / p)


def moments_of_inverse(w: Weight, J, degrees, x0: float):
    """Gram integrals integral_J (x-x0)^j / w dx, one result per degree."""
    out = []
    lo, hi = J
    for d in degrees:
        if d < 0:
            raise ValueError("degrees must be >= 0")
        total = IntegralResult.of(0.0)
        for l, h, seg in w.overlaps(lo, hi):
            total = total + _signed_inv_moment(seg.form, l, h, x0, int(d))
            if not total.finite:
                break
        out.append(total)
    return out


def _signed_inv_moment(form, lo, hi, x0, d):
    """integral (x-x0)^d / w dx on (lo,hi) with the true sign of (x-x0)^d."""
    mid = 0.5 * (lo + hi)
    sgn = 1.0 if (mid >= x0 or d % 2 == 0) else -1.0
    if lo < x0 < hi and not math.isclose(lo, x0, abs_tol=1e-14) and not math.isclose(hi, x0, abs_tol=1e-14):
        a = _signed_inv_moment(form, lo, x0, x0, d)
        b = _signed_inv_moment(form, x0, hi, x0, d)
        return a + b
    res = _DUAL_DISPATCH[type(form)](form, lo, hi, x0, float(d), 1.0)
    if not res.finite:
        return res
    return IntegralResult(True, sgn * res.value, res.error_bound)


def drop_tiny_coeffs(local, rel=1e-11):
    """Zero out rebased coefficients that are float residue of a constrained
    solve; a genuinely non-vanishing coefficient stays."""
    local = np.asarray(local, dtype=float).copy()
    vmax = np.max(np.abs(local)) if len(local) else 0.0
    if vmax > 0:
        local[np.abs(local) < rel * vmax] = 0.0
    return local


def inv_weighted_poly_integral(w: Weight, J, coeffs, power=1.0):
    """integral_J poly(x)**? ... helper: integral poly(x)/w(x)^power via rebasing."""
    lo, hi = J
    total = IntegralResult.of(0.0)
    for l, h, seg in w.overlaps(lo, hi):
        total = total + _poly_over_form(seg.form, l, h, coeffs, power)
        if not total.finite:
            return total
    return total


def _poly_over_form(form, lo, hi, coeffs, power):
    coeffs = np.asarray(coeffs, dtype=float)
    if isinstance(form, Power):
        c, gamma, scale = form.center, form.exponent, form.scale
        mid = 0.5 * (lo + hi)
        side = 1 if mid > c else -1
        local = drop_tiny_coeffs(poly_rebase(coeffs, c))
        terms = [
            Term((scale ** -power) * v * (side ** j), j - gamma * power, 0)
            for j, v in enumerate(local)
            if v != 0.0
        ]
        fn = AnchoredFn(c, side, terms)
        try:
            return IntegralResult.of(fn.integrate(lo, hi), 1e-13 * (1 + abs(sum(abs(local)))))
        except ValueError:
            return IntegralResult.divergent(reason="non-integrable center", at=c)
    if isinstance(form, Constant):
        if form.c == 0.0:
            if power < 0 or np.allclose(coeffs, 0.0):
                return IntegralResult.of(0.0)  # weighting by a zero weight
            return IntegralResult.divergent(reason="weight vanishes on a set of positive measure")
        anti = np.polynomial.polynomial.polyint(coeffs)
        val = (np.polynomial.polynomial.polyval(hi, anti) - np.polynomial.polynomial.polyval(lo, anti))
        return IntegralResult.of(val * form.c ** -power, 1e-14)
    if isinstance(form, DyadicComb):
        total = IntegralResult.of(0.0)
        cc = form.center
        rel_lo, rel_hi = max(lo - cc, 0.0), hi - cc
        if lo < cc:
            total = total + _poly_over_form(Constant(1.0), lo, min(hi, cc), coeffs, power)
        if rel_hi <= 0 or not total.finite:
            return total
        terms = []
        partial = total.value
        for (l, r_, kind, n) in form.pieces_within(rel_lo, rel_hi):
            sub = Power(cc, form.exponent) if kind == "comb" else Constant(form.off_value(n) if kind == "gap" else 1.0)
            piece = _poly_over_form(sub, cc + l, cc + r_, coeffs, power)
            if not piece.finite:
                return piece
            terms.append(abs(piece.value))
            partial += piece.value
            verdict = _series_verdict(terms, abs(partial))
            if verdict == "divergent":
                return IntegralResult.divergent(reason="annulus series fails ratio test", terms_tail=terms[-20:])
            if verdict == "converged":
                break
        return IntegralResult.of(partial, 1e-11 * (1 + abs(partial)))

    def f(x):
        wv = float(np.atleast_1d(form.eval(x))[0])
        return np.polynomial.polynomial.polyval(x, coeffs) / wv ** power

    cpt = getattr(form, "center", None)
    if isinstance(form, ExpInverse) and lo - 1e-14 <= cpt <= hi + 1e-14:
        return IntegralResult.divergent(reason="exp(1/s) non-integrable at its center", at=cpt)
    val, err = _quad(f, lo, hi, singular=(cpt,) if cpt is not None else ())
    return IntegralResult.of(val, max(err, 1e-10 * (1 + abs(val))))


def weighted_poly_integral(w: Weight, J, coeffs):
    """Exact-where-possible integral_J w(x) * poly(x) dx."""
    lo, hi = J
    total = 0.0
    err = 0.0
    for l, h, seg in w.overlaps(lo, hi):
        form = seg.form
        if isinstance(form, (Power, Constant, DyadicComb)):
            res = _poly_over_form(form, l, h, coeffs, -1.0)
        else:
            f = lambda x: float(np.atleast_1d(form.eval(x))[0]) * np.polynomial.polynomial.polyval(
                x, np.asarray(coeffs, dtype=float)
            )
            v, e = _quad(f, l, h, singular=(getattr(form, "center", None),) if getattr(form, "center", None) is not None else ())
            total += v
            err += max(e, 1e-11 * (1 + abs(v)))
            continue
        total += res.expect("weighted integral")
        err += res.error_bound
    return total, err


def integrate_weighted(w: Weight, g, J=None):
    """integral_J w * g dx for a piecewise polynomial / anchored-power g.

    g may be: a list of (lo, hi, coeffs) polynomial pieces, a list of
    (lo, hi, AnchoredFn) pieces, or a scalar-capable callable (then adaptive
    quadrature is used).  Absolute error tracked <= 1e-10 * (1 + |value|).
    """
    lo, hi = J if J is not None else (w.domain.a_minus, w.domain.a_plus)
    if callable(g) and not isinstance(g, list):
        total, err = 0.0, 0.0
        sing = w.degeneration_centers()
        for l, h, seg in w.overlaps(lo, hi):
            f = lambda x: float(np.atleast_1d(seg.form.eval(x))[0]) * float(g(x))
            v, e = _quad(f, l, h, singular=sing)
            total += v
            err += e
        return total
    total = 0.0
    for piece in g:
        plo, phi, payload = piece
        l, h = max(lo, plo), min(hi, phi)
        if h <= l:
            continue
        if isinstance(payload, AnchoredFn):
            total += _weighted_anchored_integral(w, l, h, payload)
        else:
            v, _ = weighted_poly_integral(w, (l, h), payload)
            total += v
    return total


def _weighted_anchored_integral(w: Weight, lo, hi, fn: AnchoredFn):
    total = 0.0
    for l, h, seg in w.overlaps(lo, hi):
        form = seg.form
        if isinstance(form, Power) and math.isclose(form.center, fn.anchor, abs_tol=1e-14):
            prod = fn.times(AnchoredFn(fn.anchor, fn.side, [Term(form.scale, form.exponent, 0)]))
            total += prod.integrate(l, h)
        elif isinstance(form, Constant):
            total += form.c * fn.integrate(l, h)
        else:
            f = lambda x: float(np.atleast_1d(form.eval(x))[0]) * fn.eval_at(x)
            v, _ = _quad(f, l, h, singular=(getattr(form, "center", None), fn.anchor))
            total += v
    return total


def weighted_p_norm(w: Weight, g, p, J=None):
    """(integral_J w |g|^p dx)^(1/p); exact for p=2 polynomial pieces."""
    lo, hi = J if J is not None else (w.domain.a_minus, w.domain.a_plus)
    if p == 2 and isinstance(g, list):
        total = 0.0
        for plo, phi, payload in g:
            l, h = max(lo, plo), min(hi, phi)
            if h <= l:
                continue
            if isinstance(payload, AnchoredFn):
                total += _weighted_anchored_integral(w, l, h, payload.times(payload))
            else:
                sq = np.polynomial.polynomial.polymul(payload, payload)
                v, _ = weighted_poly_integral(w, (l, h), sq)
                total += v
        return max(total, 0.0) ** 0.5
    # general p: adaptive quadrature piece by piece
    total = 0.0
    sing = w.degeneration_centers()
    pieces = g if isinstance(g, list) else [(lo, hi, g)]
    for plo, phi, payload in pieces:
        l, h = max(lo, plo), min(hi, phi)
        if h <= l:
            continue
        if isinstance(payload, AnchoredFn):
            gf = payload.eval_at
        elif callable(payload):
            gf = payload
        else:
            gf = lambda x, c=np.asarray(payload, float): float(np.polynomial.polynomial.polyval(x, c))
        for l2, h2, seg in w.overlaps(l, h):
            f = lambda x: float(np.atleast_1d(seg.form.eval(x))[0]) * abs(gf(x)) ** p
            v, _ = _quad(f, l2, h2, singular=sing)
            total += v
    return max(total, 0.0) ** (1.0 / p)


# ---------------------------------------------------------------------------
# numeric divergence probe (independent of the closed-form thresholds)


def divergence_probe(w: Weight, p, alpha, x0, side=0, k_min=4, k_max=48):
    """Dyadic-annulus probe of the criticality integral at (x0, side).

    Sums the dual density over annuli (x0 + 2^-k-1, 2^-k) (and mirrored for
    the left side, both for side=0) and applies the ratio protocol; for p=1
    tracks the growth of per-annulus suprema instead.
    """
    dom = w.domain
    r0 = min(1.0, (dom.a_plus - dom.a_minus) / 4)
    terms = []
    partial = 0.0
    sups = []
    for k in range(k_min, k_max):
        lo_r, hi_r = x0 + r0 * 2.0 ** -(k + 1), x0 + r0 * 2.0 ** -k
        lo_l, hi_l = x0 - r0 * 2.0 ** -k, x0 - r0 * 2.0 ** -(k + 1)
        spans = []
        if side >= 0:
            spans.append((max(lo_r, dom.a_minus), min(hi_r, dom.a_plus)))
        if side <= 0:
            spans.append((max(lo_l, dom.a_minus), min(hi_l, dom.a_plus)))
        if p == 1:
            sup_k = 0.0
            for l, h in spans:
                if h > l:
                    sup_k = max(sup_k, ess_sup_dual(w, l, h, x0, alpha))
            sups.append(sup_k)
            if sup_k == math.inf:
                return IntegralResult.divergent(reason="annulus sup infinite", k=k)
            if len(sups) >= 8:
                tail = [s for s in sups[-8:] if s > 0]
                if len(tail) >= 8 and all(b >= a * 1.0001 for a, b in zip(tail, tail[1:])):
                    return IntegralResult.divergent(reason="annulus sups grow", sups_tail=tail)
            continue
        pp = p / (p - 1.0)
        term = 0.0
        for l, h in spans:
            if h > l:
                res = dual_density_integral(w, l, h, x0, alpha * pp, pp / p)
                if not res.finite:
                    return res
                term += res.value
        terms.append(term)
        partial += term
        verdict = _series_verdict(terms, partial)
        if verdict == "divergent":
            return IntegralResult.divergent(reason="annulus series fails ratio test", terms_tail=terms[-20:], partial_sum=partial)
        if verdict == "converged":
            return IntegralResult.of(partial, 1e-10 * (1 + partial))
    if p == 1:
        sup = max(sups) if sups else 0.0
        return IntegralResult.of(sup)
    return IntegralResult.of(partial, 1e-8 * (1 + partial))


# ---------------------------------------------------------------------------
# JSON wire format


_FORM_NAMES = {
    Power: "power",
    Constant: "constant",
    LogInverse: "log_inverse",
    ExpInverse: "exp_inverse",
    DyadicComb: "dyadic_comb",
}


def weight_to_json(w: Weight):
    segs = []
    for s in w.segments:
        form = s.form
        entry = {"span": [s.lo, s.hi], "form": _FORM_NAMES[type(form)], "params": {}}
        if isinstance(form, Power):
            entry["params"] = {"center": form.center, "exponent": form.exponent, "scale": form.scale}
        elif isinstance(form, Constant):
            entry["params"] = {"c": form.c}
        elif isinstance(form, (LogInverse, ExpInverse)):
            entry["params"] = {"center": form.center}
        elif isinstance(form, DyadicComb):
            entry["params"] = {
                "center": form.center,
                "exponent": form.exponent,
                "off": form.off_kind,
                "beta": form.beta,
            }
        segs.append(entry)
    return {"interval": [w.domain.a_minus, w.domain.a_plus], "segments": segs}


def weight_from_json(doc):
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        a, b = doc["interval"]
        raw = doc["segments"]
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"weight JSON missing required field: {e}") from e
    segments = []
    for i, entry in enumerate(raw):
        try:
            span = tuple(entry["span"])
            kind = entry["form"]
            params = entry.get("params", {})
        except (KeyError, TypeError) as e:
            raise ValueError(f"weight JSON segment #{i}: {e}") from e
        if kind == "power":
            form = Power(params["center"], params["exponent"], params.get("scale", 1.0))
        elif kind == "constant":
            form = Constant(params["c"])
        elif kind == "log_inverse":
            form = LogInverse(params["center"])
        elif kind == "exp_inverse":
            form = ExpInverse(params["center"])
        elif kind == "dyadic_comb":
            form = DyadicComb(
                params["center"], params["exponent"], params.get("off", "constant"), params.get("beta", 1.0)
            )
        else:
            raise ValueError(f"weight JSON segment #{i}: unknown form {kind!r}")
        segments.append((span, form))
    return Weight(Interval(float(a), float(b)), segments)
