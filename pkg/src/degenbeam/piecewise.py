"""One-sided power/log calculus for segment functions.

Everything the beam pipeline integrates in closed form reduces to sums of
terms  coef * s**e * log(s)**q  with  s = |x - anchor|,  living on a segment
that stays on one side of the anchor.  Polynomials enter as integer-exponent
terms (the side sign is baked into the coefficient), so products, derivatives
and antiderivatives stay inside the class.  Exponent -1 produces a log branch
instead of a numeric blow-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Term",
    "AnchoredFn",
    "poly_rebase",
    "poly_antiderivative",
    "poly_derivative",
    "poly_eval",
]


def poly_eval(coeffs, x):
    """Evaluate sum(c[k] * x**k) (ascending coefficients)."""
    return np.polynomial.polynomial.polyval(x, np.asarray(coeffs, dtype=float))


def poly_derivative(coeffs):
    c = np.asarray(coeffs, dtype=float)
    if len(c) <= 1:
        return np.zeros(1)
    return c[1:] * np.arange(1, len(c))


def poly_antiderivative(coeffs):
    c = np.asarray(coeffs, dtype=float)
    out = np.zeros(len(c) + 1)
    out[1:] = c / np.arange(1, len(c) + 1)
    return out


def poly_rebase(coeffs, a):
    """Coefficients of the same polynomial in powers of (x - a)."""
    c = np.asarray(coeffs, dtype=float)
    n = len(c)
    out = np.zeros(n)
    d = c.copy()
    for j in range(n):
        out[j] = poly_eval(d, a) / math.factorial(j)
        d = poly_derivative(d)
    return out


@dataclass(frozen=True)
class Term:
    """coef * s**expo * (ln s)**logpow with s = |x - anchor| of the owner."""

    coef: float
    expo: float
    logpow: int = 0


class AnchoredFn:
    """Sum of power/log terms around a single anchor, on one side of it.

    side = +1 means the segment lies in (anchor, inf), side = -1 in
    (-inf, anchor).  With s = |x - anchor| we have ds/dx = side, which is
    the only place the side enters differentiation and integration.
    """

    def __init__(self, anchor: float, side: int, terms):
        if side not in (-1, 1):
            raise ValueError("side must be +1 or -1")
        self.anchor = float(anchor)
        self.side = side
        self.terms = self._merge(terms)

    @staticmethod
    def _merge(terms):
        acc: dict[tuple, float] = {}
        for t in terms:
            if t.coef == 0.0:
                continue
            key = (round(float(t.expo), 12), int(t.logpow))
            acc[key] = acc.get(key, 0.0) + float(t.coef)
        return tuple(Term(c, e, q) for (e, q), c in sorted(acc.items()) if c != 0.0)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, anchor, side):
        return cls(anchor, side, [])

    @classmethod
    def from_poly(cls, coeffs, anchor, side):
        """Anchored form of a polynomial given by global-x coefficients."""
        local = poly_rebase(coeffs, anchor)
        # (x - a)^k = side^k * s^k on this side
        terms = [Term(c * (side ** k), float(k), 0) for k, c in enumerate(local) if c != 0.0]
        return cls(anchor, side, terms)

    # -- algebra -----------------------------------------------------------

    def scaled(self, factor):
        return AnchoredFn(
            self.anchor, self.side, [Term(factor * t.coef, t.expo, t.logpow) for t in self.terms]
        )

    def plus(self, other: "AnchoredFn") -> "AnchoredFn":
        if other.anchor != self.anchor or other.side != self.side:
            raise ValueError("anchors/sides differ; rebase first")
        return AnchoredFn(self.anchor, self.side, self.terms + other.terms)

    def plus_poly(self, coeffs):
        return self.plus(AnchoredFn.from_poly(coeffs, self.anchor, self.side))

    def times(self, other: "AnchoredFn") -> "AnchoredFn":
        if other.anchor != self.anchor or other.side != self.side:
            raise ValueError("anchors/sides differ; rebase first")
        terms = [
            Term(a.coef * b.coef, a.expo + b.expo, a.logpow + b.logpow)
            for a in self.terms
            for b in other.terms
        ]
        return AnchoredFn(self.anchor, self.side, terms)

    # -- calculus ----------------------------------------------------------

    def derivative(self) -> "AnchoredFn":
        out = []
        for t in self.terms:
            if t.expo != 0.0:
                out.append(Term(self.side * t.coef * t.expo, t.expo - 1.0, t.logpow))
            if t.logpow > 0:
                out.append(Term(self.side * t.coef * t.logpow, t.expo - 1.0, t.logpow - 1))
        return AnchoredFn(self.anchor, self.side, out)

    def antiderivative(self) -> "AnchoredFn":
        """Termwise primitive; valid on the owner's side of the anchor."""
        out = []
        for t in self.terms:
            out.extend(self._anti_term(t))
        return AnchoredFn(self.anchor, self.side, out)

    def _anti_term(self, t: Term):
        # integral of s^e ln^q s dx; d/dx pulls a factor `side` out of s
        if t.expo == -1.0:
            return [Term(self.side * t.coef / (t.logpow + 1), 0.0, t.logpow + 1)]
        e1 = t.expo + 1.0
        out = [Term(self.side * t.coef / e1, e1, t.logpow)]
        if t.logpow > 0:
            # reduce the log power: -q/(e+1) * integral s^e ln^{q-1}
            out.extend(self._anti_term(Term(-t.coef * t.logpow / e1, t.expo, t.logpow - 1)))
        return out

    # -- evaluation --------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = np.abs(x - self.anchor)
        at0 = s == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            total = np.zeros(s.shape)
            for t in self.terms:
                piece = t.coef * np.power(s, t.expo)
                if t.logpow:
                    piece = piece * np.log(s) ** t.logpow
                if np.any(at0):
                    # limits at the anchor: 0 for expo > 0, the coefficient
                    # for a plain constant, +-inf otherwise
                    if t.expo > 0:
                        lim = 0.0
                    elif t.expo == 0 and t.logpow == 0:
                        lim = t.coef
                    else:
                        lim = math.copysign(math.inf, t.coef) * (
                            (-1.0) ** t.logpow if t.expo == 0 else 1.0
                        )
                    piece = np.where(at0, lim, piece)
                total = total + piece
        return total if total.shape else float(total)

    def eval_at(self, x):
        return float(self(np.asarray(x, dtype=float)))

    def limit_at_anchor(self):
        """Limit as x -> anchor from the owner's side; raises if infinite."""
        if not self.is_bounded_at_anchor():
            raise ValueError("function unbounded at anchor")
        return sum(t.coef for t in self.terms if t.expo == 0.0 and t.logpow == 0)

    def is_bounded_at_anchor(self):
        return all(t.expo > 0 or (t.expo == 0 and t.logpow == 0) for t in self.terms)

    # -- exact definite integration ------------------------------------------

    def integrate(self, lo, hi):
        """Exact integral over [lo, hi], which must sit on the owner's side.

        An endpoint at the anchor is allowed when the integral is improper
        but convergent; otherwise ValueError('divergent') is raised.  In
        distance coordinates s the integral is side-independent:
        integral_lo^hi f dx = integral_{s_lo}^{s_hi} (terms in s) ds.
        Narrow spans use expm1/log1p forms to dodge cancellation.
        """
        lo, hi = float(lo), float(hi)
        if hi < lo:
            raise ValueError("empty interval")
        tol = 1e-14 * max(1.0, abs(self.anchor))
        if self.side > 0 and lo < self.anchor - tol:
            raise ValueError("interval crosses anchor")
        if self.side < 0 and hi > self.anchor + tol:
            raise ValueError("interval crosses anchor")
        if self.side > 0:
            sl, sr = max(lo - self.anchor, 0.0), hi - self.anchor
        else:
            sl, sr = max(self.anchor - hi, 0.0), self.anchor - lo
        if sr <= sl:
            return 0.0
        total = 0.0
        for t in self.terms:
            total += t.coef * _power_log_integral(t.expo, t.logpow, sl, sr)
        return total

    def __repr__(self):  # pragma: no cover
        bits = " + ".join(
            f"{t.coef:.6g}*s^{t.expo:g}" + (f"*ln^{t.logpow}" if t.logpow else "")
            for t in self.terms
        )
        return f"AnchoredFn(a={self.anchor:g}, side={self.side:+d}: {bits or '0'})"


def _power_log_integral(e, q, sl, sr):
    """integral_{sl}^{sr} s**e * ln(s)**q ds, stable for narrow spans.

    Raises ValueError('divergent') when sl == 0 and e <= -1.
    """
    if sl == 0.0:
        if e <= -1.0:
            raise ValueError("divergent")
        if q == 0:
            return sr ** (e + 1.0) / (e + 1.0)
        # recursion with vanishing boundary terms at s = 0 (e > -1)
        head = sr ** (e + 1.0) * math.log(sr) ** q / (e + 1.0)
        return head - q / (e + 1.0) * _power_log_integral(e, q - 1, sl, sr)
    narrow = (sr - sl) < 0.125 * sl
    if q == 0:
        if e == -1.0:
            return math.log1p((sr - sl) / sl)
        if narrow:
            return sl ** (e + 1.0) * math.expm1((e + 1.0) * math.log1p((sr - sl) / sl)) / (e + 1.0)
        return (sr ** (e + 1.0) - sl ** (e + 1.0)) / (e + 1.0)
    if narrow:
        # 7-point Gauss-Legendre is machine-exact on such spans
        nodes, wts = np.polynomial.legendre.leggauss(7)
        mid, half = 0.5 * (sl + sr), 0.5 * (sr - sl)
        s = mid + half * nodes
        return float(np.sum(wts * s ** e * np.log(s) ** q) * half)
    if e == -1.0:
        return (math.log(sr) ** (q + 1) - math.log(sl) ** (q + 1)) / (q + 1)
    head = (sr ** (e + 1.0) * math.log(sr) ** q - sl ** (e + 1.0) * math.log(sl) ** q) / (e + 1.0)
    return head - q / (e + 1.0) * _power_log_integral(e, q - 1, sl, sr)


class PiecewisePoly:
    """Piecewise polynomial on consecutive spans, with explicit jump records.

    Pieces are (lo, hi, coeffs) with ascending global-x coefficients.  Jumps
    of the function and its derivatives at the breakpoints are first-class:
    evaluation takes a side, and `jumps(order)` reports the discontinuities.
    """

    def __init__(self, pieces):
        self.pieces = [(float(lo), float(hi), np.asarray(c, dtype=float)) for lo, hi, c in pieces]
        self.pieces.sort(key=lambda t: t[0])

    @property
    def lo(self):
        return self.pieces[0][0]

    @property
    def hi(self):
        return self.pieces[-1][1]

    def piece_at(self, x, side=+1):
        for lo, hi, c in self.pieces:
            if lo < x < hi:
                return lo, hi, c
        for lo, hi, c in self.pieces:
            if side > 0 and math.isclose(x, lo, abs_tol=1e-12):
                return lo, hi, c
            if side < 0 and math.isclose(x, hi, abs_tol=1e-12):
                return lo, hi, c
        if x <= self.lo + 1e-12:
            return self.pieces[0]
        if x >= self.hi - 1e-12:
            return self.pieces[-1]
        raise ValueError(f"x={x} outside the piecewise domain")

    def value(self, x, side=+1, order=0):
        _, _, c = self.piece_at(x, side)
        for _ in range(order):
            c = poly_derivative(c)
        return float(poly_eval(c, x))

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self.value(xi) for xi in xs])
        return out if np.ndim(x) else float(out[0])

    def derivative(self):
        return PiecewisePoly([(lo, hi, poly_derivative(c)) for lo, hi, c in self.pieces])

    def breakpoints(self):
        return sorted({p for lo, hi, _ in self.pieces for p in (lo, hi)})

    def jumps(self, order=0, tol=1e-12):
        """[(x, jump)] of the order-th derivative across interior breakpoints."""
        out = []
        for (l1, h1, _), (l2, h2, _) in zip(self.pieces, self.pieces[1:]):
            x = h1
            j = self.value(x, +1, order) - self.value(x, -1, order)
            if abs(j) > tol:
                out.append((x, j))
        return out

    def integrate_poly_product(self, coeffs, lo=None, hi=None):
        """Exact integral of self * poly(coeffs) over [lo, hi]."""
        lo = self.lo if lo is None else max(lo, self.lo)
        hi = self.hi if hi is None else min(hi, self.hi)
        total = 0.0
        for plo, phi, c in self.pieces:
            l, h = max(lo, plo), min(hi, phi)
            if h <= l:
                continue
            prod = np.polynomial.polynomial.polymul(c, np.asarray(coeffs, dtype=float))
            anti = np.polynomial.polynomial.polyint(prod)
            total += poly_eval(anti, h) - poly_eval(anti, l)
        return total

    def restrict(self, lo, hi):
        kept = []
        for plo, phi, c in self.pieces:
            l, h = max(lo, plo), min(hi, phi)
            if h > l + 0.0:
                kept.append((l, h, c))
        return PiecewisePoly(kept)

    def scaled(self, factor):
        return PiecewisePoly([(lo, hi, c * factor) for lo, hi, c in self.pieces])

    def plus(self, other: "PiecewisePoly"):
        """Sum on the union of domains; each summand counts as zero outside
        its own support."""
        cuts = sorted(set(self.breakpoints()) | set(other.breakpoints()))
        pieces = []
        for l, h in zip(cuts, cuts[1:]):
            mid = 0.5 * (l + h)
            parts = []
            if self.lo <= mid <= self.hi:
                parts.append(self.piece_at(mid)[2])
            if other.lo <= mid <= other.hi:
                parts.append(other.piece_at(mid)[2])
            n = max((len(p) for p in parts), default=1)
            c = np.zeros(n)
            for p in parts:
                c[: len(p)] += p
            pieces.append((l, h, c))
        return PiecewisePoly(pieces)

    def as_weight_pieces(self):
        """Pieces in the (lo, hi, payload) shape `integrate_weighted` expects."""
        return [(lo, hi, c) for lo, hi, c in self.pieces]
