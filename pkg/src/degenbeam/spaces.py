"""Structure of the weighted space of order m induced by a criticality report.

Continuity, jump atoms, the kernel of the m-th tangential derivative, trace
availability at the endpoints, retained Dirichlet conditions and the
zero-energy subspace all read off the integer-order criticality verdicts:

  * derivative order kbar is continuous at x0  iff  x0 is not critical of
    order m - kbar - 1;
  * a step in the kbar-th derivative belongs to the space  iff  x0 is a
    stable critical point of order m - kbar - 1;
  * the trace of order k extends at an endpoint  iff  the endpoint is not
    critical of order m - k - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .criticality import BOTH, LEFT, RIGHT, CriticalityReport, full_report
from .piecewise import PiecewisePoly
from .weights import Weight, ess_sup_dual, integrate_dual
from . import criticality as _crit

__all__ = [
    "SpaceProfile",
    "EmbeddingCertificate",
    "space_profile",
    "build_space_profile",
    "embedding_certificate",
    "poincare_validity",
    "bc_label",
]


def bc_label(order, end):
    return "u" + "'" * order + ("(a-)" if end == "a_minus" else "(a+)")


@dataclass
class SpaceProfile:
    m: int
    p: float
    domain: tuple
    continuity: dict            # x0 -> largest continuous derivative order (-1 if none)
    jump_atoms: list            # (x0, kbar, "member" | "unknown")
    kernel_basis: list          # PiecewisePoly spanning ker of the m-th derivative
    traces: dict                # "a_minus"/"a_plus" -> sorted list of orders
    retained_bcs: list          # labels like "u(a-)", "u'(a+)"
    zero_energy_basis: list     # kernel elements satisfying every retained BC
    warnings: list = field(default_factory=list)

    @property
    def kernel_dim(self):
        return len(self.kernel_basis)

    @property
    def zero_energy_dim(self):
        return len(self.zero_energy_basis)

    def continuity_at(self, x0):
        for key, v in self.continuity.items():
            if math.isclose(key, x0, abs_tol=1e-12):
                return v
        return self.m - 1

    def to_json(self):
        return {
            "m": self.m,
            "p": self.p,
            "interval": list(self.domain),
            "continuity": {str(k): v for k, v in sorted(self.continuity.items())},
            "jump_atoms": [{"x0": x, "order": k, "status": s} for x, k, s in self.jump_atoms],
            "kernel_dim": self.kernel_dim,
            "kernel_basis": [
                [{"span": [lo, hi], "poly": list(c)} for lo, hi, c in g.pieces] for g in self.kernel_basis
            ],
            "traces": {k: list(v) for k, v in self.traces.items()},
            "retained_bcs": list(self.retained_bcs),
            "zero_energy_dim": self.zero_energy_dim,
            "zero_energy_basis": [
                [{"span": [lo, hi], "poly": list(c)} for lo, hi, c in g.pieces] for g in self.zero_energy_basis
            ],
            "warnings": list(self.warnings),
        }


def _point_critical(report: CriticalityReport, x0, order, side=BOTH):
    rep = report.point(x0)
    if rep is None:
        return False
    return rep.critical(float(order), side)


def _stable_at(report: CriticalityReport, x0):
    rep = report.point(x0)
    if rep is None:
        return True
    verdicts = [sr.stable for sr in rep.sides.values() if sr.stable != "not-critical"]
    if not verdicts:
        return True
    return any(v == "stable" for v in verdicts)


def _monomial_basis(domain, m):
    a, b = domain
    out = []
    for k in range(m):
        c = np.zeros(k + 1)
        c[k] = 1.0
        out.append(PiecewisePoly([(a, b, c)]))
    return out


def _step_element(domain, x0, kbar):
    """(x - x0)^kbar / kbar! on (x0, a+), zero to the left."""
    a, b = domain
    shifted = np.polynomial.polynomial.polypow(np.array([-x0, 1.0]), kbar) if kbar else np.array([1.0])
    coeffs = shifted / math.factorial(kbar)
    return PiecewisePoly([(a, x0, np.zeros(1)), (x0, b, coeffs)])


def space_profile(report: CriticalityReport, m: int) -> SpaceProfile:
    """Assemble the order-m space structure from integer-order verdicts."""
    if m < 1:
        raise ValueError("m must be >= 1")
    needed = set(float(k) for k in range(m))
    if not needed <= set(report.alpha_grid):
        raise ValueError("criticality report lacks integer orders 0..m-1; rebuild with them")
    a, b = report.domain
    warnings = []

    continuity = {}
    atoms = []
    for x0, rep in sorted(report.points.items()):
        kbar = -1
        for k in range(m - 1, -1, -1):
            if not rep.critical(float(m - k - 1)):
                kbar = k
                break
        continuity[x0] = kbar
        interior = (a + 1e-12) < x0 < (b - 1e-12)
        if not interior:
            continue
        for k in range(m):
            if rep.critical(float(m - k - 1)):
                status = "member" if _stable_at(report, x0) else "unknown"
                atoms.append((x0, k, status))
                if status == "unknown":
                    warnings.append(
                        f"unstable critical point at x0={x0:g}: step membership at order {k} not asserted"
                    )

    kernel = _monomial_basis((a, b), m)
    for x0, k, status in atoms:
        if status == "member":
            kernel.append(_step_element((a, b), x0, k))

    traces = {}
    for end, x_end in (("a_minus", a), ("a_plus", b)):
        rep = report.point(x_end)
        orders = []
        for k in range(m):
            crit = rep.critical(float(m - k - 1)) if rep is not None else False
            if not crit:
                orders.append(k)
        traces[end] = orders
    retained = [bc_label(k, end) for end in ("a_minus", "a_plus") for k in traces[end]]

    zero_energy = _zero_energy_basis(kernel, traces, (a, b))
    return SpaceProfile(
        m=m,
        p=report.p,
        domain=(a, b),
        continuity=continuity,
        jump_atoms=atoms,
        kernel_basis=kernel,
        traces=traces,
        retained_bcs=retained,
        zero_energy_basis=zero_energy,
        warnings=warnings,
    )


def _zero_energy_basis(kernel, traces, domain):
    a, b = domain
    rows = []
    for end, x_end, side in (("a_minus", a, +1), ("a_plus", b, -1)):
        for k in traces[end]:
            rows.append([g.value(x_end, side=side, order=k) for g in kernel])
    if not rows:
        basis_vecs = np.eye(len(kernel))
    else:
        mat = np.array(rows, dtype=float)
        _, s, vt = np.linalg.svd(mat)
        rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if len(s) else 1.0)))
        basis_vecs = vt[rank:]
    out = []
    for vec in basis_vecs:
        elem = None
        for coef, g in zip(vec, kernel):
            if abs(coef) < 1e-14:
                continue
            piece = g.scaled(coef)
            elem = piece if elem is None else elem.plus(piece)
        if elem is not None:
            out.append(elem)
    return out


def build_space_profile(w: Weight, m: int, p: float) -> SpaceProfile:
    report = full_report(w, p, alpha_grid=tuple(float(k) for k in range(m)))
    return space_profile(report, m)


# ---------------------------------------------------------------------------
# local embedding certificates


@dataclass
class EmbeddingCertificate:
    x0: float
    k: int
    p: float
    V: tuple
    U1: tuple
    C: float
    C1: float
    C2: float
    C3: float

    def cutoff(self):
        """The degree-7 smoothstep bump: 1 on U1, 0 outside V (per side)."""
        return _bump_callable(self.x0, self.U1, self.V)

    def to_json(self):
        return {
            "x0": self.x0,
            "k": self.k,
            "p": self.p,
            "V": list(self.V),
            "U1": list(self.U1),
            "C": self.C,
            "C1": self.C1,
            "C2": self.C2,
            "C3": self.C3,
        }


def _smoothstep7(t):
    t = np.clip(t, 0.0, 1.0)
    return 35 * t ** 4 - 84 * t ** 5 + 70 * t ** 6 - 20 * t ** 7


def _bump_callable(x0, U1, V):
    l1, r1 = U1
    lV, rV = V

    def phi(x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        out = np.where(x < l1, _smoothstep7((x - lV) / max(l1 - lV, 1e-300)), out)
        out = np.where(x > r1, _smoothstep7((rV - x) / max(rV - r1, 1e-300)), out)
        out = np.where((x < lV) | (x > rV), 0.0, out)
        return out

    return phi


def _bump_derivative_sup(width, order):
    """sup |d^n/dx^n smoothstep7(x / width)| on a dense grid."""
    if order == 0:
        return 1.0
    t = np.linspace(0.0, 1.0, 4001)
    coeffs = np.array([0, 0, 0, 0, 35, -84, 70, -20], dtype=float)
    d = coeffs.copy()
    for _ in range(order):
        d = np.polynomial.polynomial.polyder(d)
    vals = np.abs(np.polynomial.polynomial.polyval(t, d))
    return float(vals.max() / width ** order)


def embedding_certificate(w: Weight, p, k, x0) -> EmbeddingCertificate:
    """Neighbourhood V of a non-order-k-critical x0 and an explicit constant C
    with  integral_V |u| dx <= C * ||u||_{H^{k,p}}.

    C = C2 + C1*C3/k!  where C1 bounds the dual density with the monomial
    factor on V, C2 the plain dual density off the inner half U1, and C3 the
    Leibniz constant of the fixed polynomial bump.
    """
    from .criticality import CriticalityQuery, classify_point

    if classify_point(w, CriticalityQuery(p, float(k), x0, BOTH)):
        raise ValueError(f"x0={x0} is critical of order {k}; no embedding certificate")
    dom = w.domain
    others = [c for c in _crit.interesting_points(w) if not math.isclose(c, x0, abs_tol=1e-12)]
    eps = min([abs(c - x0) for c in others] + [dom.length / 2.0])
    res = None
    for _ in range(60):
        V = (max(x0 - eps / 2, dom.a_minus), min(x0 + eps / 2, dom.a_plus))
        res = integrate_dual(w, p, float(k), x0, V)
        if res.finite:
            break
        eps /= 2
    if res is None or not res.finite:
        raise RuntimeError("could not certify a finite dual density near x0")
    lV, rV = V
    U1 = (max(x0 - eps / 4, dom.a_minus), min(x0 + eps / 4, dom.a_plus))
    pp = p / (p - 1.0) if p > 1 else None
    if p > 1:
        C1 = res.value ** (1.0 / pp)
        c2_val = 0.0
        for span in ((lV, U1[0]), (U1[1], rV)):
            if span[1] > span[0]:
                c2_val += integrate_dual(w, p, 0.0, x0, span).expect("off-core dual density")
        C2 = c2_val ** (1.0 / pp)
    else:
        C1 = res.value
        c2_val = 0.0
        for span in ((lV, U1[0]), (U1[1], rV)):
            if span[1] > span[0]:
                c2_val = max(c2_val, ess_sup_dual(w, span[0], span[1], x0, 0.0))
        C2 = c2_val
    width = min(U1[0] - lV, rV - U1[1]) or (rV - lV) / 4
    width = max(width, (rV - lV) / 8)
    sup_d = max(_bump_derivative_sup(width, n) for n in range(k + 1))
    C3 = sup_d * (2.0 ** k)
    C = C2 + C1 * C3 / math.factorial(k)
    return EmbeddingCertificate(x0, k, p, V, U1, C, C1, C2, C3)


def poincare_validity(w: Weight):
    """'holds' when the domain splits into finitely many monotone pieces of w;
    'unknown' in the presence of a comb (the non-stable counterexample)."""
    return "unknown" if w.has_comb() else "holds"
