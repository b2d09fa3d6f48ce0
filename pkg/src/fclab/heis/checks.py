"""Structural checks on products and iterates of the free-boson operators:
the two-sided argument-swap rewrites with their branch casework, sl(2)
bracket relations, the composite Jacobi identity in formal and numeric form,
vanishing propagation to weight components, and analyticity surrogates."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..branch import BranchedPoint, log_branch, rotate_point
from ..convlab import abs_convergence_probe
from ..delta import DeltaExpr, expand_delta, kernel
from ..series import FormalSeries, Frame, Monomial, Window
from .correlator import (DualVector, FreeBoson, closed_form_correlator,
                         is_hw, iterate_correlator, iterate_value,
                         product_correlator, product_value)
from .fock import FockVector
from .nil import Nil
from .ops import HeisError, op_series, paired_series

TWO_PI_I = 2j * math.pi


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_dev: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "max_dev": self.max_dev, "details": self.details}


def _ek(e: Fraction, j: int, l: complex) -> complex:
    return cmath.exp(complex(e) * l) * l ** j


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# product = iterate (analytic continuation on overlapping domains)
# ---------------------------------------------------------------------------

def equivalence_check(tb: FreeBoson, z1: complex, z2: complex,
                      tol: float = 1e-8, level_max: int | None = None,
                      jordan=(0, 0, 0), extract=None) -> CheckReport:
    """At positive-real points with |z1| > |z2| > |z1 - z2| both composition
    orders converge; their sums agree with each other and the closed form."""
    z0 = z1 - z2
    if not (abs(z1) > abs(z2) > abs(z0) > 0):
        raise HeisError("need |z1| > |z2| > |z0| > 0 for both routes")
    w1, w2, w3 = tb.hws(jordan)
    dual = tb.dual_hw(extract)
    p1, p2, p0 = (BranchedPoint(z1), BranchedPoint(z2), BranchedPoint(z0))
    prod = product_value(tb, w1, w2, w3, dual, p1, p2,
                         level_max=level_max, tol=tol / 10)
    iter_ = iterate_value(tb, w1, w2, w3, dual, p0, p2,
                          level_max=level_max, tol=tol / 10)
    oracle = closed_form_correlator(tb, "product", w1, w2, w3, dual) \
        .value(p1, p2).coeff(dual.index())
    dev = abs(prod.value - iter_.value)
    passed = prod.converged() and iter_.converged() and dev <= tol
    return CheckReport(
        "equivalence", passed, dev,
        {"product": prod.to_dict(), "iterate": iter_.to_dict(),
         "oracle": {"re": oracle.real, "im": oracle.imag},
         "oracle_dev": abs(prod.value - oracle)})


# ---------------------------------------------------------------------------
# argument-swap rewrites (the i2p / p2i equations)
# ---------------------------------------------------------------------------

def _iterate_component_table(tb: FreeBoson, w1, w2, w3, dual: DualVector,
                             pt0: BranchedPoint, pt2: BranchedPoint):
    """Per intermediate-key contributions of the iterate at (z0, z2)."""
    inner = op_series(tb.Yi2, w1, w2)
    idx = dual.index()
    l0, l2 = log_branch(pt0), log_branch(pt2)
    out = {}
    for (e0, j0), vec in inner.items():
        paired = paired_series(dual.vec, tb.Yi1, vec, w3)
        val = sum(nil.coeff(idx) * _ek(e2, j2, l2)
                  for (e2, j2), nil in paired.items())
        out[(e0, j0)] = complex(val) * _ek(e0, j0, l0)
    return inner, out


def i2p_check(tb: FreeBoson, w1, w2, w3, dual: DualVector,
              pt0: BranchedPoint, pt2: BranchedPoint,
              tol: float = 1e-8) -> CheckReport:
    """Iterate at (z0, z2) against its rewriting as a swapped product: the
    swap inserts e^{x2 L(-1)}, rotates x2 by e^{-i pi} with the branch
    casework, and pairs against e^{z2 L'(1)} on the dual side.  Equality is
    checked per intermediate weight component and for the full sums."""
    inner, lhs = _iterate_component_table(tb, w1, w2, w3, dual, pt0, pt2)
    idx = dual.index()
    z2 = complex(pt2.z)
    d2 = dual.vec.exp_L(1, z2)
    pt2m = rotate_point(pt2, -1)
    zrot = complex(pt2m.z)
    inner_pt = rotate_point(pt2m, 1)
    ly = log_branch(inner_pt)
    l0 = log_branch(pt0)

    # dual-side ladder: e^{x2 L(-1)} paired through e^{x2 L(1)} transposes
    ladder = []
    vec = d2
    fact = 1.0
    k = 0
    while not vec.is_zero():
        ladder.append((k, fact, vec))
        vec = vec.L(1)
        k += 1
        fact /= k
    rhs = {}
    cap = d2.max_level()
    for (e0, j0), ivec in inner.items():
        series = op_series(tb.Yi1, ivec, w3, level_max=cap)
        total = 0j
        for kk, fact, dk in ladder:
            zk = zrot ** kk * fact
            for (e2, j2), v in series.items():
                val = dk.pair(v).coeff(idx)
                if val:
                    total += zk * complex(val) * _ek(e2, j2, ly)
        rhs[(e0, j0)] = total * _ek(e0, j0, l0)

    comp_dev = max((abs(lhs[k] - rhs.get(k, 0j)) for k in lhs), default=0.0)
    sum_dev = abs(sum(lhs.values()) - sum(rhs.values()))
    passed = comp_dev <= tol and sum_dev <= tol
    return CheckReport("i2p", passed, max(comp_dev, sum_dev), {
        "component_dev": comp_dev, "sum_dev": sum_dev,
        "components": len(lhs), "rotation_case": f"p'={pt2m.p}",
        "lhs_sum": sum(lhs.values()).real, "components_lhs": None})


def p2i_check(tb: FreeBoson, w1, w2, w3, dual: DualVector,
              pt1: BranchedPoint, pt2: BranchedPoint,
              tol: float = 1e-8) -> CheckReport:
    """Product at (z1, z2) against its rewriting as a swapped iterate, with
    the e^{+i pi} rotation casework on x1."""
    inner = op_series(tb.Y2, w2, w3)
    idx = dual.index()
    l1, l2 = log_branch(pt1), log_branch(pt2)
    z1 = complex(pt1.z)
    d1 = dual.vec.exp_L(1, z1)
    pt1p = rotate_point(pt1, 1)
    zrot = complex(pt1p.z)
    ly = log_branch(rotate_point(pt1p, -1))

    ladder = []
    vec = d1
    fact = 1.0
    k = 0
    while not vec.is_zero():
        ladder.append((k, fact, vec))
        vec = vec.L(1)
        k += 1
        fact /= k

    cap_lhs = dual.vec.max_level()
    cap_rhs = d1.max_level()
    lhs, rhs = {}, {}
    for (e2, j2), ivec in inner.items():
        series = op_series(tb.Y1, w1, ivec, level_max=max(cap_lhs, cap_rhs))
        tot_l = 0j
        tot_r = 0j
        for (e1, j1), v in series.items():
            lv = dual.vec.pair(v).coeff(idx)
            if lv:
                tot_l += complex(lv) * _ek(e1, j1, l1)
            for kk, fact, dk in ladder:
                rv = dk.pair(v).coeff(idx)
                if rv:
                    tot_r += zrot ** kk * fact * complex(rv) * _ek(e1, j1, ly)
        lhs[(e2, j2)] = tot_l * _ek(e2, j2, l2)
        rhs[(e2, j2)] = tot_r * _ek(e2, j2, l2)

    comp_dev = max((abs(lhs[k] - rhs.get(k, 0j)) for k in lhs), default=0.0)
    sum_dev = abs(sum(lhs.values()) - sum(rhs.values()))
    passed = comp_dev <= tol and sum_dev <= tol
    return CheckReport("p2i", passed, max(comp_dev, sum_dev), {
        "component_dev": comp_dev, "sum_dev": sum_dev,
        "rotation_case": f"p'={pt1p.p}"})


def omega_roundtrip_check(tb: FreeBoson, dual: DualVector, w3: FockVector,
                          m: FockVector, pt: BranchedPoint,
                          tol: float = 1e-9) -> CheckReport:
    """Applying the swap up and then down reproduces the operator's values:
    both rotations and both translation exponentials are exercised."""
    idx = dual.index()
    cap = dual.vec.max_level()
    l = log_branch(pt)
    direct = 0j
    series = op_series(tb.Yi1, m, w3, level_max=cap)
    for (e, j), v in series.items():
        val = dual.vec.pair(v).coeff(idx)
        if val:
            direct += complex(val) * _ek(e, j, l)

    # inner swap: A(w3, y) m = e^{y L(-1)} Y(m, e^{i pi} y) w3 at y = pt down
    ptd = rotate_point(pt, -1)
    inner_pt = rotate_point(ptd, 1)
    li = log_branch(inner_pt)
    va = tb.W4.zero()
    for (e, j), v in series.items():
        va = va + v.scaled(_ek(e, j, li))
    va = va.exp_L(-1, complex(ptd.z), level_max=cap + 2)
    # outer swap: e^{x L(-1)} A(w3, e^{-i pi} x) m at x = pt
    vb = va.exp_L(-1, complex(pt.z), level_max=cap + 2)
    roundtrip = dual.vec.pair(vb).coeff(idx)
    dev = abs(direct - complex(roundtrip))
    return CheckReport("omega-roundtrip", dev <= tol, dev,
                       {"direct": direct.real, "roundtrip": complex(roundtrip).real})


# ---------------------------------------------------------------------------
# sl(2) bracket relations
# ---------------------------------------------------------------------------

def _value_with(tb: FreeBoson, kind: str, w1, w2, w3, dual: DualVector,
                ptA: BranchedPoint, ptB: BranchedPoint, tol: float,
                level_max=None) -> complex:
    if kind == "product":
        rep = product_value(tb, w1, w2, w3, dual, ptA, ptB,
                            level_max=level_max, tol=tol)
    else:
        rep = iterate_value(tb, w1, w2, w3, dual, ptA, ptB,
                            level_max=level_max, tol=tol)
    return rep.value


def check_sl2(tb: FreeBoson, kind: str, j: int, w1, w2, w3, dual: DualVector,
              ptA: BranchedPoint, ptB: BranchedPoint, tol: float = 1e-8,
              fd_cross: bool = False) -> CheckReport:
    """<w4', L(j) F(...)> against the three-slot right-hand side with its
    binomial z factors; kind selects the product (ptA, ptB) = (z1, z2) or
    the iterate (ptA, ptB) = (z0, z2)."""
    if j not in (-1, 0, 1):
        raise HeisError("sl(2) bracket uses j in {-1, 0, 1}")
    idx = dual.index()
    probe_tol = tol / 10
    ldual = DualVector(dual.vec.L(-j), dual.extract)
    lhs = _value_with(tb, kind, w1, w2, w3, ldual, ptA, ptB, probe_tol)

    if kind == "product":
        z1 = complex(ptA.z)
        z2 = complex(ptB.z)
    else:
        z2 = complex(ptB.z)
        z1 = z2 + complex(ptA.z)  # z2 + z0
    from ..series import binom
    rhs = 0j
    slot12 = 0j
    for i in range(0, j + 2):
        c = complex(binom(j + 1, i)) * z1 ** i
        if c:
            term = c * _value_with(tb, kind, w1.L(j - i), w2, w3, dual,
                                   ptA, ptB, probe_tol)
            rhs += term
            slot12 += term
    for i in range(0, j + 2):
        c = complex(binom(j + 1, i)) * z2 ** i
        if c:
            term = c * _value_with(tb, kind, w1, w2.L(j - i), w3, dual,
                                   ptA, ptB, probe_tol)
            rhs += term
            slot12 += term
    rhs += _value_with(tb, kind, w1, w2, w3.L(j), dual, ptA, ptB, probe_tol)

    dev = _rel(lhs, rhs)
    details = {"j": j, "lhs": {"re": lhs.real, "im": lhs.imag},
               "rhs": {"re": rhs.real, "im": rhs.imag}}
    passed = dev <= tol
    if fd_cross and j == -1 and all(map(is_hw, (w1, w2, w3, dual.vec))):
        # slots 1 + 2 are (d/dz1 + d/dz2) of the closed form
        cf = closed_form_correlator(tb, kind, w1, w2, w3, dual)
        h = 1e-4

        def fval(a: complex, b: complex) -> complex:
            return cf.value(BranchedPoint(a, ptA.p),
                            BranchedPoint(b, ptB.p)).coeff(idx)

        if kind == "product":
            fd = (fval(z1 + h, z2) - fval(z1 - h, z2)) / (2 * h) \
                + (fval(z1, z2 + h) - fval(z1, z2 - h)) / (2 * h)
        else:
            # the slot insertions differentiate in (z1, z2) = (z2+z0, z2):
            # d/dz1 at fixed z2 moves z0, d/dz2 at fixed z1 moves z0 oppositely
            z0 = complex(ptA.z)
            fd = (fval(z0 + h, z2) - fval(z0 - h, z2)) / (2 * h) \
                + (fval(z0 - h, z2 + h) - fval(z0 + h, z2 - h)) / (2 * h)
        fd_dev = _rel(slot12, fd)
        details["fd_dev"] = fd_dev
        passed = passed and fd_dev <= 1e-6
    return CheckReport(f"sl2-{kind}-j{j}", passed, dev, details)


# ---------------------------------------------------------------------------
# analyticity surrogate and branch bookkeeping
# ---------------------------------------------------------------------------

def analytic_fd_check(tb: FreeBoson, points, h: float = 1e-4,
                      tol: float = 1e-6, level_max: int | None = None) -> CheckReport:
    """Central finite difference in z2 of the summed product correlator
    against the series with the translation generator inserted in slot 2."""
    w1, w2, w3 = tb.hws()
    dual = tb.dual_hw()
    worst = 0.0
    rows = []
    for z1, z2 in points:
        p1 = BranchedPoint(z1)
        plus = product_value(tb, w1, w2, w3, dual, p1,
                             BranchedPoint(z2 + h), level_max=level_max, tol=1e-12)
        minus = product_value(tb, w1, w2, w3, dual, p1,
                              BranchedPoint(z2 - h), level_max=level_max, tol=1e-12)
        fd = (plus.value - minus.value) / (2 * h)
        ins = product_value(tb, w1, w2.L(-1), w3, dual, p1,
                            BranchedPoint(z2), level_max=level_max, tol=1e-12)
        dev = _rel(fd, ins.value)
        worst = max(worst, dev)
        rows.append({"z1": repr(z1), "z2": repr(z2), "rel_err": dev})
    return CheckReport("analytic-fd", worst <= tol, worst, {"points": rows})


def branch_adjacency_check(alpha: Fraction, z: complex,
                           tol: float = 1e-10) -> CheckReport:
    """On a single-exponent series c z^alpha the branch step p -> p+1
    multiplies the value by exactly e^{2 pi i alpha}."""
    lo = log_branch(BranchedPoint(z, 0))
    hi = log_branch(BranchedPoint(z, 1))
    v0 = cmath.exp(complex(alpha) * lo)
    v1 = cmath.exp(complex(alpha) * hi)
    predicted = cmath.exp(TWO_PI_I * complex(alpha))
    dev = abs(v1 / v0 - predicted)
    return CheckReport("branch-adjacency", dev <= tol, dev,
                       {"alpha": str(alpha), "phase": predicted.real})


def branch_invariance_check(tb: FreeBoson, z1: complex, z2: complex,
                            tol: float = 1e-10) -> CheckReport:
    """Integer-exponent, log-free correlators take the same value on every
    branch."""
    w1, w2, w3 = tb.hws()
    dual = tb.dual_hw()
    vals = []
    for p in (-1, 0, 1):
        rep = product_value(tb, w1, w2, w3, dual,
                            BranchedPoint(z1, p), BranchedPoint(z2, p), tol=1e-12)
        vals.append(rep.value)
    dev = max(abs(v - vals[1]) for v in vals)
    return CheckReport("branch-invariance", dev <= tol, dev, {})


def triple_reorder_check(tb: FreeBoson, z1: complex, z2: complex,
                         tol: float = 1e-9, extract=None,
                         level_max: int | None = None) -> CheckReport:
    """Two summation schedules of the specialized correlator: grouped by
    intermediate weight, and term-by-term in descending magnitude."""
    from ..branch import Assignment, specialize
    w1, w2, w3 = tb.hws()
    dual = tb.dual_hw(extract)
    series = product_correlator(tb, w1, w2, w3, dual, level_max)
    pts = Assignment({"x1": BranchedPoint(z1), "x2": BranchedPoint(z2)})
    by_weight = specialize(series, pts, ("weight", "x2"))
    by_magnitude = specialize(series, pts, ("magnitude",))
    rep_w = abs_convergence_probe(by_weight, tol / 10)
    rep_m = abs_convergence_probe(by_magnitude, tol / 10)
    dev = abs(rep_w.value - rep_m.value)
    passed = rep_w.converged() and dev <= tol
    return CheckReport("triple-reorder", passed, dev, {
        "weight": rep_w.to_dict(), "magnitude": rep_m.to_dict()})


# ---------------------------------------------------------------------------
# vanishing propagation
# ---------------------------------------------------------------------------

def vanishing_check(tb: FreeBoson, w_grid, dual: DualVector,
                    pt0: BranchedPoint, pt2: BranchedPoint,
                    tol: float = 1e-9, negative_control: bool = False) -> CheckReport:
    """A construction whose full pairings vanish on the grid has every
    weight-component pairing small as well.  The construction here is the
    difference between the iterate and its argument-swap rewriting (an exact
    zero of the theory); the negative control breaks the rewriting by
    dropping the branch rotation."""
    worst_full = 0.0
    worst_comp = 0.0
    idx = dual.index()
    for (w1, w2, w3) in w_grid:
        inner, lhs = _iterate_component_table(tb, w1, w2, w3, dual, pt0, pt2)
        if negative_control:
            # deliberately evaluate the swapped form at the unrotated point
            z2 = complex(pt2.z)
            d2 = dual.vec.exp_L(1, z2)
            cap = d2.max_level()
            ly = log_branch(pt2)  # wrong: skips the e^{-i pi} bookkeeping
            l0 = log_branch(pt0)
            rhs = {}
            for (e0, j0), ivec in inner.items():
                series = op_series(tb.Yi1, ivec, w3, level_max=cap)
                tot = sum(complex(d2.pair(v).coeff(idx)) * _ek(e2, j2, ly)
                          for (e2, j2), v in series.items())
                rhs[(e0, j0)] = tot * _ek(e0, j0, l0)
        else:
            rep = i2p_check(tb, w1, w2, w3, dual, pt0, pt2, tol)
            worst_comp = max(worst_comp, rep.details["component_dev"])
            worst_full = max(worst_full, rep.details["sum_dev"])
            continue
        full = abs(sum(lhs.values()) - sum(rhs.values()))
        comp = max((abs(lhs[k] - rhs.get(k, 0j)) for k in lhs), default=0.0)
        worst_full = max(worst_full, full)
        worst_comp = max(worst_comp, comp)

    if negative_control:
        passed = worst_full > tol  # precondition unmet and detected
        note = "full pairing differs: vanishing precondition unmet"
    else:
        passed = worst_full <= tol and worst_comp <= tol
        note = "zero construction propagates to all weight components"
    return CheckReport("vanishing", passed, worst_comp,
                       {"full_dev": worst_full, "component_dev": worst_comp,
                        "note": note})
