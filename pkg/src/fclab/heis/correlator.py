"""Products and iterates of free-boson intertwining operators, their formal
correlator series, numeric sums with convergence probes, and the independent
closed-form oracle for highest-weight insertions."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction

from ..branch import Assignment, BranchedPoint, log_branch
from ..convlab import ConvergenceReport, abs_convergence_probe
from ..series import FormalSeries, Frame, Monomial, Window
from .fock import FockModule, FockVector
from .nil import Nil, NilContext, log_expansion
from .ops import HeisError, IntwOp, intw, op_series, paired_series

Index = tuple[int, ...]


@dataclass
class DualVector:
    """A vector of the pairing dual: Gram-paired components plus the
    epsilon-monomial of the ring-valued pairing to report."""
    vec: FockVector
    extract: Index | None = None

    def index(self) -> Index:
        if self.extract is None:
            return self.vec.module.ctx.zero_index()
        return tuple(self.extract)


def is_hw(v: FockVector) -> bool:
    return set(v.comps) <= {()}


class FreeBoson:
    """Charge data (lambda_i + nu_i e_i, e_i^{K_i} = 0) for the three input
    slots, the derived intermediate and target modules, and the four
    intertwining operators entering products and iterates."""

    def __init__(self, lams, nus=(0, 0, 0), korders=(1, 1, 1), cutoff: int = 8):
        self.lams = tuple(Fraction(x) for x in lams)
        self.nus = tuple(Fraction(x) for x in nus)
        self.korders = tuple(int(k) for k in korders)
        self.cutoff = int(cutoff)
        if len(self.lams) != 3 or len(self.nus) != 3 or len(self.korders) != 3:
            raise HeisError("three charges, three nil slopes, three orders")
        self.ctx = NilContext(("e1", "e2", "e3"), self.korders)

        def charge(i: int) -> Nil:
            c = Nil.const(self.ctx, self.lams[i])
            if self.nus[i]:
                c = c + Nil.gen(self.ctx, self.ctx.gens[i], self.nus[i])
            return c

        self.charges = tuple(charge(i) for i in range(3))
        c1, c2, c3 = self.charges
        mk = lambda ch: FockModule(self.ctx, ch, self.cutoff)
        self.W1, self.W2, self.W3 = mk(c1), mk(c2), mk(c3)
        self.M1 = mk(c2 + c3)
        self.M2 = mk(c1 + c2)
        self.W4 = mk(c1 + c2 + c3)
        self.vac = mk(Nil.const(self.ctx, Fraction(0)))
        # product: Y1(w1, x1) Y2(w2, x2) w3; iterate: Yi1(Yi2(w1, x0) w2, x2) w3
        self.Y2 = intw(self.W2, self.W3, self.M1)
        self.Y1 = intw(self.W1, self.M1, self.W4)
        self.Yi2 = intw(self.W1, self.W2, self.M2)
        self.Yi1 = intw(self.M2, self.W3, self.W4)

    def module_op(self, module: FockModule) -> IntwOp:
        return intw(self.vac, module, module)

    def hws(self, jordan=(0, 0, 0)):
        """Highest-weight vectors, optionally at a Jordan depth (an epsilon
        power of the module's own generator)."""
        out = []
        for i, (mod, j) in enumerate(zip((self.W1, self.W2, self.W3), jordan)):
            coeff = Nil.const(self.ctx, Fraction(1)) if j == 0 else \
                Nil(self.ctx, {tuple(j if k == i else 0 for k in range(3)): Fraction(1)})
            out.append(mod.hw(coeff))
        return tuple(out)

    def dual_hw(self, extract: Index | None = None) -> DualVector:
        return DualVector(self.W4.hw(), extract)

    def vacuum(self) -> FockVector:
        return self.vac.hw()

    def current(self) -> FockVector:
        """h(-1) applied to the vacuum."""
        return self.vac.hw().h(-1)


# ---------------------------------------------------------------------------
# series assembly
# ---------------------------------------------------------------------------

def _terms_to_series(terms: dict[Monomial, object]) -> FormalSeries:
    clean = {m: c for m, c in terms.items() if c != 0}
    tag = "rational"
    for c in clean.values():
        if not isinstance(c, (int, Fraction)):
            tag = "complex"
            break
    if tag == "complex":
        clean = {m: complex(c) for m, c in clean.items()}
    if not clean:
        return FormalSeries.zero(tag, Frame({}))
    wins: dict[str, list] = {}
    for m in clean:
        for var, e, b in m.entries:
            w = wins.setdefault(var, [e, e, b])
            w[0] = min(w[0], e)
            w[1] = max(w[1], e)
            w[2] = max(w[2], b)
    frame = Frame({v: Window(w[0], w[1], w[2]) for v, w in wins.items()})
    return FormalSeries(tag, clean, frame)


def product_correlator(tb: FreeBoson, w1: FockVector, w2: FockVector,
                       w3: FockVector, dual: DualVector,
                       level_max: int | None = None,
                       variables: tuple[str, str] = ("x1", "x2"),
                       allow_fast: bool = True) -> FormalSeries:
    """<dual, Y1(w1, x1) pi_n(Y2(w2, x2) w3)> summed over intermediate
    weights up to the cutoff, as a two-variable log series."""
    lm = tb.cutoff if level_max is None else level_max
    if allow_fast and all(map(is_hw, (w1, w2, w3, dual.vec))):
        table = fast_product_table(tb, w1, w2, w3, dual, lm)
    else:
        table = _generic_product_table(tb, w1, w2, w3, dual, lm)
    x1, x2 = variables
    idx = dual.index()
    terms: dict[Monomial, object] = {}
    for (e1, j1, e2, j2), nil in table.items():
        c = nil.coeff(idx)
        if c == 0:
            continue
        m = Monomial.make({x1: e1, x2: e2}, {x1: j1, x2: j2})
        terms[m] = terms.get(m, 0) + c
    return _terms_to_series(terms)


def _generic_product_table(tb: FreeBoson, w1, w2, w3, dual: DualVector, lm: int):
    inner = op_series(tb.Y2, w2, w3, level_max=lm)
    out: dict[tuple, Nil] = {}
    for (e2, j2), vec in inner.items():
        paired = paired_series(dual.vec, tb.Y1, w1, vec)
        for (e1, j1), nil in paired.items():
            key = (e1, j1, e2, j2)
            prev = out.get(key)
            out[key] = nil if prev is None else prev + nil
    return out


def iterate_correlator(tb: FreeBoson, w1: FockVector, w2: FockVector,
                       w3: FockVector, dual: DualVector,
                       level_max: int | None = None,
                       variables: tuple[str, str] = ("x0", "x2"),
                       allow_fast: bool = True) -> FormalSeries:
    """<dual, Yi1(pi_n(Yi2(w1, x0) w2), x2) w3> summed over intermediate
    weights up to the cutoff."""
    lm = tb.cutoff if level_max is None else level_max
    if allow_fast and all(map(is_hw, (w1, w2, w3, dual.vec))):
        table = fast_iterate_table(tb, w1, w2, w3, dual, lm)
    else:
        table = _generic_iterate_table(tb, w1, w2, w3, dual, lm)
    x0, x2 = variables
    idx = dual.index()
    terms: dict[Monomial, object] = {}
    for (e0, j0, e2, j2), nil in table.items():
        c = nil.coeff(idx)
        if c == 0:
            continue
        m = Monomial.make({x0: e0, x2: e2}, {x0: j0, x2: j2})
        terms[m] = terms.get(m, 0) + c
    return _terms_to_series(terms)


def _generic_iterate_table(tb: FreeBoson, w1, w2, w3, dual: DualVector, lm: int):
    inner = op_series(tb.Yi2, w1, w2, level_max=lm)
    out: dict[tuple, Nil] = {}
    for (e0, j0), vec in inner.items():
        paired = paired_series(dual.vec, tb.Yi1, vec, w3)
        for (e2, j2), nil in paired.items():
            key = (e0, j0, e2, j2)
            prev = out.get(key)
            out[key] = nil if prev is None else prev + nil
    return out


# ---------------------------------------------------------------------------
# fast highest-weight engine: Newton recursion on the contraction exponential
# ---------------------------------------------------------------------------

def _hw_coeff(v: FockVector) -> Nil:
    return v.comps.get((), Nil(v.module.ctx))


def fast_product_table(tb: FreeBoson, w1, w2, w3, dual: DualVector, lm: int):
    """All-highest-weight product correlator through the oscillator
    contraction exponential (1 - x2/x1)^{c1 c2}:
    n e_n = -c1 c2 sum_{i<n} e_i."""
    ctx = tb.ctx
    c1, c2, c3 = tb.charges
    pref = _hw_coeff(w1) * _hw_coeff(w2) * _hw_coeff(w3) * _hw_coeff(dual.vec)
    if not (tb.W4.charge - dual.vec.module.charge).is_zero():
        return {}
    a = -(c1 * c2)
    e = [Nil.const(ctx, Fraction(1))]
    prefix = e[0]
    for n in range(1, lm + 1):
        en = (a * prefix).map_coeffs(lambda c, n=n: c * Fraction(1, n))
        e.append(en)
        prefix = prefix + en
    A = c1 * (c2 + c3)   # x1 exponent before the -n shift
    B = c2 * c3          # x2 exponent before the +n shift
    logsA = log_expansion(A.nilpart())
    logsB = log_expansion(B.nilpart())
    baseA, baseB = Fraction(A.base()), Fraction(B.base())
    out: dict[tuple, Nil] = {}
    for n in range(0, lm + 1):
        if e[n].is_zero():
            continue
        for jA, lA in logsA:
            for jB, lB in logsB:
                val = pref * e[n] * lA * lB
                if val.is_zero():
                    continue
                key = (baseA - n, jA, baseB + n, jB)
                prev = out.get(key)
                out[key] = val if prev is None else prev + val
    return out


def fast_iterate_table(tb: FreeBoson, w1, w2, w3, dual: DualVector, lm: int):
    """All-highest-weight iterate correlator through the contraction
    exponential (1 + x0/x2)^{c1 c3}: n f_n = c1 c3 sum_j (-1)^(j-1) f_{n-j}."""
    ctx = tb.ctx
    c1, c2, c3 = tb.charges
    pref = _hw_coeff(w1) * _hw_coeff(w2) * _hw_coeff(w3) * _hw_coeff(dual.vec)
    if not (tb.W4.charge - dual.vec.module.charge).is_zero():
        return {}
    b = c1 * c3
    f = [Nil.const(ctx, Fraction(1))]
    for n in range(1, lm + 1):
        alt = Nil(ctx)
        sign = 1
        for j in range(1, n + 1):
            alt = alt + f[n - j].map_coeffs(lambda c, s=sign: c * s)
            sign = -sign
        f.append((b * alt).map_coeffs(lambda c, n=n: c * Fraction(1, n)))
    C = c1 * c2                  # x0 exponent before the +n shift
    D = (c1 + c2) * c3           # x2 exponent before the -n shift
    logsC = log_expansion(C.nilpart())
    logsD = log_expansion(D.nilpart())
    baseC, baseD = Fraction(C.base()), Fraction(D.base())
    out: dict[tuple, Nil] = {}
    for n in range(0, lm + 1):
        if f[n].is_zero():
            continue
        for jC, lC in logsC:
            for jD, lD in logsD:
                val = pref * f[n] * lC * lD
                if val.is_zero():
                    continue
                key = (baseC + n, jC, baseD - n, jD)
                prev = out.get(key)
                out[key] = val if prev is None else prev + val
    return out


# ---------------------------------------------------------------------------
# numeric sums with probes
# ---------------------------------------------------------------------------

def correlator_value(series: FormalSeries, points: dict[str, BranchedPoint],
                     weight_var: str, tol: float = 1e-9,
                     max_terms: int = 10_000,
                     exhaustive: bool = False) -> ConvergenceReport:
    """Specialize a correlator series and sum it grouped by the weight
    variable's exponent, ascending, with the convergence probe attached."""
    from ..branch import specialize
    stream = specialize(series, Assignment(points), ("weight", weight_var))
    return abs_convergence_probe(stream, tol, max_terms=max_terms,
                                 exhaustive=exhaustive)


def _terminated(series: FormalSeries, var: str, lm: int) -> bool:
    """True when the support of the weight variable stops strictly below the
    enumerated range: missing levels inside the cutoff are exactly zero, so
    the series is finitely supported, not truncated."""
    exps = [m.exp(var) for m in series.terms]
    if not exps:
        return True
    return max(exps) - min(exps) < lm


def product_value(tb: FreeBoson, w1, w2, w3, dual: DualVector,
                  pt1: BranchedPoint, pt2: BranchedPoint,
                  level_max: int | None = None, tol: float = 1e-9,
                  max_terms: int = 10_000) -> ConvergenceReport:
    lm = tb.cutoff if level_max is None else level_max
    series = product_correlator(tb, w1, w2, w3, dual, level_max)
    return correlator_value(series, {"x1": pt1, "x2": pt2}, "x2", tol, max_terms,
                            exhaustive=_terminated(series, "x2", lm))


def iterate_value(tb: FreeBoson, w1, w2, w3, dual: DualVector,
                  pt0: BranchedPoint, pt2: BranchedPoint,
                  level_max: int | None = None, tol: float = 1e-9,
                  max_terms: int = 10_000) -> ConvergenceReport:
    lm = tb.cutoff if level_max is None else level_max
    series = iterate_correlator(tb, w1, w2, w3, dual, level_max)
    return correlator_value(series, {"x0": pt0, "x2": pt2}, "x0", tol, max_terms,
                            exhaustive=_terminated(series, "x0", lm))


# ---------------------------------------------------------------------------
# closed-form oracle (highest-weight insertions only)
# ---------------------------------------------------------------------------

def exp_nil(n: Nil) -> Nil:
    """exp of a ring element with complex base."""
    scal = cmath.exp(complex(n.base()))
    nil = n.nilpart().map_coeffs(complex)
    out = Nil.const(n.ctx, scal)
    term = Nil.const(n.ctx, scal)
    k = 1
    while True:
        term = (term * nil).map_coeffs(lambda c, k=k: c / k)
        if term.is_zero():
            break
        out = out + term
        k += 1
    return out


@dataclass
class ClosedFormCorrelator:
    """z1^a z2^b (z1-z2)^c (product) or z0^c (z2+z0)^a z2^b (iterate) with
    ring-valued exponents; the log polynomial appears on evaluation."""
    kind: str
    a: Nil  # c1 c3
    b: Nil  # c2 c3
    c: Nil  # c1 c2
    prefactor: Nil = None

    def value(self, first: BranchedPoint, second: BranchedPoint) -> Nil:
        """Product: (first, second) = (z1, z2) with |z1| > |z2|;
        iterate: (first, second) = (z0, z2) with |z2| > |z0|.
        The inner binomial log uses the principal branch, matching the sum
        of the convergent expansion."""
        if self.kind == "product":
            l1, l2 = log_branch(first), log_branch(second)
            u = second.z / first.z
            expo = self.a * l1 + self.b * l2 + self.c * (l1 + cmath.log(1.0 - u))
        else:
            l0, l2 = log_branch(first), log_branch(second)
            u = first.z / second.z
            expo = self.c * l0 + self.b * l2 + self.a * (l2 + cmath.log(1.0 + u))
        out = exp_nil(expo.map_coeffs(complex))
        if self.prefactor is not None:
            out = out * self.prefactor
        return out


def closed_form_correlator(tb: FreeBoson, kind: str = "product",
                           w1: FockVector | None = None,
                           w2: FockVector | None = None,
                           w3: FockVector | None = None,
                           dual: DualVector | None = None) -> ClosedFormCorrelator:
    for v in (w1, w2, w3):
        if v is not None and not is_hw(v):
            raise HeisError("the closed-form oracle covers highest-weight "
                            "insertions only; use derivative recursions for "
                            "descendants")
    if dual is not None and not is_hw(dual.vec):
        raise HeisError("the closed-form oracle needs a highest-weight dual")
    c1, c2, c3 = tb.charges
    pref = Nil.const(tb.ctx, Fraction(1))
    for v in (w1, w2, w3):
        if v is not None:
            pref = pref * _hw_coeff(v)
    if dual is not None:
        pref = pref * _hw_coeff(dual.vec)
    return ClosedFormCorrelator(kind, c1 * c3, c2 * c3, c1 * c2, pref)
