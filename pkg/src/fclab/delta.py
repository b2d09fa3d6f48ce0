"""Shifted formal delta-function kernels and their product identities.

A kernel is one of a closed set of shapes

    v^{-1} delta(u/v)              (plain)
    v^{-1} delta((a + b)/v)        (shifted, plain outer)
    v      delta((a + b)/v^{-1})   (shifted, inverted outer)

expanding to sum_n (num)^n v^{-n-1} (resp. v^{n+1}), where the numerator is
a signed two-term affine form in formal variables and the shift parameters
z0, z1, z2, and (a + b)^n is always expanded in nonnegative powers of the
second summand.  Coefficients of a product of kernels at a fixed monomial
are exact finite sums where the shape pins all indices, and one-parameter
series (convergence-probed in numeric mode) where a single free index
remains; nothing else occurs for the shapes in scope, which is asserted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Mapping, Optional

from .convlab import ConvergenceReport, abs_convergence_probe
from .series import (ALPHABET, AffineSymbol, Coefficient, FormalSeries, Frame,
                     FrameError, Monomial, ParamPoly, SeriesError, Window,
                     binom, binomial_expand, coerce_coeff)

PARAM_NAMES = ("z0", "z1", "z2")
DOMAIN_GUARD = 1e-12


class DeltaError(SeriesError):
    pass


class DomainError(DeltaError):
    """A numeric point violates the stated domain of an identity."""


@dataclass(frozen=True)
class Atom:
    symbol: str
    sign: int = 1
    inv: bool = False

    def __post_init__(self):
        if self.symbol not in ALPHABET and self.symbol not in PARAM_NAMES:
            raise DeltaError(
                f"atom symbol {self.symbol!r} is neither a variable nor a shift")
        if self.sign not in (1, -1):
            raise DeltaError("atom sign must be +1 or -1")

    def is_variable(self) -> bool:
        return self.symbol in ALPHABET

    def exp_unit(self) -> int:
        return -1 if self.inv else 1


# (sign1, inv1, sign2, outer_inv) for the shifted two-summand shapes occurring
# in the identity lemma, the composite Jacobi displays and the tau action;
# the expansion direction is always the second summand.
_ALLOWED_SHAPES = {
    (1, False, -1, False),   # v^{-1} d((u - s)/v)
    (1, False, 1, False),    # v^{-1} d((s + u)/v)
    (-1, False, 1, False),   # v^{-1} d((-s + u)/v)
    (1, False, 1, True),     # v d((s + u)/v^{-1})
    (-1, True, 1, False),    # v^{-1} d((-s^{-1} + u)/v)
    (-1, False, 1, True),    # v d((-s + u)/v^{-1})
}


@dataclass(frozen=True)
class DeltaKernel:
    """One kernel; `atoms` has two entries for the shifted shapes and one for
    the plain kernel v^{-1} delta(u/v)."""

    outer: str
    atoms: tuple[Atom, ...]
    outer_inv: bool = False
    direction: str = ""

    def __post_init__(self):
        if self.outer not in ALPHABET and self.outer not in PARAM_NAMES:
            raise DeltaError(f"outer symbol {self.outer!r} unknown")
        if len(self.atoms) == 1:
            a = self.atoms[0]
            if a.sign != 1 or a.inv or self.outer_inv or not a.is_variable():
                raise DeltaError("plain kernel must be v^-1 d(u/v)")
            if a.symbol == self.outer:
                raise DeltaError("plain kernel needs distinct symbols")
            if not self.direction:
                object.__setattr__(self, "direction", a.symbol)
            return
        if len(self.atoms) != 2:
            raise DeltaError("kernel numerator must have one or two summands")
        a, b = self.atoms
        if a.symbol == b.symbol or self.outer in (a.symbol, b.symbol):
            raise DeltaError("kernel symbols must be pairwise distinct")
        if b.inv:
            raise DeltaError("an inverted symbol may appear only as the first summand")
        if not self.direction:
            object.__setattr__(self, "direction", b.symbol)
        if self.direction != b.symbol:
            raise DeltaError("expansion direction must name the second summand")
        shape = (a.sign, a.inv, b.sign, self.outer_inv)
        if shape not in _ALLOWED_SHAPES:
            raise DeltaError(f"kernel shape {shape} is not in the closed enumeration")
        if self.outer_inv and self.outer not in ALPHABET:
            raise DeltaError("inverted outer must be a formal variable")

    def variables(self) -> set[str]:
        out = {a.symbol for a in self.atoms if a.is_variable()}
        if self.outer in ALPHABET:
            out.add(self.outer)
        return out

    def __repr__(self):
        def at(x: Atom) -> str:
            s = "-" if x.sign < 0 else "+"
            return f"{s}{x.symbol}" + ("^-1" if x.inv else "")
        num = "(" + "".join(at(a) for a in self.atoms) + ")"
        if self.outer_inv:
            return f"{self.outer}*d({num}/{self.outer}^-1)"
        return f"{self.outer}^-1*d({num}/{self.outer})"


def kernel(outer: str, s1: int, a1: str, s2: int | None = None,
           a2: str | None = None, inv1: bool = False,
           outer_inv: bool = False) -> DeltaKernel:
    if a2 is None:
        return DeltaKernel(outer, (Atom(a1, s1, inv1),), outer_inv)
    return DeltaKernel(outer, (Atom(a1, s1, inv1), Atom(a2, s2)), outer_inv)


def flip(k: DeltaKernel) -> DeltaKernel:
    """The two-sided delta rewrite v^{-1} d((u - s)/v) = u^{-1} d((v + s)/u)
    (and v^{-1} d(u/v) = u^{-1} d(v/u) for plain kernels), valid for a
    leading formal variable u."""
    if k.outer_inv:
        raise DeltaError("flip applies to plain-outer kernels only")
    if len(k.atoms) == 1:
        return DeltaKernel(k.atoms[0].symbol, (Atom(k.outer, 1),))
    a, b = k.atoms
    if a.inv or not a.is_variable() or a.sign != 1 or b.sign != -1:
        raise DeltaError("flip applies to v^-1 d((u - s)/v) kernels only")
    return DeltaKernel(a.symbol, (Atom(k.outer, 1), Atom(b.symbol, 1)))


@dataclass
class DeltaExpr:
    factors: list[DeltaKernel]
    multiplier: Optional[FormalSeries] = None

    def __post_init__(self):
        if not 1 <= len(self.factors) <= 3:
            raise DeltaError("a delta expression has between one and three kernels")

    def variables(self) -> set[str]:
        out: set[str] = set()
        for k in self.factors:
            out |= k.variables()
        return out


# ---------------------------------------------------------------------------
# exact affine solver over Q, for the per-monomial index systems
# ---------------------------------------------------------------------------

def _solve_affine(rows: list[tuple[list[Fraction], Fraction]], nunk: int):
    """Gauss-Jordan.  Returns (particular solution, nullspace basis) or None
    when inconsistent."""
    mat = [list(coeffs) + [rhs] for coeffs, rhs in rows]
    pivots: list[int] = []
    r = 0
    for c in range(nunk):
        pr = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    for i in range(r, len(mat)):
        if all(x == 0 for x in mat[i][:nunk]) and mat[i][nunk] != 0:
            return None
    part = [Fraction(0)] * nunk
    for i, c in enumerate(pivots):
        part[c] = mat[i][nunk]
    basis = []
    for fc in (c for c in range(nunk) if c not in pivots):
        vec = [Fraction(0)] * nunk
        vec[fc] = Fraction(1)
        for i, c in enumerate(pivots):
            vec[c] = -mat[i][fc]
        basis.append(vec)
    return part, basis


def _primitive_int(vec: list[Fraction]) -> list[int]:
    lcm = 1
    for x in vec:
        lcm = lcm * x.denominator // gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    return [x // max(g, 1) for x in ints]


# ---------------------------------------------------------------------------
# expansion engine
# ---------------------------------------------------------------------------

class _KernelIndexing:
    """Linear structure of one kernel's term family.

    Shifted kernels: term(n, k) = C(n,k) sign1^(n-k) sign2^k
        * atom1^(n-k) atom2^k outer^(-n-1 or n+1), with k >= 0.
    Plain kernels: term(n) = u^n v^(-n-1); the k slot is pinned to 0.
    """

    def __init__(self, k: DeltaKernel, base: int):
        self.kernel = k
        self.n_idx = base
        self.k_idx = base + 1
        self._consts: dict[str, int] = {}

    def variable_rows(self) -> dict[str, dict[int, int]]:
        rows: dict[str, dict[int, int]] = {}
        k = self.kernel
        if k.outer in ALPHABET:
            sgn = 1 if k.outer_inv else -1
            rows.setdefault(k.outer, {})[self.n_idx] = sgn
            self._consts[k.outer] = sgn
        if len(k.atoms) == 1:
            rows.setdefault(k.atoms[0].symbol, {})[self.n_idx] = 1
            return rows
        a, b = k.atoms
        if a.is_variable():
            e = a.exp_unit()
            row = rows.setdefault(a.symbol, {})
            row[self.n_idx] = row.get(self.n_idx, 0) + e
            row[self.k_idx] = row.get(self.k_idx, 0) - e
        if b.is_variable():
            row = rows.setdefault(b.symbol, {})
            row[self.k_idx] = row.get(self.k_idx, 0) + b.exp_unit()
        return rows

    def const(self, var: str) -> int:
        return self._consts.get(var, 0)

    def pinned_k(self) -> bool:
        return len(self.kernel.atoms) == 1

    def coefficient(self, n: int, k: int, mode: str,
                    values: Mapping[str, complex] | None) -> Coefficient:
        kern = self.kernel
        tag = "complex" if mode == "numeric" else "parampoly"
        if len(kern.atoms) == 1:
            if k != 0:
                return coerce_coeff(tag, 0)
            return coerce_coeff(tag, 1)
        a, b = kern.atoms
        c = binom(n, k)
        if not c:
            return coerce_coeff(tag, 0)
        sign_pow = (a.sign ** ((n - k) % 2)) * (b.sign ** (k % 2))
        if mode == "numeric":
            out = complex(c * sign_pow)
            for atom, power in ((a, n - k), (b, k)):
                if not atom.is_variable():
                    out *= values[atom.symbol] ** power
            if kern.outer in PARAM_NAMES:
                out *= values[kern.outer] ** (-n - 1)
            return out
        poly = ParamPoly.const(c * sign_pow)
        for atom, power in ((a, n - k), (b, k)):
            if not atom.is_variable():
                poly = poly * ParamPoly.param(atom.symbol, power)
        if kern.outer in PARAM_NAMES:
            poly = poly * ParamPoly.param(kern.outer, -n - 1)
        return poly


def _float_binom(n: int, k: int) -> float:
    if k < 0:
        return 0.0
    out = 1.0
    for j in range(k):
        out *= (n - j) / (j + 1.0)
    return out


class _NumericWalker:
    """Walks a one-parameter family of product terms with O(1) updates:
    binomials advance by ratio, parameter powers by a fixed per-step factor."""

    def __init__(self, indexers, values, mult_c, u0, d, step):
        self.indexers = indexers
        self.values = values
        self.mult_c = complex(mult_c)
        self.u = [int(x) for x in u0]
        self.d = [int(x) * step for x in d]
        self.fixed = 1.0 + 0j
        self.incremental = all(abs(self.d[i.n_idx]) <= 1 and abs(self.d[i.k_idx]) <= 1
                               for i in indexers)
        for idx in indexers:
            kern = idx.kernel
            dn, dk = self.d[idx.n_idx], self.d[idx.k_idx]
            if len(kern.atoms) == 1:
                continue
            a, b = kern.atoms
            f = complex((a.sign ** ((dn - dk) % 2)) * (b.sign ** (dk % 2)))
            if not a.is_variable():
                f *= values[a.symbol] ** (dn - dk)
            if not b.is_variable():
                f *= values[b.symbol] ** dk
            if kern.outer in PARAM_NAMES:
                f *= values[kern.outer] ** (-dn)
            self.fixed *= f
        self.current = self._from_scratch()

    def _kernel_coeff(self, idx) -> complex:
        kern = idx.kernel
        n, k = self.u[idx.n_idx], self.u[idx.k_idx]
        if k < 0:
            return 0j
        if len(kern.atoms) == 1:
            return 1.0 + 0j if k == 0 else 0j
        a, b = kern.atoms
        c = _float_binom(n, k)
        if c == 0.0:
            return 0j
        out = complex(c * (a.sign ** ((n - k) % 2)) * (b.sign ** (k % 2)))
        for atom, power in ((a, n - k), (b, k)):
            if not atom.is_variable():
                out *= self.values[atom.symbol] ** power
        if kern.outer in PARAM_NAMES:
            out *= self.values[kern.outer] ** (-n - 1)
        return out

    def _from_scratch(self) -> complex:
        c = self.mult_c
        for idx in self.indexers:
            c *= self._kernel_coeff(idx)
            if c == 0j:
                return 0j
        return c

    @staticmethod
    def _binom_ratio(n: int, k: int, dn: int, dk: int):
        """C(n+dn, k+dk) / C(n, k), or None when not safely defined."""
        if dn == 0 and dk == 0:
            return 1.0
        if dn == 0 and dk == 1:
            return None if k + 1 == 0 else (n - k) / (k + 1.0)
        if dn == 0 and dk == -1:
            return None if n - k + 1 == 0 else k / (n - k + 1.0)
        if dn == 1 and dk == 0:
            return None if n + 1 - k == 0 else (n + 1) / (n + 1.0 - k)
        if dn == -1 and dk == 0:
            return None if n == 0 else (n - k) / float(n)
        if dn == 1 and dk == 1:
            return None if k + 1 == 0 else (n + 1) / (k + 1.0)
        if dn == -1 and dk == -1:
            return None if n == 0 else k / float(n)
        r1 = _NumericWalker._binom_ratio(n, k, dn, 0)
        if r1 is None:
            return None
        r2 = _NumericWalker._binom_ratio(n + dn, k, 0, dk)
        if r2 is None:
            return None
        return r1 * r2

    def advance(self) -> complex:
        """Step the family once and return the new term coefficient."""
        ratio: complex | None = self.fixed if self.incremental else None
        if ratio is not None and self.current != 0j:
            for idx in self.indexers:
                n, k = self.u[idx.n_idx], self.u[idx.k_idx]
                dn, dk = self.d[idx.n_idx], self.d[idx.k_idx]
                if len(idx.kernel.atoms) == 1:
                    if dk != 0:
                        ratio = None
                    continue
                r = self._binom_ratio(n, k, dn, dk)
                if r is None:
                    ratio = None
                    break
                ratio *= r
        else:
            ratio = None
        self.u = [x + y for x, y in zip(self.u, self.d)]
        if ratio is None or self.current == 0j:
            self.current = self._from_scratch()
        else:
            self.current = self.current * ratio
        return self.current


def _resolve_values(points: Mapping[str, complex]) -> dict[str, complex]:
    vals = {k: complex(v) for k, v in points.items()}
    if "z1" in vals and "z2" in vals:
        z0 = vals["z1"] - vals["z2"]
        if "z0" in vals and abs(vals["z0"] - z0) > 1e-9:
            raise DeltaError("inconsistent values: z0 != z1 - z2")
        vals["z0"] = z0
    elif "z2" in vals and "z0" in vals:
        vals["z1"] = vals["z2"] + vals["z0"]
    elif "z1" in vals and "z0" in vals:
        vals["z2"] = vals["z1"] - vals["z0"]
    return vals


def _ceil(x: Fraction) -> int:
    return -int(-x)


def _floor(x: Fraction) -> int:
    return int(x) if x >= 0 or x == int(x) else int(x) - 1


def _all_formal_expand(expr: DeltaExpr, frame: Frame,
                       mult_terms) -> dict[Monomial, Coefficient] | None:
    """Direct index enumeration for products of kernels whose symbols are all
    formal variables with exclusive outers (the composite-identity setting).
    Returns None when the structure does not fit."""
    kernels = expr.factors
    if len(kernels) > 2:
        return None
    infos = []
    outers = set()
    for k in kernels:
        if k.outer not in ALPHABET or any(a.inv for a in k.atoms) \
                or len(k.atoms) != 2:
            return None
        if not all(a.symbol in ALPHABET for a in k.atoms):
            return None
        outers.add(k.outer)
        infos.append(k)
    for k in kernels:
        for a in k.atoms:
            if a.symbol in outers:
                return None
    if len(outers) != len(kernels):
        return None

    def win(v):
        return frame.windows[v]

    out: dict[Monomial, Coefficient] = {}

    def add(m: Monomial, c) -> None:
        prev = out.get(m)
        tot = c if prev is None else prev + c
        if (isinstance(tot, ParamPoly) and not tot) or (
                not isinstance(tot, ParamPoly) and tot == 0):
            out.pop(m, None)
        else:
            out[m] = tot

    two = len(kernels) == 2
    # k_i enters its kernel's first atom with -1 and second atom with +1
    kvars = [{k.atoms[0].symbol: -1, k.atoms[1].symbol: 1} for k in kernels]

    def k_hi(i: int, base, caps, fixed: dict[int, int]):
        """Largest k_i that can still land in the frame, others ranging over
        [0, cap] (or pinned by `fixed`); None if unbounded."""
        best = None
        for v, c in kvars[i].items():
            w = win(v)
            b = base.get(v, Fraction(0))
            usable = True
            if c > 0:
                others_min = Fraction(0)
                for jj, kv in enumerate(kvars):
                    if jj == i or v not in kv:
                        continue
                    cj = kv[v]
                    if jj in fixed:
                        others_min += cj * fixed[jj]
                    elif cj < 0:
                        if caps[jj] is None:
                            usable = False
                            break
                        others_min += cj * caps[jj]
                if usable:
                    cand = w.hi - b - others_min
                    best = cand if best is None else min(best, cand)
            else:
                others_max = Fraction(0)
                for jj, kv in enumerate(kvars):
                    if jj == i or v not in kv:
                        continue
                    cj = kv[v]
                    if jj in fixed:
                        others_max += cj * fixed[jj]
                    elif cj > 0:
                        if caps[jj] is None:
                            usable = False
                            break
                        others_max += cj * caps[jj]
                if usable:
                    cand = b + others_max - w.lo
                    best = cand if best is None else min(best, cand)
        return best

    for mult_m, mult_c in mult_terms:
        off = {v: mult_m.exp(v) for v in mult_m.variables()}
        logs = {v: mult_m.logpow(v) for v in mult_m.variables()}

        def n_range(k: DeltaKernel):
            w = win(k.outer)
            o = off.get(k.outer, Fraction(0))
            if k.outer_inv:
                lo, hi = w.lo - o - 1, w.hi - o - 1
            else:
                lo, hi = -(w.hi - o) - 1, -(w.lo - o) - 1
            return range(_ceil(lo), _floor(hi) + 1)

        n_ranges = [n_range(k) for k in kernels]
        for n1 in n_ranges[0]:
            for n2 in (n_ranges[1] if two else (0,)):
                ns = (n1, n2)
                base: dict[str, Fraction] = dict(off)
                for i, k in enumerate(kernels):
                    e = Fraction(ns[i] + 1)
                    base[k.outer] = base.get(k.outer, Fraction(0)) + \
                        (e if k.outer_inv else -e)
                    a1 = k.atoms[0]
                    base[a1.symbol] = base.get(a1.symbol, Fraction(0)) + ns[i]

                caps: list[int | None] = [None] * len(kernels)
                for _ in range(3):
                    for i in range(len(kernels)):
                        hb = k_hi(i, base, caps, {})
                        if hb is not None:
                            fb = _floor(hb)
                            caps[i] = fb if caps[i] is None else min(caps[i], fb)
                if any(c is None for c in caps):
                    return None
                if any(c < 0 for c in caps):
                    continue

                for k1 in range(0, caps[0] + 1):
                    if two:
                        hb = k_hi(1, base, caps, {0: k1})
                        top = caps[1] if hb is None else min(caps[1], _floor(hb))
                        k2s = range(0, top + 1)
                    else:
                        k2s = (0,)
                    for k2 in k2s:
                        ks = (k1, k2)
                        exps = dict(base)
                        for i, k in enumerate(kernels):
                            a1, a2 = k.atoms
                            exps[a1.symbol] = exps.get(a1.symbol, Fraction(0)) - ks[i]
                            exps[a2.symbol] = exps.get(a2.symbol, Fraction(0)) + ks[i]
                        mono = Monomial.make(exps, logs)
                        if not frame.contains(mono):
                            continue
                        scalar = Fraction(1)
                        for i, k in enumerate(kernels):
                            c = binom(ns[i], ks[i])
                            if not c:
                                scalar = None
                                break
                            a1, a2 = k.atoms
                            scalar *= c * (a1.sign ** ((ns[i] - ks[i]) % 2)) \
                                * (a2.sign ** (ks[i] % 2))
                        if scalar is None:
                            continue
                        add(mono, mult_c * scalar)
    return out


def expand_delta(expr: DeltaExpr, frame: Frame, mode: str = "symbolic",
                 points: Mapping[str, complex] | None = None,
                 tol: float = 1e-9, max_terms: int = 200,
                 ) -> tuple[FormalSeries, dict[Monomial, ConvergenceReport]]:
    """Frame-restricted expansion of a product of kernels, optionally times a
    multiplier series.

    Symbolic mode requires every in-frame coefficient to be a finite sum
    (asserted; the identity sides that only converge in a restricted domain
    raise here).  Numeric mode sums one-parameter coefficient series with a
    convergence probe and returns per-monomial reports for them.
    """
    if mode not in ("symbolic", "numeric"):
        raise DeltaError(f"unknown mode {mode!r}")
    values = _resolve_values(points or {}) if mode == "numeric" else None
    tag = "complex" if mode == "numeric" else "parampoly"

    indexers = [_KernelIndexing(k, 2 * i) for i, k in enumerate(expr.factors)]
    nunk = 2 * len(indexers)

    kernel_vars = sorted(expr.variables())
    for v in kernel_vars:
        if v not in frame.windows:
            raise FrameError(f"frame must declare a window for variable {v!r}")
    if mode == "numeric":
        for k in expr.factors:
            needed = {a.symbol for a in k.atoms if not a.is_variable()}
            if k.outer in PARAM_NAMES:
                needed.add(k.outer)
            missing = needed - set(values)
            if missing:
                raise DeltaError(f"numeric mode needs values for {sorted(missing)}")

    var_rows: dict[str, dict[int, int]] = {v: {} for v in kernel_vars}
    var_consts: dict[str, int] = {v: 0 for v in kernel_vars}
    for idx in indexers:
        for v, row in idx.variable_rows().items():
            for j, cval in row.items():
                var_rows[v][j] = var_rows[v].get(j, 0) + cval
        for v in kernel_vars:
            var_consts[v] += idx.const(v)
    pin_rows = [(i.k_idx, Fraction(0)) for i in indexers if i.pinned_k()]

    if expr.multiplier is not None:
        if expr.multiplier.tag != tag:
            raise DeltaError(f"multiplier tag {expr.multiplier.tag!r} does not "
                             f"match {mode} expansion ({tag})")
        mult_terms = list(expr.multiplier.terms.items())
    else:
        mult_terms = [(Monomial.ONE, coerce_coeff(tag, 1))]

    if mode == "symbolic":
        fast = _all_formal_expand(expr, frame, mult_terms)
        if fast is not None:
            return FormalSeries(tag, fast, frame), {}

    out_terms: dict[Monomial, Coefficient] = {}
    reports: dict[Monomial, ConvergenceReport] = {}

    def add(m: Monomial, c: Coefficient):
        prev = out_terms.get(m)
        tot = c if prev is None else prev + c
        if (isinstance(tot, ParamPoly) and not tot) or (
                not isinstance(tot, ParamPoly) and tot == 0):
            out_terms.pop(m, None)
        else:
            out_terms[m] = tot

    for mult_m, mult_c in mult_terms:
        # integer ranges for the kernel part of each variable exponent
        ranges = []
        feasible = True
        for v in kernel_vars:
            w = frame.windows[v]
            off = mult_m.exp(v)
            lo = _ceil(w.lo - off)
            hi = _floor(w.hi - off)
            if lo > hi:
                feasible = False
                break
            ranges.append(range(lo, hi + 1))
        if not feasible:
            continue

        for combo in itertools.product(*ranges):
            kernel_exps = dict(zip(kernel_vars, combo))
            rows = [([Fraction(var_rows[v].get(j, 0)) for j in range(nunk)],
                     Fraction(kernel_exps[v] - var_consts[v]))
                    for v in kernel_vars]
            for j, val in pin_rows:
                coeffs = [Fraction(0)] * nunk
                coeffs[j] = Fraction(1)
                rows.append((coeffs, val))
            sol = _solve_affine(rows, nunk)
            if sol is None:
                continue
            part, basis = sol

            exps = {v: Fraction(kernel_exps[v]) + mult_m.exp(v) for v in kernel_vars}
            for v in mult_m.variables():
                if v not in exps:
                    exps[v] = mult_m.exp(v)
            logs = {v: mult_m.logpow(v) for v in mult_m.variables()}
            target_mono = Monomial.make(exps, logs)
            if not frame.contains(target_mono):
                continue

            def term_coeff(u: list[Fraction]) -> Coefficient:
                if any(x.denominator != 1 for x in u):
                    return coerce_coeff(tag, 0)
                c: Coefficient = mult_c
                for idx in indexers:
                    n = int(u[idx.n_idx])
                    k = int(u[idx.k_idx])
                    if k < 0:
                        return coerce_coeff(tag, 0)
                    c = c * idx.coefficient(n, k, mode, values)
                return c

            if len(basis) == 0:
                add(target_mono, term_coeff(part))
                continue
            if len(basis) > 1:
                raise DeltaError(
                    "coefficient not finitely determined: two free indices")
            d = _primitive_int(basis[0])
            lo_b = hi_b = None
            infeasible = False
            for idx in indexers:
                j = idx.k_idx
                if d[j] == 0:
                    if part[j] < 0:
                        infeasible = True
                        break
                    continue
                bound = -part[j] / Fraction(d[j])
                if d[j] > 0:
                    lo_b = bound if lo_b is None else max(lo_b, bound)
                else:
                    hi_b = bound if hi_b is None else min(hi_b, bound)
            if infeasible:
                continue

            def u_at(t: int) -> list[Fraction]:
                return [p + t * dj for p, dj in zip(part, d)]

            if lo_b is not None and hi_b is not None:
                if lo_b > hi_b:
                    continue
                total = coerce_coeff(tag, 0)
                for t in range(_ceil(lo_b), _floor(hi_b) + 1):
                    total = total + term_coeff(u_at(t))
                add(target_mono, total)
                continue
            if mode == "symbolic":
                raise DeltaError(
                    f"coefficient of {target_mono!r} is an infinite series; "
                    "symbolic expansion is not finitely determined")
            if lo_b is None and hi_b is None:
                raise DeltaError("free index unconstrained in both directions")
            if lo_b is not None:
                start, step = _ceil(lo_b), 1
            else:
                start, step = _floor(hi_b), -1

            u0 = u_at(start)
            if any(x.denominator != 1 for x in u0) or \
                    any(x.denominator != 1 for x in map(Fraction, d)):
                # integrality holds on a sub-progression; walk term by term
                def stream(start=start, step=step, u_at=u_at):
                    t = start
                    for _ in range(max_terms):
                        yield complex(term_coeff(u_at(t)))
                        t += step
                rep = abs_convergence_probe(stream(), tol, max_terms=max_terms)
            else:
                walker = _NumericWalker(indexers, values, mult_c, u0, d, step)

                def stream(walker=walker):
                    yield walker.current
                    for _ in range(max_terms - 1):
                        yield walker.advance()
                rep = abs_convergence_probe(stream(), tol, max_terms=max_terms)
            reports[target_mono] = rep
            add(target_mono, rep.value)

    return FormalSeries(tag, out_terms, frame), reports


# ---------------------------------------------------------------------------
# the formal substitution principle
# ---------------------------------------------------------------------------

def substitute_on_locus(f: FormalSeries, k: DeltaKernel, frame: Frame,
                        eliminate: str = "outer") -> FormalSeries:
    """Rewrite f on the locus the kernel enforces (numerator = outer).

    eliminate="outer": outer -> a1 + a2 (nonnegative powers of the second
    summand); eliminate="lead": first summand -> outer - (signed second
    summand).  The result is truncated to `frame` but computed completely on
    it: each power expansion is generated on windows shifted by the exponents
    the remaining factors contribute.
    """
    if k.outer_inv or k.atoms[0].inv:
        raise DeltaError("substitution implemented for plain-outer kernels")
    if eliminate == "outer":
        if k.outer not in ALPHABET:
            raise DeltaError("cannot eliminate a parameter outer")
        old = k.outer
        lead_sym = k.atoms[0].symbol
        lead_sign = k.atoms[0].sign
        shift = k.atoms[1] if len(k.atoms) == 2 else None
        shift_sign = shift.sign if shift is not None else 0
    elif eliminate == "lead":
        if not k.atoms[0].is_variable() or k.atoms[0].sign != 1:
            raise DeltaError("lead elimination needs a leading formal variable")
        old = k.atoms[0].symbol
        lead_sym = k.outer
        lead_sign = 1
        shift = k.atoms[1] if len(k.atoms) == 2 else None
        shift_sign = -shift.sign if shift is not None else 0
    else:
        raise DeltaError("eliminate must be 'outer' or 'lead'")

    out_terms: dict[Monomial, Coefficient] = {}

    def add(m: Monomial, c: Coefficient):
        if not frame.contains(m):
            return
        prev = out_terms.get(m)
        tot = c if prev is None else prev + c
        if (isinstance(tot, ParamPoly) and not tot) or (
                not isinstance(tot, ParamPoly) and tot == 0):
            out_terms.pop(m, None)
        else:
            out_terms[m] = tot

    for m, c in f.terms.items():
        if m.logpow(old):
            raise DeltaError("substitution of log-bearing terms is out of scope")
        alpha = m.exp(old)
        rest = m.without(old)
        if alpha == 0:
            add(rest, c)
            continue
        if shift is None:
            if lead_sign != 1:
                raise DeltaError("plain locus substitution needs a positive lead")
            add(rest * Monomial.make({lead_sym: alpha}), c)
            continue
        wins = {}
        for sym in (lead_sym, shift.symbol):
            if sym in ALPHABET:
                w = frame.windows[sym]
                off = rest.exp(sym)
                wins[sym] = Window(w.lo - off, w.hi - off, w.logmax)
        expansion = binomial_expand(
            AffineSymbol(lead_sym, lead_sign), AffineSymbol(shift.symbol, shift_sign),
            alpha, shift.symbol, Frame(wins), tag=f.tag)
        for me, ce in expansion.terms.items():
            add(rest * me, c * ce)
    return FormalSeries(f.tag, out_terms, frame)


def delta_substitute(f: FormalSeries, expr: DeltaExpr, frame: Frame,
                     mode: str = "symbolic",
                     points: Mapping[str, complex] | None = None,
                     eliminate: str = "outer") -> FormalSeries:
    """f(v1, v2) * kernel == (f on the enforced locus) * kernel; returns the
    right-hand side expanded within the frame."""
    if len(expr.factors) != 1:
        raise DeltaError("substitution needs a single kernel")
    if expr.multiplier is not None:
        raise DeltaError("pass the multiplier as f, not inside the expression")
    k = expr.factors[0]
    fsub = substitute_on_locus(f, k, frame, eliminate=eliminate)
    series, _ = expand_delta(DeltaExpr([k], multiplier=fsub), frame, mode, points)
    return series


# ---------------------------------------------------------------------------
# the five identities
# ---------------------------------------------------------------------------

def _k(outer, s1, a1, s2, a2):
    return kernel(outer, s1, a1, s2, a2)


IDENTITIES: dict[str, dict] = {
    "l1": {
        "lhs": [_k("x1", 1, "x0", -1, "z1"), _k("x2", 1, "x0", -1, "z2")],
        "rhs": [_k("x2", 1, "x0", -1, "z2"), _k("x1", 1, "x2", -1, "z0")],
        "domain": (),
        "formal": True,
    },
    "l2a": {
        "lhs": [_k("z1", 1, "x0", -1, "x1"), _k("x2", 1, "x0", -1, "z2")],
        "rhs": [_k("x0", 1, "z1", 1, "x1"), _k("x2", 1, "z0", 1, "x1")],
        "domain": (("gt", "z1", "z2"),),
        "formal": False,
    },
    "l2b": {
        "lhs": [_k("z2", 1, "x0", -1, "x2"), _k("z0", 1, "x2", -1, "x1")],
        "rhs": [_k("x0", 1, "z1", 1, "x1"), _k("x2", 1, "z0", 1, "x1")],
        "domain": (("gt", "z2", "z0"), ("nz", "z0")),
        "formal": False,
    },
    "l3": {
        "lhs": [_k("x1", -1, "z1", 1, "x0"), _k("z2", 1, "x0", -1, "x2")],
        "rhs": [_k("x0", 1, "z2", 1, "x2"), _k("x1", -1, "z0", 1, "x2")],
        "domain": (("gt", "z1", "z2"), ("nz", "z2")),
        "formal": False,
    },
    "l4": {
        "lhs": [_k("x2", -1, "z2", 1, "x0"), _k("x1", 1, "x2", -1, "z0")],
        "rhs": [_k("x1", -1, "z1", 1, "x0"), _k("x2", -1, "z2", 1, "x0")],
        "domain": (("gt", "z2", "z0"),),
        "formal": False,
    },
}


def check_domain(which: str, values: Mapping[str, complex]) -> None:
    vals = _resolve_values(values)
    for clause in IDENTITIES[which]["domain"]:
        if clause[0] == "gt":
            _, a, b = clause
            if not abs(vals[a]) > abs(vals[b]) + DOMAIN_GUARD:
                raise DomainError(
                    f"|{a}|>|{b}| violated: |{a}|={abs(vals[a]):.6g}, "
                    f"|{b}|={abs(vals[b]):.6g}")
        else:
            _, a = clause
            if not abs(vals[a]) > DOMAIN_GUARD:
                raise DomainError(f"|{a}|>0 violated")


@dataclass
class VerificationReport:
    identity: str
    mode: str
    passed: bool
    max_deviation: float
    worst_monomial: Optional[str]
    monomials_checked: int
    convergence: dict[str, ConvergenceReport] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "mode": self.mode,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "worst_monomial": self.worst_monomial,
            "monomials_checked": self.monomials_checked,
            "convergence": {k: v.to_dict() for k, v in sorted(self.convergence.items())},
            "notes": list(self.notes),
        }


def verify_delta_identity(which: str, mode: str, frame_bound: int = 4,
                          points: Mapping[str, complex] | None = None,
                          tol: float = 1e-9, max_terms: int = 200,
                          enforce_domain: bool = True) -> VerificationReport:
    """Check one of the five kernel-product identities.

    Formal mode (first identity only): exact coefficient-wise equality of
    both sides as Laurent polynomials in z1, z2 inside the frame.  Numeric
    mode: per-monomial convergence-probed comparison at a point, which must
    lie inside the identity's stated domain.
    """
    which = which.lower()
    if which not in IDENTITIES:
        raise DeltaError(f"unknown identity {which!r}")
    spec = IDENTITIES[which]
    frame = Frame.box(("x0", "x1", "x2"), frame_bound)
    notes = ["expansion convention: nonnegative powers of each numerator's "
             "second summand (the displayed-ring convention)"]

    if mode == "formal":
        if not spec["formal"]:
            raise DeltaError(f"{which} has no formal mode; its left side only "
                             "converges in a restricted domain")
        lhs, _ = expand_delta(DeltaExpr(list(spec["lhs"])), frame, "symbolic")
        rhs, _ = expand_delta(DeltaExpr(list(spec["rhs"])), frame, "symbolic")
        monos = set(lhs.terms) | set(rhs.terms)
        bad = [m for m in monos if lhs.terms.get(m) != rhs.terms.get(m)]
        return VerificationReport(
            identity=which, mode="formal", passed=not bad,
            max_deviation=0.0,
            worst_monomial=repr(bad[0]) if bad else None,
            monomials_checked=len(monos), notes=notes)

    if mode != "numeric":
        raise DeltaError(f"unknown mode {mode!r}")
    if points is None:
        raise DeltaError("numeric mode requires points")
    values = _resolve_values(points)
    if enforce_domain:
        check_domain(which, values)

    lhs, reps = expand_delta(DeltaExpr(list(spec["lhs"])), frame, "numeric",
                             values, tol=tol, max_terms=max_terms)
    rhs, _ = expand_delta(DeltaExpr(list(spec["rhs"])), frame, "numeric",
                          values, tol=tol, max_terms=max_terms)

    worst, worst_dev, count = None, 0.0, 0
    for m in set(lhs.terms) | set(rhs.terms):
        count += 1
        lv = complex(lhs.terms.get(m, 0j))
        rv = complex(rhs.terms.get(m, 0j))
        # scale-normalized: coefficients grow like inverse powers of the
        # inner modulus, far beyond what an absolute 1e-9 can mean in doubles
        dev = abs(lv - rv) / max(1.0, abs(lv), abs(rv))
        if dev > worst_dev:
            worst_dev, worst = dev, m
    notes.append("deviations are scale-normalized: |L-R|/max(1,|L|,|R|)")
    all_conv = all(rep.converged() for rep in reps.values())
    if not all_conv:
        notes.append("at least one left-side monomial series failed its probe")
    return VerificationReport(
        identity=which, mode="numeric", passed=all_conv and worst_dev <= tol,
        max_deviation=worst_dev,
        worst_monomial=repr(worst) if worst is not None else None,
        monomials_checked=count,
        convergence={repr(m): r for m, r in reps.items()}, notes=notes)


def probe_identity_lhs(which: str, points: Mapping[str, complex],
                       frame_bound: int = 4, tol: float = 1e-9,
                       max_terms: int = 120) -> dict[str, ConvergenceReport]:
    """Left-hand-side per-monomial probes without the domain guard; points
    outside the stated domain must surface as non-converged verdicts."""
    which = which.lower()
    spec = IDENTITIES[which]
    frame = Frame.box(("x0", "x1", "x2"), frame_bound)
    _, reps = expand_delta(DeltaExpr(list(spec["lhs"])), frame, "numeric",
                           _resolve_values(points), tol=tol, max_terms=max_terms)
    return {repr(m): r for m, r in reps.items()}
