"""Fock modules for the rank-one oscillator algebra [h(m), h(n)] = m d_{m+n}.

A module is labeled by a charge in the nilpotent ring: h(0) acts as the
charge, giving Jordan blocks for L(0) when the charge has a nilpotent part.
Basis vectors are oscillator monomials h(-n_1)...h(-n_k)|charge> encoded as
descending partitions; coefficients live in the nilpotent ring.

The pairing is the symmetric one with <hw, hw> = 1 and adjoint
h(n)^dag = h(-n), so partition monomials are orthogonal with Gram factor
prod_m m^{r_m} r_m!.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .nil import Nil, NilContext

Partition = tuple[int, ...]  # descending positive parts


@dataclass(frozen=True)
class FockModule:
    ctx: NilContext
    charge: Nil
    cutoff: int = 8

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError("cutoff must be nonnegative")

    def charge_base(self) -> Fraction:
        b = self.charge.base()
        return b if isinstance(b, Fraction) else Fraction(b)

    def lowest_weight(self) -> Fraction:
        lam = self.charge_base()
        return lam * lam / 2

    def hw(self, coeff=1) -> "FockVector":
        c = coeff if isinstance(coeff, Nil) else Nil.const(self.ctx, coeff)
        return FockVector(self, {(): c})

    def zero(self) -> "FockVector":
        return FockVector(self, {})

    def basis(self, max_level: int | None = None) -> list[Partition]:
        top = self.cutoff if max_level is None else min(max_level, self.cutoff)
        out: list[Partition] = []
        for n in range(top + 1):
            out.extend(partitions_of(n))
        return out


@lru_cache(maxsize=None)
def partitions_of(n: int, largest: int | None = None) -> tuple[Partition, ...]:
    if n == 0:
        return ((),)
    largest = n if largest is None else min(largest, n)
    out = []
    for first in range(largest, 0, -1):
        for rest in partitions_of(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def gram(parts: Partition) -> int:
    """<monomial, monomial> under h(n)^dag = h(-n)."""
    out = 1
    mult: dict[int, int] = {}
    for p in parts:
        mult[p] = mult.get(p, 0) + 1
    for m, r in mult.items():
        out *= m ** r
        for j in range(1, r + 1):
            out *= j
    return out


def _insert(parts: Partition, m: int) -> Partition:
    lst = sorted(parts + (m,), reverse=True)
    return tuple(lst)


def _remove_one(parts: Partition, m: int) -> Partition:
    lst = list(parts)
    lst.remove(m)
    return tuple(lst)


class FockVector:
    __slots__ = ("module", "comps")

    def __init__(self, module: FockModule, comps: dict[Partition, Nil] | None = None):
        self.module = module
        self.comps: dict[Partition, Nil] = {}
        if comps:
            for p, c in comps.items():
                if isinstance(c, Nil):
                    if not c.is_zero():
                        self.comps[p] = c
                elif c != 0:
                    self.comps[p] = Nil.const(module.ctx, c)

    def is_zero(self) -> bool:
        return not self.comps

    def copy(self) -> "FockVector":
        out = FockVector(self.module)
        out.comps = dict(self.comps)
        return out

    def add_term(self, parts: Partition, coeff: Nil) -> None:
        prev = self.comps.get(parts)
        tot = coeff if prev is None else prev + coeff
        if tot.is_zero():
            self.comps.pop(parts, None)
        else:
            self.comps[parts] = tot

    def __add__(self, other: "FockVector") -> "FockVector":
        if self.module is not other.module and self.module != other.module:
            raise ValueError("cannot add vectors of different modules")
        out = self.copy()
        for p, c in other.comps.items():
            out.add_term(p, c)
        return out

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + other.scaled(-1)

    def scaled(self, factor) -> "FockVector":
        if not isinstance(factor, Nil):
            factor = Nil.const(self.module.ctx, factor)
        if factor.is_zero():
            return self.module.zero()
        out = FockVector(self.module)
        for p, c in self.comps.items():
            out.add_term(p, c * factor)
        return out

    def level(self, parts: Partition) -> int:
        return sum(parts)

    def max_level(self) -> int:
        return max((sum(p) for p in self.comps), default=0)

    def truncated(self, level_max: int) -> "FockVector":
        out = FockVector(self.module)
        for p, c in self.comps.items():
            if sum(p) <= level_max:
                out.add_term(p, c)
        return out

    def h(self, m: int) -> "FockVector":
        """Oscillator action: creation (m < 0), charge (m = 0), or
        m * d/d b_m (m > 0)."""
        out = FockVector(self.module)
        if m == 0:
            for p, c in self.comps.items():
                out.add_term(p, c * self.module.charge)
            return out
        if m < 0:
            for p, c in self.comps.items():
                out.add_term(_insert(p, -m), c)
            return out
        for p, c in self.comps.items():
            r = p.count(m)
            if r:
                out.add_term(_remove_one(p, m), c * (m * r))
        return out

    def to_module(self, module: FockModule) -> "FockVector":
        """Charge-shift reinterpretation (the lattice shift operator)."""
        out = FockVector(module)
        out.comps = dict(self.comps)
        return out

    def L(self, j: int) -> "FockVector":
        """Virasoro action for j in {-1, 0, 1} via the quadratic h-modes."""
        if j == 0:
            half = self.module.charge * self.module.charge * Fraction(1, 2)
            out = FockVector(self.module)
            for p, c in self.comps.items():
                out.add_term(p, c * (half + Nil.const(self.module.ctx, sum(p))))
            return out
        if j == -1:
            out = self.h(0).h(-1)
            top = self.max_level()
            for k in range(1, top + 1):
                out = out + self.h(k).h(-1 - k)
            return out
        if j == 1:
            out = self.h(1).h(0)
            top = self.max_level()
            for k in range(1, top):
                out = out + self.h(k + 1).h(-k)
            return out
        raise ValueError("only L(-1), L(0), L(1) are needed here")

    def exp_L(self, j: int, factor, level_max: int | None = None) -> "FockVector":
        """exp(factor * L(j)) truncated at the module cutoff (j = -1) or at
        nilpotency (j = 1, which lowers levels and terminates)."""
        cap = self.module.cutoff if level_max is None else level_max
        out = self.truncated(cap)
        term = out
        k = 1
        while True:
            term = term.L(j).scaled(factor).scaled(Fraction(1, k))
            term = term.truncated(cap)
            if term.is_zero():
                break
            out = out + term
            k += 1
            if k > 4 * cap + 8:
                raise RuntimeError("exp_L failed to terminate")
        return out

    def pair(self, other: "FockVector") -> Nil:
        """Symmetric Gram pairing; charge sectors must match."""
        if self.module.charge != other.module.charge:
            return Nil(self.module.ctx)
        total = Nil(self.module.ctx)
        small, large = (self.comps, other.comps) \
            if len(self.comps) <= len(other.comps) else (other.comps, self.comps)
        for p, c in small.items():
            d = large.get(p)
            if d is not None:
                total = total + c * d * gram(p)
        return total

    def map_coeffs(self, fn) -> "FockVector":
        out = FockVector(self.module)
        for p, c in self.comps.items():
            out.add_term(p, c.map_coeffs(fn))
        return out

    def __repr__(self):
        if not self.comps:
            return "FockVector(0)"
        bits = [f"{c!r}*h{list(p)}" for p, c in sorted(self.comps.items())]
        return "FockVector(" + " + ".join(bits) + ")"
