"""Truncated polynomial ring in a few nilpotent generators.

Charges of logarithmic Fock modules live in Q[e1, .., eg] / (e_i^{K_i}); the
nilpotent part of a charge product is what turns x^(charge) into a finite
log-polynomial.  Coefficients are Fractions in exact work and drift to
complex under numeric specialization (mixed arithmetic is fine for both).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

Index = tuple[int, ...]


@dataclass(frozen=True)
class NilContext:
    gens: tuple[str, ...]
    orders: tuple[int, ...]

    def __post_init__(self):
        if len(self.gens) != len(self.orders):
            raise ValueError("one order per generator")
        if any(k < 1 for k in self.orders):
            raise ValueError("orders must be >= 1")

    def zero_index(self) -> Index:
        return (0,) * len(self.gens)

    def admissible(self, idx: Index) -> bool:
        return all(0 <= i < k for i, k in zip(idx, self.orders))

    def gen_index(self, name: str) -> Index:
        j = self.gens.index(name)
        return tuple(1 if i == j else 0 for i in range(len(self.gens)))


class Nil:
    """Element of the truncated ring; terms: multi-index -> coefficient."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: NilContext, terms: Mapping[Index, object] | None = None):
        self.ctx = ctx
        self._hash = None
        self.terms: dict[Index, object] = {}
        if terms:
            for idx, c in terms.items():
                if c == 0 or not ctx.admissible(idx):
                    continue
                self.terms[idx] = c

    @staticmethod
    def _raw(ctx: NilContext, terms: dict[Index, object]) -> "Nil":
        """Internal constructor for terms already known clean."""
        out = Nil.__new__(Nil)
        out.ctx = ctx
        out.terms = terms
        out._hash = None
        return out

    @staticmethod
    def const(ctx: NilContext, c) -> "Nil":
        return Nil(ctx, {ctx.zero_index(): c})

    @staticmethod
    def gen(ctx: NilContext, name: str, coeff=1) -> "Nil":
        return Nil(ctx, {ctx.gen_index(name): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def base(self):
        """Coefficient of the identity monomial (the non-nilpotent part)."""
        return self.terms.get(self.ctx.zero_index(), 0)

    def nilpart(self) -> "Nil":
        out = dict(self.terms)
        out.pop(self.ctx.zero_index(), None)
        return Nil(self.ctx, out)

    def map_coeffs(self, fn) -> "Nil":
        out = {}
        for i, c in self.terms.items():
            v = fn(c)
            if v != 0:
                out[i] = v
        return Nil._raw(self.ctx, out)

    def __add__(self, other: "Nil") -> "Nil":
        out = dict(self.terms)
        for idx, c in other.terms.items():
            s = out.get(idx, 0) + c
            if s == 0:
                out.pop(idx, None)
            else:
                out[idx] = s
        return Nil._raw(self.ctx, out)

    def __neg__(self) -> "Nil":
        return Nil._raw(self.ctx, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other: "Nil") -> "Nil":
        return self + (-other)

    def __mul__(self, other) -> "Nil":
        if not isinstance(other, Nil):
            if other == 0:
                return Nil._raw(self.ctx, {})
            return Nil._raw(self.ctx, {i: c * other for i, c in self.terms.items()})
        a, b = self.terms, other.terms
        if len(a) == 1 and len(b) == 1:
            (ia, ca), = a.items()
            (ib, cb), = b.items()
            idx = tuple(x + y for x, y in zip(ia, ib))
            if not self.ctx.admissible(idx):
                return Nil._raw(self.ctx, {})
            prod = ca * cb
            return Nil._raw(self.ctx, {idx: prod} if prod != 0 else {})
        out: dict[Index, object] = {}
        admissible = self.ctx.admissible
        for ia, ca in a.items():
            for ib, cb in b.items():
                idx = tuple(x + y for x, y in zip(ia, ib))
                if not admissible(idx):
                    continue
                s = out.get(idx, 0) + ca * cb
                if s == 0:
                    out.pop(idx, None)
                else:
                    out[idx] = s
        return Nil._raw(self.ctx, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, Nil):
            return self.ctx == other.ctx and self.terms == other.terms
        return self.nilpart().is_zero() and self.base() == other

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def coeff(self, idx: Index):
        return self.terms.get(tuple(idx), 0)

    def to_complex(self) -> "Nil":
        return self.map_coeffs(complex)

    def __repr__(self):
        if not self.terms:
            return "Nil(0)"
        bits = []
        for idx, c in sorted(self.terms.items(), key=lambda kv: kv[0]):
            mono = "*".join(f"{g}^{p}" for g, p in zip(self.ctx.gens, idx) if p)
            bits.append(f"({c})" + (f"*{mono}" if mono else ""))
        return "Nil(" + " + ".join(bits) + ")"


def log_expansion(nilpotent: Nil, max_pow: int | None = None) -> list[tuple[int, Nil]]:
    """exp(n log x) = sum_j n^j/j! (log x)^j for a nilpotent n; the list of
    (log power, ring coefficient) pairs, finite by nilpotency."""
    if nilpotent.base() != 0:
        raise ValueError("log expansion needs a purely nilpotent exponent")
    out = [(0, Nil.const(nilpotent.ctx, Fraction(1)))]
    power = Nil.const(nilpotent.ctx, Fraction(1))
    fact = 1
    j = 1
    while True:
        power = power * nilpotent
        if power.is_zero():
            break
        fact *= j
        out.append((j, power.map_coeffs(lambda c: c * Fraction(1, fact))))
        j += 1
        if max_pow is not None and j > max_pow:
            break
    return out
