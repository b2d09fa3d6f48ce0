"""Intertwining operators between Fock modules.

For highest-weight insertions the operator is the normal-ordered exponential

    Y(hw_c1, x) = exp(c1 sum_{n>0} h(-n) x^n / n)
                  exp(-c1 sum_{n>0} h(n) x^(-n) / n)  S_{c1}  x^{c1 c2},

acting on the module of charge c2; descendant insertions are reconstructed
recursively through

    Y(h(-n) u, x) = sum_{m<0} a_{m,n} x^(-m-n) h(m) Y(u, x)
                  + sum_{m>=0} a_{m,n} x^(-m-n) Y(u, x) h(m),

with a_{m,n} = (-1)^(n-1) C(m+n-1, n-1).  Module vertex operators are the
charge-zero case of the same construction, so vacuum-algebra insertions ride
the identical code path.

A series is a dict {(exponent, logpower): FockVector}; exponents sit in
(base charge product) + Z and log powers come from x^(nilpotent part).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from ..series import binom
from .fock import FockModule, FockVector, Partition, partitions_of
from .nil import Nil, log_expansion

OpSeries = dict[tuple[Fraction, int], FockVector]


class HeisError(ValueError):
    pass


@dataclass(frozen=True)
class IntwOp:
    """Intertwining operator of type (target / arg act); the target charge is
    pinned by charge additivity."""
    arg: FockModule
    act: FockModule
    target: FockModule

    def __post_init__(self):
        want = self.arg.charge + self.act.charge
        if not (want - self.target.charge).is_zero():
            raise HeisError("target charge must be the sum of the source charges")


def intw(arg: FockModule, act: FockModule, target: FockModule | None = None) -> IntwOp:
    if target is None:
        target = FockModule(arg.ctx, arg.charge + act.charge,
                            max(arg.cutoff, act.cutoff))
    return IntwOp(arg, act, target)


def _merge_parts(a: Partition, b: Partition) -> Partition:
    return tuple(sorted(a + b, reverse=True))


def _multiplicities(parts: Partition) -> dict[int, int]:
    out: dict[int, int] = {}
    for p in parts:
        out[p] = out.get(p, 0) + 1
    return out


@lru_cache(maxsize=None)
def _nil_powers(charge: Nil, top: int) -> tuple[Nil, ...]:
    out = [Nil.const(charge.ctx, Fraction(1))]
    for _ in range(top):
        out.append(out[-1] * charge)
    return tuple(out)


@lru_cache(maxsize=200_000)
def _int_binom(n: int, k: int) -> Fraction:
    return binom(n, k)


@lru_cache(maxsize=200_000)
def _annihilation_terms(parts: Partition, c1: Nil, max_keep: int):
    """exp(-c1 sum h(n) x^{-n}/n) on a partition monomial: choosing j of the
    r copies of part n contributes (-c1)^j C(r,j) x^{-nj}.  Partial combos
    that already keep more than max_keep of level are pruned (creations only
    raise the level further)."""
    mult = sorted(_multiplicities(parts).items(), reverse=True)
    neg = -c1
    combos: list[tuple[tuple, Nil, int, int]] = \
        [((), Nil.const(c1.ctx, Fraction(1)), 0, 0)]
    for n, r in mult:
        powers = _nil_powers(neg, r)
        new = []
        for kept, coeff, off, lvl in combos:
            for j in range(r + 1):
                lvl2 = lvl + n * (r - j)
                if lvl2 > max_keep:
                    continue
                factor = powers[j] * _int_binom(r, j)
                new.append((kept + (n,) * (r - j), coeff * factor,
                            off - n * j, lvl2))
        combos = new
    return tuple((tuple(sorted(kept, reverse=True)), coeff, off)
                 for kept, coeff, off, _ in combos)


_CREATION_LEVELS: dict[Nil, list] = {}


def _creation_levels(c1: Nil, budget: int) -> list:
    """exp(c1 sum h(-n) x^n / n) grouped by added level: level -> list of
    (partition, ring coefficient), extended lazily per charge."""
    table = _CREATION_LEVELS.setdefault(c1, [])
    while len(table) <= budget:
        lvl = len(table)
        row = []
        for nu in partitions_of(lvl):
            coeff = Nil.const(c1.ctx, Fraction(1))
            for n, s in _multiplicities(nu).items():
                factor = _nil_powers(c1, s)[s]
                scale = Fraction(1)
                for j in range(1, s + 1):
                    scale /= n * j
                coeff = coeff * factor.map_coeffs(lambda c, sc=scale: c * sc)
            row.append((nu, coeff))
        table.append(row)
    return table


def _series_accum(out: OpSeries, key: tuple[Fraction, int],
                  parts: Partition, coeff: Nil, target: FockModule) -> None:
    vec = out.get(key)
    if vec is None:
        vec = FockVector(target)
        out[key] = vec
    vec.add_term(parts, coeff)


def _prune(out: OpSeries) -> OpSeries:
    return {k: v for k, v in out.items() if not v.is_zero()}


def _hw_series(op: IntwOp, w2vec: FockVector, level_max: int) -> OpSeries:
    c1 = op.arg.charge
    c12 = op.arg.charge * op.act.charge
    base = c12.base()
    base = base if isinstance(base, Fraction) else Fraction(base)
    logs = log_expansion(c12.nilpart())
    out: OpSeries = {}
    for parts, coeff in w2vec.comps.items():
        for kept, acoeff, aoff in _annihilation_terms(parts, c1, level_max):
            lvl = sum(kept)
            pre = coeff * acoeff
            if pre.is_zero():
                continue
            creations = _creation_levels(c1, level_max - lvl)
            for up in range(level_max - lvl + 1):
                for added, ccoeff in creations[up]:
                    total = pre * ccoeff
                    if total.is_zero():
                        continue
                    p2 = _merge_parts(kept, added)
                    for j, lc in logs:
                        _series_accum(out, (base + aoff + up, j), p2,
                                      total * lc, op.target)
    return _prune(out)


def _a_coeff(m: int, n: int) -> Fraction:
    return Fraction(-1) ** (n - 1) * binom(m + n - 1, n - 1)


def _apply_mono(op: IntwOp, parts: Partition, w2vec: FockVector,
                level_max: int) -> OpSeries:
    if not parts:
        return _hw_series(op, w2vec, level_max)
    n, rest = parts[0], parts[1:]
    out: OpSeries = {}

    def accum(series: OpSeries, factor, shift: int, create: int | None) -> None:
        for (e, j), vec in series.items():
            v2 = vec.h(create) if create is not None else vec
            if create is not None:
                v2 = v2.truncated(level_max)
            if v2.is_zero():
                continue
            key = (e + shift, j)
            for p, c in v2.comps.items():
                _series_accum(out, key, p, c * factor, op.target)

    # shared subseries: the h(0) term (h(0) is central, so it is a scalar)
    # and the creation side both act on the untouched vector
    sub0 = _apply_mono(op, rest, w2vec, level_max)
    accum(sub0, op.act.charge * _a_coeff(0, n), -n, None)
    for m in range(-1, -(level_max + 1), -1):
        a = _a_coeff(m, n)
        if a:
            accum(sub0, a, -m - n, m)
    # genuine annihilations hit the acted vector first
    sizes = sorted({q for p in w2vec.comps for q in p})
    for m in sizes:
        w2m = w2vec.h(m)
        if w2m.is_zero():
            continue
        a = _a_coeff(m, n)
        if a:
            accum(_apply_mono(op, rest, w2m, level_max), a, -m - n, None)
    return _prune(out)


def op_series(op: IntwOp, w1: FockVector, w2: FockVector,
              level_max: int | None = None) -> OpSeries:
    """Y(w1, x) w2 truncated at target level `level_max` (default: the
    target module cutoff)."""
    if w1.module != op.arg or w2.module != op.act:
        raise HeisError("vector modules do not match the operator type")
    lm = op.target.cutoff if level_max is None else min(level_max, op.target.cutoff)
    out: OpSeries = {}
    for parts, coeff in w1.comps.items():
        sub = _apply_mono(op, parts, w2, lm)
        for key, vec in sub.items():
            for p, c in vec.comps.items():
                _series_accum(out, key, p, c * coeff, op.target)
    return _prune(out)


def series_shift(series: OpSeries, shift: Fraction) -> OpSeries:
    return {(e + shift, j): v for (e, j), v in series.items()}


def series_add(a: OpSeries, b: OpSeries, target: FockModule) -> OpSeries:
    out: OpSeries = {}
    for src in (a, b):
        for key, vec in src.items():
            for p, c in vec.comps.items():
                _series_accum(out, key, p, c, target)
    return _prune(out)


def series_scale(series: OpSeries, factor) -> OpSeries:
    return _prune({k: v.scaled(factor) for k, v in series.items()})


def mode_coeff(op: IntwOp, w1: FockVector, w2: FockVector, exponent,
               logpow: int, level_max: int | None = None) -> FockVector:
    """Coefficient of x^exponent (log x)^logpow in Y(w1, x) w2.

    Exponents outside (base charge product) + Z are structurally zero and
    return the zero vector; exponents that would need target levels beyond
    the cutoff raise."""
    exponent = Fraction(exponent)
    lm = op.target.cutoff if level_max is None else level_max
    base = op.arg.charge * op.act.charge
    b = Fraction(base.base())
    if (exponent - b).denominator != 1:
        return op.target.zero()
    # weight accounting: the target level this exponent asks for
    wt_in = (op.arg.lowest_weight() + max((sum(p) for p in w1.comps), default=0)
             + op.act.lowest_weight() + max((sum(p) for p in w2.comps), default=0))
    lvl_out = wt_in - exponent - op.target.lowest_weight()
    if lvl_out > lm:
        raise HeisError(
            f"exponent {exponent} needs target level {lvl_out} beyond cutoff {lm}")
    series = op_series(op, w1, w2, lm)
    return series.get((exponent, logpow), op.target.zero())


def paired_series(dual: FockVector, op: IntwOp, w1: FockVector,
                  w2: FockVector) -> dict[tuple[Fraction, int], Nil]:
    """<dual, Y(w1, x) w2> as a map (exponent, logpower) -> ring value.
    Levels beyond the dual's top pair to zero, which caps the work."""
    lm = dual.max_level()
    series = op_series(op, w1, w2, lm)
    out: dict[tuple[Fraction, int], Nil] = {}
    for key, vec in series.items():
        val = dual.pair(vec)
        if not val.is_zero():
            out[key] = val
    return out
