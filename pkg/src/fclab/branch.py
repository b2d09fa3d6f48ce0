"""Branch-indexed logarithms, rotations by e^{+-i pi}, and specialization of
formal series at branched points.

A branched point is a nonzero complex number z with an integer branch index
p, standing for the logarithm  l_p(z) = ln|z| + i arg z + 2 pi i p  with
arg z in [0, 2 pi).  Powers mean z^a = exp(a l_p(z)) and log z means l_p(z).
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .series import FormalSeries, Monomial, ParamPoly, SeriesError

TWO_PI = 2.0 * math.pi


class BranchError(ValueError):
    pass


@dataclass(frozen=True)
class BranchedPoint:
    z: complex
    p: int = 0

    def __post_init__(self):
        if self.z == 0:
            raise BranchError("branched point requires z != 0")
        object.__setattr__(self, "z", complex(self.z))

    def arg(self) -> float:
        """Argument canonicalized to [0, 2 pi)."""
        a = math.atan2(self.z.imag, self.z.real)
        if a < 0.0:
            a += TWO_PI
        if a >= TWO_PI:
            a -= TWO_PI
        return a

    def on_positive_real_cut(self) -> bool:
        return self.z.imag == 0.0 and self.z.real > 0.0


def log_branch(pt: BranchedPoint) -> complex:
    return complex(math.log(abs(pt.z)), pt.arg() + TWO_PI * pt.p)


def power(pt: BranchedPoint, alpha: complex | Fraction) -> complex:
    return cmath.exp(complex(alpha) * log_branch(pt))


def rotate_point(pt: BranchedPoint, half_turns: int) -> BranchedPoint:
    """Multiply z by e^{+-i pi} adjusting p so that exactly
    l_{p'}(z') = l_p(z) +- i pi.

    One half-turn up: p' = p if arg z in [0, pi), else p + 1.
    One half-turn down: p' = p if arg z in [pi, 2 pi), else p - 1.
    """
    if half_turns not in (1, -1):
        raise BranchError("half_turns must be +1 or -1")
    a = pt.arg()
    if half_turns == 1:
        p2 = pt.p if a < math.pi else pt.p + 1
    else:
        p2 = pt.p if a >= math.pi else pt.p - 1
    return BranchedPoint(-pt.z, p2)


def parse_complex(text: str) -> complex:
    """Parse 'a+bi' literals: '2+0i', '-1.5-2i', '3', '2i', '-i'."""
    s = text.strip().replace(" ", "")
    if not s:
        raise BranchError("empty complex literal")
    m = re.fullmatch(r"([+-]?[0-9.eE+-]*?)([+-][0-9.eE]*)?i", s)
    if m:
        re_part, im_part = m.group(1), m.group(2)
        if im_part is None:
            im_part, re_part = re_part, ""
        if im_part in ("", "+"):
            im_part = "1"
        elif im_part == "-":
            im_part = "-1"
        re_val = float(re_part) if re_part not in ("", "+", "-") else 0.0
        return complex(re_val, float(im_part))
    return complex(float(s), 0.0)


def format_complex(value: complex) -> str:
    im = value.imag
    sign = "+" if im >= 0 else "-"
    return f"{value.real!r}{sign}{abs(im)!r}i"


class Assignment:
    """Map from variable names to branched points, covering a series."""

    def __init__(self, points: Mapping[str, BranchedPoint]):
        self.points = dict(points)

    def covers(self, s: FormalSeries) -> bool:
        needed = set()
        for m in s.terms:
            needed.update(m.variables())
        return needed <= set(self.points)

    def term_value(self, m: Monomial, coeff) -> complex:
        if isinstance(coeff, ParamPoly):
            raise SeriesError("specialize symbolic coefficients via eval first")
        val = complex(coeff)
        for var, exp, logpow in m.entries:
            l = log_branch(self.points[var])
            if exp:
                val *= cmath.exp(complex(exp) * l)
            if logpow:
                val *= l ** logpow
        return val

    def notes(self) -> list[str]:
        flagged = [v for v, pt in sorted(self.points.items()) if pt.on_positive_real_cut()]
        if flagged:
            return ["points on the positive real axis (arg = 0 cut): " + ", ".join(flagged)]
        return []


class EvalStream:
    """Scheduled term stream of a specialized series.

    Groups of terms, ordered by the schedule; iterating yields the group
    values, and partial_sums() yields the running sums.
    """

    def __init__(self, groups: list[tuple[object, complex]], notes: Iterable[str] = ()):
        self.groups = groups
        self.notes = list(notes)

    def __iter__(self):
        return iter(self.groups)

    def term_values(self) -> list[complex]:
        return [v for _, v in self.groups]

    def term_magnitudes(self) -> list[float]:
        return [abs(v) for _, v in self.groups]

    def partial_sums(self):
        total = 0j
        for _, v in self.groups:
            total += v
            yield total

    def value(self) -> complex:
        return sum((v for _, v in self.groups), 0j)

    @staticmethod
    def merge(a: "EvalStream", b: "EvalStream") -> "EvalStream":
        """Termwise merge of two streams with identical schedules."""
        keys = {k for k, _ in a.groups} | {k for k, _ in b.groups}
        da = dict(a.groups)
        db = dict(b.groups)
        order = [k for k, _ in a.groups] + [k for k, _ in b.groups if k not in da]
        seen = set()
        groups = []
        for k in order:
            if k in seen:
                continue
            seen.add(k)
            groups.append((k, da.get(k, 0j) + db.get(k, 0j)))
        return EvalStream(groups, a.notes + b.notes)


def specialize(s: FormalSeries, assignment: Assignment,
               schedule: tuple = ("degree",)) -> EvalStream:
    """Evaluate a series termwise at branched points, grouped and ordered by
    the schedule:

      ("weight", var) -- group by the exponent of `var`, ascending;
      ("degree",)     -- group by total sum of |Re exponent|, ascending;
      ("magnitude",)  -- one term per group, |value| descending.
    """
    if not assignment.covers(s):
        raise BranchError("assignment does not cover the series variables")
    evaluated = [(m, assignment.term_value(m, c)) for m, c in s.sorted_terms()]

    kind = schedule[0]
    if kind == "weight":
        var = schedule[1]
        keys = sorted({m.exp(var) for m, _ in evaluated})
        groups = []
        for key in keys:
            groups.append((key, sum((v for m, v in evaluated if m.exp(var) == key), 0j)))
    elif kind == "degree":
        def deg(m: Monomial) -> Fraction:
            return sum((abs(e) for _, e, _ in m.entries), Fraction(0))
        keys = sorted({deg(m) for m, _ in evaluated})
        groups = []
        for key in keys:
            groups.append((key, sum((v for m, v in evaluated if deg(m) == key), 0j)))
    elif kind == "magnitude":
        ordered = sorted(evaluated, key=lambda mv: -abs(mv[1]))
        groups = [(repr(m), v) for m, v in ordered]
    else:
        raise BranchError(f"unknown schedule {schedule!r}")
    return EvalStream(groups, assignment.notes())
