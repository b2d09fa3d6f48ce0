"""Exact arithmetic on multi-variable formal series.

Terms are coefficient * prod_i v_i^(a_i) (log v_i)^(b_i) with rational
exponents a_i and natural log powers b_i.  Every series carries a frame: a
per-variable exponent window plus a log-power cap.  The frame states where
the series is *known*; equality, products and sums are always frame-relative.

Coefficients come in three mutually exclusive tags:

  - "rational"  : fractions.Fraction
  - "parampoly" : Laurent polynomial in the symbolic parameters z1, z2
  - "complex"   : python complex

The parameter z0 never appears in a ParamPoly; it is eliminated eagerly via
z0 = z1 - z2 so that equal coefficients have equal representations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

ALPHABET = ("x0", "x1", "x2", "y0", "y1", "y2", "z")
PARAMS = ("z1", "z2")

RationalLike = Union[int, Fraction]


class SeriesError(ValueError):
    pass


class TagMismatchError(SeriesError):
    pass


class FrameError(SeriesError):
    pass


def _fr(x: RationalLike | str) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def binom(n: Fraction | int, k: int) -> Fraction:
    """Generalized binomial coefficient C(n, k) = prod_{j<k} (n-j) / k!."""
    if k < 0:
        return Fraction(0)
    n = _fr(n)
    num = Fraction(1)
    for j in range(k):
        num *= n - j
    for j in range(2, k + 1):
        num /= j
    return num


# ---------------------------------------------------------------------------
# ParamPoly: Laurent polynomials in z1, z2 over Q
# ---------------------------------------------------------------------------

class ParamPoly:
    """Laurent polynomial in the parameters z1 and z2 with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], RationalLike] | None = None):
        self.terms: dict[tuple[int, int], Fraction] = {}
        if terms:
            for key, val in terms.items():
                v = _fr(val)
                if v:
                    self.terms[(int(key[0]), int(key[1]))] = v

    @staticmethod
    def const(c: RationalLike) -> "ParamPoly":
        return ParamPoly({(0, 0): _fr(c)})

    @staticmethod
    def param(name: str, power: int = 1) -> "ParamPoly":
        """z1^power or z2^power; z0 is rewritten as z1 - z2 (power >= 0 only)."""
        if name == "z1":
            return ParamPoly({(power, 0): 1})
        if name == "z2":
            return ParamPoly({(0, power): 1})
        if name == "z0":
            if power < 0:
                raise SeriesError("negative powers of z0 are not Laurent in z1, z2")
            return ParamPoly({(1, 0): 1, (0, 1): -1}) ** power
        raise SeriesError(f"unknown parameter {name!r}")

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ParamPoly.const(other)
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "ParamPoly":
        if isinstance(other, (int, Fraction)):
            other = ParamPoly.const(other)
        out = dict(self.terms)
        for key, val in other.terms.items():
            s = out.get(key, Fraction(0)) + val
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        res = ParamPoly()
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self) -> "ParamPoly":
        return ParamPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other) -> "ParamPoly":
        if isinstance(other, (int, Fraction)):
            other = ParamPoly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "ParamPoly":
        return (-self) + other

    def __mul__(self, other) -> "ParamPoly":
        if isinstance(other, (int, Fraction)):
            other = ParamPoly.const(other)
        if not isinstance(other, ParamPoly):
            return NotImplemented
        out: dict[tuple[int, int], Fraction] = {}
        for (a1, a2), av in self.terms.items():
            for (b1, b2), bv in other.terms.items():
                key = (a1 + b1, a2 + b2)
                s = out.get(key, Fraction(0)) + av * bv
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        res = ParamPoly()
        res.terms = out
        return res

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ParamPoly":
        if n < 0:
            raise SeriesError("ParamPoly supports nonnegative powers only")
        out = ParamPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def eval(self, z1: complex, z2: complex) -> complex:
        total = 0j
        for (a, b), v in self.terms.items():
            total += complex(v) * (z1 ** a) * (z2 ** b)
        return total

    def __repr__(self):
        if not self.terms:
            return "ParamPoly(0)"
        bits = [f"({v})*z1^{a}*z2^{b}" for (a, b), v in sorted(self.terms.items())]
        return "ParamPoly(" + " + ".join(bits) + ")"


Coefficient = Union[Fraction, ParamPoly, complex]

_TAG_TYPES = {"rational": Fraction, "parampoly": ParamPoly, "complex": complex}


def coerce_coeff(tag: str, value) -> Coefficient:
    if tag == "rational":
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int) or isinstance(value, str):
            return Fraction(value)
        raise TagMismatchError(f"cannot coerce {value!r} to a rational coefficient")
    if tag == "parampoly":
        if isinstance(value, ParamPoly):
            return value
        if isinstance(value, (int, Fraction)):
            return ParamPoly.const(value)
        raise TagMismatchError(f"cannot coerce {value!r} to a ParamPoly coefficient")
    if tag == "complex":
        if isinstance(value, complex):
            return value
        if isinstance(value, (int, float, Fraction)):
            return complex(value)
        raise TagMismatchError(f"cannot coerce {value!r} to a complex coefficient")
    raise TagMismatchError(f"unknown coefficient tag {tag!r}")


def _is_zero(c: Coefficient) -> bool:
    if isinstance(c, ParamPoly):
        return not c
    return c == 0


# ---------------------------------------------------------------------------
# Frames and monomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    lo: Fraction
    hi: Fraction
    logmax: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lo", _fr(self.lo))
        object.__setattr__(self, "hi", _fr(self.hi))
        if self.lo > self.hi:
            raise FrameError(f"empty window [{self.lo}, {self.hi}]")
        if self.logmax < 0:
            raise FrameError("negative log cap")

    def contains(self, exp: Fraction, logpow: int) -> bool:
        return self.lo <= exp <= self.hi and logpow <= self.logmax


class Frame:
    """Per-variable exponent windows.  A variable absent from the frame is
    asserted to appear only with exponent 0 and log power 0 (exactly)."""

    __slots__ = ("windows",)

    def __init__(self, windows: Mapping[str, Window]):
        for v in windows:
            if v not in ALPHABET:
                raise FrameError(f"variable {v!r} not in the declared alphabet {ALPHABET}")
        self.windows: dict[str, Window] = dict(windows)

    @staticmethod
    def make(**spec) -> "Frame":
        """Frame.make(x0=(-4, 4), x1=(-4, 4, 2)) -- optional third entry is logmax."""
        wins = {}
        for var, tup in spec.items():
            if len(tup) == 2:
                wins[var] = Window(_fr(tup[0]), _fr(tup[1]))
            else:
                wins[var] = Window(_fr(tup[0]), _fr(tup[1]), int(tup[2]))
        return Frame(wins)

    @staticmethod
    def box(variables: Iterable[str], bound: RationalLike, logmax: int = 0) -> "Frame":
        b = _fr(bound)
        return Frame({v: Window(-b, b, logmax) for v in variables})

    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.windows))

    def contains(self, m: "Monomial") -> bool:
        for var, exp, logpow in m.entries:
            w = self.windows.get(var)
            if w is None or not w.contains(exp, logpow):
                return False
        return True

    def intersect(self, other: "Frame") -> "Frame":
        wins = dict(self.windows)
        for var, w2 in other.windows.items():
            w1 = wins.get(var)
            if w1 is None:
                wins[var] = w2
            else:
                lo, hi = max(w1.lo, w2.lo), min(w1.hi, w2.hi)
                if lo > hi:
                    raise FrameError(f"empty frame intersection on {var}")
                wins[var] = Window(lo, hi, min(w1.logmax, w2.logmax))
        return Frame(wins)

    def mul_window(self, other: "Frame") -> "Frame":
        """Window of a product: exponent windows add (Minkowski sum), log
        caps add.  Whether a coefficient near the edges is complete depends
        on the factors' true supports; callers pick input windows wide enough
        for the region they read."""
        wins = dict(self.windows)
        for var, w2 in other.windows.items():
            w1 = wins.get(var)
            if w1 is None:
                wins[var] = w2
            else:
                wins[var] = Window(w1.lo + w2.lo, w1.hi + w2.hi,
                                   w1.logmax + w2.logmax)
        return Frame(wins)

    def shift(self, var: str, by: RationalLike) -> "Frame":
        wins = dict(self.windows)
        w = wins[var]
        wins[var] = Window(w.lo + _fr(by), w.hi + _fr(by), w.logmax)
        return Frame(wins)

    def drop(self, var: str) -> "Frame":
        wins = dict(self.windows)
        wins.pop(var, None)
        return Frame(wins)

    def __eq__(self, other):
        return isinstance(other, Frame) and self.windows == other.windows

    def __repr__(self):
        bits = [
            f"{v}:[{w.lo},{w.hi}]log{w.logmax}" for v, w in sorted(self.windows.items())
        ]
        return "Frame(" + ", ".join(bits) + ")"


class Monomial:
    """prod v^exp (log v)^logpow over a subset of the alphabet; entries with
    exp == 0 and logpow == 0 are omitted."""

    __slots__ = ("entries", "_hash")

    def __init__(self, entries: Iterable[tuple[str, Fraction, int]]):
        cleaned = []
        for var, exp, logpow in entries:
            if var not in ALPHABET:
                raise SeriesError(f"variable {var!r} not in alphabet")
            exp = _fr(exp)
            logpow = int(logpow)
            if logpow < 0:
                raise SeriesError("negative log power")
            if exp == 0 and logpow == 0:
                continue
            cleaned.append((var, exp, logpow))
        cleaned.sort(key=lambda t: t[0])
        names = [t[0] for t in cleaned]
        if len(set(names)) != len(names):
            raise SeriesError("duplicate variable in monomial")
        self.entries = tuple(cleaned)
        self._hash = hash(self.entries)

    @staticmethod
    def make(exps: Mapping[str, RationalLike] | None = None,
             logs: Mapping[str, int] | None = None) -> "Monomial":
        exps = dict(exps or {})
        logs = dict(logs or {})
        vars_ = set(exps) | set(logs)
        return Monomial(
            (v, _fr(exps.get(v, 0)), int(logs.get(v, 0))) for v in vars_
        )

    ONE: "Monomial"

    def exp(self, var: str) -> Fraction:
        for v, e, _ in self.entries:
            if v == var:
                return e
        return Fraction(0)

    def logpow(self, var: str) -> int:
        for v, _, b in self.entries:
            if v == var:
                return b
        return 0

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _, _ in self.entries)

    def __mul__(self, other: "Monomial") -> "Monomial":
        exps: dict[str, Fraction] = {}
        logs: dict[str, int] = {}
        for v, e, b in self.entries + other.entries:
            exps[v] = exps.get(v, Fraction(0)) + e
            logs[v] = logs.get(v, 0) + b
        return Monomial((v, exps[v], logs[v]) for v in exps)

    def without(self, var: str) -> "Monomial":
        return Monomial(t for t in self.entries if t[0] != var)

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.entries == other.entries

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return tuple((v, e, b) for v, e, b in self.entries)

    def __repr__(self):
        if not self.entries:
            return "1"
        bits = []
        for v, e, b in self.entries:
            if e:
                bits.append(f"{v}^{e}")
            if b:
                bits.append(f"log({v})^{b}")
        return "*".join(bits)


Monomial.ONE = Monomial(())


# ---------------------------------------------------------------------------
# FormalSeries
# ---------------------------------------------------------------------------

class FormalSeries:
    __slots__ = ("tag", "terms", "frame")

    def __init__(self, tag: str, terms: Mapping[Monomial, Coefficient], frame: Frame):
        if tag not in _TAG_TYPES:
            raise TagMismatchError(f"unknown tag {tag!r}")
        self.tag = tag
        self.frame = frame
        self.terms: dict[Monomial, Coefficient] = {}
        want = _TAG_TYPES[tag]
        for m, c in terms.items():
            if not isinstance(c, want):
                c = coerce_coeff(tag, c)
            if _is_zero(c):
                continue
            if not frame.contains(m):
                raise FrameError(f"term {m!r} lies outside the frame {frame!r}")
            self.terms[m] = c

    @staticmethod
    def zero(tag: str, frame: Frame) -> "FormalSeries":
        return FormalSeries(tag, {}, frame)

    @staticmethod
    def monomial(tag: str, coeff, exps: Mapping[str, RationalLike],
                 frame: Frame, logs: Mapping[str, int] | None = None) -> "FormalSeries":
        return FormalSeries(tag, {Monomial.make(exps, logs): coerce_coeff(tag, coeff)}, frame)

    def copy_with(self, terms=None, frame=None) -> "FormalSeries":
        return FormalSeries(self.tag, self.terms if terms is None else terms,
                            self.frame if frame is None else frame)

    def is_zero(self) -> bool:
        return not self.terms

    def restrict(self, frame: Frame) -> "FormalSeries":
        """Drop terms outside `frame`; the result is only as trustworthy as
        the intersection of the two frames."""
        kept = {m: c for m, c in self.terms.items() if frame.contains(m)}
        return FormalSeries(self.tag, kept, frame)

    def __eq__(self, other):
        return (isinstance(other, FormalSeries) and self.tag == other.tag
                and self.frame == other.frame and self.terms == other.terms)

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        return series_add(self, other)

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return series_add(self, other.scale(-1))

    def __mul__(self, other: "FormalSeries") -> "FormalSeries":
        return series_mul(self, other)

    def scale(self, factor) -> "FormalSeries":
        factor = coerce_coeff(self.tag, factor)
        if _is_zero(factor):
            return FormalSeries.zero(self.tag, self.frame)
        return FormalSeries(self.tag, {m: c * factor for m, c in self.terms.items()},
                            self.frame)

    def sorted_terms(self) -> list[tuple[Monomial, Coefficient]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0].sort_key())

    def __repr__(self):
        if not self.terms:
            return f"FormalSeries<{self.tag}>(0; {self.frame!r})"
        bits = [f"({c})*{m!r}" for m, c in self.sorted_terms()]
        return f"FormalSeries<{self.tag}>(" + " + ".join(bits) + f"; {self.frame!r})"


def _check_tags(a: FormalSeries, b: FormalSeries) -> None:
    if a.tag != b.tag:
        raise TagMismatchError(f"tag mismatch: {a.tag} vs {b.tag}")


def series_add(a: FormalSeries, b: FormalSeries) -> FormalSeries:
    """Termwise sum on the intersected frame."""
    _check_tags(a, b)
    frame = a.frame.intersect(b.frame)
    out: dict[Monomial, Coefficient] = {}
    for src in (a, b):
        for m, c in src.terms.items():
            if not frame.contains(m):
                continue
            s = out.get(m)
            s = c if s is None else s + c
            if _is_zero(s):
                out.pop(m, None)
            else:
                out[m] = s
    return FormalSeries(a.tag, out, frame)


def series_mul(a: FormalSeries, b: FormalSeries) -> FormalSeries:
    """Cauchy product restricted to the sound product frame."""
    _check_tags(a, b)
    frame = a.frame.mul_window(b.frame)
    out: dict[Monomial, Coefficient] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            m = ma * mb
            if not frame.contains(m):
                continue
            c = ca * cb
            s = out.get(m)
            s = c if s is None else s + c
            if _is_zero(s):
                out.pop(m, None)
            else:
                out[m] = s
    return FormalSeries(a.tag, out, frame)


def coeff_at(s: FormalSeries, m: Monomial) -> Coefficient:
    """Stored coefficient, or zero -- but only inside the frame; outside the
    frame the value is unknown, not zero."""
    if not s.frame.contains(m):
        raise FrameError(f"monomial {m!r} outside frame {s.frame!r}: unknown, not zero")
    c = s.terms.get(m)
    if c is not None:
        return c
    return coerce_coeff(s.tag, 0)


def residue(s: FormalSeries, var: str) -> FormalSeries:
    """Series of coefficients of var^{-1}; the variable is removed.

    Terms var^{-1} (log var)^k with k > 0 have no well-defined residue here
    and raise."""
    w = s.frame.windows.get(var)
    if w is None or not (w.lo <= -1 <= w.hi):
        raise FrameError(f"frame of {var} does not include exponent -1")
    out: dict[Monomial, Coefficient] = {}
    for m, c in s.terms.items():
        if m.exp(var) != -1:
            continue
        if m.logpow(var) != 0:
            raise SeriesError(f"residue undefined: log-bearing {var}^-1 term {m!r}")
        out[m.without(var)] = c
    return FormalSeries(s.tag, out, s.frame.drop(var))


def formal_derivative(s: FormalSeries, var: str) -> FormalSeries:
    """d/dvar with the product rule on v^a (log v)^b."""
    w = s.frame.windows.get(var)
    frame = s.frame.shift(var, -1) if w is not None else s.frame
    out: dict[Monomial, Coefficient] = {}

    def put(m: Monomial, c: Coefficient):
        if _is_zero(c) or not frame.contains(m):
            return
        prev = out.get(m)
        tot = c if prev is None else prev + c
        if _is_zero(tot):
            out.pop(m, None)
        else:
            out[m] = tot

    for m, c in s.terms.items():
        a = m.exp(var)
        b = m.logpow(var)
        if a == 0 and b == 0:
            continue
        rest = m.without(var)
        if a:
            put(rest * Monomial.make({var: a - 1}, {var: b}),
                c * coerce_coeff(s.tag, a))
        if b:
            put(rest * Monomial.make({var: a - 1}, {var: b - 1}),
                c * coerce_coeff(s.tag, b))
    return FormalSeries(s.tag, out, frame)


# ---------------------------------------------------------------------------
# Binomial expansion of (a*u + b*w)^n along a declared direction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineSymbol:
    """One summand of an affine base: coefficient * symbol, where symbol is a
    series variable, a symbolic parameter (z1/z2/z0), or a complex number."""
    symbol: Union[str, complex]
    coeff: Union[Fraction, int, complex] = 1

    def is_variable(self) -> bool:
        return isinstance(self.symbol, str) and self.symbol in ALPHABET

    def is_param(self) -> bool:
        return isinstance(self.symbol, str) and self.symbol in ("z0", "z1", "z2")


def binomial_expand(u: AffineSymbol, w: AffineSymbol, n: RationalLike,
                    direction: str, frame: Frame, tag: str = "rational") -> FormalSeries:
    """(a*u + b*w)^n = sum_k C(n,k) (a*u)^(n-k) (b*w)^k, nonnegative powers
    going to the summand named by `direction`; truncated to `frame`."""
    n = _fr(n)
    if direction == w.symbol:
        lead, tail = u, w
    elif direction == u.symbol:
        lead, tail = w, u
    else:
        raise SeriesError(f"direction {direction!r} names neither summand")
    if u.symbol == w.symbol:
        raise SeriesError("affine base must involve two distinct symbols")

    def sym_pow(atom: AffineSymbol, power: Fraction):
        """(coeff*symbol)^power -> (coefficient factor, monomial factor)."""
        coeff: Coefficient
        if power == int(power):
            p = int(power)
            if isinstance(atom.coeff, complex) or tag == "complex":
                coeff = coerce_coeff("complex", complex(atom.coeff) ** p)
            else:
                coeff = coerce_coeff(tag, _fr(atom.coeff) ** p)
        else:
            if atom.coeff != 1:
                if tag != "complex":
                    raise SeriesError(
                        "fractional power of a non-unit coefficient is not exact")
                coeff = complex(atom.coeff) ** complex(power)
            else:
                coeff = coerce_coeff(tag, 1)
        if atom.is_variable():
            return coeff, {str(atom.symbol): power}
        if atom.is_param():
            if tag == "parampoly":
                if power != int(power):
                    raise SeriesError("fractional parameter powers are not Laurent")
                return coeff * ParamPoly.param(str(atom.symbol), int(power)), {}
            raise SeriesError(f"symbolic parameter {atom.symbol!r} needs the parampoly tag")
        # numeric symbol
        if tag != "complex":
            raise SeriesError("numeric base symbols need the complex tag")
        return coeff * complex(atom.symbol) ** complex(power), {}

    # bound k: polynomial case terminates; variable windows bound the rest
    kmax = None
    if n == int(n) and n >= 0:
        kmax = int(n)
    if tail.is_variable():
        w_win = frame.windows.get(str(tail.symbol))
        if w_win is None:
            raise FrameError(f"frame missing direction variable {tail.symbol!r}")
        kb = int(w_win.hi)
        kmax = kb if kmax is None else min(kmax, kb)
    if lead.is_variable():
        l_win = frame.windows.get(str(lead.symbol))
        if l_win is None:
            raise FrameError(f"frame missing variable {lead.symbol!r}")
        if kmax is None:
            # lead exponent n-k must stay >= lo
            span = n - l_win.lo
            if span < 0:
                kmax = -1
            else:
                kmax = int(span)
    if kmax is None:
        raise SeriesError("expansion is not finitely determined by the frame")

    out: dict[Monomial, Coefficient] = {}
    for k in range(0, kmax + 1):
        c = binom(n, k)
        if not c:
            continue
        coeff = coerce_coeff(tag, c) if tag != "parampoly" else ParamPoly.const(c)
        exps: dict[str, Fraction] = {}
        cf, ex = sym_pow(lead, n - k)
        coeff = coeff * cf
        exps.update(ex)
        cf, ex = sym_pow(tail, Fraction(k))
        coeff = coeff * cf
        for v, e in ex.items():
            exps[v] = exps.get(v, Fraction(0)) + e
        m = Monomial.make(exps)
        if not frame.contains(m):
            continue
        s = out.get(m)
        s = coeff if s is None else s + coeff
        if _is_zero(s):
            out.pop(m, None)
        else:
            out[m] = s
    return FormalSeries(tag, out, frame)
