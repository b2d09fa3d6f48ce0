"""Convergence probing and coefficient recovery.

The probe fits a geometric ratio to the tail of a term stream.  Series in
scope decay geometrically in a modulus ratio when they converge at all, so a
geometric fit is decisive for them; sub-geometric streams are reported
inconclusive rather than guessed at.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .branch import Assignment, BranchedPoint, EvalStream, log_branch
from .series import FormalSeries, Monomial

CONVERGED = "converged"
DIVERGED = "diverged"
INCONCLUSIVE = "inconclusive"

RATIO_CONVERGE = 0.95
RATIO_DIVERGE = 1.05
OVERFLOW_GUARD = 1e100
CONDITION_LIMIT = 1e12


class ProbeError(ValueError):
    pass


class RecoveryError(ValueError):
    pass


@dataclass
class ConvergenceReport:
    status: str
    value: complex
    tail_estimate: float
    ratio_estimate: float
    terms_used: int
    notes: list[str] = field(default_factory=list)

    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "value": {"re": self.value.real, "im": self.value.imag},
            "tail_estimate": self.tail_estimate,
            "ratio_estimate": self.ratio_estimate,
            "terms_used": self.terms_used,
            "notes": list(self.notes),
        }


def _as_terms(stream) -> Iterable[complex]:
    if isinstance(stream, EvalStream):
        return stream.term_values()
    return stream


def abs_convergence_probe(stream, tol: float, window: int = 8,
                          max_terms: int = 10_000,
                          exhaustive: bool = False) -> ConvergenceReport:
    """Geometric-tail probe over term magnitudes.

    Consumes up to max_terms (the count consumed does not depend on tol, so
    verdicts are monotone in tol), then fits a ratio r over the last `window`
    magnitudes.  Converged: r < 0.95 and |t_last| r/(1-r) < tol.  Diverged:
    magnitudes nondecreasing across the window with r > 1.05, or overflow.
    Anything else is inconclusive -- a verdict, not an error.

    With exhaustive=True the stream is a complete finitely-supported series
    (not a truncation): if it ends before max_terms without a divergence
    trend, the tail is identically zero and the verdict is converged.
    """
    if window < 4:
        raise ProbeError("window must be at least 4")
    notes: list[str] = []
    if isinstance(stream, EvalStream) and stream.notes:
        notes.extend(stream.notes)
    mags: list[float] = []
    total = 0j
    overflow = False
    ended = True
    it = iter(_as_terms(stream))
    for term in it:
        term = complex(term)
        mag = abs(term)
        if math.isnan(mag) or mag > OVERFLOW_GUARD:
            overflow = True
            mags.append(mag)
            notes.append("magnitude overflow guard tripped")
            ended = False
            break
        total += term
        mags.append(mag)
        if len(mags) >= max_terms:
            ended = next(it, None) is None
            break

    used = len(mags)
    if used == 0:
        return ConvergenceReport(CONVERGED, 0j, 0.0, 0.0, 0, ["empty stream"])
    if overflow:
        return ConvergenceReport(DIVERGED, total, math.inf, math.inf, used, notes)

    wnd = mags[-window:] if used >= window else mags[:]
    nonzero = [m for m in wnd if m > 0.0]
    ratio = ((nonzero[-1] / nonzero[0]) ** (1.0 / (len(nonzero) - 1))
             if len(nonzero) >= 2 else 0.0)
    monotone = all(wnd[i + 1] >= wnd[i] for i in range(len(wnd) - 1))
    if len(wnd) >= window and monotone and ratio > RATIO_DIVERGE and max(wnd) > 0.0:
        return ConvergenceReport(DIVERGED, total, math.inf, ratio, used, notes)
    if max(wnd) == 0.0:
        return ConvergenceReport(CONVERGED, total, 0.0, 0.0, used, notes)
    if exhaustive and ended:
        notes.append("finitely supported series: tail is identically zero")
        return ConvergenceReport(CONVERGED, total, 0.0, ratio, used, notes)
    if used < window:
        notes.append(f"only {used} terms; need {window} for the ratio fit")
        return ConvergenceReport(INCONCLUSIVE, total, math.inf, 0.0, used, notes)
    if len(nonzero) < 2:
        notes.append("window too sparse for a ratio fit")
        return ConvergenceReport(INCONCLUSIVE, total, math.inf, 0.0, used, notes)

    if ratio < RATIO_CONVERGE:
        bound = wnd[-1] * ratio / (1.0 - ratio)
        if bound < tol:
            return ConvergenceReport(CONVERGED, total, bound, ratio, used, notes)
        notes.append(f"geometric bound {bound:.3e} above tolerance {tol:.3e}")
        return ConvergenceReport(INCONCLUSIVE, total, bound, ratio, used, notes)
    notes.append(
        f"ratio fit {ratio:.6f} in [{RATIO_CONVERGE}, {RATIO_DIVERGE}]: "
        "sub-geometric or slowly varying tail")
    return ConvergenceReport(INCONCLUSIVE, total, math.inf, ratio, used, notes)


def probe_series_at(s: FormalSeries, pt: BranchedPoint, var: str, tol: float,
                    schedule: tuple = None, window: int = 8,
                    max_terms: int = 10_000) -> ConvergenceReport:
    """Specialize a single-variable series at a branched point and probe it."""
    from .branch import specialize
    schedule = schedule or ("weight", var)
    stream = specialize(s, Assignment({var: pt}), schedule)
    return abs_convergence_probe(stream, tol, window=window, max_terms=max_terms)


# ---------------------------------------------------------------------------
# double sum vs iterated sum (single variable z with logs)
# ---------------------------------------------------------------------------

@dataclass
class DoubleVsIteratedReport:
    double: ConvergenceReport
    iterated: ConvergenceReport
    derivative: ConvergenceReport
    verdicts_agree: bool
    value_diff: float

    def to_dict(self) -> dict:
        return {
            "double": self.double.to_dict(),
            "iterated": self.iterated.to_dict(),
            "derivative": self.derivative.to_dict(),
            "verdicts_agree": self.verdicts_agree,
            "value_diff": self.value_diff,
        }


def double_vs_iterated(samples: dict[tuple[Fraction, int], complex],
                       pt: BranchedPoint, tol: float, window: int = 8,
                       max_terms: int = 10_000) -> DoubleVsIteratedReport:
    """Compare the doubly-indexed sum over (exponent, logpower) in magnitude
    order against the iterated sum (inner log polynomial, outer exponent
    ascending), plus the termwise-derivative companion series."""
    if not samples:
        raise ProbeError("empty coefficient table")
    l = log_branch(pt)
    alphas = sorted({a for a, _ in samples})
    if len(alphas) < window:
        raise ProbeError(
            f"only {len(alphas)} distinct exponents; diagnostic window needs {window}")

    def zpow(a: Fraction) -> complex:
        return cmath.exp(complex(a) * l)

    # (i) double sum: one term per (exponent, logpower), enumerated by index
    # magnitude |alpha| ascending (the degree schedule)
    double_terms = [samples[key] * zpow(key[0]) * l ** key[1]
                    for key in sorted(samples, key=lambda k: (abs(k[0]), k[0], k[1]))]
    double_rep = abs_convergence_probe(double_terms, tol, window, max_terms,
                                       exhaustive=True)

    # (ii) iterated sum: inner log polynomial per exponent, ascending exponent
    def inner(a: Fraction) -> complex:
        return sum(coeff * l ** b for (aa, b), coeff in samples.items() if aa == a)

    iterated_terms = [inner(a) * zpow(a) for a in alphas]
    iterated_rep = abs_convergence_probe(iterated_terms, tol, window, max_terms,
                                         exhaustive=True)

    # (iii) derivative of the iterated series, same format with D - 1 exponents
    def dterm(a: Fraction) -> complex:
        poly = inner(a)
        dpoly = sum(coeff * b * l ** (b - 1)
                    for (aa, b), coeff in samples.items() if aa == a and b > 0)
        return (complex(a) * poly + dpoly) * cmath.exp(complex(a - 1) * l)

    deriv_rep = abs_convergence_probe([dterm(a) for a in alphas], tol, window,
                                      max_terms, exhaustive=True)

    agree = double_rep.status == iterated_rep.status == deriv_rep.status
    diff = abs(double_rep.value - iterated_rep.value)
    return DoubleVsIteratedReport(double_rep, iterated_rep, deriv_rep, agree, diff)


# ---------------------------------------------------------------------------
# termwise derivative probe with finite-difference cross-check
# ---------------------------------------------------------------------------

@dataclass
class DerivativeProbeReport:
    base: ConvergenceReport
    derivative_at: dict[str, ConvergenceReport]
    fd_value: complex
    series_value: complex
    rel_err: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "derivative_at": {k: v.to_dict() for k, v in self.derivative_at.items()},
            "fd_value": {"re": self.fd_value.real, "im": self.fd_value.imag},
            "series_value": {"re": self.series_value.real, "im": self.series_value.imag},
            "rel_err": self.rel_err,
            "passed": self.passed,
        }


def termwise_derivative_probe(coeffs: Sequence[tuple[Fraction, complex]],
                              pt: BranchedPoint, tol: float,
                              fd_rel_tol: float = 1e-5, window: int = 8,
                              max_terms: int = 10_000) -> DerivativeProbeReport:
    """Probe sum a_alpha alpha z^(alpha-1) at pt and at two nearby radii, and
    cross-check against a central finite difference of the summed base series."""
    ordered = sorted(coeffs, key=lambda t: t[0])

    def base_terms(point: BranchedPoint) -> list[complex]:
        l = log_branch(point)
        return [complex(c) * cmath.exp(complex(a) * l) for a, c in ordered]

    def deriv_terms(point: BranchedPoint) -> list[complex]:
        l = log_branch(point)
        return [complex(c) * complex(a) * cmath.exp(complex(a - 1) * l)
                for a, c in ordered]

    base_rep = abs_convergence_probe(base_terms(pt), tol, window, max_terms)
    if not base_rep.converged():
        raise ProbeError(f"base series does not converge at {pt.z}: {base_rep.status}")

    radii = {
        "at": pt,
        "inner": BranchedPoint(pt.z * 0.97, pt.p),
        "outer": BranchedPoint(pt.z * 1.03, pt.p),
    }
    deriv_reps = {name: abs_convergence_probe(deriv_terms(p), tol, window, max_terms)
                  for name, p in radii.items()}

    h = 1e-5 * abs(pt.z)
    plus = abs_convergence_probe(base_terms(BranchedPoint(pt.z + h, pt.p)),
                                 tol, window, max_terms)
    minus = abs_convergence_probe(base_terms(BranchedPoint(pt.z - h, pt.p)),
                                  tol, window, max_terms)
    fd = (plus.value - minus.value) / (2.0 * h)
    series_value = deriv_reps["at"].value
    scale = max(abs(series_value), 1e-30)
    rel = abs(fd - series_value) / scale
    ok = all(r.converged() for r in deriv_reps.values()) and rel <= fd_rel_tol
    return DerivativeProbeReport(base_rep, deriv_reps, fd, series_value, rel, ok)


# ---------------------------------------------------------------------------
# unique-expansion coefficient recovery
# ---------------------------------------------------------------------------

@dataclass
class RecoveryResult:
    coefficients: dict[tuple[Fraction, int], complex]
    residual: float
    condition_estimate: float

    def to_dict(self) -> dict:
        return {
            "coefficients": [
                {"alpha": f"{a.numerator}/{a.denominator}", "beta": b,
                 "re": c.real, "im": c.imag}
                for (a, b), c in sorted(self.coefficients.items())
            ],
            "residual": self.residual,
            "condition_estimate": self.condition_estimate,
        }


def circle_samples(count: int, radii: tuple[float, float] = (1.0, 2.0),
                   p: int = 0, angle_offset: float = 0.37) -> list[BranchedPoint]:
    """Deterministic sample points interleaved over two concentric circles,
    at distinct angles avoiding the positive real axis (and hence z = 1)."""
    pts = []
    for j in range(count):
        theta = 2.0 * math.pi * (j + angle_offset) / count
        radius = radii[j % 2]
        pts.append(BranchedPoint(radius * cmath.exp(1j * theta), p))
    return pts


def unique_expansion_recover(samples: Sequence[tuple[BranchedPoint, complex]],
                             support: Sequence[tuple[Fraction, int]],
                             ) -> RecoveryResult:
    """Least-squares recovery of coefficients a_(alpha,beta) from point values
    of sum a z^alpha (log z)^beta.

    The uniqueness statement is rendered as conditioning: a well-conditioned
    system with (near-)zero samples forces (near-)zero coefficients.  A
    condition estimate above 1e12 (duplicate support entries, for instance)
    raises instead of solving silently.
    """
    support = list(support)
    if len(samples) < len(support):
        raise RecoveryError(
            f"need at least {len(support)} samples, got {len(samples)}")
    zs = [pt.z for pt, _ in samples]
    if len({(z.real, z.imag) for z in zs}) != len(zs):
        raise RecoveryError("sample points must be pairwise distinct")
    has_logs = any(b > 0 for _, b in support)
    if has_logs and any(abs(z - 1.0) < 1e-9 for z in zs):
        raise RecoveryError("sample at z = 1 degenerates the log columns")

    rows = []
    for pt, _ in samples:
        l = log_branch(pt)
        rows.append([cmath.exp(complex(a) * l) * l ** b for a, b in support])
    A = np.array(rows, dtype=complex)
    y = np.array([v for _, v in samples], dtype=complex)

    sing = np.linalg.svd(A, compute_uv=False)
    smin = float(sing.min())
    cond = math.inf if smin == 0.0 else float(sing.max()) / smin
    if cond > CONDITION_LIMIT:
        raise RecoveryError(
            f"rank-deficient recovery system (condition estimate {cond:.3e})")

    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ sol
    residual = float(np.max(np.abs(fit - y))) if len(y) else 0.0
    coeffs = {key: complex(sol[j]) for j, key in enumerate(support)}
    return RecoveryResult(coeffs, residual, cond)


def series_log_table(s: FormalSeries, var: str) -> dict[tuple[Fraction, int], complex]:
    """Extract the (exponent, logpower) -> coefficient table of a
    single-variable series for the double-sum diagnostics."""
    table: dict[tuple[Fraction, int], complex] = {}
    for m, c in s.terms.items():
        for v, _, _ in m.entries:
            if v != var:
                raise ProbeError(f"series involves {v}, expected only {var}")
        key = (m.exp(var), m.logpow(var))
        table[key] = table.get(key, 0j) + complex(c)
    return table
