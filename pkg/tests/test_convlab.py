import cmath
import math
import random
from fractions import Fraction

import pytest

from fclab.branch import BranchedPoint, log_branch
from fclab.convlab import (CONVERGED, DIVERGED, INCONCLUSIVE, ProbeError,
                           RecoveryError, abs_convergence_probe,
                           circle_samples, double_vs_iterated,
                           termwise_derivative_probe, unique_expansion_recover)

F = Fraction


# ---------------------------------------------------------------------------
# the geometric-tail probe
# ---------------------------------------------------------------------------

def test_probe_geometric_converges_to_two():
    rep = abs_convergence_probe((0.5 ** k for k in range(2000)), tol=1e-9)
    assert rep.status == CONVERGED
    assert abs(rep.value - 2.0) < 1e-9
    assert rep.tail_estimate < 1e-9


def test_probe_doubling_diverges():
    rep = abs_convergence_probe((2.0 ** k for k in range(300)), tol=1e-9)
    assert rep.status == DIVERGED


def test_probe_subgeometric_inconclusive_with_note():
    rep = abs_convergence_probe(((k + 1.0) ** -2 for k in range(10 ** 4)),
                                tol=1e-9, max_terms=10 ** 4)
    assert rep.status == INCONCLUSIVE
    assert any("sub-geometric" in n for n in rep.notes)


def test_probe_factorial_overflow_guard():
    def terms():
        t = 1.0
        k = 1
        while True:
            yield t
            t *= k * 0.5
            k += 1

    rep = abs_convergence_probe(terms(), tol=1e-9, max_terms=10 ** 4)
    assert rep.status == DIVERGED


def test_probe_finite_zero_tail():
    rep = abs_convergence_probe([1.0, 0.5, 0.25] + [0.0] * 20, tol=1e-12)
    assert rep.status == CONVERGED
    assert rep.tail_estimate == 0.0
    assert abs(rep.value - 1.75) < 1e-15


def test_probe_monotone_in_tolerance_with_same_value():
    rng = random.Random(9)
    for _ in range(30):
        r = rng.uniform(0.1, 0.9)
        terms = [r ** k * cmath.exp(1j * k) for k in range(200)]
        strict = abs_convergence_probe(terms, tol=1e-12)
        loose = abs_convergence_probe(terms, tol=1e-6)
        if strict.status == CONVERGED:
            assert loose.status == CONVERGED
            assert strict.value == loose.value


def test_probe_window_validation():
    with pytest.raises(ProbeError):
        abs_convergence_probe([1.0], tol=1e-9, window=3)


# ---------------------------------------------------------------------------
# double vs iterated
# ---------------------------------------------------------------------------

def test_double_vs_iterated_finite_table():
    table = {(F(k), b): 0.3 ** k * (0.5 if b else 1.0)
             for k in range(12) for b in (0, 1)}
    rep = double_vs_iterated(table, BranchedPoint(0.8 + 0.1j), tol=1e-10)
    assert rep.verdicts_agree
    assert rep.double.status == CONVERGED
    assert rep.value_diff < 1e-10


def test_double_vs_iterated_geometric_closed_form():
    r = 0.4
    z = 0.9 + 0.3j
    table = {(F(k), 0): complex(r ** k) for k in range(80)}
    rep = double_vs_iterated(table, BranchedPoint(z), tol=1e-10)
    assert rep.verdicts_agree
    closed = 1.0 / (1.0 - r * z)
    assert abs(rep.double.value - closed) < 1e-10
    assert abs(rep.iterated.value - closed) < 1e-10


def test_double_vs_iterated_needs_window():
    with pytest.raises(ProbeError):
        double_vs_iterated({(F(0), 0): 1.0}, BranchedPoint(0.5 + 0j), tol=1e-9)


def test_double_vs_iterated_generated_suite():
    # ten geometrically convergent and ten factorially divergent tables
    rng = random.Random(31)
    pt = BranchedPoint(0.7 + 0.4j)
    for i in range(10):
        r = rng.uniform(0.2, 0.6)
        table = {(F(k), b): r ** k * rng.uniform(0.5, 1.5)
                 for k in range(60) for b in (0, 1)}
        rep = double_vs_iterated(table, pt, tol=1e-8)
        assert rep.verdicts_agree, (i, rep.double.status, rep.iterated.status,
                                    rep.derivative.status)
        assert rep.double.status == CONVERGED
        assert rep.value_diff < 1e-9
    for i in range(10):
        table = {}
        t = 1.0
        for k in range(60):
            table[(F(k), 0)] = t * rng.uniform(0.5, 1.5)
            t *= (k + 1) * 0.9
        rep = double_vs_iterated(table, pt, tol=1e-8)
        assert rep.double.status == DIVERGED
        assert rep.verdicts_agree


# ---------------------------------------------------------------------------
# termwise derivative probe
# ---------------------------------------------------------------------------

def test_derivative_probe_geometric():
    coeffs = [(F(k), complex(1.0)) for k in range(200)]
    rep = termwise_derivative_probe(coeffs, BranchedPoint(0.5 + 0j), tol=1e-9)
    assert rep.passed
    assert abs(rep.series_value - 4.0) < 1e-9  # d/dz 1/(1-z) at 1/2


def test_derivative_probe_exponential_type():
    coeffs = [(F(k, 2), complex(Fraction(1) / math.factorial(k)))
              for k in range(60)]
    rep = termwise_derivative_probe(coeffs, BranchedPoint(0.9 + 0j), tol=1e-10)
    assert rep.passed
    assert rep.rel_err <= 1e-5


def test_derivative_probe_divergent_base_errors():
    coeffs = [(F(k), complex(math.factorial(min(k, 150)))) for k in range(160)]
    with pytest.raises(ProbeError):
        termwise_derivative_probe(coeffs, BranchedPoint(0.5 + 0j), tol=1e-9)


# ---------------------------------------------------------------------------
# unique-expansion recovery
# ---------------------------------------------------------------------------

def _eval_table(support, coeffs, pts):
    out = []
    for pt in pts:
        l = log_branch(pt)
        val = sum(c * cmath.exp(complex(a) * l) * l ** b
                  for (a, b), c in zip(support, coeffs))
        out.append((pt, val))
    return out


def test_recover_sqrt_log_pair():
    support = [(F(1, 2), 0), (F(1, 2), 1)]
    pts = circle_samples(8, radii=(2.0, 2.0))
    samples = _eval_table(support, [2.0 + 0j, -3.0 + 0j], pts)
    res = unique_expansion_recover(samples, support)
    assert abs(res.coefficients[(F(1, 2), 0)] - 2.0) < 1e-10
    assert abs(res.coefficients[(F(1, 2), 1)] + 3.0) < 1e-10
    assert res.residual <= 1e-10


def test_recover_zero_samples_zero_coefficients():
    support = [(F(k), b) for k in range(3) for b in (0, 1)]
    pts = circle_samples(12)
    samples = [(pt, 0j) for pt in pts]
    res = unique_expansion_recover(samples, support)
    assert all(abs(c) <= 1e-10 for c in res.coefficients.values())


def test_recover_duplicate_support_is_rank_deficient():
    support = [(F(1), 0), (F(1), 0)]
    pts = circle_samples(6)
    samples = [(pt, 1.0 + 0j) for pt in pts]
    with pytest.raises(RecoveryError):
        unique_expansion_recover(samples, support)


def test_recover_requires_enough_samples():
    with pytest.raises(RecoveryError):
        unique_expansion_recover([(BranchedPoint(1j), 0j)],
                                 [(F(0), 0), (F(1), 0)])


def test_recover_round_trip_random_trials():
    rng = random.Random(17)
    for _ in range(50):
        nsup = rng.randint(3, 12)
        nmax = rng.randint(0, 3)
        support = set()
        while len(support) < nsup:
            support.add((F(rng.randint(-6, 6), rng.choice([1, 2])),
                         rng.randint(0, nmax)))
        support = sorted(support)
        coeffs = [complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                  for _ in support]
        pts = circle_samples(2 * nsup, radii=(1.0, 2.0))
        samples = _eval_table(support, coeffs, pts)
        res = unique_expansion_recover(samples, support)
        assert res.residual <= 1e-8
        for key, c in zip(support, coeffs):
            assert abs(res.coefficients[key] - c) <= 1e-6 * max(1.0, res.condition_estimate)
