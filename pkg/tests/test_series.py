import random
from fractions import Fraction

import pytest

from fclab.series import (AffineSymbol, FormalSeries, Frame, FrameError,
                          Monomial, ParamPoly, SeriesError, TagMismatchError,
                          binom, binomial_expand, coeff_at, formal_derivative,
                          residue, series_add, series_mul)

F = Fraction


def mono(exps, logs=None):
    return Monomial.make(exps, logs)


def rational(terms, frame):
    return FormalSeries("rational", {mono(e, l): F(c) for (e, l, c) in terms}, frame)


# ---------------------------------------------------------------------------
# addition
# ---------------------------------------------------------------------------

def test_add_inverse_cancels():
    fr = Frame.make(z=(-2, 2))
    a = rational([({"z": 1}, None, 1)], fr)
    b = rational([({"z": 1}, None, -1)], fr)
    assert series_add(a, b).is_zero()


def test_add_disjoint_monomials():
    fr = Frame.make(z=(0, 1, 1))
    a = rational([({"z": F(1, 2)}, None, 2)], fr)
    b = rational([({"z": F(1, 2)}, {"z": 1}, 3)], fr)
    s = series_add(a, b)
    assert len(s.terms) == 2
    assert coeff_at(s, mono({"z": F(1, 2)})) == 2
    assert coeff_at(s, mono({"z": F(1, 2)}, {"z": 1})) == 3


def _random_series(rng, frame, nterms):
    terms = {}
    for _ in range(nterms):
        exps, logs = {}, {}
        for var, w in frame.windows.items():
            exps[var] = rng.randint(int(w.lo), int(w.hi))
            logs[var] = rng.randint(0, w.logmax)
        terms[mono(exps, logs)] = F(rng.randint(-9, 9), rng.randint(1, 9))
    return FormalSeries("rational", terms, frame)


def test_add_matches_naive_merge():
    rng = random.Random(7)
    fr = Frame.make(x1=(-3, 3, 2), x2=(-3, 3, 2))
    for _ in range(20):
        a = _random_series(rng, fr, 50)
        b = _random_series(rng, fr, 50)
        merged = dict(a.terms)
        for m, c in b.terms.items():
            merged[m] = merged.get(m, F(0)) + c
        merged = {m: c for m, c in merged.items() if c}
        assert series_add(a, b).terms == merged


def test_add_tag_mismatch():
    fr = Frame.make(z=(0, 1))
    a = rational([({"z": 1}, None, 1)], fr)
    b = FormalSeries("complex", {mono({"z": 1}): 1 + 0j}, fr)
    with pytest.raises(TagMismatchError):
        series_add(a, b)


def test_add_empty_frame_intersection():
    a = rational([({"z": 2}, None, 1)], Frame.make(z=(2, 4)))
    b = rational([({"z": 0}, None, 1)], Frame.make(z=(0, 1)))
    with pytest.raises(FrameError):
        series_add(a, b)


# ---------------------------------------------------------------------------
# multiplication
# ---------------------------------------------------------------------------

def test_mul_exponent_cancellation():
    a = rational([({"z": -1}, None, 1)], Frame.make(z=(-1, -1)))
    b = rational([({"z": 1}, None, 1)], Frame.make(z=(1, 1)))
    p = series_mul(a, b)
    assert p.terms == {Monomial.ONE: F(1)}


def test_mul_difference_of_squares():
    fr = Frame.make(z=(0, 2))
    a = rational([({}, None, 1), ({"z": 1}, None, 1)], fr)
    b = rational([({}, None, 1), ({"z": 1}, None, -1)], fr)
    p = series_mul(a, b)
    assert coeff_at(p, Monomial.ONE) == 1
    assert coeff_at(p, mono({"z": 1})) == 0
    assert coeff_at(p, mono({"z": 2})) == -1


def test_mul_expand_then_multiply_vs_multiply_then_expand():
    # iota_plus expansions of (x0-z1)^-1 and (x0-z2)^-1; their product must
    # match the direct expansion sum_{k,l} x0^(-2-k-l) z1^k z2^l.
    bound = 6
    fr = Frame.make(x0=(-2 * bound - 2, -1))
    e1 = binomial_expand(AffineSymbol("x0"), AffineSymbol("z1", -1), F(-1),
                         "z1", fr, tag="parampoly")
    e2 = binomial_expand(AffineSymbol("x0"), AffineSymbol("z2", -1), F(-1),
                         "z2", fr, tag="parampoly")
    prod = series_mul(e1, e2)
    # complete region: every pair (k, l) with k + l = j has both factors
    # inside their windows, i.e. total exponent >= lo_a + hi_b = -15
    complete_lo = -15
    for m, c in prod.terms.items():
        a = m.exp("x0")
        if a < complete_lo:
            continue
        j = int(-a - 2)
        expected = ParamPoly({(k, j - k): 1 for k in range(j + 1)})
        assert c == expected, (m, c)
    present = {m.exp("x0") for m in prod.terms}
    assert {F(e) for e in range(complete_lo, -1)} <= present


def test_mul_coeff_matches_brute_force_convolution():
    rng = random.Random(21)
    fr = Frame.make(x1=(-3, 3, 2), x2=(-3, 3, 2))
    for _ in range(10):
        a = _random_series(rng, fr, 12)
        b = _random_series(rng, fr, 12)
        p = series_mul(a, b)
        brute = {}
        for ma, ca in a.terms.items():
            for mb, cb in b.terms.items():
                m = ma * mb
                if p.frame.contains(m):
                    brute[m] = brute.get(m, F(0)) + ca * cb
        brute = {m: c for m, c in brute.items() if c}
        assert p.terms == brute


# ---------------------------------------------------------------------------
# ring axioms on a common frame (exact tag)
# ---------------------------------------------------------------------------

def test_ring_axioms_random():
    rng = random.Random(3)
    fr = Frame.make(x1=(-2, 2, 1), x2=(-2, 2, 1))
    for _ in range(200):
        a = _random_series(rng, fr, 4)
        b = _random_series(rng, fr, 4)
        c = _random_series(rng, fr, 4)
        assert series_add(a, b) == series_add(b, a)
        assert series_mul(a, b) == series_mul(b, a)
        assert series_add(series_add(a, b), c) == series_add(a, series_add(b, c))
        assert series_mul(series_mul(a, b), c) == series_mul(a, series_mul(b, c))
        assert series_mul(a, series_add(b, c)) == \
            series_add(series_mul(a, b), series_mul(a, c))


# ---------------------------------------------------------------------------
# coeff_at
# ---------------------------------------------------------------------------

def test_coeff_at_kernel_leading_term():
    # n = 0 term of the x1^-1 d((x0-z1)/x1) expansion: coefficient of x1^-1 is 1
    fr = Frame.make(x1=(-2, 0))
    s = FormalSeries("parampoly", {mono({"x1": -1}): ParamPoly.const(1)}, fr)
    assert coeff_at(s, mono({"x1": -1})) == ParamPoly.const(1)


def test_coeff_at_outside_frame_is_error_not_zero():
    fr = Frame.make(z=(0, 2))
    s = rational([({"z": 1}, None, 5)], fr)
    assert coeff_at(s, mono({"z": 2})) == 0  # inside: known zero
    with pytest.raises(FrameError):
        coeff_at(s, mono({"z": 3}))  # outside: unknown


def test_coeff_at_binomial_tail():
    # iota_plus of (x0 - z1)^-1 = sum_k x0^(-1-k) z1^k: coeff of x0^-3 is z1^2
    fr = Frame.make(x0=(-4, -1))
    s = binomial_expand(AffineSymbol("x0"), AffineSymbol("z1", -1), F(-1),
                        "z1", fr, tag="parampoly")
    assert coeff_at(s, mono({"x0": -3})) == ParamPoly({(2, 0): 1})


# ---------------------------------------------------------------------------
# residue
# ---------------------------------------------------------------------------

def test_residue_picks_minus_one():
    fr = Frame.make(z=(-1, 2))
    s = rational([({"z": -1}, None, 3), ({"z": 2}, None, 1)], fr)
    r = residue(s, "z")
    assert r.terms == {Monomial.ONE: F(3)}
    assert "z" not in r.frame.windows


def test_residue_of_constant_is_zero():
    fr = Frame.make(z=(-1, 1))
    s = rational([({}, None, 1)], fr)
    assert residue(s, "z").is_zero()


def test_residue_requires_window_and_no_logs():
    s = rational([({"z": 1}, None, 1)], Frame.make(z=(0, 2)))
    with pytest.raises(FrameError):
        residue(s, "z")
    bad = FormalSeries("rational",
                       {mono({"z": -1}, {"z": 1}): F(1)},
                       Frame.make(z=(-1, 0, 1)))
    with pytest.raises(SeriesError):
        residue(bad, "z")


def test_residue_of_derivative_vanishes():
    rng = random.Random(11)
    fr = Frame.make(x1=(-3, 3, 2), x2=(-3, 3, 2))
    for _ in range(50):
        s = _random_series(rng, fr, 8)
        # drop terms where the residue of the derivative is not defined
        ok = {m: c for m, c in s.terms.items()
              if not (m.exp("x1") == 0 and m.logpow("x1") > 0)}
        s = FormalSeries("rational", ok, fr)
        d = formal_derivative(s, "x1")
        assert residue(d, "x1").is_zero()


# ---------------------------------------------------------------------------
# formal derivative
# ---------------------------------------------------------------------------

def test_derivative_sqrt():
    fr = Frame.make(z=(0, 1))
    s = rational([({"z": F(1, 2)}, None, 1)], fr)
    d = formal_derivative(s, "z")
    assert d.terms == {mono({"z": F(-1, 2)}): F(1, 2)}


def test_derivative_log():
    fr = Frame.make(z=(0, 0, 1))
    s = FormalSeries("rational", {mono({}, {"z": 1}): F(1)}, fr)
    d = formal_derivative(s, "z")
    assert d.terms == {mono({"z": -1}): F(1)}


def test_derivative_product_rule_example_and_fd_oracle():
    import cmath
    import math
    fr = Frame.make(z=(0, 3, 2))
    s = FormalSeries("rational", {mono({"z": 3}, {"z": 2}): F(1)}, fr)
    d = formal_derivative(s, "z")
    assert d.terms == {
        mono({"z": 2}, {"z": 2}): F(3),
        mono({"z": 2}, {"z": 1}): F(2),
    }
    # finite-difference oracle at z = 2.0
    def val(z: float) -> float:
        return z ** 3 * math.log(z) ** 2

    h = 1e-6
    fd = (val(2.0 + h) - val(2.0 - h)) / (2 * h)
    direct = sum(
        float(c) * 2.0 ** float(m.exp("z")) * math.log(2.0) ** m.logpow("z")
        for m, c in d.terms.items())
    assert abs(fd - direct) / abs(direct) < 1e-6


def test_derivative_is_a_derivation():
    rng = random.Random(5)
    fr = Frame.make(x1=(-2, 2, 1), x2=(-2, 2, 1))
    for _ in range(50):
        a = _random_series(rng, fr, 4)
        b = _random_series(rng, fr, 4)
        lhs = formal_derivative(series_mul(a, b), "x1")
        rhs = series_add(series_mul(formal_derivative(a, "x1"), b),
                         series_mul(a, formal_derivative(b, "x1")))
        assert lhs == rhs


# ---------------------------------------------------------------------------
# binomial expansion
# ---------------------------------------------------------------------------

def test_binomial_integer_power_exact():
    fr = Frame.make(x0=(0, 2))
    s = binomial_expand(AffineSymbol("x0"), AffineSymbol("z1", -1), 2, "z1",
                        fr, tag="parampoly")
    assert coeff_at(s, mono({"x0": 2})) == ParamPoly.const(1)
    assert coeff_at(s, mono({"x0": 1})) == ParamPoly({(1, 0): -2})
    assert coeff_at(s, Monomial.ONE) == ParamPoly({(2, 0): 1})


def test_binomial_geometric_series():
    fr = Frame.make(x0=(-4, -1))
    s = binomial_expand(AffineSymbol("x0"), AffineSymbol("z1", -1), -1, "z1",
                        fr, tag="parampoly")
    expected = {
        mono({"x0": -1}): ParamPoly.const(1),
        mono({"x0": -2}): ParamPoly({(1, 0): 1}),
        mono({"x0": -3}): ParamPoly({(2, 0): 1}),
        mono({"x0": -4}): ParamPoly({(3, 0): 1}),
    }
    assert s.terms == expected


def test_binomial_square_root_taylor_oracle():
    # (x2 + x0)^(1/2) to second order; float oracle sqrt(1.1) at x2=1, x0=0.1
    fr = Frame.make(x2=(F(-3, 2), F(1, 2)), x0=(0, 2))
    s = binomial_expand(AffineSymbol("x2"), AffineSymbol("x0"), F(1, 2), "x0", fr)
    assert coeff_at(s, mono({"x2": F(1, 2)})) == 1
    assert coeff_at(s, mono({"x2": F(-1, 2), "x0": 1})) == F(1, 2)
    assert coeff_at(s, mono({"x2": F(-3, 2), "x0": 2})) == F(-1, 8)
    val = sum(float(c) * 1.0 ** float(m.exp("x2")) * 0.1 ** float(m.exp("x0"))
              for m, c in s.terms.items())
    assert abs(val - 1.1 ** 0.5) < 1e-4  # truncation error dominates
    # with more orders the oracle pins it tightly
    fr9 = Frame.make(x2=(F(-17, 2), F(1, 2)), x0=(0, 9))
    s9 = binomial_expand(AffineSymbol("x2"), AffineSymbol("x0"), F(1, 2), "x0", fr9)
    val9 = sum(float(c) * 0.1 ** float(m.exp("x0")) for m, c in s9.terms.items())
    assert abs(val9 - 1.1 ** 0.5) < 1e-9


def test_binomial_integer_matches_repeated_mul():
    fr = Frame.make(x0=(0, 6), x1=(0, 6))
    base = rational([({"x0": 1}, None, 1), ({"x1": 1}, None, -2)], fr)
    for n in range(0, 5):
        direct = binomial_expand(AffineSymbol("x0"), AffineSymbol("x1", -2),
                                 n, "x1", fr)
        power = rational([({}, None, 1)], fr)
        for _ in range(n):
            power = series_mul(power, base)
        assert power.restrict(fr).terms == direct.terms


def test_binom_helper():
    assert binom(F(1, 2), 2) == F(-1, 8)
    assert binom(-1, 3) == -1
    assert binom(3, 5) == 0
    assert binom(F(-1, 2), 1) == F(-1, 2)
