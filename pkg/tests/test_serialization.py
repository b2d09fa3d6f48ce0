import random
from fractions import Fraction

from fclab.serialization import (series_from_text, series_to_dict,
                                 series_to_text)
from fclab.series import FormalSeries, Frame, Monomial, ParamPoly

F = Fraction


def test_rational_round_trip_bit_exact():
    rng = random.Random(13)
    fr = Frame.make(x1=(-3, 3, 2), z=(F(-7, 2), F(7, 2), 1))
    for _ in range(20):
        terms = {}
        for _ in range(15):
            m = Monomial.make(
                {"x1": rng.randint(-3, 3), "z": F(rng.randint(-7, 7), 2)},
                {"x1": rng.randint(0, 2), "z": rng.randint(0, 1)})
            terms[m] = F(rng.randint(-10 ** 9, 10 ** 9), rng.randint(1, 10 ** 6))
        s = FormalSeries("rational", terms, fr)
        text = series_to_text(s)
        back = series_from_text(text)
        assert back == s
        assert series_to_text(back) == text  # byte-identical re-serialization


def test_parampoly_round_trip():
    fr = Frame.make(x0=(-2, 2))
    s = FormalSeries("parampoly", {
        Monomial.make({"x0": -1}): ParamPoly({(2, -1): F(3, 7), (0, 0): -1}),
    }, fr)
    assert series_from_text(series_to_text(s)) == s


def test_complex_round_trip():
    fr = Frame.make(z=(0, 4))
    s = FormalSeries("complex", {
        Monomial.make({"z": k}): complex(0.1 * k, -1.0 / (k + 1))
        for k in range(5)
    }, fr)
    back = series_from_text(series_to_text(s))
    assert back.terms == s.terms and back.frame == s.frame


def test_canonical_term_order():
    fr = Frame.make(x1=(-2, 2), x2=(-2, 2))
    a = FormalSeries("rational", {
        Monomial.make({"x1": 1}): F(1),
        Monomial.make({"x2": -1}): F(2),
        Monomial.make({"x1": -2, "x2": 2}): F(3),
    }, fr)
    d = series_to_dict(a)
    keys = [tuple(sorted(t["exps"].items())) for t in d["terms"]]
    assert keys == sorted(keys)
