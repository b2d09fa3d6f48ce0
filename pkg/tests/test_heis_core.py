import cmath
from fractions import Fraction

import pytest

from fclab.branch import BranchedPoint
from fclab.heis.correlator import (DualVector, FreeBoson, closed_form_correlator,
                                   iterate_correlator, iterate_value,
                                   product_correlator, product_value)
from fclab.heis.fock import FockModule, FockVector, gram
from fclab.heis.nil import Nil, NilContext, log_expansion
from fclab.heis.ops import HeisError, intw, mode_coeff, op_series
from fclab.series import Monomial

F = Fraction


# ---------------------------------------------------------------------------
# nil ring
# ---------------------------------------------------------------------------

def test_nil_truncation():
    ctx = NilContext(("e1",), (2,))
    e = Nil.gen(ctx, "e1")
    assert (e * e).is_zero()
    x = Nil.const(ctx, F(3)) + e
    sq = x * x
    assert sq.base() == 9
    assert sq.coeff((1,)) == 6


def test_log_expansion_terminates():
    ctx = NilContext(("e1", "e2", "e3"), (2, 2, 1))
    n = Nil.gen(ctx, "e1", F(2)) + Nil.gen(ctx, "e2", F(1, 2))
    terms = dict(log_expansion(n))
    assert terms[0].base() == 1
    assert terms[1].coeff((1, 0, 0)) == 2
    assert terms[2].coeff((1, 1, 0)) == 1  # 2 * (1/2) * (e1 e2) from n^2/2!


# ---------------------------------------------------------------------------
# oscillator algebra
# ---------------------------------------------------------------------------

def _module(lam, K=1, nu=0, cutoff=8):
    ctx = NilContext(("e1",), (K,))
    ch = Nil.const(ctx, F(lam))
    if nu:
        ch = ch + Nil.gen(ctx, "e1", F(nu))
    return FockModule(ctx, ch, cutoff)


def test_commutator_on_vectors():
    mod = _module(F(2, 3))
    v = mod.hw().h(-3).h(-1)
    for m in (1, 3):
        lhs = v.h(-m).h(m) - v.h(m).h(-m)
        # [h(m), h(-m)] = m
        assert lhs.comps == v.scaled(m).comps


def test_gram_factors():
    assert gram(()) == 1
    assert gram((3,)) == 3
    assert gram((1, 1)) == 2
    assert gram((2, 2, 1)) == 8


def test_pairing_adjoint():
    mod = _module(F(1, 2), cutoff=6)
    a = mod.hw().h(-2).h(-1)
    b = mod.hw().h(-3)
    for m in (1, 2, 3):
        # <h(-m) a, b> = <a, h(m) b>
        lhs = a.h(-m).pair(b)
        rhs = a.pair(b.h(m))
        assert lhs == rhs


def test_virasoro_lowest_weight_and_bracket():
    mod = _module(F(3, 2))
    hw = mod.hw()
    assert hw.L(-1).comps == hw.h(-1).scaled(F(3, 2)).comps
    assert hw.L(1).is_zero()
    l0 = hw.L(0)
    assert l0.comps[()].base() == F(9, 8)
    # [L(1), L(-1)] = 2 L(0) on a descendant
    v = hw.h(-1)
    lhs = v.L(-1).L(1) - v.L(1).L(-1)
    assert lhs.comps == v.L(0).scaled(2).comps


# ---------------------------------------------------------------------------
# intertwining operator normalization and structure
# ---------------------------------------------------------------------------

def test_mode_coeff_hw_normalization():
    # charge-1 insertion on charge-1 vector: leading exponent c1 c2 = 1 with
    # unit coefficient on the shifted highest-weight vector
    ctx = NilContext(("e1",), (1,))
    one = Nil.const(ctx, F(1))
    Wa = FockModule(ctx, one, 6)
    Wb = FockModule(ctx, one, 6)
    op = intw(Wa, Wb)
    lead = mode_coeff(op, Wa.hw(), Wb.hw(), F(1), 0)
    assert lead.comps == op.target.hw().comps

    series = op_series(op, Wa.hw(), Wb.hw(), level_max=3)
    # first descendant: coefficient of x^{2} is c1 h(-1)|charge 2>
    nxt = series[(F(2), 0)]
    assert nxt.comps == op.target.hw().h(-1).comps


def test_mode_coeff_log_structure_jordan():
    # K = 2 source with nil slope 1: x^{c1 c2} = x^{lam1 lam2} (1 + nu e1 lam2 log x + ..)
    ctx = NilContext(("e1",), (2,))
    c1 = Nil.const(ctx, F(1)) + Nil.gen(ctx, "e1")
    c2 = Nil.const(ctx, F(2))
    Wa = FockModule(ctx, c1, 6)
    Wb = FockModule(ctx, c2, 6)
    op = intw(Wa, Wb)
    series = op_series(op, Wa.hw(), Wb.hw(), level_max=0)
    lead_log = series[(F(2), 1)]
    # coefficient of (log x)^1 at the leading exponent: lam2 * e1 * hw
    assert lead_log.comps[()].coeff((1,)) == 2
    assert (F(2), 2) not in series  # nilpotency kills (log x)^2 at K = 2


def test_mode_coeff_structural_zero_and_cutoff_error():
    ctx = NilContext(("e1",), (1,))
    Wa = FockModule(ctx, Nil.const(ctx, F(1, 2)), 4)
    Wb = FockModule(ctx, Nil.const(ctx, F(1, 3)), 4)
    op = intw(Wa, Wb)
    off_lattice = mode_coeff(op, Wa.hw(), Wb.hw(), F(1, 5), 0)
    assert off_lattice.is_zero()
    with pytest.raises(HeisError):
        mode_coeff(op, Wa.hw(), Wb.hw(), F(1, 6) - 40, 0)


def test_module_op_vacuum_is_identity_and_current():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=5)
    op = tb.module_op(tb.W1)
    w = tb.W1.hw().h(-2)
    series = op_series(op, tb.vacuum(), w)
    assert list(series) == [(F(0), 0)]
    assert series[(F(0), 0)].comps == w.comps
    # Y(h(-1)vac, x) = sum h(m) x^{-m-1}
    cur = op_series(op, tb.current(), tb.W1.hw(), level_max=3)
    assert cur[(F(-1), 0)].comps == tb.W1.hw().scaled(1).h(0).comps
    assert cur[(F(0), 0)].comps == tb.W1.hw().h(-1).comps
    assert cur[(F(2), 0)].comps == tb.W1.hw().h(-3).comps


def test_translation_property_derivative():
    # Y(L(-1) w1, x) = d/dx Y(w1, x), checked exactly mode by mode
    tb = FreeBoson((F(2, 3), F(1, 2), F(0)), cutoff=6)
    for w1 in (tb.W1.hw(), tb.W1.hw().h(-1), tb.W1.hw().h(-2)):
        lhs = op_series(tb.Yi2, w1.L(-1), tb.W2.hw(), level_max=5)
        rhs = op_series(tb.Yi2, w1, tb.W2.hw(), level_max=5)
        for (e, j), vec in rhs.items():
            dv = vec.scaled(e)
            got = lhs.get((e - 1, j))
            if j + 1 in {k for (_, k) in rhs}:
                pass
            want = dv
            logpart = rhs.get((e, j + 1))
            if logpart is not None:
                want = want + logpart.scaled(j + 1)
            if want.is_zero():
                assert got is None or got.is_zero()
            else:
                assert got is not None and got.comps == want.comps


# ---------------------------------------------------------------------------
# correlators: exact series
# ---------------------------------------------------------------------------

def test_product_series_geometric_charges():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=6)
    w1, w2, w3 = tb.hws()
    s = product_correlator(tb, w1, w2, w3, tb.dual_hw(), allow_fast=False)
    for k in range(0, 7):
        m = Monomial.make({"x1": -1 - k, "x2": k})
        assert s.terms.get(m) == 1, (k, s.terms)
    assert len(s.terms) == 7


def test_product_series_polynomial_case():
    tb = FreeBoson((F(1), F(1), F(0)), cutoff=6)
    w1, w2, w3 = tb.hws()
    s = product_correlator(tb, w1, w2, w3, tb.dual_hw(), allow_fast=False)
    assert s.terms == {
        Monomial.make({"x1": 1}): F(1),
        Monomial.make({"x2": 1}): F(-1),
    }


def test_charge_violation_gives_zero_series():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=4)
    w1, w2, w3 = tb.hws()
    wrong_dual = DualVector(FockModule(tb.ctx, Nil.const(tb.ctx, F(0)), 4).hw())
    s = product_correlator(tb, w1, w2, w3, wrong_dual, allow_fast=False)
    assert s.is_zero()


def test_iterate_series_exact():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=6)
    w1, w2, w3 = tb.hws()
    s = iterate_correlator(tb, w1, w2, w3, tb.dual_hw(), allow_fast=False)
    assert s.terms == {Monomial.make({"x0": -1}): F(1)}


def test_fast_tables_match_generic():
    cases = [
        dict(lams=(F(1), F(-1), F(2))),
        dict(lams=(F(1, 2), F(3, 2), F(-1))),
        dict(lams=(F(1), F(-1), F(0)), nus=(1, 0, 0), korders=(2, 1, 1)),
        dict(lams=(F(2, 3), F(-1, 3), F(1)), nus=(1, 1, 0), korders=(2, 3, 1)),
    ]
    for kw in cases:
        tb = FreeBoson(cutoff=5, **kw)
        w1, w2, w3 = tb.hws()
        duals = [tb.dual_hw()]
        if max(tb.korders) > 1:
            duals.append(tb.dual_hw(extract=tuple(
                1 if k > 1 else 0 for k in tb.korders)))
        for dual in duals:
            fast_p = product_correlator(tb, w1, w2, w3, dual, allow_fast=True)
            slow_p = product_correlator(tb, w1, w2, w3, dual, allow_fast=False)
            assert fast_p.terms == slow_p.terms, kw
            fast_i = iterate_correlator(tb, w1, w2, w3, dual, allow_fast=True)
            slow_i = iterate_correlator(tb, w1, w2, w3, dual, allow_fast=False)
            assert fast_i.terms == slow_i.terms, kw


# ---------------------------------------------------------------------------
# correlators: numeric values vs the closed form
# ---------------------------------------------------------------------------

def test_product_value_simple_pole():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=40)
    w1, w2, w3 = tb.hws()
    rep = product_value(tb, w1, w2, w3, tb.dual_hw(),
                        BranchedPoint(2 + 0j), BranchedPoint(1 + 0j), tol=1e-10)
    assert rep.converged()
    assert abs(rep.value - 1.0) < 1e-10  # (z1 - z2)^{-1} = 1


def test_iterate_value_example():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=10)
    w1, w2, w3 = tb.hws()
    rep = iterate_value(tb, w1, w2, w3, tb.dual_hw(),
                        BranchedPoint(0.5 + 0j), BranchedPoint(1 + 0j), tol=1e-10)
    assert rep.converged()
    assert abs(rep.value - 2.0) < 1e-10  # z0^{-1}


def test_iterate_value_charge_2_closed_form():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=30)
    w1, w2, w3 = tb.hws()
    z2, z0 = BranchedPoint(1 + 0j), BranchedPoint(0.25 + 0j)
    rep = iterate_value(tb, w1, w2, w3, tb.dual_hw(), z0, z2, tol=1e-10)
    oracle = closed_form_correlator(tb, "iterate").value(z0, z2)
    expected = (1.25) ** 2 * 1.0 ** (-2) * 4.0
    assert abs(rep.value - expected) < 1e-9
    assert abs(oracle.base() - expected) < 1e-12


def test_closed_form_examples():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=4)
    cf = closed_form_correlator(tb, "product")
    v = cf.value(BranchedPoint(2 + 0j), BranchedPoint(1 + 0j))
    assert abs(v.base() - 1.0) < 1e-12
    tb0 = FreeBoson((F(0), F(0), F(0)), cutoff=4)
    cf0 = closed_form_correlator(tb0, "product")
    assert abs(cf0.value(BranchedPoint(1j), BranchedPoint(0.3 + 0j)).base() - 1.0) < 1e-12


def test_closed_form_dual_number_log_deformation():
    # charges (1 + e, -1, 0) at K = 2: (z1 - z2)^(-1 - e) expands to
    # (z1-z2)^{-1} (1 - e log(z1 - z2))
    tb = FreeBoson((F(1), F(-1), F(0)), nus=(1, 0, 0), korders=(2, 1, 1))
    cf = closed_form_correlator(tb, "product")
    z1, z2 = BranchedPoint(3 + 0j), BranchedPoint(1 + 0j)
    val = cf.value(z1, z2)
    base = val.coeff((0, 0, 0))
    eps = val.coeff((1, 0, 0))
    assert abs(base - 0.5) < 1e-12
    assert abs(eps - (-0.5 * cmath.log(2.0))) < 1e-12


def test_closed_form_rejects_descendants():
    tb = FreeBoson((F(1), F(-1), F(0)))
    with pytest.raises(HeisError):
        closed_form_correlator(tb, "product", w1=tb.W1.hw().h(-1))


def test_log_deformed_product_value_vs_oracle():
    tb = FreeBoson((F(1), F(-1), F(0)), nus=(1, 0, 0), korders=(2, 1, 1), cutoff=40)
    w1, w2, w3 = tb.hws()
    z1, z2 = BranchedPoint(2 + 0j), BranchedPoint(0.5 + 0j)
    for extract in ((0, 0, 0), (1, 0, 0)):
        dual = tb.dual_hw(extract=extract)
        rep = product_value(tb, w1, w2, w3, dual, z1, z2, tol=1e-10)
        oracle = closed_form_correlator(tb, "product").value(z1, z2)
        assert rep.converged()
        assert abs(rep.value - oracle.coeff(extract)) < 1e-9, extract
