import cmath
from fractions import Fraction

import pytest

from fclab.branch import BranchedPoint
from fclab.heis.checks import (analytic_fd_check, branch_adjacency_check,
                               branch_invariance_check, check_sl2,
                               equivalence_check, i2p_check,
                               omega_roundtrip_check, p2i_check,
                               triple_reorder_check, vanishing_check)
from fclab.heis.correlator import DualVector, FreeBoson
from fclab.heis.jacobi import jacobi_formal, jacobi_numeric

F = Fraction


def small_tb(**kw):
    kw.setdefault("cutoff", 12)
    return FreeBoson((F(1), F(-1), F(2)), **kw)


# ---------------------------------------------------------------------------
# argument-swap rewrites
# ---------------------------------------------------------------------------

def test_i2p_positive_real_point():
    tb = small_tb()
    w1, w2, w3 = tb.hws()
    rep = i2p_check(tb, w1, w2, w3, tb.dual_hw(),
                    BranchedPoint(0.25 + 0j), BranchedPoint(1 + 0j))
    assert rep.passed, rep.details


def test_i2p_descendant_dual_upper_half_plane():
    tb = small_tb()
    w1, w2, w3 = tb.hws()
    dual = DualVector(tb.W4.hw().h(-1))
    rep = i2p_check(tb, w1, w2, w3, dual,
                    BranchedPoint(0.2 + 0.1j), BranchedPoint(1 + 0.5j))
    assert rep.passed, rep.details


def test_i2p_lower_half_plane_branch_case():
    # pi <= arg z2 < 2 pi exercises the other casework leg
    tb = small_tb()
    w1, w2, w3 = tb.hws()
    dual = DualVector(tb.W4.hw().h(-1))
    rep = i2p_check(tb, w1, w2, w3, dual,
                    BranchedPoint(0.2 - 0.1j), BranchedPoint(-1 - 0.4j))
    assert rep.passed, rep.details
    assert rep.details["rotation_case"] == "p'=0"


def test_p2i_both_branch_cases():
    tb = small_tb()
    w1, w2, w3 = tb.hws()
    dual = DualVector(tb.W4.hw().h(-2))
    for z1 in (2 + 0.5j, -2 + 0.5j):
        rep = p2i_check(tb, w1, w2, w3, dual,
                        BranchedPoint(z1), BranchedPoint(0.6 + 0.2j))
        assert rep.passed, (z1, rep.details)


def test_omega_roundtrip():
    tb = small_tb()
    m = tb.M2.hw().h(-1)
    dual = DualVector(tb.W4.hw().h(-1))
    rep = omega_roundtrip_check(tb, dual, tb.W3.hw(), m,
                                BranchedPoint(1.3 + 0.4j))
    assert rep.passed, rep.details


# ---------------------------------------------------------------------------
# equivalence of product and iterate
# ---------------------------------------------------------------------------

def test_equivalence_on_positive_reals():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=140)
    rep = equivalence_check(tb, 1.2 + 0j, 1.0 + 0j, tol=1e-8)
    assert rep.passed, rep.details
    assert rep.details["oracle_dev"] < 1e-8


def test_equivalence_jordan_component():
    tb = FreeBoson((F(1), F(-1), F(0)), nus=(1, 0, 0), korders=(2, 1, 1),
                   cutoff=80)
    rep = equivalence_check(tb, 2.0 + 0j, 1.2 + 0j, tol=1e-9,
                            extract=(1, 0, 0))
    assert rep.passed, rep.details


# ---------------------------------------------------------------------------
# sl(2) brackets
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("j", [-1, 0, 1])
def test_sl2_product(j):
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=26)
    w1, w2, w3 = tb.hws()
    rep = check_sl2(tb, "product", j, w1, w2, w3, tb.dual_hw(),
                    BranchedPoint(2 + 0j), BranchedPoint(0.5 + 0j),
                    tol=1e-8, fd_cross=(j == -1))
    assert rep.passed, rep.details


@pytest.mark.parametrize("j", [-1, 0, 1])
def test_sl2_iterate(j):
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=26)
    w1, w2, w3 = tb.hws()
    rep = check_sl2(tb, "iterate", j, w1, w2, w3, tb.dual_hw(),
                    BranchedPoint(0.25 + 0j), BranchedPoint(1 + 0j),
                    tol=1e-8, fd_cross=(j == -1))
    assert rep.passed, rep.details


def test_sl2_j1_vacuum_slots_trivial():
    tb = FreeBoson((F(0), F(0), F(0)), cutoff=8)
    w1, w2, w3 = tb.hws()
    rep = check_sl2(tb, "product", 1, w1, w2, w3, tb.dual_hw(),
                    BranchedPoint(2 + 0j), BranchedPoint(1 + 0j), tol=1e-10)
    assert rep.passed
    assert abs(complex(rep.details["lhs"]["re"], rep.details["lhs"]["im"])) < 1e-12


# ---------------------------------------------------------------------------
# composite Jacobi
# ---------------------------------------------------------------------------

def test_jacobi_formal_vacuum_is_trivial():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=5)
    w1, w2, w3 = tb.hws()
    rep = jacobi_formal(tb, tb.vacuum(), w1, w2, w3, tb.dual_hw(),
                        "product", frame_bound=2, level_max=5)
    assert rep.passed, rep.notes


def test_jacobi_formal_product_current():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=6)
    w1, w2, w3 = tb.hws()
    rep = jacobi_formal(tb, tb.current(), w1, w2, w3, tb.dual_hw(),
                        "product", frame_bound=3, level_max=6)
    assert rep.passed, rep.notes


def test_jacobi_formal_iterate_current():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=6)
    w1, w2, w3 = tb.hws()
    rep = jacobi_formal(tb, tb.current(), w1, w2, w3, tb.dual_hw(),
                        "iterate", frame_bound=3, level_max=6)
    assert rep.passed, rep.notes


def test_jacobi_formal_descendant_dual():
    tb = FreeBoson((F(1), F(-1), F(0)), cutoff=5)
    w1, w2, w3 = tb.hws()
    dual = DualVector(tb.W4.hw().h(-1))
    rep = jacobi_formal(tb, tb.current(), w1, w2, w3, dual,
                        "product", frame_bound=2, level_max=5)
    assert rep.passed, rep.notes


def test_jacobi_numeric_iterate():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=16)
    w1, w2, w3 = tb.hws()
    rep = jacobi_numeric(tb, tb.current(), w1, w2, w3, tb.dual_hw(),
                         0.25 + 0j, 1.0 + 0j, kind="iterate", tol=1e-8,
                         frame_bound=3)
    assert rep.passed, (rep.max_dev, rep.notes)


# ---------------------------------------------------------------------------
# vanishing propagation, analyticity, branch bookkeeping
# ---------------------------------------------------------------------------

def test_vanishing_trivial_difference():
    tb = small_tb()
    w1, w2, w3 = tb.hws()
    rep = vanishing_check(tb, [(w1, w2, w3)], tb.dual_hw(),
                          BranchedPoint(0.25 + 0j), BranchedPoint(1 + 0j))
    assert rep.passed, rep.details


def test_vanishing_negative_control():
    tb = small_tb()
    w1, w2, w3 = tb.hws()
    rep = vanishing_check(tb, [(w1, w2, w3)], tb.dual_hw(),
                          BranchedPoint(0.25 + 0.1j), BranchedPoint(1 + 0.3j),
                          negative_control=True)
    assert rep.passed  # the control is detected as violating the premise
    assert "unmet" in rep.details["note"]


def test_analytic_fd():
    tb = FreeBoson((F(1), F(-1), F(2)), cutoff=26)
    pts = [(2.0 + 0.5j, 0.5 + 0.2j), (2.0 + 1.0j, -0.6 + 0.2j)]
    rep = analytic_fd_check(tb, pts, tol=1e-6)
    assert rep.passed, rep.details


def test_branch_checks():
    rep = branch_adjacency_check(F(3, 7), 1.5 + 0.5j)
    assert rep.passed
    tb = small_tb()
    rep2 = branch_invariance_check(tb, 2 + 0.3j, 0.7 - 0.2j)
    assert rep2.passed


def test_triple_reorder_log_deformed():
    tb = FreeBoson((F(1), F(-1), F(0)), nus=(1, 0, 0), korders=(2, 1, 1),
                   cutoff=60)
    rep = triple_reorder_check(tb, 2.0 + 0j, 0.5 + 0.2j, extract=(1, 0, 0))
    assert rep.passed, rep.details
