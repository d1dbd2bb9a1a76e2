import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.special import binom

from blochlab.errors import CombinatorialBlowup
from blochlab.floquet import general_spectrum, label_by_potential
from blochlab.lattice import build_model, epsilon0
from blochlab.laurent import LaurentPoly
from blochlab.perturb import (
    RSExpansion,
    enumerate_loops,
    eta2_oracle,
    eta3_oracle,
    loop_expansion,
    observed_order,
    rs_coefficients_at,
    rs_eval,
    rs_expand,
    straight_loop_constant,
    truncation_errors,
    verify_low_order,
)

from strategies import models

Z = {(1,): 1, (-1,): 1, (0,): 2}


def _m1_series(r):
    """Taylor coefficients of (1 - sqrt(1 + 16 e^2)) / 2, the lower M1 band at z = 1."""
    if r % 2:
        return 0.0
    k = r // 2
    return -0.5 * binom(0.5, k) * 16**k if k else 0.0


def test_second_order_m1(M1):
    exp = rs_expand(M1, 2)
    assert exp.eta[0][2] == -LaurentPoly(1, Z)
    assert exp.eta[1][2] == LaurentPoly(1, Z)


def test_first_order_vanishes_for_every_fixture(M0, M1, M2, M3, M4):
    for m in (M0, M1, M2, M3, M4):
        exp = rs_expand(m, 1)
        assert all(exp.eta[n][1].is_zero() for n in range(m.P))
        assert all(exp.eta[n][0] == LaurentPoly.constant(m.d, m.values[n]) for n in range(m.P))


def test_m1_coefficients_at_one_match_closed_form(M1):
    exp = rs_expand(M1, 4)
    got = [complex(exp.full_eta(0, r).evaluate([1])).real for r in range(5)]
    assert got == [0, 0, -4, 0, 16]
    np.testing.assert_allclose(got, [_m1_series(r) for r in range(5)])
    num = rs_coefficients_at(M1, 8, [1.0])[0].real
    np.testing.assert_allclose(num, [_m1_series(r) for r in range(9)], atol=1e-9)


def test_rs_eval_examples(M1):
    exp = rs_expand(M1, 4)
    val = rs_eval(exp, 0.1, [1.0])[0].real
    exact = (1 - math.sqrt(1 + 16 * 0.01)) / 2
    assert exact == pytest.approx(-0.0385165, abs=1e-7)
    assert val == pytest.approx(-0.0384, abs=1e-12)
    assert val - exact == pytest.approx(128e-6, rel=0.1)
    np.testing.assert_array_equal(rs_eval(exp, 0.0, [np.exp(0.3j)]), [0, 1])


def test_halving_ratio_is_next_order(M1):
    exp = rs_expand(M1, 4)
    err = truncation_errors(exp, [0.02, 0.01], [1.0])
    assert err[0] / err[1] == pytest.approx(64, rel=0.2)


def test_oracle_examples(M1, M2):
    assert eta2_oracle(M1, 0) == -LaurentPoly(1, Z)
    other = build_model(1, (2,), (Fraction(3, 2), -2))
    assert all(eta3_oracle(m, n).is_zero() for m in (M1, other) for n in range(2))
    assert eta3_oracle(M2, 0).coefficient((1,)) == Fraction(1, 2)


def test_loop_enumeration_examples(M1, M2):
    loops = enumerate_loops(M1, 0, 2)
    assert all(l.vertices == (0, 1, 0) for l in loops)
    assert sorted(l.monomial for l in loops) == [(-1,), (0,), (0,), (1,)]
    total = sum((LaurentPoly.monomial(1, l.monomial) for l in loops), LaurentPoly.zero(1))
    assert total == LaurentPoly(1, Z)
    assert enumerate_loops(M1, 0, 3) == []
    winding = [l for l in enumerate_loops(M2, 0, 3) if any(l.monomial)]
    assert sorted((l.vertices, l.monomial) for l in winding) == [
        ((0, 1, 2, 0), (1,)),
        ((0, 2, 1, 0), (-1,)),
    ]
    assert all(l.irreducible and l.weight == Fraction(1, 2) for l in winding)


def test_loop_cap(M1):
    with pytest.raises(CombinatorialBlowup):
        enumerate_loops(M1, 0, 9)
    with pytest.raises(CombinatorialBlowup):
        rs_expand(M1, 7)


def test_straight_loop_examples(M0, M1, M2, M3):
    assert [straight_loop_constant(M2, n, 0) for n in range(3)] == [Fraction(1, 2), -1, Fraction(1, 2)]
    assert [straight_loop_constant(M1, n, 0) for n in range(2)] == [-1, 1]
    exp = rs_expand(M1, 2)
    assert [exp.eta[n][2].coefficient((1,)) for n in range(2)] == [-1, 1]
    assert straight_loop_constant(M0, 0, 0) == 1
    assert straight_loop_constant(M3, 1, 0) == 1


def test_verify_low_order_examples(M2, M4):
    exp = rs_expand(M2, 3)
    assert verify_low_order(exp).passed
    assert exp.eta[0][3].coefficient((1,)) == Fraction(1, 2)
    exp = rs_expand(M4, 3)
    assert verify_low_order(exp).passed
    for n in range(6):
        assert not exp.eta[n][2].depends_on(1)
        assert exp.eta[n][2].coefficient((1, 0)) != 0


def test_verify_low_order_reports_violation(M2):
    from blochlab.errors import InvariantViolation

    exp = rs_expand(M2, 3)
    bad = [list(row) for row in exp.eta]
    bad[1][2] = bad[1][2] + LaurentPoly.variable(1, 0)
    tampered = RSExpansion(exp.model, exp.order, bad, exp.u, exp.shift)
    assert not verify_low_order(tampered, strict=False).passed
    with pytest.raises(InvariantViolation):
        verify_low_order(tampered)


def test_expansion_json_round_trip(M4):
    exp = rs_expand(M4, 3)
    back = RSExpansion.from_dict(exp.to_dict())
    assert back.eta == exp.eta and back.u == exp.u


@settings(max_examples=15)
@given(models(max_cells=12, max_period=4))
def test_dual_oracle(model):
    exp = rs_expand(model, 3)
    for n in range(model.P):
        assert exp.eta[n][2] == eta2_oracle(model, n)
        assert exp.eta[n][3] == eta3_oracle(model, n)
        for r in range(4):
            assert exp.eta[n][r].is_real_on_torus()


@settings(max_examples=10)
@given(models(max_cells=6))
def test_loop_sum(model):
    exp = rs_expand(model, 4)
    for n in range(model.P):
        for r in range(2, 5):
            assert loop_expansion(model, n, r) == exp.eta[n][r]


@pytest.mark.parametrize("name", ["M1", "M2", "M3", "M4"])
def test_series_order_against_eigensolver(name, request):
    model = request.getfixturevalue(name)
    exp = rs_expand(model, 4)
    orders = observed_order(exp, epsilon0(model, 0.5) / 2, np.full(model.d, np.exp(0.2 + 0.4j)))
    assert orders.min() >= 5 - 0.2


def test_scalar_shift_single_band(M0):
    exp = rs_expand(M0, 3)
    z = [np.exp(0.2 + 1.0j)]
    exact = general_spectrum(M0, 0.3, z).eigenvalues[0]
    assert rs_eval(exp, 0.3, z)[0] == pytest.approx(exact, abs=1e-14)


def test_numeric_coefficients_match_symbolic(M4):
    exp = rs_expand(M4, 4)
    z = np.exp(np.array([0.1 + 0.3j, -0.2 + 1.1j]))
    num = rs_coefficients_at(M4, 4, z)
    for n in range(M4.P):
        for r in range(5):
            assert num[n, r] == pytest.approx(complex(exp.full_eta(n, r).evaluate(z)), abs=1e-10)
