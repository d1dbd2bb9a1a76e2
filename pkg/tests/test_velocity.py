import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from blochlab.errors import InsufficientPoints, PoorFit
from blochlab.lattice import build_model
from blochlab.velocity import (
    ThetaGrid,
    _fiber_data,
    fiber_group_velocity,
    gi_norm,
    predicted_leading_constant,
    sweep_and_fit,
    v_asy,
    v_asy_delta0,
    velocity_report,
)

from strategies import models


def _m1_closed_form(mu):
    # lower M1 band: (mu - sqrt(mu^2 + 8 + 8 cos t)) / 2, and the upper one mirrors it
    f = lambda t: -2 * abs(math.sin(t)) / math.sqrt((mu**2 + 8 + 8 * math.cos(t)) / 4)
    res = minimize_scalar(f, bounds=(0, math.pi), method="bounded", options={"xatol": 1e-12})
    return -res.fun


def test_grid_weights():
    g = ThetaGrid((8, 5))
    assert g.nodes().shape == (40, 2)
    assert g.weights().sum() == pytest.approx(1.0, abs=1e-15)
    assert g.refined().counts == (16, 10)


def test_free_band_velocity(M0):
    assert fiber_group_velocity(M0, 3.0, [math.pi / 2])[0, 0] == pytest.approx(-2.0, abs=1e-14)
    th = 0.37
    assert fiber_group_velocity(M0, 3.0, [th])[0, 0] == pytest.approx(-2 * math.sin(th), abs=1e-14)


def test_free_norms(M0):
    for mu in (1.0, 50.0):
        assert gi_norm(M0, mu)[0] == pytest.approx(2.0, rel=1e-9)
        assert v_asy(M0, mu) == pytest.approx(2.0, rel=1e-9)
        assert v_asy_delta0(M0, mu) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_period_two_closed_form(M1):
    oracle = _m1_closed_form(10.0)
    assert oracle == pytest.approx(0.38517, abs=1e-5)
    assert gi_norm(M1, 10.0)[0] == pytest.approx(oracle, rel=1e-7)
    assert v_asy(M1, 10.0) == pytest.approx(oracle, rel=1e-7)
    # stationarity condition of the closed form: cos t solves c^2 + 27 c + 1 = 0
    c = (-27 + math.sqrt(27**2 - 4)) / 2
    t = math.acos(c)
    assert 2 * math.sin(t) / math.sqrt(27 + 2 * c) == pytest.approx(oracle, rel=1e-9)


def test_separable_channel(M3):
    for mu in (3.0, 100.0):
        assert gi_norm(M3, mu)[0] == pytest.approx(2.0, rel=1e-9)
    assert v_asy(M3, 100.0) == pytest.approx(2.0, abs=1e-3)


def test_predicted_constants(M0, M1, M2):
    assert predicted_leading_constant(M2) == pytest.approx((6.0, 3 * math.sqrt(0.5)))
    assert predicted_leading_constant(M1)[0] == pytest.approx(4.0)
    assert predicted_leading_constant(M0)[0] == pytest.approx(2.0)


def test_large_coupling_constants(M2):
    mu = 1000.0
    assert mu**2 * v_asy(M2, mu) == pytest.approx(6.0, rel=0.02)
    assert mu**2 * v_asy_delta0(M2, mu) == pytest.approx(2.1213, rel=0.02)


@pytest.mark.parametrize("name", ["M1", "M2", "M3", "M4"])
@pytest.mark.parametrize("mu", [3.0, 30.0])
def test_bracketing(name, mu, request):
    model = request.getfixturevalue(name)
    rep = velocity_report(model, mu)
    gi = rep.gi_norms
    assert gi.max() <= rep.v_asy * (1 + 1e-9)
    assert rep.v_asy <= math.sqrt(np.sum(gi**2)) * (1 + 1e-9)
    assert rep.v_asy_delta0 <= rep.v_asy * (1 + 1e-6)


@pytest.mark.parametrize("name", ["M1", "M4"])
def test_grid_convergence(name, request):
    model = request.getfixturevalue(name)
    g = ThetaGrid.uniform(model.d, 32)
    a = v_asy(model, 12.0, g)
    b = v_asy(model, 12.0, g.refined())
    assert abs(a - b) <= 1e-6 * b


@given(models(), st.floats(0.5, 40), st.lists(st.floats(0, 2 * math.pi), min_size=2, max_size=2))
def test_hellmann_feynman_matches_finite_differences(model, mu, th):
    theta = np.array(th[: model.d])
    lam = _fiber_data(model, 1.0, mu, theta)[0][0]
    assume(model.P == 1 or np.min(np.diff(lam)) > 1e-3)
    hf = fiber_group_velocity(model, mu, theta, check_gap=False)
    h = 1e-5
    for i in range(model.d):
        e = np.zeros(model.d)
        e[i] = h
        up = _fiber_data(model, 1.0, mu, theta + e)[0][0]
        dn = _fiber_data(model, 1.0, mu, theta - e)[0][0]
        fd = model.p[i] * (up - dn) / (2 * h)
        scale = max(1.0, np.max(np.abs(fd)))
        np.testing.assert_allclose(hf[:, i], fd, atol=1e-6 * scale)


@given(models(), st.floats(1, 200), st.lists(st.floats(0, 2 * math.pi), min_size=2, max_size=2))
def test_rescaling_identity(model, mu, th):
    theta = np.array(th[: model.d])
    lam, _, dl = _fiber_data(model, 1.0, mu, theta)
    lam_s, _, dl_s = _fiber_data(model, 1.0 / mu, 1.0, theta)
    np.testing.assert_allclose(lam, mu * lam_s, rtol=1e-10, atol=1e-12 * mu)
    np.testing.assert_allclose(dl, mu * dl_s, rtol=1e-10, atol=1e-12)


def test_odd_symmetry(M1):
    for t in (0.3, 1.1, 2.5):
        plus = fiber_group_velocity(M1, 7.0, [t])
        minus = fiber_group_velocity(M1, 7.0, [-t])
        np.testing.assert_allclose(plus, -minus, atol=1e-14)


def test_sweep_slope_period_three(M2):
    res = sweep_and_fit(M2, np.geomspace(10, 1000, 8))
    assert res.fit.slope == pytest.approx(-2.0, abs=0.05)
    assert res.predicted_slope == -2.0
    assert res.summary()["predicted_constant"] == pytest.approx(6.0)


def test_sweep_free_is_flat(M0):
    res = sweep_and_fit(M0, np.geomspace(1, 100, 5))
    assert res.fit.slope == pytest.approx(0.0, abs=1e-8)


def test_sweep_direction_slopes(M4):
    res = sweep_and_fit(M4, [30, 60, 120, 250, 500, 1000])
    assert res.fit_directions[0].slope == pytest.approx(-1.0, abs=0.1)
    assert res.fit_directions[1].slope == pytest.approx(-2.0, abs=0.1)


def test_sweep_rejects_short_grids(M1):
    with pytest.raises(InsufficientPoints):
        sweep_and_fit(M1, [10, 20, 40])
    with pytest.raises(InsufficientPoints):
        sweep_and_fit(M1, [10, 12, 14, 16, 18])


def test_sweep_flags_inadmissible_couplings(M1):
    with pytest.warns(PoorFit):
        res = sweep_and_fit(M1, np.geomspace(1, 100, 5), rho0=0.5)
    assert any("admissibility" in f for f in res.flags)
