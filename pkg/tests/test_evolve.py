import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jv

from blochlab.errors import BoxTooSmall, DiscOverlap, InadmissibleCoupling
from blochlab.evolve import (
    BoxPropagator,
    BoxSpec,
    FrontTrace,
    amplitude,
    amplitude_field,
    box_evolve,
    default_lr_samples,
    imag_part_scaling,
    light_cone_scan,
    lr_bound_check,
    propagator_block,
    propagator_block_deformed,
    propagator_blocks,
    q_deviation_scaling,
    vlr_exponent_fit,
    wavepacket_spread,
)
from blochlab.lattice import epsilon0

from strategies import models


def bessel_amplitude(n, t):
    """Free lattice propagator ``<n| exp(-it(S + S*)) |0>``."""
    return (-1j) ** abs(n) * jv(abs(n), 2 * t)


def test_blocks_at_time_zero(M1, M4):
    for m in (M1, M4):
        np.testing.assert_allclose(propagator_block(m, 5.0, 0.0, (0,) * m.d), np.eye(m.P), atol=1e-14)
        np.testing.assert_allclose(propagator_block(m, 5.0, 0.0, (1,) + (0,) * (m.d - 1)), 0, atol=1e-14)


def test_free_block_is_bessel(M0):
    for n in range(-6, 7):
        assert propagator_block(M0, 1.0, 1.0, (n,))[0, 0] == pytest.approx(bessel_amplitude(n, 1.0), abs=1e-10)
    assert abs(propagator_block(M0, 1.0, 1.0, (0,))[0, 0]) == pytest.approx(0.223891, abs=1e-6)
    assert abs(amplitude(M0, 1.0, 1.0, (2,), (0,))) == pytest.approx(0.352834, abs=1e-6)


@pytest.mark.parametrize("name", ["M1", "M2", "M4"])
def test_unitarity(name, request):
    model = request.getfixturevalue(name)
    assert propagator_blocks(model, 7.0, 3.0).unitarity_defect() <= 1e-10
    fld = amplitude_field(model, 7.0, 3.0, window=24 if model.d == 1 else 14)
    assert fld.mass() == pytest.approx(1.0, abs=1e-10)


def test_amplitude_examples(M1, M2):
    assert amplitude(M2, 3.0, 0.0, (4,), (4,)) == pytest.approx(1.0)
    assert amplitude(M1, 3.0, 0.0, (5,), (4,)) == pytest.approx(0.0)


def test_box_free_bessel(M0):
    fld = box_evolve(M0, 1.0, 2.0, BoxSpec((60,), (20,)))
    for n, a in fld.items():
        assert a == pytest.approx(bessel_amplitude(n[0], 2.0), abs=1e-10)
    assert fld.certified_error <= 1e-10


def test_box_time_zero(M3):
    fld = box_evolve(M3, 4.0, 0.0, BoxSpec((12, 12), (3, 3)), source=(1, 2))
    vals = np.zeros((7, 7))
    vals[3, 3] = 1
    np.testing.assert_array_equal(fld.values, vals)


@pytest.mark.parametrize("source", [(0,), (1,)])
def test_box_matches_quadrature(M1, source):
    q = amplitude_field(M1, 20.0, 10.0, source, window=12, method="quadrature")
    b = amplitude_field(M1, 20.0, 10.0, source, window=12, method="box")
    assert np.max(np.abs(q.values - b.values)) <= 1e-8
    one = amplitude(M1, 20.0, 10.0, (source[0] + 3,), source)
    assert one == pytest.approx(q[(source[0] + 3,)], abs=1e-12)


def test_box_matches_quadrature_2d(M3):
    q = amplitude_field(M3, 2.0, 2.0, window=5)
    # smallest admissible margin; the certified variant needs a box past the dense limit
    b = box_evolve(M3, 2.0, 2.0, BoxSpec((21, 21), (5, 5)), certify=False)
    assert np.max(np.abs(q.values - b.values)) <= 1e-8


def test_box_too_small(M1):
    with pytest.raises(BoxTooSmall):
        box_evolve(M1, 1.0, 30.0, BoxSpec((30,), (10,)))


def test_time_composition(M1):
    # quadrature state at t1, pushed forward by t2 in an open box, against quadrature at t1 + t2
    t1, t2, mu = 4.0, 3.0, 5.0
    first = amplitude_field(M1, mu, t1, window=60)
    prop = BoxPropagator(M1, mu, 60)
    psi = prop.evolve(first.values.reshape(-1), t2)
    inner, _ = prop.window(psi, (0,), (20,))
    direct = amplitude_field(M1, mu, t1 + t2, window=20)
    assert np.max(np.abs(inner - direct.values)) <= 1e-9


@pytest.mark.parametrize("dx", [3, -3, 1])
def test_deformed_contour_agrees(M1, dx):
    a = propagator_block(M1, 40.0, 5.0, (dx,))
    b = propagator_block_deformed(M1, 40.0, 5.0, (dx,), 0.5)
    assert np.max(np.abs(a - b)) <= 1e-8


def test_deformed_contour_2d(M4):
    a = propagator_block(M4, 60.0, 2.0, (2, -1))
    b = propagator_block_deformed(M4, 60.0, 2.0, (2, -1), 0.3)
    assert np.max(np.abs(a - b)) <= 1e-8


def test_deformed_zero_offset_and_guard(M1):
    np.testing.assert_array_equal(propagator_block_deformed(M1, 3.0, 1.0, (0,), 0.5),
                                  propagator_block(M1, 3.0, 1.0, (0,)))
    with pytest.raises(DiscOverlap):
        propagator_block_deformed(M1, 3.0, 1.0, (2,), 0.5)


@settings(max_examples=10)
@given(models(max_cells=4), st.floats(0.5, 20), st.floats(0, 5))
def test_block_entry_norm_sandwich(model, mu, t):
    table = propagator_blocks(model, mu, t)
    for k in np.ndindex(*[min(3, n) for n in table.counts]):
        b = table.data[k]
        emax = np.abs(b).max()
        op = np.linalg.norm(b, 2)
        assert emax <= op * (1 + 1e-12) + 1e-15
        assert op <= model.P * emax * (1 + 1e-12) + 1e-15


def test_front_trace_running_max():
    tr = FrontTrace(1e-6, [0, 1, 2, 3], [0, 4, 2, 5])
    assert list(tr.radii) == [0, 4, 4, 5]


def test_free_front_speed(M0):
    scan = light_cone_scan(M0, 1.0, np.linspace(0, 100, 51), eta=1e-6)
    assert np.all(np.diff(scan.trace.radii) >= 0)
    assert scan.velocity == pytest.approx(2.0, rel=0.1)
    short = light_cone_scan(M0, 1.0, np.linspace(0, 20, 41), eta=1e-6)
    assert short.velocity > scan.velocity > 2.0


def test_box_and_quadrature_fronts_agree(M1):
    times = np.linspace(0, 6, 13)
    q = light_cone_scan(M1, 2.0, times, eta=1e-6)
    b = light_cone_scan(M1, 2.0, times, eta=1e-6, box=BoxSpec.for_time(1, 6, 40))
    np.testing.assert_array_equal(q.trace.radii, b.trace.radii)


def test_front_monotone_in_coupling_and_threshold(M1):
    fit = vlr_exponent_fit(M1, [10, 20, 40, 80])
    assert np.all(np.diff(fit.velocities) < 0)
    assert fit.exponent == pytest.approx(-1.0, abs=0.15)
    times = np.linspace(0, 300, 61)
    speeds = [light_cone_scan(M1, 20.0, times, eta=e).velocity for e in (1e-3, 1e-6, 1e-9)]
    assert speeds[0] <= speeds[1] <= speeds[2]


def test_free_exponent(M0):
    fit = vlr_exponent_fit(M0, [1, 2, 4, 8])
    assert fit.exponent == pytest.approx(0.0, abs=0.05)


def test_lr_time_zero(M1):
    samples = [((n,), (0,), 0.0) for n in range(-10, 11)]
    rep = lr_bound_check(M1, 40.0, 0.5, samples)
    assert rep.C >= 1.0
    assert rep.C1 == 0.0
    assert rep.max_log_violation <= 1e-12


def test_lr_bound_contains_extra_amplitude(M1):
    mu, rho0 = 50.0, 0.5
    rep = lr_bound_check(M1, mu, rho0)
    a = abs(amplitude(M1, mu, 1.0, (10,), (0,)))
    assert a <= rep.C * math.exp(-rho0 * (10 - rep.C1 * 1.0 / mu)) * (1 + 1e-9)
    assert rep.max_log_violation <= 1e-9


def test_lr_samples_and_guard(M1, M3):
    assert len(default_lr_samples(M3, 10.0, max_distance=2, ntimes=3)) == 3 * 9
    with pytest.raises(InadmissibleCoupling):
        lr_bound_check(M1, 1.0 / epsilon0(M1, 0.5) * 0.9, 0.5)


@pytest.mark.parametrize("name", ["M1", "M2"])
def test_imag_part_scaling(name, request):
    model = request.getfixturevalue(name)
    eps = epsilon0(model, 0.5) * np.geomspace(1e-3, 1e-1, 6)
    assert imag_part_scaling(model, 0.5, eps, nphase=16).slope == pytest.approx(model.p0, abs=0.1)


def test_q_deviation(M2):
    eps = epsilon0(M2, 0.5) * np.geomspace(1e-3, 1e-1, 6)
    assert q_deviation_scaling(M2, eps).slope == pytest.approx(1.0, abs=0.1)


def test_free_spreading(M0):
    assert wavepacket_spread(M0, 1.0, 100.0) == pytest.approx(math.sqrt(2), rel=1e-2)
    assert wavepacket_spread(M0, 1.0, 30.0, method="quadrature") == pytest.approx(math.sqrt(2), rel=1e-9)
    # short-time limit ||X H delta_0|| = sqrt(2)
    assert wavepacket_spread(M0, 1.0, 1e-3) == pytest.approx(math.sqrt(2), rel=1e-6)
