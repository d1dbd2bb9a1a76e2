"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; a
summary section repeats them at the end of any run.
"""
import contextlib
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from blochlab.evolve import (
    amplitude_field,
    imag_part_scaling,
    lr_constant_stability,
    propagator_block,
    propagator_block_deformed,
    propagator_blocks,
    q_deviation_scaling,
    vlr_exponent_fit,
    wavepacket_spread,
)
from blochlab.lattice import epsilon0
from blochlab.perturb import (
    eta2_oracle,
    eta3_oracle,
    loop_expansion,
    observed_order,
    rs_expand,
    straight_loop_constant,
    verify_low_order,
)
from blochlab.velocity import predicted_leading_constant, sweep_and_fit, v_asy, v_asy_delta0
from conftest import ACCEPTANCE_LINES
from scipy.special import jv


@contextlib.contextmanager
def criterion(label, budget=None):
    """Yields a dict for named measurements; ``ok`` and the time budget decide PASS/FAIL."""
    info = {"ok": False}
    start = time.perf_counter()
    try:
        yield info
    except Exception as exc:
        info["ok"] = False
        info["error"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        info["seconds"] = round(time.perf_counter() - start, 1)
        ok = info.pop("ok")
        if budget is not None:
            info["budget"] = budget
            ok = ok and info["seconds"] <= budget
        detail = ", ".join(f"{k}={_short(v)}" for k, v in info.items())
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print("\n" + line)
    assert ok, line


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def test_ac1_velocity_exponent(M2):
    with criterion("AC1 v_asy exponent", budget=60) as r:
        res = sweep_and_fit(M2, np.geomspace(10, 1000, 8))
        r["slope"], r["r2"] = res.fit.slope, res.fit.r2
        r["ok"] = abs(res.fit.slope + 2) <= 0.05 and res.fit.r2 >= 0.9999


def test_ac2_leading_constants(M2):
    with criterion("AC2 leading constants") as r:
        C, c = predicted_leading_constant(M2)
        mu = 1000.0
        a, b = mu**2 * v_asy(M2, mu), mu**2 * v_asy_delta0(M2, mu)
        r.update(C_pred=C, measured=a, c_pred=c, measured_delta0=b)
        r["ok"] = C == 6 and abs(a / C - 1) <= 0.02 and abs(b / c - 1) <= 0.02


def test_ac3_anisotropic_suppression(M4):
    with criterion("AC3 per-direction exponents", budget=300) as r:
        res = sweep_and_fit(M4, [30, 60, 120, 250, 500, 1000])
        s1, s2 = res.fit_directions[0].slope, res.fit_directions[1].slope
        r.update(slope_1=s1, slope_2=s2)
        r["ok"] = abs(s1 + 1) <= 0.1 and abs(s2 + 2) <= 0.1


def test_ac4_symbolic_identities(M1, M2, M4):
    with criterion("AC4 exact low-order identities") as r:
        counts = {}
        for name, m in (("M1", M1), ("M2", M2), ("M4", M4)):
            exp = rs_expand(m, max(m.p))
            rep = verify_low_order(exp)  # strict: raises on any violation
            counts[name] = len(rep.checks)
            # straight-loop product, recomputed here from the potential
            for n, w in enumerate(m.cells):
                for j, pj in enumerate(m.p):
                    prod = Fraction(1)
                    for k in range(1, pj):
                        shifted = list(w)
                        shifted[j] += k
                        prod /= m.values[n] - m.V(tuple(shifted))
                    assert straight_loop_constant(m, n, j) == prod
        r["checks"] = counts
        r["ok"] = True


def test_ac5_dual_oracles(M1, M2):
    with criterion("AC5 dual oracles") as r:
        ok = True
        for m in (M1, M2):
            exp = rs_expand(m, 4)
            for n in range(m.P):
                ok &= exp.eta[n][2] == eta2_oracle(m, n)
                ok &= exp.eta[n][3] == eta3_oracle(m, n)
                ok &= all(loop_expansion(m, n, k) == exp.eta[n][k] for k in range(2, 5))
        r["ok"] = bool(ok)


def test_ac6_series_order(M1):
    with criterion("AC6 observed series order") as r:
        orders = observed_order(rs_expand(M1, 4), 0.05, [1.0])
        r["orders"] = [float(o) for o in orders]
        r["ok"] = bool(np.min(orders) >= 5.8)


def test_ac7_propagator(M0, M1):
    with criterion("AC7 propagator", budget=120) as r:
        bessel = max(abs(propagator_block(M0, 1.0, t, (n,))[0, 0] - (-1j) ** abs(n) * jv(abs(n), 2 * t))
                     for t in (1.0, 5.0) for n in range(-12, 13))
        q = amplitude_field(M1, 20.0, 10.0, window=12)
        b = amplitude_field(M1, 20.0, 10.0, window=12, method="box")
        agree = float(np.max(np.abs(q.values - b.values)))
        defect = propagator_blocks(M1, 20.0, 10.0).unitarity_defect()
        r.update(bessel=bessel, box_vs_quadrature=agree, unitarity=defect)
        r["ok"] = bessel <= 1e-10 and agree <= 1e-8 and defect <= 1e-10


def test_ac8_contour_and_annulus(M1, M2):
    with criterion("AC8 contour invariance and annulus scaling") as r:
        diff = max(float(np.max(np.abs(propagator_block(M1, 40.0, 5.0, (dx,))
                                       - propagator_block_deformed(M1, 40.0, 5.0, (dx,), 0.5))))
                   for dx in (-3, 3))
        slopes = {}
        for name, m in (("M1", M1), ("M2", M2)):
            eps = epsilon0(m, 0.5) * np.geomspace(1e-3, 1e-1, 6)
            slopes[name] = (imag_part_scaling(m, 0.5, eps).slope, q_deviation_scaling(m, eps).slope)
        r.update(contour=diff, im_slope_M1=slopes["M1"][0], im_slope_M2=slopes["M2"][0],
                 q_slope_M1=slopes["M1"][1], q_slope_M2=slopes["M2"][1])
        r["ok"] = diff <= 1e-8 and all(
            abs(im - m.p0) <= 0.1 and abs(qs - 1) <= 0.1
            for (im, qs), m in ((slopes["M1"], M1), (slopes["M2"], M2)))


def test_ac9_lieb_robinson(M1, M2):
    with criterion("AC9 Lieb-Robinson exponent", budget=600) as r:
        mus = [10, 20, 40, 80]
        e1 = vlr_exponent_fit(M1, mus).exponent
        e2 = vlr_exponent_fit(M2, mus).exponent
        _, ratio1 = lr_constant_stability(M1, [40, 80, 160], 0.5)
        _, ratio2 = lr_constant_stability(M2, [40, 80, 160], 0.5)
        r.update(exponent_M1=e1, exponent_M2=e2, C1_ratio_M1=ratio1, C1_ratio_M2=ratio2)
        r["ok"] = abs(e1 + 1) <= 0.15 and abs(e2 + 2) <= 0.2 and ratio1 <= 3 and ratio2 <= 3


def test_ac10_spreading(M0, M1):
    with criterion("AC10 wavepacket spreading") as r:
        s = wavepacket_spread(M1, 20.0, 200.0)
        ref = v_asy_delta0(M1, 20.0)
        free = wavepacket_spread(M0, 1.0, 100.0)
        r.update(spread_M1=s, v_asy_delta0=ref, spread_free=free)
        r["ok"] = abs(s / ref - 1) <= 0.05 and abs(free / math.sqrt(2) - 1) <= 0.01
