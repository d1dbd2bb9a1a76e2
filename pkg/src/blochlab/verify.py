"""Invariant suite over the built-in fixture models.

Each check returns a :class:`CheckResult`; :func:`run_suite` collects them.
The checks are sized to finish in well under a minute in total.
"""
from __future__ import annotations

import math
import random
import traceback
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .evolve import (
    BoxPropagator,
    BoxSpec,
    amplitude_field,
    box_evolve,
    propagator_block,
    propagator_block_deformed,
    propagator_blocks,
)
from .fitting import loglog_fit
from .floquet import (
    _hop_entries,
    assemble,
    decompose,
    diagonalizer,
    finite_volume_consistency,
    floquet_laplacian,
    general_spectrum,
    label_by_potential,
)
from .lattice import build_model, epsilon0, separation, split_coordinate
from .laurent import LaurentMatrix, LaurentPoly
from .perturb import (
    eta2_oracle,
    eta3_oracle,
    loop_expansion,
    observed_order,
    rs_expand,
    verify_low_order,
)
from .velocity import ThetaGrid, _fiber_data, fiber_group_velocity, gi_norm, v_asy

FIXTURES = {
    "M0": ((1, (1,), (0,))),
    "M1": ((1, (2,), (0, 1))),
    "M2": ((1, (3,), (0, 1, 2))),
    "M3": ((2, (1, 2), (0, 1))),
    "M4": ((2, (2, 3), (0, 1, 2, 3, 4, 5))),
}


def fixture(name):
    return build_model(*FIXTURES[name])


@dataclass
class CheckResult:
    name: str
    fixture: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.fixture:<3} {self.name}: {self.detail}"


def _rand_poly(rng, d, nterms=3, span=2):
    terms = {}
    for _ in range(nterms):
        k = tuple(rng.randint(-span, span) for _ in range(d))
        terms[k] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return LaurentPoly(d, terms)


# ------------------------------------------------------------------ lattice


def check_split_roundtrip(model, rng):
    for _ in range(50):
        n = tuple(rng.randint(-40, 40) for _ in range(model.d))
        c = split_coordinate(model, n)
        if c.site(model.p) != n or any(not 0 <= w < p for w, p in zip(c.w, model.p)):
            return False, f"split of {n} gave {c}"
    return True, "50 random sites"


def check_separation_scaling(model, rng):
    if model.P == 1:
        return True, "single-site cell"
    mu = Fraction(rng.randint(1, 9), rng.randint(1, 9))
    scaled = build_model(model.d, model.p, [mu * v for v in model.values])
    ok = separation(scaled) == mu * separation(model)
    return ok, f"mu={mu}"


def check_epsilon0_monotone(model, rng):
    if model.P == 1:
        return True, "epsilon0 infinite for a single-site cell"
    a = [epsilon0(model, r) for r in (0.1, 0.5, 1.0)]
    bigger = build_model(model.d, model.p, [2 * v for v in model.values])
    ok = a[0] > a[1] > a[2] and epsilon0(bigger, 0.5) > a[1]
    if model.d == 1:
        lifted = build_model(2, model.p + (1,), model.values)
        ok = ok and epsilon0(lifted, 0.5) < a[1]
    return ok, f"{a}"


# ------------------------------------------------------------------ laurent


def check_ring_axioms(model, rng):
    d = model.d
    for _ in range(10):
        a, b, c = (_rand_poly(rng, d) for _ in range(3))
        if (a * b) * c != a * (b * c) or a * (b + c) != a * b + a * c or a * b != b * a:
            return False, f"axioms fail for {a}, {b}, {c}"
    return True, "10 random triples"


def check_eval_multiplicative(model, rng):
    d = model.d
    for _ in range(10):
        a, b = _rand_poly(rng, d), _rand_poly(rng, d)
        zq = [Fraction(rng.randint(1, 7), rng.randint(1, 7)) for _ in range(d)]
        if (a * b).evaluate(zq) != a.evaluate(zq) * b.evaluate(zq):
            return False, "exact evaluation not multiplicative"
        zf = np.exp(np.array([rng.uniform(-0.5, 0.5) + 1j * rng.uniform(0, 6) for _ in range(d)]))
        lhs, rhs = complex((a * b).evaluate(zf)), complex(a.evaluate(zf)) * complex(b.evaluate(zf))
        if abs(lhs - rhs) > 1e-12 * max(1.0, abs(rhs)):
            return False, f"float evaluation off by {abs(lhs - rhs):.2e}"
    return True, "exact and 1e-12 float"


def check_torus_reality(model, rng):
    d = model.d
    for _ in range(10):
        a = _rand_poly(rng, d)
        sym = a + a.conjugate_reflection()
        th = np.array([rng.uniform(0, 2 * np.pi) for _ in range(d)])
        if not sym.is_real_on_torus() or abs(complex(sym.evaluate_torus(th)).imag) > 1e-12:
            return False, "symmetrized poly not real"
        if a != a.conjugate_reflection() and a.is_real_on_torus():
            return False, "checker accepts an asymmetric poly"
    return True, "symmetrized polys real, asymmetric ones rejected"


def check_theta_derivative(model, rng):
    h = 1e-5
    for _ in range(10):
        a = _rand_poly(rng, model.d)
        for i in range(model.d):
            th = np.array([rng.uniform(0, 2 * np.pi) for _ in range(model.d)])
            e = np.zeros(model.d)
            e[i] = h
            fd = (complex(a.evaluate_torus(th + e)) - complex(a.evaluate_torus(th - e))) / (2 * h)
            ex = complex(a.theta_derivative(i).evaluate_torus(th))
            if abs(fd - ex) > 1e-6 * max(1.0, abs(ex)):
                return False, f"derivative mismatch {abs(fd - ex):.2e}"
    return True, "central differences at step 1e-5"


# ------------------------------------------------------------------ floquet


def check_finite_volume(model, rng):
    n = 5 if model.d == 1 else 3
    err = finite_volume_consistency(model, 0.3, n)
    return err <= 1e-9, f"max gap {err:.2e}"


def check_mutation_detected(model, rng):
    n = 5 if model.d == 1 else 3
    bad = _hop_entries(model, wrap=lambda mono, j, power: mono.scale(-1))
    err = finite_volume_consistency(model, 0.3, n, laplacian=bad)
    return err > 1e-6, f"corrupted wraparound gives gap {err:.2e}"


def check_hermitian(model, rng):
    for _ in range(10):
        th = np.array([rng.uniform(0, 2 * np.pi) for _ in range(model.d)])
        a = assemble(model, rng.uniform(-1, 1), np.exp(1j * th))
        if not a.is_hermitian(1e-14):
            return False, f"non-Hermitian at theta={th}"
    return True, "10 torus points"


def check_decompose(model, rng):
    dec = decompose(model)
    eps = Fraction(rng.randint(1, 9), 17)
    size = model.P
    lhs = (LaurentMatrix.scalar(size, dec.s) + dec.B).scale(eps)
    diagV = LaurentMatrix([[LaurentPoly.constant(model.d, model.values[i] if i == j else 0)
                            for j in range(size)] for i in range(size)])
    rhs = floquet_laplacian(model).scale(eps) + diagV
    return lhs + diagV == rhs, "symbolic reconstruction"


def check_labeling(model, rng):
    if model.P == 1:
        return True, "single band"
    rho0 = 0.5
    e0 = epsilon0(model, rho0)
    for _ in range(10):
        eps = rng.uniform(-1.9, 1.9) * e0
        z = np.exp(np.array([rng.uniform(-2 * rho0, 2 * rho0) * 0.99 + 1j * rng.uniform(0, 6.3)
                             for _ in range(model.d)]))
        spec = general_spectrum(model, eps, z)
        lab = label_by_potential(spec, model, eps, z)
        if np.max(np.abs(np.sort_complex(lab) - np.sort_complex(spec.eigenvalues))) > 0:
            return False, "labeling is not a permutation"
    return True, "10 admissible samples"


def check_q_scaling(model, rng):
    if model.P == 1:
        return True, "Q = I for a single band"
    e0 = epsilon0(model, 0.5)
    eps = e0 / 2 ** np.arange(1, 6)
    z = np.exp(0.3 + 0.7j) * np.ones(model.d)
    dq, dqi = [], []
    for e in eps:
        q, qi, _ = diagonalizer(model, e, z)
        dq.append(np.linalg.norm(np.eye(model.P) - q))
        dqi.append(np.linalg.norm(np.eye(model.P) - qi))
    s1, s2 = loglog_fit(eps, dq).slope, loglog_fit(eps, dqi).slope
    return abs(s1 - 1) <= 0.1 and abs(s2 - 1) <= 0.1, f"slopes {s1:.3f}, {s2:.3f}"


# ------------------------------------------------------------------ perturb


def _order(model):
    return max(model.p)


def check_dual_oracle(model, rng):
    exp = rs_expand(model, 3)
    for n in range(model.P):
        if exp.eta[n][2] != eta2_oracle(model, n) or exp.eta[n][3] != eta3_oracle(model, n):
            return False, f"oracle mismatch at n={n}"
    return True, "orders 2 and 3 exact"


def check_loop_sum(model, rng):
    if model.P > 6:
        return True, "skipped: P > 6"
    exp = rs_expand(model, 4)
    for n in range(model.P):
        for r in range(2, 5):
            if loop_expansion(model, n, r) != exp.eta[n][r]:
                return False, f"loop sum differs at n={n}, r={r}"
    return True, "r <= 4 exact"


def check_low_order(model, rng):
    rep = verify_low_order(rs_expand(model, _order(model)), strict=False)
    return rep.passed, f"{len(rep.checks)} symbolic checks"


def check_eta1_zero(model, rng):
    exp = rs_expand(model, 1)
    ok = all(exp.eta[n][1].is_zero() for n in range(model.P))
    return ok, "R=1"


def check_series_order(model, rng):
    if model.P == 1:
        return True, "exact at first order"
    R = 4
    exp = rs_expand(model, R)
    z = np.exp(0.2 + 0.4j) * np.ones(model.d)
    orders = observed_order(exp, epsilon0(model, 0.5) / 2, z)
    ok = float(orders.min()) >= R + 1 - 0.2
    return ok, f"observed orders {np.round(orders, 3).tolist()}"


def check_scalar_shift(model, rng):
    if not any(p == 1 for p in model.p):
        return True, "no period-1 direction"
    return check_series_order(model, rng) if model.P > 1 else _shift_single(model)


def _shift_single(model):
    from .perturb import rs_eval

    exp = rs_expand(model, 2)
    z = np.exp(0.3 + 1.1j) * np.ones(model.d)
    eps = 0.01
    exact = general_spectrum(model, eps, z).eigenvalues
    err = float(np.max(np.abs(rs_eval(exp, eps, z) - exact)))
    return err <= 1e-13, f"single band error {err:.1e}"


# ----------------------------------------------------------------- velocity


def check_hf_vs_fd(model, rng):
    h = 1e-5
    for _ in range(5):
        mu = rng.uniform(2, 30)
        th = np.array([rng.uniform(0, 2 * np.pi) for _ in range(model.d)])
        g = fiber_group_velocity(model, mu, th, check_gap=False)
        for i in range(model.d):
            e = np.zeros(model.d)
            e[i] = h
            lp = _fiber_data(model, 1.0, mu, (th + e)[None])[0][0]
            lm = _fiber_data(model, 1.0, mu, (th - e)[None])[0][0]
            fd = model.p[i] * (lp - lm) / (2 * h)
            if np.max(np.abs(fd - g[:, i])) > 1e-6 * max(1.0, np.abs(g[:, i]).max()):
                return False, f"mismatch at mu={mu:.2f}"
    return True, "5 random samples"


def check_bracketing(model, rng):
    for mu in (5.0, 40.0):
        gi = gi_norm(model, mu)
        v = v_asy(model, mu)
        tol = 1e-9 * v
        if not gi.max() - tol <= v <= math.sqrt(float(np.sum(gi**2))) + tol:
            return False, f"mu={mu}: {gi} vs {v}"
    return True, "mu in {5, 40}"


def check_grid_convergence(model, rng):
    grid = ThetaGrid.uniform(model.d, 64)
    a = v_asy(model, 20.0, grid)
    b = v_asy(model, 20.0, grid.refined())
    rel = abs(a - b) / b
    return rel <= 1e-6, f"relative change {rel:.1e}"


def check_rescaling(model, rng):
    mu = 17.0
    th = np.array([[rng.uniform(0, 6.3) for _ in range(model.d)] for _ in range(8)])
    h = _fiber_data(model, 1.0, mu, th)[2]
    a = _fiber_data(model, 1.0 / mu, 1.0, th)[2]
    err = np.max(np.abs(h - mu * a)) / max(np.abs(h).max(), 1e-300)
    return err <= 1e-10, f"relative error {err:.1e}"


def check_odd_symmetry(model, rng):
    if not (model.d == 1 and model.p == (2,)):
        return True, "applies to d=1, p=2"
    th = np.linspace(0.1, 3.0, 7)
    a = _fiber_data(model, 1.0, 10.0, th[:, None])[2]
    b = _fiber_data(model, 1.0, 10.0, -th[:, None])[2]
    return bool(np.max(np.abs(a + b)) <= 1e-12), "d lambda / d theta odd"


# ------------------------------------------------------------------- evolve


def _evolve_mu(model):
    return 20.0 if model.P > 1 else 1.0


def check_unitarity(model, rng):
    tab = propagator_blocks(model, _evolve_mu(model), 3.0)
    defect = tab.unitarity_defect()
    fld = amplitude_field(model, _evolve_mu(model), 3.0, window=40 if model.d == 1 else 14)
    mass = abs(fld.mass() - 1)
    return defect <= 1e-10 and mass <= 1e-10, f"Parseval {defect:.1e}, window mass {mass:.1e}"


def check_method_agreement(model, rng):
    mu, t = _evolve_mu(model), 2.0
    window = 8 if model.d == 1 else 3
    box = BoxSpec.for_time(model.d, t, window) if model.d == 1 else BoxSpec((27,) * 2, (window,) * 2)
    fb = box_evolve(model, mu, t, box, certify=model.d == 1)
    fq = amplitude_field(model, mu, t, window=window)
    err = float(np.max(np.abs(fb.values - fq.values)))
    return err <= 1e-8, f"max difference {err:.1e}"


def check_contour(model, rng):
    if model.P == 1:
        return True, "skipped: no admissibility radius for a single band"
    rho0 = 0.5
    mu = 1.5 / epsilon0(model, rho0)
    dx = (2,) + (1,) * (model.d - 1)
    counts = 32 if model.d > 1 else None
    a = propagator_block_deformed(model, mu, 1.0, dx, rho0, counts)
    b = propagator_block(model, mu, 1.0, dx, counts)
    err = float(np.max(np.abs(a - b)))
    return err <= 1e-8, f"max difference {err:.1e}"


def check_block_entry(model, rng):
    tab = propagator_blocks(model, _evolve_mu(model), 2.0)
    for dx in [(0,) * model.d, (1,) * model.d, (-2,) + (0,) * (model.d - 1)]:
        b = tab[dx]
        emax = np.abs(b).max()
        nrm = np.linalg.norm(b, 2)
        if not emax <= nrm * (1 + 1e-12) <= model.P * emax * (1 + 1e-12) + 1e-300:
            return False, f"inequality fails at {dx}"
    return True, "3 offsets"


def check_time_composition(model, rng):
    half = 40 if model.d == 1 else 12
    prop = BoxPropagator(model, _evolve_mu(model), half)
    psi = prop.delta((0,) * model.d)
    a = prop.evolve(prop.evolve(psi, 1.3), 0.9)
    b = prop.evolve(psi, 2.2)
    err = float(np.max(np.abs(a - b)))
    return err <= 1e-9, f"difference {err:.1e}"


CHECKS = [
    ("split_coordinate round trip", check_split_roundtrip),
    ("separation scales with mu", check_separation_scaling),
    ("epsilon0 monotonicity", check_epsilon0_monotone),
    ("ring axioms", check_ring_axioms),
    ("evaluation is multiplicative", check_eval_multiplicative),
    ("torus reality checker", check_torus_reality),
    ("theta derivative vs differences", check_theta_derivative),
    ("finite-volume consistency", check_finite_volume),
    ("wraparound mutation detected", check_mutation_detected),
    ("Hermitian on the torus", check_hermitian),
    ("hopping decomposition", check_decompose),
    ("labeling is a bijection", check_labeling),
    ("I - Q scales linearly", check_q_scaling),
    ("dual oracle orders 2-3", check_dual_oracle),
    ("loop sum r <= 4", check_loop_sum),
    ("low-order symbolic identities", check_low_order),
    ("first order vanishes", check_eta1_zero),
    ("series vs eigensolver order", check_series_order),
    ("scalar shift", check_scalar_shift),
    ("Hellmann-Feynman vs differences", check_hf_vs_fd),
    ("velocity bracketing", check_bracketing),
    ("velocity grid convergence", check_grid_convergence),
    ("rescaling identity", check_rescaling),
    ("odd band derivative", check_odd_symmetry),
    ("unitarity", check_unitarity),
    ("quadrature vs box", check_method_agreement),
    ("contour invariance", check_contour),
    ("block vs entry norms", check_block_entry),
    ("time composition", check_time_composition),
]


def run_suite(fixtures=None, seed=0, checks=None):
    names = list(FIXTURES) if fixtures is None else list(fixtures)
    checks = CHECKS if checks is None else checks
    results = []
    for fname in names:
        model = fixture(fname)
        for cname, fn in checks:
            rng = random.Random(f"{seed}:{fname}:{cname}")
            try:
                ok, detail = fn(model, rng)
            except Exception as exc:  # report and continue with the next invariant
                ok, detail = False, f"{type(exc).__name__}: {exc}"
                detail += " | " + traceback.format_exc(limit=1).strip().splitlines()[-1]
            results.append(CheckResult(cname, fname, bool(ok), detail))
    return results
