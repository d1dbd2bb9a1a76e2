"""Group velocities on the Brillouin torus and the asymptotic velocity.

The group velocity in direction ``i`` acts on each Floquet fiber as
``p_i * d lambda_n / d theta_i`` on the ``n``-th band.  Its operator norm is
the sup of that over bands and quasimomenta; the asymptotic velocity is the
sup of the Euclidean norm of the vector of directional velocities, and the
spreading rate of ``delta_0`` is a torus average weighted by the overlap of
each band with ``e_0``.  Bands are labeled by sorting; every quantity consumed
here is a max or a sum over bands, so the labeling does not matter.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateBandCrossing, InsufficientPoints, NoConvergence, PoorFit
from .fitting import PowerLawFit, loglog_fit
from .floquet import floquet_laplacian
from .lattice import LatticeModel, epsilon0
from .perturb import straight_loop_constant

__all__ = [
    "ThetaGrid",
    "VelocityReport",
    "SweepResult",
    "fiber_group_velocity",
    "gi_norm",
    "v_asy",
    "v_asy_delta0",
    "velocity_report",
    "predicted_leading_constant",
    "sweep_and_fit",
]

DEFAULT_POINTS = 64
GRID_RTOL = 1e-6


@dataclass(frozen=True)
class ThetaGrid:
    counts: tuple

    @classmethod
    def uniform(cls, d, n=DEFAULT_POINTS):
        return cls((int(n),) * d)

    @property
    def d(self):
        return len(self.counts)

    @property
    def size(self):
        return math.prod(self.counts)

    def axes(self):
        return [2 * np.pi * np.arange(n) / n for n in self.counts]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def weights(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def refined(self):
        return ThetaGrid(tuple(2 * n for n in self.counts))

    def spacing(self):
        return np.array([2 * np.pi / n for n in self.counts])


def _derivative_matrices(model):
    lap = floquet_laplacian(model)
    return [lap.theta_derivative(i) for i in range(model.d)]


def _fiber_data(model, hop, pot, theta):
    """Sorted bands, eigenvectors and ``d lambda / d theta_i`` for ``hop*Lap + pot*V``.

    ``theta`` has shape ``(N, d)``; returns ``lam (N,P)``, ``vec (N,P,P)`` and
    ``dlam (N,P,d)`` (unscaled by the periods).
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    lap = floquet_laplacian(model)
    h = hop * lap.evaluate_torus(theta)
    idx = np.arange(model.P)
    h[:, idx, idx] += pot * model.potential
    lam, vec = np.linalg.eigh(h)
    dlam = np.empty(lam.shape + (model.d,))
    for i, dm in enumerate(_derivative_matrices(model)):
        dh = hop * dm.evaluate_torus(theta)
        # Hellmann-Feynman: <v_n, dH v_n>
        dlam[..., i] = np.einsum("kan,kab,kbn->kn", vec.conj(), dh, vec).real
    return lam, vec, dlam


def fiber_group_velocity(model: LatticeModel, mu, theta, *, check_gap=True) -> np.ndarray:
    """``(P, d)`` matrix with entry ``(n, i) = p_i d lambda_n / d theta_i`` of ``H_mu``."""
    theta = np.asarray(theta, dtype=float).reshape(1, -1)
    lam, _, dlam = _fiber_data(model, 1.0, mu, theta)
    if check_gap and model.P > 1 and np.min(np.diff(lam[0])) < 1e-10:
        warnings.warn(
            f"bands cross at theta={theta[0]}; sorted labeling used",
            DegenerateBandCrossing,
            stacklevel=2,
        )
    return dlam[0] * np.asarray(model.p)


def _refine_max(fn, theta0, spacing, sweeps=3):
    """Coordinate-wise bounded golden-section refinement of a maximum of ``fn``."""
    best = np.array(theta0, dtype=float)
    fbest = fn(best)
    for _ in range(sweeps):
        improved = False
        for c in range(len(best)):
            def neg(x, c=c):
                t = best.copy()
                t[c] = x
                return -fn(t)

            res = minimize_scalar(
                neg,
                bounds=(best[c] - spacing[c], best[c] + spacing[c]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if -res.fun > fbest:
                best[c] = res.x
                fbest = -res.fun
                improved = True
        if not improved:
            break
    return fbest, best


def _sup(model, mu, grid, score, refine=True):
    """Max over grid nodes and bands of ``score(dlam_scaled) -> (N, P)``, refined locally."""
    theta = grid.nodes()
    _, _, dlam = _fiber_data(model, 1.0, mu, theta)
    vals = score(dlam * np.asarray(model.p))
    k, n = np.unravel_index(np.argmax(vals), vals.shape)
    fmax, tmax = float(vals[k, n]), theta[k]
    if refine:
        def fn(t):
            _, _, dl = _fiber_data(model, 1.0, mu, t[None, :])
            return float(np.max(score(dl * np.asarray(model.p))))

        # refine every node within a hair of the max (the sup is often attained at +-theta)
        for kk in np.nonzero(vals.max(axis=1) >= fmax * (1 - 1e-9))[0][:4]:
            f, t = _refine_max(fn, theta[kk], grid.spacing())
            if f > fmax:
                fmax, tmax = f, t
        _, _, dl = _fiber_data(model, 1.0, mu, tmax[None, :])
        n = int(np.argmax(score(dl * np.asarray(model.p))[0]))
    return fmax, int(n), np.asarray(tmax) % (2 * np.pi)


def _converge(compute, grid, max_refinements, rtol=GRID_RTOL):
    prev = compute(grid)
    for _ in range(max_refinements):
        finer = grid.refined()
        cur = compute(finer)
        a, b = np.atleast_1d(prev[0]), np.atleast_1d(cur[0])
        scale = np.maximum(np.abs(b), np.finfo(float).tiny)
        if np.all(np.abs(a - b) <= rtol * scale):
            return cur, finer
        prev, grid = cur, finer
    raise NoConvergence(f"grid refinement did not converge to {rtol} by {grid.counts}")


def _default_grid(model, grid):
    if grid is None:
        return ThetaGrid.uniform(model.d)
    if isinstance(grid, int):
        return ThetaGrid.uniform(model.d, grid)
    return grid


def _max_refinements(model):
    return 4 if model.d == 1 else 2


def gi_norm(model: LatticeModel, mu, grid=None) -> np.ndarray:
    """Operator norms of the directional group velocities of ``H_mu``."""
    grid = _default_grid(model, grid)
    out = []
    for i in range(model.d):
        def compute(g, i=i):
            f, _, _ = _sup(model, mu, g, lambda dl: np.abs(dl[..., i]))
            return (f,)

        (f,), _ = _converge(compute, grid, _max_refinements(model))
        out.append(f)
    return np.array(out)


def _v_asy_full(model, mu, grid):
    def compute(g):
        f, n, t = _sup(model, mu, g, lambda dl: np.linalg.norm(dl, axis=-1))
        return (f, n, t)

    (f, n, t), g = _converge(compute, grid, _max_refinements(model))
    return f, n, t, g


def v_asy(model: LatticeModel, mu, grid=None) -> float:
    """Sup over bands and quasimomenta of the Euclidean group speed of ``H_mu``."""
    return _v_asy_full(model, mu, _default_grid(model, grid))[0]


def _delta0_components(model, mu, grid):
    theta = grid.nodes()
    _, vec, dlam = _fiber_data(model, 1.0, mu, theta)
    overlap = np.abs(vec[:, 0, :]) ** 2  # |<v_n, e_0>|^2, shape (N, P)
    p = np.asarray(model.p, dtype=float)
    sq = np.einsum("knd,kn->d", dlam**2, overlap) / grid.size
    return p**2 * sq


def v_asy_delta0(model: LatticeModel, mu, grid=None, components=False):
    """Asymptotic spreading rate of ``delta_0``: ``sqrt(sum_i ||G_i delta_0||^2)``."""
    grid = _default_grid(model, grid)
    (sq,), _ = _converge(lambda g: (_delta0_components(model, mu, g),), grid,
                         _max_refinements(model))
    return np.sqrt(sq) if components else float(np.sqrt(sq.sum()))


@dataclass
class VelocityReport:
    mu: float
    gi_norms: np.ndarray
    v_asy: float
    v_asy_delta0: float
    argmax: tuple
    grid: tuple = ()

    def to_row(self) -> dict:
        row = {"mu": self.mu}
        for i, g in enumerate(self.gi_norms):
            row[f"gi_norm_{i + 1}"] = float(g)
        row["v_asy"] = self.v_asy
        row["v_asy_delta0"] = self.v_asy_delta0
        return row


def velocity_report(model: LatticeModel, mu, grid=None) -> VelocityReport:
    grid = _default_grid(model, grid)
    gi = gi_norm(model, mu, grid)
    v, n, t, g = _v_asy_full(model, mu, grid)
    v0 = v_asy_delta0(model, mu, grid)
    return VelocityReport(float(mu), gi, v, v0, (n, tuple(float(x) for x in t)), g.counts)


def predicted_leading_constant(model: LatticeModel):
    """Leading constants ``(C, c)`` of ``v_asy`` and ``v_asy(., delta_0)`` in ``mu^(1-p0)``.

    Derived from the order-``p0`` cosine terms: ``C = 2 p0 max_n sqrt(sum_i c_{i,n}^2)``
    and ``c = p0 sqrt(2 sum_i c_{i,0}^2)``, sums over directions with ``p_i = p0``.
    """
    p0 = model.p0
    dirs = [i for i, pi in enumerate(model.p) if pi == p0]
    norms = [
        math.sqrt(sum(float(straight_loop_constant(model, w, i)) ** 2 for i in dirs))
        for w in model.cells
    ]
    C = 2 * p0 * max(norms)
    origin = model.cells[0]
    c = p0 * math.sqrt(2 * sum(float(straight_loop_constant(model, origin, i)) ** 2 for i in dirs))
    return C, c


@dataclass
class SweepResult:
    mus: np.ndarray
    reports: list
    fit: PowerLawFit
    fit_delta0: PowerLawFit
    fit_directions: list
    predicted_slope: float
    predicted_constant: float
    predicted_constant_delta0: float
    periods: tuple = ()
    flags: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "slope": self.fit.slope,
            "intercept": self.fit.intercept,
            "r2": self.fit.r2,
            "predicted_slope": self.predicted_slope,
            "predicted_constant": self.predicted_constant,
            "prefactor": self.fit.prefactor,
            "delta0": {
                "slope": self.fit_delta0.slope,
                "intercept": self.fit_delta0.intercept,
                "r2": self.fit_delta0.r2,
                "predicted_constant": self.predicted_constant_delta0,
                "prefactor": self.fit_delta0.prefactor,
            },
            "directions": [
                {"slope": f.slope, "intercept": f.intercept, "r2": f.r2,
                 "predicted_slope": float(1 - p)}
                for f, p in zip(self.fit_directions, self.periods)
            ],
            "flags": list(self.flags),
        }


def sweep_and_fit(model: LatticeModel, mus, grid=None, rho0=None, min_r2=0.999) -> SweepResult:
    """Velocities over a coupling sweep and their log-log fits against ``mu``."""
    mus = np.asarray(sorted(float(m) for m in mus))
    if mus.size < 4:
        raise InsufficientPoints("a sweep needs at least 4 couplings")
    if np.any(np.diff(mus) <= 0):
        raise InsufficientPoints("couplings must be distinct")
    if mus[-1] / mus[0] < 10 * (1 - 1e-12):
        raise InsufficientPoints("couplings must span at least one decade")
    flags = []
    if rho0 is not None:
        mu_min = 1.0 / epsilon0(model, rho0)
        if mus[0] < mu_min:
            flags.append(f"mu={mus[0]:g} below admissibility threshold {mu_min:g}")
    reports = [velocity_report(model, mu, grid) for mu in mus]
    fit = loglog_fit(mus, [r.v_asy for r in reports])
    fit0 = loglog_fit(mus, [r.v_asy_delta0 for r in reports])
    fits = [loglog_fit(mus, [r.gi_norms[i] for r in reports]) for i in range(model.d)]
    for name, f in [("v_asy", fit), ("v_asy_delta0", fit0)] + [
        (f"gi_norm_{i + 1}", f) for i, f in enumerate(fits)
    ]:
        if f.r2 < min_r2 and not np.isclose(f.slope, 0.0, atol=1e-8):
            flags.append(f"poor fit for {name}: R^2={f.r2:.6f}")
            warnings.warn(flags[-1], PoorFit, stacklevel=2)
    C, c = predicted_leading_constant(model)
    return SweepResult(mus, reports, fit, fit0, fits, float(1 - model.p0), C, c,
                       tuple(model.p), flags)
