"""Time evolution of ``H_mu`` on the lattice.

Two independent routes give the matrix elements ``<delta_n, exp(-itH) delta_m>``:

* Brillouin-torus quadrature.  The ``P x P`` block at cell offset ``D`` is
  ``mean_theta U(theta) exp(-i <D, theta>)`` where ``U = exp(-itH(e^{i theta}))``
  and ``D = x_m - x_n`` (source cell minus target cell).  On a uniform grid the
  whole table of blocks is one FFT of ``U`` over the grid.
* A finite box with open boundary, diagonalized densely (tridiagonally in 1D).

The quadrature also runs on the shifted contour ``|z_j| = exp(sigma_j rho0)``,
which produces the exponential decay factor explicitly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import (
    BoxTooSmall,
    ConfigError,
    DiscOverlap,
    FrontNotLinear,
    InadmissibleCoupling,
    QuadratureNotConverged,
)
from .fitting import PowerLawFit, linear_fit, loglog_fit
from .floquet import diagonalizer, floquet_laplacian, general_spectrum
from .lattice import LatticeModel, epsilon0, split_coordinate
from .velocity import v_asy

__all__ = [
    "AmplitudeField",
    "FrontTrace",
    "BoxSpec",
    "BlockTable",
    "BoxPropagator",
    "LightConeResult",
    "ExponentFit",
    "LRBoundReport",
    "default_counts",
    "propagator_blocks",
    "propagator_block",
    "propagator_block_deformed",
    "box_evolve",
    "amplitude",
    "amplitude_field",
    "light_cone_scan",
    "vlr_exponent_fit",
    "lr_bound_check",
    "lr_constant_stability",
    "imag_part_scaling",
    "q_deviation_scaling",
    "wavepacket_spread",
]

FREE_SPEED = 2.0  # max group speed of the hopping term per direction
BLOCK_TOL = 1e-9
BOX_TOL = 1e-10
MAX_BOX_SITES = 4096
MAX_DOUBLINGS = 5


# ---------------------------------------------------------------- data types


@dataclass
class AmplitudeField:
    """Amplitudes ``a_n(t) = <delta_n, exp(-itH) delta_source>`` on a rectangular window.

    ``values[k]`` belongs to the lattice site ``origin + k``.
    """

    t: float
    source: tuple
    origin: tuple
    values: np.ndarray
    method: str = "quadrature"
    certified_error: float = 0.0

    def __getitem__(self, n):
        k = tuple(int(a) - int(b) for a, b in zip(n, self.origin))
        if any(i < 0 or i >= s for i, s in zip(k, self.values.shape)):
            raise KeyError(f"site {tuple(n)} outside the stored window")
        return complex(self.values[k])

    def sites(self) -> np.ndarray:
        axes = [np.arange(o, o + s) for o, s in zip(self.origin, self.values.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def items(self):
        for n, a in zip(self.sites(), self.values.reshape(-1)):
            yield tuple(int(c) for c in n), complex(a)

    def mass(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def distances(self) -> np.ndarray:
        """``|n - source|_1`` on the window, shaped like ``values``."""
        sites = self.sites() - np.asarray(self.source)
        return np.abs(sites).sum(axis=1).reshape(self.values.shape)


@dataclass
class FrontTrace:
    threshold: float
    times: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.radii = np.maximum.accumulate(np.asarray(self.radii, dtype=float))

    def rows(self):
        return [(float(t), float(r)) for t, r in zip(self.times, self.radii)]


@dataclass(frozen=True)
class BoxSpec:
    """Open box ``source + [-half_width, half_width]^d`` and an analysis window inside it."""

    half_width: tuple
    window: tuple

    def __post_init__(self):
        if len(self.half_width) != len(self.window):
            raise ConfigError("half_width and window need one entry per dimension")
        if any(w < 0 or w > h for w, h in zip(self.window, self.half_width)):
            raise ConfigError("the analysis window must fit inside the box")

    @classmethod
    def for_time(cls, d, t, window):
        """Box obeying the margin rule ``L_j >= window_j + ceil(4 d t) + 16``."""
        window = _as_tuple(window, d)
        m = margin_for(d, t)
        return cls(tuple(w + m for w in window), window)

    @property
    def d(self):
        return len(self.half_width)

    @property
    def sites(self):
        return math.prod(2 * h + 1 for h in self.half_width)

    @property
    def margin(self):
        return min(h - w for h, w in zip(self.half_width, self.window))

    def enlarged(self):
        extra = max(1, math.ceil(self.margin / 2))
        return BoxSpec(tuple(h + extra for h in self.half_width), self.window)


def margin_for(d, t):
    return math.ceil(2 * 2 * d * abs(t)) + 16


def _as_tuple(x, d):
    if np.isscalar(x):
        return (int(x),) * d
    x = tuple(int(v) for v in x)
    if len(x) != d:
        raise ConfigError(f"expected {d} entries, got {len(x)}")
    return x


# ------------------------------------------------------------ torus quadrature


def default_counts(model: LatticeModel, t, dx=None):
    """Node counts ``max(64, 4 ceil(|dx_j| + 2 t / p_j))`` per direction."""
    dx = np.zeros(model.d) if dx is None else np.abs(np.asarray(dx, dtype=float))
    return tuple(
        max(64, 4 * math.ceil(dx[j] + FREE_SPEED * abs(t) / model.p[j])) for j in range(model.d)
    )


class _FiberEigen:
    """Per-node Hermitian eigendecomposition of ``H_mu(e^{i theta})`` on a uniform grid."""

    def __init__(self, model, mu, counts):
        self.model = model
        self.mu = mu
        self.counts = tuple(int(n) for n in counts)
        axes = [2 * np.pi * np.arange(n) / n for n in self.counts]
        mesh = np.meshgrid(*axes, indexing="ij")
        theta = np.stack(mesh, axis=-1)
        h = floquet_laplacian(model).evaluate_torus(theta)
        idx = np.arange(model.P)
        h[..., idx, idx] += mu * model.potential
        self.lam, self.vec = np.linalg.eigh(h)

    @property
    def axes(self):
        return tuple(range(len(self.counts)))

    def blocks(self, t) -> np.ndarray:
        phase = np.exp(-1j * t * self.lam)
        u = np.einsum("...an,...n,...bn->...ab", self.vec, phase, self.vec.conj())
        return np.fft.fftn(u, axes=self.axes) / math.prod(self.counts)

    def columns(self, t, col) -> np.ndarray:
        """Blocks restricted to source offset ``col``: shape ``counts + (P,)``."""
        phase = np.exp(-1j * t * self.lam)
        u = np.einsum("...an,...n,...n->...a", self.vec, phase, self.vec[..., col, :].conj())
        return np.fft.fftn(u, axes=self.axes) / math.prod(self.counts)


@dataclass
class BlockTable:
    """All blocks of ``exp(-itH)`` at one time, indexed by the cell offset ``x_m - x_n``."""

    counts: tuple
    data: np.ndarray
    t: float

    def __getitem__(self, dx) -> np.ndarray:
        k = tuple(int(v) % n for v, n in zip(np.atleast_1d(dx), self.counts))
        return self.data[k]

    def offsets(self) -> np.ndarray:
        """Signed offsets of every FFT slot, shape ``counts + (d,)``."""
        axes = [np.fft.fftfreq(n, 1.0 / n).astype(int) for n in self.counts]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def unitarity_defect(self) -> float:
        P = self.data.shape[-1]
        return abs(float(np.sum(np.abs(self.data) ** 2)) - P)


def _central(data, counts, frac=4):
    """Slots with ``|offset_j| <= counts_j // frac``, as a signed-offset-ordered array."""
    sl = []
    for n in counts:
        r = n // frac
        sl.append(np.r_[0 : r + 1, n - r : n])
    return data[np.ix_(*sl)]


def propagator_blocks(model: LatticeModel, mu, t, counts=None, tol=BLOCK_TOL) -> BlockTable:
    """Table of every block at time ``t``, node count certified by doubling."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    counts = default_counts(model, t) if counts is None else _as_tuple(counts, model.d)
    prev = _FiberEigen(model, mu, counts).blocks(t)
    for _ in range(MAX_DOUBLINGS):
        finer = tuple(2 * n for n in counts)
        cur = _FiberEigen(model, mu, finer).blocks(t)
        # same signed offsets -r..r, r = counts_j // 4, on both grids
        err = np.max(np.abs(_central(prev, counts) - _central(cur, finer, frac=8)))
        if err <= tol:
            return BlockTable(finer, cur, t)
        counts, prev = finer, cur
    raise QuadratureNotConverged(f"blocks changed by {err:.3e} at counts {counts}")


def propagator_block(model: LatticeModel, mu, t, dx, counts=None, tol=BLOCK_TOL) -> np.ndarray:
    """Block of ``exp(-itH_mu)`` between cells separated by ``dx = x_source - x_target``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    dx = _as_tuple(dx, model.d)
    counts = default_counts(model, t, dx) if counts is None else _as_tuple(counts, model.d)
    prev = BlockTable(counts, _FiberEigen(model, mu, counts).blocks(t), t)[dx]
    for _ in range(MAX_DOUBLINGS):
        counts = tuple(2 * n for n in counts)
        cur = BlockTable(counts, _FiberEigen(model, mu, counts).blocks(t), t)[dx]
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol:
            return cur
        prev = cur
    raise QuadratureNotConverged(f"block at {dx} changed by {err:.3e} at counts {counts}")


def _deformed_sum(model, mu, t, dx, rho0, counts):
    sigma = np.sign(dx)
    axes = [2 * np.pi * np.arange(n) / n for n in counts]
    acc = np.zeros((model.P, model.P), dtype=complex)
    for theta in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.d):
        z = np.exp(sigma * rho0 + 1j * theta)
        q, qinv, eta = diagonalizer(model, 1.0 / mu, z)
        u = (q * np.exp(-1j * t * mu * eta)) @ qinv
        acc += u * np.exp(-1j * np.dot(dx, theta))
    return acc * math.exp(-rho0 * np.abs(dx).sum()) / math.prod(counts)


def propagator_block_deformed(model: LatticeModel, mu, t, dx, rho0, counts=None,
                              tol=BLOCK_TOL) -> np.ndarray:
    """The same block integrated over ``|z_j| = exp(sign(dx_j) rho0)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    dx = np.asarray(_as_tuple(dx, model.d))
    if not np.any(dx):
        return propagator_block(model, mu, t, dx, counts, tol)
    if not 1.0 / mu < epsilon0(model, rho0):
        raise DiscOverlap(f"1/mu={1.0 / mu:g} is not below epsilon0={epsilon0(model, rho0):g}")
    counts = default_counts(model, t, dx) if counts is None else _as_tuple(counts, model.d)
    prev = _deformed_sum(model, mu, t, dx, rho0, counts)
    for _ in range(MAX_DOUBLINGS):
        counts = tuple(2 * n for n in counts)
        cur = _deformed_sum(model, mu, t, dx, rho0, counts)
        err = float(np.max(np.abs(cur - prev)))
        if err <= tol:
            return cur
        prev = cur
    raise QuadratureNotConverged(f"deformed block changed by {err:.3e} at counts {counts}")


def amplitude(model: LatticeModel, mu, t, n, m, counts=None) -> complex:
    """``<delta_n, exp(-itH_mu) delta_m>`` from the quadrature block."""
    cn = split_coordinate(model, n)
    cm = split_coordinate(model, m)
    dx = tuple(a - b for a, b in zip(cm.x, cn.x))
    block = propagator_block(model, mu, t, dx, counts)
    return complex(block[model.index(cn.w), model.index(cm.w)])


def _quadrature_field(model, mu, t, source, window, counts=None):
    src = split_coordinate(model, source)
    window = _as_tuple(window, model.d)
    if counts is None:
        reach = [math.ceil((window[j] + 1) / model.p[j]) + 1 for j in range(model.d)]
        counts = default_counts(model, t, reach)
    table = propagator_blocks(model, mu, t, counts)
    origin = tuple(s - w for s, w in zip(source, window))
    shape = tuple(2 * w + 1 for w in window)
    vals = np.empty(shape, dtype=complex)
    col = model.index(src.w)
    for k in np.ndindex(shape):
        n = tuple(o + i for o, i in zip(origin, k))
        cn = split_coordinate(model, n)
        dx = tuple(a - b for a, b in zip(src.x, cn.x))
        vals[k] = table[dx][model.index(cn.w), col]
    return AmplitudeField(t, tuple(source), origin, vals, "quadrature")


# ------------------------------------------------------------------ box method


class BoxPropagator:
    """``exp(-itH_mu)`` restricted to an open box, diagonalized once."""

    def __init__(self, model: LatticeModel, mu, half_width, center=None, max_sites=MAX_BOX_SITES):
        self.model = model
        self.mu = mu
        self.half_width = _as_tuple(half_width, model.d)
        self.center = (0,) * model.d if center is None else tuple(int(c) for c in center)
        self.shape = tuple(2 * h + 1 for h in self.half_width)
        size = math.prod(self.shape)
        if size > max_sites:
            raise ConfigError(f"box has {size} sites, dense limit is {max_sites}")
        self.origin = tuple(c - h for c, h in zip(self.center, self.half_width))
        coords = np.stack(
            np.meshgrid(*[np.arange(o, o + s) for o, s in zip(self.origin, self.shape)],
                        indexing="ij"),
            axis=-1,
        ).reshape(-1, model.d)
        pot = np.array([float(model.V(tuple(c))) for c in coords]) * mu
        if model.d == 1:
            self.lam, self.vec = scipy.linalg.eigh_tridiagonal(pot, np.ones(size - 1))
        else:
            h = np.diag(pot)
            strides = np.cumprod((1,) + self.shape[::-1])[:-1][::-1]
            for j in range(model.d):
                ok = coords[:, j] < self.origin[j] + self.shape[j] - 1
                i = np.nonzero(ok)[0]
                h[i, i + strides[j]] = 1.0
                h[i + strides[j], i] = 1.0
            self.lam, self.vec = np.linalg.eigh(h)

    @property
    def size(self):
        return math.prod(self.shape)

    def delta(self, n) -> np.ndarray:
        psi = np.zeros(self.size, dtype=complex)
        k = tuple(int(a) - int(b) for a, b in zip(n, self.origin))
        if any(i < 0 or i >= s for i, s in zip(k, self.shape)):
            raise ConfigError(f"site {tuple(n)} outside the box")
        psi[np.ravel_multi_index(k, self.shape)] = 1.0
        return psi

    def evolve(self, psi, t) -> np.ndarray:
        if t == 0:
            return np.array(psi, dtype=complex)
        coef = self.vec.T @ np.asarray(psi, dtype=complex)
        return self.vec @ (np.exp(-1j * t * self.lam) * coef)

    def window(self, psi, center, half):
        """Slice of ``psi`` over ``center + [-half, half]^d`` and that slice's origin."""
        grid = np.asarray(psi).reshape(self.shape)
        lo = [c - h - o for c, h, o in zip(center, half, self.origin)]
        if any(v < 0 for v in lo) or any(l + 2 * h + 1 > s for l, h, s in zip(lo, half, self.shape)):
            raise ConfigError("window does not fit in the box")
        sl = tuple(slice(l, l + 2 * h + 1) for l, h in zip(lo, half))
        return grid[sl], tuple(c - h for c, h in zip(center, half))


def box_evolve(model: LatticeModel, mu, t, box: BoxSpec, source=None, certify=True,
               tol=BOX_TOL) -> AmplitudeField:
    """Window amplitudes of the box evolution of ``delta_source`` with truncation certificate."""
    source = (0,) * model.d if source is None else tuple(int(s) for s in source)
    if box.d != model.d:
        raise ConfigError("box dimension does not match the model")
    if box.margin < margin_for(model.d, t) - 16:
        raise BoxTooSmall(f"margin {box.margin} below the speed bound for t={t}")
    vals, origin = _box_window(model, mu, t, box, source)
    err = 0.0
    if certify:
        big, _ = _box_window(model, mu, t, box.enlarged(), source, max_sites=2 * MAX_BOX_SITES)
        err = float(np.max(np.abs(big - vals)))
        if err > tol:
            raise BoxTooSmall(f"window amplitudes moved by {err:.3e} in the larger box")
    return AmplitudeField(t, source, origin, vals, "box", err)


def _box_window(model, mu, t, box, source, max_sites=MAX_BOX_SITES):
    prop = BoxPropagator(model, mu, box.half_width, source, max_sites=max_sites)
    psi = prop.evolve(prop.delta(source), t)
    return prop.window(psi, source, box.window)


def amplitude_field(model: LatticeModel, mu, t, source=None, window=10, method="quadrature",
                    box: Optional[BoxSpec] = None) -> AmplitudeField:
    source = (0,) * model.d if source is None else tuple(int(s) for s in source)
    if method == "quadrature":
        return _quadrature_field(model, mu, t, source, window)
    if method == "box":
        box = box or BoxSpec.for_time(model.d, t, window)
        return box_evolve(model, mu, t, box, source)
    raise ConfigError(f"unknown method {method!r}")


# ----------------------------------------------------------------- light cones


@dataclass
class LightConeResult:
    trace: FrontTrace
    fit: PowerLawFit  # linear fit r = slope * t + intercept over the trimmed range
    counts: tuple = ()
    mu: float = float("nan")

    @property
    def velocity(self) -> float:
        return self.fit.slope


def _distance_table(model, counts, col):
    """``|n - m|_1`` for target ``(x, w)`` with source at cell 0, offset ``col``."""
    wsrc = np.asarray(model.cells[col])
    offs = BlockTable(counts, np.empty(counts), 0).offsets()
    cells = np.asarray(model.cells)
    p = np.asarray(model.p)
    # target cell x = -offset
    sites = (-offs)[..., None, :] * p + cells - wsrc
    return np.abs(sites).sum(axis=-1)


def _front_from_snapshots(snaps, dist, eta):
    radii = []
    for s in snaps:
        hit = s > eta
        radii.append(float(dist[hit].max()) if hit.any() else 0.0)
    return radii


def light_cone_scan(model: LatticeModel, mu, times, eta=1e-6, box: Optional[BoxSpec] = None,
                    source_offset=0, trim=0.1, min_r2=0.99, counts=None) -> LightConeResult:
    """Running-max ``l1`` front of ``|a_n(t)| > eta`` and its least-squares speed.

    Without ``box`` the amplitudes come from the torus quadrature (one
    eigendecomposition per node, any number of times); with ``box`` from a
    certified open-box evolution.
    """
    times = np.asarray(times, dtype=float)
    if not 1e-12 < eta < 1e-2:
        raise ConfigError("threshold must lie in (1e-12, 1e-2)")
    if times.size < 3 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ConfigError("times must be an increasing nonnegative grid of at least 3 points")
    if box is not None:
        radii, used = _scan_box(model, mu, times, eta, box, source_offset), box.half_width
    else:
        radii, used = _scan_auto(model, mu, times, eta, source_offset, counts)
    trace = FrontTrace(eta, times, radii)
    k = int(math.floor(trim * times.size))
    sel = slice(k, times.size - k)
    fit = linear_fit(trace.times[sel], trace.radii[sel])
    if fit.r2 < min_r2 and abs(fit.slope) > 1e-12:
        warnings.warn(f"front at mu={mu:g} is not linear: R^2={fit.r2:.4f}", FrontNotLinear,
                      stacklevel=2)
    return LightConeResult(trace, fit, used, float(mu))


def _scan_auto(model, mu, times, eta, col, counts):
    tol = min(BLOCK_TOL, 1e-3 * eta)
    counts = default_counts(model, 0) if counts is None else _as_tuple(counts, model.d)
    eig = _FiberEigen(model, mu, counts)
    for _ in range(12):
        finer = _FiberEigen(model, mu, tuple(2 * n for n in counts))
        coarse_end = eig.columns(times[-1], col)
        fine_end = finer.columns(times[-1], col)
        err = np.max(np.abs(_central(coarse_end, counts) - _central(fine_end, finer.counts, frac=8)))
        if err <= tol:
            runmax = np.zeros(coarse_end.shape)
            snaps = []
            for t in times:
                runmax = np.maximum(runmax, np.abs(eig.columns(t, col)))
                snaps.append(runmax.copy())
            if _outer_max(runmax, counts) <= 1e-3 * eta:
                dist = _distance_table(model, counts, col)
                return _front_from_snapshots(snaps, dist, eta), counts
        eig, counts = finer, finer.counts
    raise QuadratureNotConverged(f"light-cone quadrature unresolved at counts {counts}")


def _outer_max(data, counts):
    """Largest entry in slots with some ``|offset_j| > counts_j // 4``."""
    inner = np.zeros(counts, dtype=bool)
    inner[np.ix_(*[np.r_[0 : n // 4 + 1, n - n // 4 : n] for n in counts])] = True
    outer = data[~inner]
    return float(outer.max()) if outer.size else 0.0


def _scan_box(model, mu, times, eta, box, col):
    source = model.cells[col]
    prop = BoxPropagator(model, mu, box.half_width, source)
    big = BoxPropagator(model, mu, box.enlarged().half_width, source, max_sites=2 * MAX_BOX_SITES)
    if box.margin < margin_for(model.d, times[-1]) - 16:
        raise BoxTooSmall(f"margin {box.margin} below the speed bound for t={times[-1]}")
    psi0, psi1 = prop.delta(source), big.delta(source)
    runmax = None
    radii = []
    for t in times:
        a, origin = prop.window(prop.evolve(psi0, t), source, box.window)
        b, _ = big.window(big.evolve(psi1, t), source, box.window)
        err = float(np.max(np.abs(a - b)))
        if err > BOX_TOL:
            raise BoxTooSmall(f"front window moved by {err:.3e} at t={t}")
        runmax = np.abs(a) if runmax is None else np.maximum(runmax, np.abs(a))
        field_ = AmplitudeField(t, tuple(source), origin, runmax)
        hit = runmax > eta
        radii.append(float(field_.distances()[hit].max()) if hit.any() else 0.0)
    return radii


@dataclass
class ExponentFit:
    mus: np.ndarray
    velocities: np.ndarray
    fit: PowerLawFit
    predicted: float
    scans: list = field(default_factory=list)

    @property
    def exponent(self) -> float:
        return self.fit.slope

    def to_dict(self):
        return {
            "mus": [float(m) for m in self.mus],
            "velocities": [float(v) for v in self.velocities],
            "exponent": self.exponent,
            "predicted": self.predicted,
            "fit": self.fit.to_dict(),
        }


def auto_times(model: LatticeModel, mu, distance=60.0, npoints=81):
    """Times ``0..distance / v_asy``: the front crosses a fixed number of sites at every ``mu``."""
    return np.linspace(0.0, distance / v_asy(model, mu), npoints)


def vlr_exponent_fit(model: LatticeModel, mus: Sequence[float], times=None, eta=1e-6,
                     box: Optional[BoxSpec] = None, distance=60.0) -> ExponentFit:
    """Log-log slope of the measured front speed against ``mu``.

    ``times`` is a fixed grid, a callable ``mu -> grid``, or ``None`` for
    :func:`auto_times`.
    """
    mus = np.asarray(sorted(float(m) for m in mus))
    if mus.size < 4:
        raise ConfigError("need at least 4 couplings")
    scans = []
    for mu in mus:
        if times is None:
            grid = auto_times(model, mu, distance)
        elif callable(times):
            grid = times(mu)
        else:
            grid = times
        scans.append(light_cone_scan(model, mu, grid, eta, box))
    vel = np.array([s.velocity for s in scans])
    fit = loglog_fit(mus, vel)
    return ExponentFit(mus, vel, fit, float(1 - model.p0), scans)


# ------------------------------------------------------- Lieb-Robinson bounds


@dataclass
class LRBoundReport:
    mu: float
    rho0: float
    log_C: float
    C1: float
    max_log_violation: float
    samples: int
    used: int

    @property
    def C(self) -> float:
        return math.exp(self.log_C)

    def to_dict(self):
        return {
            "mu": self.mu, "rho0": self.rho0, "C": self.C, "log_C": self.log_C,
            "C1": self.C1, "max_log_violation": self.max_log_violation,
            "samples": self.samples, "used": self.used,
        }


def default_lr_samples(model: LatticeModel, mu, max_distance=40, tau_max=5.0, ntimes=21):
    """Source at the origin, targets along every axis, times ``tau * mu^(p0-1)``."""
    ts = np.linspace(0.0, tau_max, ntimes) * mu ** (model.p0 - 1)
    origin = (0,) * model.d
    targets = []
    for j in range(model.d):
        for r in range(-max_distance, max_distance + 1):
            n = [0] * model.d
            n[j] = r
            if j == 0 or r != 0:
                targets.append(tuple(n))
    return [(n, origin, float(t)) for t in ts for n in targets]


def lr_bound_check(model: LatticeModel, mu, rho0, samples=None, floor=1e-12) -> LRBoundReport:
    """Smallest ``(log C, C1)`` with ``log|a| <= log C - rho0 (|n-m|_1 - C1 mu^(1-p0) t)``.

    "Smallest" is the supporting line minimizing the total gap above the
    samples.  Amplitudes below ``floor`` sit in the quadrature noise and are
    not used.
    """
    eps0 = epsilon0(model, rho0)
    if mu < 1.0 / eps0:
        raise InadmissibleCoupling(f"mu={mu:g} below 1/epsilon0={1.0 / eps0:g}")
    samples = default_lr_samples(model, mu) if samples is None else list(samples)
    by_time = {}
    for n, m, t in samples:
        by_time.setdefault(float(t), []).append((tuple(n), tuple(m)))
    xs, ys = [], []
    for t, pairs in sorted(by_time.items()):
        reach = 2
        for n, m in pairs:
            cn, cm = split_coordinate(model, n), split_coordinate(model, m)
            reach = max(reach, max(abs(a - b) for a, b in zip(cm.x, cn.x)) + 2)
        table = propagator_blocks(model, mu, t, default_counts(model, t, [reach] * model.d))
        for n, m in pairs:
            cn, cm = split_coordinate(model, n), split_coordinate(model, m)
            dx = tuple(a - b for a, b in zip(cm.x, cn.x))
            a = abs(table[dx][model.index(cn.w), model.index(cm.w)])
            if a <= floor:
                continue
            dist = sum(abs(a_ - b_) for a_, b_ in zip(n, m))
            xs.append(rho0 * mu ** (1 - model.p0) * t)
            ys.append(math.log(a) + rho0 * dist)
    if not xs:
        raise ConfigError("no sample amplitude above the noise floor")
    x, y = np.asarray(xs), np.asarray(ys)
    if np.all(x == 0):
        logc, c1 = float(y.max()), 0.0
    else:
        res = linprog(
            c=[x.size, float(x.sum())],
            A_ub=np.column_stack([-np.ones_like(x), -x]),
            b_ub=-y,
            bounds=[(None, None), (0, None)],
            method="highs",
        )
        if not res.success:
            raise QuadratureNotConverged(f"bound fit failed: {res.message}")
        logc, c1 = float(res.x[0]), float(res.x[1])
    viol = float(np.max(y - logc - c1 * x))
    if not (math.isfinite(logc) and math.isfinite(c1)):
        raise QuadratureNotConverged("fitted bound constants are not finite")
    return LRBoundReport(float(mu), float(rho0), logc, c1, viol, len(samples), x.size)


def lr_constant_stability(model: LatticeModel, mus, rho0, **kw):
    """Reports over a coupling grid and the spread ``max C1 / min C1``."""
    reports = [lr_bound_check(model, mu, rho0, default_lr_samples(model, mu, **kw))
               for mu in mus]
    c1 = np.array([r.C1 for r in reports])
    ratio = float(c1.max() / c1.min()) if c1.min() > 0 else math.inf
    return reports, ratio


# ------------------------------------------------------- annulus diagnostics


def _distinguished_boundary(d, rho0, nphase):
    phases = 2 * np.pi * np.arange(nphase) / nphase
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
    th = np.stack(np.meshgrid(*[phases] * d, indexing="ij"), axis=-1).reshape(-1, d)
    return np.concatenate([np.exp(s * rho0 + 1j * th) for s in signs])


def imag_part_scaling(model: LatticeModel, rho0, eps_values, nphase=32) -> PowerLawFit:
    """Log-log fit of ``max |Im eta_n(eps, z)|`` over ``|z_j| = exp(+-rho0)`` against ``eps``."""
    zs = _distinguished_boundary(model.d, rho0, nphase)
    vals = []
    for eps in eps_values:
        best = 0.0
        for z in zs:
            best = max(best, float(np.abs(general_spectrum(model, eps, z).eigenvalues.imag).max()))
        vals.append(best)
    return loglog_fit(eps_values, vals)


def q_deviation_scaling(model: LatticeModel, eps_values, z=None) -> PowerLawFit:
    """Log-log fit of the Frobenius norm ``||I - Q_eps(z)||`` against ``eps``."""
    z = np.ones(model.d) if z is None else np.asarray(z)
    vals = []
    for eps in eps_values:
        q, _, _ = diagonalizer(model, eps, z)
        vals.append(float(np.linalg.norm(np.eye(model.P) - q)))
    return loglog_fit(eps_values, vals)


# ------------------------------------------------------------------ spreading


def wavepacket_spread(model: LatticeModel, mu, t, box: Optional[BoxSpec] = None,
                      method="box") -> float:
    """``(1/t) sqrt(sum_n |n|^2 |a_n(t)|^2)`` for the packet started at the origin.

    The default window is ``ceil(3 d t) + 16`` sites, far beyond the free
    light cone at speed ``2``.
    """
    if t <= 0:
        raise ValueError("spread is defined for t > 0")
    if method == "box":
        if box is None:
            box = BoxSpec.for_time(model.d, t, math.ceil(3 * model.d * t) + 16)
        fld = box_evolve(model, mu, t, box)
        r2 = (fld.sites() ** 2).sum(axis=1)
        return float(np.sqrt(np.sum(r2 * np.abs(fld.values.reshape(-1)) ** 2))) / t
    if method == "quadrature":
        table = propagator_blocks(model, mu, t)
        offs = table.offsets()
        cells = np.asarray(model.cells)
        sites = (-offs)[..., None, :] * np.asarray(model.p) + cells
        r2 = (sites**2).sum(axis=-1)
        w = np.abs(table.data[..., :, 0]) ** 2
        return float(np.sqrt(np.sum(r2 * w))) / t
    raise ConfigError(f"unknown method {method!r}")
