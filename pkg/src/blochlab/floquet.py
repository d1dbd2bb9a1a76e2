"""Floquet matrices of ``eps * Laplacian + V`` and their spectra.

Quasi-periodic boundary conditions ``psi(n + p_j e_j) = z_j psi(n)`` restrict
the lattice operator to a ``P x P`` matrix.  A hop that leaves the cell in the
``+j`` direction from an offset with ``w_j = p_j - 1`` lands on ``w_j = 0`` and
picks up ``z_j``; the reverse hop picks up ``1/z_j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    AmbiguousAssignment,
    DimensionMismatch,
    DiscOverlap,
    EigensolverFailure,
    NonzeroDiagonalResidual,
    SingularQ,
    ZeroVariable,
)
from .lattice import LatticeModel
from .laurent import LaurentMatrix, LaurentPoly

__all__ = [
    "FloquetMatrix",
    "HoppingDecomposition",
    "BandSpectrum",
    "AnnulusSpec",
    "floquet_laplacian",
    "decompose",
    "assemble",
    "torus_hamiltonians",
    "hermitian_bands",
    "general_spectrum",
    "gershgorin_discs",
    "label_by_potential",
    "diagonalizer",
    "periodic_box_matrix",
    "finite_volume_consistency",
]


@dataclass(frozen=True)
class FloquetMatrix:
    entries: np.ndarray
    model: LatticeModel
    eps: complex
    z: tuple

    def is_hermitian(self, rtol=1e-14) -> bool:
        a = self.entries
        return np.linalg.norm(a - a.conj().T) <= rtol * max(np.linalg.norm(a), 1.0)


@dataclass(frozen=True)
class HoppingDecomposition:
    """``Laplacian(z) = s(z) I + B(z)`` with ``B`` zero on the diagonal."""

    s: LaurentPoly
    B: LaurentMatrix


@dataclass
class BandSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    labeling: str = "sorted"


@dataclass(frozen=True)
class AnnulusSpec:
    """``{z : |log|z_j|| < rho for all j}``."""

    rho: float

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=complex)
        if np.any(z == 0):
            return False
        return bool(np.all(np.abs(np.log(np.abs(z))) < self.rho))


def _hop_entries(model: LatticeModel, wrap=None):
    d = model.d
    cells = model.cells
    entries = [[LaurentPoly(d) for _ in cells] for _ in cells]
    for w in cells:
        row = model.index(w)
        for j, pj in enumerate(model.p):
            for step in (1, -1):
                target = list(w)
                target[j] += step
                power = 0
                if target[j] == pj:
                    target[j] = 0
                    power = 1
                elif target[j] < 0:
                    target[j] = pj - 1
                    power = -1
                mono = LaurentPoly.variable(d, j, power) if power else LaurentPoly.constant(d, 1)
                if power and wrap is not None:
                    mono = wrap(mono, j, power)
                col = model.index(target)
                entries[row][col] = entries[row][col] + mono
    return LaurentMatrix(entries)


@lru_cache(maxsize=64)
def floquet_laplacian(model: LatticeModel) -> LaurentMatrix:
    """Symbolic Floquet Laplacian, contributions to one entry accumulated."""
    return _hop_entries(model)


@lru_cache(maxsize=64)
def decompose(model: LatticeModel) -> HoppingDecomposition:
    d = model.d
    s = LaurentPoly(d)
    for j, pj in enumerate(model.p):
        if pj == 1:
            s = s + LaurentPoly.variable(d, j, 1) + LaurentPoly.variable(d, j, -1)
    lap = floquet_laplacian(model)
    B = lap - LaurentMatrix.scalar(model.P, s)
    for n, e in enumerate(B.diagonal()):
        if not e.is_zero():
            raise NonzeroDiagonalResidual(f"B[{n},{n}] = {e} after removing s(z)")
    return HoppingDecomposition(s=s, B=B)


def _check_z(model, z):
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != model.d:
        raise DimensionMismatch(f"z has {z.shape[0]} components, model has d={model.d}")
    if np.any(z == 0):
        raise ZeroVariable("quasimomentum components must be nonzero")
    return z


def assemble(model: LatticeModel, eps, z) -> FloquetMatrix:
    """Numeric ``eps * Laplacian(z) + diag(V)``."""
    z = _check_z(model, z)
    a = eps * floquet_laplacian(model).evaluate(z) + np.diag(model.potential)
    return FloquetMatrix(entries=a, model=model, eps=eps, z=tuple(z))


def torus_hamiltonians(model: LatticeModel, mu, theta) -> np.ndarray:
    """``Laplacian(exp(i theta)) + mu diag(V)`` for a batch ``theta`` of shape ``(..., d)``."""
    theta = np.asarray(theta, dtype=float)
    h = floquet_laplacian(model).evaluate_torus(theta)
    idx = np.arange(model.P)
    h[..., idx, idx] += mu * model.potential
    return h


def hermitian_bands(model: LatticeModel, mu, theta) -> BandSpectrum:
    """Sorted real bands and orthonormal eigenvectors of ``H_mu(exp(i theta))``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != model.d:
        raise DimensionMismatch(f"theta has {theta.shape[0]} components, d={model.d}")
    h = torus_hamiltonians(model, mu, theta)
    try:
        lam, vec = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    scale = max(np.linalg.norm(h, 2), 1.0)
    resid = np.linalg.norm(h @ vec - vec * lam, axis=0)
    if np.any(resid > 1e-10 * scale):
        raise EigensolverFailure(f"eigenpair residual {resid.max():.3e} too large")
    return BandSpectrum(eigenvalues=lam, eigenvectors=vec, labeling="sorted")


def general_spectrum(model: LatticeModel, eps, z, rho0=None) -> BandSpectrum:
    """Complex eigenvalues of ``A_eps(z)`` at an arbitrary nonzero ``z``.

    With ``rho0`` given, ``z`` must lie in the annulus of radius ``2 rho0``.
    """
    z = _check_z(model, z)
    if rho0 is not None and not AnnulusSpec(2 * rho0).contains(z):
        raise ValueError(f"z={z} lies outside the annulus of radius {2 * rho0}")
    a = assemble(model, eps, z).entries
    try:
        lam, vec = scipy.linalg.eig(a)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    vec = vec / np.linalg.norm(vec, axis=0)
    scale = max(np.linalg.norm(a, 2), 1.0)
    resid = np.linalg.norm(a @ vec - vec * lam, axis=0)
    if np.any(resid > 1e-9 * scale):
        raise EigensolverFailure(f"eigenpair residual {resid.max():.3e} too large")
    return BandSpectrum(eigenvalues=lam, eigenvectors=vec, labeling="unlabeled")


def gershgorin_discs(model: LatticeModel, eps, z):
    """Centers and radii of the row Gershgorin discs of ``A_eps(z)``."""
    a = assemble(model, eps, z).entries
    centers = np.diag(a).copy()
    radii = np.abs(a).sum(axis=1) - np.abs(centers)
    return centers, radii


def _label_permutation(eigenvalues, centers, radii):
    P = len(centers)
    gaps = np.abs(centers[:, None] - centers[None, :])
    reach = radii[:, None] + radii[None, :]
    off = ~np.eye(P, dtype=bool)
    if np.any(gaps[off] <= reach[off]):
        raise DiscOverlap("Gershgorin discs of the Floquet matrix intersect")
    slack = 1e-12 * max(1.0, float(np.abs(centers).max()))
    perm = np.full(P, -1)
    for k, lam in enumerate(eigenvalues):
        inside = np.nonzero(np.abs(lam - centers) <= radii + slack)[0]
        if len(inside) != 1 or perm[inside[0]] != -1:
            raise AmbiguousAssignment(f"eigenvalue {lam} matches discs {inside.tolist()}")
        perm[inside[0]] = k
    return perm


def label_by_potential(spectrum: BandSpectrum, model: LatticeModel, eps, z) -> np.ndarray:
    """Eigenvalues reordered so entry ``index(w)`` is the band continued from ``V(w)``.

    Each eigenvalue is matched to the unique Gershgorin disc containing it; the
    discs must be pairwise disjoint.
    """
    centers, radii = gershgorin_discs(model, eps, z)
    perm = _label_permutation(np.asarray(spectrum.eigenvalues), centers, radii)
    return np.asarray(spectrum.eigenvalues)[perm]


def diagonalizer(model: LatticeModel, eps, z):
    """``(Q, Q^{-1}, eta)`` with ``Q^{-1} A_eps(z) Q = diag(eta)``.

    Column ``n`` of ``Q`` is the eigenvector continued from ``e_n`` and scaled so
    its ``n``-th entry is 1.
    """
    spec = general_spectrum(model, eps, z)
    centers, radii = gershgorin_discs(model, eps, z)
    perm = _label_permutation(spec.eigenvalues, centers, radii)
    eta = spec.eigenvalues[perm]
    q = spec.eigenvectors[:, perm]
    pivots = np.diag(q).copy()
    if np.any(np.abs(pivots) < 1e-8):
        raise SingularQ("eigenvector has a vanishing self-component")
    q = q / pivots
    try:
        qinv = np.linalg.inv(q)
    except np.linalg.LinAlgError as exc:
        raise SingularQ(str(exc)) from exc
    a = assemble(model, eps, z).entries
    err = np.linalg.norm(q @ np.diag(eta) @ qinv - a)
    if err > 1e-9 * max(np.linalg.norm(a), 1.0):
        raise SingularQ(f"reconstruction error {err:.3e}")
    return q, qinv, eta


def periodic_box_matrix(model: LatticeModel, eps, ncells) -> np.ndarray:
    """``eps * Laplacian + V`` on the torus of ``ncells[j] * p_j`` sites per direction."""
    sides = tuple(n * pj for n, pj in zip(ncells, model.p))
    size = int(np.prod(sides))
    coords = np.stack(np.meshgrid(*[np.arange(s) for s in sides], indexing="ij"), -1)
    coords = coords.reshape(-1, model.d)
    h = np.diag([float(model.V(tuple(c))) for c in coords]).astype(complex)
    for j, side in enumerate(sides):
        nxt = coords.copy()
        nxt[:, j] = (nxt[:, j] + 1) % side
        cols = np.ravel_multi_index(tuple(nxt.T), sides)
        np.add.at(h, (np.arange(size), cols), eps)
        np.add.at(h, (cols, np.arange(size)), eps)
    return h


def finite_volume_consistency(model: LatticeModel, eps=0.3, ncells=5, laplacian=None,
                              tol=1e-9) -> float:
    """Mismatch between the periodic-box spectrum and the Floquet spectra at roots of unity.

    Returns the largest gap between the two sorted multisets; a correct
    wraparound convention gives a value at rounding level.  ``laplacian``
    replaces the Floquet Laplacian (used to check that a corrupted one is caught).
    """
    ncells = (ncells,) * model.d if np.isscalar(ncells) else tuple(ncells)
    lap = floquet_laplacian(model) if laplacian is None else laplacian
    roots = [np.exp(2j * np.pi * np.arange(n) / n) for n in ncells]
    zs = np.stack(np.meshgrid(*roots, indexing="ij"), -1).reshape(-1, model.d)
    mats = eps * lap.evaluate(zs) + np.diag(model.potential)
    floq = np.sort(np.linalg.eigvals(mats).real.reshape(-1))
    box = np.sort(np.linalg.eigvalsh(periodic_box_matrix(model, eps, ncells)))
    return float(np.max(np.abs(floq - box)))
