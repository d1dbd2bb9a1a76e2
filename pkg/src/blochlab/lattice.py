"""Periodic potentials on Z^d and the bookkeeping around the fundamental cell.

A potential with periods ``p = (p_1, ..., p_d)`` is stored by its values on the
cell ``W = [p_1] x ... x [p_d]``.  Cell offsets are ordered row-major
(lexicographically in ``(w_1, ..., w_d)``); that order is the one index map
used by every matrix and every output column in the package.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ConfigError, DegeneratePotential, ShapeMismatch

__all__ = [
    "LatticeModel",
    "CellCoordinate",
    "build_model",
    "separation",
    "split_coordinate",
    "epsilon0",
    "to_fraction",
]


def to_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats are read through their shortest decimal literal, so ``0.1`` becomes
    ``1/10`` rather than the binary approximation.
    """
    if isinstance(value, bool):
        raise ConfigError(f"not a number: {value!r}")
    if isinstance(value, (int, Fraction, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"non-finite potential value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise ConfigError(f"cannot parse {value!r} as a rational") from exc
    raise ConfigError(f"unsupported potential value type {type(value).__name__}")


@dataclass(frozen=True)
class CellCoordinate:
    """Decomposition ``n = w + x * p`` of a lattice site (``*`` componentwise)."""

    x: tuple[int, ...]
    w: tuple[int, ...]

    def site(self, p) -> tuple[int, ...]:
        return tuple(wj + xj * pj for wj, xj, pj in zip(self.w, self.x, p))


@dataclass(frozen=True)
class LatticeModel:
    d: int
    p: tuple[int, ...]
    values: tuple[Fraction, ...]
    sep: Fraction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1 or len(self.p) != self.d:
            raise ShapeMismatch(f"period vector {self.p} does not match d={self.d}")
        if any(pj < 1 for pj in self.p):
            raise ConfigError(f"periods must be positive, got {self.p}")
        if len(self.values) != math.prod(self.p):
            raise ShapeMismatch(
                f"expected {math.prod(self.p)} potential values, got {len(self.values)}"
            )
        if len(set(self.values)) != len(self.values):
            seen = {}
            for i, v in enumerate(self.values):
                if v in seen:
                    raise DegeneratePotential(
                        f"V{self.cells[seen[v]]} = V{self.cells[i]} = {v}"
                    )
                seen[v] = i
        vals = sorted(self.values)
        gap = min((b - a for a, b in zip(vals, vals[1:])), default=None)
        # a one-site cell has no pair; its separation is left infinite
        object.__setattr__(self, "sep", gap)

    @property
    def P(self) -> int:
        return len(self.values)

    @property
    def p0(self) -> int:
        return min(self.p)

    @property
    def cells(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(pj) for pj in self.p)))

    def index(self, w) -> int:
        """Row-major position of the cell offset ``w``."""
        i = 0
        for wj, pj in zip(w, self.p):
            if not 0 <= wj < pj:
                raise ConfigError(f"offset {tuple(w)} is outside the cell {self.p}")
            i = i * pj + wj
        return i

    def V(self, n) -> Fraction:
        """Potential at any site ``n`` of Z^d (periodic extension)."""
        return self.values[self.index(split_coordinate(self, n).w)]

    @property
    def potential(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def scaled(self, mu) -> "LatticeModel":
        mu = to_fraction(mu)
        return LatticeModel(self.d, self.p, tuple(mu * v for v in self.values))

    def describe(self) -> str:
        vals = ", ".join(str(v) for v in self.values)
        return f"d={self.d}, p={self.p}, V=({vals})"


def build_model(d: int, p, values) -> LatticeModel:
    """Construct a non-degenerate p-periodic potential from row-major values."""
    if isinstance(p, int):
        p = (p,)
    p = tuple(int(pj) for pj in p)
    if int(d) != len(p):
        raise ShapeMismatch(f"d={d} but {len(p)} periods given")
    values = tuple(to_fraction(v) for v in values)
    return LatticeModel(int(d), p, values)


def separation(model: LatticeModel):
    """Smallest gap between distinct potential values on the cell.

    A one-site cell has no pairs; its separation is ``math.inf``.
    """
    return math.inf if model.sep is None else model.sep


def split_coordinate(model: LatticeModel, n) -> CellCoordinate:
    n = tuple(int(nj) for nj in n)
    if len(n) != model.d:
        raise ShapeMismatch(f"site {n} has wrong dimension for d={model.d}")
    x, w = zip(*(divmod(nj, pj) for nj, pj in zip(n, model.p)))
    return CellCoordinate(x=tuple(x), w=tuple(w))


def epsilon0(model: LatticeModel, rho0: float) -> float:
    """Coupling radius ``sep V / (8 d (1 + cosh 2 rho0))`` of simple, labelable spectrum."""
    if rho0 <= 0:
        raise ConfigError("rho0 must be positive")
    return float(separation(model)) / (8 * model.d * (1 + math.cosh(2 * rho0)))
