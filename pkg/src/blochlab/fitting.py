"""Least-squares power-law fits ``y ~ A x**k``."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InsufficientPoints


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r2: float
    residual: float
    npoints: int

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.intercept))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["prefactor"] = self.prefactor
        return out


def linear_fit(x, y) -> PowerLawFit:
    """Ordinary least squares ``y = slope * x + intercept`` with R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InsufficientPoints("need at least two points for a line")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2, float(np.sqrt(ss_res / x.size)), x.size)


def loglog_fit(x, y) -> PowerLawFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return linear_fit(np.log(x), np.log(y))
