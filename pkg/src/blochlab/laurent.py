"""Exact multivariate Laurent polynomials in ``z_1, ..., z_d``.

Coefficients are :class:`fractions.Fraction` or, for complexified polynomials
(theta-derivatives), :class:`GaussRational`.  Variables are indexed from 0.
Polynomials are immutable and kept in canonical form: no zero coefficients,
terms ordered lexicographically by exponent vector.
"""
from __future__ import annotations

import json
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, ZeroVariable

__all__ = ["GaussRational", "LaurentPoly", "LaurentMatrix"]


class GaussRational:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _parts(other):
        if isinstance(other, GaussRational):
            return other.re, other.im
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussRational(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussRational(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = o
        return GaussRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussRational(self.re / other, self.im / other)
        o = self._parts(other)
        if o is None:
            return NotImplemented
        c, d = o
        den = c * c + d * d
        return self * GaussRational(c / den, -d / den)

    def __eq__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __hash__(self):
        return hash(self.re) if self.im == 0 else hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return GaussRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"


def _conj(c):
    return c.conjugate() if isinstance(c, GaussRational) else c


def _to_coeff(c):
    if isinstance(c, (Fraction, GaussRational)):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact, got {type(c).__name__}")


class LaurentPoly:
    """Finite sum ``sum_k c_k z^k`` over exponent vectors ``k`` in Z^d."""

    def __init__(self, d: int, terms=None):
        self.d = int(d)
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(kj) for kj in k)
            if len(k) != self.d:
                raise DimensionMismatch(f"exponent {k} has length != {self.d}")
            c = _to_coeff(c)
            if c != 0:
                clean[k] = c
        self._terms = dict(sorted(clean.items()))

    # constructors
    @classmethod
    def zero(cls, d):
        return cls(d)

    @classmethod
    def constant(cls, d, c):
        return cls(d, {(0,) * d: c})

    @classmethod
    def monomial(cls, d, k, c=1):
        return cls(d, {tuple(k): c})

    @classmethod
    def variable(cls, d, j, power=1):
        k = [0] * d
        k[j] = power
        return cls(d, {tuple(k): 1})

    # container protocol
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, k):
        return self._terms.get(tuple(k), Fraction(0))

    def constant_term(self):
        return self.coefficient((0,) * self.d)

    def is_constant(self) -> bool:
        return all(not any(k) for k in self._terms)

    # ring operations
    def _check(self, other):
        if other.d != self.d:
            raise DimensionMismatch(f"d={self.d} vs d={other.d}")

    def _lift(self, other):
        if isinstance(other, LaurentPoly):
            self._check(other)
            return other
        return LaurentPoly.constant(self.d, _to_coeff(other))

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return LaurentPoly(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.d, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return self.scale(other)
        self._check(other)
        out = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + c1 * c2
        return LaurentPoly(self.d, out)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c):
        c = _to_coeff(c)
        if c == 0:
            return LaurentPoly(self.d)
        return LaurentPoly(self.d, {k: c * v for k, v in self._terms.items()})

    def __truediv__(self, c):
        if isinstance(c, LaurentPoly):
            # division only by constants: no polynomial division in this ring
            if not c.is_constant() or c.is_zero():
                raise TypeError("can only divide by a nonzero constant")
            c = c.constant_term()
        c = _to_coeff(c)
        if isinstance(c, Fraction):
            return self.scale(1 / c)
        return LaurentPoly(self.d, {k: v / c for k, v in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self.d == other.d and self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussRational)):
            return self == LaurentPoly.constant(self.d, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.d, tuple(self._terms.items())))

    # structure
    def depends_on(self, j: int) -> bool:
        return any(k[j] != 0 for k in self._terms)

    def variables(self) -> set[int]:
        return {j for j in range(self.d) if self.depends_on(j)}

    def conjugate_reflection(self) -> "LaurentPoly":
        """The polynomial whose values on the torus are the complex conjugates."""
        return LaurentPoly(
            self.d, {tuple(-kj for kj in k): _conj(c) for k, c in self._terms.items()}
        )

    def is_real_on_torus(self) -> bool:
        """True iff ``c_{-k} == conj(c_k)`` for all ``k``."""
        return self == self.conjugate_reflection()

    def has_real_coefficients(self) -> bool:
        return all(
            not isinstance(c, GaussRational) or c.im == 0 for c in self._terms.values()
        )

    def theta_derivative(self, i: int) -> "LaurentPoly":
        """``d/d theta_i`` after substituting ``z = exp(i theta)``: ``c z^k -> i k_i c z^k``."""
        if not 0 <= i < self.d:
            raise DimensionMismatch(f"variable index {i} out of range for d={self.d}")
        unit = GaussRational(0, 1)
        return LaurentPoly(
            self.d, {k: unit * (k[i] * c) for k, c in self._terms.items() if k[i]}
        )

    def substitute_shift(self, j: int, power: int) -> "LaurentPoly":
        """Multiply by ``z_j**power``."""
        return self * LaurentPoly.variable(self.d, j, power)

    # evaluation
    def evaluate(self, z):
        """Value at a single point ``z`` (sequence of d nonzero numbers).

        Exact (a Fraction or GaussRational) when every ``z_j`` is rational and
        every coefficient exact; complex otherwise.
        """
        z = tuple(z)
        if len(z) != self.d:
            raise DimensionMismatch(f"point of length {len(z)} for d={self.d}")
        if any(zj == 0 for zj in z):
            raise ZeroVariable("Laurent polynomials are undefined at z_j = 0")
        exact = all(isinstance(zj, (int, Fraction)) for zj in z)
        if exact:
            z = tuple(Fraction(zj) for zj in z)
            total = Fraction(0)
            for k, c in self._terms.items():
                term = c
                for zj, kj in zip(z, k):
                    term = term * zj**kj
                total += term
            return total
        total = 0j
        for k, c in self._terms.items():
            term = complex(c)
            for zj, kj in zip(z, k):
                term *= complex(zj) ** kj
            total += term
        return total

    @cached_property
    def _compiled(self):
        if not self._terms:
            return np.zeros((0, self.d), dtype=np.int64), np.zeros(0, dtype=complex)
        exps = np.array(list(self._terms), dtype=np.int64).reshape(-1, self.d)
        coefs = np.array([complex(c) for c in self._terms.values()])
        return exps, coefs

    def evaluate_many(self, z) -> np.ndarray:
        """Vectorized floating evaluation; ``z`` has shape ``(..., d)``."""
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.d:
            raise DimensionMismatch(f"points of length {z.shape[-1]} for d={self.d}")
        if np.any(z == 0):
            raise ZeroVariable("Laurent polynomials are undefined at z_j = 0")
        exps, coefs = self._compiled
        return np.exp(np.log(z) @ exps.T) @ coefs

    def evaluate_torus(self, theta) -> np.ndarray:
        """Floating evaluation at ``z = exp(i theta)``; ``theta`` has shape ``(..., d)``."""
        theta = np.asarray(theta, dtype=float)
        exps, coefs = self._compiled
        return np.exp(1j * (theta @ exps.T)) @ coefs

    # serialization
    def to_dict(self) -> dict:
        rows = []
        for k, c in self._terms.items():
            if isinstance(c, GaussRational):
                row = {"k": list(k), "num": str(c.re.numerator), "den": str(c.re.denominator)}
                if c.im != 0:
                    row["im_num"] = str(c.im.numerator)
                    row["im_den"] = str(c.im.denominator)
            else:
                row = {"k": list(k), "num": str(c.numerator), "den": str(c.denominator)}
            rows.append(row)
        return {"terms": rows}

    @classmethod
    def from_dict(cls, d: int, data: dict) -> "LaurentPoly":
        terms = {}
        for row in data["terms"]:
            c = Fraction(int(row["num"]), int(row["den"]))
            if "im_num" in row:
                c = GaussRational(c, Fraction(int(row["im_num"]), int(row["im_den"])))
            terms[tuple(row["k"])] = c
        return cls(d, terms)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    # display
    def __repr__(self):
        return f"LaurentPoly({self.d}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for k, c in self._terms.items():
            mono = "*".join(
                f"z{j + 1}" if kj == 1 else f"z{j + 1}^{kj}" for j, kj in enumerate(k) if kj
            )
            if isinstance(c, GaussRational):
                cs = f"({c.re}{'+' if c.im >= 0 else '-'}{abs(c.im)}i)"
            else:
                cs = str(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


class LaurentMatrix:
    """Square matrix of Laurent polynomials, rows/columns indexed by the cell."""

    def __init__(self, entries):
        entries = [list(row) for row in entries]
        n = len(entries)
        if n == 0 or any(len(row) != n for row in entries):
            raise DimensionMismatch("LaurentMatrix must be square and nonempty")
        d = entries[0][0].d
        for row in entries:
            for e in row:
                if e.d != d:
                    raise DimensionMismatch("mixed variable counts in LaurentMatrix")
        self.d = d
        self.size = n
        self._entries = entries

    @classmethod
    def zeros(cls, size, d):
        return cls([[LaurentPoly(d) for _ in range(size)] for _ in range(size)])

    @classmethod
    def scalar(cls, size, poly):
        d = poly.d
        return cls(
            [[poly if i == j else LaurentPoly(d) for j in range(size)] for i in range(size)]
        )

    def __getitem__(self, ij):
        i, j = ij
        return self._entries[i][j]

    def rows(self):
        return [list(row) for row in self._entries]

    def __add__(self, other):
        return LaurentMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._entries, other._entries)]
        )

    def __sub__(self, other):
        return LaurentMatrix(
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self._entries, other._entries)]
        )

    def scale(self, c):
        return LaurentMatrix([[e.scale(c) for e in row] for row in self._entries])

    def __eq__(self, other):
        if not isinstance(other, LaurentMatrix):
            return NotImplemented
        return self._entries == other._entries

    def diagonal(self):
        return [self._entries[i][i] for i in range(self.size)]

    def map(self, fn):
        return LaurentMatrix([[fn(e) for e in row] for row in self._entries])

    def theta_derivative(self, i):
        return self.map(lambda e: e.theta_derivative(i))

    @cached_property
    def _compiled(self):
        rows, cols, exps, coefs = [], [], [], []
        for a, row in enumerate(self._entries):
            for b, e in enumerate(row):
                for k, c in e.items():
                    rows.append(a)
                    cols.append(b)
                    exps.append(k)
                    coefs.append(complex(c))
        return (
            np.array(rows, dtype=np.int64),
            np.array(cols, dtype=np.int64),
            np.array(exps, dtype=np.int64).reshape(-1, self.d),
            np.array(coefs, dtype=complex),
        )

    def _scatter(self, phases):
        rows, cols, _, coefs = self._compiled
        batch = phases.shape[:-1]
        out = np.zeros(batch + (self.size * self.size,), dtype=complex)
        flat = rows * self.size + cols
        vals = phases * coefs
        for t in range(len(coefs)):
            out[..., flat[t]] += vals[..., t]
        return out.reshape(batch + (self.size, self.size))

    def evaluate(self, z) -> np.ndarray:
        """Numeric matrix at ``z``; ``z`` may carry leading batch axes ``(..., d)``."""
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.d:
            raise DimensionMismatch(f"points of length {z.shape[-1]} for d={self.d}")
        if np.any(z == 0):
            raise ZeroVariable("Laurent polynomials are undefined at z_j = 0")
        _, _, exps, _ = self._compiled
        return self._scatter(np.exp(np.log(z) @ exps.T))

    def evaluate_torus(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        _, _, exps, _ = self._compiled
        return self._scatter(np.exp(1j * (theta @ exps.T)))

    def __str__(self):
        return "\n".join("[" + ", ".join(str(e) for e in row) + "]" for row in self._entries)
