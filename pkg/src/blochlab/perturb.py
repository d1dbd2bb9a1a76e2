"""Exact Rayleigh-Schroedinger series for Floquet eigenvalues, plus path oracles.

The Floquet matrix is split as ``A_eps(z) = D + eps * s(z) I + eps * B(z)``
with ``D = diag V`` and ``B`` zero on the diagonal.  The scalar part only
shifts every band by ``eps * s(z)``, so the recursion runs on ``(D, B)`` and the
shift is added back on evaluation.

Two independent routes to the same coefficients are provided:

* :func:`rs_expand`, the vector recursion for eigenvalue/eigenvector
  coefficients (eigenvectors normalized so that their own component is 1);
* :func:`loop_expansion`, a sum over labeled loops on the quotient multigraph
  weighted by path coefficients built from amalgamation of shorter paths.

:func:`eta2_oracle` and :func:`eta3_oracle` evaluate the closed second- and
third-order sums directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CombinatorialBlowup, InvariantViolation
from .floquet import decompose, general_spectrum, label_by_potential
from .lattice import LatticeModel, build_model
from .laurent import LaurentPoly

__all__ = [
    "RSExpansion",
    "LoopRecord",
    "rs_expand",
    "rs_eval",
    "rs_coefficients_at",
    "eta2_oracle",
    "eta3_oracle",
    "enumerate_loops",
    "loop_expansion",
    "straight_loop_constant",
    "verify_low_order",
    "LowOrderReport",
    "truncation_errors",
    "observed_order",
]

SYMBOLIC_ORDER_CAP = 6
LOOP_LENGTH_CAP = 8
LOOP_CELL_CAP = 12


@dataclass
class RSExpansion:
    """Series coefficients per cell offset.

    ``eta[n][r]`` is the order-``r`` eigenvalue coefficient of the band
    continued from cell position ``n`` (canonical index); ``u[n][r][m]`` the
    ``m``-th component of its eigenvector coefficient.  ``shift`` is ``s(z)``;
    the full order-1 coefficient is ``eta[n][1] + shift``.
    """

    model: LatticeModel
    order: int
    eta: list
    u: list
    shift: LaurentPoly

    def full_eta(self, n: int, r: int) -> LaurentPoly:
        c = self.eta[n][r]
        return c + self.shift if r == 1 else c

    def to_dict(self) -> dict:
        m = self.model
        return {
            "model": {"d": m.d, "p": list(m.p), "values": [str(v) for v in m.values]},
            "order": self.order,
            "shift": self.shift.to_dict(),
            "bands": [
                {
                    "cell": list(w),
                    "eta": [c.to_dict() for c in self.eta[i]],
                    "u": [[c.to_dict() for c in vec] for vec in self.u[i]],
                }
                for i, w in enumerate(m.cells)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RSExpansion":
        md = data["model"]
        model = build_model(md["d"], md["p"], md["values"])
        d = model.d
        eta = [[LaurentPoly.from_dict(d, c) for c in b["eta"]] for b in data["bands"]]
        u = [
            [[LaurentPoly.from_dict(d, c) for c in vec] for vec in b["u"]]
            for b in data["bands"]
        ]
        return cls(model, data["order"], eta, u, LaurentPoly.from_dict(d, data["shift"]))


def _hopping(model):
    dec = decompose(model)
    P = model.P
    rows = [[(m, dec.B[a, m]) for m in range(P) if not dec.B[a, m].is_zero()] for a in range(P)]
    return dec, rows


def rs_expand(model: LatticeModel, R: int, cap: int = SYMBOLIC_ORDER_CAP) -> RSExpansion:
    """Exact series coefficients up to order ``R`` for every band."""
    if R < 0:
        raise ValueError("order must be non-negative")
    if R > cap:
        raise CombinatorialBlowup(
            f"symbolic order {R} exceeds cap {cap}; use rs_coefficients_at for fixed z"
        )
    dec, rows = _hopping(model)
    d, P = model.d, model.P
    D = model.values
    zero = LaurentPoly(d)
    all_eta, all_u = [], []
    for n in range(P):
        u = [[LaurentPoly.constant(d, 1) if m == n else zero for m in range(P)]]
        eta = [LaurentPoly.constant(d, D[n])]
        for r in range(1, R + 1):
            prev = u[r - 1]
            eta.append(sum((b * prev[m] for m, b in rows[n] if m != n), zero))
            vec = []
            for m in range(P):
                if m == n:
                    vec.append(zero)
                    continue
                acc = sum((b * prev[l] for l, b in rows[m]), zero)
                for s in range(2, r):
                    if not eta[s].is_zero():
                        acc = acc - eta[s] * u[r - s][m]
                vec.append(acc.scale(1 / (D[n] - D[m])))
            u.append(vec)
        all_eta.append(eta)
        all_u.append(u)
    return RSExpansion(model, R, all_eta, all_u, dec.s)


def rs_eval(expansion: RSExpansion, eps, z) -> np.ndarray:
    """Truncated series ``sum_r eta^(r)(z) eps^r + eps s(z)`` for every cell."""
    z = tuple(complex(zj) for zj in np.atleast_1d(z))
    out = np.empty(expansion.model.P, dtype=complex)
    shift = expansion.shift.evaluate(z) if expansion.shift else 0.0
    for n, coeffs in enumerate(expansion.eta):
        total = eps * shift
        for r, c in enumerate(coeffs):
            if not c.is_zero():
                total += complex(c.evaluate(z)) * eps**r
        out[n] = total
    return out


def truncation_errors(expansion: RSExpansion, eps_values, z) -> np.ndarray:
    """``max_n |rs_eval - eta_n|`` against the potential-labeled eigenvalues."""
    model = expansion.model
    out = []
    for eps in eps_values:
        exact = label_by_potential(general_spectrum(model, eps, z), model, eps, z)
        out.append(float(np.max(np.abs(rs_eval(expansion, eps, z) - exact))))
    return np.array(out)


def observed_order(expansion: RSExpansion, eps, z, halvings=3) -> np.ndarray:
    """``log2`` of successive error ratios as ``eps`` is halved ``halvings`` times."""
    eps_values = eps * 0.5 ** np.arange(halvings + 1)
    err = truncation_errors(expansion, eps_values, z)
    return np.log2(err[:-1] / err[1:])


def rs_coefficients_at(model: LatticeModel, R: int, z) -> np.ndarray:
    """Floating series coefficients at a fixed ``z``; shape ``(P, R + 1)``.

    Same recursion as :func:`rs_expand` with ``B(z)`` evaluated first, which
    keeps high orders cheap.  The order-1 column includes the scalar shift.
    """
    dec = decompose(model)
    z = np.asarray(z, dtype=complex).reshape(-1)
    B = dec.B.evaluate(z)
    s = complex(dec.s.evaluate(tuple(z))) if dec.s else 0.0
    D = model.potential
    P = model.P
    out = np.zeros((P, R + 1), dtype=complex)
    for n in range(P):
        denom = D[n] - D
        denom[n] = 1.0
        u = [np.eye(P, dtype=complex)[n]]
        out[n, 0] = D[n]
        for r in range(1, R + 1):
            out[n, r] = B[n] @ u[r - 1]
            acc = B @ u[r - 1]
            for s_ in range(2, r):
                acc = acc - out[n, s_] * u[r - s_]
            vec = acc / denom
            vec[n] = 0.0
            u.append(vec)
        if R >= 1:
            out[n, 1] += s
    return out


def eta2_oracle(model: LatticeModel, n: int) -> LaurentPoly:
    """Closed form ``sum_{m != n} B_nm B_mn / (D_n - D_m)``."""
    B = decompose(model).B
    D = model.values
    total = LaurentPoly(model.d)
    for m in range(model.P):
        if m != n:
            total = total + (B[n, m] * B[m, n]).scale(1 / (D[n] - D[m]))
    return total


def eta3_oracle(model: LatticeModel, n: int) -> LaurentPoly:
    """Closed form ``sum_{m, m1 != n} B_nm B_mm1 B_m1n / ((D_n - D_m)(D_n - D_m1))``."""
    B = decompose(model).B
    D = model.values
    total = LaurentPoly(model.d)
    for m in range(model.P):
        if m == n:
            continue
        for m1 in range(model.P):
            if m1 == n:
                continue
            prod = B[n, m] * B[m, m1] * B[m1, n]
            if not prod.is_zero():
                total = total + prod.scale(1 / ((D[n] - D[m]) * (D[n] - D[m1])))
    return total


@dataclass(frozen=True)
class LoopRecord:
    """A labeled closed walk on the quotient multigraph.

    ``vertices`` are canonical cell indices; ``monomial`` is the net winding
    exponent and ``coefficient`` the product of edge coefficients, so the
    walk contributes ``coefficient * z**monomial`` to ``B_gamma``.  ``weight``
    is the closed-form irreducible coefficient, ``None`` for reducible loops.
    """

    vertices: tuple
    monomial: tuple
    coefficient: Fraction
    irreducible: bool
    weight: Fraction | None = None


def _edges(model):
    """Multigraph edges ``a -> [(b, exponent, coefficient), ...]``, one per monomial of ``B_ab``."""
    B = decompose(model).B
    return [
        [(b, k, c) for b in range(model.P) for k, c in B[a, b].items()]
        for a in range(model.P)
    ]


def _check_caps(model, r):
    if r > LOOP_LENGTH_CAP or model.P > LOOP_CELL_CAP:
        raise CombinatorialBlowup(
            f"loop enumeration capped at length {LOOP_LENGTH_CAP} and {LOOP_CELL_CAP} cells"
        )


def enumerate_loops(model: LatticeModel, n: int, r: int) -> list[LoopRecord]:
    """All labeled loops of length ``r`` based at cell index ``n``."""
    if r < 1:
        raise ValueError("loop length must be at least 1")
    _check_caps(model, r)
    edges = _edges(model)
    D = model.values
    zero_k = (0,) * model.d
    out = []

    def walk(path, k, coef):
        if len(path) == r + 1:
            if path[-1] == n:
                irreducible = n not in path[1:-1]
                weight = None
                if irreducible:
                    weight = Fraction(1)
                    for v in path[1:-1]:
                        weight /= D[n] - D[v]
                out.append(LoopRecord(tuple(path), k, coef, irreducible, weight))
            return
        for b, kb, cb in edges[path[-1]]:
            walk(path + [b], tuple(x + y for x, y in zip(k, kb)), coef * cb)

    walk([n], zero_k, Fraction(1))
    return out


def _path_weights(model: LatticeModel):
    """Memoized loop and path coefficients built by amalgamation.

    ``g(seq)`` is the coefficient of ``B_gamma`` in the eigenvector coefficient
    for a path ``seq`` ending at the base vertex; ``f(loop)`` that of a loop in
    the eigenvalue coefficient.
    """
    D = model.values

    @lru_cache(maxsize=None)
    def g(seq):
        m, n = seq[0], seq[-1]
        r = len(seq) - 1
        if m == n:
            return Fraction(1) if r == 0 else Fraction(0)
        val = g(seq[1:])
        for k in range(1, r - 1):
            if seq[k] == n:
                val -= f(seq[k:]) * g(seq[: k + 1])
        return val / (D[n] - D[m])

    @lru_cache(maxsize=None)
    def f(loop):
        return g(loop[1:])

    return f, g


def loop_expansion(model: LatticeModel, n: int, r: int) -> LaurentPoly:
    """``eta_n^(r)`` reassembled as ``sum_gamma f(gamma, D) B_gamma`` over labeled loops."""
    f, _ = _path_weights(model)
    terms = {}
    for loop in enumerate_loops(model, n, r):
        terms[loop.monomial] = terms.get(loop.monomial, 0) + f(loop.vertices) * loop.coefficient
    return LaurentPoly(model.d, terms)


def loop_weight(model: LatticeModel, vertices) -> Fraction:
    """Amalgamation-built coefficient of a loop (irreducible or not)."""
    f, _ = _path_weights(model)
    return f(tuple(vertices))


def straight_loop_constant(model: LatticeModel, n, j: int) -> Fraction:
    """``prod_{k=1}^{p_j-1} 1 / (V(n) - V(n + k e_j))``; 1 when ``p_j = 1``.

    ``n`` is a cell offset (tuple) or canonical index.
    """
    cells = model.cells
    w = cells[n] if isinstance(n, (int, np.integer)) else tuple(n)
    vn = model.V(w)
    c = Fraction(1)
    for k in range(1, model.p[j]):
        other = list(w)
        other[j] += k
        c /= vn - model.V(other)
    return c


@dataclass
class LowOrderReport:
    checks: list = field(default_factory=list)

    def add(self, name, ok, n=None, r=None, j=None, detail=""):
        self.checks.append({"check": name, "n": n, "r": r, "j": j, "ok": bool(ok), "detail": detail})

    @property
    def passed(self) -> bool:
        return all(c["ok"] for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c["ok"]]


def verify_low_order(expansion: RSExpansion, strict: bool = True) -> LowOrderReport:
    """Exact structure of the low-order coefficients.

    Checks, for every band ``n`` and direction ``j``: the order-0 term is
    ``V(n)``; the recursion's order-1 term vanishes; below order ``p_j`` the
    full coefficient does not involve ``z_j``; at order ``p_j`` the
    ``z_j**(+-1)`` coefficients equal the straight-loop constant, and what is
    left after removing ``c_{i,n}(z_i + 1/z_i)`` for every ``i`` with
    ``p_i = p_j`` involves only variables of strictly smaller period.  Every
    coefficient is checked to be real on the torus.
    """
    model = expansion.model
    rep = LowOrderReport()
    d = model.d
    for n, w in enumerate(model.cells):
        rep.add("eta0=V", expansion.eta[n][0] == LaurentPoly.constant(d, model.values[n]), n, 0)
        if expansion.order >= 1:
            rep.add("eta1=0", expansion.eta[n][1].is_zero(), n, 1)
        for r in range(expansion.order + 1):
            c = expansion.full_eta(n, r)
            rep.add("real-on-torus", c.is_real_on_torus() and c.has_real_coefficients(), n, r)
            if r < model.p0:
                rep.add("constant-below-p0", c.is_constant(), n, r)
        for j, pj in enumerate(model.p):
            for r in range(min(pj, expansion.order + 1)):
                c = expansion.full_eta(n, r)
                rep.add("independent-of-zj", not c.depends_on(j), n, r, j, str(c))
            if pj > expansion.order:
                continue
            c = expansion.full_eta(n, pj)
            cj = straight_loop_constant(model, w, j)
            e = [0] * d
            e[j] = 1
            plus, minus = tuple(e), tuple(-x for x in e)
            rep.add(
                "straight-loop-coefficient",
                c.coefficient(plus) == cj and c.coefficient(minus) == cj and cj != 0,
                n, pj, j, f"got {c.coefficient(plus)}, {c.coefficient(minus)}; expected {cj}",
            )
            resid = c
            same = [i for i, pi in enumerate(model.p) if pi == pj]
            for i in same:
                ci = straight_loop_constant(model, w, i)
                resid = resid - (
                    LaurentPoly.variable(d, i, 1) + LaurentPoly.variable(d, i, -1)
                ).scale(ci)
            allowed = {i for i, pi in enumerate(model.p) if pi < pj}
            ok = resid.variables() <= allowed
            if pj == 1:
                ok = ok and resid.is_zero()
            rep.add("residual-smaller-periods", ok, n, pj, j, str(resid))
    if strict and not rep.passed:
        bad = rep.failures[0]
        raise InvariantViolation(
            f"{bad['check']} failed at n={bad['n']}, r={bad['r']}, j={bad['j']}: {bad['detail']}",
            n=bad["n"], r=bad["r"], j=bad["j"],
        )
    return rep

