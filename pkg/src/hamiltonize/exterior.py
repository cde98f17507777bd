"""Coordinate exterior algebra: multivector fields and differential forms.

Tensors are sparse maps from strictly increasing index tuples to coefficient
expressions.  All sign conventions are anchored as documented in
``conventions``; in particular the contraction of a 1-form into a bivector
uses the first slot, ``i_a(A^B) = a(A) B - a(B) A``, and the interior product
of a decomposable multivector applies vector contractions right-to-left,
``i_{A^B} = i_A o i_B``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .expr import (
    Chart,
    EvalError,
    Expr,
    ExprError,
    RationalMatrix,
    compile_expr,
    diff,
    normalize,
    _nf_of,
)

__all__ = [
    "Tensor",
    "VolumeForm",
    "Metric",
    "ExteriorError",
    "wedge",
    "d",
    "interior",
    "sharp",
    "pairing",
    "lie_bracket",
    "schouten",
    "lie_derivative",
    "divergence",
    "rank_at",
    "vol_correspondence",
]


class ExteriorError(Exception):
    pass


MULTIVECTOR = "multivector"
FORM = "form"

_ZERO = Expr.number(0)


def _perm_sign(seq: Sequence[int]):
    """(sign, sorted tuple) of an index sequence; sign 0 on repeats."""
    seq = list(seq)
    sign = 1
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(seq, seq[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(seq)


@dataclass(frozen=True)
class Tensor:
    """Sparse graded tensor in one chart; absent index tuple means zero."""

    chart: Chart
    grade: int
    variance: str  # MULTIVECTOR or FORM
    entries: Mapping[tuple, Expr]

    def __post_init__(self):
        if self.variance not in (MULTIVECTOR, FORM):
            raise ExteriorError(f"unknown variance {self.variance!r}")
        if not 0 <= self.grade <= self.chart.m:
            raise ExteriorError(
                f"grade {self.grade} out of range for dimension {self.chart.m}"
            )
        cleaned = {}
        for idx, coeff in self.entries.items():
            idx = tuple(idx)
            if len(idx) != self.grade:
                raise ExteriorError(f"index {idx} does not match grade {self.grade}")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ExteriorError(f"index {idx} is not strictly increasing")
            if any(not 0 <= i < self.chart.m for i in idx):
                raise ExteriorError(f"index {idx} out of range")
            coeff = Expr._coerce(coeff)
            if coeff.node != _ZERO.node:
                cleaned[idx] = coeff
        object.__setattr__(self, "entries", cleaned)

    # -- constructors ---------------------------------------------------------
    @staticmethod
    def multivector(chart: Chart, grade: int, entries: Mapping) -> "Tensor":
        return Tensor(chart, grade, MULTIVECTOR, entries)

    @staticmethod
    def form(chart: Chart, grade: int, entries: Mapping) -> "Tensor":
        return Tensor(chart, grade, FORM, entries)

    @staticmethod
    def zero(chart: Chart, grade: int, variance: str) -> "Tensor":
        return Tensor(chart, grade, variance, {})

    @staticmethod
    def vector(chart: Chart, components: Sequence) -> "Tensor":
        return Tensor(
            chart,
            1,
            MULTIVECTOR,
            {(i,): c for i, c in enumerate(components)},
        )

    @staticmethod
    def basis_vector(chart: Chart, i: int) -> "Tensor":
        return Tensor(chart, 1, MULTIVECTOR, {(i,): Expr.number(1)})

    @staticmethod
    def basis_form(chart: Chart, i: int) -> "Tensor":
        return Tensor(chart, 1, FORM, {(i,): Expr.number(1)})

    @staticmethod
    def scalar(chart: Chart, value, variance: str = FORM) -> "Tensor":
        return Tensor(chart, 0, variance, {(): Expr._coerce(value)})

    # -- algebra ---------------------------------------------------------------
    def coeff(self, idx: tuple) -> Expr:
        return self.entries.get(tuple(idx), _ZERO)

    def component(self, i: int) -> Expr:
        if self.grade != 1:
            raise ExteriorError("component() applies to grade-1 tensors")
        return self.coeff((i,))

    def components(self) -> list:
        return [self.coeff((i,)) for i in range(self.chart.m)]

    def map_coefficients(self, fn) -> "Tensor":
        return Tensor(
            self.chart,
            self.grade,
            self.variance,
            {idx: fn(c) for idx, c in self.entries.items()},
        )

    def normalized(self) -> "Tensor":
        return self.map_coefficients(normalize)

    def is_structurally_zero(self) -> bool:
        return all(_nf_of(c).is_zero() for c in self.entries.values())

    def __add__(self, other: "Tensor") -> "Tensor":
        self._check_compatible(other)
        merged = dict(self.entries)
        for idx, c in other.entries.items():
            merged[idx] = merged[idx] + c if idx in merged else c
        return Tensor(self.chart, self.grade, self.variance, merged)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self + other.scaled(-1)

    def __neg__(self) -> "Tensor":
        return self.scaled(-1)

    def scaled(self, factor) -> "Tensor":
        factor = Expr._coerce(factor)
        return self.map_coefficients(lambda c: factor * c)

    def wedge(self, other: "Tensor") -> "Tensor":
        return wedge(self, other)

    def _check_compatible(self, other: "Tensor"):
        if self.chart is not other.chart and self.chart != other.chart:
            raise ExteriorError("chart mismatch")
        if self.variance != other.variance or self.grade != other.grade:
            raise ExteriorError("grade/variance mismatch")

    def to_json(self) -> dict:
        entries = [
            {"index": [i + 1 for i in idx], "coeff": str(normalize(c))}
            for idx, c in sorted(self.entries.items())
        ]
        return {"grade": self.grade, "variance": self.variance, "entries": entries}

    @staticmethod
    def from_json(chart: Chart, blob: Mapping) -> "Tensor":
        entries = {
            tuple(i - 1 for i in item["index"]): chart.parse(item["coeff"])
            for item in blob["entries"]
        }
        return Tensor(chart, blob["grade"], blob["variance"], entries)


@dataclass(frozen=True)
class VolumeForm:
    """Top-degree form E dx^1^...^dx^m with nonvanishing coefficient E."""

    chart: Chart
    coefficient: Expr

    def __post_init__(self):
        coeff = Expr._coerce(self.coefficient)
        object.__setattr__(self, "coefficient", coeff)
        if _nf_of(coeff).is_zero():
            raise ExteriorError("volume form coefficient is identically zero")

    @staticmethod
    def euclidean(chart: Chart) -> "VolumeForm":
        return VolumeForm(chart, Expr.number(1))

    def as_form(self) -> Tensor:
        m = self.chart.m
        return Tensor.form(self.chart, m, {tuple(range(m)): self.coefficient})

    def nonvanishing_assumption(self) -> str:
        return f"{normalize(self.coefficient)} != 0"


@dataclass(frozen=True)
class Metric:
    """Symmetric coefficient matrix with its exact inverse."""

    chart: Chart
    g: RationalMatrix
    eta: RationalMatrix  # exact inverse, verified at construction

    @staticmethod
    def from_matrix(chart: Chart, rows) -> "Metric":
        g = RationalMatrix(tuple(tuple(row) for row in rows))
        n, m = g.shape
        if n != m or n != chart.m:
            raise ExteriorError("metric must be a square matrix of chart dimension")
        for i in range(n):
            for j in range(i + 1, n):
                if not _nf_of(normalize(g.entry(i, j) - g.entry(j, i))).is_zero():
                    raise ExteriorError("metric matrix is not symmetric")
        return Metric(chart, g, g.inverse())

    @staticmethod
    def euclidean(chart: Chart) -> "Metric":
        one, zero = Expr.number(1), Expr.number(0)
        rows = tuple(
            tuple(one if i == j else zero for j in range(chart.m))
            for i in range(chart.m)
        )
        return Metric.from_matrix(chart, rows)

    def sharp(self, alpha: Tensor) -> Tensor:
        """Raise a 1-form with the inverse metric."""
        if alpha.grade != 1 or alpha.variance != FORM:
            raise ExteriorError("metric sharp expects a 1-form")
        comps = alpha.components()
        out = {}
        for i in range(self.chart.m):
            total = _ZERO
            for j in range(self.chart.m):
                total = total + self.eta.entry(i, j) * comps[j]
            out[(i,)] = total
        return Tensor.multivector(self.chart, 1, out)

    def inverse_pairing(self, alpha: Tensor, beta: Tensor) -> Expr:
        """eta(alpha, beta) for 1-forms."""
        a, b = alpha.components(), beta.components()
        total = _ZERO
        for i in range(self.chart.m):
            for j in range(self.chart.m):
                total = total + self.eta.entry(i, j) * a[i] * b[j]
        return total


# ---------------------------------------------------------------------------
# Graded operations
# ---------------------------------------------------------------------------


def wedge(a: Tensor, b: Tensor) -> Tensor:
    """Graded product; grade-0 factors act as scalars."""
    if a.chart != b.chart:
        raise ExteriorError("chart mismatch")
    if a.grade and b.grade and a.variance != b.variance:
        raise ExteriorError("variance mismatch")
    variance = a.variance if a.grade else b.variance
    grade = a.grade + b.grade
    if grade > a.chart.m:
        return Tensor.zero(a.chart, a.chart.m, variance)
    out: dict = {}
    for ia, ca in a.entries.items():
        for ib, cb in b.entries.items():
            sign, idx = _perm_sign(ia + ib)
            if sign == 0:
                continue
            term = ca * cb if sign > 0 else Expr.number(-1) * ca * cb
            out[idx] = out[idx] + term if idx in out else term
    return Tensor(a.chart, grade, variance, out)


def d(omega: Tensor) -> Tensor:
    """Exterior derivative of a form."""
    if omega.variance != FORM:
        raise ExteriorError("exterior derivative applies to forms")
    if omega.grade >= omega.chart.m:
        raise ExteriorError("exterior derivative of a top-degree form")
    out: dict = {}
    for idx, coeff in omega.entries.items():
        for v, name in enumerate(omega.chart.coords):
            if v in idx:
                continue
            dc = diff(coeff, name)
            if _nf_of(dc).is_zero():
                continue
            sign, nidx = _perm_sign((v,) + idx)
            term = dc if sign > 0 else Expr.number(-1) * dc
            out[nidx] = out[nidx] + term if nidx in out else term
    return Tensor(omega.chart, omega.grade + 1, FORM, out)


def _contract_once(i: int, idx: tuple):
    """i_{d/dx_i} dx^{idx}: (sign, remaining) or None."""
    if i not in idx:
        return None
    pos = idx.index(i)
    sign = 1 if pos % 2 == 0 else -1
    return sign, idx[:pos] + idx[pos + 1 :]


def interior(A: Tensor, omega: Tensor) -> Tensor:
    """Interior product of a multivector into a form, i_{A^B} = i_A o i_B."""
    if A.chart != omega.chart:
        raise ExteriorError("chart mismatch")
    if A.variance != MULTIVECTOR or omega.variance != FORM:
        raise ExteriorError("interior product contracts a multivector into a form")
    if A.grade > omega.grade:
        return Tensor.zero(A.chart, 0, FORM)
    out: dict = {}
    for ia, ca in A.entries.items():
        for io, co in omega.entries.items():
            sign = 1
            remaining = io
            ok = True
            for i in reversed(ia):  # rightmost factor contracts first
                step = _contract_once(i, remaining)
                if step is None:
                    ok = False
                    break
                s, remaining = step
                sign *= s
            if not ok:
                continue
            term = ca * co if sign > 0 else Expr.number(-1) * ca * co
            out[remaining] = out[remaining] + term if remaining in out else term
    return Tensor(A.chart, omega.grade - A.grade, FORM, out)


def sharp(pi: Tensor, alpha: Tensor) -> Tensor:
    """First-slot contraction of a 1-form into a bivector.

    For decomposable pi = A^B this is alpha(A) B - alpha(B) A; the sign is
    pinned by the requirement that Y^X with dh(Y)=1, dh(X)=0 sends dh to X.
    """
    if pi.chart != alpha.chart:
        raise ExteriorError("chart mismatch")
    if pi.variance != MULTIVECTOR or pi.grade != 2:
        raise ExteriorError("sharp expects a bivector")
    if alpha.variance != FORM or alpha.grade != 1:
        raise ExteriorError("sharp expects a 1-form")
    out: dict = {}

    def accumulate(i, term):
        out[(i,)] = out[(i,)] + term if (i,) in out else term

    for (i, j), c in pi.entries.items():
        ai = alpha.coeff((i,))
        aj = alpha.coeff((j,))
        if ai.node != _ZERO.node:
            accumulate(j, c * ai)
        if aj.node != _ZERO.node:
            accumulate(i, Expr.number(-1) * c * aj)
    return Tensor(pi.chart, 1, MULTIVECTOR, out)


def pairing(alpha: Tensor, X: Tensor) -> Expr:
    """alpha(X) for a 1-form and a vector field."""
    if alpha.grade != 1 or X.grade != 1:
        raise ExteriorError("pairing expects grade-1 arguments")
    total = _ZERO
    for (i,), c in alpha.entries.items():
        total = total + c * X.coeff((i,))
    return total


def lie_bracket(X: Tensor, Y: Tensor) -> Tensor:
    """[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k."""
    if X.chart != Y.chart:
        raise ExteriorError("chart mismatch")
    if X.grade != 1 or Y.grade != 1 or X.variance != MULTIVECTOR:
        raise ExteriorError("lie_bracket expects vector fields")
    chart = X.chart
    out = {}
    for k in range(chart.m):
        total = _ZERO
        for i in range(chart.m):
            xi = X.coeff((i,))
            yi = Y.coeff((i,))
            name = chart.coords[i]
            if xi.node != _ZERO.node:
                total = total + xi * diff(Y.coeff((k,)), name)
            if yi.node != _ZERO.node:
                total = total - yi * diff(X.coeff((k,)), name)
        out[(k,)] = total
    return Tensor.multivector(chart, 1, out)


def _vector_term(chart: Chart, coeff: Expr, i: int) -> Tensor:
    return Tensor.multivector(chart, 1, {(i,): coeff})


def _bracket_coeff_vectors(chart, f, i, g, j) -> Tensor:
    """[f d_i, g d_j] = f (d_i g) d_j - g (d_j f) d_i."""
    out = {}
    dig = diff(g, chart.coords[i]) if not _nf_of(g).is_zero() else _ZERO
    djf = diff(f, chart.coords[j]) if not _nf_of(f).is_zero() else _ZERO
    term_j = f * dig
    term_i = Expr.number(-1) * g * djf
    if term_j.node != _ZERO.node:
        out[(j,)] = term_j
    if term_i.node != _ZERO.node:
        out[(i,)] = out[(i,)] + term_i if (i,) in out else term_i
    return Tensor.multivector(chart, 1, out)


def schouten(A: Tensor, B: Tensor) -> Tensor:
    """Schouten-Nijenhuis bracket by graded-Leibniz expansion.

    For decomposables a_1^...^a_p and b_1^...^b_q the bracket is
    sum_{s,t} (-1)^{s+t} [a_s, b_t] ^ (a's without s) ^ (b's without t);
    coefficients ride on the first slot of each term.
    """
    if A.chart != B.chart:
        raise ExteriorError("chart mismatch")
    if A.variance != MULTIVECTOR or B.variance != MULTIVECTOR:
        raise ExteriorError("schouten expects multivector fields")
    if A.grade == 0 or B.grade == 0:
        raise ExteriorError("schouten is defined here for grades >= 1")
    chart = A.chart
    grade = A.grade + B.grade - 1
    result = Tensor.zero(chart, min(grade, chart.m), MULTIVECTOR)
    if grade > chart.m:
        return result
    one = Expr.number(1)
    for ia, ca in A.entries.items():
        for ib, cb in B.entries.items():
            for s in range(len(ia)):
                fa = ca if s == 0 else one
                rest_a = ia[:s] + ia[s + 1 :]
                coeff_a = one if s == 0 else ca
                for t in range(len(ib)):
                    gb = cb if t == 0 else one
                    rest_b = ib[:t] + ib[t + 1 :]
                    coeff_b = one if t == 0 else cb
                    bracket = _bracket_coeff_vectors(chart, fa, ia[s], gb, ib[t])
                    if not bracket.entries:
                        continue
                    term = bracket
                    if rest_a:
                        term = wedge(
                            term,
                            Tensor.multivector(chart, len(rest_a), {rest_a: coeff_a}),
                        )
                    elif coeff_a is not one:
                        term = term.scaled(coeff_a)
                    if rest_b:
                        term = wedge(
                            term,
                            Tensor.multivector(chart, len(rest_b), {rest_b: coeff_b}),
                        )
                    elif coeff_b is not one:
                        term = term.scaled(coeff_b)
                    if (s + t) % 2 == 1:
                        term = term.scaled(-1)
                    result = result + term
    return result


def lie_derivative(X: Tensor, T):
    """Lie derivative along a vector field.

    Functions: directional derivative.  Forms: Cartan's formula.
    Multivectors: Schouten bracket with X.  Volume forms and metrics have
    dedicated helpers (divergence, lie_derivative_metric).
    """
    if X.grade != 1 or X.variance != MULTIVECTOR:
        raise ExteriorError("lie_derivative expects a vector field")
    chart = X.chart
    if isinstance(T, Expr):
        total = _ZERO
        for (i,), c in X.entries.items():
            total = total + c * diff(T, chart.coords[i])
        return total
    if isinstance(T, VolumeForm):
        return divergence(X, T) * T.coefficient
    if T.variance == FORM:
        if T.grade == 0:
            return Tensor.form(chart, 0, {(): lie_derivative(X, T.coeff(()))})
        if T.grade == chart.m:
            return _lie_top_form(X, T)
        return interior(X, d(T)) + d(interior(X, T))
    if T.grade == 0:
        return Tensor.multivector(chart, 0, {(): lie_derivative(X, T.coeff(()))})
    return schouten(X, T)


def _lie_top_form(X: Tensor, T: Tensor) -> Tensor:
    # L_X (E dx^1..m) = d(i_X (E dx^1..m)) since dT = 0 in top degree.
    return d(interior(X, T))


def divergence(X: Tensor, omega: VolumeForm) -> Expr:
    """The unique scalar with L_X Omega = div * Omega."""
    if X.chart != omega.chart:
        raise ExteriorError("chart mismatch")
    chart = X.chart
    E = omega.coefficient
    total = _ZERO
    for (i,), c in X.entries.items():
        total = total + diff(E * c, chart.coords[i])
    return normalize(total / E)


def lie_derivative_metric(X: Tensor, metric: Metric) -> RationalMatrix:
    """(L_X g)_{ij} = X(g_ij) + g_kj d_i X^k + g_ik d_j X^k."""
    chart = X.chart
    m = chart.m
    comps = X.components()
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            total = lie_derivative(X, metric.g.entry(i, j))
            for k in range(m):
                total = total + metric.g.entry(k, j) * diff(comps[k], chart.coords[i])
                total = total + metric.g.entry(i, k) * diff(comps[k], chart.coords[j])
            row.append(normalize(total))
        rows.append(tuple(row))
    return RationalMatrix(tuple(rows))


def _antisymmetric_matrix(T: Tensor) -> list:
    """[T_ij] for a grade-2 multivector or an (m-2)-form.

    Form coefficients are read through the complementary-pair convention
    T_ij = (-1)^(i+j) * coeff(complement(i,j)); rank does not depend on this
    sign choice, reconstruction does.
    """
    chart = T.chart
    m = chart.m
    rows = [[_ZERO for _ in range(m)] for _ in range(m)]
    if T.variance == MULTIVECTOR and T.grade == 2:
        for (i, j), c in T.entries.items():
            rows[i][j] = c
            rows[j][i] = Expr.number(-1) * c
        return rows
    if T.variance == FORM and T.grade == m - 2:
        full = tuple(range(m))
        for i in range(m):
            for j in range(i + 1, m):
                comp = tuple(k for k in full if k not in (i, j))
                c = T.coeff(comp)
                if c.node == _ZERO.node:
                    continue
                signed = c if (i + j) % 2 == 0 else Expr.number(-1) * c
                rows[i][j] = signed
                rows[j][i] = Expr.number(-1) * signed
        return rows
    raise ExteriorError("rank matrix needs a bivector or an (m-2)-form")


def rank_at(T: Tensor, point: Sequence[float],
            bindings: Mapping[str, float] | None = None) -> int:
    """Numeric rank of [T_ij] at a point (singular values > 1e-9 * max)."""
    rows = _antisymmetric_matrix(T)
    chart = T.chart
    values = np.array(
        [
            [compile_expr(c, chart, bindings)(tuple(point)) for c in row]
            for row in rows
        ],
        dtype=float,
    )
    if not np.any(values):
        return 0
    svals = np.linalg.svd(values, compute_uv=False)
    return int(np.sum(svals > 1e-9 * svals[0]))


def vol_correspondence(omega: VolumeForm, given: Tensor) -> Tensor:
    """The bijection between bivectors pi and (m-2)-forms rho via i_pi Omega = rho.

    Coefficient-wise, rho(complement(i,j)) = E * (-1)^(i+j) * pi^(ij); the map
    is run in whichever direction matches the argument and round-trips to the
    identity.
    """
    chart = omega.chart
    if given.chart != chart:
        raise ExteriorError("chart mismatch")
    m = chart.m
    E = omega.coefficient
    full = tuple(range(m))
    if given.variance == MULTIVECTOR and given.grade == 2:
        out = {}
        for (i, j), c in given.entries.items():
            comp = tuple(k for k in full if k not in (i, j))
            coeff = E * c
            if (i + j) % 2 == 1:
                coeff = Expr.number(-1) * coeff
            out[comp] = coeff
        return Tensor.form(chart, m - 2, out)
    if given.variance == FORM and given.grade == m - 2:
        out = {}
        for i in range(m):
            for j in range(i + 1, m):
                comp = tuple(k for k in full if k not in (i, j))
                c = given.coeff(comp)
                if c.node == _ZERO.node:
                    continue
                coeff = c / E
                if (i + j) % 2 == 1:
                    coeff = Expr.number(-1) * coeff
                out[(i, j)] = coeff
        return Tensor.multivector(chart, 2, out)
    raise ExteriorError("correspondence needs a bivector or an (m-2)-form")
