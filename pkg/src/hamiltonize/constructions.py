"""Hamiltonization recipes, each returning constructed objects + certificates.

The twelve construction identifiers exposed by the CLI:
flaschka_ratiu, integrable_family, linear_fr, primitive, integrating_factor,
unimodularize, foliated_build, normal_class_check, decomposable, hojman,
metric_normal, torus2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import conventions
from .expr import (
    Chart,
    EvalError,
    Expr,
    ExprError,
    RationalMatrix,
    TriState,
    compile_expr,
    normalize,
    _nf_of,
    _p_subs,
    _poly_tree,
)
from .exterior import (
    FORM,
    MULTIVECTOR,
    Metric,
    Tensor,
    VolumeForm,
    d,
    interior,
    lie_bracket,
    lie_derivative,
    lie_derivative_metric,
    pairing,
    rank_at,
    schouten,
    sharp,
    vol_correspondence,
    wedge,
)
from .poisson import (
    Certificate,
    casimir_check,
    hamiltonian_vf,
    hamiltonization_check,
    jacobi_check,
    modular_vf,
    poisson_vf_check,
    recover_scale,
    tensor_tristate,
)
from .verify import SamplerConfig, default_sampler, sample_points

__all__ = [
    "ConstructionError",
    "HamiltonizationResult",
    "flaschka_ratiu",
    "integrable_family",
    "linear_fr",
    "primitive",
    "integrating_factor",
    "unimodularize",
    "foliated_build",
    "normal_class_check",
    "decomposable",
    "hojman",
    "metric_normal",
    "torus2",
    "CONSTRUCTIONS",
]


class ConstructionError(Exception):
    pass


@dataclass
class HamiltonizationResult:
    """A constructed bivector with optional Hamiltonian and certificates."""

    construction: str
    pi: Tensor | None
    h: Expr | None = None
    lam: Expr | None = None
    family_index: int | None = None
    certificates: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        """No certificate may be NonZero for the result to count as certified."""
        return all(c.overall != "nonzero" for c in self.certificates.values())

    def certificate(self, name: str) -> Certificate:
        return self.certificates[name]

    def to_json(self) -> dict:
        out = {
            "construction": self.construction,
            "pi": None if self.pi is None else self.pi.to_json(),
            "h": None if self.h is None else str(normalize(self.h)),
            "lambda": None if self.lam is None else str(normalize(self.lam)),
            "certified": self.certified,
            "certificates": {k: c.to_json() for k, c in sorted(self.certificates.items())},
        }
        if self.family_index is not None:
            out["family_index"] = self.family_index
        if self.extras:
            extras = {}
            for k, v in sorted(self.extras.items()):
                if isinstance(v, Tensor):
                    extras[k] = v.to_json()
                elif isinstance(v, Expr):
                    extras[k] = str(normalize(v))
                elif isinstance(v, (list, tuple)):
                    extras[k] = [
                        str(normalize(x)) if isinstance(x, Expr) else x for x in v
                    ]
                else:
                    extras[k] = v
            out["extras"] = extras
        return out


def _sampler_for(chart: Chart, sampler: SamplerConfig | None) -> SamplerConfig:
    return sampler if sampler is not None else default_sampler(chart)


def _rebind(T: Tensor, chart: Chart) -> Tensor:
    return Tensor(chart, T.grade, T.variance, dict(T.entries))


def _with_locus(chart: Chart, locus: Expr) -> Chart:
    # The zero set of p/q is the zero set of p; exclude the numerator.
    nf = _nf_of(normalize(locus))
    locus = normalize(Expr(_poly_tree(nf.num)))
    if len(nf.num) <= 1 and (not nf.num or () in nf.num):
        return chart  # constant, nothing to exclude
    if locus in chart.excluded:
        return chart
    return chart.with_excluded(locus)


def _require_not_nonzero(name: str, verdict: TriState):
    if verdict.verdict == "nonzero":
        raise ConstructionError(
            f"precondition {name!r} fails: witnessed nonzero at {verdict.witness}"
        )


def _zero_form(chart: Chart, h: Expr) -> Tensor:
    return Tensor.form(chart, 0, {(): h})


def _dh(chart: Chart, h: Expr) -> Tensor:
    return d(_zero_form(chart, h))


# ---------------------------------------------------------------------------
# flaschka_ratiu
# ---------------------------------------------------------------------------


def flaschka_ratiu(
    omega: VolumeForm, casimirs: Sequence[Expr], sampler: SamplerConfig | None = None
) -> HamiltonizationResult:
    """Bivector with i_pi Omega = dc_1 ^ ... ^ dc_(m-2); rank at most two.

    The listed functions are attached as certified Casimirs; for m = 2 the
    list is empty and pi is the inverse of the volume form.
    """
    chart = omega.chart
    sampler = _sampler_for(chart, sampler)
    if len(casimirs) != chart.m - 2:
        raise ConstructionError(
            f"need {chart.m - 2} functions on a {chart.m}-dimensional chart, "
            f"got {len(casimirs)}"
        )
    rho = Tensor.scalar(chart, 1, FORM)
    for c in casimirs:
        rho = wedge(rho, _dh(chart, c))
    pi = vol_correspondence(omega, rho)
    result = HamiltonizationResult("flaschka_ratiu", pi)
    result.extras["rho"] = rho
    result.certificates["jacobi"] = jacobi_check(pi, sampler)
    for k, c in enumerate(casimirs):
        result.certificates[f"casimir_{k + 1}"] = casimir_check(pi, c, sampler, omega)
    return result


# ---------------------------------------------------------------------------
# integrable_family
# ---------------------------------------------------------------------------


def _independence_check(chart, forms, points, bindings=None):
    fns = [
        [compile_expr(f.coeff((i,)), chart, bindings) for i in range(chart.m)]
        for f in forms
    ]
    for pt in points:
        rows = []
        try:
            rows = [[fn(pt) for fn in row] for row in fns]
        except EvalError:
            continue
        rank = np.linalg.matrix_rank(np.array(rows, dtype=float), tol=1e-9)
        if rank < len(forms):
            raise ConstructionError(
                f"differentials are dependent at sample point {pt}"
            )


def integrable_family(
    X: Tensor,
    integrals: Sequence[Expr],
    omega: VolumeForm,
    sampler: SamplerConfig | None = None,
) -> list:
    """One rank-two Poisson structure per first integral of a maximal set.

    For m-1 independent first integrals h_j, builds psi_i with
    i_{psi_i} Omega = dh_1 ^ ... (hat i) ... ^ dh_(m-1), recovers the factor
    f_i with X = f_i psi_i#dh_i, and returns pi_i = f_i psi_i such that
    pi_i#dh_j = delta_ij X, with pairwise-commutation certificates.
    """
    chart = X.chart
    sampler = _sampler_for(chart, sampler)
    if len(integrals) != chart.m - 1:
        raise ConstructionError(
            f"need {chart.m - 1} first integrals, got {len(integrals)}"
        )
    dhs = [_dh(chart, h) for h in integrals]
    for j, h in enumerate(integrals):
        verdict = tensor_tristate(
            Tensor.multivector(chart, 0, {(): lie_derivative(X, h)}), sampler
        )
        _require_not_nonzero(f"L_X h_{j + 1} = 0", verdict)
    points = sample_points(chart, sampler)
    _independence_check(chart, dhs, points)

    results = []
    for i in range(len(integrals)):
        rho = Tensor.scalar(chart, 1, FORM)
        for j, dh in enumerate(dhs):
            if j != i:
                rho = wedge(rho, dh)
        psi = vol_correspondence(omega, rho)
        R = sharp(psi, dhs[i])
        # recover f_i from X = f_i * R on the first nonzero component of R
        k = next(
            (
                k
                for k in range(chart.m)
                if not _nf_of(normalize(R.coeff((k,)))).is_zero()
            ),
            None,
        )
        if k is None:
            raise ConstructionError(f"psi_{i + 1}#dh_{i + 1} is identically zero")
        f_i = normalize(X.coeff((k,)) / R.coeff((k,)))
        residual = X - R.scaled(f_i)
        chart_i = _with_locus(chart, R.coeff((k,)))
        verdict = tensor_tristate(_rebind(residual, chart_i), sampler)
        if verdict.verdict == "nonzero":
            raise ConstructionError(
                f"component ratio for f_{i + 1} is inconsistent at {verdict.witness}"
            )
        if verdict.verdict == "unknown" and (verdict.residual_max or 0) > 1e-9:
            raise ConstructionError(
                f"component ratio for f_{i + 1} exceeds tolerance: "
                f"{verdict.residual_max}"
            )
        pi_i = psi.scaled(f_i)
        res = HamiltonizationResult(
            "integrable_family", pi_i, h=integrals[i], family_index=i + 1
        )
        res.extras["f"] = f_i
        res.certificates["jacobi"] = jacobi_check(_rebind(pi_i, chart_i), sampler)
        cert = hamiltonization_check(
            _rebind(pi_i, chart_i), integrals[i], _rebind(X, chart_i), sampler
        )
        res.certificates["hamiltonization"] = cert
        res.lam = cert.lam
        for j in range(len(integrals)):
            if j == i:
                continue
            kill = Certificate(f"pi_{i + 1}#dh_{j + 1} = 0", sampler=sampler)
            kill.add(
                "sharp(pi,dh_j)",
                tensor_tristate(_rebind(sharp(pi_i, dhs[j]), chart_i), sampler),
            )
            res.certificates[f"kills_h_{j + 1}"] = kill
        results.append(res)

    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            cert = Certificate(f"[pi_{i + 1},pi_{j + 1}] = 0", sampler=sampler)
            cert.add(
                "schouten(pi_i,pi_j)",
                tensor_tristate(schouten(results[i].pi, results[j].pi), sampler),
            )
            results[i].certificates[f"compat_{i + 1}_{j + 1}"] = cert
            results[j].certificates[f"compat_{i + 1}_{j + 1}"] = cert
    return results


# ---------------------------------------------------------------------------
# linear_fr
# ---------------------------------------------------------------------------


def linear_fr(
    P: RationalMatrix,
    A: RationalMatrix,
    chart: Chart | None = None,
    sampler: SamplerConfig | None = None,
) -> HamiltonizationResult:
    """Constant Poisson structure for a trace-free linear field X = Ax.

    pi = sum_(i<j) (-1)^(i+j) det P_[i,j] d_i ^ d_j from the matrix of linear
    Casimir coefficients P; the leaf-wise symplectic matrix W gives a
    quadratic h = x^T (W A) x / 2 whose recovered proportionality constant is
    reported (and pinned in ``conventions`` for the canonical instances).
    """
    n, k = P.shape if P.rows else (A.shape[0], 0)
    na, ma = A.shape
    if na != ma or (P.rows and n != na):
        raise ConstructionError("shape mismatch between P and A")
    n = na
    if k != n - 2:
        raise ConstructionError(f"P must have {n - 2} columns, got {k}")
    if chart is None:
        chart = Chart(tuple(f"x{i + 1}" for i in range(n)))
    sampler = _sampler_for(chart, sampler)

    trace = normalize(
        sum((A.entry(i, i) for i in range(n)), Expr.number(0))
    )
    if not _nf_of(trace).is_zero():
        raise ConstructionError("matrix A is not trace-free")
    if k:
        if P.nullspace():
            raise ConstructionError("columns of P are dependent")
        At = A.transpose()
        for j in range(k):
            for i in range(n):
                entry = sum(
                    (At.entry(i, r) * P.entry(r, j) for r in range(n)),
                    Expr.number(0),
                )
                if not _nf_of(normalize(entry)).is_zero():
                    raise ConstructionError("columns of P are not in ker A^T")

    minors = {}
    for i in range(n):
        for j in range(i + 1, n):
            det = P.minor_det((i, j)) if k else Expr.number(1)
            minors[(i, j)] = normalize(det)
    pi_entries = {}
    norm2 = Expr.number(0)
    for (i, j), det in minors.items():
        sign = 1 if (i + j) % 2 == 0 else -1
        if not _nf_of(det).is_zero():
            pi_entries[(i, j)] = Expr.number(sign) * det
        norm2 = norm2 + det * det
    norm2 = normalize(norm2)
    pi = Tensor.multivector(chart, 2, pi_entries)

    omega2_entries = {}
    W = [[Expr.number(0)] * n for _ in range(n)]
    for (i, j), det in minors.items():
        sign = -1 if (i + j) % 2 == 0 else 1
        w = normalize(Expr.number(sign) * det / norm2)
        if not _nf_of(w).is_zero():
            omega2_entries[(i, j)] = w
        W[i][j] = w
        W[j][i] = normalize(Expr.number(-1) * w)
    omega2 = Tensor.form(chart, 2, omega2_entries)

    coords = [Expr.coord(name) for name in chart.coords]
    h = Expr.number(0)
    for i in range(n):
        for j in range(n):
            WA = sum((W[i][r] * A.entry(r, j) for r in range(n)), Expr.number(0))
            h = h + coords[i] * WA * coords[j]
    h = normalize(h * Fraction(1, 2))

    X = Tensor.vector(
        chart,
        [
            sum((A.entry(i, j) * coords[j] for j in range(n)), Expr.number(0))
            for i in range(n)
        ],
    )

    result = HamiltonizationResult("linear_fr", pi, h=h)
    result.extras["omega2"] = omega2
    result.extras["pi_norm2"] = norm2
    casimirs = [
        sum((P.entry(i, j) * coords[i] for i in range(n)), Expr.number(0))
        for j in range(k)
    ]
    result.extras["casimirs"] = casimirs
    result.certificates["jacobi"] = jacobi_check(pi, sampler)
    ev = VolumeForm.euclidean(chart)
    rho = Tensor.scalar(chart, 1, FORM)
    for c in casimirs:
        rho = wedge(rho, _dh(chart, c))
    fr_cert = Certificate("volume_correspondence", sampler=sampler)
    fr_cert.add(
        "i_pi(Omega)-dc_wedge",
        tensor_tristate(vol_correspondence(ev, pi) - rho, sampler),
    )
    result.certificates["volume_correspondence"] = fr_cert
    for idx, c in enumerate(casimirs):
        result.certificates[f"casimir_{idx + 1}"] = casimir_check(pi, c, sampler, ev)
    ham = hamiltonization_check(pi, h, X, sampler)
    result.certificates["hamiltonization"] = ham
    result.lam = ham.lam
    return result


# ---------------------------------------------------------------------------
# primitive (polynomial homotopy operator)
# ---------------------------------------------------------------------------


def _polynomial_nf(coeff: Expr):
    nf = _nf_of(coeff)
    if nf.den:
        raise ConstructionError("coefficients must be polynomial")
    for mono in nf.num:
        for v, _ in mono:
            if v[0] == "a":
                raise ConstructionError("coefficients must be polynomial")
    return nf.num


def primitive(
    omega: Tensor, base: Sequence[Fraction] | None = None
) -> Tensor:
    """Radial primitive of a closed polynomial form on a star-shaped chart.

    Integrates the homotopy operator exactly monomial by monomial:
    a term c x^a dx^I of a k-form contributes
    sum_l (-1)^(l-1) c x^a x^(i_l) / (|a| + k) dx^(I without i_l),
    after recentering at ``base``.  d(primitive(omega)) = omega for closed
    input, which the caller must guarantee (checked exactly here).
    """
    if omega.variance != FORM or omega.grade < 1:
        raise ConstructionError("primitive expects a form of grade >= 1")
    chart = omega.chart
    k = omega.grade
    closed = (
        omega.grade == chart.m
        or all(_nf_of(normalize(c)).is_zero() for c in d(omega).entries.values())
    )
    if not closed:
        raise ConstructionError("form is not closed")
    if base is None:
        base = [Fraction(0)] * chart.m
    base = [Fraction(b) for b in base]

    def shift(poly, direction):
        for i, name in enumerate(chart.coords):
            if base[i] == 0:
                continue
            key = ("c", name)
            replacement = {
                ((key, 1),): Fraction(1),
                (): direction * base[i],
            }
            poly = _p_subs(poly, key, replacement)
        return poly

    out: dict = {}
    for idx, coeff in omega.entries.items():
        poly = shift(_polynomial_nf(normalize(coeff)), Fraction(1))
        for mono, c in poly.items():
            coord_deg = sum(e for v, e in mono if v[0] == "c")
            scale = Fraction(1, coord_deg + k)
            for l, i in enumerate(idx):
                key = ("c", chart.coords[i])
                lifted = {}
                for m2, c2 in {mono: c * scale}.items():
                    extra = dict(m2)
                    extra[key] = extra.get(key, 0) + 1
                    lifted[tuple(sorted(extra.items()))] = c2
                sign = 1 if l % 2 == 0 else -1
                target = idx[:l] + idx[l + 1 :]
                acc = out.setdefault(target, {})
                for m2, c2 in lifted.items():
                    s = acc.get(m2, Fraction(0)) + sign * c2
                    if s:
                        acc[m2] = s
                    else:
                        acc.pop(m2, None)
    entries = {}
    for target, poly in out.items():
        poly = shift(poly, Fraction(-1))
        if poly:
            entries[target] = normalize(Expr(_poly_tree(poly)))
    return Tensor.form(chart, k - 1, entries)


# ---------------------------------------------------------------------------
# integrating_factor
# ---------------------------------------------------------------------------


def _monomials_up_to(chart: Chart, degree: int):
    import itertools as it

    keys = [("c", name) for name in chart.coords]
    monos = []
    for total in range(degree + 1):
        for combo in it.combinations_with_replacement(range(chart.m), total):
            counts = {}
            for i in combo:
                counts[keys[i]] = counts.get(keys[i], 0) + 1
            monos.append(tuple(sorted(counts.items())))
    return monos


def integrating_factor(
    rho: Tensor, degree_bound: int = 4
) -> list:
    """Polynomial solutions a of d(a rho) = 0 up to a total degree bound.

    Assembles the exact linear system in the unknown coefficients of a and
    returns a basis of its nullspace (possibly empty).
    """
    if rho.variance != FORM:
        raise ConstructionError("integrating factors apply to forms")
    chart = rho.chart
    for coeff in rho.entries.values():
        _polynomial_nf(normalize(coeff))
    monos = _monomials_up_to(chart, degree_bound)
    rows_index: dict = {}
    columns = []
    for mono in monos:
        x_gamma = Expr(_poly_tree({mono: Fraction(1)}))
        image = d(rho.scaled(x_gamma))
        col = {}
        for idx, coeff in image.entries.items():
            poly = _polynomial_nf(normalize(coeff))
            for m2, c2 in poly.items():
                row_key = (idx, m2)
                rows_index.setdefault(row_key, len(rows_index))
                col[row_key] = c2
        columns.append(col)
    if not rows_index:
        return [Expr.number(1)] if monos else []
    matrix = [[Fraction(0)] * len(columns) for _ in range(len(rows_index))]
    for j, col in enumerate(columns):
        for row_key, value in col.items():
            matrix[rows_index[row_key]][j] = value
    basis = RationalMatrix(
        tuple(tuple(Expr.number(v) for v in row) for row in matrix)
    ).nullspace()
    out = []
    for vec in basis:
        poly: dict = {}
        for mono, coeff_expr in zip(monos, vec):
            q = _nf_of(coeff_expr).num.get((), Fraction(0))
            if q:
                poly[mono] = q
        out.append(normalize(Expr(_poly_tree(poly))))
    return out


# ---------------------------------------------------------------------------
# unimodularize
# ---------------------------------------------------------------------------


def unimodularize(
    X: Tensor,
    omega: VolumeForm,
    rho: Tensor,
    a: Expr,
    sampler: SamplerConfig | None = None,
) -> HamiltonizationResult:
    """Unimodular rank-two structure from a primitive rho and factor a.

    Requires i_X Omega = d rho, d(a rho) = 0 and rank(rho) <= 2 at samples;
    then pi with i_pi Omega = a rho hamiltonizes X with h = 1/a on {a != 0}.
    The companion bivector of rho itself has modular field sigma X with the
    global sigma recorded in ``conventions``.
    """
    chart = X.chart
    sampler = _sampler_for(chart, sampler)
    ix_omega = interior(X, omega.as_form())
    _require_not_nonzero(
        "i_X Omega = d rho", tensor_tristate(ix_omega - d(rho), sampler)
    )
    a_rho = rho.scaled(a)
    _require_not_nonzero("d(a rho) = 0", tensor_tristate(d(a_rho), sampler))
    for pt in sample_points(chart, sampler):
        if rank_at(rho, pt, chart.binding_map()) > 2:
            raise ConstructionError(f"rho has rank above two at sample {pt}")

    pi = vol_correspondence(omega, a_rho)
    h = normalize(Expr.number(1) / a)
    chart_h = _with_locus(chart, a)
    result = HamiltonizationResult("unimodularize", pi, h=h)
    result.certificates["jacobi"] = jacobi_check(_rebind(pi, chart_h), sampler)
    ham = hamiltonization_check(
        _rebind(pi, chart_h), h, _rebind(X, chart_h), sampler
    )
    result.certificates["hamiltonization"] = ham
    result.lam = ham.lam

    unim = Certificate("unimodularity", sampler=sampler)
    unim.add("modular_vf(pi,Omega)", tensor_tristate(modular_vf(pi, omega), sampler))
    result.certificates["unimodularity"] = unim

    pi_rho = vol_correspondence(omega, rho)
    mod = Certificate("modular_field_of_primitive", sampler=sampler)
    mod_field = modular_vf(pi_rho, omega)
    sigma = recover_scale(mod_field, X)
    mod.lam = sigma
    expected = X.scaled(conventions.MODULAR_SIGN)
    mod.add("modular_vf(pi_rho,Omega)-sigma*X", tensor_tristate(mod_field - expected, sampler))
    result.certificates["modular"] = mod
    result.extras["modular_sigma"] = sigma
    return result


# ---------------------------------------------------------------------------
# foliated_build
# ---------------------------------------------------------------------------


def foliated_build(
    omega: VolumeForm,
    alphas: Sequence[Tensor],
    beta: Tensor,
    X: Tensor | None = None,
    h: Expr | None = None,
    sampler: SamplerConfig | None = None,
) -> HamiltonizationResult:
    """Bivector with i_pi Omega = alpha_1 ^ ... ^ alpha_k ^ beta.

    Requires the integrability residuals
    d(alpha_i) ^ alpha_1 ^ ... (hat i) ... ^ alpha_k = 0 and certifies the
    closedness of the full wedge; an optional vector field and Hamiltonian
    get automorphism / hamiltonization certificates.
    """
    chart = omega.chart
    sampler = _sampler_for(chart, sampler)
    for i, alpha in enumerate(alphas):
        residual = d(alpha)
        for j, other in enumerate(alphas):
            if j != i:
                residual = wedge(residual, other)
        _require_not_nonzero(
            f"integrability of alpha_{i + 1}", tensor_tristate(residual, sampler)
        )
    full = Tensor.scalar(chart, 1, FORM)
    for alpha in alphas:
        full = wedge(full, alpha)
    full = wedge(full, beta)
    if full.grade != chart.m - 2:
        raise ConstructionError(
            f"alpha_1^...^alpha_k^beta must have grade {chart.m - 2}"
        )
    result = HamiltonizationResult("foliated_build", None)
    closed = Certificate("closedness_of_wedge", sampler=sampler)
    closed.add("d(alpha^beta)", tensor_tristate(d(full), sampler))
    result.certificates["closedness"] = closed
    if closed.overall == "nonzero":
        raise ConstructionError("alpha ^ beta is not closed")
    pi = vol_correspondence(omega, full)
    result.pi = pi
    result.certificates["jacobi"] = jacobi_check(pi, sampler)
    if X is not None:
        result.certificates["poisson_vf"] = poisson_vf_check(pi, X, sampler)
        if h is not None:
            ham = hamiltonization_check(pi, h, X, sampler)
            result.certificates["hamiltonization"] = ham
            result.lam = ham.lam
            result.h = h
    return result


# ---------------------------------------------------------------------------
# normal_class_check / decomposable / hojman / metric_normal
# ---------------------------------------------------------------------------


def normal_class_check(
    X: Tensor, h: Expr, Y: Tensor, sampler: SamplerConfig | None = None
) -> Certificate:
    """Certify normalization dh(Y) X = X, invariance [X,Y]^X^Y = 0, and the
    stronger reformulation [X,Y]^X = 0."""
    chart = X.chart
    sampler = _sampler_for(chart, sampler)
    dh = _dh(chart, h)
    cert = Certificate("normal_class", sampler=sampler)
    cert.add(
        "dh(Y)X-X",
        tensor_tristate(X.scaled(pairing(dh, Y)) - X, sampler),
    )
    bracket = lie_bracket(X, Y)
    cert.add(
        "[X,Y]^X^Y",
        tensor_tristate(wedge(wedge(bracket, X), Y), sampler),
    )
    cert.add("[X,Y]^X", tensor_tristate(wedge(bracket, X), sampler))
    return cert


def decomposable(
    X: Tensor, Y: Tensor, sampler: SamplerConfig | None = None
) -> HamiltonizationResult:
    """pi = Y ^ X with its Jacobi verdict and the decomposable-bracket
    identity [pi,pi] = 2 [X,Y] ^ X ^ Y certified structurally."""
    chart = X.chart
    sampler = _sampler_for(chart, sampler)
    pi = wedge(Y, X)
    result = HamiltonizationResult("decomposable", pi)
    result.certificates["jacobi"] = jacobi_check(pi, sampler)
    identity = Certificate("decomposable_bracket_identity", sampler=sampler)
    rhs = wedge(wedge(lie_bracket(X, Y), X), Y).scaled(2)
    identity.add("[pi,pi]-2[X,Y]^X^Y", tensor_tristate(schouten(pi, pi) - rhs, sampler))
    result.certificates["bracket_identity"] = identity
    return result


def hojman(
    X: Tensor, h: Expr, Z: Tensor, sampler: SamplerConfig | None = None
) -> HamiltonizationResult:
    """pi = (1/dh(Z)) Z ^ X for a symmetry Z with [X,Z] in span{X,Z}.

    Expects h to be a first integral and dh(Z) nonvanishing on the sampled
    box; the hamiltonization certificate should recover lambda = 1.
    """
    chart = X.chart
    sampler = _sampler_for(chart, sampler)
    _require_not_nonzero(
        "L_X h = 0",
        tensor_tristate(
            Tensor.multivector(chart, 0, {(): lie_derivative(X, h)}), sampler
        ),
    )
    dh = _dh(chart, h)
    dhz = normalize(pairing(dh, Z))
    if _nf_of(dhz).is_zero():
        raise ConstructionError("dh(Z) is identically zero")
    fn = compile_expr(dhz, chart)
    for pt in sample_points(chart, sampler):
        try:
            value = fn(pt)
        except EvalError:
            raise ConstructionError(f"dh(Z) undefined at sample {pt}") from None
        if abs(value) <= sampler.tolerance:
            raise ConstructionError(f"dh(Z) vanishes at sample {pt}")
    bracket = lie_bracket(X, Z)
    _require_not_nonzero(
        "[X,Z]^X^Z = 0",
        tensor_tristate(wedge(wedge(bracket, X), Z), sampler),
    )
    chart_h = _with_locus(chart, dhz)
    pi = wedge(Z, X).scaled(Expr.number(1) / dhz)
    result = HamiltonizationResult("hojman", pi, h=h)
    result.certificates["jacobi"] = jacobi_check(_rebind(pi, chart_h), sampler)
    ham = hamiltonization_check(_rebind(pi, chart_h), h, _rebind(X, chart_h), sampler)
    result.certificates["hamiltonization"] = ham
    result.lam = ham.lam
    return result


def metric_normal(
    X: Tensor, h: Expr, metric: Metric, sampler: SamplerConfig | None = None
) -> HamiltonizationResult:
    """Normal section Y0 = eta#dh / eta(dh,dh) and the induced pi = Y0 ^ X.

    Full invariance L_X g = 0 is certified (transversal invariance alone has
    no finite certificate here); with it, [X, Y0] = 0 is certified as well.
    """
    chart = X.chart
    sampler = _sampler_for(chart, sampler)
    dh = _dh(chart, h)
    q = normalize(metric.inverse_pairing(dh, dh))
    if _nf_of(q).is_zero():
        raise ConstructionError("eta(dh,dh) is identically zero")
    fn = compile_expr(q, chart)
    for pt in sample_points(chart, sampler):
        try:
            value = fn(pt)
        except EvalError:
            raise ConstructionError(f"eta(dh,dh) undefined at sample {pt}") from None
        if abs(value) <= sampler.tolerance:
            raise ConstructionError(f"eta(dh,dh) vanishes at sample {pt}")
    chart_q = _with_locus(chart, q)
    Y0 = metric.sharp(dh).scaled(Expr.number(1) / q)
    result = decomposable(_rebind(X, chart_q), _rebind(Y0, chart_q), sampler)
    result.construction = "metric_normal"
    result.h = h
    result.extras["Y0"] = Y0

    inv = Certificate("metric_invariance", sampler=sampler)
    lg = lie_derivative_metric(X, metric)
    for i in range(chart.m):
        for j in range(i, chart.m):
            inv.add(
                f"(L_X g)_{i + 1}{j + 1}",
                tensor_tristate(
                    Tensor.multivector(chart, 0, {(): lg.entry(i, j)}), sampler
                ),
            )
    result.certificates["metric_invariance"] = inv
    if inv.overall != "nonzero":
        comm = Certificate("normal_section_commutes", sampler=sampler)
        comm.add(
            "[X,Y0]",
            tensor_tristate(
                _rebind(lie_bracket(X, Y0), chart_q), sampler
            ),
        )
        result.certificates["commutation"] = comm
    ham = hamiltonization_check(
        result.pi, h, _rebind(X, chart_q), sampler
    )
    result.certificates["hamiltonization"] = ham
    result.lam = ham.lam
    return result


# ---------------------------------------------------------------------------
# torus2
# ---------------------------------------------------------------------------


def torus2(
    X1: Tensor,
    X2: Tensor,
    h1: Expr,
    h2: Expr,
    Y1: Tensor,
    Y2: Tensor,
    sampler: SamplerConfig | None = None,
) -> HamiltonizationResult:
    """pi = Y1 ^ X1 + Y2 ^ X2 for two commuting generators.

    Preconditions ([X1,X2] = 0, [X_i,Y_j] = 0, and the normalization
    sum_j dh_i(Y_j) X_j = X_i) are certified and must not be witnessed
    nonzero.  Certificates: the bracket identity
    [pi,pi] = 2 [Y1,Y2] ^ X1 ^ X2 (the factor matches the decomposable
    normalization [Y^X, Y^X] = 2 [X,Y]^X^Y), tangency dh_i([Y1,Y2]) = 0,
    the Jacobi verdict, and momentum residuals pi#dh_i - X_i (also combined
    linearly with symbolic weights).
    """
    chart = X1.chart
    sampler = _sampler_for(chart, sampler)
    _require_not_nonzero(
        "[X1,X2] = 0", tensor_tristate(lie_bracket(X1, X2), sampler)
    )
    for i, X in enumerate((X1, X2)):
        for j, Y in enumerate((Y1, Y2)):
            _require_not_nonzero(
                f"[X{i + 1},Y{j + 1}] = 0",
                tensor_tristate(lie_bracket(X, Y), sampler),
            )
    dh1 = _dh(chart, h1)
    dh2 = _dh(chart, h2)
    for i, (h, dh, Xi) in enumerate(((h1, dh1, X1), (h2, dh2, X2))):
        goodness = (
            X1.scaled(pairing(dh, Y1)) + X2.scaled(pairing(dh, Y2)) - Xi
        )
        _require_not_nonzero(
            f"normalization for h{i + 1}", tensor_tristate(goodness, sampler)
        )

    pi = wedge(Y1, X1) + wedge(Y2, X2)
    result = HamiltonizationResult("torus2", pi)

    identity = Certificate("bracket_identity", sampler=sampler)
    rhs = wedge(wedge(lie_bracket(Y1, Y2), X1), X2).scaled(2)
    identity.add("[pi,pi]-2[Y1,Y2]^X1^X2", tensor_tristate(schouten(pi, pi) - rhs, sampler))
    result.certificates["bracket_identity"] = identity

    tangency = Certificate("commutator_tangency", sampler=sampler)
    yy = lie_bracket(Y1, Y2)
    for i, dh in enumerate((dh1, dh2)):
        tangency.add(
            f"dh{i + 1}([Y1,Y2])",
            tensor_tristate(
                Tensor.multivector(chart, 0, {(): pairing(dh, yy)}), sampler
            ),
        )
    result.certificates["tangency"] = tangency

    result.certificates["jacobi"] = jacobi_check(pi, sampler)

    momentum = Certificate("momentum_residuals", sampler=sampler)
    for i, (dh, Xi) in enumerate(((dh1, X1), (dh2, X2))):
        momentum.add(
            f"pi#dh{i + 1}-X{i + 1}",
            tensor_tristate(sharp(pi, dh) - Xi, sampler),
        )
    # Linear combination with symbolic weights; by linearity it is zero iff
    # the per-generator residuals are, and the exact path needs no binding.
    names = [n for n in ("w1", "w2") if n not in chart.params + chart.coords]
    if len(names) == 2:
        ext = Chart(
            chart.coords,
            chart.params + ("w1", "w2"),
            chart.excluded,
            chart.bindings,
        ).with_bindings(w1=0.6180339887498949, w2=1.4142135623730951)
        xi1, xi2 = Expr.param("w1"), Expr.param("w2")
        h_xi = xi1 * h1 + xi2 * h2
        combo = sharp(
            _rebind(pi, ext), _dh(ext, h_xi)
        ) - (_rebind(X1, ext).scaled(xi1) + _rebind(X2, ext).scaled(xi2))
        momentum.add("pi#dh_xi-xi_M", tensor_tristate(combo, sampler))
    result.certificates["momentum"] = momentum
    return result


CONSTRUCTIONS = {
    "flaschka_ratiu": flaschka_ratiu,
    "integrable_family": integrable_family,
    "linear_fr": linear_fr,
    "primitive": primitive,
    "integrating_factor": integrating_factor,
    "unimodularize": unimodularize,
    "foliated_build": foliated_build,
    "normal_class_check": normal_class_check,
    "decomposable": decomposable,
    "hojman": hojman,
    "metric_normal": metric_normal,
    "torus2": torus2,
}
