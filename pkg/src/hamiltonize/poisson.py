"""Poisson predicates: Jacobi, Casimir, Poisson vector fields, modular field.

Every check returns a Certificate: a named list of tri-state verdicts plus
the sampler configuration, accumulated nonvanishing assumptions, and (for
hamiltonization checks) the recovered proportionality scalar lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .expr import Chart, Expr, TriState, is_zero, normalize, _nf_of
from .exterior import (
    FORM,
    Tensor,
    VolumeForm,
    d,
    divergence,
    interior,
    lie_derivative,
    schouten,
    sharp,
    vol_correspondence,
    wedge,
)
from .verify import SamplerConfig, default_sampler

__all__ = [
    "Certificate",
    "tensor_tristate",
    "jacobi_check",
    "hamiltonian_vf",
    "casimir_check",
    "poisson_vf_check",
    "modular_vf",
    "conformal_identity_check",
    "hamiltonization_check",
]


@dataclass
class Certificate:
    """Verdicts for one claim, reproducible from the recorded seed."""

    claim: str
    identities: list = field(default_factory=list)  # (name, TriState)
    sampler: SamplerConfig | None = None
    lam: Expr | None = None
    lam_is_constant: bool | None = None
    lam_is_one: bool | None = None
    notes: list = field(default_factory=list)

    def add(self, name: str, verdict: TriState) -> "Certificate":
        self.identities.append((name, verdict))
        return self

    def verdicts(self) -> list:
        return [v for _, v in self.identities]

    @property
    def overall(self) -> str:
        kinds = {v.verdict for v in self.verdicts()}
        if "nonzero" in kinds:
            return "nonzero"
        if kinds and kinds == {"zero"}:
            return "zero"
        return "unknown"

    @property
    def assumptions(self) -> tuple:
        seen = []
        for v in self.verdicts():
            for a in v.assumptions:
                if a not in seen:
                    seen.append(a)
        return tuple(sorted(seen))

    def residual_max(self) -> float:
        worst = 0.0
        for v in self.verdicts():
            if v.residual_max is not None:
                worst = max(worst, v.residual_max)
        return worst

    def to_json(self) -> dict:
        out = {
            "claim": self.claim,
            "identities": [
                dict(name=name, **verdict.to_json()) for name, verdict in self.identities
            ],
            "overall": self.overall,
            "assumptions": list(self.assumptions),
        }
        if self.sampler is not None:
            out["sampler"] = self.sampler.to_json()
        out["lambda"] = None if self.lam is None else str(normalize(self.lam))
        if self.lam is not None:
            out["lambda_is_constant"] = self.lam_is_constant
            out["lambda_is_one"] = self.lam_is_one
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def tensor_tristate(T: Tensor, sampler: SamplerConfig, name: str = "") -> TriState:
    """Combine coefficient-wise zero tests into one verdict per tensor."""
    chart = T.chart
    verdicts = [is_zero(c, sampler, chart) for _, c in sorted(T.entries.items())]
    if not verdicts:
        return TriState.zero()
    assumptions: list = []
    for v in verdicts:
        for a in v.assumptions:
            if a not in assumptions:
                assumptions.append(a)
    for v in verdicts:
        if v.verdict == "nonzero":
            return TriState.nonzero(v.witness, v.witness_value, sorted(assumptions))
    if all(v.verdict == "zero" for v in verdicts):
        return TriState.zero(sorted(assumptions))
    rmax = max(v.residual_max or 0.0 for v in verdicts)
    rmeans = [v.residual_mean for v in verdicts if v.residual_mean is not None]
    samples = max(v.samples for v in verdicts)
    return TriState.unknown(
        rmax, sum(rmeans) / len(rmeans), samples, sorted(assumptions)
    )


def _sampler_for(chart: Chart, sampler: SamplerConfig | None) -> SamplerConfig:
    return sampler if sampler is not None else default_sampler(chart)


def jacobi_check(pi: Tensor, sampler: SamplerConfig | None = None) -> Certificate:
    """[pi, pi] = 0, coefficient by coefficient."""
    sampler = _sampler_for(pi.chart, sampler)
    bracket = schouten(pi, pi)
    cert = Certificate("jacobi", sampler=sampler)
    cert.add("schouten(pi,pi)", tensor_tristate(bracket, sampler))
    return cert


def hamiltonian_vf(pi: Tensor, h: Expr) -> Tensor:
    """X_h = pi#dh."""
    dh = d(Tensor.form(pi.chart, 0, {(): h}))
    return sharp(pi, dh)


def casimir_check(
    pi: Tensor,
    c: Expr,
    sampler: SamplerConfig | None = None,
    omega: VolumeForm | None = None,
) -> Certificate:
    """pi#dc = 0; with a volume form also dc ^ i_pi Omega = 0."""
    sampler = _sampler_for(pi.chart, sampler)
    cert = Certificate("casimir", sampler=sampler)
    cert.add("sharp(pi,dc)", tensor_tristate(hamiltonian_vf(pi, c), sampler))
    if omega is not None:
        rho = vol_correspondence(omega, pi)
        dc = d(Tensor.form(pi.chart, 0, {(): c}))
        cert.add("dc^rho", tensor_tristate(wedge(dc, rho), sampler))
    return cert


def poisson_vf_check(
    pi: Tensor, X: Tensor, sampler: SamplerConfig | None = None
) -> Certificate:
    """L_X pi = 0 via the Schouten bracket."""
    sampler = _sampler_for(pi.chart, sampler)
    cert = Certificate("poisson_vector_field", sampler=sampler)
    cert.add("schouten(X,pi)", tensor_tristate(schouten(X, pi), sampler))
    return cert


def modular_vf(pi: Tensor, omega: VolumeForm) -> Tensor:
    """Vector field whose i-th component is div(pi#dx^i, Omega)."""
    chart = pi.chart
    out = {}
    for i in range(chart.m):
        Xi = sharp(pi, Tensor.basis_form(chart, i))
        out[(i,)] = divergence(Xi, omega)
    return Tensor.multivector(chart, 1, out)


def conformal_identity_check(
    pi: Tensor, f: Expr, sampler: SamplerConfig | None = None
) -> Certificate:
    """[f pi, f pi] + 2 f (pi#df) ^ pi = 0 for Poisson pi."""
    sampler = _sampler_for(pi.chart, sampler)
    jac = jacobi_check(pi, sampler)
    if jac.overall == "nonzero":
        raise ValueError("conformal identity requires a Poisson bivector")
    fpi = pi.scaled(f)
    lhs = schouten(fpi, fpi)
    correction = wedge(hamiltonian_vf(pi, f), pi).scaled(Expr.number(2) * f)
    cert = Certificate("conformal_invariance", sampler=sampler)
    cert.add("[f*pi,f*pi]+2f*(pi#df)^pi", tensor_tristate(lhs + correction, sampler))
    cert.add("jacobi(f*pi)", tensor_tristate(schouten(fpi, fpi), sampler))
    return cert


def _first_nonzero_component(X: Tensor) -> int | None:
    for i in range(X.chart.m):
        if not _nf_of(normalize(X.coeff((i,)))).is_zero():
            return i
    return None


def recover_scale(R: Tensor, X: Tensor) -> Expr | None:
    """lambda with R = lambda X, from the first symbolically nonzero X
    component; None when X vanishes identically."""
    k = _first_nonzero_component(X)
    if k is None:
        return None
    return normalize(R.coeff((k,)) / X.coeff((k,)))


def hamiltonization_check(
    pi: Tensor,
    h: Expr,
    X: Tensor,
    sampler: SamplerConfig | None = None,
) -> Certificate:
    """Certify pi#dh = lambda X and report the recovered lambda.

    lambda is the component ratio on the first symbolically nonzero
    component of X, then R - lambda X = 0 is certified globally.  The
    verdict is 'exact' when lambda = 1.  A vanishing X degenerates to
    reporting R itself.
    """
    sampler = _sampler_for(pi.chart, sampler)
    R = hamiltonian_vf(pi, h)
    cert = Certificate("hamiltonization", sampler=sampler)
    lam = recover_scale(R, X)
    if lam is None:
        cert.notes.append("X is identically zero; reporting pi#dh itself")
        cert.add("sharp(pi,dh)", tensor_tristate(R, sampler))
        return cert
    residual = R - X.scaled(lam)
    cert.lam = lam
    nf = _nf_of(lam)
    coords = {
        v
        for mono in list(nf.num) + [m for f, _ in nf.den for m in f]
        for v, _ in mono
        if v[0] == "c"
    }
    cert.lam_is_constant = not coords
    cert.lam_is_one = _nf_of(normalize(lam - Expr.number(1))).is_zero()
    cert.add("sharp(pi,dh)-lambda*X", tensor_tristate(residual, sampler))
    return cert
