"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines; every tolerance is the stated one, nothing is calibrated at runtime.
"""

import functools
import itertools
import random
from fractions import Fraction
from pathlib import Path

import pytest

from hamiltonize import (
    Chart,
    Expr,
    Metric,
    RationalMatrix,
    Tensor,
    VolumeForm,
    conformal_identity_check,
    d,
    decomposable,
    divergence,
    flaschka_ratiu,
    flow_conservation,
    hamiltonization_check,
    hojman,
    integrable_family,
    integrating_factor,
    interior,
    jacobi_check,
    lie_bracket,
    lie_derivative,
    linear_fr,
    modular_vf,
    normalize,
    primitive,
    rank_at,
    sample_points,
    schouten,
    sharp,
    torus2,
    unimodularize,
    vol_correspondence,
    wedge,
)
from hamiltonize import conventions
from hamiltonize.cli import run as cli_run, report_to_json
from hamiltonize.expr import _nf_of
from hamiltonize.poisson import recover_scale, tensor_tristate
from hamiltonize.verify import default_sampler

from conftest import (
    assert_tensor_equal,
    expr_is_zero,
    random_poly,
    random_vector,
    tensor_is_zero,
)

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "hamiltonize" / "fixtures"


def criterion(number, label):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {number:02d} FAIL - {label}")
                raise
            print(f"criterion {number:02d} PASS - {label}")

        return inner

    return wrap


def zero_form(chart, h):
    return Tensor.form(chart, 0, {(): h})


# ---------------------------------------------------------------------------


@criterion(1, "torus fixture: exact invariants and bounded flow drift")
def test_criterion_01_torus_fixture():
    chart = Chart(("x", "y", "z"), params=("lam",))
    X = Tensor.vector(
        chart,
        [
            chart.parse("2*x*z+lam*y"),
            chart.parse("2*y*z-lam*x"),
            chart.parse("1-x^2-y^2+z^2"),
        ],
    )
    c = chart.parse("(x^2+y^2)/(x^2+y^2+z^2+1)^2")
    omega = VolumeForm(chart, chart.parse("1/(x^2+y^2+z^2+1)^3"))
    # both identities hold exactly with the parameter left symbolic
    assert expr_is_zero(divergence(X, omega))
    assert expr_is_zero(lie_derivative(X, c))
    report = flow_conservation(
        X, [c], start=(1.2, 0.0, 0.0), horizon=10.0, dt=1e-3, bindings={"lam": 1.0}
    )
    assert not report.truncated
    assert report.invariant_drift[0] <= 1e-6


@criterion(2, "periodic-flow section: pi#dh = X with lambda = 1 (sign anchor)")
def test_criterion_02_torus_section():
    chart = Chart(("p1", "p2"))
    pi = Tensor.multivector(chart, 2, {(0, 1): 1})
    h = chart.parse("-cos(3*p1-2*p2)")
    X = Tensor.vector(
        chart, [chart.parse("2*sin(3*p1-2*p2)"), chart.parse("3*sin(3*p1-2*p2)")]
    )
    sampler = default_sampler(chart, count=64, seed=42)
    cert = hamiltonization_check(pi, h, X, sampler)
    assert cert.lam_is_one
    assert cert.overall != "nonzero"
    assert cert.residual_max() <= 1e-9
    residual = sharp(pi, d(zero_form(chart, h))) - X
    verdict = tensor_tristate(residual, sampler)
    assert verdict.verdict == "zero" or verdict.residual_max <= 1e-9


@criterion(3, "rank-two builds from random Casimirs: exact Jacobi/Casimir, rank in {0,2}")
def test_criterion_03_flaschka_ratiu_suite():
    rng = random.Random(42)
    for trial in range(20):
        m = 3 if trial % 2 == 0 else 4
        chart = Chart(tuple(f"x{i + 1}" for i in range(m)))
        casimirs = [random_poly(rng, chart, degree=2) for _ in range(m - 2)]
        res = flaschka_ratiu(VolumeForm.euclidean(chart), casimirs)
        assert res.certificate("jacobi").overall == "zero"
        for k in range(len(casimirs)):
            assert res.certificate(f"casimir_{k + 1}").overall == "zero"
        sampler = default_sampler(chart, count=16, seed=42 + trial)
        for pt in sample_points(chart, sampler):
            assert rank_at(res.pi, pt) in (0, 2)


@criterion(4, "maximal-integral families: pi_i#dh_j = delta_ij lambda_i X, commuting pair")
def test_criterion_04_integrable_families():
    chart = Chart(("x1", "x2", "x3"))
    omega = VolumeForm.euclidean(chart)
    sampler = default_sampler(chart, box=[(0.25, 2.0)] * 3)
    instances = [
        (
            Tensor.vector(chart, [chart.parse("x2"), chart.parse("0"), chart.parse("0")]),
            [chart.parse("x2*x3"), chart.parse("x3")],
        ),
        (
            Tensor.vector(
                chart,
                [chart.parse("x2*x3"), chart.parse("-x1*x3"), chart.parse("0")],
            ),
            [chart.parse("(x1^2+x2^2)/2"), chart.parse("x3")],
        ),
    ]
    for X, integrals in instances:
        family = integrable_family(X, integrals, omega, sampler)
        for i, res in enumerate(family):
            ham = res.certificate("hamiltonization")
            assert ham.lam_is_constant and ham.lam is not None
            assert ham.overall == "zero"
            for j in range(len(integrals)):
                if j != i:
                    assert res.certificate(f"kills_h_{j + 1}").overall == "zero"
        compat = family[0].certificate("compat_1_2")
        verdict, = compat.verdicts()
        assert verdict.verdict == "zero" or verdict.residual_max <= 1e-9


@criterion(5, "decomposable bracket identity, 50 random pairs, exact")
def test_criterion_05_decomposable_identity():
    rng = random.Random(1234)
    for trial in range(50):
        m = 3 if trial < 25 else 4
        chart = Chart(tuple(f"x{i + 1}" for i in range(m)))
        X = random_vector(rng, chart, degree=2)
        Y = random_vector(rng, chart, degree=2)
        pi = wedge(Y, X)
        identity = schouten(pi, pi) - wedge(wedge(lie_bracket(X, Y), X), Y).scaled(2)
        assert tensor_is_zero(identity)


@criterion(6, "symmetry-normalized builds: lambda = 1 on orthant charts")
def test_criterion_06_hojman_fixtures():
    chart = Chart(("x1", "x2", "x3")).with_excluded(
        Expr.coord("x1"), Expr.coord("x2"), Expr.coord("x3")
    )
    X = Tensor.vector(
        chart,
        [
            chart.parse("x1*(x2-x3)"),
            chart.parse("x2*(x3-x1)"),
            chart.parse("x3*(x1-x2)"),
        ],
    )
    E = Tensor.vector(chart, [chart.parse("x1"), chart.parse("x2"), chart.parse("x3")])
    sampler = default_sampler(chart, box=[(0.25, 2.0)] * 3)
    res = hojman(X, chart.parse("x1*x2*x3"), E, sampler)
    assert res.certificate("hamiltonization").lam_is_one
    assert res.certificate("jacobi").overall == "zero"

    chart2 = Chart(("x1", "x2")).with_excluded(Expr.coord("x1"), Expr.coord("x2"))
    X2 = Tensor.vector(chart2, [chart2.parse("x1"), chart2.parse("-x2")])
    E2 = Tensor.vector(chart2, [chart2.parse("x1"), chart2.parse("x2")])
    sampler2 = default_sampler(chart2, box=[(0.25, 2.0)] * 2)
    res2 = hojman(X2, chart2.parse("x1*x2"), E2, sampler2)
    assert res2.certificate("hamiltonization").lam_is_one
    assert res2.certificate("jacobi").overall == "zero"


@criterion(7, "conformal invariance of rank-two structures, exact identity")
def test_criterion_07_conformal_invariance():
    rng = random.Random(777)
    for trial in range(20):
        m = 3 if trial % 2 == 0 else 4
        chart = Chart(tuple(f"x{i + 1}" for i in range(m)))
        casimirs = [random_poly(rng, chart, degree=2) for _ in range(m - 2)]
        pi = flaschka_ratiu(VolumeForm.euclidean(chart), casimirs).pi
        f = random_poly(rng, chart, degree=2)
        assert jacobi_check(pi.scaled(f)).overall == "zero"
        fpi = pi.scaled(f)
        df = d(zero_form(chart, f))
        identity = schouten(fpi, fpi) + wedge(sharp(pi, df), pi).scaled(
            Expr.number(2) * f
        )
        assert tensor_is_zero(identity)


@criterion(8, "primitive/integrating-factor pipeline with one global modular sign")
def test_criterion_08_unimodular_pipeline():
    rng = random.Random(4242)
    for trial in range(20):
        m = 3 if trial % 2 == 0 else 4
        chart = Chart(tuple(f"x{i + 1}" for i in range(m)))
        grade = rng.choice([1, 2])
        rho = Tensor.form(
            chart,
            grade,
            {
                idx: random_poly(rng, chart, degree=2)
                for idx in itertools.combinations(range(m), grade)
            },
        )
        closed = d(rho)
        assert_tensor_equal(d(primitive(closed)), closed)

    # plant-and-recover: exact proportionality of the recovered factor
    chart = Chart(("x", "y", "z"))
    planted = chart.parse("1+x^2")
    rho = Tensor.form(chart, 1, {(0,): chart.parse("4*x*y"), (1,): planted})
    basis = integrating_factor(rho, 2)
    assert len(basis) == 1
    ratio = normalize(basis[0] / planted)
    nf = _nf_of(ratio)
    assert not nf.den and list(nf.num) in ([], [()])  # a rational constant
    assert expr_is_zero(basis[0] - planted * ratio)
    # end-to-end on two instances; the modular sign must agree globally
    sigmas = []
    om = VolumeForm.euclidean(chart)
    saddle_rho = Tensor.form(
        chart,
        1,
        {
            (0,): chart.parse("(3+z)*y"),
            (1,): chart.parse("(3+z)*x"),
            (2,): chart.parse("2*x*y"),
        },
    )
    X1 = Tensor.vector(chart, [chart.parse("x"), chart.parse("-y"), chart.parse("0")])
    res1 = unimodularize(X1, om, saddle_rho, integrating_factor(saddle_rho, 1)[0])
    assert res1.certificate("hamiltonization").lam_is_one
    assert res1.certificate("unimodularity").overall == "zero"
    assert res1.certificate("modular").overall == "zero"
    sigmas.append(normalize(res1.extras["modular_sigma"]))

    shear_rho = Tensor.form(
        chart, 1, {(0,): chart.parse("(3+z)^2"), (2,): chart.parse("4*(3+z)*x")}
    )
    X2 = Tensor.vector(chart, [chart.parse("0"), chart.parse("-2*(3+z)"), chart.parse("0")])
    res2 = unimodularize(X2, om, shear_rho, integrating_factor(shear_rho, 2)[0])
    assert res2.certificate("modular").overall == "zero"
    sigmas.append(normalize(res2.extras["modular_sigma"]))
    assert all(expr_is_zero(s - sigmas[0]) for s in sigmas)
    assert expr_is_zero(sigmas[0] - Expr.number(conventions.MODULAR_SIGN))


@criterion(9, "product-chart worked example: lambda = 1 within 1e-9")
def test_criterion_09_foliated_example():
    from hamiltonize import foliated_build

    base = Chart(("t", "y1", "y2", "y3"))
    chart = base.with_excluded(base.parse("y1^2+y2^2"))
    om = VolumeForm(chart, chart.parse("1/(y1^2+y2^2)"))
    alpha = Tensor.form(chart, 1, {(0,): 1})
    beta = Tensor.form(
        chart,
        1,
        {
            (1,): chart.parse("y2/(y1^2+y2^2)"),
            (2,): chart.parse("-y1/(y1^2+y2^2)"),
        },
    )
    X = Tensor.vector(
        chart,
        [
            chart.parse("0"),
            chart.parse("y3*y1"),
            chart.parse("y3*y2"),
            chart.parse("y1^2+y2^2"),
        ],
    )
    h = chart.parse("(y3^2 - y1^2 - y2^2)/2")
    res = foliated_build(om, [alpha], beta, X=X, h=h)
    ham = res.certificate("hamiltonization")
    assert ham.lam_is_one
    assert ham.overall != "nonzero"
    assert ham.residual_max() <= 1e-9
    assert res.certificate("jacobi").overall != "nonzero"


@criterion(10, "two-generator sums: exact certificates, rank four, planted violation")
def test_criterion_10_torus2():
    base = Chart(("x1", "x2", "x3", "x4"))
    chart = base.with_excluded(base.parse("x1^2+x2^2"), base.parse("x3^2+x4^2"))
    X1 = Tensor.vector(
        chart, [chart.parse("-x2"), chart.parse("x1"), chart.parse("0"), chart.parse("0")]
    )
    X2 = Tensor.vector(
        chart, [chart.parse("0"), chart.parse("0"), chart.parse("-x4"), chart.parse("x3")]
    )
    Y1 = Tensor.vector(
        chart,
        [
            chart.parse("x1/(x1^2+x2^2)"),
            chart.parse("x2/(x1^2+x2^2)"),
            chart.parse("0"),
            chart.parse("0"),
        ],
    )
    Y2 = Tensor.vector(
        chart,
        [
            chart.parse("0"),
            chart.parse("0"),
            chart.parse("x3/(x3^2+x4^2)"),
            chart.parse("x4/(x3^2+x4^2)"),
        ],
    )
    res = torus2(
        X1, X2, chart.parse("(x1^2+x2^2)/2"), chart.parse("(x3^2+x4^2)/2"), Y1, Y2
    )
    for name in ("bracket_identity", "tangency", "jacobi", "momentum"):
        assert res.certificate(name).overall == "zero"
    for pt in sample_points(chart, default_sampler(chart, count=16)):
        assert rank_at(res.pi, pt) == 4

    flat = Chart(("x1", "x2", "x3", "x4"))
    planted = torus2(
        Tensor.basis_vector(flat, 0),
        Tensor.basis_vector(flat, 1),
        flat.parse("x3+x1"),
        flat.parse("x4"),
        Tensor.basis_vector(flat, 2),
        Tensor.vector(
            flat,
            [flat.parse("x3"), flat.parse("0"), flat.parse("-x3"), flat.parse("1")],
        ),
    )
    assert planted.certificate("jacobi").overall == "nonzero"
    assert planted.certificate("bracket_identity").overall == "zero"


@criterion(11, "recorded convention constants re-measured and consistent")
def test_criterion_11_convention_measurements():
    # lambda of the quadratic Hamiltonian on both canonical instances
    lambdas = []
    res3 = linear_fr(
        RationalMatrix(((0,), (1,), (0,))),
        RationalMatrix(((0, 1, 0), (0, 0, 0), (0, 0, 0))),
    )
    assert res3.lam is not None and res3.certificate("hamiltonization").overall == "zero"
    lambdas.append(normalize(res3.lam))
    res4 = linear_fr(
        RationalMatrix(((0, 0), (1, 0), (0, 0), (0, 1))),
        RationalMatrix(
            ((0, 1, 0, 0), (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 0, 0))
        ),
    )
    assert res4.lam is not None
    lambdas.append(normalize(res4.lam))
    assert all(expr_is_zero(l - lambdas[0]) for l in lambdas), "lambda drifts across fixtures"
    assert expr_is_zero(lambdas[0] - Expr.number(conventions.LINEAR_FR_LAMBDA))

    # modular sign sigma, measured independently of the recorded constant
    chart = Chart(("x", "y", "z"))
    om = VolumeForm.euclidean(chart)
    sigmas = []
    for X, rho in (
        (
            Tensor.vector(chart, [chart.parse("x"), chart.parse("-y"), chart.parse("0")]),
            Tensor.form(
                chart,
                1,
                {
                    (0,): chart.parse("(3+z)*y"),
                    (1,): chart.parse("(3+z)*x"),
                    (2,): chart.parse("2*x*y"),
                },
            ),
        ),
        (
            Tensor.vector(
                chart, [chart.parse("0"), chart.parse("-2*(3+z)"), chart.parse("0")]
            ),
            Tensor.form(
                chart,
                1,
                {(0,): chart.parse("(3+z)^2"), (2,): chart.parse("4*(3+z)*x")},
            ),
        ),
    ):
        pi_rho = vol_correspondence(om, rho)
        field = modular_vf(pi_rho, om)
        sigma = recover_scale(field, X)
        assert sigma is not None, "sigma measurement is absent"
        assert tensor_is_zero(field - X.scaled(sigma))
        sigmas.append(normalize(sigma))
    assert all(expr_is_zero(s - sigmas[0]) for s in sigmas), "sigma drifts across fixtures"
    assert expr_is_zero(sigmas[0] - Expr.number(conventions.MODULAR_SIGN))


@criterion(12, "byte-identical reports across repeated seeded runs")
def test_criterion_12_determinism():
    def run_all():
        chunks = []
        for path in sorted(FIXTURES.glob("*.toml")):
            report, _ = cli_run(str(path), seed=42)
            chunks.append(report_to_json(report))
        return "".join(chunks)

    first = run_all()
    second = run_all()
    assert first == second
    assert first  # non-empty
