import random

import pytest

from hamiltonize import (
    Chart,
    Expr,
    Metric,
    Tensor,
    VolumeForm,
    d,
    diff,
    divergence,
    interior,
    lie_bracket,
    lie_derivative,
    normalize,
    pairing,
    rank_at,
    schouten,
    sharp,
    vol_correspondence,
    wedge,
)
from hamiltonize import conventions
from hamiltonize.exterior import ExteriorError, lie_derivative_metric

from conftest import (
    assert_tensor_equal,
    expr_is_zero,
    random_bivector,
    random_poly,
    random_vector,
    tensor_is_zero,
)


@pytest.fixture
def ch3():
    return Chart(("x", "y", "z"))


def dx(chart, i):
    return Tensor.basis_form(chart, i)


def ddx(chart, i):
    return Tensor.basis_vector(chart, i)


def zero_form(chart, h):
    return Tensor.form(chart, 0, {(): h})


# ---------------------------------------------------------------------------
# wedge
# ---------------------------------------------------------------------------


def test_wedge_basis(ch3):
    w = wedge(dx(ch3, 0), dx(ch3, 1))
    assert_tensor_equal(w, Tensor.form(ch3, 2, {(0, 1): 1}))


def test_wedge_nilpotent(ch3):
    assert tensor_is_zero(wedge(dx(ch3, 0), dx(ch3, 0)))


def test_wedge_of_differentials(ch3):
    dh1 = d(zero_form(ch3, ch3.parse("x^2")))
    dh2 = d(zero_form(ch3, ch3.parse("y")))
    assert_tensor_equal(
        wedge(dh1, dh2), Tensor.form(ch3, 2, {(0, 1): ch3.parse("2*x")})
    )


def test_wedge_graded_commutative(ch3):
    rng = random.Random(5)
    for _ in range(5):
        a = random_bivector(rng, ch3)
        b = Tensor.multivector(ch3, 1, {(i,): random_poly(rng, ch3) for i in range(3)})
        # deg 2 x deg 1: A^B = (-1)^(2*1) B^A = B^A
        assert_tensor_equal(wedge(a, b), wedge(b, a))
        c = Tensor.form(ch3, 1, {(0,): random_poly(rng, ch3)})
        e = Tensor.form(ch3, 1, {(2,): random_poly(rng, ch3)})
        assert_tensor_equal(wedge(c, e), wedge(e, c).scaled(-1))


def test_wedge_mismatch_raises(ch3):
    with pytest.raises(ExteriorError):
        wedge(dx(ch3, 0), ddx(ch3, 1))
    other = Chart(("u", "v"))
    with pytest.raises(ExteriorError):
        wedge(dx(ch3, 0), Tensor.basis_form(other, 0))


# ---------------------------------------------------------------------------
# exterior derivative
# ---------------------------------------------------------------------------


def test_d_basic(ch3):
    w = Tensor.form(ch3, 1, {(1,): ch3.parse("x")})  # x dy
    assert_tensor_equal(d(w), Tensor.form(ch3, 2, {(0, 1): 1}))


def test_d_of_casimir_wedge_closed(ch3):
    rng = random.Random(11)
    c1, c2 = random_poly(rng, ch3), random_poly(rng, ch3)
    w = wedge(d(zero_form(ch3, c1)), d(zero_form(ch3, c2)))
    assert tensor_is_zero(d(w))


def test_d_angle_form_with_parameter():
    chart = Chart(("y1", "y2", "y3"), params=("b",)).with_excluded(
        Chart(("y1", "y2", "y3")).parse("y1^2+y2^2")
    )
    rho = Tensor.form(
        chart,
        1,
        {
            (0,): chart.parse("exp(b)*y2/(y1^2+y2^2)"),
            (1,): chart.parse("-exp(b)*y1/(y1^2+y2^2)"),
        },
    )
    assert tensor_is_zero(d(rho))


@pytest.mark.parametrize("grade", [0, 1, 2])
def test_dd_zero_random(grade):
    chart = Chart(("x", "y", "z", "w"))
    rng = random.Random(grade + 17)
    import itertools

    entries = {
        idx: random_poly(rng, chart)
        for idx in itertools.combinations(range(4), grade)
    }
    w = Tensor.form(chart, grade, entries)
    assert tensor_is_zero(d(d(w)))


# ---------------------------------------------------------------------------
# interior product
# ---------------------------------------------------------------------------


def test_interior_vector(ch3):
    w = wedge(dx(ch3, 0), dx(ch3, 1))
    assert_tensor_equal(interior(ddx(ch3, 0), w), dx(ch3, 1))


def test_interior_composition_rule(ch3):
    omega = Tensor.form(ch3, 3, {(0, 1, 2): 1})
    biv = Tensor.multivector(ch3, 2, {(0, 1): 1})
    composed = interior(ddx(ch3, 0), interior(ddx(ch3, 1), omega))
    assert_tensor_equal(interior(biv, omega), composed)
    # against dz up to the global convention sign
    assert_tensor_equal(interior(biv, omega), dx(ch3, 2).scaled(-1))


def test_interior_top_pairing(ch3):
    chart = Chart(("p1", "p2"))
    pi = Tensor.multivector(chart, 2, {(0, 1): 1})
    omega = Tensor.form(chart, 2, {(0, 1): 1})
    out = interior(pi, omega)
    assert_tensor_equal(
        out, Tensor.form(chart, 0, {(): conventions.TOP_PAIRING_SIGN})
    )


@pytest.mark.parametrize("seed", range(4))
def test_interior_decomposable_composition_random(seed):
    chart = Chart(("x", "y", "z", "w"))
    rng = random.Random(seed)
    A = random_vector(rng, chart)
    B = random_vector(rng, chart)
    import itertools

    omega = Tensor.form(
        chart,
        3,
        {idx: random_poly(rng, chart) for idx in itertools.combinations(range(4), 3)},
    )
    assert_tensor_equal(
        interior(wedge(A, B), omega), interior(A, interior(B, omega))
    )


# ---------------------------------------------------------------------------
# sharp
# ---------------------------------------------------------------------------


def test_sharp_pins_sign_convention():
    chart = Chart(("p1", "p2"))
    pi = Tensor.multivector(chart, 2, {(0, 1): 1})
    h = chart.parse("-cos(3*p1-2*p2)")
    X = sharp(pi, d(zero_form(chart, h)))
    expected = Tensor.vector(
        chart, [chart.parse("2*sin(3*p1-2*p2)"), chart.parse("3*sin(3*p1-2*p2)")]
    )
    assert_tensor_equal(X, expected)


def test_sharp_zero_cases(ch3):
    pi = Tensor.multivector(ch3, 2, {(0, 1): ch3.parse("x")})
    assert tensor_is_zero(sharp(pi, Tensor.zero(ch3, 1, "form")))
    assert tensor_is_zero(sharp(Tensor.zero(ch3, 2, "multivector"), dx(ch3, 0)))


# ---------------------------------------------------------------------------
# lie bracket
# ---------------------------------------------------------------------------


def test_lie_bracket_basic(ch3):
    X = ddx(ch3, 0)
    Y = Tensor.multivector(ch3, 1, {(0,): ch3.parse("x")})
    assert_tensor_equal(lie_bracket(X, Y), ddx(ch3, 0))


def test_homogeneous_euler_relation():
    chart = Chart(("x",))
    X = Tensor.vector(chart, [chart.parse("x^2")])
    E = Tensor.vector(chart, [chart.parse("x")])
    assert_tensor_equal(lie_bracket(X, E), X.scaled(-1))


def test_commuting_pair():
    chart = Chart(("x", "y", "z"))
    X1 = Tensor.vector(
        chart,
        [chart.parse("2*x*z"), chart.parse("2*y*z"), chart.parse("1-x^2-y^2+z^2")],
    )
    X2 = Tensor.vector(chart, [chart.parse("y"), chart.parse("-x"), chart.parse("0")])
    assert tensor_is_zero(lie_bracket(X1, X2))


@pytest.mark.parametrize("seed", range(3))
def test_lie_bracket_jacobi_random(seed):
    chart = Chart(("x", "y", "z"))
    rng = random.Random(seed + 100)
    X, Y, Z = (random_vector(rng, chart) for _ in range(3))
    total = (
        lie_bracket(X, lie_bracket(Y, Z))
        + lie_bracket(Y, lie_bracket(Z, X))
        + lie_bracket(Z, lie_bracket(X, Y))
    )
    assert tensor_is_zero(total)


# ---------------------------------------------------------------------------
# schouten
# ---------------------------------------------------------------------------


def _bivector_self_bracket_oracle(pi):
    """Independent coordinate expansion of [pi, pi] for a bivector.

    With the decomposable-term convention used by ``schouten`` this equals
    -2 sum_l (pi^(li) d_l pi^(jk) + pi^(lj) d_l pi^(ki) + pi^(lk) d_l pi^(ij))
    on each increasing (i, j, k).
    """
    chart = pi.chart
    m = chart.m

    def entry(i, j):
        if i == j:
            return Expr.number(0)
        if i < j:
            return pi.coeff((i, j))
        return Expr.number(-1) * pi.coeff((j, i))

    out = {}
    import itertools

    for i, j, k in itertools.combinations(range(m), 3):
        total = Expr.number(0)
        for l in range(m):
            name = chart.coords[l]
            total = total + entry(l, i) * diff(entry(j, k), name)
            total = total + entry(l, j) * diff(entry(k, i), name)
            total = total + entry(l, k) * diff(entry(i, j), name)
        out[(i, j, k)] = Expr.number(-2) * total
    return Tensor.multivector(chart, 3, out)


@pytest.mark.parametrize("seed", range(5))
def test_schouten_bivector_matches_coordinate_oracle(seed):
    chart = Chart(("x", "y", "z", "w"))
    rng = random.Random(seed + 55)
    pi = random_bivector(rng, chart)
    assert_tensor_equal(schouten(pi, pi), _bivector_self_bracket_oracle(pi))


def test_schouten_degree_one_is_lie_bracket():
    chart = Chart(("x", "y", "z"))
    rng = random.Random(2)
    X, Y = random_vector(rng, chart), random_vector(rng, chart)
    assert_tensor_equal(schouten(X, Y), lie_bracket(X, Y))


def test_schouten_constant_symplectic_vanishes():
    chart = Chart(("x1", "x2", "x3", "x4"))
    pi = Tensor.multivector(chart, 2, {(0, 1): 1, (2, 3): 1})
    assert tensor_is_zero(schouten(pi, pi))


@pytest.mark.parametrize("seed", range(5))
def test_schouten_decomposable_identity_random(seed):
    chart = Chart(("x", "y", "z"))
    rng = random.Random(seed + 31)
    X, Y = random_vector(rng, chart), random_vector(rng, chart)
    pi = wedge(Y, X)
    rhs = wedge(wedge(lie_bracket(X, Y), X), Y).scaled(2)
    assert_tensor_equal(schouten(pi, pi), rhs)


@pytest.mark.parametrize("seed", range(4))
def test_schouten_graded_antisymmetry(seed):
    chart = Chart(("x", "y", "z"))
    rng = random.Random(seed + 77)
    cases = [
        (random_vector(rng, chart), random_vector(rng, chart)),
        (random_vector(rng, chart), random_bivector(rng, chart)),
        (random_bivector(rng, chart), random_bivector(rng, chart)),
    ]
    for A, B in cases:
        a, b = A.grade, B.grade
        sign = (-1) ** ((a - 1) * (b - 1))
        assert tensor_is_zero(schouten(A, B) + schouten(B, A).scaled(sign))


@pytest.mark.parametrize("seed", range(3))
def test_schouten_graded_leibniz(seed):
    # [A, B ^ C] = [A,B] ^ C + (-1)^((a-1) b) B ^ [A, C] for a vector A
    chart = Chart(("x", "y", "z"))
    rng = random.Random(seed + 13)
    A = random_vector(rng, chart)
    B = random_vector(rng, chart)
    C = random_vector(rng, chart)
    lhs = schouten(A, wedge(B, C))
    rhs = wedge(schouten(A, B), C) + wedge(B, schouten(A, C))
    assert_tensor_equal(lhs, rhs)


# ---------------------------------------------------------------------------
# lie derivative / divergence
# ---------------------------------------------------------------------------


def test_lie_derivative_first_integrals(ch3):
    X = ddx(ch3, 2)
    c = ch3.parse("(x^2+y^2)/2")
    assert expr_is_zero(lie_derivative(X, c))

    chart = Chart(("x", "y", "z"), params=("lam",))
    Xl = Tensor.vector(
        chart,
        [
            chart.parse("2*x*z+lam*y"),
            chart.parse("2*y*z-lam*x"),
            chart.parse("1-x^2-y^2+z^2"),
        ],
    )
    c2 = chart.parse("(x^2+y^2)/(x^2+y^2+z^2+1)^2")
    assert expr_is_zero(lie_derivative(Xl, c2))


def test_lie_derivative_volume_is_divergence():
    chart = Chart(("x",))
    X = Tensor.vector(chart, [chart.parse("x")])
    om = VolumeForm.euclidean(chart)
    assert expr_is_zero(divergence(X, om) - Expr.number(1))


@pytest.mark.parametrize("seed", range(4))
def test_cartan_formula_random(seed):
    chart = Chart(("x", "y", "z"))
    rng = random.Random(seed + 5)
    X = random_vector(rng, chart)
    w = Tensor.form(chart, 1, {(i,): random_poly(rng, chart) for i in range(3)})
    lhs = lie_derivative(X, w)
    rhs = interior(X, d(w)) + d(interior(X, w))
    assert_tensor_equal(lhs, rhs)


def test_divergence_examples():
    chart = Chart(("x", "y", "z"), params=("lam",))
    X = Tensor.vector(
        chart,
        [
            chart.parse("2*x*z+lam*y"),
            chart.parse("2*y*z-lam*x"),
            chart.parse("1-x^2-y^2+z^2"),
        ],
    )
    om = VolumeForm(chart, chart.parse("1/(x^2+y^2+z^2+1)^3"))
    assert expr_is_zero(divergence(X, om))

    flat = Chart(("x", "y"))
    assert expr_is_zero(divergence(Tensor.basis_vector(flat, 0), VolumeForm.euclidean(flat)))

    rng = random.Random(9)
    chart3 = Chart(("x", "y", "z"))
    A = [[random_poly(rng, chart3, degree=0) for _ in range(3)] for _ in range(3)]
    coords = [Expr.coord(n) for n in chart3.coords]
    X = Tensor.vector(
        chart3,
        [sum((A[i][j] * coords[j] for j in range(3)), Expr.number(0)) for i in range(3)],
    )
    trace = sum((A[i][i] for i in range(3)), Expr.number(0))
    assert expr_is_zero(divergence(X, VolumeForm.euclidean(chart3)) - trace)


@pytest.mark.parametrize("seed", range(3))
def test_interior_volume_leibniz_compatibility(seed):
    # L_X(i_pi Omega) = i_(L_X pi) Omega + i_pi (L_X Omega)
    chart = Chart(("x", "y", "z"))
    rng = random.Random(seed + 23)
    X = random_vector(rng, chart)
    pi = random_bivector(rng, chart)
    E = random_poly(rng, chart) ** 2 + Expr.number(1)
    om = VolumeForm(chart, E)
    lhs = lie_derivative(X, interior(pi, om.as_form()))
    div = divergence(X, om)
    rhs = interior(schouten(X, pi), om.as_form()) + interior(
        pi, om.as_form().scaled(div)
    )
    assert_tensor_equal(lhs, rhs)


# ---------------------------------------------------------------------------
# rank / volume correspondence
# ---------------------------------------------------------------------------


def test_rank_of_constant_bivector(ch3):
    pi = Tensor.multivector(ch3, 2, {(0, 1): 1})
    assert rank_at(pi, (0.3, -1.2, 0.7)) == 2


def test_rank_of_casimir_wedge_form():
    chart = Chart(("x", "y", "z", "w"))
    c1, c2 = chart.parse("x + y*w"), chart.parse("z")
    form = wedge(
        d(Tensor.form(chart, 0, {(): c1})), d(Tensor.form(chart, 0, {(): c2}))
    )
    assert rank_at(form, (0.5, 0.25, -1.0, 0.75)) == 2


def test_rank_of_zero_tensor(ch3):
    assert rank_at(Tensor.zero(ch3, 2, "multivector"), (1.0, 1.0, 1.0)) == 0


def test_vol_correspondence_sphere_casimir(ch3):
    om = VolumeForm.euclidean(ch3)
    c = ch3.parse("(x^2+y^2+z^2)^2/2")
    dc = d(zero_form(ch3, c))
    pi = vol_correspondence(om, dc)
    assert_tensor_equal(interior(pi, om.as_form()), dc)


def test_vol_correspondence_zero(ch3):
    om = VolumeForm.euclidean(ch3)
    assert tensor_is_zero(vol_correspondence(om, Tensor.zero(ch3, 2, "multivector")))
    assert tensor_is_zero(vol_correspondence(om, Tensor.zero(ch3, 1, "form")))


@pytest.mark.parametrize("seed", range(4))
def test_vol_correspondence_round_trip(seed):
    chart = Chart(("x", "y", "z", "w"))
    rng = random.Random(seed + 41)
    pi = random_bivector(rng, chart)
    E = random_poly(rng, chart) ** 2 + Expr.number(1)
    om = VolumeForm(chart, E)
    assert_tensor_equal(vol_correspondence(om, vol_correspondence(om, pi)), pi)


# ---------------------------------------------------------------------------
# metric
# ---------------------------------------------------------------------------


def test_metric_inverse_is_exact():
    chart = Chart(("x", "y"))
    g = Metric.from_matrix(
        chart,
        [
            [chart.parse("1+x^2"), chart.parse("x*y")],
            [chart.parse("x*y"), chart.parse("1+y^2")],
        ],
    )
    prod = [
        [
            sum(
                (g.g.entry(i, k) * g.eta.entry(k, j) for k in range(2)),
                Expr.number(0),
            )
            for j in range(2)
        ]
        for i in range(2)
    ]
    assert expr_is_zero(prod[0][0] - Expr.number(1))
    assert expr_is_zero(prod[0][1])


def test_metric_invariance_of_rotation():
    chart = Chart(("x", "y"))
    X = Tensor.vector(chart, [chart.parse("y"), chart.parse("-x")])
    lg = lie_derivative_metric(X, Metric.euclidean(chart))
    assert all(expr_is_zero(lg.entry(i, j)) for i in range(2) for j in range(2))
