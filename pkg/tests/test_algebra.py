import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from subspectra.algebra import (
    PRESETS,
    QuasiMetric,
    StratifiedAlgebra,
    abelian,
    bracket_closure,
    dilation,
    dist,
    format_algebra,
    get_preset,
    group_inverse,
    group_product,
    heisenberg,
    homogeneous_dimension,
    left_invariant_field,
    load_algebra,
    monte_carlo_ball_volume,
    parse_algebra,
    quasi_norm,
    validate_stratification,
)

H1 = get_preset("h1")
BONY = get_preset("bony2")

coords3 = arrays(np.float64, 3, elements=st.floats(-5, 5))
coords4 = arrays(np.float64, 4, elements=st.floats(-3, 3))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_stratified(name):
    assert validate_stratification(get_preset(name)) == []


@pytest.mark.parametrize(
    "name, d_hom", [("r1", 1), ("r2", 2), ("r3", 3), ("h1", 4), ("h2", 6), ("bony2", 7)]
)
def test_homogeneous_dimension(name, d_hom):
    assert homogeneous_dimension(get_preset(name)) == d_hom


def test_filtrations():
    assert bracket_closure(H1) == [2, 3]
    assert bracket_closure(BONY) == [2, 3, 4]


def test_wrong_layering_reports_generation_failure():
    c = H1.structure_constants.copy()
    bad = StratifiedAlgebra((1, 2), c, ("X", "Y", "T"))
    problems = validate_stratification(bad)
    assert any("generation" in p for p in problems)
    assert any("grading" in p for p in problems)


def test_jacobi_and_antisymmetry_violations_detected():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    problems = validate_stratification(StratifiedAlgebra((2, 1), c))
    assert any("antisymmetry" in p for p in problems)
    # a non-Lie bracket on a 2-step layering: [e1,e2]=e3, [e1,e3]=e2 breaks grading
    d = np.zeros((3, 3, 3))
    d[0, 1, 2], d[1, 0, 2] = 1, -1
    d[0, 2, 1], d[2, 0, 1] = 1, -1
    problems = validate_stratification(StratifiedAlgebra((2, 1), d))
    assert any("grading" in p for p in problems)


def test_jacobi_violation():
    # [e1,e2]=e2 style brackets that fail Jacobi; grading ignored here
    c = np.zeros((3, 3, 3))
    for (i, j, k) in [(0, 1, 1), (0, 2, 0), (1, 2, 1)]:
        c[i, j, k], c[j, i, k] = 1.0, -1.0
    problems = validate_stratification(StratifiedAlgebra((3,), c))
    assert any("Jacobi" in p for p in problems)


def test_shape_and_type_errors():
    with pytest.raises(ValueError, match="shape"):
        StratifiedAlgebra((2, 1), np.zeros((2, 2, 2)))
    with pytest.raises(TypeError):
        StratifiedAlgebra((1,), np.array([[[1j]]]))


def test_heisenberg_product_examples():
    np.testing.assert_array_equal(group_product([0, 0, 0], [1.5, -2, 3], H1), [1.5, -2, 3])
    np.testing.assert_allclose(group_product([1, 0, 0], [0, 1, 0], H1), [1, 1, 2])
    np.testing.assert_allclose(group_product([1, 0, 0], [1, 0, 0], H1), [2, 0, 0])


@given(coords3, coords3)
def test_heisenberg_closed_form(g, h):
    x, y, t = g
    xp, yp, tp = h
    expected = [x + xp, y + yp, t + tp + 2 * (x * yp - y * xp)]
    np.testing.assert_allclose(group_product(g, h, H1), expected, atol=1e-10)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_associativity_random_triples(name):
    a = get_preset(name)
    rng = np.random.default_rng(1)
    g = rng.standard_normal((3, 1000, a.dimension))
    left = group_product(group_product(g[0], g[1], a), g[2], a)
    right = group_product(g[0], group_product(g[1], g[2], a), a)
    assert np.max(np.abs(left - right)) < 1e-10
    np.testing.assert_allclose(group_product(g[0], group_inverse(g[0]), a), 0, atol=1e-12)


@settings(max_examples=50)
@given(coords4, coords4, coords4)
def test_bony_associativity(g1, g2, g3):
    left = group_product(group_product(g1, g2, BONY), g3, BONY)
    right = group_product(g1, group_product(g2, g3, BONY), BONY)
    np.testing.assert_allclose(left, right, atol=1e-9)


def test_bony_product_matches_flow_composition():
    # exp(sS) then exp(tT): BCH gives [T,S] = X1, [T,X1] = 2 X2 contributions
    s, t = 0.7, -1.3
    z = group_product([0, s, 0, 0], [t, 0, 0, 0], BONY)
    # log(exp(sS) exp(tT)) = sS + tT + st/2 [S,T] + (1/12)(s^2 t [S,[S,T]] + s t^2 [T,[T,S]])
    expected = [t, s, -s * t / 2, (s * t * t) * 2 / 12]
    np.testing.assert_allclose(z, expected, atol=1e-14)


def test_dilation_examples():
    np.testing.assert_array_equal(dilation([1, 1, 1], 2, H1), [2, 2, 4])
    np.testing.assert_array_equal(dilation([1, 2, 3], 1, H1), [1, 2, 3])
    g = np.array([1.0, 0.0, 5.0])
    assert quasi_norm(dilation(g, 3, H1), H1) == pytest.approx(3 * quasi_norm(g, H1), abs=1e-12)
    with pytest.raises(ValueError):
        dilation(g, 0, H1)


@given(coords3, st.floats(0.1, 10), st.floats(0.1, 10))
def test_dilation_group_and_homogeneity(g, r, s):
    np.testing.assert_allclose(
        dilation(dilation(g, s, H1), r, H1), dilation(g, r * s, H1), rtol=1e-12, atol=1e-12
    )
    assert abs(quasi_norm(dilation(g, r, H1), H1) - r * quasi_norm(g, H1)) < 1e-12 * max(1, r * 10)


def test_quasi_norm_examples():
    assert quasi_norm([0, 0, 0], H1) == 0
    assert quasi_norm([1, 1, 2], H1) == pytest.approx(math.sqrt(2))
    assert QuasiMetric(H1).ball_volume(1) == 8
    assert QuasiMetric(H1).ball_volume(0.5) == pytest.approx(8 * 0.5**4)


@given(coords3, coords3, coords3)
def test_quasi_metric_invariances(g, a, b):
    metric = QuasiMetric(H1)
    assert metric.norm(group_inverse(g)) == pytest.approx(metric.norm(g))
    left = dist(group_product(g, a, H1), group_product(g, b, H1), H1)
    assert left == pytest.approx(dist(a, b, H1), abs=1e-10, rel=1e-10)


def test_quasi_triangle_ratio():
    rng = np.random.default_rng(3)
    g1 = rng.uniform(-3, 3, (10**5, 3))
    g2 = rng.uniform(-3, 3, (10**5, 3))
    metric = QuasiMetric(H1)
    ratio = metric.norm(group_product(g1, g2, H1)) / (metric.norm(g1) + metric.norm(g2))
    assert ratio.max() <= metric.triangle_constant == 2


def test_monte_carlo_ball_volume_scaling():
    metric = QuasiMetric(H1)
    est = monte_carlo_ball_volume(metric, [0.5, 1.0, 2.0], 10**6, rng=5)
    # sampling box is that of the largest ball; each ratio is within 3 standard errors
    v1 = est.volumes[1]
    for r, v, se in zip(est.radii, est.volumes, est.stderr):
        rel_err = se / v + est.stderr[1] / v1
        assert abs(v / v1 - r**4) <= 3 * rel_err * r**4
    assert est.exponent == pytest.approx(4.0, abs=0.1)


def test_euclidean_layer_norm_ball_volume():
    metric = QuasiMetric(H1, layer_norm="euclidean")
    assert metric.ball_volume(1.0) == pytest.approx(math.pi * 2)
    est = monte_carlo_ball_volume(metric, [1.0], 2 * 10**5, rng=0)
    assert est.volumes[0] == pytest.approx(2 * math.pi, abs=4 * est.stderr[0])


def test_left_invariant_fields_heisenberg():
    x_field = left_invariant_field(H1, 0)
    y_field = left_invariant_field(H1, 1)
    assert x_field == [{(0, 0, 0): 1.0}, {}, {(0, 1, 0): -2.0}]
    assert y_field == [{}, {(0, 0, 0): 1.0}, {(1, 0, 0): 2.0}]


def _rational(c):
    return sympy.Rational(float(c)).limit_denominator(10**6)


def _sympy_field(coeffs, symbols):
    def apply(u):
        return sum(
            sum(_rational(c) * sympy.Mul(*[s**e for s, e in zip(symbols, mono)]) for mono, c in poly.items())
            * sympy.diff(u, symbols[a])
            for a, poly in enumerate(coeffs)
        )

    return apply


@pytest.mark.parametrize("name", ["h1", "bony2"])
def test_symbolic_commutators_match_structure_constants(name):
    a = get_preset(name)
    symbols = sympy.symbols(f"q0:{a.dimension}")
    u = sympy.Function("u")(*symbols)
    fields = [_sympy_field(left_invariant_field(a, i), symbols) for i in range(a.dimension)]
    for i in range(a.dimension):
        for j in range(a.dimension):
            comm = sympy.expand(fields[i](fields[j](u)) - fields[j](fields[i](u)))
            expected = sum(
                _rational(a.structure_constants[i, j, k]) * fields[k](u)
                for k in range(a.dimension)
            )
            assert sympy.simplify(comm - sympy.expand(expected)) == 0


def test_heisenberg_commutator_is_4_dt():
    x, y, t = sympy.symbols("x y t")
    u = sympy.Function("u")(x, y, t)
    X = lambda f: sympy.diff(f, x) - 2 * y * sympy.diff(f, t)
    Y = lambda f: sympy.diff(f, y) + 2 * x * sympy.diff(f, t)
    assert sympy.simplify(X(Y(u)) - Y(X(u)) - 4 * sympy.diff(u, t)) == 0


@pytest.mark.parametrize("name", ["h1", "h2", "bony2"])
def test_fields_are_derivatives_of_right_translation(name):
    a = get_preset(name)
    rng = np.random.default_rng(2)
    g = rng.standard_normal(a.dimension)
    eps = 1e-6
    for i in range(a.dimension):
        e = np.eye(a.dimension)[i] * eps
        numeric = (group_product(g, e, a) - group_product(g, -e, a)) / (2 * eps)
        poly = left_invariant_field(a, i)
        symbolic = [
            sum(c * np.prod(g ** np.array(m)) for m, c in p.items()) for p in poly
        ]
        np.testing.assert_allclose(numeric, symbolic, atol=1e-7)


def test_algebra_file_roundtrip(tmp_path):
    text = format_algebra(BONY)
    back = parse_algebra(text)
    np.testing.assert_array_equal(back.structure_constants, BONY.structure_constants)
    assert back.layer_dims == BONY.layer_dims
    path = tmp_path / "heis.alg"
    path.write_text("# Heisenberg\ndimension 3\nlayers 2 1\nbracket 1 2 3 4\n")
    a = load_algebra(path)
    assert validate_stratification(a) == []
    np.testing.assert_array_equal(a.structure_constants, heisenberg(1).structure_constants)
    assert load_algebra("r2").dimension == 2


@pytest.mark.parametrize(
    "text, msg",
    [
        ("layers 2 1\n", "dimension"),
        ("dimension 3\nlayers 2 2\n", "sum"),
        ("dimension 3\nlayers 2 1\nbracket 1 2 5 1\n", "range"),
        ("dimension 3\nlayers 2 1\nfoo 1\n", "unknown"),
    ],
)
def test_algebra_file_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        parse_algebra(text)


def test_abelian_product_is_addition():
    a = abelian(3)
    np.testing.assert_array_equal(group_product([1, 2, 3], [4, 5, 6], a), [5, 7, 9])
