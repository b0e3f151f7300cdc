import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lindex.derivatives import (
    QuadratureError,
    angular_count,
    cauchy_derivatives,
    default_cauchy_radius,
    derivative_cauchy,
    log_normalized_derivatives,
    normalized_derivative,
    symbolic_derivative,
    wirtinger_partial,
)
from lindex.expr import parse_expression
from lindex.functions import FUNCTION_CATALOG, EntireFunction, WeightVector, catalog_function, catalog_weight
from lindex.modulus import log_max_modulus
from lindex.polydisc import GridSpec, multi_indices

z1, z2 = sp.symbols("z1 z2")
SYMPY_CATALOG = {
    "exp_z1z2": sp.exp(z1 * z2),
    "exp": sp.exp(z1),
    "sin": sp.sin(z1),
    "cos": sp.cos(z1),
    "cubic": z1**3 - 2 * z1 + 1,
    "square": z1**2,
    "poly2": z1**2 * z2 - 3 * z2**3 + z1 - 2,
    "exp_sq": sp.exp(z1**2),
    "const": sp.Integer(3),
}


def test_cauchy_examples():
    assert derivative_cauchy(EntireFunction.parse("z^3", 1), [1], [2]) == pytest.approx(6, abs=1e-12)
    assert derivative_cauchy(catalog_function("exp_z1z2"), [0, 0], [1, 0]) == pytest.approx(0, abs=1e-12)
    assert derivative_cauchy(catalog_function("exp"), [0], [3]) == pytest.approx(1, rel=1e-12)


def test_normalized_derivative_examples():
    f, L = catalog_function("exp_z1z2"), catalog_weight("cross_L")
    assert normalized_derivative(f, L, [0, 0], (0, 0)) == pytest.approx(1)
    assert normalized_derivative(f, L, [0, 0], (1, 1)) == pytest.approx(1)
    assert normalized_derivative(f, L, [0, 0], (2, 0)) == 0
    assert normalized_derivative(f, L, [0, 0], (1, 1), method="cauchy") == pytest.approx(1, rel=1e-10)


@pytest.mark.parametrize("name", sorted(SYMPY_CATALOG))
def test_symbolic_matches_independent_cas(name):
    text, n = FUNCTION_CATALOG[name]
    f = EntireFunction.parse(text, n)
    expr = SYMPY_CATALOG[name]
    syms = (z1, z2)[:n]
    point = [0.4 - 0.3j, -0.2 + 0.7j][:n]
    for K in multi_indices(n, 4):
        ref = expr
        for j, k in enumerate(K.entries):
            ref = sp.diff(ref, syms[j], k)
        expected = complex(ref.subs(dict(zip(syms, point))).evalf(30))
        got = complex(symbolic_derivative(f, np.array([point]), K.entries)[0])
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_cauchy_agrees_with_symbolic_on_random_points(rng):
    for name in FUNCTION_CATALOG:
        f = catalog_function(name)
        Ks = multi_indices(f.arity, 4)
        for _ in range(5):
            z = rng.uniform(-1, 1, f.arity) + 1j * rng.uniform(-1, 1, f.arity)
            vals, errs = cauchy_derivatives(f, z, Ks)
            sym = np.array([symbolic_derivative(f, z[None], K.entries)[0] for K in Ks])
            assert np.all(np.abs(vals - sym) <= 1e-8 * (1 + np.abs(sym)))
            assert np.all(np.abs(vals - sym) <= errs + 1e-12 * (1 + np.abs(sym)))


def test_cauchy_estimate_sanity(rng):
    for name in ["exp_z1z2", "sin", "cubic", "exp_sq", "poly2"]:
        f = catalog_function(name)
        z0 = rng.uniform(-1, 1, f.arity) + 0j
        rho = np.full(f.arity, 0.7)
        Ks = multi_indices(f.arity, 5)
        vals, _ = cauchy_derivatives(f, z0, Ks, rho)
        M = log_max_modulus(f, rho, GridSpec(64, refinement_depth=12), center=z0).value
        for K, v in zip(Ks, vals):
            bound = K.factorial() * M / np.prod(rho ** np.array(K.entries))
            assert abs(v) <= bound * (1 + 1e-9) + 1e-9


def test_cauchy_nonconvergence_raises():
    f = catalog_function("exp_sq")
    with pytest.raises(QuadratureError):
        cauchy_derivatives(f, [0], [(6,)], rho=[40.0])


def test_grid_resolution_precondition():
    with pytest.raises(ValueError):
        cauchy_derivatives(catalog_function("exp"), [0], [(6,)], grid=GridSpec(angular_resolution=16))
    with pytest.raises(ValueError):
        cauchy_derivatives(catalog_function("exp"), [0], [(1,)], rho=[0.0])


@given(st.lists(st.integers(0, 40), min_size=1, max_size=3))
def test_angular_count_is_power_of_two(K):
    m = angular_count(K)
    assert m & (m - 1) == 0
    assert m >= max([64] + [4 * (k + 1) for k in K])
    assert m < 2 * max([64] + [4 * (k + 1) for k in K])


def test_default_cauchy_radius():
    L = catalog_weight("cross_L")
    np.testing.assert_allclose(default_cauchy_radius(2, L, [3, 0]), [1.0, 0.25])
    np.testing.assert_allclose(default_cauchy_radius(2), [1, 1])


def test_log_normalized_methods_agree():
    f, L = catalog_function("poly2"), catalog_weight("one_plus_abs_2")
    Z = np.array([[0.5 + 0.5j, -1.0], [2.0, 1j]])
    Ks = multi_indices(2, 4)
    a = log_normalized_derivatives(f, L, Z, Ks, "symbolic")
    b = log_normalized_derivatives(f, L, Z, Ks, "cauchy")
    finite = np.isfinite(a)
    np.testing.assert_allclose(a[finite], b[finite], rtol=1e-8, atol=1e-8)
    # derivatives that vanish identically show up as tiny Cauchy values
    assert np.all(b[~finite] < -20)


def test_wirtinger_on_holomorphic_and_modulus():
    node = parse_expression("z1^2*z2", 2)
    Z = np.array([[1 + 1j, 2 - 1j]])
    assert complex(wirtinger_partial(node, Z, 1)[0]) == pytest.approx(2 * (1 + 1j) * (2 - 1j), rel=1e-8)
    # d|z|/dz = conj(z) / (2|z|)
    absn = parse_expression("abs(z1)", 1)
    z = 3 + 4j
    assert complex(wirtinger_partial(absn, [[z]], 1)[0]) == pytest.approx(np.conj(z) / 10, rel=1e-8)


def test_factorial_scaling_of_normalized_derivative():
    f = catalog_function("exp")
    L = WeightVector.constant(1)
    for p in range(6):
        assert normalized_derivative(f, L, [0.3], (p,)) == pytest.approx(math.exp(0.3) / math.factorial(p))
