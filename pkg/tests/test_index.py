import math

import numpy as np
import pytest

from lindex.functions import EntireFunction, WeightVector, catalog_function, catalog_weight
from lindex.index import UNBOUNDED, estimate_joint_index, index_margin, local_behavior_ratio
from lindex.polydisc import GridSpec, polydisc_samples

ONE = WeightVector.constant(1)
SHARP_GRID = polydisc_samples([0, 0], [10, 10], GridSpec(8, 6))
DISC20 = polydisc_samples([0], [20], GridSpec(32, 21))


def test_sharpness_example_index_zero():
    est = estimate_joint_index(catalog_function("exp_z1z2"), catalog_weight("cross_L"), SHARP_GRID, m_max=4, j_max=8)
    assert est.candidate_N == 0
    assert est.verdict == "bounded"
    assert est.worst_margin >= 0
    assert est.grid["points"] == len(SHARP_GRID)


def test_exp_index_zero():
    assert estimate_joint_index(catalog_function("exp"), ONE, DISC20).candidate_N == 0


def test_sin_index_one_with_direct_oracle():
    est = estimate_joint_index(catalog_function("sin"), ONE, DISC20, j_max=8)
    assert est.candidate_N == 1
    # oracle: |sin^(p)| alternates between |sin z| and |cos z|
    z = DISC20[:, 0]
    s, c = np.abs(np.sin(z)), np.abs(np.cos(z))
    fact = np.array([math.factorial(p) for p in range(9)])
    table = np.array([(s if p % 2 == 0 else c) / fact[p] for p in range(9)])
    lhs = table.max(axis=0)
    assert np.any(lhs > table[0] * (1 + 1e-9))  # m = 0 fails (e.g. at z = 0)
    assert np.all(lhs <= table[:2].max(axis=0) * (1 + 1e-12))  # m = 1 passes


def test_polynomial_index_equals_degree_at_origin():
    est = estimate_joint_index(catalog_function("square"), ONE, polydisc_samples([0], [3], GridSpec(8, 4)))
    assert est.candidate_N == 2


def test_unbounded_within_scan():
    est = estimate_joint_index(catalog_function("exp_sq"), ONE, polydisc_samples([0], [6], GridSpec(16, 7)), m_max=3, j_max=7)
    assert est.candidate_N is None
    assert est.as_dict()["candidate_N"] == UNBOUNDED
    assert est.worst_margin < 0
    assert est.witness["m"] == 3


def test_monotone_stabilization():
    for name, L, grid in [("sin", ONE, DISC20), ("exp_z1z2", catalog_weight("cross_L"), SHARP_GRID)]:
        f = catalog_function(name)
        a = estimate_joint_index(f, L, grid, m_max=4, j_max=8)
        b = estimate_joint_index(f, L, grid, m_max=5, j_max=9)
        assert a.candidate_N == b.candidate_N


def test_witness_reproduces_margin():
    for name, L, grid in [("sin", ONE, DISC20), ("cubic", ONE, DISC20), ("exp_sq", ONE, DISC20[:200])]:
        f = catalog_function(name)
        est = estimate_joint_index(f, L, grid, m_max=3, j_max=7)
        w = est.witness
        assert index_margin(f, L, w["z"], w["m"], 7) == pytest.approx(w["margin"], abs=1e-10)


def test_doubled_weight_does_not_raise_index():
    for name, L, grid in [
        ("sin", ONE, DISC20),
        ("cubic", ONE, DISC20),
        ("exp_z1z2", catalog_weight("cross_L"), SHARP_GRID),
        ("poly2", catalog_weight("one_plus_abs_2"), SHARP_GRID),
    ]:
        f = catalog_function(name)
        a = estimate_joint_index(f, L, grid)
        b = estimate_joint_index(f, L.scaled(2.0), grid)
        assert a.candidate_N is not None and b.candidate_N is not None
        assert b.candidate_N <= a.candidate_N


def test_threads_do_not_change_result():
    f, L = catalog_function("exp_z1z2"), catalog_weight("cross_L")
    a = estimate_joint_index(f, L, SHARP_GRID, threads=1)
    b = estimate_joint_index(f, L, SHARP_GRID, threads=3)
    assert a.as_dict()["per_m"] == b.as_dict()["per_m"]
    assert a.worst_margin == b.worst_margin


def test_cauchy_method_agrees():
    f = catalog_function("sin")
    grid = DISC20[::37]
    a = estimate_joint_index(f, ONE, grid, m_max=3, j_max=6)
    b = estimate_joint_index(f, ONE, grid, m_max=3, j_max=6, method="cauchy")
    assert a.candidate_N == b.candidate_N


def test_preconditions():
    with pytest.raises(ValueError):
        estimate_joint_index(EntireFunction.parse("0", 1), ONE, DISC20)
    with pytest.raises(ValueError):
        estimate_joint_index(catalog_function("exp"), ONE, DISC20, m_max=4, j_max=5)
    with pytest.raises(ValueError):
        estimate_joint_index(catalog_function("exp"), ONE, np.empty((0, 1)))


def test_local_behavior_constant():
    rep = local_behavior_ratio(catalog_function("const"), ONE, [1.0], [3.0], [[0], [5]])
    assert rep.p1_estimate == pytest.approx(1)
    assert all(t["ratio"] == pytest.approx(1) for t in rep.trace)


def test_local_behavior_exp():
    rep = local_behavior_ratio(catalog_function("exp"), ONE, [1.0], [3.0], [[0], [2 + 1j], [-4], [7j]])
    for t in rep.trace:
        assert t["ratio"] == pytest.approx(math.e**2, rel=1e-9)
    assert rep.consistent


def test_local_behavior_exp_square_grows():
    rep = local_behavior_ratio(catalog_function("exp_sq"), ONE, z0_grid=[[2.0], [4.0], [8.0]])
    # max over |z - x| = rho of Re z^2 is (x + rho)^2, so ln ratio = 2x(R''-R') + R''^2 - R'^2
    for t in rep.trace:
        x = t["abs_z0"]
        assert t["log_ratio"] == pytest.approx(2 * x * 3 + 3.5**2 - 0.5**2, rel=1e-9)
    assert rep.growth >= 2 and not rep.consistent


def test_local_behavior_radius_order():
    with pytest.raises(ValueError):
        local_behavior_ratio(catalog_function("exp"), ONE, [3.0], [4.0], [[0]])
    with pytest.raises(ValueError):
        local_behavior_ratio(catalog_function("exp"), ONE, [1.0], [2.0], [[0]])
