import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lindex.functions import EntireFunction, WeightVector, catalog_function, catalog_weight
from lindex.growth import (
    DegenerateBasePoint,
    Thm2Config,
    convexity_check,
    growth_verdict,
    r0_sensitivity,
    sheremeta_gap,
    suplinf_C,
    theta_grid,
    thm2_integral,
    thm2_ratio_scan,
    thm3_rhs,
)
from lindex.modulus import log_max_modulus, max_modulus
from lindex.polydisc import GridSpec

ONE = WeightVector.constant(1)
CROSS_L = catalog_weight("cross_L")
DOUBLINGS = [2.0**k for k in range(1, 8)]


# ------------------------------------------------------------ max modulus


@pytest.mark.parametrize("R", [(2, 3), (4, 4), (5, 2)])
def test_max_modulus_exp_z1z2(R):
    res = log_max_modulus(catalog_function("exp_z1z2"), R)
    assert res.log_value == pytest.approx(R[0] * R[1], rel=1e-12)
    assert res.refinement_delta >= 0


def test_max_modulus_trivial():
    assert max_modulus(catalog_function("square"), [3]) == pytest.approx(9, rel=1e-14)
    assert max_modulus(catalog_function("exp"), [5]) == pytest.approx(math.exp(5), rel=1e-14)
    assert max_modulus(catalog_function("exp_z1z2"), (2, 3)) == pytest.approx(403.4287934927351, rel=1e-12)


@given(st.floats(0.05, 30))
def test_max_modulus_sin_closed_form(r):
    # |sin z| <= sinh|z| termwise, with equality at z = i r
    assert log_max_modulus(catalog_function("sin"), [r]).log_value == pytest.approx(math.log(math.sinh(r)), rel=1e-10)


def test_max_modulus_refinement_finds_off_grid_maximum():
    f = EntireFunction.parse("exp(z1*exp(0.3i))", 1)  # max at theta = -0.3
    coarse = log_max_modulus(f, [2.0], GridSpec(8, refinement_depth=0)).log_value
    fine = log_max_modulus(f, [2.0], GridSpec(8, refinement_depth=30)).log_value
    assert coarse < 2.0 - 1e-3
    assert fine == pytest.approx(2.0, abs=1e-12)


@given(st.sampled_from(["exp_z1z2", "poly2"]), st.floats(0.1, 4), st.floats(0.1, 4), st.floats(1, 2), st.floats(1, 2))
def test_max_modulus_monotone(name, a, b, s, t):
    f = catalog_function(name)
    assert log_max_modulus(f, [a * s, b * t]).log_value >= log_max_modulus(f, [a, b]).log_value - 1e-9


# --------------------------------------------------- permutation integral


def cross_L_closed_form(R, R0, mode):
    (a, b), (p, q) = R, R0
    identity = a * (b + 1) + b * (p + 1)
    swapped = a * (b + 1) + b * (a + 1) if mode == "verbatim" else a * (q + 1) + b * (a + 1)
    return min(identity, swapped)


@pytest.mark.parametrize(
    "R,R0", [((4, 4), (1, 1)), ((3, 5), (1, 2)), ((5, 3), (2, 1)), ((7.5, 3.25), (0.5, 3.0))]
)
@pytest.mark.parametrize("mode", ["verbatim", "ordered"])
def test_thm2_cross_weight_closed_form(R, R0, mode):
    res = thm2_integral(CROSS_L, R, Thm2Config(R0=R0, mode=mode))
    assert res.value == pytest.approx(cross_L_closed_form(R, R0, mode), rel=1e-6)
    assert set(res.by_mode) == {"verbatim", "ordered"}


def test_thm2_reference_value_and_modes_differ():
    assert thm2_integral(CROSS_L, (4, 4), Thm2Config(R0=(1, 1))).value == pytest.approx(28, rel=1e-6)
    res = thm2_integral(CROSS_L, (5, 3), Thm2Config(R0=(2, 1)))
    assert res.by_mode["verbatim"]["value"] == pytest.approx(29, rel=1e-6)
    assert res.by_mode["ordered"]["value"] == pytest.approx(28, rel=1e-6)


@given(st.lists(st.floats(0.1, 20), min_size=1, max_size=3))
def test_thm2_constant_weight_sums_radii(R):
    n = len(R)
    res = thm2_integral(WeightVector.constant(n), R, Thm2Config(R0=(0.01,) * n))
    assert res.value == pytest.approx(sum(R), rel=1e-9)


def test_thm2_one_variable():
    assert thm2_integral(catalog_weight("one_plus_abs"), [4.0]).value == pytest.approx(12, rel=1e-9)


def test_thm2_warns_below_base_radius():
    with pytest.warns(RuntimeWarning):
        res = thm2_integral(CROSS_L, (0.5, 3), Thm2Config(R0=(1, 1)))
    assert res.warnings


def test_thm2_config_validation():
    with pytest.raises(ValueError):
        Thm2Config(mode="other")
    with pytest.raises(ValueError):
        Thm2Config(permutations=((1, 1),)).permutation_set(2)
    with pytest.raises(ValueError):
        Thm2Config(permutations=()).permutation_set(2)
    with pytest.raises(ValueError):
        Thm2Config(R0=(0, 1)).base_radius(2)


def test_theta_grid_sizes():
    assert theta_grid(1).shape == (16, 1)
    assert theta_grid(2).shape == (256, 2)
    assert theta_grid(3).shape == (512, 3)
    a, b = theta_grid(5, seed=3), theta_grid(5, seed=3)
    assert a.shape == (512, 5) and np.array_equal(a, b)
    assert not np.array_equal(a, theta_grid(5, seed=4))


# ----------------------------------------------------------- ratio scans


def test_ratio_scan_exp_is_one():
    scan = thm2_ratio_scan(catalog_function("exp"), ONE, [1], DOUBLINGS)
    assert all(rec["ratio"] == pytest.approx(1, rel=1e-9) for rec in scan.records)
    assert scan.consistent


def test_ratio_scan_sharpness_example():
    scan = thm2_ratio_scan(catalog_function("exp_z1z2"), CROSS_L, [1, 1], DOUBLINGS)
    # minimized integral along (r, r) with R0 = 1 is r^2 + 3r
    for rec in scan.records:
        r = rec["r"]
        assert rec["bound"] == pytest.approx(r * r + 3 * r, rel=1e-6)
    assert scan.consistent
    assert 0.95 <= scan.records[-1]["ratio"] <= 1


def test_ratio_scan_sin():
    scan = thm2_ratio_scan(catalog_function("sin"), ONE, [1], DOUBLINGS)
    for rec in scan.records:
        assert rec["ratio"] == pytest.approx(math.log(math.sinh(rec["r"])) / rec["r"], rel=1e-9)
    assert scan.consistent
    assert abs(scan.records[-1]["ratio"] - 1) < 0.05


def test_ratio_scan_exp_square_diverges():
    scan = thm2_ratio_scan(catalog_function("exp_sq"), ONE, [1], DOUBLINGS)
    ratios = [rec["ratio"] for rec in scan.records]
    assert ratios == pytest.approx(DOUBLINGS, rel=1e-9)  # ln M = r^2 against r
    assert ratios[-1] / ratios[0] >= 2
    assert not scan.consistent


def test_ratio_scan_rejects_bad_direction():
    with pytest.raises(ValueError):
        thm2_ratio_scan(catalog_function("exp"), ONE, [0], DOUBLINGS)


# ------------------------------------------------ derivative growth bound


@pytest.mark.parametrize("r", [0.5, 3.0, 10.0])
def test_thm3_exp_equality(r):
    res = thm3_rhs(catalog_function("exp"), ONE, [r], [0.0], 0)
    assert res.rhs == pytest.approx(r, rel=1e-12)
    assert res.lhs == pytest.approx(r, rel=1e-12)
    assert res.holds
    assert np.all(res.trace.gamma == 0)


def test_thm3_constant_strict():
    res = thm3_rhs(catalog_function("const"), catalog_weight("one_plus_abs"), [2.0], [1.0], 0)
    assert res.lhs == pytest.approx(math.log(3))
    assert res.lhs < res.rhs - 1


@pytest.mark.parametrize("R", [(3, 3), (2, 5), (6, 1.5)])
@pytest.mark.parametrize("pivot", [1, 2])
def test_thm3_sharpness_closed_form(R, pivot):
    a, b = R
    res = thm3_rhs(catalog_function("exp_z1z2"), CROSS_L, R, (0, 0), 0, pivot=pivot)
    assert res.rhs == pytest.approx(a * b + a + b, rel=1e-10)
    assert res.lhs == pytest.approx(a * b, rel=1e-12)
    assert res.holds


def test_thm3_trace_invariants():
    res = thm3_rhs(catalog_function("sin"), catalog_weight("decaying"), [4.0], [1.0], 1)
    tr = res.trace
    assert np.all(tr.beta >= tr.beta_tilde - 1e-12)
    assert np.all(tr.beta_tilde > 0)
    assert np.all(tr.gamma >= 0) and np.any(tr.gamma > 0)
    assert tr.pivot == 1 and tr.t[0] == 0 and tr.t[-1] == 4


def test_thm3_errors():
    with pytest.raises(DegenerateBasePoint):
        thm3_rhs(EntireFunction.parse("z1", 1), ONE, [1.0], [0.0], 0)
    with pytest.raises(ValueError):
        thm3_rhs(catalog_function("exp_z1z2"), CROSS_L, (0, 2), (0, 0), 0, pivot=1)
    with pytest.raises(ValueError):
        thm3_rhs(catalog_function("exp"), ONE, [0.0], [0.0], 0)


# ----------------------------------------------------------- constant C


def test_C_constant_and_increasing_weights():
    assert suplinf_C(ONE, [[1.0], [5.0]]).C == 0
    est = suplinf_C(catalog_weight("one_plus_abs_2"), [[1.0, 2.0], [4.0, 3.0]])
    assert est.C == 0 and est.vanishing


def test_C_decaying_weight_closed_form():
    rs = [2.0, 4.0, 8.0, 16.0, 32.0]
    est = suplinf_C(catalog_weight("decaying"), [[r] for r in rs])
    # u = 1 + 1/(1+t): (-u')/u^2 = 1/(2+t)^2, largest at t = 0
    assert est.C == pytest.approx(0.25, rel=1e-4)
    assert est.tail == pytest.approx([1 / (2 + r) ** 2 for r in rs], rel=1e-4)
    assert est.vanishing


# ------------------------------------------------------------- verdicts


def test_verdict_sharpness_example():
    v = growth_verdict(catalog_function("exp_z1z2"), CROSS_L, [1, 1], DOUBLINGS, 0)
    for rec in v.records:
        r = rec["r"]
        assert rec["ratio"] == pytest.approx(r / (r + 2), rel=1e-9)
    assert v.bound_kind == "N+1" and v.bound == 1
    assert 0.95 <= v.limsup <= 1.05
    assert v.verdict == "consistent"
    assert v.tail_count == 3


def test_verdict_exp():
    v = growth_verdict(catalog_function("exp"), ONE, [1], DOUBLINGS, 0)
    assert all(rec["ratio"] == pytest.approx(1, rel=1e-12) for rec in v.records)
    assert v.verdict == "consistent"


def test_verdict_sin():
    v = growth_verdict(catalog_function("sin"), ONE, [1], DOUBLINGS, 1)
    assert v.bound == 2
    assert abs(v.limsup - 1) < 0.05
    assert v.verdict == "consistent"


def test_verdict_uses_C_when_not_vanishing():
    # l = 2 + sin(Re z)... positive weight whose decay quantity does not vanish
    L = WeightVector.parse(["2+cos(re(z1))"])
    v = growth_verdict(catalog_function("exp"), L, [1], DOUBLINGS, 1)
    assert not v.C_vanishing
    assert v.bound_kind == "(C+1)N+1"
    assert v.bound == pytest.approx(v.C + 2)


def test_verdict_hypotheses_not_met():
    v = growth_verdict(catalog_function("exp"), catalog_weight("inverse_square"), [1], DOUBLINGS, 0)
    assert v.verdict == "hypotheses not met"


def test_verdict_inconsistent_for_unbounded_index():
    v = growth_verdict(catalog_function("exp_sq"), ONE, [1], DOUBLINGS, 3)
    assert v.verdict == "inconsistent"


def test_pivot_consistency():
    f = catalog_function("exp_z1z2")
    a = growth_verdict(f, CROSS_L, [1, 2], DOUBLINGS, 0, pivot=1)
    b = growth_verdict(f, CROSS_L, [1, 2], DOUBLINGS, 0, pivot=2)
    assert a.verdict == b.verdict == "consistent"
    # both pivots reduce to the same integral 2r^2 + 3r along (r, 2r)
    for ra, rb in zip(a.records, b.records):
        r = ra["r"]
        assert ra["denominator"] == pytest.approx(2 * r * r + 3 * r, rel=1e-6)
        assert rb["denominator"] == pytest.approx(2 * r * r + 3 * r, rel=1e-6)


# ------------------------------------------------------------- gap


@pytest.mark.parametrize("N,C,expected", [(2, 1, (5, 6, 1)), (1, 0, (2, 2, 0)), (0, 2, (1, 3, 2))])
def test_gap_examples(N, C, expected):
    assert sheremeta_gap(N, C) == expected


@given(st.integers(0, 50), st.fractions(min_value=0, max_value=100))
def test_gap_is_exactly_C(N, C):
    new, old, gap = sheremeta_gap(N, C)
    assert gap == C and old - new == C


@given(st.integers(0, 50), st.floats(0, 1e6))
def test_gap_float_input(N, C):
    new, old, gap = sheremeta_gap(N, C)
    assert gap == C
    assert isinstance(gap, float)


def test_gap_rejects_negative():
    with pytest.raises(ValueError):
        sheremeta_gap(-1, 0)
    with pytest.raises(ValueError):
        sheremeta_gap(1, Fraction(-1, 2))


# ------------------------------------------------------------ convexity


@pytest.mark.parametrize("name", ["exp", "square", "sin", "exp_z1z2"])
def test_convexity_catalog(name):
    rep = convexity_check(catalog_function(name), 0.5, 8.0, points=12)
    assert rep.passes


def test_convexity_affine_for_power():
    rep = convexity_check(catalog_function("square"), 1.0, 8.0, points=16)
    assert max(abs(x) for x in rep.min_second_difference) < 1e-12
    np.testing.assert_allclose(rep.values, 2 * np.array(rep.log_r[0]), atol=1e-12)


def test_convexity_rejects_bad_box():
    with pytest.raises(ValueError):
        convexity_check(catalog_function("exp"), 0.0, 1.0)


# ------------------------------------------------------------ sweep


def test_r0_sensitivity_shape():
    out = r0_sensitivity(catalog_function("exp_z1z2"), CROSS_L, [1, 1], DOUBLINGS)
    assert [o["R0_factor"] for o in out] == [0.5, 1.0, 2.0, 4.0]
    base = thm2_ratio_scan(catalog_function("exp_z1z2"), CROSS_L, [1, 1], DOUBLINGS)
    assert [r["ratio"] for r in out[1]["records"]] == [r["ratio"] for r in base.records]
    # larger base radii only enlarge the integral, so ratios shrink
    for lo, hi in zip(out, out[1:]):
        assert all(a["ratio"] >= b["ratio"] - 1e-12 for a, b in zip(lo["records"], hi["records"]))
