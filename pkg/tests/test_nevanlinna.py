import json
import math

import numpy as np
import pytest

from nevanlab.errors import DomainError, PreconditionError, UnsupportedOperation
from nevanlab.exhaustion import ExhaustionWeight, Mode, default_constants
from nevanlab.maps import ConstantMap, ExpMap, ProjectionMap, RationalMap
from nevanlab.models import EuclideanFactor, ModelManifold, ProjectiveFactor, cylinder_torus, euclidean
from nevanlab.nevanlinna import (
    admissible,
    base_value,
    build_table,
    canonical_characteristic,
    characteristic,
    check_smt_hypotheses,
    counting,
    defect_estimate,
    fibre_weight,
    fmt_residual,
    fmt_tolerance,
    is_bounded,
    is_monotone_increasing,
    proximity,
    residual,
    ricci_characteristic,
    smt_scale,
)
from nevanlab.quad import QuadratureSpec
from nevanlab.target import DivisorData

C, C2 = euclidean(1), euclidean(2)
SPEC = QuadratureSpec(rtol=1e-6)
D01 = DivisorData.points([0, 1, "inf"])


def par(r):
    return ExhaustionWeight(C, Mode.PARABOLIC, r)


def nonpar(r):
    return ExhaustionWeight(C2, Mode.NON_PARABOLIC, r)


# frozen from a converged run (rtol 1e-7)
EXP_T = {5.0: 0.8235004532, 10.0: 1.4286494257}


@pytest.mark.parametrize("r", sorted(EXP_T))
def test_characteristic_of_exp_is_frozen(r):
    assert characteristic(ExpMap(C), par(r), SPEC).value == pytest.approx(EXP_T[r], rel=1e-6)


def test_characteristic_of_constant_is_zero():
    for w in (par(3.0), nonpar(2.0)):
        assert characteristic(ConstantMap(w.manifold, 0.5), w).value == 0.0


def test_heat_characteristic_below_classical_one():
    f = RationalMap(C, [1, 0])
    for r in (2.0, 8.0):
        T = characteristic(f, par(r), SPEC).value
        Tstar = characteristic(f, ExhaustionWeight(C, Mode.DIRICHLET, r), SPEC).value
        assert 0 < T < Tstar
        # Ahlfors-Shimizu: T*(r, z) = ½ log(1 + r²)
        assert Tstar == pytest.approx(0.5 * math.log1p(r * r), rel=1e-6)


def test_fibre_weight_vanishes_outside():
    assert np.all(fibre_weight(nonpar(3.0), [3.0, 4.0, 0.0]) == 0)


def test_fibre_weight_closed_form():
    # K(s) = (1/π)[log(r/s) - (r² - s²)/(2r²)] on ℂ² with A = 1/2
    r, s = 3.0, np.array([0.2, 1.0, 2.9])
    np.testing.assert_allclose(fibre_weight(nonpar(r), s), (np.log(r / s) - (r * r - s * s) / (2 * r * r)) / math.pi, rtol=1e-10)


def test_proximity_of_constant_map():
    f = ConstantMap(C, 2.0)
    D = DivisorData.points([0])
    r = 4.0
    assert proximity(f, D, 0, par(r)).value == pytest.approx(math.log(math.sqrt(5) / 2) * math.exp(-r / 4), rel=1e-9)
    assert proximity(ConstantMap(C2, 2.0), D, 0, nonpar(2.0)).value == pytest.approx(math.log(math.sqrt(5) / 2), rel=1e-9)


def test_exp_omits_zero_and_infinity():
    f, w = ExpMap(C), par(10.0)
    for j in (0, 2):
        assert counting(f, D01, j, w) == 0.0
        T = characteristic(f, w, SPEC).value
        m = proximity(f, D01, j, w, SPEC).value
        E = residual(f, D01, j, w, SPEC).value
        assert m == pytest.approx(T + base_value(f, D01, j, w) - E, abs=1e-3 * T)


def test_counting_exp_at_one():
    f, w = ExpMap(C), par(10.0)
    N = counting(f, D01, 1, w, renormalize=True)
    Nb = counting(f, D01, 1, w, simple=True, renormalize=True)
    off = np.array([[0.0, 2 * math.pi], [0.0, -2 * math.pi]])
    expected = math.pi * (w.finite_part_at_origin() + float(np.sum(w.weight(off))))
    assert N == Nb == pytest.approx(expected, rel=1e-12)
    with pytest.raises(PreconditionError):
        counting(f, D01, 1, w)


def test_counting_z2_doubles_the_charge_at_the_pole():
    f, w = RationalMap(C, [1, 0, 0]), par(6.0)
    D = DivisorData.points([0])
    N = counting(f, D, 0, w, renormalize=True)
    assert N == pytest.approx(2 * math.pi * w.finite_part_at_origin(), rel=1e-12)
    assert counting(f, D, 0, w, simple=True, renormalize=True) == pytest.approx(N / 2, rel=1e-12)


def test_residual_examples():
    f, D, r = ConstantMap(C, 2.0), DivisorData.points([0]), 5.0
    assert residual(f, D, 0, par(r)).value == pytest.approx(math.log(math.sqrt(5) / 2) * (1 - math.exp(-r / 4)), rel=1e-8)
    with pytest.raises(UnsupportedOperation):
        residual(f, D, 0, nonpar(1.0))


def test_ricci_characteristic_on_flat_models_is_zero():
    assert ricci_characteristic(nonpar(2.0)) == 0.0
    ct = cylinder_torus()
    w = ExhaustionWeight(ct, Mode.PARABOLIC, 5.0, default_constants(ct, Mode.PARABOLIC, 0.1))
    assert ricci_characteristic(w) == 0.0


@pytest.mark.slow
def test_ricci_characteristic_on_c_times_p1_is_positive_and_grows():
    M = ModelManifold([EuclideanFactor(1), ProjectiveFactor(1)])
    c = default_constants(M, Mode.PARABOLIC, 0.1)
    vals = [ricci_characteristic(ExhaustionWeight(M, Mode.PARABOLIC, r, c)) for r in (1.0, 3.0)]
    assert vals == pytest.approx([1.28860, 10.0485], rel=1e-4)


def test_canonical_characteristic():
    assert canonical_characteristic(1.5, 1) == -3.0
    assert canonical_characteristic(1.5, 2) == -4.5
    assert canonical_characteristic(0.0, 1) == 0.0


def test_fmt_closure_examples():
    f = ExpMap(C)
    rec = fmt_residual(f, D01, 1, par(10.0), SPEC, renormalize=True)
    assert rec.ok and rec.residual < fmt_tolerance(rec.T)
    rec = fmt_residual(RationalMap(C2, [1, 0]), DivisorData.points(["inf"]), 0, nonpar(3.0), SPEC)
    assert rec.ok and rec.N == 0.0
    for w in (par(4.0), nonpar(2.0)):
        rec = fmt_residual(ConstantMap(w.manifold, 2.0), DivisorData.points([0]), 0, w)
        assert rec.T == rec.N == 0.0 and rec.residual < 1e-9


def test_fmt_requires_f_of_o_off_the_divisor():
    with pytest.raises(PreconditionError, match="f\\(o\\)"):
        fmt_residual(ExpMap(C), D01, 1, par(5.0))


def test_fmt_tolerance():
    assert fmt_tolerance(10.0) == 1e-2 and fmt_tolerance(1e-5) == 1e-6


def test_smt_hypothesis_failures():
    with pytest.raises(PreconditionError, match="non-degenerate"):
        check_smt_hypotheses(ConstantMap(C, 2.0), D01)
    with pytest.raises(PreconditionError):
        check_smt_hypotheses(ExpMap(C), DivisorData.points([0, 1]))
    assert check_smt_hypotheses(ProjectionMap(C2, [0]), D01).q == 3


def test_smt_scale():
    assert smt_scale(Mode.NON_PARABOLIC, math.e, math.e, None, 2, 0.1) == pytest.approx(2.1)
    assert smt_scale(Mode.PARABOLIC, 2.0, 0.5, math.e**2, 1) == pytest.approx(6.0)


@pytest.mark.parametrize(
    "ratio, bounded, increasing",
    [
        ([0.5, 0.4, 0.3, 0.2], True, False),
        ([0.1, 0.2, 0.3, 0.4], False, True),
        ([-0.5, -0.4, -0.3, -0.2], True, True),
        ([0.1, 0.3, 0.2, 0.4, 0.35, 0.5], True, False),
        ([0.1, float("nan"), 0.2], False, False),
    ],
)
def test_gap_ratio_classification(ratio, bounded, increasing):
    assert is_bounded(ratio) is bounded
    assert is_monotone_increasing(ratio) is increasing


def test_defect_estimates():
    r = np.linspace(5, 60, 12)
    T = r / math.pi
    d = defect_estimate(r, T, np.zeros_like(r))
    assert d.tail == 1.0 and np.all(d.curve == 1.0)
    d = defect_estimate(r, T, T * (1 - 1 / r))
    assert d.tail == pytest.approx(np.mean(1 / r[-3:])) and d.slope < 0
    with pytest.raises(PreconditionError):
        defect_estimate(r, np.zeros_like(r), np.zeros_like(r))


def test_admissible_radius_moves_off_boundary_preimages():
    f, D = RationalMap(C, [1, 0]), DivisorData.points([2])
    w = admissible(f, D, par(2.0))
    assert 2.0 < w.r < 2.0 * (1 + 1e-4)
    assert admissible(f, D, par(3.0)).r == 3.0


def test_tangent_slice_needs_perturbation():
    w = nonpar(1.0)
    with pytest.raises(DomainError, match="tangent"):
        ProjectionMap(C2, [0]).preimages(1.0, w)
    assert admissible(ProjectionMap(C2, [0]), DivisorData.points([1]), w).r > 1.0


def test_table_outputs():
    f = RationalMap(C2, [1, 0])
    tab = build_table(f, DivisorData.points(["inf"]), [nonpar(r) for r in (1.5, 3.0)], SPEC)
    lines = tab.to_csv().splitlines()
    assert lines[0].startswith("r,T,T_K,T_R,m[inf],N[inf]") and len(lines) == 3
    data = json.loads(tab.to_json())
    assert data["mode"] == "non-parabolic" and len(data["rows"]) == 2
    assert tab.fmt_ok() and tab.max_fmt_residual() < 1e-6
    np.testing.assert_allclose(tab.column("T_K"), -2 * tab.column("T"))
    assert tab.curves_csv().splitlines()[0] == "r,T,Nbar[inf],defect[inf]"


def test_constant_map_table_is_all_zero():
    tab = build_table(ConstantMap(C, 2.0), DivisorData.points([0]), [par(r) for r in (2.0, 4.0)])
    assert np.all(tab.column("T") == 0) and np.all(tab.column("N", "0") == 0)
    assert tab.fmt_ok()
