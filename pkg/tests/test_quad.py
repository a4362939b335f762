import math

import numpy as np
import pytest

from nevanlab.errors import DomainError
from nevanlab.exhaustion import ExhaustionWeight, Mode
from nevanlab.maps import ExpMap
from nevanlab.models import euclidean
from nevanlab.quad import (
    QuadratureSpec,
    heat_expectation,
    integrate_boundary,
    integrate_disk,
    integrate_domain,
    integrate_slice,
    rule_size,
    smooth_bump,
    sphere_rule,
)
from nevanlab.target import DivisorData

C, C2 = euclidean(1), euclidean(2)
ones = lambda x: np.ones(x.shape[0])


@pytest.mark.parametrize("dim, level", [(2, 0), (2, 3), (4, 0), (4, 2), (6, 1)])
def test_sphere_rule_area_and_size(dim, level):
    dirs, w = sphere_rule(dim, level)
    area = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    assert np.sum(w) == pytest.approx(area, rel=1e-12)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=-1), 1.0, rtol=1e-13)
    assert dirs.shape[0] == rule_size(dim, level)


def test_sphere_rule_integrates_low_moments():
    dirs, w = sphere_rule(4, 2)
    # the mean of u₁² over S³ is 1/4
    assert np.sum(w * dirs[:, 0] ** 2) / np.sum(w) == pytest.approx(0.25, rel=1e-12)


def test_smooth_bump():
    s = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 2.0])
    b = smooth_bump(s)
    assert b[0] == b[1] == b[2] == 1.0 and b[4] == b[5] == 0.0 and b[3] == pytest.approx(0.5)


def test_domain_volume_of_ball_in_c2():
    r = 1.7
    res = integrate_domain(ExhaustionWeight(C2, Mode.NON_PARABOLIC, r), ones)
    assert res.converged and res.value == pytest.approx(math.pi**2 * r**4 / 2, rel=1e-7)


def test_domain_integral_of_green_weight_in_c2():
    r = 2.0
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, r)
    assert integrate_domain(w, w.value).value == pytest.approx(r * r / 4, rel=1e-7)


@pytest.mark.parametrize("r", [1.0, 6.0, 30.0])
def test_heat_mass_of_disk(r):
    w = ExhaustionWeight(C, Mode.PARABOLIC, r)
    res = integrate_domain(w, lambda x: C.heat_kernel(r, x))
    assert res.value == pytest.approx(1 - math.exp(-r / 4), abs=1e-9)


def test_boundary_masses():
    for r in (0.5, 3.0):
        assert integrate_boundary(ExhaustionWeight(C2, Mode.NON_PARABOLIC, r), ones).value == pytest.approx(1.0, abs=1e-10)
        theta = integrate_boundary(ExhaustionWeight(C, Mode.PARABOLIC, r), ones).value
        assert theta == pytest.approx(math.exp(-r / 4), abs=1e-10)
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 2.5)
    assert integrate_boundary(w, lambda x: np.sum(x * x, axis=-1)).value == pytest.approx(6.25, rel=1e-10)


def test_disk_and_slice_integrals():
    assert integrate_disk(3.0, lambda y: np.sum(y * y, axis=-1)).value == pytest.approx(math.pi * 3**4 / 2, rel=1e-9)
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 2.0)
    # {z₁ = 1} ∩ B(2) is a disk of radius √3 in the z₂-plane
    assert integrate_slice(w, 0, 1.0 + 0j, ones).value == pytest.approx(3 * math.pi, rel=1e-9)


def test_heat_expectation_examples():
    r = 8.0
    w = ExhaustionWeight(C, Mode.PARABOLIC, r)
    assert heat_expectation(w, ones).value == pytest.approx(1 - math.exp(-r / 4), abs=1e-9)
    assert heat_expectation(w, lambda x: np.zeros(x.shape[0])).value == 0.0


@pytest.mark.slow
def test_quadrature_and_monte_carlo_agree_for_exp():
    w = ExhaustionWeight(C, Mode.PARABOLIC, 10.0)
    f, D = ExpMap(C), DivisorData.points([1])
    pre = [p.chart(C) for p in f.preimages(1.0, w)]
    res = heat_expectation(w, lambda x: f.u_pullback(D, 0, x), QuadratureSpec(method="both", mc_samples=2**16, seed=3), pre)
    assert res.agree
    again = heat_expectation(w, lambda x: f.u_pullback(D, 0, x), QuadratureSpec(method="monte-carlo", mc_samples=2**16, seed=3))
    assert again.value == res.mc_value


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(method="simpson")
    with pytest.raises(DomainError):
        QuadratureSpec(rtol=0.0)


def test_point_budget_caps_refinement():
    spec = QuadratureSpec(rtol=1e-15, atol=0.0, max_level=8, max_points=rule_size(4, 2))
    res = integrate_boundary(ExhaustionWeight(C2, Mode.NON_PARABOLIC, 1.0), lambda x: np.exp(x[:, 0]), spec)
    assert np.isfinite(res.value) and res.evaluations < 10 * rule_size(4, 3)
