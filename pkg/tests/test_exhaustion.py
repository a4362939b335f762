import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nevanlab.errors import ConfigError, DomainError, PoleError, UnsupportedOperation
from nevanlab.exhaustion import (
    ExhaustionWeight,
    Mode,
    boundary_gradient_norm,
    calculus_lemma_report,
    default_constants,
    gradient_norm_fd,
    green_dynkin_residual,
    mei_lower_bound_check,
    parabolic_geometry_check,
    resolve_mode,
)
from nevanlab.models import CylinderFactor, EuclideanFactor, ModelManifold, TorusFactor, euclidean, sample_unit_vectors

C, C2 = euclidean(1), euclidean(2)
CYL = ModelManifold([CylinderFactor()])
C_T = ModelManifold([EuclideanFactor(1), TorusFactor(1.0, 1.0)])
ones = lambda x: np.ones(x.shape[0])
zeros = lambda x: np.zeros(x.shape[0])


def along(M, rho):
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    x = np.zeros((rho.size, M.real_dim))
    x[:, 0] = rho
    return x


def test_mode_resolution_follows_volume_criterion():
    assert resolve_mode(C) is Mode.PARABOLIC
    assert resolve_mode(C2) is Mode.NON_PARABOLIC
    with pytest.raises(ConfigError, match="volume criterion"):
        resolve_mode(C, "non-parabolic")
    with pytest.raises(ConfigError):
        resolve_mode(C2, "parabolic")
    with pytest.raises(ConfigError):
        resolve_mode(CYL, "dirichlet")


def test_contains_examples():
    w2 = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 1.0)
    assert w2.contains(along(C2, 0.5))[0]
    w = ExhaustionWeight(C, Mode.PARABOLIC, 2.0)
    assert abs(float(w.value(along(C, 2.0))[0])) < 1e-14
    assert not w.contains(along(C, 2.0))[0]
    assert w.contains(along(C, 1.999))[0] and not w.contains(along(C, 2.001))[0]
    for M in (C, C2, CYL):
        assert ExhaustionWeight(M, "auto", 1.0, default_constants(M, resolve_mode(M), 0.1)).contains(M.origin()[None, :])[0]


def test_weight_closed_form_on_c2():
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 3.0)
    rho = np.array([0.2, 1.0, 2.5, 3.0])
    np.testing.assert_allclose(w.weight(along(C2, rho)), (rho**-2 - 3.0**-2) / (2 * math.pi**2), rtol=1e-12, atol=1e-16)


def test_parabolic_weight_on_c_against_quadrature_and_disk_green():
    r = 4.0
    w = ExhaustionWeight(C, Mode.PARABOLIC, r)
    for rho in (0.1, 1.0, 3.0):
        ref, _ = integrate.quad(lambda t: (math.exp(-rho**2 / (4 * t)) - math.exp(-r * r / (4 * t))) / t, 0, r, epsabs=1e-14)
        val = float(w.weight(along(C, rho))[0])
        assert val == pytest.approx(ref / (2 * math.pi), rel=1e-10)
        assert val <= math.log(r / rho) / math.pi
    assert float(w.weight(along(C, r))[0]) == pytest.approx(0.0, abs=1e-15)


def test_weight_errors():
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 1.0)
    with pytest.raises(PoleError):
        w.weight(np.zeros((1, 4)))
    with pytest.raises(DomainError):
        w.weight(along(C2, 1.5))
    with pytest.raises(DomainError):
        ExhaustionWeight(C2, Mode.NON_PARABOLIC, -1.0)


def test_gradient_law_on_c2():
    r = 5.0
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, r)
    for t in (0.5 * r, 0.9 * r, r):
        assert boundary_gradient_norm(w, t) == pytest.approx(1 / (math.pi**2 * t**3), rel=1e-13)
        fd = gradient_norm_fd(w, t * sample_unit_vectors(4, 8))
        np.testing.assert_allclose(fd, 1 / (math.pi**2 * t**3), rtol=1e-6)
    assert boundary_gradient_norm(w.at(1e4), 1e4) < 1e-12
    with pytest.raises(UnsupportedOperation):
        boundary_gradient_norm(ExhaustionWeight(C, Mode.PARABOLIC, 1.0), 0.5)


def test_boundary_density_on_c2():
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 2.0)
    b = w.boundary(16)
    np.testing.assert_allclose(w.boundary_density(b.points), 1 / (2 * math.pi**2 * 8), rtol=1e-8)
    assert b.flagged == 0 and b.to_csv().startswith("r,direction,boundary_rho")


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 50.0))
def test_exact_balls_on_flat_models(r):
    for M, mode in ((C, Mode.PARABOLIC), (C2, Mode.NON_PARABOLIC), (C, Mode.DIRICHLET)):
        b = ExhaustionWeight(M, mode, r).boundary(32)
        assert b.found.all()
        np.testing.assert_allclose(b.rho, r, rtol=1e-9)


def test_dynkin_identity_examples():
    w2 = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 1.0)
    assert green_dynkin_residual(w2.at(2.0), ones, zeros)["residual"] < 1e-12
    res = green_dynkin_residual(w2, lambda x: np.sum(x * x, axis=-1), lambda x: 8.0 * ones(x))
    assert res["residual"] < 1e-5
    w = ExhaustionWeight(C, Mode.PARABOLIC, 3.0)
    res = green_dynkin_residual(w, ones, zeros)
    assert res["boundary"] == pytest.approx(math.exp(-0.75), abs=1e-10)
    assert res["residual"] < 1e-10
    with pytest.raises(DomainError), np.errstate(divide="ignore"):
        green_dynkin_residual(w2, lambda x: 1.0 / np.sum(x * x, axis=-1), zeros)


@pytest.mark.slow
def test_calculus_lemma_reports():
    w2 = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 1.0)
    rep = calculus_lemma_report(w2, ones, np.array([5.0, 10.0, 20.0]), 0.1)
    np.testing.assert_allclose(rep.lhs, 1.0, atol=1e-8)
    assert rep.satisfied.all()
    assert calculus_lemma_report(w2, zeros, np.array([2.0, 5.0]), 0.1).satisfied.all()
    with pytest.raises(DomainError):
        calculus_lemma_report(w2, ones, np.array([]), 0.1)
    w = ExhaustionWeight(C, Mode.PARABOLIC, 1.0)
    coarse = calculus_lemma_report(w, ones, np.linspace(1, 100, 10), 0.1)
    fine = calculus_lemma_report(w, ones, np.linspace(1, 100, 20), 0.1)
    # violations stay near the start of the grid and shrink under refinement
    assert np.all(fine.r[~fine.satisfied] < 12) and fine.violating_measure <= coarse.violating_measure


def test_parabolic_geometry_on_c_is_exact():
    chk = parabolic_geometry_check(ExhaustionWeight(C, Mode.PARABOLIC, 1.0), [1.0, 5.0, 20.0], 64)
    np.testing.assert_allclose(chk.rho_min, chk.r, rtol=1e-10)
    np.testing.assert_allclose(chk.rho_max, chk.r, rtol=1e-10)
    assert chk.threshold == 1.0


@pytest.mark.slow
def test_parabolic_geometry_on_cylinder_and_threshold_on_c_times_torus():
    wc = ExhaustionWeight(CYL, Mode.PARABOLIC, 1.0, default_constants(CYL, Mode.PARABOLIC, 0.1))
    chk = parabolic_geometry_check(wc, [20.0, 50.0], 64)
    assert chk.holds.all() and np.all(chk.rho_max <= chk.beta * chk.r) and np.all(chk.rho_min >= chk.r)
    wt = ExhaustionWeight(C_T, Mode.PARABOLIC, 1.0, default_constants(C_T, Mode.PARABOLIC, 0.1))
    chk = parabolic_geometry_check(wt, [0.3, 1.0, 20.0, 50.0], 64)
    assert not chk.holds[0] and chk.holds[-2:].all() and chk.threshold == 20.0


def test_mei_lower_bound_on_c():
    rep = mei_lower_bound_check(ExhaustionWeight(C, Mode.PARABOLIC, 1.0), [25.0], 100, 0)
    assert rep.holds.all() and rep.threshold == 25.0
