import math

import numpy as np
import pytest

from nevanlab.errors import ConfigError, DomainError, UnsupportedOperation
from nevanlab.exhaustion import ExhaustionWeight, Mode
from nevanlab.maps import CallableMap, ConstantMap, ExpMap, ProjectionMap, RationalMap, map_from_config
from nevanlab.models import CylinderFactor, ModelManifold, ProjectiveFactor, EuclideanFactor, euclidean
from nevanlab.target import DivisorData, SingularVolumeForm

C, C2 = euclidean(1), euclidean(2)
D3 = DivisorData.points([0, 1, "inf"])


def half_laplacian_log(f, x0, h=1e-4):
    def phi(x):
        W = f.homogeneous(np.array([x]))[0]
        return math.log1p(abs(W[1] / W[0]) ** 2)

    return 0.5 * sum(phi(x0 + h * k) + phi(x0 - h * k) - 2 * phi(x0) for k in np.eye(2)) / h**2


def test_energy_density_examples():
    assert ConstantMap(C, 2.0).energy_density(np.array([[0.3, 0.1]]))[0] == 0.0
    assert RationalMap(C, [1, 0]).energy_density(np.zeros((1, 2)))[0] == pytest.approx(2.0)
    assert ExpMap(C).energy_density(np.array([[30.0, 0.0]]))[0] < 1e-20


@pytest.mark.parametrize("f", [RationalMap(C, [1, 0]), ExpMap(C), RationalMap(C, [1, -2], [1, 3])])
def test_energy_density_is_pullback_of_fubini_study(f):
    # e = ½Δ log(1 + |f|²) for maps of one complex variable
    for x0 in (np.array([0.0, 0.0]), np.array([0.4, -0.3])):
        assert f.energy_density(x0[None, :])[0] == pytest.approx(half_laplacian_log(f, x0), rel=1e-5)


def test_preimage_examples():
    w = ExhaustionWeight(C, Mode.PARABOLIC, 10.0)
    pts = ExpMap(C).preimages(1.0, w)
    assert sorted(p.point.imag for p in pts) == pytest.approx([-2 * math.pi, 0.0, 2 * math.pi])
    assert all(p.multiplicity == 1 and abs(p.point.real) < 1e-14 for p in pts)
    assert ExpMap(C).preimages(0.0, w) == []
    (z,) = RationalMap(C, [1, 0, 0]).preimages(0.0, w)
    assert z.point == 0 and z.multiplicity == 2
    assert RationalMap(C, [1, 0, 0]).multiplicity_at_origin(0.0) == 2


def test_slice_preimages_in_c2():
    w = ExhaustionWeight(C2, Mode.NON_PARABOLIC, 3.0)
    (s,) = ProjectionMap(C2, [0]).preimages(1.0, w)
    assert s.kind == "slice" and s.point == 1 and s.coord == 0
    assert RationalMap(C2, [1, 0]).preimages(np.inf, w) == []
    far = ProjectionMap(C2, [0]).preimages(5.0, w)
    assert far == []


def test_preimage_on_the_boundary_is_an_error():
    w = ExhaustionWeight(C, Mode.PARABOLIC, 2.0)
    with pytest.raises(DomainError, match="perturb r"):
        RationalMap(C, [1, 0]).preimages(2.0, w)


def test_callable_map_preimages_by_newton():
    w = ExhaustionWeight(C, Mode.PARABOLIC, 10.0)
    f = CallableMap(C, lambda Z: np.stack([np.ones(Z.shape[0], complex), Z[:, 0] ** 2 - 1], axis=-1))
    assert sorted(p.point.real for p in f.preimages(0.0, w)) == pytest.approx([-1.0, 1.0], abs=1e-8)
    (d,) = f.preimages(-1.0, w)
    assert d.multiplicity == 2 and abs(d.point) < 1e-6


def test_nondegeneracy_probe():
    assert RationalMap(C, [1, 0]).nondegeneracy_probe()[0]
    assert not ConstantMap(C, 1.0).nondegeneracy_probe()[0]
    assert ProjectionMap(C2, [0]).nondegeneracy_probe()[0]


def test_xi_and_the_curvature_bound():
    svf = SingularVolumeForm(D3)
    x = np.array([[0.2, 0.3], [-0.5, 1.1]])
    assert np.all(ConstantMap(C, 2.0).xi(svf, x) == 0)
    f = ExpMap(C)
    assert np.all(np.isfinite(f.xi(svf, x))) and np.all(f.xi(svf, x) > 0)
    _, c = svf.cone_check()
    assert np.all(f.oppo_check(svf, x, c) <= 0)
    # m = n = 1: ξ = f*Ψ/α, i.e. |f'|²·(Ψ density relative to ω)·(ω density relative to α)
    P = f.pullback_matrix(x)[..., 0, 0].real
    W = f.homogeneous(x)
    np.testing.assert_allclose(f.xi(svf, x), P * np.exp(svf.log_product_homogeneous(W)), rtol=1e-12)


def test_map_from_config_families():
    assert isinstance(map_from_config(C, {"family": "exp"}), ExpMap)
    f = map_from_config(C2, {"family": "mobius", "mobius": "1 -2 1 3", "coord": "1"})
    assert f.depends_on() == (1,)
    assert map_from_config(C, {"family": "z2"}).multiplicity_at_origin(0.0) == 2
    with pytest.raises(ConfigError):
        map_from_config(C, {"family": "sin"})
    with pytest.raises(ConfigError):
        RationalMap(C, [1, -1], [1, -1])


def test_maps_need_flat_sources():
    with pytest.raises(UnsupportedOperation):
        RationalMap(ModelManifold([EuclideanFactor(1), ProjectiveFactor(1)]), [1, 0])
    assert ExpMap(ModelManifold([CylinderFactor()])).source.is_flat
