import math

import numpy as np
import pytest

from nevanlab.errors import ConfigError, PreconditionError
from nevanlab.target import DivisorData, SingularVolumeForm, TargetSpace, homogeneous, parse_point, point_label, sphere_grid

D3 = DivisorData.points([0, 1, "inf"])


def laplacian(f, w0: complex, h: float = 1e-4) -> float:
    return (f(w0 + h) + f(w0 - h) + f(w0 + 1j * h) + f(w0 - 1j * h) - 4 * f(w0)) / h**2


def test_points_and_labels():
    assert parse_point("inf") == complex("inf") or not np.isfinite(parse_point("inf"))
    assert parse_point("1+2i") == 1 + 2j
    assert point_label(complex(-1)) == "-1"
    assert D3.labels == ("0", "1", "inf")
    with pytest.raises(ConfigError):
        DivisorData.points([1, 1])


def test_homogeneous_coordinates():
    np.testing.assert_array_equal(homogeneous(np.array([2.0, np.inf])), [[1, 2], [0, 1]])


def test_potential_examples():
    assert D3.u(0, np.inf) == pytest.approx(0.0, abs=1e-15)
    assert D3.u(0, 0.0) == np.inf
    u = lambda w: float(D3.u(1, w))
    assert math.isfinite(u(1j))
    # 2dd^c u = ω off the divisor: Δu = 2/(1+|w|²)²
    assert laplacian(u, 1j) == pytest.approx(2 / (1 + 1) ** 2, rel=1e-4)


def test_potential_gradient_matches_finite_differences():
    w0, h = 0.3 - 0.7j, 1e-6
    for j in range(2):
        du = D3.du(j, np.array([w0]))[0, 0]
        fx = (D3.u(j, w0 + h) - D3.u(j, w0 - h)) / (2 * h)
        fy = (D3.u(j, w0 + 1j * h) - D3.u(j, w0 - 1j * h)) / (2 * h)
        assert du == pytest.approx(0.5 * (fx - 1j * fy), rel=1e-6)


def test_fubini_study_mass_and_bracket():
    assert TargetSpace(1).omega_total_p1() == pytest.approx(1.0, rel=1e-12)
    assert TargetSpace(1).anticanonical_bracket() == pytest.approx(2.0, abs=1e-8)
    assert TargetSpace(2).anticanonical_bracket() == pytest.approx(3.0, abs=1e-8)


def test_general_position():
    assert DivisorData.hyperplanes([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]).general_position
    assert not DivisorData.hyperplanes([[1, 0, 0], [0, 1, 0], [1, 1, 0]]).general_position


def test_psi_is_positive_and_blows_up_at_divisors():
    svf = SingularVolumeForm(D3)
    assert svf.gauge == 3.0
    assert 0 < float(svf.psi(np.array([0.5 + 2j]))[0]) < np.inf
    near = [float(svf.psi(np.array([1 + d]))[0]) for d in (1e-2, 1e-4, 1e-6)]
    assert near[0] < near[1] < near[2]


def test_two_points_violate_the_positivity_hypothesis():
    with pytest.raises(PreconditionError, match="q > n \\+ 1"):
        SingularVolumeForm(DivisorData.points([0, 1]))


def test_carlson_griffiths_cone():
    svf = SingularVolumeForm(D3)
    min_ev, c = svf.cone_check()
    assert min_ev >= 0 and c > 0
    np.testing.assert_allclose(svf.ric_fd(np.array([0.5 + 0.5j])), svf.ric_matrix(np.array([0.5 + 0.5j]))[..., 0, 0].real, rtol=1e-5)


def test_curvature_stable_under_grid_refinement_at_equidistant_point():
    # w = 1/2 + i√3/2 is chordally equidistant from 0, 1 and ∞
    svf = SingularVolumeForm(D3)
    w0 = np.array([0.5 + 0.5j * math.sqrt(3)])
    vals = [float(svf.ric_fd(w0, h)[0]) for h in (1e-2, 1e-3, 1e-4)]
    assert abs(vals[-1] - vals[-2]) <= 1e-3 * abs(vals[-1])
    assert vals[-1] == pytest.approx(float(svf.ric_matrix(w0)[0, 0, 0].real), rel=1e-6)


def test_sphere_grid_avoids_divisors():
    g = sphere_grid(16)
    assert g.size == 256 and np.all(np.isfinite(g))


@pytest.mark.slow
def test_curvature_integral_converges():
    seq = SingularVolumeForm(D3).ric_integral_sequence(4)
    assert abs(seq[-1] - seq[-2]) < 1e-3 * abs(seq[-1])
