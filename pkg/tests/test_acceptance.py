"""Acceptance suite: thirteen end-to-end criteria, each printing one verdict line.

Run alone with ``pytest tests/test_acceptance.py -v``; every test writes a
``PASS``/``FAIL`` line to the terminal even under output capture.
"""

from __future__ import annotations

import math
import os
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from nevanlab.cli import build_table_from_config, geometry_properties, main
from nevanlab.config import load_config, parse_config
from nevanlab.exhaustion import ExhaustionWeight, Mode
from nevanlab.maps import ExpMap
from nevanlab.models import euclidean
from nevanlab.nevanlinna import characteristic, is_bounded
from nevanlab.quad import QuadratureSpec
from nevanlab.target import DivisorData, SingularVolumeForm

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")

pytestmark = pytest.mark.slow


def cfg(name: str, **geometry):
    c = load_config(os.path.join(CONFIGS, name + ".cfg"))
    if geometry:
        c = replace(c, geometry={**c.geometry, **geometry})
    return c


def prop(c, name: str) -> dict:
    (p,) = geometry_properties(replace(c, geometry={**c.geometry, "properties": name}))
    return p


_TABLES: dict[str, object] = {}


def table(name: str, smt: bool = False):
    key = (name, smt)
    if key not in _TABLES:
        _TABLES[key] = build_table_from_config(cfg(name), smt=smt)
    return _TABLES[key]


def exp_smt_table():
    """Shared by the parabolic FMT, defect and gap criteria (same grid and rule)."""
    return table("smt_exp", smt=True)


# ---------------------------------------------------------------------------


def test_01_exhaustion_is_geodesic_ball_on_flat_models(report):
    devs = {}
    for name in ("geometry_c", "geometry_c2"):
        c = cfg(name)
        assert c.geometry["radii"].replace(" ", "") == "1,5,20"
        devs[name] = prop(c, "boundary_is_geodesic_sphere")["margin"]
    ok = all(d < 1e-8 for d in devs.values())
    report("01 boundary = geodesic sphere", ok, f"max |rho-r|/r: C {devs['geometry_c']:.2e}, C^2 {devs['geometry_c2']:.2e} (tol 1e-8)")
    assert ok


def test_02_fmt_closure_non_parabolic(report):
    worst, ok = 0.0, True
    for name in ("fmt_c2_projection", "fmt_c2_mobius"):
        tab = table(name)
        assert len(tab.rows) == 12 and tab.r[0] == 1.0 and tab.r[-1] == 8.0
        worst = max(worst, tab.max_fmt_residual())
        ok = ok and tab.fmt_ok()
    report("02 FMT closure C^2", ok, f"max residual {worst:.2e} (tol max(1e-3 T, 1e-6))")
    assert ok


def test_03_fmt_closure_parabolic(report):
    tabs = [exp_smt_table(), table("fmt_z2")]
    assert tabs[0].labels == ("0", "1", "inf") and tabs[1].labels == ("1",)
    for tab in tabs:
        assert len(tab.rows) == 12 and tab.r[0] == 5.0 and tab.r[-1] == 60.0
    ok = all(t.fmt_ok() for t in tabs)
    worst = max(t.max_fmt_residual() for t in tabs)
    report("03 FMT closure C (exp, z^2)", ok, f"max residual {worst:.2e} (tol max(1e-3 T, 1e-6))")
    assert ok


def test_04_measure_identities(report):
    pi_dev = prop(cfg("geometry_c2"), "harmonic_measure_mass")["margin"]
    th_dev = prop(cfg("geometry_c"), "theta_measure_mass")["margin"]
    ok = pi_dev <= 1e-6 and th_dev <= 1e-6
    report("04 measure masses", ok, f"pi_r mass dev {pi_dev:.2e}, Theta_r vs 1-int p and e^(-r/4) dev {th_dev:.2e} (tol 1e-6)")
    assert ok


def test_05_gradient_law(report):
    dev = prop(cfg("geometry_c2"), "gradient_law")["margin"]
    ok = dev < 1e-4
    report("05 gradient law C^2", ok, f"max relative deviation {dev:.2e} (tol 1e-4)")
    assert ok


SANDWICH_MODELS = {
    "C": "base = euclidean\nm = 1",
    "C^2": "base = euclidean\nm = 2",
    "C*": "base = cylinder",
    "C x T^1": "base = euclidean\nm = 1\ntorus = 1x1",
    "C* x T^1": "base = cylinder\ntorus = 1x1",
    "C x P^1": "base = euclidean\nm = 1\nprojective = 1",
}


def test_06_li_yau_sandwiches(report):
    margins = {}
    for label, man in SANDWICH_MODELS.items():
        text = f"[manifold]\n{man}\n[exhaustion]\nepsilon = {0.0 if label in ('C', 'C^2') else 0.1}\n[geometry]\nsamples = 10000\n"
        margins[label] = prop(parse_config(text), "heat_kernel_sandwich")
    green = prop(cfg("geometry_c2"), "green_sandwich")
    ok = all(p["pass"] for p in margins.values()) and green["pass"] and "A = 0.5, B = 0.5" in green["detail"]
    worst = min(p["margin"] for p in margins.values())
    report("06 Li-Yau sandwiches", ok, f"heat: min log-margin {worst:.2e} over {len(margins)} models; Green C^2 rel margin {green['margin']:.2e}")
    assert ok


def test_07_heat_weight_below_disk_green(report):
    p = prop(cfg("geometry_c"), "heat_weight_below_disk_green")
    report("07 h_r <= g_r on C", p["pass"], f"min margin {p['margin']:.2e} over 1000 samples (tol -1e-10)")
    assert p["pass"]


def test_08_parabolic_boundary_between_r_and_beta_r(report):
    p = prop(cfg("geometry_cylinder_torus"), "boundary_between_r_and_beta_r")
    report("08 C* x T^1 boundary in [r, beta r]", p["pass"], p["detail"])
    assert p["pass"]


def test_09_carlson_griffiths_form(report):
    svf = SingularVolumeForm(DivisorData.points([0, 1, "inf"]))
    min_ev, c = svf.cone_check()
    seq = svf.ric_integral_sequence(4)
    change = abs(seq[-1] - seq[-2]) / abs(seq[-1])
    ok = min_ev >= -1e-6 and c > 0 and change < 1e-3
    report("09 -Ric Psi", ok, f"min eigenvalue {min_ev:.3e}, c = {c:.3e}, integral {seq[-1]:.8f} (last change {change:.1e})")
    assert ok


def test_10_defect_relation_for_exp(report):
    d = exp_smt_table().defects()
    total = sum(e.tail for e in d.values())
    ok = abs(d["0"].tail - 1) < 1e-2 and abs(d["inf"].tail - 1) < 1e-2 and d["1"].tail <= 0.1 and 1.9 <= total <= 2.1
    report(
        "10 defects of exp",
        ok,
        f"delta(0) = {d['0'].tail:.4f}, delta(1) = {d['1'].tail:.4f}, delta(inf) = {d['inf'].tail:.4f}, sum = {total:.4f}",
    )
    assert ok


def test_11_smt_gap_bounded(report):
    suites = {
        "exp": exp_smt_table(),
        "z^2": table("smt_z2", smt=True),
        "C^2 z1": table("smt_c2_projection", smt=True),
        "C^2 mobius": table("smt_c2_mobius", smt=True),
    }
    verdict = {k: is_bounded([row.ratio for row in t.rows]) for k, t in suites.items()}
    assert all(len(t.labels) == 3 for t in suites.values())
    ok = all(verdict.values())
    report("11 SMT gap bounded", ok, ", ".join(f"{k}: {'bounded' if v else 'increasing'}" for k, v in verdict.items()))
    assert ok


def _ahlfors_shimizu_exp(r: float) -> float:
    """(1/π)∫₀^r A(t) dt/t with A(t) = ∫_{|z|<t} |f'|²/(1+|f|²)² dx dy; equals r/π asymptotically."""
    dens = lambda x: 0.25 / math.cosh(x) ** 2  # |f'|²/(1+|f|²)² for f = exp, depends on Re z only

    def area(t):
        v, _ = integrate.quad(lambda x: 2 * math.sqrt(max(t * t - x * x, 0.0)) * dens(x), -t, t, epsabs=1e-13, limit=200)
        return v

    v, _ = integrate.quad(lambda t: area(t) / t, 0.0, r, epsabs=1e-12, limit=200)
    return v / math.pi


def test_12_dirichlet_characteristic_matches_ahlfors_shimizu(report):
    M, f = euclidean(1), ExpMap(euclidean(1))
    spec = QuadratureSpec(rtol=1e-6)
    worst = 0.0
    for r in np.linspace(10.0, 60.0, 6):
        T = characteristic(f, ExhaustionWeight(M, Mode.DIRICHLET, float(r)), spec).value
        worst = max(worst, abs(T / _ahlfors_shimizu_exp(float(r)) - 1.0))
    ok = worst < 1e-2
    report("12 Dirichlet T vs Ahlfors-Shimizu", ok, f"max relative deviation {worst:.2e} on r in [10, 60] (tol 1e-2)")
    assert ok


def test_13_determinism(report, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["table", "--config", os.path.join(CONFIGS, "determinism_exp.cfg"), "--out", str(out), "--seed", "7"]) == 0
        outs.append((out / "table.csv").read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    report("13 determinism", ok, f"table.csv {len(outs[0])} bytes, identical = {outs[0] == outs[1]}")
    assert ok
